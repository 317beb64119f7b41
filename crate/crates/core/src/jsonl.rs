//! Strict JSONL record reading with per-field schema errors, and atomic
//! write-once file output.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

/// A record-level schema violation.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}{}: {message}", field.as_ref().map(|f| format!(", field `{f}`")).unwrap_or_default())]
pub struct SchemaError {
    pub line: usize,
    pub field: Option<String>,
    pub message: String,
}

impl SchemaError {
    pub fn new(line: usize, field: Option<&str>, message: impl Into<String>) -> Self {
        Self {
            line,
            field: field.map(str::to_string),
            message: message.into(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FileError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Schema {
        path: PathBuf,
        #[source]
        source: SchemaError,
    },
}

impl FileError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        FileError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// One JSON object from one line, with typed field accessors.
#[derive(Debug)]
pub struct Record {
    pub line: usize,
    fields: Map<String, Value>,
}

impl Record {
    pub fn parse(line_no: usize, text: &str) -> Result<Self, SchemaError> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| SchemaError::new(line_no, None, format!("invalid JSON: {e}")))?;
        match value {
            Value::Object(fields) => Ok(Self {
                line: line_no,
                fields,
            }),
            _ => Err(SchemaError::new(line_no, None, "record is not a JSON object")),
        }
    }

    pub fn has(&self, key: &str) -> bool {
        self.fields.contains_key(key)
    }

    pub fn deny_unknown(&self, allowed: &[&str]) -> Result<(), SchemaError> {
        match self.fields.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(SchemaError::new(self.line, Some(k), "unexpected field")),
            None => Ok(()),
        }
    }

    fn err(&self, key: &str, msg: impl Into<String>) -> SchemaError {
        SchemaError::new(self.line, Some(key), msg)
    }

    pub fn opt_str(&self, key: &str) -> Result<Option<String>, SchemaError> {
        match self.fields.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(self.err(key, "expected a string")),
        }
    }

    pub fn str(&self, key: &str) -> Result<String, SchemaError> {
        self.opt_str(key)?
            .ok_or_else(|| self.err(key, "missing required field"))
    }

    pub fn nonempty_str(&self, key: &str) -> Result<String, SchemaError> {
        let s = self.str(key)?;
        if s.is_empty() {
            return Err(self.err(key, "must be nonempty"));
        }
        Ok(s)
    }

    pub fn u64(&self, key: &str) -> Result<u64, SchemaError> {
        match self.fields.get(key) {
            None => Err(self.err(key, "missing required field")),
            Some(v) => v
                .as_u64()
                .ok_or_else(|| self.err(key, "expected a non-negative integer")),
        }
    }

    pub fn opt_bool(&self, key: &str) -> Result<Option<bool>, SchemaError> {
        match self.fields.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::Bool(b)) => Ok(Some(*b)),
            Some(_) => Err(self.err(key, "expected a boolean")),
        }
    }

    pub fn value(&self, key: &str) -> Option<&Value> {
        self.fields.get(key)
    }

    pub fn field_error(&self, key: &str, msg: impl Into<String>) -> SchemaError {
        self.err(key, msg)
    }
}

/// Splits JSONL text into records. Every line must be a JSON object; blank
/// lines are schema errors. Line numbers are 1-based.
pub fn parse_records(text: &str) -> Result<Vec<Record>, SchemaError> {
    text.lines()
        .enumerate()
        .map(|(i, line)| {
            if line.trim().is_empty() {
                Err(SchemaError::new(i + 1, None, "blank line"))
            } else {
                Record::parse(i + 1, line)
            }
        })
        .collect()
}

pub fn read_records(path: &Path) -> Result<Vec<Record>, FileError> {
    let text = fs::read_to_string(path).map_err(|e| FileError::io(path, e))?;
    parse_records(&text).map_err(|source| FileError::Schema {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `bytes` to `path` via a temporary sibling and rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

/// Writes `bytes` unless `path` already holds different content. Identical
/// content is accepted so that re-running a stage is a no-op.
pub fn write_once(path: &Path, bytes: &[u8]) -> io::Result<()> {
    match fs::read(path) {
        Ok(existing) if existing == bytes => Ok(()),
        Ok(_) => Err(io::Error::new(
            io::ErrorKind::AlreadyExists,
            "refusing to overwrite an immutable artifact with different content",
        )),
        Err(e) if e.kind() == io::ErrorKind::NotFound => write_atomic(path, bytes),
        Err(e) => Err(e),
    }
}

/// Serializes each item as one compact JSON line.
pub fn to_jsonl<T: serde::Serialize>(items: &[T]) -> Vec<u8> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, item).expect("in-memory values always serialize");
        out.push(b'\n');
    }
    out
}
