use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::backend::{BackendError, BackendHandle, GenerationRequest};
use crate::jsonl::{self, FileError};
use crate::pool::map_bounded;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    Exact,
    Numeric,
}

impl FromStr for MatchMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(MatchMode::Exact),
            "numeric" => Ok(MatchMode::Numeric),
            other => Err(format!("unknown match mode `{other}` (exact|numeric)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalTask {
    pub id: String,
    pub prompt: String,
    pub expected_answer: String,
    pub match_mode: MatchMode,
}

impl EvalTask {
    pub fn is_correct(&self, output: &str) -> bool {
        answer_matches(&extract_answer(output), &self.expected_answer, self.match_mode)
    }
}

const TASK_FIELDS: [&str; 4] = ["id", "prompt", "expected_answer", "match"];

pub fn load_tasks(path: &Path) -> Result<Vec<EvalTask>, FileError> {
    let schema = |source| FileError::Schema {
        path: path.to_path_buf(),
        source,
    };
    jsonl::read_records(path)?
        .iter()
        .map(|rec| {
            rec.deny_unknown(&TASK_FIELDS).map_err(schema)?;
            let mode = rec.nonempty_str("match").map_err(schema)?;
            Ok(EvalTask {
                id: rec.nonempty_str("id").map_err(schema)?,
                prompt: rec.nonempty_str("prompt").map_err(schema)?,
                expected_answer: rec.nonempty_str("expected_answer").map_err(schema)?,
                match_mode: mode.parse().map_err(|m: String| schema(rec.field_error("match", m)))?,
            })
        })
        .collect()
}

/// The answer part of a model output: the text after the thoughts block
/// when there is one, else the whole output, with whitespace collapsed.
pub fn extract_answer(output: &str) -> String {
    let tail = match (output.find("<thoughts>"), output.rfind("</thoughts>")) {
        (Some(open), Some(close)) if close > open => &output[close + "</thoughts>".len()..],
        _ => output,
    };
    normalize(tail)
}

fn normalize(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn last_boxed(s: &str) -> Option<&str> {
    let start = s.rfind("\\boxed{")? + "\\boxed{".len();
    let mut depth = 1;
    for (i, c) in s[start..].char_indices() {
        match c {
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&s[start..start + i]);
                }
            }
            _ => {}
        }
    }
    None
}

fn number_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"-?\d+(?:\.\d+)?").expect("valid regex"))
}

/// The final boxed value if any, else the last numeric token. Thousands
/// separators are ignored.
pub fn extract_number(text: &str) -> Option<f64> {
    let scope = last_boxed(text).unwrap_or(text).replace(',', "");
    number_re().find_iter(&scope).last()?.as_str().parse().ok()
}

pub fn answer_matches(extracted: &str, expected: &str, mode: MatchMode) -> bool {
    match mode {
        MatchMode::Exact => extracted == normalize(expected),
        MatchMode::Numeric => match (extract_number(extracted), extract_number(expected)) {
            (Some(a), Some(b)) => (a - b).abs() <= 1e-9 * b.abs().max(1.0),
            _ => false,
        },
    }
}

/// Best-of-N accuracy (percent) at increasing sample counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CurveJson", into = "CurveJson")]
pub struct PassAtNCurve {
    n_values: Vec<u32>,
    accuracy: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CurveJson {
    n: Vec<u32>,
    accuracy: Vec<f64>,
}

impl TryFrom<CurveJson> for PassAtNCurve {
    type Error = CurveError;

    fn try_from(c: CurveJson) -> Result<Self, CurveError> {
        PassAtNCurve::new(c.n, c.accuracy)
    }
}

impl From<PassAtNCurve> for CurveJson {
    fn from(c: PassAtNCurve) -> Self {
        CurveJson {
            n: c.n_values,
            accuracy: c.accuracy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CurveError {
    #[error("curve needs at least one point")]
    Empty,
    #[error("{n} n values but {accuracy} accuracies")]
    LengthMismatch { n: usize, accuracy: usize },
    #[error("n values must be >= 1 and strictly increasing")]
    BadN,
    #[error("accuracy {0} outside [0, 100]")]
    OutOfRange(f64),
    #[error("accuracy must not decrease as n grows")]
    NotMonotone,
}

impl fmt::Display for PassAtNCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, a) in self.n_values.iter().zip(&self.accuracy) {
            writeln!(f, "{n:>4}  {a:>7.2}")?;
        }
        Ok(())
    }
}

impl PassAtNCurve {
    pub fn new(n_values: Vec<u32>, accuracy: Vec<f64>) -> Result<Self, CurveError> {
        if n_values.is_empty() {
            return Err(CurveError::Empty);
        }
        if n_values.len() != accuracy.len() {
            return Err(CurveError::LengthMismatch {
                n: n_values.len(),
                accuracy: accuracy.len(),
            });
        }
        validate_n_values(&n_values)?;
        if let Some(&a) = accuracy.iter().find(|a| !(0.0..=100.0).contains(*a)) {
            return Err(CurveError::OutOfRange(a));
        }
        if accuracy.windows(2).any(|w| w[1] < w[0]) {
            return Err(CurveError::NotMonotone);
        }
        Ok(Self { n_values, accuracy })
    }

    pub fn n_values(&self) -> &[u32] {
        &self.n_values
    }

    pub fn accuracy(&self) -> &[f64] {
        &self.accuracy
    }

    /// Accuracy for each N given, per task, the index of the first correct
    /// sample.
    pub fn from_first_correct(n_values: &[u32], first_correct: &[Option<usize>]) -> Result<Self, CurveError> {
        validate_n_values(n_values)?;
        let total = first_correct.len();
        let accuracy = n_values
            .iter()
            .map(|&n| {
                if total == 0 {
                    return 0.0;
                }
                let solved = first_correct.iter().filter(|f| f.is_some_and(|i| i < n as usize)).count();
                100.0 * solved as f64 / total as f64
            })
            .collect();
        Self::new(n_values.to_vec(), accuracy)
    }
}

fn validate_n_values(n_values: &[u32]) -> Result<(), CurveError> {
    if n_values.first() == Some(&0) || n_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CurveError::BadN);
    }
    Ok(())
}

pub fn load_curve(path: &Path) -> Result<PassAtNCurve, FileError> {
    let bytes = std::fs::read(path).map_err(|e| FileError::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| FileError::Schema {
        path: path.to_path_buf(),
        source: jsonl::SchemaError::new(e.line(), None, e.to_string()),
    })
}

pub fn write_curve(curve: &PassAtNCurve, path: &Path) -> std::io::Result<()> {
    let mut bytes = serde_json::to_vec(curve).expect("curve serializes");
    bytes.push(b'\n');
    jsonl::write_atomic(path, &bytes)
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("{0}")]
    Curve(#[from] CurveError),
    #[error("task `{task}`: {source}")]
    Backend {
        task: String,
        #[source]
        source: BackendError,
    },
}

/// Draws `max(n_values)` samples per task once and scores every N on the
/// same prefix of that pool, so accuracy can only grow with N.
///
/// `template` supplies the system prompt, sampling parameters and seed;
/// each task's prompt becomes the user prompt.
pub fn pass_at_n(
    tasks: &[EvalTask],
    handle: &BackendHandle,
    n_values: &[u32],
    template: &GenerationRequest,
) -> Result<PassAtNCurve, EvalError> {
    validate_n_values(n_values)?;
    let max_n = *n_values.last().ok_or(CurveError::Empty)?;
    let first_correct: Vec<Option<usize>> = map_bounded(tasks, handle.concurrency_limit(), |_, task| {
        let mut req = template.clone().with_samples(max_n);
        req.user_prompt = task.prompt.clone();
        let outputs = handle.generate(&req).map_err(|source| EvalError::Backend {
            task: task.id.clone(),
            source,
        })?;
        Ok(outputs.iter().position(|c| task.is_correct(&c.text)))
    })
    .into_iter()
    .collect::<Result<_, EvalError>>()?;
    Ok(PassAtNCurve::from_first_correct(n_values, &first_correct)?)
}
