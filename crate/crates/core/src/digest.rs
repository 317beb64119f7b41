//! Content digests used to identify datasets, catalyst sets, manifests and
//! backend requests.

use sha2::{Digest, Sha256};

/// Name of the hash algorithm, carried as a prefix of every digest string.
pub const DIGEST_ALGORITHM: &str = "sha256";

/// `sha256:<hex>` of `bytes`.
pub fn digest_bytes(bytes: &[u8]) -> String {
    format!("{DIGEST_ALGORITHM}:{}", hex::encode(Sha256::digest(bytes)))
}

/// Digest of the compact JSON encoding of `value`.
pub fn digest_json<T: serde::Serialize + ?Sized>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("in-memory values always serialize");
    digest_bytes(&bytes)
}

/// Derives a 64-bit seed from a base seed and a path of indices.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(base.to_le_bytes());
    for p in path {
        hasher.update(p.to_le_bytes());
    }
    let out = hasher.finalize();
    u64::from_le_bytes(out[..8].try_into().expect("sha256 output is 32 bytes"))
}
