//! Report envelope shared by every command.

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const TOOL: &str = "aogb";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct Envelope {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    /// SHA-256 of the canonical JSON of `config`.
    pub config_digest: String,
    pub seed: u64,
    pub budgets: Value,
    pub config: Value,
    pub result: Value,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Envelope {
    pub fn new(command: &str, config: Value, seed: u64, budgets: Value, result: Value) -> Self {
        // serde_json maps are ordered, so this rendering is canonical
        let digest = sha256_hex(config.to_string().as_bytes());
        Envelope { tool: TOOL, version: VERSION, command: command.into(), config_digest: digest, seed, budgets, config, result }
    }

    pub fn to_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("envelope serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn digest_is_stable() {
        let a = Envelope::new("x", json!({"b": 1, "a": 2}), 0, json!({}), json!(null));
        let b = Envelope::new("x", json!({"a": 2, "b": 1}), 0, json!({}), json!(null));
        assert_eq!(a.config_digest, b.config_digest);
        assert_eq!(a.to_pretty(), b.to_pretty());
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
