//! Run reports emitted by the command-line tool.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// `findings` and `certificates` depend only on the inputs and the seed;
/// `wall_time_ms` is the one field that varies between runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    /// Input name to SHA-256 of its bytes (files) or canonical text (specs).
    pub inputs: BTreeMap<String, String>,
    pub passed: bool,
    pub summary: Vec<String>,
    pub findings: Value,
    pub certificates: Value,
    pub wall_time_ms: u64,
    pub seed: Option<u64>,
}

impl RunReport {
    pub fn new(command: &str) -> Self {
        RunReport {
            command: command.to_string(),
            inputs: BTreeMap::new(),
            passed: true,
            summary: Vec::new(),
            findings: Value::Null,
            certificates: Value::Null,
            wall_time_ms: 0,
            seed: None,
        }
    }

    pub fn input(&mut self, name: &str, bytes: &[u8]) {
        self.inputs.insert(name.to_string(), sha256_hex(bytes));
    }

    pub fn line(&mut self, text: impl Into<String>) {
        self.summary.push(text.into());
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for line in &self.summary {
            out.push_str(line);
            out.push('\n');
        }
        out
    }
}
