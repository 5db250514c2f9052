//! Machine-readable report: one record per check, written as TOML.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub suite: String,
    pub name: String,
    /// Which identity or inequality the record exercises.
    pub anchor: String,
    /// SHA-256 of the canonical description of the inputs.
    pub inputs_digest: String,
    pub passed: bool,
    pub seed: u64,
    /// Sample/grid budget used, enough to reproduce the record.
    pub budget: String,
    pub wall_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default)]
    pub values: BTreeMap<String, f64>,
    #[serde(default)]
    pub errors: BTreeMap<String, f64>,
    /// `(tau, value, abs_error)` rows of a profile, if any.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub profile: Vec<[f64; 3]>,
}

impl Record {
    pub fn new(suite: &str, name: impl Into<String>, anchor: &str, inputs: &str, seed: u64, budget: String) -> Self {
        Record {
            suite: suite.to_string(),
            name: name.into(),
            anchor: anchor.to_string(),
            inputs_digest: digest(inputs.as_bytes()),
            passed: false,
            seed,
            budget,
            wall_ms: 0,
            error: None,
            values: BTreeMap::new(),
            errors: BTreeMap::new(),
            profile: Vec::new(),
        }
    }

    pub fn value(&mut self, key: &str, v: f64) -> &mut Self {
        self.values.insert(key.to_string(), v);
        self
    }

    pub fn error_bound(&mut self, key: &str, v: f64) -> &mut Self {
        self.errors.insert(key.to_string(), v);
        self
    }

    pub fn fail(&mut self, err: impl ToString) -> &mut Self {
        self.passed = false;
        self.error = Some(err.to_string());
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub passed: bool,
    pub config_digest: String,
    pub seed: u64,
    pub checks: usize,
    pub failures: usize,
    pub records: Vec<Record>,
}

impl ReportDocument {
    pub fn new(config_digest: String, seed: u64, records: Vec<Record>) -> Self {
        let failures = records.iter().filter(|r| !r.passed).count();
        ReportDocument { passed: failures == 0, config_digest, seed, checks: records.len(), failures, records }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("report is serializable")
    }

    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    /// Copy with timing fields zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> Self {
        let mut out = self.clone();
        out.records.iter_mut().for_each(|r| r.wall_ms = 0);
        out
    }

    /// `record,tau,value,abs_error` lines for every profile.
    pub fn profiles_csv(&self) -> String {
        let mut out = String::from("record,tau,value,abs_error\n");
        for r in &self.records {
            for [t, v, e] in &r.profile {
                writeln!(out, "{},{t},{v},{e}", r.name).expect("write to string");
            }
        }
        out
    }
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut r = Record::new("gci", "gci/m", "anchor", "inputs", 7, "grid=21".into());
        r.value("gap", 0.125).error_bound("gap", 1e-9);
        r.passed = true;
        r.profile = vec![[0.0, 0.5, 1e-9], [1.0, 0.6, 1e-9]];
        let doc = ReportDocument::new("abc".into(), 7, vec![r]);
        let text = doc.to_toml();
        assert_eq!(ReportDocument::from_toml(&text).unwrap(), doc);
        assert!(doc.passed);
        assert!(doc.profiles_csv().contains("gci/m,1,0.6,"));
    }

    #[test]
    fn digests_differ() {
        assert_ne!(digest(b"a"), digest(b"b"));
        assert_eq!(digest(b"").len(), 64);
    }
}
