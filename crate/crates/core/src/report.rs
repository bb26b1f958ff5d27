//! The stable report schema shared by the CLI and the test suites.

use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Elementary,
    NonElementary,
    /// Mechanical checking disagrees with a printed claim; the residual or
    /// witness carries the computed truth.
    Discrepancy,
}

impl Verdict {
    /// Exit-code contract: 0 = verdict delivered (including non-elementary),
    /// 1 = a verification failed or a printed claim disagreed.
    pub fn exit_code(&self) -> i32 {
        match self {
            Verdict::Pass | Verdict::Elementary | Verdict::NonElementary => 0,
            Verdict::Fail | Verdict::Discrepancy => 1,
        }
    }
}

#[derive(Serialize)]
pub struct Report {
    pub command: String,
    pub inputs: BTreeMap<String, String>,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<serde_json::Value>,
    pub runtime_ms: u128,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Report {
            command: command.to_string(),
            inputs: BTreeMap::new(),
            verdict: Verdict::Pass,
            residual: None,
            witness: None,
            runtime_ms: 0,
        }
    }

    pub fn input(mut self, key: &str, value: impl ToString) -> Self {
        self.inputs.insert(key.to_string(), value.to_string());
        self
    }

    pub fn verdict(mut self, v: Verdict) -> Self {
        self.verdict = v;
        self
    }

    pub fn residual(mut self, r: impl ToString) -> Self {
        self.residual = Some(r.to_string());
        self
    }

    pub fn witness(mut self, w: serde_json::Value) -> Self {
        self.witness = Some(w);
        self
    }

    /// Deterministic serialization: map keys are sorted, field order fixed;
    /// only `runtime_ms` varies between identical invocations.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(Verdict::Pass.exit_code(), 0);
        assert_eq!(Verdict::NonElementary.exit_code(), 0);
        assert_eq!(Verdict::Elementary.exit_code(), 0);
        assert_eq!(Verdict::Fail.exit_code(), 1);
        assert_eq!(Verdict::Discrepancy.exit_code(), 1);
    }

    #[test]
    fn serialization_is_deterministic_modulo_runtime() {
        let mk = || {
            Report::new("check integral")
                .input("system", "sei")
                .input("F", "S+E+I")
                .verdict(Verdict::Pass)
                .residual("0")
        };
        let a = mk().to_json();
        let b = mk().to_json();
        assert_eq!(a, b);
        assert!(a.contains("\"verdict\": \"pass\""));
    }
}
