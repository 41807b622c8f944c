//! Shared verification-report schema.
//!
//! Every verifier in the crate boils down to inequality checks
//! `measured <= bound`; [`Check`] records one such comparison and the
//! CLI-level [`Report`] aggregates them with provenance for reproducibility.

use serde::{Deserialize, Serialize};

/// One verified inequality.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub id: String,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub inputs: serde_json::Value,
    pub measured: f64,
    pub bound: f64,
    pub pass: bool,
    /// `bound - measured`; negative exactly when the check fails.
    pub slack: f64,
}

impl Check {
    pub fn new(id: impl Into<String>, measured: f64, bound: f64) -> Check {
        Check {
            id: id.into(),
            inputs: serde_json::Value::Null,
            measured,
            bound,
            pass: measured <= bound,
            slack: bound - measured,
        }
    }

    pub fn with_inputs(mut self, inputs: serde_json::Value) -> Check {
        self.inputs = inputs;
        self
    }

    /// Allow a small absolute cushion on the comparison.
    pub fn with_tolerance(mut self, tol: f64) -> Check {
        self.pass = self.measured <= self.bound + tol;
        self
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    /// max of measured/bound over cases with a positive bound.
    pub max_ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub sieve_limit: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    pub suite: String,
    pub cases: Vec<Check>,
    pub summary: Summary,
    pub provenance: Provenance,
}

impl Report {
    pub fn new(suite: impl Into<String>, cases: Vec<Check>, provenance: Provenance) -> Report {
        let total = cases.len();
        let passed = cases.iter().filter(|c| c.pass).count();
        let max_ratio = cases
            .iter()
            .filter(|c| c.bound > 0.0)
            .map(|c| c.measured / c.bound)
            .fold(f64::NEG_INFINITY, f64::max);
        Report {
            schema: 1,
            suite: suite.into(),
            cases,
            summary: Summary { total, passed, max_ratio },
            provenance,
        }
    }

    pub fn all_passed(&self) -> bool {
        self.summary.passed == self.summary.total
    }
}
