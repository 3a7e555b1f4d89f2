//! Deterministic run reports: every batch entry point emits one JSON
//! document embedding the fully resolved configuration, the library
//! version, and a list of named claims with measured values.  Identical
//! `(argv, seed)` inputs produce byte-identical documents (configuration
//! maps are ordered, no timestamps, no paths outside the caller's control).

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Resolved invocation parameters.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    /// Flat, ordered key -> value table of every resolved parameter.
    pub params: BTreeMap<String, String>,
    pub seed: u64,
    pub threads: usize,
}

/// One verified (or refuted) claim.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Claim {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theory_bound: Option<f64>,
    pub measured: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub config: RunConfig,
    pub version: String,
    pub claims: Vec<Claim>,
    /// Side outputs written by the run (CSV dumps etc.).
    pub artifacts: Vec<String>,
    /// Free-form structured payload (points, certificates, ...).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub payload: Option<serde_json::Value>,
}

impl Report {
    pub fn new(config: RunConfig) -> Self {
        Report {
            config,
            version: env!("CARGO_PKG_VERSION").to_string(),
            claims: Vec::new(),
            artifacts: Vec::new(),
            payload: None,
        }
    }

    pub fn claim(&mut self, name: &str, theory_bound: Option<f64>, measured: f64, passed: bool) {
        self.claims.push(Claim { name: name.to_string(), theory_bound, measured, passed });
    }

    pub fn all_passed(&self) -> bool {
        self.claims.iter().all(|c| c.passed)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialization is infallible");
        s.push('\n');
        s
    }
}
