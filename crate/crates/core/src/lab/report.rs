//! Structured verdicts for the verification procedures.

use serde::{Deserialize, Serialize};

/// A recorded failure: the initial data, the time, and the measured quantity
/// that crossed its threshold.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Witness {
    pub sample: usize,
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub time: Option<f64>,
    pub measured: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub xi1: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub xi2: Option<Vec<f64>>,
}

/// Outcome of one verification procedure. The verdict is false exactly when
/// at least one witness was recorded.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub test: String,
    pub verdict: bool,
    pub n_samples: usize,
    /// Largest value of the monitored violation measure, including runs where
    /// it stayed below threshold.
    pub max_violation: f64,
    pub witnesses: Vec<Witness>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

impl VerificationReport {
    pub fn new(test: &str) -> Self {
        Self {
            test: test.to_string(),
            verdict: true,
            n_samples: 0,
            max_violation: 0.0,
            witnesses: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn observe(&mut self, violation: f64) {
        if violation > self.max_violation {
            self.max_violation = violation;
        }
    }

    pub fn witness(&mut self, w: Witness) {
        self.observe(w.measured);
        self.verdict = false;
        self.witnesses.push(w);
    }

    pub fn note(&mut self, msg: impl Into<String>) {
        self.notes.push(msg.into());
    }
}

/// Certified projected equilibrium: `ξ ⊥ v` with `(I − vv')f(ξ)` below the
/// certification tolerance, the drift rate `r = v'f(ξ)`, and, for extent
/// systems, the species-space image `ζ = σ + Γξ`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquilibriumCertificate {
    pub xi: Vec<f64>,
    pub r: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub zeta: Option<Vec<f64>>,
    pub projected_residual: f64,
    pub stall_time: f64,
    pub newton_iterations: usize,
    /// Largest pairwise distance among multistart certificates, filled in by
    /// the uniqueness check.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub agreement_diameter: Option<f64>,
}
