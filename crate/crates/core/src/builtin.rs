//! Ready-made example systems shared by the test suites and the CLI.

use crate::crn::{NetworkBuilder, ReactionNetwork};
use crate::field::{FnField, LinearField};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Two-enzyme activation/deactivation cycle in the text format. First
/// appearance numbers the species (P, E, C, Q, F, D).
pub const FUTILE_CYCLE_SOURCE: &str = "\
# two-enzyme cycle: activation by E via complex C, deactivation by F via D
P + E <-> C ; kf=1, kr=1
C -> E + Q ; k=1
Q + F <-> D ; kf=1, kr=1
D -> F + P ; k=1
";

/// Two-enzyme cycle with unit rate constants and the reference species order
/// (P, Q, E, F, C, D).
pub fn futile_cycle() -> ReactionNetwork {
    futile_cycle_with_rates(1.0, 1.0, 1.0, 1.0, 1.0, 1.0)
}

/// Two-enzyme cycle with explicit rate constants, species ordered
/// (P, Q, E, F, C, D):
///
/// ```text
/// P + E <-> C   (k1 forward, k_m1 reverse)
/// C -> E + Q    (k2)
/// Q + F <-> D   (k3 forward, k_m3 reverse)
/// D -> F + P    (k4)
/// ```
pub fn futile_cycle_with_rates(
    k1: f64,
    k_m1: f64,
    k2: f64,
    k3: f64,
    k_m3: f64,
    k4: f64,
) -> ReactionNetwork {
    NetworkBuilder::new()
        .species(&["P", "Q", "E", "F", "C", "D"])
        .and_then(|b| b.reaction(&[("P", 1), ("E", 1)], &[("C", 1)], k1, k_m1))
        .and_then(|b| b.irreversible(&[("C", 1)], &[("E", 1), ("Q", 1)], k2))
        .and_then(|b| b.reaction(&[("Q", 1), ("F", 1)], &[("D", 1)], k3, k_m3))
        .and_then(|b| b.irreversible(&[("D", 1)], &[("F", 1), ("P", 1)], k4))
        .and_then(|b| b.build())
        .expect("builtin network is well formed")
}

/// Base point used throughout the examples: (P,Q,E,F,C,D) = (1,0,1,1,0,0).
/// Both enzyme totals are positive, so the extent system is strongly monotone
/// from this class.
pub fn canonical_sigma() -> DVector<f64> {
    DVector::from_vec(vec![1.0, 0.0, 1.0, 1.0, 0.0, 0.0])
}

/// Single irreversible conversion A -> B with unit rate.
pub fn a_to_b() -> ReactionNetwork {
    NetworkBuilder::new()
        .irreversible(&[("A", 1)], &[("B", 1)], 1.0)
        .and_then(|b| b.build())
        .expect("builtin network is well formed")
}

/// Planar rotation: preserves no orthant order, the standard counterexample
/// for order preservation.
pub fn rotation_field() -> LinearField {
    LinearField::new(DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]))
}

/// Planar field whose projection along e2 is the bistable scalar system
/// ẋ = x − x³ (stable equilibria at ±1): translation-invariant along e2 but
/// with two distinct projected equilibria.
pub fn bistable_field() -> FnField {
    FnField::new(2, |x: &DVector<f64>| {
        DVector::from_vec(vec![x[0] - x[0].powi(3), 0.0])
    })
    .with_jacobian(|x: &DVector<f64>| {
        DMatrix::from_row_slice(2, 2, &[1.0 - 3.0 * x[0] * x[0], 0.0, 0.0, 0.0])
    })
}

/// Frozen reference equilibrium data for the canonical cycle instance,
/// produced by the long-horizon projected simulation plus Newton polish and
/// stored with the generating configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GoldenCertificate {
    pub version: u32,
    pub generator: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub instance: serde_json::Value,
    pub xi: Vec<f64>,
    pub r: f64,
    pub zeta: Vec<f64>,
}

pub const GOLDEN_FUTILE_CYCLE: &str = include_str!("../golden/v1/futile_cycle.json");

pub fn golden_futile_cycle() -> GoldenCertificate {
    serde_json::from_str(GOLDEN_FUTILE_CYCLE).expect("golden file is valid JSON")
}
