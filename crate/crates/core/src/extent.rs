//! Extent-coordinate systems and the hypothesis checks behind strong
//! monotonicity.
//!
//! For a network with stoichiometry `Γ` and rates `R`, the extent system at a
//! base point `σ ≥ 0` is `ẋ = R(σ + Γx)` on `X_σ = {x : σ + Γx ≥ 0}`, with
//! Jacobian `DR(σ + Γx) · Γ`. Its key structural property is invariance under
//! translation by any kernel vector of `Γ`: `Γ(x + λv) = Γx`, so both the
//! field and the domain are unchanged.
//!
//! The checks in this module certify, by sampling, the three hypotheses used
//! by the convergence machinery: translation invariance along `v`,
//! cooperativity (nonnegative off-diagonal Jacobian entries), and
//! irreducibility of the Jacobian sign digraph along trajectories.

use crate::crn::ReactionNetwork;
use crate::field::{finite_difference_jacobian, sample_domain_point, VectorField};
use crate::graph::is_strongly_connected;
use crate::linalg::positive_kernel_unit_vector;
use crate::ode::{integrate, IntegratorConfig, Trajectory};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Slack allowed on the species nonnegativity constraints when testing domain
/// membership of integrator output.
pub const DOMAIN_SLACK: f64 = 1e-9;

/// Off-diagonal Jacobian entries above this magnitude count as edges of the
/// sign digraph; entries below its negation violate cooperativity.
pub const SIGN_EPS: f64 = 1e-10;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ExtentError {
    #[error("sigma length {got} does not match species count {expected}")]
    SigmaLength { expected: usize, got: usize },
    #[error("sigma must be nonnegative: component {index} is {value}")]
    SigmaNegative { index: usize, value: f64 },
    #[error("integration failed: {0}")]
    Integration(String),
}

/// The system `ẋ = R(σ + Γx)` on `X_σ`.
#[derive(Debug, Clone)]
pub struct ExtentSystem {
    network: ReactionNetwork,
    sigma: DVector<f64>,
    gamma: DMatrix<f64>,
}

impl ExtentSystem {
    pub fn new(network: ReactionNetwork, sigma: DVector<f64>) -> Result<Self, ExtentError> {
        if sigma.len() != network.n_species() {
            return Err(ExtentError::SigmaLength {
                expected: network.n_species(),
                got: sigma.len(),
            });
        }
        for (i, &v) in sigma.iter().enumerate() {
            if v < 0.0 {
                return Err(ExtentError::SigmaNegative { index: i, value: v });
            }
        }
        let gamma = network.gamma_f64();
        Ok(Self { network, sigma, gamma })
    }

    pub fn network(&self) -> &ReactionNetwork {
        &self.network
    }

    pub fn sigma(&self) -> &DVector<f64> {
        &self.sigma
    }

    /// Species state `σ + Γx` reached at extent `x`.
    pub fn species_at(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.sigma + &self.gamma * x
    }

    /// Positive unit vector spanning the right kernel of `Γ`, when the kernel
    /// is one-dimensional with a positive representative.
    pub fn kernel_direction(&self) -> Option<DVector<f64>> {
        positive_kernel_unit_vector(&self.network.gamma_rational())
    }
}

impl VectorField for ExtentSystem {
    fn dim(&self) -> usize {
        self.network.n_reactions()
    }
    fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        self.network.rates_raw(&self.species_at(x))
    }
    fn jacobian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        let s = self.species_at(x);
        Some(self.network.rate_jacobian_raw(&s) * &self.gamma)
    }
    fn in_domain(&self, x: &DVector<f64>) -> bool {
        self.species_at(x).iter().all(|&v| v >= -DOMAIN_SLACK)
    }
    fn boundary_margin(&self, x: &DVector<f64>) -> Option<f64> {
        Some(self.species_at(x).fold(f64::INFINITY, f64::min))
    }
}

/// The species-space system `Ṡ = Γ R(S)` on the nonnegative orthant.
#[derive(Debug, Clone)]
pub struct SpeciesSystem {
    network: ReactionNetwork,
    gamma: DMatrix<f64>,
}

impl SpeciesSystem {
    pub fn new(network: ReactionNetwork) -> Self {
        let gamma = network.gamma_f64();
        Self { network, gamma }
    }

    pub fn network(&self) -> &ReactionNetwork {
        &self.network
    }
}

impl VectorField for SpeciesSystem {
    fn dim(&self) -> usize {
        self.network.n_species()
    }
    fn eval(&self, s: &DVector<f64>) -> DVector<f64> {
        &self.gamma * self.network.rates_raw(s)
    }
    fn jacobian(&self, s: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(&self.gamma * self.network.rate_jacobian_raw(s))
    }
    fn in_domain(&self, s: &DVector<f64>) -> bool {
        s.iter().all(|&v| v >= -DOMAIN_SLACK)
    }
    fn boundary_margin(&self, s: &DVector<f64>) -> Option<f64> {
        Some(s.fold(f64::INFINITY, f64::min))
    }
}

fn jacobian_or_fd<F: VectorField + ?Sized>(field: &F, x: &DVector<f64>) -> DMatrix<f64> {
    field
        .jacobian(x)
        .unwrap_or_else(|| finite_difference_jacobian(field, x, 1e-6))
}

/// Sampled check of translation invariance along `v`: both the directional
/// Jacobian `J(x)v` and the shift residual `f(x + λv) − f(x)` must stay below
/// `1e-8 (1 + |f(x)|)` at every sample.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TranslationInvarianceCheck {
    pub verdict: bool,
    pub max_jacobian_residual: f64,
    pub max_shift_residual: f64,
    pub samples: usize,
    /// Sample points whose translate left the domain (skipped, counted).
    pub skipped: usize,
}

pub fn check_translation_invariance<F: VectorField + ?Sized>(
    field: &F,
    v: &DVector<f64>,
    n_samples: usize,
    seed: u64,
) -> TranslationInvarianceCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vhat = v / v.norm();
    let center = DVector::zeros(field.dim());
    let mut max_jv: f64 = 0.0;
    let mut max_shift: f64 = 0.0;
    let mut verdict = true;
    let mut used = 0usize;
    let mut skipped = 0usize;
    while used < n_samples {
        let Some(x) = sample_domain_point(field, &center, 0.5, 0.0, &mut rng, 10_000) else {
            break;
        };
        let lambda: f64 = rng.gen_range(-2.0..2.0);
        let fx = field.eval(&x);
        let tol = 1e-8 * (1.0 + fx.norm());
        let jv = (jacobian_or_fd(field, &x) * &vhat).norm();
        max_jv = max_jv.max(jv);
        if jv > tol {
            verdict = false;
        }
        let shifted = &x + &vhat * lambda;
        if field.in_domain(&shifted) {
            let shift_res = (field.eval(&shifted) - &fx).norm();
            max_shift = max_shift.max(shift_res);
            if shift_res > tol {
                verdict = false;
            }
        } else {
            skipped += 1;
        }
        used += 1;
    }
    if used == 0 {
        verdict = false;
    }
    TranslationInvarianceCheck {
        verdict,
        max_jacobian_residual: max_jv,
        max_shift_residual: max_shift,
        samples: used,
        skipped,
    }
}

/// Sampled cooperativity check: every off-diagonal Jacobian entry at interior
/// domain points must be `>= -SIGN_EPS`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CooperativityCheck {
    pub verdict: bool,
    pub worst_entry: f64,
    pub samples: usize,
    pub witness: Option<CooperativityWitness>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CooperativityWitness {
    pub point: Vec<f64>,
    pub row: usize,
    pub col: usize,
    pub entry: f64,
}

pub fn check_cooperativity<F: VectorField + ?Sized>(
    field: &F,
    n_samples: usize,
    seed: u64,
) -> CooperativityCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let center = DVector::zeros(field.dim());
    let mut worst = f64::INFINITY;
    let mut witness = None;
    let mut used = 0usize;
    while used < n_samples {
        let Some(x) = sample_domain_point(field, &center, 0.5, 1e-3, &mut rng, 10_000) else {
            break;
        };
        let j = jacobian_or_fd(field, &x);
        for r in 0..j.nrows() {
            for c in 0..j.ncols() {
                if r == c {
                    continue;
                }
                if j[(r, c)] < worst {
                    worst = j[(r, c)];
                    if worst < -SIGN_EPS {
                        witness = Some(CooperativityWitness {
                            point: x.iter().copied().collect(),
                            row: r,
                            col: c,
                            entry: worst,
                        });
                    }
                }
            }
        }
        used += 1;
    }
    if field.dim() <= 1 {
        // No off-diagonal entries exist.
        worst = 0.0;
    }
    let note = (used == 0 && field.dim() > 1)
        .then(|| "no interior sample points available; cooperativity not certified".to_string());
    let verdict = used > 0 || field.dim() <= 1;
    CooperativityCheck {
        verdict: verdict && worst >= -SIGN_EPS,
        worst_entry: if worst.is_finite() { worst } else { 0.0 },
        samples: used,
        witness,
        note,
    }
}

/// Irreducibility along a trajectory: at evenly spaced stored states, the
/// digraph of off-diagonal entries with `|J_ij| > SIGN_EPS` must be strongly
/// connected at 99% of the samples or more.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IrreducibilityCheck {
    pub verdict: bool,
    pub fraction: f64,
    pub samples: usize,
    /// Indices (into the sampled subsequence) where the digraph was reducible.
    pub failures: Vec<usize>,
}

pub fn check_irreducibility<F: VectorField + ?Sized>(
    field: &F,
    traj: &Trajectory,
    n_samples: usize,
) -> IrreducibilityCheck {
    let stored = traj.len();
    let n = n_samples.max(1).min(stored);
    let mut failures = Vec::new();
    let mut connected = 0usize;
    for s in 0..n {
        let idx = if n == 1 { 0 } else { s * (stored - 1) / (n - 1) };
        let x = &traj.states()[idx];
        let j = jacobian_or_fd(field, x);
        let d = j.nrows();
        let mut adj = vec![Vec::new(); d];
        for r in 0..d {
            for c in 0..d {
                if r != c && j[(r, c)].abs() > SIGN_EPS {
                    // x_c influences ẋ_r: edge c -> r.
                    adj[c].push(r);
                }
            }
        }
        if is_strongly_connected(&adj) {
            connected += 1;
        } else {
            failures.push(s);
        }
    }
    let fraction = connected as f64 / n as f64;
    IrreducibilityCheck { verdict: fraction >= 0.99, fraction, samples: n, failures }
}

/// Aggregate hypothesis report for an extent system.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HypothesisReport {
    /// Right kernel of `Γ` is one-dimensional with a positive spanning vector.
    pub kernel_ok: bool,
    pub kernel_vector: Option<Vec<f64>>,
    pub translation: Option<TranslationInvarianceCheck>,
    pub cooperativity: CooperativityCheck,
    pub irreducibility: Option<IrreducibilityCheck>,
    /// Cooperative and irreducible along the sampled trajectory.
    pub strongly_monotone: bool,
    pub notes: Vec<String>,
}

impl HypothesisReport {
    pub fn all_hold(&self) -> bool {
        self.kernel_ok
            && self.translation.as_ref().is_some_and(|t| t.verdict)
            && self.strongly_monotone
    }
}

/// Runs every hypothesis check for the extent system of `(network, sigma)`:
/// kernel shape, translation invariance along the kernel direction,
/// cooperativity at interior samples, and irreducibility along the trajectory
/// started at the origin.
pub fn analyze_hypotheses(
    sys: &ExtentSystem,
    horizon: f64,
    n_samples: usize,
    cfg: &IntegratorConfig,
    seed: u64,
) -> Result<HypothesisReport, ExtentError> {
    let mut notes = Vec::new();
    let v = sys.kernel_direction();
    let kernel_ok = v.is_some();
    if !kernel_ok {
        notes.push("right kernel is not spanned by a single positive vector".to_string());
    }
    let translation =
        v.as_ref().map(|v| check_translation_invariance(sys, v, n_samples, seed));
    let cooperativity = check_cooperativity(sys, n_samples, seed.wrapping_add(1));
    let x0 = DVector::zeros(sys.dim());
    let irreducibility = match integrate(sys, &x0, horizon, cfg) {
        Ok(traj) => Some(check_irreducibility(sys, &traj, n_samples)),
        Err(e) => {
            notes.push(format!("trajectory for irreducibility check failed: {e}"));
            None
        }
    };
    let strongly_monotone =
        cooperativity.verdict && irreducibility.as_ref().is_some_and(|i| i.verdict);
    Ok(HypothesisReport {
        kernel_ok,
        kernel_vector: v.map(|v| v.iter().copied().collect()),
        translation,
        cooperativity,
        irreducibility,
        strongly_monotone,
        notes,
    })
}
