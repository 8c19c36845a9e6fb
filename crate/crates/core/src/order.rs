//! Orthant-cone partial orders and the translation gauge.
//!
//! An orthant cone is fixed by a sign pattern `s ∈ {+1,-1}^n`:
//! `K = {x : s_i x_i >= 0 for all i}`. Together with an interior unit vector
//! `v` it induces the comparisons `⪯`, `≺`, `≪` and the gauge
//! `V(x) = min {α : x ⪯ α v} = max_i s_i x_i / (s_i v_i)`,
//! which is Lipschitz with constant `1 / min_i s_i v_i`.

use nalgebra::DVector;
use thiserror::Error;

/// Absolute slack used for non-strict floating comparisons.
pub const ORDER_SLACK: f64 = 1e-9;
/// Margin required of every component for the strict interior relation.
pub const INTERIOR_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum OrderError {
    #[error("sign pattern length {signs} does not match vector length {v}")]
    DimensionMismatch { signs: usize, v: usize },
    #[error("sign pattern entries must be +1 or -1 (got {0} at index {1})")]
    InvalidSign(i8, usize),
    #[error("v must lie in the cone interior: sign * v = {0} at index {1}")]
    NotInterior(f64, usize),
    #[error("v must be nonzero")]
    ZeroVector,
}

/// Partial order induced by an orthant cone, with a distinguished interior
/// unit vector.
#[derive(Debug, Clone)]
pub struct OrthantOrder {
    signs: Vec<f64>,
    v: DVector<f64>,
}

impl OrthantOrder {
    /// Builds the order for the given sign pattern; `v` is renormalized to
    /// unit Euclidean norm and must satisfy `s_i v_i > 0` for every `i`.
    pub fn new(signs: &[i8], v: DVector<f64>) -> Result<Self, OrderError> {
        if signs.len() != v.len() {
            return Err(OrderError::DimensionMismatch { signs: signs.len(), v: v.len() });
        }
        for (i, &s) in signs.iter().enumerate() {
            if s != 1 && s != -1 {
                return Err(OrderError::InvalidSign(s, i));
            }
        }
        let n = v.norm();
        if n <= 0.0 || !n.is_finite() {
            return Err(OrderError::ZeroVector);
        }
        let v = v / n;
        let signs: Vec<f64> = signs.iter().map(|&s| s as f64).collect();
        for i in 0..v.len() {
            let sv = signs[i] * v[i];
            if sv <= 0.0 || sv.is_nan() {
                return Err(OrderError::NotInterior(sv, i));
            }
        }
        Ok(Self { signs, v })
    }

    /// Order for the standard (all-positive) orthant.
    pub fn cooperative(v: DVector<f64>) -> Result<Self, OrderError> {
        let signs = vec![1i8; v.len()];
        Self::new(&signs, v)
    }

    pub fn dimension(&self) -> usize {
        self.v.len()
    }

    pub fn v(&self) -> &DVector<f64> {
        &self.v
    }

    pub fn signs(&self) -> &[f64] {
        &self.signs
    }

    fn check_len(&self, x: &DVector<f64>) {
        assert_eq!(x.len(), self.v.len(), "order dimension mismatch");
    }

    /// Largest signed excess of `x` over `y`; `x ⪯ y` holds exactly when this
    /// is `<= ORDER_SLACK`.
    pub fn leq_excess(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        self.check_len(x);
        self.check_len(y);
        (0..x.len())
            .map(|i| self.signs[i] * (x[i] - y[i]))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smallest componentwise margin of `y` over `x`; `x ≪ y` holds exactly
    /// when this is `>= INTERIOR_MARGIN`.
    pub fn ll_margin(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        self.check_len(x);
        self.check_len(y);
        (0..x.len())
            .map(|i| self.signs[i] * (y[i] - x[i]))
            .fold(f64::INFINITY, f64::min)
    }

    /// `x ⪯ y` up to the floating slack.
    pub fn leq(&self, x: &DVector<f64>, y: &DVector<f64>) -> bool {
        self.leq_excess(x, y) <= ORDER_SLACK
    }

    /// `x ≺ y`: non-strict order and `x != y`.
    pub fn lt(&self, x: &DVector<f64>, y: &DVector<f64>) -> bool {
        self.leq(x, y) && x != y
    }

    /// `x ≪ y`: every component ahead by at least the interior margin.
    pub fn ll(&self, x: &DVector<f64>, y: &DVector<f64>) -> bool {
        self.ll_margin(x, y) >= INTERIOR_MARGIN
    }

    /// Gauge `V(x) = min {α : x ⪯ α v} = max_i s_i x_i / (s_i v_i)`.
    /// The minimum is attained, so `x ⪯ V(x) v` always holds.
    pub fn v_gauge(&self, x: &DVector<f64>) -> f64 {
        self.check_len(x);
        (0..x.len())
            .map(|i| (self.signs[i] * x[i]) / (self.signs[i] * self.v[i]))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Lipschitz constant of the gauge: `1 / min_i s_i v_i`, so that
    /// `|V(x) - V(y)| <= k |x - y|`.
    pub fn lipschitz_bound(&self) -> f64 {
        let min_sv = (0..self.v.len())
            .map(|i| self.signs[i] * self.v[i])
            .fold(f64::INFINITY, f64::min);
        1.0 / min_sv
    }
}
