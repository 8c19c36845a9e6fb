//! Vector fields over a guarded state domain.
//!
//! Everything the integrator and the verification procedures consume is a
//! [`VectorField`]: an evaluation map, an optional analytic Jacobian, and a
//! domain predicate. `eval` must be total (stages of an explicit step may
//! probe slightly outside the domain); `in_domain` only constrains accepted
//! trajectory points.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub trait VectorField {
    fn dim(&self) -> usize;

    fn eval(&self, x: &DVector<f64>) -> DVector<f64>;

    /// Analytic Jacobian when available; checks fall back to finite
    /// differences otherwise.
    fn jacobian(&self, _x: &DVector<f64>) -> Option<DMatrix<f64>> {
        None
    }

    fn in_domain(&self, _x: &DVector<f64>) -> bool {
        true
    }

    /// Signed distance-like margin to the domain boundary when cheaply
    /// available (positive inside). Used to sample interior points.
    fn boundary_margin(&self, _x: &DVector<f64>) -> Option<f64> {
        None
    }
}

impl<F: VectorField + ?Sized> VectorField for &F {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        (**self).eval(x)
    }
    fn jacobian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        (**self).jacobian(x)
    }
    fn in_domain(&self, x: &DVector<f64>) -> bool {
        (**self).in_domain(x)
    }
    fn boundary_margin(&self, x: &DVector<f64>) -> Option<f64> {
        (**self).boundary_margin(x)
    }
}

impl VectorField for Box<dyn VectorField + Send + Sync> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        (**self).eval(x)
    }
    fn jacobian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        (**self).jacobian(x)
    }
    fn in_domain(&self, x: &DVector<f64>) -> bool {
        (**self).in_domain(x)
    }
    fn boundary_margin(&self, x: &DVector<f64>) -> Option<f64> {
        (**self).boundary_margin(x)
    }
}

/// Linear field `x ↦ A x`.
#[derive(Debug, Clone)]
pub struct LinearField {
    matrix: DMatrix<f64>,
}

impl LinearField {
    pub fn new(matrix: DMatrix<f64>) -> Self {
        assert_eq!(matrix.nrows(), matrix.ncols(), "matrix must be square");
        Self { matrix }
    }
}

impl VectorField for LinearField {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }
    fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.matrix * x
    }
    fn jacobian(&self, _x: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(self.matrix.clone())
    }
}

/// Constant field `x ↦ c`.
#[derive(Debug, Clone)]
pub struct ConstantField {
    value: DVector<f64>,
}

impl ConstantField {
    pub fn new(value: DVector<f64>) -> Self {
        Self { value }
    }
}

impl VectorField for ConstantField {
    fn dim(&self) -> usize {
        self.value.len()
    }
    fn eval(&self, _x: &DVector<f64>) -> DVector<f64> {
        self.value.clone()
    }
    fn jacobian(&self, _x: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(DMatrix::zeros(self.value.len(), self.value.len()))
    }
}

type EvalFn = Box<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
type JacFn = Box<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;
type DomainFn = Box<dyn Fn(&DVector<f64>) -> bool + Send + Sync>;

/// Closure-backed field, used for synthetic test systems.
pub struct FnField {
    dim: usize,
    eval_fn: EvalFn,
    jac_fn: Option<JacFn>,
    domain_fn: Option<DomainFn>,
}

impl FnField {
    pub fn new<E>(dim: usize, eval_fn: E) -> Self
    where
        E: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        Self { dim, eval_fn: Box::new(eval_fn), jac_fn: None, domain_fn: None }
    }

    pub fn with_jacobian<J>(mut self, jac_fn: J) -> Self
    where
        J: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.jac_fn = Some(Box::new(jac_fn));
        self
    }

    pub fn with_domain<D>(mut self, domain_fn: D) -> Self
    where
        D: Fn(&DVector<f64>) -> bool + Send + Sync + 'static,
    {
        self.domain_fn = Some(Box::new(domain_fn));
        self
    }
}

impl VectorField for FnField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.eval_fn)(x)
    }
    fn jacobian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        self.jac_fn.as_ref().map(|j| j(x))
    }
    fn in_domain(&self, x: &DVector<f64>) -> bool {
        self.domain_fn.as_ref().is_none_or(|d| d(x))
    }
}

/// `x̃ ↦ (I - vv') f(x̃)`: the projection of a translation-invariant field onto
/// `v⊥`. The domain test is inherited unchanged, which is exact whenever the
/// inner domain is itself invariant under translations along `v`.
pub struct ProjectedField<F> {
    inner: F,
    v: DVector<f64>,
}

impl<F: VectorField> ProjectedField<F> {
    pub fn new(inner: F, v: &DVector<f64>) -> Self {
        let n = v.norm();
        assert!(n > 0.0 && n.is_finite(), "projection direction must be nonzero");
        assert_eq!(v.len(), inner.dim(), "direction length must match field dimension");
        Self { inner, v: v / n }
    }

    pub fn v(&self) -> &DVector<f64> {
        &self.v
    }

    pub fn inner(&self) -> &F {
        &self.inner
    }
}

impl<F: VectorField> VectorField for ProjectedField<F> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        let f = self.inner.eval(x);
        let c = self.v.dot(&f);
        f - &self.v * c
    }
    fn jacobian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        self.inner.jacobian(x).map(|j| {
            let vj = self.v.transpose() * &j;
            j - &self.v * vj
        })
    }
    fn in_domain(&self, x: &DVector<f64>) -> bool {
        self.inner.in_domain(x)
    }
    fn boundary_margin(&self, x: &DVector<f64>) -> Option<f64> {
        self.inner.boundary_margin(x)
    }
}

/// Sign-reversed field, used for reverse-time integration.
pub struct Reversed<F> {
    inner: F,
}

impl<F: VectorField> Reversed<F> {
    pub fn new(inner: F) -> Self {
        Self { inner }
    }
}

impl<F: VectorField> VectorField for Reversed<F> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        -self.inner.eval(x)
    }
    fn jacobian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        self.inner.jacobian(x).map(|j| -j)
    }
    fn in_domain(&self, x: &DVector<f64>) -> bool {
        self.inner.in_domain(x)
    }
    fn boundary_margin(&self, x: &DVector<f64>) -> Option<f64> {
        self.inner.boundary_margin(x)
    }
}

/// Central-difference Jacobian, kept as a cross-check oracle for the analytic
/// Jacobians and as a fallback where none is provided.
pub fn finite_difference_jacobian<F: VectorField + ?Sized>(
    field: &F,
    x: &DVector<f64>,
    h: f64,
) -> DMatrix<f64> {
    let d = field.dim();
    let mut jac = DMatrix::zeros(d, d);
    let mut xp = x.clone();
    let mut xm = x.clone();
    for j in 0..d {
        xp[j] = x[j] + h;
        xm[j] = x[j] - h;
        let col = (field.eval(&xp) - field.eval(&xm)) / (2.0 * h);
        jac.set_column(j, &col);
        xp[j] = x[j];
        xm[j] = x[j];
    }
    jac
}

/// Rejection-samples a point from the cube `center ± radius` that lies in the
/// field domain with at least the requested boundary margin.
pub fn sample_domain_point<F: VectorField + ?Sized, R: Rng>(
    field: &F,
    center: &DVector<f64>,
    radius: f64,
    margin: f64,
    rng: &mut R,
    max_tries: usize,
) -> Option<DVector<f64>> {
    for _ in 0..max_tries {
        let x = DVector::from_fn(center.len(), |i, _| {
            center[i] + rng.gen_range(-radius..radius)
        });
        if !field.in_domain(&x) {
            continue;
        }
        if let Some(m) = field.boundary_margin(&x) {
            if m < margin {
                continue;
            }
        }
        return Some(x);
    }
    None
}
