//! Exact rational and floating linear algebra.
//!
//! Stoichiometry matrices are integer valued, so rank decisions and kernel
//! bases are computed over the rationals; no floating threshold is involved.
//! Floating-point routines cover the orthogonal projector `I - vv'` and the
//! least-squares pullback of image vectors to the complement of the kernel
//! direction.

use nalgebra::{DMatrix, DVector};
use num::rational::BigRational;
use num::{BigInt, Integer, One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("projector direction must be nonzero")]
    ZeroDirection,
    #[error("matrix kernel is not one-dimensional or is not spanned by the given vector")]
    KernelHypothesis,
    #[error("vector is not in the image: residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    NotInImage { residual: f64, tol: f64 },
}

/// Dense row-major matrix with exact rational entries.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigRational>,
}

fn big(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

impl RationalMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<BigRational>) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix must have positive dimensions");
        assert_eq!(data.len(), rows * cols, "entry count must equal rows * cols");
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::new(rows, cols, vec![BigRational::zero(); rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            *m.get_mut(i, i) = BigRational::one();
        }
        m
    }

    pub fn from_i64_rows(rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        assert!(r >= 1, "matrix must have at least one row");
        let c = rows[0].len();
        assert!(rows.iter().all(|row| row.len() == c), "rows must have equal length");
        let data = rows.iter().flatten().map(|&v| big(v)).collect();
        Self::new(r, c, data)
    }

    pub fn from_integer_matrix(m: &DMatrix<i64>) -> Self {
        let data = (0..m.nrows())
            .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
            .map(|(i, j)| big(m[(i, j)]))
            .collect();
        Self::new(m.nrows(), m.ncols(), data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigRational {
        &self.data[i * self.cols + j]
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut BigRational {
        &mut self.data[i * self.cols + j]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                *t.get_mut(j, i) = self.get(i, j).clone();
            }
        }
        t
    }

    pub fn mul_vec(&self, x: &[BigRational]) -> Vec<BigRational> {
        assert_eq!(x.len(), self.cols, "vector length must equal column count");
        (0..self.rows)
            .map(|i| {
                let mut acc = BigRational::zero();
                for (j, xj) in x.iter().enumerate() {
                    acc += self.get(i, j) * xj;
                }
                acc
            })
            .collect()
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| rational_to_f64(self.get(i, j)))
    }

    /// Reduced row echelon form together with the pivot columns.
    fn rref(&self) -> (Vec<BigRational>, Vec<usize>) {
        let mut a = self.data.clone();
        let (r, c) = (self.rows, self.cols);
        let mut pivots = Vec::new();
        let mut row = 0usize;
        for col in 0..c {
            let pivot_row = match (row..r).find(|&i| !a[i * c + col].is_zero()) {
                Some(p) => p,
                None => continue,
            };
            if pivot_row != row {
                for j in 0..c {
                    a.swap(pivot_row * c + j, row * c + j);
                }
            }
            let inv = a[row * c + col].clone();
            for j in col..c {
                a[row * c + j] = &a[row * c + j] / &inv;
            }
            for i in 0..r {
                if i != row && !a[i * c + col].is_zero() {
                    let f = a[i * c + col].clone();
                    for j in col..c {
                        let sub = &f * &a[row * c + j];
                        a[i * c + j] = &a[i * c + j] - &sub;
                    }
                }
            }
            pivots.push(col);
            row += 1;
            if row == r {
                break;
            }
        }
        (a, pivots)
    }

    /// Exact rank over the rationals.
    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of `{x : Mx = 0}`, one vector per free column, scaled to primitive
    /// integer entries with the first nonzero entry positive.
    pub fn right_kernel_basis(&self) -> Vec<Vec<BigRational>> {
        let (a, pivots) = self.rref();
        let c = self.cols;
        let mut basis = Vec::new();
        for free in 0..c {
            if pivots.contains(&free) {
                continue;
            }
            let mut x = vec![BigRational::zero(); c];
            x[free] = BigRational::one();
            for (i, &p) in pivots.iter().enumerate() {
                x[p] = -a[i * c + free].clone();
            }
            primitive_scale(&mut x);
            basis.push(x);
        }
        basis
    }

    /// Basis of `{c : c'M = 0}`.
    pub fn left_kernel_basis(&self) -> Vec<Vec<BigRational>> {
        self.transpose().right_kernel_basis()
    }
}

/// Scales a rational vector to primitive integer entries (coprime, first
/// nonzero entry positive). The zero vector is left unchanged.
pub fn primitive_scale(v: &mut [BigRational]) {
    let mut denom_lcm = BigInt::one();
    for q in v.iter() {
        denom_lcm = denom_lcm.lcm(q.denom());
    }
    let lcm_q = BigRational::from_integer(denom_lcm);
    for q in v.iter_mut() {
        *q = &*q * &lcm_q;
    }
    let mut g = BigInt::zero();
    for q in v.iter() {
        g = g.gcd(q.numer());
    }
    if g.is_zero() {
        return;
    }
    let g_q = BigRational::from_integer(g);
    for q in v.iter_mut() {
        *q = &*q / &g_q;
    }
    if let Some(first) = v.iter().find(|q| !q.is_zero()) {
        if first.is_negative() {
            for q in v.iter_mut() {
                *q = -q.clone();
            }
        }
    }
}

pub fn rational_to_f64(q: &BigRational) -> f64 {
    q.numer().to_f64().unwrap_or(f64::NAN) / q.denom().to_f64().unwrap_or(f64::NAN)
}

pub fn rational_vec_to_f64(v: &[BigRational]) -> DVector<f64> {
    DVector::from_iterator(v.len(), v.iter().map(rational_to_f64))
}

/// If the right kernel of `m` is one-dimensional and admits a strictly
/// positive representative, returns that representative scaled to Euclidean
/// norm one.
pub fn positive_kernel_unit_vector(m: &RationalMatrix) -> Option<DVector<f64>> {
    let basis = m.right_kernel_basis();
    if basis.len() != 1 {
        return None;
    }
    let b = &basis[0];
    let all_pos = b.iter().all(|q| q.is_positive());
    let all_neg = b.iter().all(|q| q.is_negative());
    if !all_pos && !all_neg {
        return None;
    }
    let mut v = rational_vec_to_f64(b);
    if all_neg {
        v = -v;
    }
    let n = v.norm();
    Some(v / n)
}

/// Orthogonal projection onto the complement of a unit direction.
#[derive(Debug, Clone)]
pub struct Projector {
    v: DVector<f64>,
    matrix: DMatrix<f64>,
}

impl Projector {
    /// Builds `I - vv'` after normalizing `v` to unit Euclidean norm.
    pub fn new(direction: &DVector<f64>) -> Result<Self, LinalgError> {
        let n = direction.norm();
        if n <= 0.0 || !n.is_finite() {
            return Err(LinalgError::ZeroDirection);
        }
        let v = direction / n;
        let d = v.len();
        let matrix = DMatrix::identity(d, d) - &v * v.transpose();
        Ok(Self { v, matrix })
    }

    pub fn v(&self) -> &DVector<f64> {
        &self.v
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dimension(&self) -> usize {
        self.v.len()
    }

    /// `x - (v'x) v`. Panics on length mismatch.
    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.v.len(), "projector dimension mismatch");
        x - &self.v * self.v.dot(x)
    }
}

/// Orthonormal basis of `v⊥` as the columns of an `n x (n-1)` matrix, built
/// from the Householder reflection that maps `e1` to `±v`.
pub fn orthonormal_complement(direction: &DVector<f64>) -> DMatrix<f64> {
    let n = direction.norm();
    assert!(n > 0.0 && n.is_finite(), "direction must be nonzero");
    let v = direction / n;
    let d = v.len();
    if d == 1 {
        return DMatrix::zeros(1, 0);
    }
    let alpha = if v[0] >= 0.0 { 1.0 } else { -1.0 };
    let mut u = v.clone();
    u[0] -= alpha;
    let uu = u.norm_squared();
    if uu < 1e-28 {
        // v is (numerically) ±e1; the remaining canonical vectors already span v⊥.
        let mut b = DMatrix::zeros(d, d - 1);
        for j in 0..d - 1 {
            b[(j + 1, j)] = 1.0;
        }
        return b;
    }
    let h = DMatrix::identity(d, d) - (&u * u.transpose()) * (2.0 / uu);
    h.columns(1, d - 1).into_owned()
}

/// Solves `Γz = y` for the unique `z ⊥ v`, assuming the right kernel of `Γ`
/// is spanned by `v`. `y` must lie in the image of `Γ` up to the least-squares
/// residual tolerance `1e-9 |y|`.
pub fn recover_projected_state(
    gamma: &RationalMatrix,
    v: &DVector<f64>,
    y: &DVector<f64>,
) -> Result<DVector<f64>, LinalgError> {
    if v.len() != gamma.cols() {
        return Err(LinalgError::DimensionMismatch { expected: gamma.cols(), got: v.len() });
    }
    if y.len() != gamma.rows() {
        return Err(LinalgError::DimensionMismatch { expected: gamma.rows(), got: y.len() });
    }
    let kernel = gamma.right_kernel_basis();
    if kernel.len() != 1 {
        return Err(LinalgError::KernelHypothesis);
    }
    let k = rational_vec_to_f64(&kernel[0]);
    let khat = &k / k.norm();
    let vn = v.norm();
    if vn <= 0.0 || !vn.is_finite() {
        return Err(LinalgError::ZeroDirection);
    }
    let vhat = v / vn;
    if (&khat - &vhat).norm() > 1e-9 && (&khat + &vhat).norm() > 1e-9 {
        return Err(LinalgError::KernelHypothesis);
    }

    let ynorm = y.norm();
    if ynorm == 0.0 {
        return Ok(DVector::zeros(gamma.cols()));
    }
    let basis = orthonormal_complement(&vhat);
    let gamma_f = gamma.to_f64();
    let reduced = &gamma_f * &basis;
    let svd = reduced.svd(true, true);
    let w = svd
        .solve(y, 1e-14)
        .map_err(|_| LinalgError::KernelHypothesis)?;
    let z = &basis * w;
    let residual = (&gamma_f * &z - y).norm();
    let tol = 1e-9 * ynorm;
    if residual > tol {
        return Err(LinalgError::NotInImage { residual, tol });
    }
    Ok(z)
}
