//! Adaptive explicit Runge–Kutta integration.
//!
//! The stepper is the classical Dormand–Prince 5(4) embedded pair (FSAL, seven
//! stages, six evaluations per accepted step) with proportional-integral step
//! control and the standard quartic dense-output interpolant. The Butcher
//! coefficients are spelled out at the bottom of this file.
//!
//! Domain handling: a step whose endpoint leaves the field domain is retried
//! with half the step until `min_step`, after which the trajectory ends with
//! status [`TrajectoryStatus::LeftDomain`]. Accepted states have components in
//! `(-1e-12, 0)` clamped to exactly `0`, which keeps boundary-grazing
//! mass-action trajectories nonnegative without measurably altering them.
//!
//! Everything here is deterministic: identical inputs produce bit-identical
//! trajectories.

use crate::field::{Reversed, VectorField};
use nalgebra::DVector;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum OdeError {
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
    #[error("integration horizon must be finite and nonnegative, got {0}")]
    InvalidHorizon(f64),
    #[error("initial state length {got} does not match field dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("initial state is outside the field domain")]
    InitialStateOutsideDomain,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub min_step: f64,
    pub max_steps: usize,
    /// Length of time the field norm must stay below `stall_threshold` for the
    /// trajectory to count as stalled at an equilibrium.
    pub stall_window: f64,
    pub stall_threshold: f64,
    /// Terminate early with [`TrajectoryStatus::StalledAtEquilibrium`] once the
    /// stall condition holds. Off by default so fixed-horizon runs are
    /// unaffected.
    pub stop_at_stall: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_step: f64::INFINITY,
            // Above the boundary clamp width, so an outward flow fails the
            // domain test instead of being clamped forever.
            min_step: 1e-10,
            max_steps: 1_000_000,
            stall_window: 1.0,
            // Above the state noise floor (~rel_tol * |x|) near an attracting
            // equilibrium; the Newton polish takes over from there.
            stall_threshold: 1e-7,
            stop_at_stall: false,
        }
    }
}

impl IntegratorConfig {
    fn validate(&self) -> Result<(), OdeError> {
        let positive = |v: f64| v > 0.0 && !v.is_nan();
        if !positive(self.rel_tol) || !positive(self.abs_tol) {
            return Err(OdeError::InvalidConfig("tolerances must be positive".into()));
        }
        if !positive(self.min_step) || self.max_step.is_nan() || self.min_step > self.max_step {
            return Err(OdeError::InvalidConfig(
                "step bounds must satisfy 0 < min_step <= max_step".into(),
            ));
        }
        if !positive(self.stall_window) || !positive(self.stall_threshold) {
            return Err(OdeError::InvalidConfig("stall parameters must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrajectoryStatus {
    /// Reached the requested horizon.
    Completed,
    /// Field norm stayed below the stall threshold for a full window.
    StalledAtEquilibrium,
    /// Step size underflowed with an unacceptable error estimate, or the step
    /// budget ran out.
    StepFailure,
    /// Could not continue without leaving the state domain.
    LeftDomain,
}

#[derive(Debug, Clone)]
struct DenseSegment {
    t0: f64,
    h: f64,
    cont: [DVector<f64>; 5],
}

impl DenseSegment {
    fn eval(&self, t: f64) -> DVector<f64> {
        let s = if self.h == 0.0 { 0.0 } else { (t - self.t0) / self.h };
        let s1 = 1.0 - s;
        &self.cont[0]
            + (&self.cont[1] + (&self.cont[2] + (&self.cont[3] + &self.cont[4] * s1) * s) * s1) * s
    }
}

/// Solution samples at the accepted steps plus a piecewise interpolant.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<DVector<f64>>,
    segments: Vec<DenseSegment>,
    status: TrajectoryStatus,
    steps_accepted: usize,
    steps_rejected: usize,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[DVector<f64>] {
        &self.states
    }

    pub fn status(&self) -> TrajectoryStatus {
        self.status
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, |s| s.len())
    }

    pub fn start_time(&self) -> f64 {
        *self.times.first().expect("trajectory has at least the initial point")
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().expect("trajectory has at least the initial point")
    }

    pub fn final_state(&self) -> &DVector<f64> {
        self.states.last().expect("trajectory has at least the initial point")
    }

    pub fn steps_accepted(&self) -> usize {
        self.steps_accepted
    }

    pub fn steps_rejected(&self) -> usize {
        self.steps_rejected
    }

    /// Dense evaluation at any time in range; the argument is clamped to the
    /// covered interval.
    pub fn sample(&self, t: f64) -> DVector<f64> {
        if self.segments.is_empty() || t <= self.start_time() {
            return self.states[0].clone();
        }
        if t >= self.end_time() {
            return self.final_state().clone();
        }
        // Last segment whose start time is <= t.
        let idx = self.segments.partition_point(|seg| seg.t0 <= t);
        self.segments[idx - 1].eval(t)
    }

    /// CSV export: header `t,x1,...,xd`, one row per accepted step.
    pub fn to_csv(&self) -> String {
        let d = self.dim();
        let mut out = String::from("t");
        for i in 1..=d {
            out.push_str(&format!(",x{i}"));
        }
        out.push('\n');
        for (t, x) in self.times.iter().zip(&self.states) {
            out.push_str(&format!("{t}"));
            for v in x.iter() {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// First time after which the field norm stays below `cfg.stall_threshold`
/// for a full `cfg.stall_window`, together with the state at the end of that
/// window. Scans the stored samples.
pub fn detect_equilibrium<F: VectorField + ?Sized>(
    traj: &Trajectory,
    field: &F,
    cfg: &IntegratorConfig,
) -> Option<(f64, DVector<f64>)> {
    let n = traj.len();
    if n == 0 {
        return None;
    }
    let norms: Vec<f64> = traj.states.iter().map(|x| field.eval(x).norm()).collect();
    let times = &traj.times;
    let mut j = 0usize;
    for i in 0..n {
        if norms[i] > cfg.stall_threshold {
            continue;
        }
        if j < i {
            j = i;
        }
        while j + 1 < n && times[j] < times[i] + cfg.stall_window {
            j += 1;
        }
        if times[j] < times[i] + cfg.stall_window {
            return None; // window does not fit in the remaining horizon
        }
        if norms[i..=j].iter().all(|&v| v <= cfg.stall_threshold) {
            return Some((times[i], traj.states[j].clone()));
        }
    }
    None
}

/// Integrates `ẋ = f(x)` from `x0` over `[0, t_end]`.
pub fn integrate<F: VectorField + ?Sized>(
    field: &F,
    x0: &DVector<f64>,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory, OdeError> {
    cfg.validate()?;
    if !t_end.is_finite() || t_end < 0.0 {
        return Err(OdeError::InvalidHorizon(t_end));
    }
    if x0.len() != field.dim() {
        return Err(OdeError::DimensionMismatch { expected: field.dim(), got: x0.len() });
    }
    if !field.in_domain(x0) {
        return Err(OdeError::InitialStateOutsideDomain);
    }

    let dim = x0.len();
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![x0.clone()],
        segments: Vec::new(),
        status: TrajectoryStatus::Completed,
        steps_accepted: 0,
        steps_rejected: 0,
    };
    if t_end == 0.0 {
        return Ok(traj);
    }

    let mut t = 0.0f64;
    let mut y = x0.clone();
    let mut k: Vec<DVector<f64>> = vec![DVector::zeros(dim); 7];
    k[0] = field.eval(&y);

    let mut h = initial_step(field, &y, &k[0], t_end, cfg);
    let mut facold: f64 = 1e-4;
    let mut last_rejected = false;
    let mut stall_start: Option<f64> =
        if k[0].norm() <= cfg.stall_threshold { Some(0.0) } else { None };
    let mut attempts = 0usize;

    loop {
        if t >= t_end - 1e-14 * t_end.max(1.0) {
            traj.status = TrajectoryStatus::Completed;
            break;
        }
        if attempts >= cfg.max_steps {
            traj.status = TrajectoryStatus::StepFailure;
            break;
        }
        attempts += 1;

        h = h.clamp(cfg.min_step, cfg.max_step);
        let h_step = h.min(t_end - t);

        // Stages 2..6.
        for j in 1..=5 {
            let mut acc = &k[0] * A[j][0];
            for l in 1..j {
                acc += &k[l] * A[j][l];
            }
            let y_stage = &y + acc * h_step;
            k[j] = field.eval(&y_stage);
        }

        // Fifth-order solution; B[1] = B[6] = 0.
        let mut acc = &k[0] * B[0];
        for l in 2..=5 {
            acc += &k[l] * B[l];
        }
        let mut y_new = &y + acc * h_step;
        // Clamp sub-rounding negative components to exactly zero.
        for v in y_new.iter_mut() {
            if *v > -1e-12 && *v < 0.0 {
                *v = 0.0;
            }
        }
        // FSAL stage at the step endpoint, also part of the error estimate.
        k[6] = field.eval(&y_new);

        // Scaled RMS error of the embedded 4th-order difference.
        let mut err_acc = 0.0f64;
        for i in 0..dim {
            let mut e = k[0][i] * E[0];
            for l in 2..=6 {
                e += k[l][i] * E[l];
            }
            e *= h_step;
            let sk = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y_new[i].abs());
            err_acc += (e / sk) * (e / sk);
        }
        let err = (err_acc / dim as f64).sqrt();

        if err <= 1.0 {
            if !field.in_domain(&y_new) {
                // Endpoint left the domain: retry with half the step.
                traj.steps_rejected += 1;
                let h_half = h_step * 0.5;
                if h_half < cfg.min_step {
                    traj.status = TrajectoryStatus::LeftDomain;
                    break;
                }
                h = h_half;
                last_rejected = true;
                continue;
            }

            // Accept.
            let t_new = t + h_step;
            let ydiff = &y_new - &y;
            let bspl = &k[0] * h_step - &ydiff;
            let mut dacc = &k[0] * D[0];
            for l in 2..=6 {
                dacc += &k[l] * D[l];
            }
            let cont = [
                y.clone(),
                ydiff.clone(),
                bspl.clone(),
                &ydiff - &k[6] * h_step - &bspl,
                dacc * h_step,
            ];
            traj.segments.push(DenseSegment { t0: t, h: h_step, cont });
            traj.times.push(t_new);
            traj.states.push(y_new.clone());
            traj.steps_accepted += 1;

            let fnorm = k[6].norm();
            if fnorm <= cfg.stall_threshold {
                let start = *stall_start.get_or_insert(t_new);
                if cfg.stop_at_stall && t_new - start >= cfg.stall_window {
                    traj.status = TrajectoryStatus::StalledAtEquilibrium;
                    break;
                }
            } else {
                stall_start = None;
            }

            // PI step-size update.
            let fac11 = err.powf(EXPO1);
            let mut fac = fac11 / facold.powf(BETA);
            fac = FACC2.max(FACC1.min(fac / SAFE));
            let mut h_new = h_step / fac;
            if last_rejected {
                h_new = h_new.min(h_step);
                last_rejected = false;
            }
            facold = err.max(1e-4);

            k.swap(0, 6); // FSAL
            y = y_new;
            t = t_new;
            h = h_new;
        } else {
            // Error too large.
            if h_step <= cfg.min_step * (1.0 + 1e-12) {
                traj.status = TrajectoryStatus::StepFailure;
                break;
            }
            traj.steps_rejected += 1;
            let fac11 = err.powf(EXPO1);
            h = h_step / FACC1.min(fac11 / SAFE);
            last_rejected = true;
        }
    }

    Ok(traj)
}

/// Integrates the sign-reversed field forward for `t_back`, i.e. follows the
/// original system backwards in time. Row `τ` of the result corresponds to
/// original time `−τ`. Backward completeness is not assumed, so
/// [`TrajectoryStatus::LeftDomain`] is an ordinary outcome here.
pub fn integrate_reverse<F: VectorField + ?Sized>(
    field: &F,
    x0: &DVector<f64>,
    t_back: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory, OdeError> {
    integrate(&Reversed::new(field), x0, t_back, cfg)
}

/// Standard two-phase starting-step heuristic.
fn initial_step<F: VectorField + ?Sized>(
    field: &F,
    y0: &DVector<f64>,
    f0: &DVector<f64>,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> f64 {
    let dim = y0.len() as f64;
    let sk = |i: usize| cfg.abs_tol + cfg.rel_tol * y0[i].abs();
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..y0.len() {
        d0 += (y0[i] / sk(i)).powi(2);
        d1 += (f0[i] / sk(i)).powi(2);
    }
    d0 = (d0 / dim).sqrt();
    d1 = (d1 / dim).sqrt();
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(t_end);
    let y1 = y0 + f0 * h0;
    let f1 = field.eval(&y1);
    let mut d2 = 0.0;
    for i in 0..y0.len() {
        d2 += ((f1[i] - f0[i]) / sk(i)).powi(2);
    }
    d2 = (d2 / dim).sqrt() / h0;
    let dm = d1.max(d2);
    let h1 = if dm <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / dm).powf(0.2) };
    (100.0 * h0).min(h1).min(t_end).min(cfg.max_step).max(cfg.min_step)
}

// Dormand–Prince 5(4) tableau.

/// Stage coefficient matrix (lower triangular, rows 1..=5 used for the
/// internal stages; the seventh stage is evaluated at the 5th-order solution).
const A: [[f64; 6]; 6] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
];

/// Fifth-order quadrature weights.
const B: [f64; 6] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];

/// Error-estimate weights (5th-order minus embedded 4th-order).
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Dense-output weights.
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

// PI controller constants.
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;
const SAFE: f64 = 0.9;
const FACC1: f64 = 5.0; // max shrink factor per step
const FACC2: f64 = 0.1; // max growth is 10x per step
