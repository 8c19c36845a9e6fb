//! Trajectory-pair checks: order preservation, monotonicity of the gauge `V`
//! along pairs (forward and reverse time), flow translation, and boundedness
//! modulo `v`.

use super::report::{VerificationReport, Witness};
use super::{merged_times, pair_rng, sample_free_pair, sample_ordered_pair, state_scale, vec_of};
use crate::field::VectorField;
use crate::linalg::Projector;
use crate::ode::{integrate, integrate_reverse, IntegratorConfig, Trajectory, TrajectoryStatus};
use crate::order::{OrthantOrder, INTERIOR_MARGIN, ORDER_SLACK};
use nalgebra::DVector;
use rand::Rng;

/// Fraction of the horizon after which the strict interior relation is
/// required of ordered pairs.
const STRONG_FRACTION: f64 = 0.1;
/// Every 20th pair of the gauge checks is drawn with `ξ1 − ξ2 = λv`.
const SPAN_PAIR_STRIDE: usize = 20;
/// Required decrease of `V` over the horizon for pairs off the span of `v`.
const GAUGE_GAP: f64 = 1e-7;
/// Allowed wobble of `V` for pairs with `ξ1 − ξ2 = λv`.
const SPAN_CONSTANCY_TOL: f64 = 1e-9;

/// Outcome of the order check on a single pair.
#[derive(Debug, Clone)]
pub struct OrderPairOutcome {
    /// Largest excess of `φt(ξ2)` over `φt(ξ1)` seen at any checked time
    /// (positive means the weak relation was at risk).
    pub max_weak_excess: f64,
    /// Smallest componentwise margin of `φt(ξ1)` over `φt(ξ2)` at times past
    /// the burn-in; `+inf` when the strict relation was not required.
    pub min_strong_margin: f64,
    /// Whether `ξ1 ≻ ξ2` held at time zero, so the interior relation is
    /// asserted after the burn-in.
    pub strong_required: bool,
}

impl OrderPairOutcome {
    pub fn weak_holds(&self) -> bool {
        self.max_weak_excess <= ORDER_SLACK
    }
    pub fn strong_holds(&self) -> bool {
        !self.strong_required || self.min_strong_margin >= INTERIOR_MARGIN
    }
}

/// Integrates one pair and measures the weak relation at every merged stored
/// time plus the interior relation past `STRONG_FRACTION · horizon`.
pub fn order_preservation_pair<F: VectorField + ?Sized>(
    field: &F,
    order: &OrthantOrder,
    xi1: &DVector<f64>,
    xi2: &DVector<f64>,
    horizon: f64,
    cfg: &IntegratorConfig,
) -> Result<OrderPairOutcome, super::LabError> {
    let run = |x0: &DVector<f64>| -> Result<Trajectory, super::LabError> {
        let t = integrate(field, x0, horizon, cfg)?;
        if t.status() == TrajectoryStatus::Completed {
            Ok(t)
        } else {
            Err(super::LabError::Integration {
                context: "order preservation".into(),
                status: t.status(),
            })
        }
    };
    let t1 = run(xi1)?;
    let t2 = run(xi2)?;
    let strong_required = order.lt(xi2, xi1);
    let mut max_weak_excess = f64::NEG_INFINITY;
    let mut min_strong_margin = f64::INFINITY;
    for &t in &merged_times(&t1, &t2) {
        let a = t1.sample(t);
        let b = t2.sample(t);
        max_weak_excess = max_weak_excess.max(order.leq_excess(&b, &a));
        if strong_required && t >= STRONG_FRACTION * horizon {
            min_strong_margin = min_strong_margin.min(order.ll_margin(&b, &a));
        }
    }
    Ok(OrderPairOutcome { max_weak_excess, min_strong_margin, strong_required })
}

/// Checks that ordered initial conditions stay ordered: for sampled pairs
/// `ξ1 ≻ ξ2`, the flow must satisfy `φt(ξ1) ⪰ φt(ξ2)` at every stored time
/// and `φt(ξ1) ≫ φt(ξ2)` (margin [`INTERIOR_MARGIN`]) once `t` exceeds a
/// tenth of the horizon.
pub fn verify_order_preservation<F: VectorField + ?Sized>(
    field: &F,
    order: &OrthantOrder,
    n_pairs: usize,
    horizon: f64,
    cfg: &IntegratorConfig,
    seed: u64,
) -> VerificationReport {
    let mut report = VerificationReport::new("order-preservation");
    report.note(format!(
        "seed {seed}, horizon {horizon}, strict after t >= {}",
        STRONG_FRACTION * horizon
    ));
    for k in 0..n_pairs {
        let (mut rng, _pair_seed) = pair_rng(seed, k);
        let Some((xi1, xi2)) = sample_ordered_pair(field, order, &mut rng) else {
            report.note(format!("sampler exhausted at pair {k}"));
            break;
        };
        report.n_samples += 1;
        match order_preservation_pair(field, order, &xi1, &xi2, horizon, cfg) {
            Ok(outcome) => {
                report.observe(outcome.max_weak_excess.max(0.0));
                if !outcome.weak_holds() {
                    report.witness(Witness {
                        sample: k,
                        kind: "weak-order-violation".into(),
                        time: None,
                        measured: outcome.max_weak_excess,
                        xi1: Some(vec_of(&xi1)),
                        xi2: Some(vec_of(&xi2)),
                    });
                } else if !outcome.strong_holds() {
                    report.witness(Witness {
                        sample: k,
                        kind: "strong-order-violation".into(),
                        time: None,
                        measured: INTERIOR_MARGIN - outcome.min_strong_margin,
                        xi1: Some(vec_of(&xi1)),
                        xi2: Some(vec_of(&xi2)),
                    });
                }
            }
            Err(e) => {
                report.witness(Witness {
                    sample: k,
                    kind: format!("integration-failure ({e})"),
                    time: None,
                    measured: f64::NAN,
                    xi1: Some(vec_of(&xi1)),
                    xi2: Some(vec_of(&xi2)),
                });
            }
        }
    }
    if report.n_samples == 0 {
        report.witness(Witness {
            sample: 0,
            kind: "no-samples".into(),
            time: None,
            measured: f64::NAN,
            xi1: None,
            xi2: None,
        });
    }
    report
}

struct GaugeRun {
    values: Vec<(f64, f64)>,
    slack: f64,
}

fn gauge_along_pair<F: VectorField + ?Sized>(
    field: &F,
    order: &OrthantOrder,
    xi1: &DVector<f64>,
    xi2: &DVector<f64>,
    horizon: f64,
    cfg: &IntegratorConfig,
    reverse: bool,
) -> Result<GaugeRun, String> {
    let run = |x0: &DVector<f64>| -> Result<Trajectory, String> {
        let res = if reverse {
            integrate_reverse(field, x0, horizon, cfg)
        } else {
            integrate(field, x0, horizon, cfg)
        };
        match res {
            Ok(t) => {
                let ok = t.status() == TrajectoryStatus::Completed
                    || (reverse && t.status() == TrajectoryStatus::LeftDomain);
                if ok && t.len() >= 2 {
                    Ok(t)
                } else if ok {
                    Err("trajectory too short".into())
                } else {
                    Err(format!("status {:?}", t.status()))
                }
            }
            Err(e) => Err(e.to_string()),
        }
    };
    let t1 = run(xi1)?;
    let t2 = run(xi2)?;
    let k_lip = order.lipschitz_bound();
    let scale = state_scale(&[&t1, &t2]);
    let slack = 10.0 * (cfg.rel_tol * scale + cfg.abs_tol) * k_lip;
    let values = merged_times(&t1, &t2)
        .iter()
        .map(|&t| (t, order.v_gauge(&(t1.sample(t) - t2.sample(t)))))
        .collect();
    Ok(GaugeRun { values, slack })
}

/// Checks that `t ↦ V(φt(ξ1) − φt(ξ2))` is nonincreasing (within integration
/// slack) for arbitrary pairs, decreases by a measurable gap for pairs whose
/// difference is off the span of `v`, and stays constant for pairs with
/// `ξ1 − ξ2 = λv`. Every [`SPAN_PAIR_STRIDE`]-th pair is drawn on the span.
pub fn verify_v_gauge_decrease<F: VectorField + ?Sized>(
    field: &F,
    order: &OrthantOrder,
    n_pairs: usize,
    horizon: f64,
    cfg: &IntegratorConfig,
    seed: u64,
) -> VerificationReport {
    let mut report = VerificationReport::new("v-gauge-decrease");
    report.note(format!("seed {seed}, horizon {horizon}, span pair every {SPAN_PAIR_STRIDE}"));
    let v = order.v().clone();
    let mut span_pairs = 0usize;
    let mut generic_pairs = 0usize;
    for k in 0..n_pairs {
        let (mut rng, _) = pair_rng(seed, k);
        let span_pair = (k + 1) % SPAN_PAIR_STRIDE == 0;
        let pair = if span_pair {
            let center = DVector::zeros(field.dim());
            crate::field::sample_domain_point(field, &center, 0.5, 0.0, &mut rng, 20_000).map(
                |xi2| {
                    let lambda: f64 = rng.gen_range(-2.0..2.0);
                    (&xi2 + &v * lambda, xi2)
                },
            )
        } else {
            sample_free_pair(field, &mut rng)
        };
        let Some((xi1, xi2)) = pair else {
            report.note(format!("sampler exhausted at pair {k}"));
            break;
        };
        if span_pair && !field.in_domain(&xi1) {
            continue;
        }
        report.n_samples += 1;
        // Span pairs assert an exact identity (the difference stays λv, so V
        // stays λ); integrate them accurately enough that twin-trajectory
        // drift sits well under SPAN_CONSTANCY_TOL.
        let pair_cfg = if span_pair {
            let mut c = cfg.clone();
            c.rel_tol = (cfg.rel_tol * 1e-4).max(1e-13);
            c.abs_tol = (cfg.abs_tol * 1e-4).max(1e-14);
            c
        } else {
            cfg.clone()
        };
        let run = match gauge_along_pair(field, order, &xi1, &xi2, horizon, &pair_cfg, false) {
            Ok(r) => r,
            Err(e) => {
                report.witness(Witness {
                    sample: k,
                    kind: format!("integration-failure ({e})"),
                    time: None,
                    measured: f64::NAN,
                    xi1: Some(vec_of(&xi1)),
                    xi2: Some(vec_of(&xi2)),
                });
                continue;
            }
        };
        // Nonincreasing against the running minimum.
        let mut running_min = f64::INFINITY;
        let mut worst_uptick: f64 = 0.0;
        for &(t, val) in &run.values {
            if val > running_min + run.slack {
                report.witness(Witness {
                    sample: k,
                    kind: "v-gauge-increase".into(),
                    time: Some(t),
                    measured: val - running_min,
                    xi1: Some(vec_of(&xi1)),
                    xi2: Some(vec_of(&xi2)),
                });
                break;
            }
            if val > running_min {
                worst_uptick = worst_uptick.max(val - running_min);
            }
            running_min = running_min.min(val);
        }
        report.observe(worst_uptick);
        let first = run.values.first().map(|&(_, v)| v).unwrap_or(0.0);
        let last = run.values.last().map(|&(_, v)| v).unwrap_or(0.0);
        if span_pair {
            span_pairs += 1;
            let deviation = run
                .values
                .iter()
                .map(|&(_, val)| (val - first).abs())
                .fold(0.0f64, f64::max);
            if deviation > SPAN_CONSTANCY_TOL {
                report.witness(Witness {
                    sample: k,
                    kind: "span-constancy-violation".into(),
                    time: None,
                    measured: deviation,
                    xi1: Some(vec_of(&xi1)),
                    xi2: Some(vec_of(&xi2)),
                });
            }
        } else {
            // Off-span pairs must lose a measurable amount of V over the horizon.
            let perp = {
                let d = &xi1 - &xi2;
                (&d - &v * v.dot(&d)).norm()
            };
            generic_pairs += 1;
            if perp > 1e-6 && first - last < GAUGE_GAP {
                report.witness(Witness {
                    sample: k,
                    kind: "insufficient-gap".into(),
                    time: None,
                    measured: first - last,
                    xi1: Some(vec_of(&xi1)),
                    xi2: Some(vec_of(&xi2)),
                });
            }
        }
    }
    report.note(format!("span pairs {span_pairs}, generic pairs {generic_pairs}"));
    if report.n_samples == 0 {
        report.witness(Witness {
            sample: 0,
            kind: "no-samples".into(),
            time: None,
            measured: f64::NAN,
            xi1: None,
            xi2: None,
        });
    }
    report
}

/// Reverse-time counterpart: integrating the sign-reversed field (until the
/// horizon or domain exit), `t ↦ V(φ−t(ξ1) − φ−t(ξ2))` must be nondecreasing
/// within the same slack.
pub fn verify_v_gauge_increase_reverse<F: VectorField + ?Sized>(
    field: &F,
    order: &OrthantOrder,
    n_pairs: usize,
    horizon: f64,
    cfg: &IntegratorConfig,
    seed: u64,
) -> VerificationReport {
    let mut report = VerificationReport::new("v-gauge-increase-reverse");
    report.note(format!("seed {seed}, horizon {horizon} (reverse time, domain exit allowed)"));
    for k in 0..n_pairs {
        let (mut rng, _) = pair_rng(seed, k);
        let Some((xi1, xi2)) = sample_free_pair(field, &mut rng) else {
            report.note(format!("sampler exhausted at pair {k}"));
            break;
        };
        report.n_samples += 1;
        let run = match gauge_along_pair(field, order, &xi1, &xi2, horizon, cfg, true) {
            Ok(r) => r,
            Err(e) => {
                report.witness(Witness {
                    sample: k,
                    kind: format!("integration-failure ({e})"),
                    time: None,
                    measured: f64::NAN,
                    xi1: Some(vec_of(&xi1)),
                    xi2: Some(vec_of(&xi2)),
                });
                continue;
            }
        };
        let mut running_max = f64::NEG_INFINITY;
        let mut worst_downtick: f64 = 0.0;
        for &(t, val) in &run.values {
            if val < running_max - run.slack {
                report.witness(Witness {
                    sample: k,
                    kind: "v-gauge-decrease-in-reverse".into(),
                    time: Some(t),
                    measured: running_max - val,
                    xi1: Some(vec_of(&xi1)),
                    xi2: Some(vec_of(&xi2)),
                });
                break;
            }
            if val < running_max {
                worst_downtick = worst_downtick.max(running_max - val);
            }
            running_max = running_max.max(val);
        }
        report.observe(worst_downtick);
    }
    if report.n_samples == 0 {
        report.witness(Witness {
            sample: 0,
            kind: "no-samples".into(),
            time: None,
            measured: f64::NAN,
            xi1: None,
            xi2: None,
        });
    }
    report
}

/// Checks the flow-translation identity `φt(ξ + λv) = φt(ξ) + λv` for sampled
/// `ξ` and `λ ∈ [−2, 2]`, at every merged stored time, against the threshold
/// `100 (rel_tol · scale + abs_tol)`.
pub fn verify_translation_flow<F: VectorField + ?Sized>(
    field: &F,
    v: &DVector<f64>,
    n_samples: usize,
    horizon: f64,
    cfg: &IntegratorConfig,
    seed: u64,
) -> VerificationReport {
    let mut report = VerificationReport::new("translation-flow");
    report.note(format!("seed {seed}, horizon {horizon}, lambda in [-2, 2]"));
    let vhat = v / v.norm();
    let center = DVector::zeros(field.dim());
    for k in 0..n_samples {
        let (mut rng, _) = pair_rng(seed, k);
        let Some(xi) =
            crate::field::sample_domain_point(field, &center, 0.5, 0.0, &mut rng, 20_000)
        else {
            report.note(format!("sampler exhausted at sample {k}"));
            break;
        };
        let lambda: f64 = rng.gen_range(-2.0..2.0);
        let shifted = &xi + &vhat * lambda;
        if !field.in_domain(&shifted) {
            report.note(format!("sample {k}: translate left the domain, skipped"));
            continue;
        }
        report.n_samples += 1;
        let ta = integrate(field, &xi, horizon, cfg);
        let tb = integrate(field, &shifted, horizon, cfg);
        let (ta, tb) = match (ta, tb) {
            (Ok(a), Ok(b))
                if a.status() == TrajectoryStatus::Completed
                    && b.status() == TrajectoryStatus::Completed =>
            {
                (a, b)
            }
            (a, b) => {
                let msg = format!(
                    "statuses {:?} / {:?}",
                    a.map(|t| t.status()),
                    b.map(|t| t.status())
                );
                report.witness(Witness {
                    sample: k,
                    kind: format!("integration-failure ({msg})"),
                    time: None,
                    measured: f64::NAN,
                    xi1: Some(vec_of(&xi)),
                    xi2: Some(vec_of(&shifted)),
                });
                continue;
            }
        };
        let scale = state_scale(&[&ta, &tb]);
        let tol = 100.0 * (cfg.rel_tol * scale + cfg.abs_tol);
        let mut worst = (0.0f64, 0.0f64);
        for &t in &merged_times(&ta, &tb) {
            let dev = (tb.sample(t) - ta.sample(t) - &vhat * lambda).amax();
            if dev > worst.0 {
                worst = (dev, t);
            }
        }
        report.observe(worst.0);
        if worst.0 > tol {
            report.witness(Witness {
                sample: k,
                kind: "translation-discrepancy".into(),
                time: Some(worst.1),
                measured: worst.0,
                xi1: Some(vec_of(&xi)),
                xi2: Some(vec_of(&shifted)),
            });
        }
    }
    if report.n_samples == 0 {
        report.witness(Witness {
            sample: 0,
            kind: "no-samples".into(),
            time: None,
            measured: f64::NAN,
            xi1: None,
            xi2: None,
        });
    }
    report
}

/// Boundedness diagnostic for `π_v x(t)` along a stored trajectory.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct BoundedModuloV {
    pub bounded: bool,
    pub sup_projected: f64,
    /// Relative growth of the running sup over the second half of the horizon.
    pub growth_fraction: f64,
    /// Least-squares slope of `|π_v x(t)|` over the second half.
    pub trend_slope: f64,
}

/// Computes `sup_t |π_v x(t)|` over the stored states and flags the trajectory
/// as bounded when the running sup grows by less than 1% over the second half
/// of the horizon.
pub fn bounded_modulo_v(traj: &Trajectory, v: &DVector<f64>) -> BoundedModuloV {
    let proj = Projector::new(v).expect("nonzero direction");
    let norms: Vec<f64> = traj.states().iter().map(|x| proj.project(x).norm()).collect();
    let times = traj.times();
    let t_mid = 0.5 * (traj.start_time() + traj.end_time());
    let mut sup_first: f64 = 0.0;
    let mut sup_all: f64 = 0.0;
    for (&t, &p) in times.iter().zip(&norms) {
        sup_all = sup_all.max(p);
        if t <= t_mid {
            sup_first = sup_first.max(p);
        }
    }
    let growth = if sup_all > 0.0 { (sup_all - sup_first) / sup_all } else { 0.0 };
    // Linear trend of |π_v x| over the second half.
    let tail: Vec<(f64, f64)> = times
        .iter()
        .zip(&norms)
        .filter(|(&t, _)| t >= t_mid)
        .map(|(&t, &p)| (t, p))
        .collect();
    let trend_slope = if tail.len() >= 2 {
        let n = tail.len() as f64;
        let mean_t = tail.iter().map(|p| p.0).sum::<f64>() / n;
        let mean_p = tail.iter().map(|p| p.1).sum::<f64>() / n;
        let cov: f64 = tail.iter().map(|p| (p.0 - mean_t) * (p.1 - mean_p)).sum();
        let var: f64 = tail.iter().map(|p| (p.0 - mean_t).powi(2)).sum();
        if var > 0.0 {
            cov / var
        } else {
            0.0
        }
    } else {
        0.0
    };
    BoundedModuloV { bounded: growth < 0.01, sup_projected: sup_all, growth_fraction: growth, trend_slope }
}
