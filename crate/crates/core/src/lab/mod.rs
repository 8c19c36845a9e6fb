//! Executable convergence checks.
//!
//! Each procedure here turns one statement of the convergence theory into a
//! sampled, seeded, reproducible numerical experiment over integrated
//! trajectories: order preservation of the flow, monotonicity of the gauge
//! `V` along pairs, exactness of flow translation, boundedness modulo `v`,
//! existence/uniqueness of the projected equilibrium, agreement between the
//! species and extent pictures, and convergence of whole stoichiometric
//! classes to the certified limit.

mod consistency;
mod equilibrium;
mod flow;
mod report;

pub use consistency::{
    degenerate_case_convergence, stoichiometric_class_convergence,
    verify_extent_species_consistency,
};
pub use equilibrium::{
    find_extent_equilibrium, find_projected_equilibrium, verify_affine_orbit,
    verify_unique_equilibrium,
};
pub use flow::{
    bounded_modulo_v, order_preservation_pair, verify_order_preservation,
    verify_translation_flow, verify_v_gauge_decrease, verify_v_gauge_increase_reverse,
    BoundedModuloV, OrderPairOutcome,
};
pub use report::{EquilibriumCertificate, VerificationReport, Witness};

use crate::field::{sample_domain_point, VectorField};
use crate::ode::{Trajectory, TrajectoryStatus};
use crate::order::OrthantOrder;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum LabError {
    #[error("integration failed ({context}): status {status:?}")]
    Integration { context: String, status: TrajectoryStatus },
    #[error("integrator rejected the problem: {0}")]
    Setup(#[from] crate::ode::OdeError),
    #[error("no stall within the step budget (status {status:?})")]
    NoStall { status: TrajectoryStatus },
    #[error("Newton polish diverged: residual {residual:.3e} after {iterations} iterations")]
    NewtonDiverged { residual: f64, iterations: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("initial state {index} is outside the stoichiometric class (residual {residual:.3e})")]
    OutsideClass { index: usize, residual: f64 },
    #[error("right kernel is not spanned by a positive unit vector")]
    NoKernel,
}

/// A pair of domain points together with the seed that generated it.
#[derive(Debug, Clone)]
pub struct PairSample {
    pub xi1: DVector<f64>,
    pub xi2: DVector<f64>,
    pub seed: u64,
}

const SAMPLE_RADIUS: f64 = 0.5;
const SAMPLE_TRIES: usize = 20_000;

pub(crate) fn pair_rng(base_seed: u64, index: usize) -> (ChaCha8Rng, u64) {
    let seed = base_seed.wrapping_add(index as u64);
    (ChaCha8Rng::seed_from_u64(seed), seed)
}

/// Draws `xi2` uniformly from a feasible box around the origin and sets
/// `xi1 = xi2 + δ` with `δ` strictly inside the cone, shrinking `δ` until the
/// translate stays feasible.
pub(crate) fn sample_ordered_pair<F: VectorField + ?Sized>(
    field: &F,
    order: &OrthantOrder,
    rng: &mut ChaCha8Rng,
) -> Option<(DVector<f64>, DVector<f64>)> {
    let center = DVector::zeros(field.dim());
    for _ in 0..50 {
        let xi2 = sample_domain_point(field, &center, SAMPLE_RADIUS, 0.0, rng, SAMPLE_TRIES)?;
        let scale: f64 = rng.gen_range(0.1..0.4);
        let mut delta = DVector::from_fn(field.dim(), |i, _| {
            order.signs()[i] * rng.gen_range(0.1..1.0) * scale
        });
        for _ in 0..8 {
            let xi1 = &xi2 + &delta;
            if field.in_domain(&xi1) {
                return Some((xi1, xi2));
            }
            delta *= 0.5;
        }
    }
    None
}

/// Draws an unconstrained pair of feasible points.
pub(crate) fn sample_free_pair<F: VectorField + ?Sized>(
    field: &F,
    rng: &mut ChaCha8Rng,
) -> Option<(DVector<f64>, DVector<f64>)> {
    let center = DVector::zeros(field.dim());
    let a = sample_domain_point(field, &center, SAMPLE_RADIUS, 0.0, rng, SAMPLE_TRIES)?;
    let b = sample_domain_point(field, &center, SAMPLE_RADIUS, 0.0, rng, SAMPLE_TRIES)?;
    Some((a, b))
}

/// Union of the stored time grids of two trajectories, restricted to their
/// common time range.
pub(crate) fn merged_times(a: &Trajectory, b: &Trajectory) -> Vec<f64> {
    let t_end = a.end_time().min(b.end_time());
    let mut ts: Vec<f64> = a
        .times()
        .iter()
        .chain(b.times().iter())
        .copied()
        .filter(|&t| t <= t_end)
        .collect();
    ts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    ts.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * (1.0 + y.abs()));
    ts
}

/// `max(1, sup_t |x(t)|_inf)` over the stored states of the given trajectories.
pub(crate) fn state_scale(trajs: &[&Trajectory]) -> f64 {
    let mut s: f64 = 1.0;
    for tr in trajs {
        for x in tr.states() {
            s = s.max(x.amax());
        }
    }
    s
}

pub(crate) fn vec_of(x: &DVector<f64>) -> Vec<f64> {
    x.iter().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use crate::extent::ExtentSystem;
    use crate::field::{ConstantField, sample_domain_point};
    use crate::linalg::Projector;
    use crate::ode::integrate;

    fn cycle_system() -> ExtentSystem {
        ExtentSystem::new(builtin::futile_cycle(), builtin::canonical_sigma()).unwrap()
    }

    fn cycle_order(sys: &ExtentSystem) -> OrthantOrder {
        OrthantOrder::cooperative(sys.kernel_direction().unwrap()).unwrap()
    }

    fn quick_cfg() -> crate::ode::IntegratorConfig {
        crate::ode::IntegratorConfig::default()
    }

    #[test]
    fn order_preserved_on_the_cycle() {
        let sys = cycle_system();
        let order = cycle_order(&sys);
        let report = verify_order_preservation(&sys, &order, 10, 5.0, &quick_cfg(), 42);
        assert!(report.verdict, "{report:?}");
        assert_eq!(report.n_samples, 10);
    }

    #[test]
    fn equal_pair_skips_the_strict_relation() {
        let sys = cycle_system();
        let order = cycle_order(&sys);
        let x = DVector::zeros(4);
        let outcome =
            order_preservation_pair(&sys, &order, &x, &x, 2.0, &quick_cfg()).unwrap();
        assert!(!outcome.strong_required);
        assert!(outcome.weak_holds());
        assert!(outcome.strong_holds());
    }

    #[test]
    fn rotation_field_breaks_order_preservation() {
        let f = builtin::rotation_field();
        let order =
            OrthantOrder::cooperative(DVector::from_vec(vec![1.0, 1.0])).unwrap();
        let report = verify_order_preservation(&f, &order, 5, 4.0, &quick_cfg(), 42);
        assert!(!report.verdict);
        assert!(!report.witnesses.is_empty());
    }

    #[test]
    fn gauge_decreases_along_cycle_pairs() {
        let sys = cycle_system();
        let order = cycle_order(&sys);
        let report = verify_v_gauge_decrease(&sys, &order, 20, 10.0, &quick_cfg(), 42);
        assert!(report.verdict, "{report:?}");
        assert_eq!(report.n_samples, 20);
    }

    #[test]
    fn gauge_increases_under_time_reversal() {
        let sys = cycle_system();
        let order = cycle_order(&sys);
        let report =
            verify_v_gauge_increase_reverse(&sys, &order, 5, 10.0, &quick_cfg(), 42);
        assert!(report.verdict, "{report:?}");
    }

    #[test]
    fn translation_flow_holds_on_the_cycle() {
        let sys = cycle_system();
        let v = sys.kernel_direction().unwrap();
        let report = verify_translation_flow(&sys, &v, 5, 10.0, &quick_cfg(), 42);
        assert!(report.verdict, "{report:?}");
    }

    #[test]
    fn translation_flow_fails_for_the_identity_field() {
        use nalgebra::DMatrix;
        let f = crate::field::LinearField::new(DMatrix::identity(2, 2));
        let v = DVector::from_vec(vec![1.0, 0.0]);
        let report = verify_translation_flow(&f, &v, 5, 3.0, &quick_cfg(), 42);
        assert!(!report.verdict);
    }

    #[test]
    fn constant_projection_is_bounded() {
        let f = ConstantField::new(DVector::from_vec(vec![2.0, 0.0]));
        let v = DVector::from_vec(vec![1.0, 0.0]);
        let traj = integrate(&f, &DVector::from_vec(vec![0.0, 0.3]), 20.0, &quick_cfg()).unwrap();
        let check = bounded_modulo_v(&traj, &v);
        assert!(check.bounded, "{check:?}");
        let proj = Projector::new(&v).unwrap();
        let expected = proj.project(&DVector::from_vec(vec![0.0, 0.3])).norm();
        assert!((check.sup_projected - expected).abs() < 1e-9);
    }

    #[test]
    fn linear_growth_off_v_is_unbounded() {
        let f = ConstantField::new(DVector::from_vec(vec![1.0, 2.0]));
        let v = DVector::from_vec(vec![1.0, 0.0]);
        let traj = integrate(&f, &DVector::zeros(2), 20.0, &quick_cfg()).unwrap();
        let check = bounded_modulo_v(&traj, &v);
        assert!(!check.bounded, "{check:?}");
        assert!(check.trend_slope > 1.0);
    }

    #[test]
    fn cycle_extent_trajectory_is_bounded_modulo_v() {
        let sys = cycle_system();
        let v = sys.kernel_direction().unwrap();
        let traj = integrate(&sys, &DVector::zeros(4), 50.0, &quick_cfg()).unwrap();
        let check = bounded_modulo_v(&traj, &v);
        assert!(check.bounded, "{check:?}");
    }

    #[test]
    fn certified_equilibrium_matches_the_closed_form() {
        let sys = cycle_system();
        let cert = find_extent_equilibrium(&sys, &DVector::zeros(4), &quick_cfg()).unwrap();
        // Steady flux of the unit-rate cycle from (1,0,1,1,0,0): all four net
        // rates equal (7 − √41)/4.
        let flux = (7.0 - 41.0f64.sqrt()) / 4.0;
        let zeta = cert.zeta.clone().unwrap();
        let expected = [
            (41.0f64.sqrt() - 5.0) / 4.0, // P
            (41.0f64.sqrt() - 5.0) / 4.0, // Q
            1.0 - flux,                   // E
            1.0 - flux,                   // F
            flux,                         // C
            flux,                         // D
        ];
        for (a, b) in zeta.iter().zip(expected) {
            assert!((a - b).abs() < 1e-8, "zeta {zeta:?}");
        }
        assert!((cert.r - 2.0 * flux).abs() < 1e-8);
        assert!(cert.projected_residual <= 1e-10);
        // Flux equality: all components of f(ξ) agree.
        let f = sys.eval(&DVector::from_vec(cert.xi.clone()));
        for i in 0..4 {
            assert!((f[i] - flux).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_field_certificate_is_the_projected_start() {
        let f = ConstantField::new(DVector::zeros(3));
        let v = DVector::from_vec(vec![1.0, 1.0, 1.0]);
        let x0 = DVector::from_vec(vec![1.0, 0.0, -1.0]);
        let cert = find_projected_equilibrium(&f, &v, &x0, &quick_cfg()).unwrap();
        let proj = Projector::new(&v).unwrap();
        let expected = proj.project(&x0);
        let xi = DVector::from_vec(cert.xi.clone());
        assert!((xi - expected).amax() < 1e-9);
        assert_eq!(cert.r, 0.0);
        assert_eq!(cert.newton_iterations, 0);
    }

    #[test]
    fn certified_zeta_respects_conservation() {
        let sys = cycle_system();
        let cert = find_extent_equilibrium(&sys, &DVector::zeros(4), &quick_cfg()).unwrap();
        let zeta = DVector::from_vec(cert.zeta.unwrap());
        let sigma = builtin::canonical_sigma();
        for c in [
            [1.0, 1.0, 0.0, 0.0, 1.0, 1.0],
            [0.0, 0.0, 1.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0, 0.0, 1.0],
        ] {
            let cv = DVector::from_vec(c.to_vec());
            assert!((cv.dot(&zeta) - cv.dot(&sigma)).abs() < 1e-9);
        }
    }

    #[test]
    fn multistart_equilibria_agree() {
        let sys = cycle_system();
        let v = sys.kernel_direction().unwrap();
        let proj = Projector::new(&v).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let center = DVector::zeros(4);
        let starts: Vec<DVector<f64>> = (0..3)
            .map(|_| {
                let x = sample_domain_point(&sys, &center, 0.5, 0.0, &mut rng, 20_000).unwrap();
                proj.project(&x)
            })
            .collect();
        let (report, certs) = verify_unique_equilibrium(&sys, &v, &starts, &quick_cfg());
        assert!(report.verdict, "{report:?}");
        assert_eq!(certs.len(), 3);
        assert!(certs[0].agreement_diameter.unwrap() <= 1e-6);
    }

    #[test]
    fn bistable_projection_fails_uniqueness() {
        let f = builtin::bistable_field();
        let v = DVector::from_vec(vec![0.0, 1.0]);
        let starts =
            vec![DVector::from_vec(vec![0.5, 0.0]), DVector::from_vec(vec![-0.5, 0.0])];
        let (report, certs) = verify_unique_equilibrium(&f, &v, &starts, &quick_cfg());
        assert!(!report.verdict);
        assert!(report.witnesses.iter().any(|w| w.kind == "equilibria-disagree"));
        assert_eq!(certs.len(), 2);
    }

    #[test]
    fn single_start_is_vacuously_unique() {
        let sys = cycle_system();
        let v = sys.kernel_direction().unwrap();
        let (report, _) =
            verify_unique_equilibrium(&sys, &v, &[DVector::zeros(4)], &quick_cfg());
        assert!(report.verdict, "{report:?}");
    }

    #[test]
    fn affine_orbit_from_certified_equilibrium() {
        let sys = cycle_system();
        let cert = find_extent_equilibrium(&sys, &DVector::zeros(4), &quick_cfg()).unwrap();
        let xi = DVector::from_vec(cert.xi);
        let report = verify_affine_orbit(&sys, &xi, 5.0, &quick_cfg());
        assert!(report.verdict, "{report:?}");
        assert!(report.max_violation <= 1e-7);
    }

    #[test]
    fn extent_and_species_pictures_agree() {
        let report = verify_extent_species_consistency(
            &builtin::futile_cycle(),
            &builtin::canonical_sigma(),
            &DVector::zeros(4),
            20.0,
            &quick_cfg(),
        )
        .unwrap();
        assert!(report.verdict, "{report:?}");
    }

    #[test]
    fn consistency_against_the_exponential_closed_form() {
        // A -> B at unit rate: S_A(t) = e^{-t}.
        let net = builtin::a_to_b();
        let sigma = DVector::from_vec(vec![1.0, 0.0]);
        let report = verify_extent_species_consistency(
            &net,
            &sigma,
            &DVector::zeros(1),
            5.0,
            &quick_cfg(),
        )
        .unwrap();
        assert!(report.verdict, "{report:?}");
        let species = crate::extent::SpeciesSystem::new(net);
        let traj = integrate(&species, &sigma, 5.0, &quick_cfg()).unwrap();
        for (&t, s) in traj.times().iter().zip(traj.states()) {
            assert!((s[0] - (-t).exp()).abs() < 1e-7);
        }
    }

    #[test]
    fn class_members_share_the_limit() {
        let net = builtin::futile_cycle();
        let sigma = builtin::canonical_sigma();
        let gamma = net.gamma_f64();
        let a1 = DVector::from_vec(vec![0.1, 0.05, 0.02, 0.0]);
        let a2 = DVector::from_vec(vec![0.0, -0.02, -0.05, -0.08]);
        let rho1 = &sigma + &gamma * a1;
        let rho2 = &sigma + &gamma * a2;
        assert!(rho1.iter().all(|&v| v >= 0.0));
        assert!(rho2.iter().all(|&v| v >= 0.0));
        let rhos = vec![sigma.clone(), rho1, rho2];
        let (report, cert) =
            stoichiometric_class_convergence(&net, &sigma, &rhos, &quick_cfg()).unwrap();
        assert!(report.verdict, "{report:?}");
        assert!(cert.zeta.is_some());
    }

    #[test]
    fn class_membership_is_enforced() {
        let net = builtin::futile_cycle();
        let sigma = builtin::canonical_sigma();
        // Violates the conservation functional (1,1,0,0,1,1).
        let mut rho = sigma.clone();
        rho[0] += 0.5;
        let err =
            stoichiometric_class_convergence(&net, &sigma, &[rho], &quick_cfg()).unwrap_err();
        assert!(matches!(err, LabError::OutsideClass { index: 0, .. }), "{err}");
    }

    #[test]
    fn degenerate_first_enzyme_absent() {
        let net = builtin::futile_cycle();
        let sigma = DVector::from_vec(vec![0.3, 0.7, 0.0, 1.0, 0.0, 0.0]);
        let report = degenerate_case_convergence(&net, &sigma, &quick_cfg()).unwrap();
        assert!(report.verdict, "{report:?}");
    }

    #[test]
    fn degenerate_second_enzyme_absent() {
        let net = builtin::futile_cycle();
        let sigma = DVector::from_vec(vec![0.7, 0.3, 1.0, 0.0, 0.0, 0.0]);
        let report = degenerate_case_convergence(&net, &sigma, &quick_cfg()).unwrap();
        assert!(report.verdict, "{report:?}");
    }

    #[test]
    fn degenerate_with_both_enzymes_absent_stalls_immediately() {
        let net = builtin::futile_cycle();
        let sigma = DVector::from_vec(vec![0.5, 0.5, 0.0, 0.0, 0.0, 0.0]);
        let report = degenerate_case_convergence(&net, &sigma, &quick_cfg()).unwrap();
        assert!(report.verdict, "{report:?}");
    }

    #[test]
    fn degenerate_requires_a_missing_enzyme_pair() {
        let net = builtin::futile_cycle();
        let err =
            degenerate_case_convergence(&net, &builtin::canonical_sigma(), &quick_cfg())
                .unwrap_err();
        assert!(matches!(err, LabError::Precondition(_)));
    }

    #[test]
    fn projection_commutes_with_the_flow() {
        // π_v ∘ φ_t = φ̃_t ∘ π_v along a cycle trajectory: project the full
        // flow and integrate the projected system, then compare.
        use crate::field::ProjectedField;
        let sys = cycle_system();
        let v = sys.kernel_direction().unwrap();
        let proj = Projector::new(&v).unwrap();
        let cfg = quick_cfg();
        let x0 = DVector::from_vec(vec![0.05, 0.02, 0.0, -0.02]);
        assert!(crate::field::VectorField::in_domain(&sys, &x0));
        let full = integrate(&sys, &x0, 20.0, &cfg).unwrap();
        let projected_field = ProjectedField::new(&sys, &v);
        let reduced = integrate(&projected_field, &proj.project(&x0), 20.0, &cfg).unwrap();
        let scale = state_scale(&[&full, &reduced]);
        let tol = 10.0 * (cfg.rel_tol * scale + cfg.abs_tol);
        for &t in &merged_times(&full, &reduced) {
            let lhs = proj.project(&full.sample(t));
            let rhs = reduced.sample(t);
            assert!((lhs - &rhs).amax() <= tol, "commutation gap at t = {t}");
        }
    }

    #[test]
    fn stall_detection_on_the_projected_cycle() {
        use crate::field::ProjectedField;
        use crate::ode::detect_equilibrium;
        let sys = cycle_system();
        let v = sys.kernel_direction().unwrap();
        let projected = ProjectedField::new(&sys, &v);
        let cfg = quick_cfg();
        let traj = integrate(&projected, &DVector::zeros(4), 120.0, &cfg).unwrap();
        let (t_star, x_star) = detect_equilibrium(&traj, &projected, &cfg).expect("stall");
        assert!(t_star < 120.0 - cfg.stall_window);
        assert!(projected.eval(&x_star).norm() <= cfg.stall_threshold);
    }
}
