//! End-to-end acceptance suite on the reference cycle instance
//! (all rate constants 1, σ = (1,0,1,1,0,0), seed 42) plus synthetic fields.
//! Each criterion prints one PASS line; a failed assertion marks it FAIL.

use monocrn_core::builtin;
use monocrn_core::crn::parse_network;
use monocrn_core::extent::{
    analyze_hypotheses, check_cooperativity, check_irreducibility, check_translation_invariance,
    ExtentSystem,
};
use monocrn_core::field::{sample_domain_point, LinearField};
use monocrn_core::lab::{
    degenerate_case_convergence, stoichiometric_class_convergence, verify_affine_orbit,
    verify_extent_species_consistency, verify_order_preservation, verify_translation_flow,
    verify_unique_equilibrium, verify_v_gauge_decrease, verify_v_gauge_increase_reverse,
};
use monocrn_core::linalg::{positive_kernel_unit_vector, Projector, RationalMatrix};
use monocrn_core::ode::{integrate, IntegratorConfig, TrajectoryStatus};
use monocrn_core::order::OrthantOrder;
use monocrn_core::VectorField;
use nalgebra::{DMatrix, DVector};
use num::rational::BigRational;
use num::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

const SEED: u64 = 42;

fn cycle_system() -> ExtentSystem {
    ExtentSystem::new(builtin::futile_cycle(), builtin::canonical_sigma()).unwrap()
}

fn cfg() -> IntegratorConfig {
    IntegratorConfig::default()
}

fn pass(criterion: &str, started: Instant, detail: String) {
    println!("ACCEPTANCE {criterion}: PASS ({:.2}s) {detail}", started.elapsed().as_secs_f64());
}

fn span_contains(basis: &[Vec<BigRational>], c: &[i64]) -> bool {
    let dim = basis[0].len();
    let base = RationalMatrix::new(
        basis.len(),
        dim,
        basis.iter().flatten().cloned().collect(),
    );
    let r0 = base.rank();
    let mut rows: Vec<Vec<BigRational>> = basis.to_vec();
    rows.push(c.iter().map(|&v| BigRational::from_integer(v.into())).collect());
    let ext = RationalMatrix::new(rows.len(), dim, rows.into_iter().flatten().collect());
    ext.rank() == r0
}

#[test]
fn criterion_01_structural() {
    let t0 = Instant::now();
    let net = builtin::futile_cycle();
    let gamma = net.gamma_rational();
    assert_eq!(gamma.rank(), 3);

    let kernel = gamma.right_kernel_basis();
    assert_eq!(kernel.len(), 1);
    let ones: Vec<BigRational> = (0..4).map(|_| BigRational::from_integer(1.into())).collect();
    assert_eq!(kernel[0], ones);

    let v = positive_kernel_unit_vector(&gamma).expect("positive unit kernel vector");
    for i in 0..4 {
        assert_eq!(v[i], 0.5);
    }

    let left = net.conservation_laws();
    assert_eq!(left.len(), 3);
    let gamma_t = gamma.transpose();
    for c in &left {
        assert!(gamma_t.mul_vec(c).iter().all(|q| q.is_zero()));
    }
    for c in [[1i64, 1, 0, 0, 1, 1], [0, 0, 1, 0, 1, 0], [0, 0, 0, 1, 0, 1]] {
        assert!(span_contains(&left, &c), "functional {c:?} missing from the left kernel");
    }
    pass("01 structural", t0, format!("rank 3, kernel (1,1,1,1), v = {:?}", v.as_slice()));
}

#[test]
fn criterion_02_hypothesis_suite() {
    let t0 = Instant::now();
    let sys = cycle_system();
    let v = sys.kernel_direction().unwrap();

    let trans = check_translation_invariance(&sys, &v, 200, SEED);
    assert!(trans.verdict);
    assert_eq!(trans.samples, 200);
    assert!(
        trans.max_jacobian_residual <= 1e-10,
        "max |J(x)v| = {}",
        trans.max_jacobian_residual
    );

    let coop = check_cooperativity(&sys, 200, SEED + 1);
    assert!(coop.verdict, "{coop:?}");
    assert_eq!(coop.samples, 200);

    let traj = integrate(&sys, &DVector::zeros(4), 50.0, &cfg()).unwrap();
    let irred = check_irreducibility(&sys, &traj, 200);
    assert!(irred.verdict, "{irred:?}");
    assert!(irred.fraction >= 0.99);

    // Outside Σ (E + C = 0) irreducibility must fail.
    let sigma_out = DVector::from_vec(vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
    let sys_out = ExtentSystem::new(builtin::futile_cycle(), sigma_out).unwrap();
    let traj_out = integrate(&sys_out, &DVector::zeros(4), 50.0, &cfg()).unwrap();
    let irred_out = check_irreducibility(&sys_out, &traj_out, 200);
    assert!(!irred_out.verdict, "{irred_out:?}");

    let report = analyze_hypotheses(&sys, 50.0, 200, &cfg(), SEED).unwrap();
    assert!(report.all_hold());
    pass(
        "02 hypothesis suite",
        t0,
        format!(
            "max|Jv| {:.1e}, coop worst {:.1e}, irreducible fraction {:.3} (fails outside Σ: {:.3})",
            trans.max_jacobian_residual, coop.worst_entry, irred.fraction, irred_out.fraction
        ),
    );
}

#[test]
fn criterion_03_flow_translation_invariance() {
    let t0 = Instant::now();
    let sys = cycle_system();
    let v = sys.kernel_direction().unwrap();
    let report = verify_translation_flow(&sys, &v, 20, 20.0, &cfg(), SEED);
    assert!(report.verdict, "{report:?}");
    assert!(report.n_samples >= 20, "only {} samples ran", report.n_samples);
    assert!(report.max_violation <= 1e-5, "max discrepancy {}", report.max_violation);
    pass(
        "03 flow translation invariance",
        t0,
        format!("max discrepancy {:.2e} over {} samples", report.max_violation, report.n_samples),
    );
}

#[test]
fn criterion_04_order_preservation() {
    let t0 = Instant::now();
    let sys = cycle_system();
    let order = OrthantOrder::cooperative(sys.kernel_direction().unwrap()).unwrap();
    let report = verify_order_preservation(&sys, &order, 100, 20.0, &cfg(), SEED);
    assert!(report.verdict, "{report:?}");
    assert_eq!(report.n_samples, 100);
    pass(
        "04 order preservation",
        t0,
        format!("100 ordered pairs, worst weak excess {:.2e}", report.max_violation),
    );
}

#[test]
fn criterion_05_v_gauge_decrease() {
    let t0 = Instant::now();
    let sys = cycle_system();
    let order = OrthantOrder::cooperative(sys.kernel_direction().unwrap()).unwrap();
    let report = verify_v_gauge_decrease(&sys, &order, 100, 20.0, &cfg(), SEED);
    assert!(report.verdict, "{report:?}");
    assert_eq!(report.n_samples, 100);
    assert!(
        report.notes.iter().any(|n| n == "span pairs 5, generic pairs 95"),
        "unexpected pair split: {:?}",
        report.notes
    );
    pass(
        "05 v-gauge decrease",
        t0,
        "95 generic pairs with gap >= 1e-7, 5 span pairs constant to 1e-9".to_string(),
    );
}

#[test]
fn criterion_06_v_gauge_increase_in_reverse_time() {
    let t0 = Instant::now();
    let sys = cycle_system();
    let order = OrthantOrder::cooperative(sys.kernel_direction().unwrap()).unwrap();
    let report = verify_v_gauge_increase_reverse(&sys, &order, 20, 20.0, &cfg(), SEED);
    assert!(report.verdict, "{report:?}");
    assert_eq!(report.n_samples, 20);
    pass(
        "06 v-gauge increase (reverse time)",
        t0,
        format!("20 pairs, worst downtick {:.2e}", report.max_violation),
    );
}

#[test]
fn criterion_07_projected_equilibrium_unique() {
    let t0 = Instant::now();
    let sys = cycle_system();
    let v = sys.kernel_direction().unwrap();
    let proj = Projector::new(&v).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let center = DVector::zeros(4);
    let starts: Vec<DVector<f64>> = (0..10)
        .map(|_| {
            let x = sample_domain_point(&sys, &center, 0.5, 0.0, &mut rng, 20_000)
                .expect("feasible start");
            proj.project(&x)
        })
        .collect();
    let (report, certs) = verify_unique_equilibrium(&sys, &v, &starts, &cfg());
    assert!(report.verdict, "{report:?}");
    assert_eq!(certs.len(), 10);
    let diameter = certs[0].agreement_diameter.unwrap();
    assert!(diameter <= 1e-6, "diameter {diameter}");

    // f(ξ) lies on the span of v: the scaled components f_i / v_i agree.
    let xi = DVector::from_vec(certs[0].xi.clone());
    let f = sys.eval(&xi);
    let ratios: Vec<f64> = (0..4).map(|i| f[i] / v[i]).collect();
    let mean: f64 = ratios.iter().sum::<f64>() / 4.0;
    for r in &ratios {
        assert!((r - mean).abs() <= 1e-8 * mean.abs(), "flux ratios {ratios:?}");
    }

    // Affine orbit from the certified equilibrium over [0, 5].
    let orbit = verify_affine_orbit(&sys, &xi, 5.0, &cfg());
    assert!(orbit.verdict, "{orbit:?}");
    assert!(orbit.max_violation <= 1e-7);
    pass(
        "07 projected equilibrium (existence, uniqueness, affine orbit)",
        t0,
        format!(
            "10 starts agree to {:.2e}, affine-orbit deviation {:.2e}",
            diameter, orbit.max_violation
        ),
    );
}

#[test]
fn criterion_08_extent_species_consistency() {
    let t0 = Instant::now();
    let net = builtin::futile_cycle();
    let sigma = builtin::canonical_sigma();
    let starts = [
        DVector::zeros(4),
        DVector::from_vec(vec![0.1, 0.05, 0.02, 0.0]),
        DVector::from_vec(vec![0.0, -0.02, -0.05, -0.08]),
    ];
    let mut worst: f64 = 0.0;
    for x0 in &starts {
        let report =
            verify_extent_species_consistency(&net, &sigma, x0, 50.0, &cfg()).unwrap();
        assert!(report.verdict, "{report:?}");
        assert!(report.max_violation <= 1e-5, "deviation {}", report.max_violation);
        worst = worst.max(report.max_violation);
    }
    pass(
        "08 extent/species consistency",
        t0,
        format!("3 starts over horizon 50, worst |S - σ - Γx| = {worst:.2e}"),
    );
}

#[test]
fn criterion_09_stoichiometric_class_convergence() {
    let t0 = Instant::now();
    let net = builtin::futile_cycle();
    let sigma = builtin::canonical_sigma();
    let gamma = net.gamma_f64();
    let rho1 = &sigma + &gamma * DVector::from_vec(vec![0.1, 0.05, 0.02, 0.0]);
    let rho2 = &sigma + &gamma * DVector::from_vec(vec![0.0, -0.02, -0.05, -0.08]);
    assert!(rho1.iter().all(|&x| x >= 0.0) && rho2.iter().all(|&x| x >= 0.0));
    let rhos = vec![sigma.clone(), rho1, rho2];
    let (report, cert) = stoichiometric_class_convergence(&net, &sigma, &rhos, &cfg()).unwrap();
    assert!(report.verdict, "{report:?}");
    assert!(report.max_violation <= 1e-5);

    let zeta = DVector::from_vec(cert.zeta.clone().unwrap());
    for c in [
        [1.0, 1.0, 0.0, 0.0, 1.0, 1.0],
        [0.0, 0.0, 1.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0, 0.0, 1.0],
    ] {
        let cv = DVector::from_vec(c.to_vec());
        let drift = (cv.dot(&zeta) - cv.dot(&sigma)).abs();
        assert!(drift <= 1e-9, "conservation drift {drift}");
    }

    // The certified limit also agrees with the frozen golden data.
    let golden = builtin::golden_futile_cycle();
    let gz = DVector::from_vec(golden.zeta.clone());
    assert!((&zeta - &gz).amax() <= 1e-6);
    pass(
        "09 stoichiometric class convergence",
        t0,
        format!("3 class members reach ζ within {:.2e}", report.max_violation),
    );
}

#[test]
fn criterion_10_degenerate_case() {
    let t0 = Instant::now();
    let net = builtin::futile_cycle();
    // First enzyme pair absent: E + C = 0, substrate P must be produced
    // monotonically.
    let sigma = DVector::from_vec(vec![0.3, 0.7, 0.0, 1.0, 0.0, 0.0]);
    let report = degenerate_case_convergence(&net, &sigma, &cfg()).unwrap();
    assert!(report.verdict, "{report:?}");
    // Mirror case: F + D = 0, Q must be nondecreasing.
    let sigma_m = DVector::from_vec(vec![0.7, 0.3, 1.0, 0.0, 0.0, 0.0]);
    let report_m = degenerate_case_convergence(&net, &sigma_m, &cfg()).unwrap();
    assert!(report_m.verdict, "{report_m:?}");
    pass(
        "10 degenerate (single-enzyme) case",
        t0,
        format!(
            "P nondecreasing (worst step drop {:.2e}) and species stall at an equilibrium",
            report.max_violation
        ),
    );
}

#[test]
fn criterion_11_negative_controls() {
    let t0 = Instant::now();
    // Rotation destroys order preservation.
    let rotation = builtin::rotation_field();
    let order = OrthantOrder::cooperative(DVector::from_vec(vec![1.0, 1.0])).unwrap();
    let rot_report = verify_order_preservation(&rotation, &order, 10, 5.0, &cfg(), SEED);
    assert!(!rot_report.verdict);
    assert!(!rot_report.witnesses.is_empty());

    // The identity field is not translation invariant along e1.
    let identity = LinearField::new(DMatrix::identity(2, 2));
    let e1 = DVector::from_vec(vec![1.0, 0.0]);
    let id_check = check_translation_invariance(&identity, &e1, 50, SEED);
    assert!(!id_check.verdict);
    assert!((id_check.max_jacobian_residual - 1.0).abs() < 1e-12);

    // A bistable projected system has two distinct certified equilibria.
    let bistable = builtin::bistable_field();
    let v = DVector::from_vec(vec![0.0, 1.0]);
    let starts = vec![DVector::from_vec(vec![0.5, 0.0]), DVector::from_vec(vec![-0.5, 0.0])];
    let (uniq_report, certs) = verify_unique_equilibrium(&bistable, &v, &starts, &cfg());
    assert!(!uniq_report.verdict);
    assert!(uniq_report.witnesses.iter().any(|w| w.kind == "equilibria-disagree"));
    assert_eq!(certs.len(), 2);
    pass(
        "11 negative controls",
        t0,
        format!(
            "rotation: {} witnesses; identity |Jv| = {}; bistable equilibria {:.3} apart",
            rot_report.witnesses.len(),
            id_check.max_jacobian_residual,
            uniq_report.max_violation
        ),
    );
}

#[test]
fn criterion_12_integration_engine() {
    let t0 = Instant::now();
    let decay = LinearField::new(DMatrix::from_row_slice(1, 1, &[-1.0]));
    let x0 = DVector::from_vec(vec![1.0]);

    // Endpoint accuracy at default tolerances.
    let traj = integrate(&decay, &x0, 1.0, &cfg()).unwrap();
    assert_eq!(traj.status(), TrajectoryStatus::Completed);
    let endpoint_err = (traj.final_state()[0] - (-1.0f64).exp()).abs();
    assert!(endpoint_err <= 1e-7, "endpoint error {endpoint_err}");

    // Order check: halving a fixed step must cut the error by >= 2^4.
    let fixed = |h: f64| {
        let c = IntegratorConfig {
            rel_tol: 1.0,
            abs_tol: 1e6,
            max_step: h,
            min_step: h,
            ..IntegratorConfig::default()
        };
        let t = integrate(&decay, &x0, 1.0, &c).unwrap();
        (t.final_state()[0] - (-1.0f64).exp()).abs()
    };
    let ratio = fixed(0.1) / fixed(0.05);
    assert!(ratio >= 16.0, "step-halving error ratio {ratio}");

    // Determinism: identical inputs give bit-identical trajectories.
    let again = integrate(&decay, &x0, 1.0, &cfg()).unwrap();
    assert_eq!(traj.times(), again.times());
    assert_eq!(traj.states(), again.states());
    assert_eq!(traj.to_csv(), again.to_csv());
    pass(
        "12 integration engine",
        t0,
        format!("endpoint error {endpoint_err:.2e}, halving ratio {ratio:.1}, reruns identical"),
    );
}

#[test]
fn parser_interface_round_trip() {
    // The reference source text and the programmatic builtin describe the same
    // network up to species numbering.
    let parsed = parse_network(builtin::FUTILE_CYCLE_SOURCE).unwrap();
    let reference = builtin::futile_cycle();
    assert_eq!(parsed.n_species(), reference.n_species());
    assert_eq!(parsed.n_reactions(), reference.n_reactions());
    for name in ["P", "Q", "E", "F", "C", "D"] {
        let i = parsed.species_index(name).unwrap();
        let j = reference.species_index(name).unwrap();
        for r in 0..4 {
            assert_eq!(parsed.gamma()[(i, r)], reference.gamma()[(j, r)]);
        }
    }
}
