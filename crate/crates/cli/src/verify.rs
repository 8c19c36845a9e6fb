//! `verify`: run the convergence verification battery against an instance and
//! write a JSON bundle of every report plus the equilibrium certificate.

use crate::instance::{resolve, Instance, NetworkInstance};
use crate::output::{display, integrator_config, OutputCtx};
use crate::{Failure, VerifyArgs};
use monocrn_core::builtin;
use monocrn_core::extent::ExtentSystem;
use monocrn_core::field::sample_domain_point;
use monocrn_core::lab::{
    bounded_modulo_v, degenerate_case_convergence, stoichiometric_class_convergence,
    verify_extent_species_consistency, verify_order_preservation, verify_translation_flow,
    verify_unique_equilibrium, verify_v_gauge_decrease, verify_v_gauge_increase_reverse,
    EquilibriumCertificate, LabError, VerificationReport, Witness,
};
use monocrn_core::linalg::Projector;
use monocrn_core::ode::integrate;
use monocrn_core::order::OrthantOrder;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

const NETWORK_TESTS: &[&str] = &[
    "order-preservation",
    "v-decrease",
    "v-increase-reverse",
    "translation-flow",
    "bounded-modulo-v",
    "unique-equilibrium",
    "extent-species-consistency",
    "class-convergence",
    "degenerate-case",
    "golden-zeta",
];
const FIELD_TESTS: &[&str] = &["order-preservation", "translation-flow"];

#[derive(Serialize)]
struct VerifyBody {
    command: String,
    instance: String,
    horizon: f64,
    all_passed: bool,
    reports: Vec<VerificationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate: Option<EquilibriumCertificate>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    skipped: Vec<String>,
}

pub fn run(args: &VerifyArgs) -> Result<(), Failure> {
    let common = &args.common;
    let instance = resolve(common)?;
    let available: &[&str] = match &instance {
        Instance::Network(_) => NETWORK_TESTS,
        Instance::Field(_) => FIELD_TESTS,
    };
    if let Some(only) = &args.only {
        if !available.contains(&only.as_str()) {
            return Err(Failure::Usage(format!(
                "unknown test `{only}` for this instance; available: {}",
                available.join(", ")
            )));
        }
    }
    let wants = |name: &str| args.only.as_deref().is_none_or(|only| only == name);

    let ctx = OutputCtx::new("verify", common, &[("only", format!("{:?}", args.only))])?;
    let cfg = integrator_config(common);
    let horizon = common.horizon;
    let seed = common.seed;

    let mut body = VerifyBody {
        command: "verify".into(),
        instance: instance.name().to_string(),
        horizon,
        all_passed: true,
        reports: Vec::new(),
        certificate: None,
        skipped: Vec::new(),
    };

    match &instance {
        Instance::Network(n) => {
            run_network_battery(n, args, &cfg, horizon, seed, wants, &mut body)?;
        }
        Instance::Field(f) => {
            let order = OrthantOrder::cooperative(f.v.clone())
                .map_err(|e| Failure::Usage(e.to_string()))?;
            if wants("order-preservation") {
                body.reports.push(verify_order_preservation(
                    &f.field, &order, 100, horizon, &cfg, seed,
                ));
            }
            if wants("translation-flow") {
                body.reports.push(verify_translation_flow(&f.field, &f.v, 20, horizon, &cfg, seed));
            }
        }
    }

    body.all_passed = body.reports.iter().all(|r| r.verdict) && !body.reports.is_empty();
    let path = if ctx.json { Some(ctx.write_json("verify.json", &body)?) } else { None };
    for r in &body.reports {
        println!(
            "{} {} ({} samples, max violation {:.3e})",
            if r.verdict { "PASS" } else { "FAIL" },
            r.test,
            r.n_samples,
            r.max_violation
        );
    }
    for s in &body.skipped {
        println!("SKIP {s}");
    }
    if let Some(path) = &path {
        println!("bundle: {}", display(path));
    }
    if body.all_passed {
        Ok(())
    } else {
        Err(Failure::Verdict("at least one verification test failed; see verify.json".into()))
    }
}

fn map_lab_error(e: LabError) -> Failure {
    match e {
        LabError::Integration { .. }
        | LabError::Setup(_)
        | LabError::NoStall { .. }
        | LabError::NewtonDiverged { .. } => Failure::Integration(e.to_string()),
        LabError::Precondition(_) | LabError::OutsideClass { .. } => Failure::Usage(e.to_string()),
        LabError::NoKernel => Failure::Verdict(e.to_string()),
    }
}

fn run_network_battery(
    n: &NetworkInstance,
    args: &VerifyArgs,
    cfg: &monocrn_core::ode::IntegratorConfig,
    horizon: f64,
    seed: u64,
    wants: impl Fn(&str) -> bool,
    body: &mut VerifyBody,
) -> Result<(), Failure> {
    let sys = ExtentSystem::new(n.network.clone(), n.sigma.clone())
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let Some(v) = sys.kernel_direction() else {
        let mut report = VerificationReport::new("kernel-shape");
        report.witness(Witness {
            sample: 0,
            kind: "no-positive-unit-kernel".into(),
            time: None,
            measured: f64::NAN,
            xi1: None,
            xi2: None,
        });
        body.reports.push(report);
        return Ok(());
    };
    let order =
        OrthantOrder::cooperative(v.clone()).map_err(|e| Failure::Internal(e.to_string()))?;
    let m = n.network.n_reactions();

    if wants("order-preservation") {
        body.reports.push(verify_order_preservation(&sys, &order, 100, horizon, cfg, seed));
    }
    if wants("v-decrease") {
        body.reports.push(verify_v_gauge_decrease(&sys, &order, 100, horizon, cfg, seed + 1));
    }
    if wants("v-increase-reverse") {
        body.reports
            .push(verify_v_gauge_increase_reverse(&sys, &order, 20, horizon, cfg, seed + 2));
    }
    if wants("translation-flow") {
        body.reports.push(verify_translation_flow(&sys, &v, 20, horizon, cfg, seed + 3));
    }
    if wants("bounded-modulo-v") {
        let traj = integrate(&sys, &DVector::zeros(m), horizon.max(50.0), cfg)
            .map_err(|e| Failure::Integration(e.to_string()))?;
        let check = bounded_modulo_v(&traj, &v);
        let mut report = VerificationReport::new("bounded-modulo-v");
        report.n_samples = traj.len();
        report.note(format!(
            "sup |π_v x(t)| = {:.6e}, growth fraction {:.3e}, trend slope {:.3e}",
            check.sup_projected, check.growth_fraction, check.trend_slope
        ));
        report.observe(check.growth_fraction);
        if !check.bounded {
            report.witness(Witness {
                sample: 0,
                kind: "projected-trajectory-unbounded".into(),
                time: Some(traj.end_time()),
                measured: check.growth_fraction,
                xi1: None,
                xi2: None,
            });
        }
        body.reports.push(report);
    }
    if wants("unique-equilibrium") {
        let proj = Projector::new(&v).map_err(|e| Failure::Internal(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
        let center = DVector::zeros(m);
        let mut starts = Vec::new();
        for _ in 0..10 {
            if let Some(x) = sample_domain_point(&sys, &center, 0.5, 0.0, &mut rng, 20_000) {
                starts.push(proj.project(&x));
            }
        }
        if starts.is_empty() {
            return Err(Failure::Internal("could not sample equilibrium starts".into()));
        }
        let (report, certs) = verify_unique_equilibrium(&sys, &v, &starts, cfg);
        body.reports.push(report);
        if body.certificate.is_none() {
            if let Some(best) = certs.into_iter().next() {
                let mut cert = best;
                // Attach the species-space image for extent systems.
                let xi = DVector::from_vec(cert.xi.clone());
                let mut zeta = sys.species_at(&xi);
                for z in zeta.iter_mut() {
                    if *z < 0.0 && *z > -1e-9 {
                        *z = 0.0;
                    }
                }
                cert.zeta = Some(zeta.iter().copied().collect());
                body.certificate = Some(cert);
            }
        }
    }
    if wants("extent-species-consistency") {
        let report = verify_extent_species_consistency(
            &n.network,
            &n.sigma,
            &DVector::zeros(m),
            horizon.max(50.0),
            cfg,
        )
        .map_err(map_lab_error)?;
        body.reports.push(report);
    }
    if wants("class-convergence") {
        let gamma = n.network.gamma_f64();
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 200);
        let mut rhos = vec![n.sigma.clone()];
        while rhos.len() < 3 {
            let mut a = DVector::from_fn(m, |_, _| rng.gen_range(-0.15..0.15f64));
            let mut placed = false;
            for _ in 0..10 {
                let rho = &n.sigma + &gamma * &a;
                if rho.iter().all(|&x| x >= 0.0) {
                    rhos.push(rho);
                    placed = true;
                    break;
                }
                a *= 0.5;
            }
            if !placed {
                rhos.push(n.sigma.clone());
            }
        }
        let (report, cert) =
            stoichiometric_class_convergence(&n.network, &n.sigma, &rhos, cfg)
                .map_err(map_lab_error)?;
        body.reports.push(report);
        body.certificate = Some(cert);
    }
    if wants("degenerate-case") {
        let applicable = ["P", "Q", "E", "F", "C", "D"]
            .iter()
            .all(|s| n.network.species_index(s).is_some())
            && {
                let idx = |s: &str| n.network.species_index(s).unwrap();
                n.sigma[idx("E")] + n.sigma[idx("C")] == 0.0
                    || n.sigma[idx("F")] + n.sigma[idx("D")] == 0.0
            };
        if applicable {
            let report = degenerate_case_convergence(&n.network, &n.sigma, cfg)
                .map_err(map_lab_error)?;
            body.reports.push(report);
        } else if args.only.as_deref() == Some("degenerate-case") {
            return Err(Failure::Usage(
                "degenerate-case needs the cycle species names and E+C = 0 or F+D = 0".into(),
            ));
        } else {
            body.skipped
                .push("degenerate-case (both enzyme totals positive at this sigma)".into());
        }
    }
    if wants("golden-zeta") {
        if n.canonical {
            let golden = builtin::golden_futile_cycle();
            let mut report = VerificationReport::new("golden-zeta");
            report.note(format!("golden generator: {}", golden.generator));
            match &body.certificate {
                Some(cert) => {
                    report.n_samples = 1;
                    let zeta = cert.zeta.clone().unwrap_or_default();
                    let dev = zeta
                        .iter()
                        .zip(&golden.zeta)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0f64, f64::max);
                    report.observe(dev);
                    if zeta.len() != golden.zeta.len() || dev > 1e-6 {
                        report.witness(Witness {
                            sample: 0,
                            kind: "golden-mismatch".into(),
                            time: None,
                            measured: dev,
                            xi1: Some(zeta),
                            xi2: Some(golden.zeta.clone()),
                        });
                    }
                }
                None => {
                    report
                        .note("no certificate produced (run unique-equilibrium or class-convergence)");
                }
            }
            body.reports.push(report);
        } else if args.only.as_deref() == Some("golden-zeta") {
            return Err(Failure::Usage(
                "golden-zeta applies only to the unmodified futile-cycle at the default sigma"
                    .into(),
            ));
        } else {
            body.skipped.push("golden-zeta (not the canonical futile-cycle instance)".into());
        }
    }
    Ok(())
}
