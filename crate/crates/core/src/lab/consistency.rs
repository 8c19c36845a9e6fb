//! Consistency between the species and extent pictures, convergence of
//! stoichiometric classes, and the degenerate single-enzyme regime.

use super::equilibrium::find_extent_equilibrium;
use super::report::{EquilibriumCertificate, VerificationReport, Witness};
use super::{merged_times, state_scale, vec_of, LabError};
use crate::crn::ReactionNetwork;
use crate::extent::{ExtentSystem, SpeciesSystem};
use crate::ode::{integrate, IntegratorConfig, TrajectoryStatus};
use nalgebra::DVector;

/// Integrates the species system from `σ + Γx0` and the extent system from
/// `x0` independently and checks `S(t) = σ + Γx(t)` on the merged grid, with
/// threshold `100 (rel_tol · scale + abs_tol)`.
pub fn verify_extent_species_consistency(
    network: &ReactionNetwork,
    sigma: &DVector<f64>,
    x0: &DVector<f64>,
    horizon: f64,
    cfg: &IntegratorConfig,
) -> Result<VerificationReport, LabError> {
    let extent = ExtentSystem::new(network.clone(), sigma.clone())
        .map_err(|e| LabError::Precondition(e.to_string()))?;
    let s0 = extent.species_at(x0);
    if s0.iter().any(|&v| v < 0.0) {
        return Err(LabError::Precondition("σ + Γ x0 has a negative component".into()));
    }
    let species = SpeciesSystem::new(network.clone());

    let mut report = VerificationReport::new("extent-species-consistency");
    report.note(format!("horizon {horizon}"));
    let ts = integrate(&species, &s0, horizon, cfg)?;
    let tx = integrate(&extent, x0, horizon, cfg)?;
    if ts.status() != TrajectoryStatus::Completed || tx.status() != TrajectoryStatus::Completed {
        return Err(LabError::Integration {
            context: "species/extent consistency".into(),
            status: if ts.status() != TrajectoryStatus::Completed { ts.status() } else { tx.status() },
        });
    }
    report.n_samples = 1;
    let scale = state_scale(&[&ts, &tx]);
    let tol = 100.0 * (cfg.rel_tol * scale + cfg.abs_tol);
    let gamma = network.gamma_f64();
    let mut worst = (0.0f64, 0.0f64);
    for &t in &merged_times(&ts, &tx) {
        let s = ts.sample(t);
        let x = tx.sample(t);
        let dev = (&s - (sigma + &gamma * &x)).amax();
        if dev > worst.0 {
            worst = (dev, t);
        }
    }
    report.observe(worst.0);
    if worst.0 > tol {
        report.witness(Witness {
            sample: 0,
            kind: "extent-species-mismatch".into(),
            time: Some(worst.1),
            measured: worst.0,
            xi1: Some(vec_of(x0)),
            xi2: None,
        });
    }
    Ok(report)
}

/// Simulates the species system from every initial condition in the
/// stoichiometric class of `σ` to a stall and checks that all terminal states
/// agree with the certified `ζ` within `1e-5`. Initial conditions outside the
/// class (least-squares residual test on `ρ − σ ∈ Image(Γ)`) are a
/// precondition error.
pub fn stoichiometric_class_convergence(
    network: &ReactionNetwork,
    sigma: &DVector<f64>,
    rhos: &[DVector<f64>],
    cfg: &IntegratorConfig,
) -> Result<(VerificationReport, EquilibriumCertificate), LabError> {
    let extent = ExtentSystem::new(network.clone(), sigma.clone())
        .map_err(|e| LabError::Precondition(e.to_string()))?;
    let gamma = network.gamma_f64();

    // Class membership: ρ − σ must lie in Image(Γ).
    for (k, rho) in rhos.iter().enumerate() {
        if rho.len() != sigma.len() {
            return Err(LabError::Precondition(format!(
                "initial condition {k} has length {} (expected {})",
                rho.len(),
                sigma.len()
            )));
        }
        if rho.iter().any(|&v| v < 0.0) {
            return Err(LabError::Precondition(format!(
                "initial condition {k} has a negative component"
            )));
        }
        let y = rho - sigma;
        let ynorm = y.norm();
        if ynorm == 0.0 {
            continue;
        }
        let svd = gamma.clone().svd(true, true);
        let a = svd
            .solve(&y, 1e-14)
            .map_err(|_| LabError::Precondition("least-squares solve failed".into()))?;
        let residual = (&gamma * a - &y).norm();
        if residual > 1e-9 * ynorm {
            return Err(LabError::OutsideClass { index: k, residual });
        }
    }

    let cert = find_extent_equilibrium(&extent, &DVector::zeros(extent_dim(network)), cfg)?;
    let zeta = DVector::from_vec(cert.zeta.clone().expect("extent certificate carries zeta"));

    let species = SpeciesSystem::new(network.clone());
    let mut report = VerificationReport::new("stoichiometric-class-convergence");
    report.note(format!("{} initial conditions, terminal tolerance 1e-5", rhos.len()));
    let mut stall_cfg = cfg.clone();
    stall_cfg.stop_at_stall = true;
    for (k, rho) in rhos.iter().enumerate() {
        report.n_samples += 1;
        let traj = integrate(&species, rho, 1e6, &stall_cfg)?;
        if traj.status() != TrajectoryStatus::StalledAtEquilibrium {
            return Err(LabError::NoStall { status: traj.status() });
        }
        let dev = (traj.final_state() - &zeta).amax();
        report.observe(dev);
        if dev > 1e-5 {
            report.witness(Witness {
                sample: k,
                kind: "terminal-mismatch".into(),
                time: Some(traj.end_time()),
                measured: dev,
                xi1: Some(vec_of(rho)),
                xi2: Some(vec_of(&zeta)),
            });
        }
    }
    Ok((report, cert))
}

fn extent_dim(network: &ReactionNetwork) -> usize {
    network.n_reactions()
}

/// Degenerate regime of the two-enzyme cycle: with one enzyme pair absent
/// (`E(0) + C(0) = 0` or `F(0) + D(0) = 0`), the species trajectory must
/// stall at an equilibrium and the produced substrate (`P`, resp. `Q`) must
/// be pointwise nondecreasing (per-step tolerance `1e-10`).
pub fn degenerate_case_convergence(
    network: &ReactionNetwork,
    sigma: &DVector<f64>,
    cfg: &IntegratorConfig,
) -> Result<VerificationReport, LabError> {
    let idx = |name: &str| {
        network
            .species_index(name)
            .ok_or_else(|| LabError::Precondition(format!("species `{name}` not found")))
    };
    let (p, q, e, f, c, d) = (idx("P")?, idx("Q")?, idx("E")?, idx("F")?, idx("C")?, idx("D")?);
    if sigma.len() != network.n_species() {
        return Err(LabError::Precondition("sigma length mismatch".into()));
    }
    let e_total = sigma[e] + sigma[c];
    let f_total = sigma[f] + sigma[d];
    if e_total != 0.0 && f_total != 0.0 {
        return Err(LabError::Precondition(
            "degenerate case requires E+C = 0 or F+D = 0 at the initial condition".into(),
        ));
    }

    let species = SpeciesSystem::new(network.clone());
    let mut report = VerificationReport::new("degenerate-case-convergence");
    report.note(format!("E+C = {e_total}, F+D = {f_total}"));
    let mut stall_cfg = cfg.clone();
    stall_cfg.stop_at_stall = true;
    let traj = integrate(&species, sigma, 1e6, &stall_cfg)?;
    if traj.status() != TrajectoryStatus::StalledAtEquilibrium {
        return Err(LabError::NoStall { status: traj.status() });
    }
    report.n_samples = traj.len();
    report.note(format!("stalled at t = {}", traj.end_time()));

    let mut check_monotone = |index: usize, label: &str| {
        let states = traj.states();
        for w in 0..states.len() - 1 {
            let drop = states[w][index] - states[w + 1][index];
            report.observe(drop.max(0.0));
            if drop > 1e-10 {
                report.witness(Witness {
                    sample: w,
                    kind: format!("nonmonotone-{label}"),
                    time: Some(traj.times()[w + 1]),
                    measured: drop,
                    xi1: Some(vec_of(sigma)),
                    xi2: None,
                });
                break;
            }
        }
    };
    if e_total == 0.0 {
        check_monotone(p, "P");
    }
    if f_total == 0.0 {
        check_monotone(q, "Q");
    }
    Ok(report)
}
