//! Locating and certifying the projected equilibrium.
//!
//! The projected system `ẋ̃ = (I − vv')f(x̃)` is integrated until its field
//! norm stalls, then the root of the reduced map `w ↦ B'f(Bw)` (with `B` an
//! orthonormal basis of `v⊥`) is polished by Newton iteration and certified
//! against [`CERTIFY_TOL`].

use super::report::{EquilibriumCertificate, VerificationReport, Witness};
use super::{vec_of, LabError};
use crate::extent::ExtentSystem;
use crate::field::{finite_difference_jacobian, ProjectedField, VectorField};
use crate::linalg::orthonormal_complement;
use crate::ode::{integrate, IntegratorConfig, TrajectoryStatus};
use nalgebra::{DMatrix, DVector};

/// Certification bound on `|(I − vv')f(ξ)|`.
pub const CERTIFY_TOL: f64 = 1e-10;
const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 50;
/// Horizon cap for the stall run; the step budget of the configuration is the
/// effective limit.
const STALL_HORIZON: f64 = 1e6;

fn reduced_residual<F: VectorField + ?Sized>(
    field: &F,
    basis: &DMatrix<f64>,
    w: &DVector<f64>,
) -> DVector<f64> {
    let x = basis * w;
    basis.transpose() * field.eval(&x)
}

/// Integrates the projected system from `π_v x0` until it stalls, then Newton
/// polishes the projected root. Returns the certificate with `ξ ⊥ v`,
/// `r = v'f(ξ)`, and the projected residual.
pub fn find_projected_equilibrium<F: VectorField + ?Sized>(
    field: &F,
    v: &DVector<f64>,
    x0: &DVector<f64>,
    cfg: &IntegratorConfig,
) -> Result<EquilibriumCertificate, LabError> {
    let vhat = v / v.norm();
    let projected = ProjectedField::new(field, &vhat);
    let p0 = x0 - &vhat * vhat.dot(x0);
    let mut stall_cfg = cfg.clone();
    stall_cfg.stop_at_stall = true;
    let traj = integrate(&projected, &p0, STALL_HORIZON, &stall_cfg)?;
    if traj.status() != TrajectoryStatus::StalledAtEquilibrium {
        return Err(LabError::NoStall { status: traj.status() });
    }
    let stall_time = traj.end_time();
    let x_stall = traj.final_state().clone();

    // Newton polish in an orthonormal basis of v⊥.
    let basis = orthonormal_complement(&vhat);
    let mut w = basis.transpose() * &x_stall;
    let mut residual = reduced_residual(field, &basis, &w);
    let mut iterations = 0usize;
    let mut best = residual.norm();
    while residual.norm() > NEWTON_TOL && iterations < NEWTON_MAX_ITER {
        let x = &basis * &w;
        let jac_full = field
            .jacobian(&x)
            .unwrap_or_else(|| finite_difference_jacobian(field, &x, 1e-7));
        let jac_red = basis.transpose() * jac_full * &basis;
        let step = jac_red.lu().solve(&residual).ok_or(LabError::NewtonDiverged {
            residual: residual.norm(),
            iterations,
        })?;
        w -= step;
        residual = reduced_residual(field, &basis, &w);
        iterations += 1;
        let r = residual.norm();
        if r < best {
            best = r;
        } else if r > 10.0 * best && r > NEWTON_TOL {
            return Err(LabError::NewtonDiverged { residual: r, iterations });
        }
    }
    let final_residual = residual.norm();
    if final_residual > CERTIFY_TOL {
        return Err(LabError::NewtonDiverged { residual: final_residual, iterations });
    }
    let xi = &basis * &w;
    let fxi = field.eval(&xi);
    let r = vhat.dot(&fxi);
    Ok(EquilibriumCertificate {
        xi: vec_of(&xi),
        r,
        zeta: None,
        projected_residual: final_residual,
        stall_time,
        newton_iterations: iterations,
        agreement_diameter: None,
    })
}

/// Extent-system wrapper: derives the kernel direction from `Γ`, certifies the
/// projected equilibrium, and attaches `ζ = σ + Γξ` (with sub-rounding
/// negative components clamped to zero).
pub fn find_extent_equilibrium(
    sys: &ExtentSystem,
    x0: &DVector<f64>,
    cfg: &IntegratorConfig,
) -> Result<EquilibriumCertificate, LabError> {
    let v = sys.kernel_direction().ok_or(LabError::NoKernel)?;
    let mut cert = find_projected_equilibrium(sys, &v, x0, cfg)?;
    let xi = DVector::from_vec(cert.xi.clone());
    let mut zeta = sys.species_at(&xi);
    for z in zeta.iter_mut() {
        if *z < 0.0 {
            if *z < -1e-9 {
                return Err(LabError::Precondition(format!(
                    "certified species image has negative component {z}"
                )));
            }
            *z = 0.0;
        }
    }
    cert.zeta = Some(vec_of(&zeta));
    Ok(cert)
}

/// Certifies the projected equilibrium from every start and requires all
/// certified `ξ` to agree pairwise within `1e-6`.
pub fn verify_unique_equilibrium<F: VectorField + ?Sized>(
    field: &F,
    v: &DVector<f64>,
    starts: &[DVector<f64>],
    cfg: &IntegratorConfig,
) -> (VerificationReport, Vec<EquilibriumCertificate>) {
    let mut report = VerificationReport::new("unique-equilibrium");
    report.note(format!("{} starts, agreement tolerance 1e-6", starts.len()));
    let mut certs: Vec<(usize, EquilibriumCertificate)> = Vec::new();
    for (k, x0) in starts.iter().enumerate() {
        report.n_samples += 1;
        match find_projected_equilibrium(field, v, x0, cfg) {
            Ok(c) => certs.push((k, c)),
            Err(e) => report.witness(Witness {
                sample: k,
                kind: format!("certificate-failure ({e})"),
                time: None,
                measured: f64::NAN,
                xi1: Some(vec_of(x0)),
                xi2: None,
            }),
        }
    }
    let mut diameter: f64 = 0.0;
    for i in 0..certs.len() {
        for j in i + 1..certs.len() {
            let a = DVector::from_vec(certs[i].1.xi.clone());
            let b = DVector::from_vec(certs[j].1.xi.clone());
            let dist = (a - b).norm();
            diameter = diameter.max(dist);
            if dist > 1e-6 {
                report.witness(Witness {
                    sample: certs[j].0,
                    kind: "equilibria-disagree".into(),
                    time: None,
                    measured: dist,
                    xi1: Some(certs[i].1.xi.clone()),
                    xi2: Some(certs[j].1.xi.clone()),
                });
            }
        }
    }
    report.observe(diameter);
    if certs.is_empty() {
        report.witness(Witness {
            sample: 0,
            kind: "no-certificates".into(),
            time: None,
            measured: f64::NAN,
            xi1: None,
            xi2: None,
        });
    }
    let mut out: Vec<EquilibriumCertificate> = certs.into_iter().map(|(_, c)| c).collect();
    for c in &mut out {
        c.agreement_diameter = Some(diameter);
    }
    (report, out)
}

/// From a certified projected equilibrium `ξ`, the unprojected orbit is the
/// straight line `φt(ξ) = ξ + t f(ξ)`. Integrates the full system from `ξ`
/// and compares against that closed form to `1e-7`.
pub fn verify_affine_orbit<F: VectorField + ?Sized>(
    field: &F,
    xi: &DVector<f64>,
    horizon: f64,
    cfg: &IntegratorConfig,
) -> VerificationReport {
    let mut report = VerificationReport::new("affine-orbit");
    report.note(format!("horizon {horizon}, tolerance 1e-7"));
    let fxi = field.eval(xi);
    match integrate(field, xi, horizon, cfg) {
        Ok(traj) if traj.status() == TrajectoryStatus::Completed => {
            report.n_samples = traj.len();
            let mut worst = (0.0f64, 0.0f64);
            for (&t, x) in traj.times().iter().zip(traj.states()) {
                let dev = (x - (xi + &fxi * t)).amax();
                if dev > worst.0 {
                    worst = (dev, t);
                }
            }
            report.observe(worst.0);
            if worst.0 > 1e-7 {
                report.witness(Witness {
                    sample: 0,
                    kind: "affine-orbit-deviation".into(),
                    time: Some(worst.1),
                    measured: worst.0,
                    xi1: Some(vec_of(xi)),
                    xi2: None,
                });
            }
        }
        Ok(traj) => report.witness(Witness {
            sample: 0,
            kind: format!("integration-failure ({:?})", traj.status()),
            time: None,
            measured: f64::NAN,
            xi1: Some(vec_of(xi)),
            xi2: None,
        }),
        Err(e) => report.witness(Witness {
            sample: 0,
            kind: format!("integration-error ({e})"),
            time: None,
            measured: f64::NAN,
            xi1: Some(vec_of(xi)),
            xi2: None,
        }),
    }
    report
}
