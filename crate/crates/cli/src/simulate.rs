//! `simulate`: integrate the species system from σ and the extent system from
//! the origin (forward or reverse), and export plot-ready CSV trajectories
//! plus a JSON summary.

use crate::instance::{resolve, Instance};
use crate::output::{display, integrator_config, OutputCtx};
use crate::{Failure, SimulateArgs};
use monocrn_core::extent::{ExtentSystem, SpeciesSystem};
use monocrn_core::linalg::Projector;
use monocrn_core::ode::{integrate, integrate_reverse, Trajectory, TrajectoryStatus};
use monocrn_core::VectorField;
use nalgebra::DVector;
use serde::Serialize;

#[derive(Serialize)]
struct TrajectoryMeta {
    file: String,
    status: TrajectoryStatus,
    steps_accepted: usize,
    steps_rejected: usize,
    end_time: f64,
}

#[derive(Serialize)]
struct SimulationBody {
    command: String,
    instance: String,
    reverse: bool,
    horizon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    species_names: Option<Vec<String>>,
    trajectories: Vec<TrajectoryMeta>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    notes: Vec<String>,
}

pub fn run(args: &SimulateArgs) -> Result<(), Failure> {
    let common = &args.common;
    let instance = resolve(common)?;
    let ctx = OutputCtx::new("simulate", common, &[("reverse", args.reverse.to_string())])?;
    let cfg = integrator_config(common);
    let horizon = common.horizon;
    if horizon < 0.0 || !horizon.is_finite() {
        return Err(Failure::Usage(format!("--horizon must be finite and >= 0, got {horizon}")));
    }

    let run_field = |field: &dyn VectorField, x0: &DVector<f64>| -> Result<Trajectory, Failure> {
        let res = if args.reverse {
            integrate_reverse(&field, x0, horizon, &cfg)
        } else {
            integrate(&field, x0, horizon, &cfg)
        };
        res.map_err(|e| Failure::Usage(e.to_string()))
    };

    let mut body = SimulationBody {
        command: "simulate".into(),
        instance: instance.name().to_string(),
        reverse: args.reverse,
        horizon,
        species_names: None,
        trajectories: Vec::new(),
        notes: Vec::new(),
    };
    let mut failed: Option<String> = None;
    let record = |name: &str,
                      traj: &Trajectory,
                      ctx: &OutputCtx,
                      body: &mut SimulationBody,
                      failed: &mut Option<String>|
     -> Result<(), Failure> {
        let file = format!("{name}.csv");
        if ctx.csv {
            ctx.write_csv(&file, &traj.to_csv())?;
        }
        body.trajectories.push(TrajectoryMeta {
            file: file.clone(),
            status: traj.status(),
            steps_accepted: traj.steps_accepted(),
            steps_rejected: traj.steps_rejected(),
            end_time: traj.end_time(),
        });
        let hard_failure = traj.status() == TrajectoryStatus::StepFailure
            || (!args.reverse && traj.status() == TrajectoryStatus::LeftDomain);
        if hard_failure && failed.is_none() {
            *failed = Some(format!("{file}: status {:?}", traj.status()));
        }
        Ok(())
    };

    match &instance {
        Instance::Network(n) => {
            body.species_names = Some(n.network.species_names());
            let species = SpeciesSystem::new(n.network.clone());
            let straj = run_field(&species, &n.sigma)?;
            record("species", &straj, &ctx, &mut body, &mut failed)?;

            let extent = ExtentSystem::new(n.network.clone(), n.sigma.clone())
                .map_err(|e| Failure::Usage(e.to_string()))?;
            let x0 = DVector::zeros(n.network.n_reactions());
            let xtraj = run_field(&extent, &x0)?;
            record("extent", &xtraj, &ctx, &mut body, &mut failed)?;

            if let Some(v) = extent.kernel_direction() {
                let proj = Projector::new(&v).map_err(|e| Failure::Internal(e.to_string()))?;
                let mut csv = String::from("t");
                for i in 1..=proj.dimension() {
                    csv.push_str(&format!(",x{i}"));
                }
                csv.push('\n');
                for (t, x) in xtraj.times().iter().zip(xtraj.states()) {
                    let p = proj.project(x);
                    csv.push_str(&format!("{t}"));
                    for vcomp in p.iter() {
                        csv.push_str(&format!(",{vcomp}"));
                    }
                    csv.push('\n');
                }
                if ctx.csv {
                    ctx.write_csv("extent_projected.csv", &csv)?;
                }
                body.trajectories.push(TrajectoryMeta {
                    file: "extent_projected.csv".into(),
                    status: xtraj.status(),
                    steps_accepted: xtraj.steps_accepted(),
                    steps_rejected: xtraj.steps_rejected(),
                    end_time: xtraj.end_time(),
                });
            } else {
                body.notes.push("no positive unit kernel vector; projected trajectory skipped".into());
            }
        }
        Instance::Field(f) => {
            let traj = run_field(&f.field, &f.x0)?;
            record("trajectory", &traj, &ctx, &mut body, &mut failed)?;
        }
    }

    let path = if ctx.json { Some(ctx.write_json("simulation.json", &body)?) } else { None };
    for t in &body.trajectories {
        println!(
            "{}: {:?} (t_end = {}, {} steps, {} rejected)",
            t.file, t.status, t.end_time, t.steps_accepted, t.steps_rejected
        );
    }
    if let Some(path) = &path {
        println!("summary: {}", display(path));
    }
    match failed {
        Some(msg) => Err(Failure::Integration(msg)),
        None => Ok(()),
    }
}
