//! `analyze`: structural results (rank, kernels, conservation laws) plus the
//! sampled dynamical hypothesis checks, exported as one JSON document.

use crate::instance::{resolve, Instance};
use crate::output::{display, integrator_config, OutputCtx};
use crate::{CommonArgs, Failure};
use monocrn_core::extent::{analyze_hypotheses, ExtentSystem, HypothesisReport};
use monocrn_core::linalg::positive_kernel_unit_vector;
use serde::Serialize;

#[derive(Serialize)]
struct StructuralSection {
    rank: usize,
    right_kernel: Vec<Vec<String>>,
    conservation_laws: Vec<Vec<String>>,
    positive_unit_kernel: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct BoundednessSection {
    /// Every species is dominated by a nonnegative conservation functional.
    /// A sufficient certificate assembled from the left kernel; never a proof
    /// of the converse when false.
    certified: bool,
    method: String,
    cover: Vec<Vec<String>>,
    uncovered_species: Vec<String>,
}

#[derive(Serialize)]
struct AnalysisBody {
    command: String,
    network: NetworkSection,
    sigma: Vec<f64>,
    structural: StructuralSection,
    hypotheses: HypothesisReport,
    boundedness: BoundednessSection,
    all_hypotheses_hold: bool,
}

#[derive(Serialize)]
struct NetworkSection {
    name: String,
    species: Vec<String>,
    reactions: usize,
}

pub fn run(args: &CommonArgs) -> Result<(), Failure> {
    let instance = resolve(args)?;
    let net_instance = match instance {
        Instance::Network(n) => n,
        Instance::Field(f) => {
            return Err(Failure::Usage(format!(
                "`analyze` needs a reaction network; `{}` is a plain vector field",
                f.name
            )))
        }
    };
    let ctx = OutputCtx::new("analyze", args, &[])?;
    let cfg = integrator_config(args);

    let network = net_instance.network.clone();
    let gamma = network.gamma_rational();
    let structural = StructuralSection {
        rank: gamma.rank(),
        right_kernel: rational_strings(&gamma.right_kernel_basis()),
        conservation_laws: rational_strings(&network.conservation_laws()),
        positive_unit_kernel: positive_kernel_unit_vector(&gamma)
            .map(|v| v.iter().copied().collect()),
    };

    let sys = ExtentSystem::new(network.clone(), net_instance.sigma.clone())
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let hypotheses = analyze_hypotheses(&sys, args.horizon.max(50.0), 200, &cfg, args.seed)
        .map_err(|e| Failure::Integration(e.to_string()))?;

    let (cover, uncovered) = network.nonnegative_conservation_cover();
    let boundedness = BoundednessSection {
        certified: uncovered.is_empty(),
        method: "nonnegative conservation cover (sufficient condition; checked, not assumed)"
            .into(),
        cover: rational_strings(&cover),
        uncovered_species: uncovered
            .iter()
            .map(|&i| network.species()[i].name.clone())
            .collect(),
    };

    let all = hypotheses.all_hold() && boundedness.certified;
    let body = AnalysisBody {
        command: "analyze".into(),
        network: NetworkSection {
            name: net_instance.name.clone(),
            species: network.species_names(),
            reactions: network.n_reactions(),
        },
        sigma: net_instance.sigma.iter().copied().collect(),
        structural,
        hypotheses,
        boundedness,
        all_hypotheses_hold: all,
    };
    let path = if ctx.json { Some(ctx.write_json("analysis.json", &body)?) } else { None };

    println!("network: {} ({} species, {} reactions)", body.network.name, body.network.species.len(), body.network.reactions);
    println!("rank(Γ) = {}, conservation laws: {}", body.structural.rank, body.structural.conservation_laws.len());
    match &body.structural.positive_unit_kernel {
        Some(v) => println!("positive unit kernel vector: {v:?}"),
        None => println!("positive unit kernel vector: none"),
    }
    let verdict = |b: bool| if b { "ok" } else { "FAILED" };
    println!("kernel shape: {}", verdict(body.hypotheses.kernel_ok));
    if let Some(t) = &body.hypotheses.translation {
        println!(
            "translation invariance: {} (max |J(x)v| = {:.2e})",
            verdict(t.verdict),
            t.max_jacobian_residual
        );
    }
    match &body.hypotheses.cooperativity.note {
        Some(note) => println!(
            "cooperativity: {} ({note})",
            verdict(body.hypotheses.cooperativity.verdict)
        ),
        None => println!(
            "cooperativity: {} (worst off-diagonal {:.2e})",
            verdict(body.hypotheses.cooperativity.verdict),
            body.hypotheses.cooperativity.worst_entry
        ),
    }
    if let Some(i) = &body.hypotheses.irreducibility {
        println!(
            "irreducibility along trajectory: {} (fraction {:.3})",
            verdict(i.verdict),
            i.fraction
        );
    }
    println!(
        "boundedness: {} ({})",
        verdict(body.boundedness.certified),
        body.boundedness.method
    );
    if let Some(path) = &path {
        println!("report: {}", display(path));
    }

    if all {
        Ok(())
    } else {
        Err(Failure::Verdict("one or more hypotheses failed; see analysis.json".into()))
    }
}

fn rational_strings<T: ToString>(vectors: &[Vec<T>]) -> Vec<Vec<String>> {
    vectors
        .iter()
        .map(|v| v.iter().map(|q| q.to_string()).collect())
        .collect()
}
