//! Resolution of the command-line input into a runnable instance.

use crate::{CommonArgs, Failure};
use monocrn_core::builtin;
use monocrn_core::crn::{parse_network, ReactionNetwork};
use monocrn_core::VectorField;
use nalgebra::DVector;

pub struct NetworkInstance {
    pub name: String,
    pub network: ReactionNetwork,
    pub sigma: DVector<f64>,
    /// True only for the unmodified builtin cycle at the canonical sigma, the
    /// instance covered by the frozen golden certificate.
    pub canonical: bool,
}

pub struct FieldInstance {
    pub name: String,
    pub field: Box<dyn VectorField + Send + Sync>,
    pub v: DVector<f64>,
    pub x0: DVector<f64>,
}

pub enum Instance {
    Network(NetworkInstance),
    Field(FieldInstance),
}

impl Instance {
    pub fn name(&self) -> &str {
        match self {
            Instance::Network(n) => &n.name,
            Instance::Field(f) => &f.name,
        }
    }
}

pub fn resolve(args: &CommonArgs) -> Result<Instance, Failure> {
    let (name, mut network): (String, ReactionNetwork) = match (&args.example, &args.input) {
        (Some(example), None) => match example.as_str() {
            "futile-cycle" => ("futile-cycle".into(), builtin::futile_cycle()),
            "a-to-b" => ("a-to-b".into(), builtin::a_to_b()),
            "rotation" => {
                if args.sigma.is_some() || !args.rate_overrides.is_empty() {
                    return Err(Failure::Usage(
                        "the rotation example is a plain vector field; --sigma and --k do not apply"
                            .into(),
                    ));
                }
                let sqrt_half = 0.5f64.sqrt();
                return Ok(Instance::Field(FieldInstance {
                    name: "rotation".into(),
                    field: Box::new(builtin::rotation_field()),
                    v: DVector::from_vec(vec![sqrt_half, sqrt_half]),
                    x0: DVector::from_vec(vec![1.0, 0.0]),
                }));
            }
            other => {
                return Err(Failure::Usage(format!(
                    "unknown example `{other}` (expected futile-cycle, a-to-b, or rotation)"
                )))
            }
        },
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Failure::Usage(format!("cannot read `{}`: {e}", path.display()))
            })?;
            let net = parse_network(&text).map_err(|e| Failure::Usage(e.to_string()))?;
            (path.display().to_string(), net)
        }
        (None, None) => {
            return Err(Failure::Usage("exactly one of --example or --input is required".into()))
        }
        (Some(_), Some(_)) => unreachable!("clap enforces the conflict"),
    };

    let overridden = apply_rate_overrides(&mut network, &args.rate_overrides)?;

    let sigma = match &args.sigma {
        Some(values) => {
            if values.len() != network.n_species() {
                return Err(Failure::Usage(format!(
                    "--sigma has {} entries but the network has {} species ({})",
                    values.len(),
                    network.n_species(),
                    network.species_names().join(", ")
                )));
            }
            if let Some(v) = values.iter().find(|v| **v < 0.0 || !v.is_finite()) {
                return Err(Failure::Usage(format!("--sigma entries must be >= 0, got {v}")));
            }
            DVector::from_vec(values.clone())
        }
        None => match name.as_str() {
            "futile-cycle" => builtin::canonical_sigma(),
            "a-to-b" => DVector::from_vec(vec![1.0, 0.0]),
            _ => {
                return Err(Failure::Usage(
                    "--sigma is required for network files (one value per species)".into(),
                ))
            }
        },
    };

    let canonical = name == "futile-cycle"
        && !overridden
        && sigma.as_slice() == builtin::canonical_sigma().as_slice();
    Ok(Instance::Network(NetworkInstance { name, network, sigma, canonical }))
}

/// Applies `kf<i>=v` / `kr<i>=v` overrides (1-based reaction indices).
/// Returns whether anything changed.
fn apply_rate_overrides(
    network: &mut ReactionNetwork,
    overrides: &[String],
) -> Result<bool, Failure> {
    let mut changed = false;
    for entry in overrides {
        let (key, value) = entry
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("--k expects NAME=VALUE, got `{entry}`")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("invalid rate value in `{entry}`")))?;
        let key = key.trim();
        let (kind, index_str) = if let Some(rest) = key.strip_prefix("kf") {
            ("kf", rest)
        } else if let Some(rest) = key.strip_prefix("kr") {
            ("kr", rest)
        } else if let Some(rest) = key.strip_prefix('k') {
            ("kf", rest)
        } else {
            return Err(Failure::Usage(format!(
                "rate override `{key}` must start with kf, kr, or k"
            )));
        };
        let index: usize = index_str
            .parse()
            .map_err(|_| Failure::Usage(format!("invalid reaction index in `{key}`")))?;
        if index == 0 || index > network.n_reactions() {
            return Err(Failure::Usage(format!(
                "reaction index {index} out of range (network has {} reactions)",
                network.n_reactions()
            )));
        }
        let (kf, kr) =
            if kind == "kf" { (Some(value), None) } else { (None, Some(value)) };
        network
            .override_rates(index - 1, kf, kr)
            .map_err(|e| Failure::Usage(format!("cannot apply `{entry}`: {e}")))?;
        changed = true;
    }
    Ok(changed)
}
