//! Output plumbing: resolved configuration hash, directory handling, and
//! JSON/CSV writers that embed the hash and seed in every file.

use crate::{CommonArgs, Failure};
use monocrn_core::ode::IntegratorConfig;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

pub struct OutputCtx {
    dir: PathBuf,
    pub config_hash: String,
    pub seed: u64,
    pub json: bool,
    pub csv: bool,
}

impl OutputCtx {
    /// Resolves the output directory (`MONOCRN_OUT` overrides `--out`) and
    /// hashes the semantically relevant parts of the invocation. Timestamps
    /// and output paths are excluded so reruns reproduce identical bytes.
    pub fn new(command: &str, args: &CommonArgs, extra: &[(&str, String)]) -> Result<Self, Failure> {
        let dir = match std::env::var_os("MONOCRN_OUT") {
            Some(v) if !v.is_empty() => PathBuf::from(v),
            _ => args.out.clone(),
        };
        std::fs::create_dir_all(&dir)?;
        let mut canonical = format!(
            "command={command};example={:?};input={:?};sigma={:?};k={:?};horizon={};rel_tol={};abs_tol={};seed={}",
            args.example, args.input, args.sigma, args.rate_overrides, args.horizon,
            args.rel_tol, args.abs_tol, args.seed
        );
        for (k, v) in extra {
            canonical.push_str(&format!(";{k}={v}"));
        }
        let digest = Sha256::digest(canonical.as_bytes());
        let config_hash: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
        let json = args.format.iter().any(|f| f == "json");
        let csv = args.format.iter().any(|f| f == "csv");
        Ok(Self { dir, config_hash, seed: args.seed, json, csv })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Writes pretty JSON with `config_hash` and `seed` merged into the
    /// top-level object.
    pub fn write_json<T: Serialize>(&self, name: &str, body: &T) -> Result<PathBuf, Failure> {
        let mut value = serde_json::to_value(body)?;
        match &mut value {
            serde_json::Value::Object(map) => {
                map.insert("config_hash".into(), self.config_hash.clone().into());
                map.insert("seed".into(), self.seed.into());
            }
            _ => return Err(Failure::Internal("top-level JSON output must be an object".into())),
        }
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(&value)?;
        text.push('\n');
        std::fs::write(&path, text)?;
        Ok(path)
    }

    /// Writes a CSV payload prefixed by a comment line carrying the hash and
    /// seed; the first non-comment line is the header.
    pub fn write_csv(&self, name: &str, csv: &str) -> Result<PathBuf, Failure> {
        let path = self.path(name);
        let body = format!("# config_hash={} seed={}\n{csv}", self.config_hash, self.seed);
        std::fs::write(&path, body)?;
        Ok(path)
    }
}

pub fn integrator_config(args: &CommonArgs) -> IntegratorConfig {
    IntegratorConfig {
        rel_tol: args.rel_tol,
        abs_tol: args.abs_tol,
        ..IntegratorConfig::default()
    }
}

pub fn display(path: &Path) -> String {
    path.display().to_string()
}
