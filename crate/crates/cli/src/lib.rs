//! Configuration-driven runner for the `eel-core` diagnostics.
//!
//! A run builds the configured field once, executes the requested checks
//! (concurrently, each with its own seeded generator), and writes CSV/JSON
//! artifacts plus a `bundle.json` summary into the output directory.

pub mod checks;
pub mod config;
pub mod error;

use checks::{run_check, Artifact, CheckOutput, Context, Status};
use config::{Check, ExperimentConfig};
use eel_core::fields::{build_field, KERNEL_NAME};
use eel_core::Mollifier;
pub use error::{CliError, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::Path;

pub const BUNDLE_FILE: &str = "bundle.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: Check,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub summary: serde_json::Value,
    pub artifacts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub eel_core: String,
    pub eel_cli: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelScale {
    pub eps: f64,
    pub normalization_error: f64,
    pub lattice_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelInfo {
    pub name: String,
    pub scales: Vec<KernelScale>,
}

/// Summary of a run. The config echo leaves out the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultBundle {
    pub config: ExperimentConfig,
    pub checks: Vec<CheckRecord>,
    pub artifacts: Vec<ManifestEntry>,
    pub versions: Versions,
    pub kernel: KernelInfo,
}

impl ResultBundle {
    pub fn has_failure(&self) -> bool {
        self.checks.iter().any(|c| c.status == Status::Fail)
    }

    pub fn status_of(&self, check: Check) -> Option<Status> {
        self.checks.iter().find(|c| c.name == check).map(|c| c.status)
    }
}

/// Generator for a stream of the run seed; stream 0 draws the entropy suite.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Validates the config and builds the shared inputs.
pub fn prepare(config: &ExperimentConfig) -> Result<Context> {
    config.validate()?;
    let spec = config.field.placed_on(&config.grid)?;
    let field = build_field(&spec, &config.grid)?;
    let mut rng = stream_rng(config.seed, 0);
    let suite = config.suite.iter().enumerate().flat_map(|(i, e)| e.expand(i, &mut rng)).collect();
    Ok(Context { config: config.clone(), spec, field, suite })
}

fn kernel_info(config: &ExperimentConfig) -> Result<KernelInfo> {
    let scales = config
        .eps_ladder
        .iter()
        .map(|&eps| {
            let k = Mollifier::new(eps)?;
            Ok(KernelScale {
                eps,
                normalization_error: k.normalization_error(),
                lattice_points: k.weights(config.grid.spacing).len(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(KernelInfo { name: KERNEL_NAME.into(), scales })
}

/// Runs every configured check on a pool of `jobs` threads. Artifacts come back in memory.
pub fn run(config: &ExperimentConfig, jobs: usize) -> Result<(ResultBundle, Vec<Artifact>)> {
    let ctx = prepare(config)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().map_err(|e| CliError::Pool(e.to_string()))?;
    let outputs: Vec<(Check, CheckOutput)> = pool.install(|| {
        config
            .checks
            .par_iter()
            .map(|&c| (c, run_check(c, &ctx, stream_rng(config.seed, c.stream()))))
            .collect()
    });
    let mut records = Vec::new();
    let mut artifacts = Vec::new();
    let mut manifest = Vec::new();
    for (check, out) in outputs {
        let mut names = Vec::new();
        for a in out.artifacts {
            let path = format!("{}/{}", check.name(), a.name);
            manifest.push(ManifestEntry { path: path.clone(), bytes: a.bytes.len(), sha256: hex::encode(Sha256::digest(&a.bytes)) });
            names.push(path.clone());
            artifacts.push(Artifact { name: path, bytes: a.bytes });
        }
        records.push(CheckRecord { name: check, status: out.status, message: out.message, summary: out.summary, artifacts: names });
    }
    let mut echo = config.clone();
    echo.out_dir = None;
    let bundle = ResultBundle {
        config: echo,
        checks: records,
        artifacts: manifest,
        versions: Versions { eel_core: eel_core::VERSION.into(), eel_cli: env!("CARGO_PKG_VERSION").into() },
        kernel: kernel_info(config)?,
    };
    Ok((bundle, artifacts))
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let err = |source| CliError::Write { path: path.into(), source };
    std::fs::create_dir_all(dir).map_err(err)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(err)?;
    tmp.write_all(bytes).map_err(err)?;
    tmp.as_file().sync_all().map_err(err)?;
    tmp.persist(path).map_err(|e| err(e.error))?;
    Ok(())
}

pub fn bundle_json(bundle: &ResultBundle) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(bundle).expect("bundle serializes");
    out.push(b'\n');
    out
}

/// Writes the artifacts and `bundle.json` under `out_dir`.
pub fn write_outputs(out_dir: &Path, bundle: &ResultBundle, artifacts: &[Artifact]) -> Result<()> {
    for a in artifacts {
        write_atomic(&out_dir.join(&a.name), &a.bytes)?;
    }
    write_atomic(&out_dir.join(BUNDLE_FILE), &bundle_json(bundle))
}
