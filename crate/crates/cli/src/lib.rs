//! Experiment runner: reads a TOML configuration, runs one named experiment,
//! and writes CSV tables plus a JSON manifest to an output directory.

pub mod config;
pub mod experiments;
pub mod manifest;

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde_json::Value;
use spherization_core::error::ErrorCategory;
use spherization_core::LabError;

use crate::config::ExperimentConfig;
use crate::manifest::{hex_digest, ErrorRecord, OutputFile, RunManifest};

/// Overrides the output directory of every run when set (and `--out` is not).
pub const OUT_DIR_ENV: &str = "SPHERIZATION_LAB_OUT";
pub const DEFAULT_OUT_DIR: &str = "out";

pub const EXIT_OK: i32 = 0;
/// The run completed but at least one embedded check failed, or output could
/// not be written.
pub const EXIT_CHECKS_FAILED: i32 = 1;

pub fn exit_code(category: ErrorCategory) -> i32 {
    match category {
        ErrorCategory::ConfigInvalid => 2,
        ErrorCategory::BudgetExceeded => 3,
        ErrorCategory::IntegrationDiverged => 4,
        ErrorCategory::InvariantFailure => 5,
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub manifest: RunManifest,
    pub out_dir: PathBuf,
    pub exit_code: i32,
}

/// `--out`, then the environment, then the file, then [`DEFAULT_OUT_DIR`].
pub fn resolve_out_dir(flag: Option<&Path>, from_config: Option<&Path>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(p);
    }
    from_config.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

/// Config digest over the canonical JSON echo.
pub fn config_digest(echo: &Value) -> String {
    hex_digest(serde_json::to_string(echo).unwrap_or_default().as_bytes())
}

struct Clock {
    started_unix: u64,
    start: Instant,
}

impl Clock {
    fn start() -> Self {
        Self {
            started_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            start: Instant::now(),
        }
    }
}

fn blank_manifest(clock: &Clock) -> RunManifest {
    RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        experiment: None,
        config: None,
        config_sha256: None,
        seed: None,
        started_unix: clock.started_unix,
        wall_clock_seconds: 0.0,
        status: "failed".into(),
        error: None,
        results: Value::Null,
        checks: Vec::new(),
        passed: false,
        outputs: Vec::new(),
    }
}

fn finish(mut manifest: RunManifest, clock: &Clock, out_dir: PathBuf, mut exit_code: i32) -> RunReport {
    manifest.wall_clock_seconds = clock.start.elapsed().as_secs_f64();
    if let Err(e) = manifest.write(&out_dir) {
        eprintln!("cannot write manifest to {}: {e}", out_dir.display());
        exit_code = exit_code.max(EXIT_CHECKS_FAILED);
    }
    RunReport {
        manifest,
        out_dir,
        exit_code,
    }
}

fn failed(mut manifest: RunManifest, clock: &Clock, out_dir: PathBuf, err: &LabError) -> RunReport {
    let category = err.category();
    manifest.status = "failed".into();
    manifest.error = Some(ErrorRecord {
        category: category.as_str().into(),
        message: err.to_string(),
    });
    finish(manifest, clock, out_dir, exit_code(category))
}

/// Loads the file and runs it. A manifest is written even when the file
/// cannot be read or parsed.
pub fn run_path(path: &Path, overrides: &Overrides) -> RunReport {
    let clock = Clock::start();
    match ExperimentConfig::load(path) {
        Ok(cfg) => run_with_clock(cfg, overrides, clock),
        Err(e) => {
            let out_dir = resolve_out_dir(overrides.out.as_deref(), None);
            failed(blank_manifest(&clock), &clock, out_dir, &e)
        }
    }
}

pub fn run_config(cfg: ExperimentConfig, overrides: &Overrides) -> RunReport {
    run_with_clock(cfg, overrides, Clock::start())
}

fn run_with_clock(mut cfg: ExperimentConfig, overrides: &Overrides, clock: Clock) -> RunReport {
    if let Some(seed) = overrides.seed {
        cfg.seed = seed;
    }
    if let Some(workers) = overrides.workers {
        cfg.workers = workers;
    }
    let out_dir = resolve_out_dir(overrides.out.as_deref(), cfg.output_dir.as_deref());
    let mut manifest = blank_manifest(&clock);
    let echo = serde_json::to_value(&cfg).unwrap_or(Value::Null);
    manifest.experiment = Some(cfg.experiment.as_str().to_string());
    manifest.config_sha256 = Some(config_digest(&echo));
    manifest.config = Some(echo);
    manifest.seed = Some(cfg.seed);

    if let Err(e) = cfg.validate() {
        return failed(manifest, &clock, out_dir, &e);
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build() {
        Ok(p) => p,
        Err(e) => {
            let err = LabError::InvalidInput(format!("cannot start {} workers: {e}", cfg.workers));
            return failed(manifest, &clock, out_dir, &err);
        }
    };
    let outcome = match pool.install(|| experiments::execute(&cfg)) {
        Ok(o) => o,
        Err(e) => return failed(manifest, &clock, out_dir, &e),
    };

    let mut exit = EXIT_OK;
    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        eprintln!("cannot create {}: {e}", out_dir.display());
        exit = EXIT_CHECKS_FAILED;
    }
    for t in &outcome.tables {
        if let Err(e) = std::fs::write(out_dir.join(&t.name), &t.body) {
            eprintln!("cannot write {}: {e}", t.name);
            exit = EXIT_CHECKS_FAILED;
        }
        manifest.outputs.push(OutputFile {
            file: t.name.clone(),
            rows: t.rows,
            sha256: t.sha256(),
        });
    }
    manifest.status = "ok".into();
    manifest.passed = outcome.checks.iter().all(|c| c.passed);
    manifest.results = outcome.results;
    manifest.checks = outcome.checks;
    if !manifest.passed {
        exit = EXIT_CHECKS_FAILED;
    }
    finish(manifest, &clock, out_dir, exit)
}

/// Parses and range-checks a configuration without running it.
pub fn validate_path(path: &Path) -> Result<ExperimentConfig, LabError> {
    let cfg = ExperimentConfig::load(path)?;
    cfg.validate()?;
    Ok(cfg)
}
