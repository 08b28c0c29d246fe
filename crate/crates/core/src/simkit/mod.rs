//! Seeded simulation: population generation, contamination, auxiliary
//! variables, sampling without replacement and the Monte Carlo studies.

pub mod config;
pub mod generate;
pub mod output;
pub mod rng;
pub mod sampling;
pub mod study;

use std::path::{Path, PathBuf};
use std::time::Instant;

pub use config::{canned, Scale, StudyConfig, StudyKind};
pub use generate::{contaminate, generate_auxiliary, generate_population, DistSpec, OutlierScenario};
pub use sampling::srswor;
pub use study::{approximation_study, bias_mse_study, mc_reference_cdf, run_study, StudyOutput};

use crate::error::{Error, Result};

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "FPSCALE_WORKERS";

/// Worker count from [`WORKERS_ENV`]; `None` means all cores.
pub fn workers_from_env() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) if v.trim().is_empty() => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(0) | Err(_) => Err(Error::Config(format!(
                "{WORKERS_ENV} must be a positive integer, got `{v}`"
            ))),
            Ok(k) => Ok(Some(k)),
        },
        Err(_) => Ok(None),
    }
}

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<(T, usize)> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = workers {
        builder = builder.num_threads(k);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let threads = pool.current_num_threads();
    Ok((pool.install(f), threads))
}

/// Runs a study and writes its CSV tables and manifest into `dir`.
pub fn run_to_dir(cfg: &StudyConfig, dir: &Path, workers: Option<usize>) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let start = Instant::now();
    let (out, threads) = with_workers(workers, || run_study(cfg))?;
    let out = out?;
    let tables = output::study_tables(cfg, &out);
    let manifest = output::Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        seed: cfg.seed,
        workers: threads,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        tables: tables.iter().map(|t| format!("{}.csv", t.name)).collect(),
        realized_correlations: output::realized_correlations(&out),
        config: cfg,
    };
    output::write_outputs(dir, &tables, &manifest)
}
