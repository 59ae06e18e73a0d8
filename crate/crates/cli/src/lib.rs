//! Batch front-end: configuration, ensembles, verification suites,
//! martingale traces and markdown reports.

pub mod config;
pub mod ensemble;
pub mod mart;
pub mod report;
pub mod suites;

pub use config::{CliError, CliResult, ConfigArgs, ExperimentConfig};
pub use report::VerifySummary;
pub use suites::{Outcome, Suite, SuiteReport};

/// Runs `suite` at every `n` of the config.
pub fn verify(suite: Suite, cfg: &ExperimentConfig) -> CliResult<VerifySummary> {
    Ok(VerifySummary {
        kind: "verify".into(),
        schema: ensemble::SCHEMA,
        config: cfg.clone(),
        reports: suites::run_suite(suite, cfg)?,
    })
}

/// Builds the global worker pool; `None` keeps the rayon default.
pub fn init_threads(threads: Option<usize>) -> CliResult<()> {
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Usage(format!("threads: {e}")))?;
    }
    Ok(())
}
