//! Experiment runner for `heatlab-core`: configuration, CSV series and the
//! JSON run report.

pub mod config;
pub mod data;
pub mod error;
pub mod experiments;
pub mod output;

pub use config::{ConfigFile, Experiment, Settings};
pub use error::{CliError, CliResult};
pub use experiments::run;
pub use output::Report;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "HEATLAB_THREADS";

/// Worker cap from `HEATLAB_THREADS`, if set.
pub fn thread_cap() -> CliResult<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::config(format!(
                "{THREADS_ENV}={v} is not a positive integer"
            ))),
        },
    }
}

/// Resolves, runs and returns the report with the process exit code.
pub fn execute(
    experiment: Experiment,
    file: Option<ConfigFile>,
    flags: ConfigFile,
) -> CliResult<(Report, i32)> {
    let settings = Settings::resolve(experiment, file, flags)?;
    let report = match thread_cap()? {
        Some(n) => heatlab_core::par::with_thread_cap(n, || run(&settings))?,
        None => run(&settings)?,
    };
    let code = if report.passed { 0 } else { 1 };
    Ok((report, code))
}
