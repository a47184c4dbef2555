//! Scenario runner for the Hopfield laboratory: configuration parsing,
//! scenario dispatch and artifact/report writing.

pub mod config;
pub mod output;
pub mod scenarios;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

pub use config::{parse_config, parse_config_str, ConfigError, RunConfig, Scenario};
use output::Output;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] hopfield_core::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    /// 2 for numerics that did not converge, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(hopfield_core::Error::QuadratureNotConverged { .. })
            | CliError::Core(hopfield_core::Error::UnconvergedKappaGrid { .. }) => 2,
            _ => 1,
        }
    }

    pub fn record(&self) -> ErrorRecord {
        let (kind, pointer) = match self {
            CliError::Config(ConfigError::SchemaViolation { pointer, .. }) => ("SchemaViolation".to_string(), Some(pointer.clone())),
            CliError::Config(ConfigError::Io { .. }) | CliError::Io(_) => ("IOError".to_string(), None),
            CliError::Core(e) => (core_kind(e), None),
        };
        ErrorRecord { kind, message: self.to_string(), pointer }
    }
}

fn core_kind(e: &hopfield_core::Error) -> String {
    // The Debug form starts with the variant name.
    let s = format!("{e:?}");
    s.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("Error").to_string()
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pointer: Option<String>,
}

/// What a scenario hands back besides its files.
#[derive(Debug, Default)]
pub struct Outcome {
    pub headline: BTreeMap<String, Value>,
    pub convergence: BTreeMap<String, bool>,
    pub warnings: Vec<String>,
}

impl Outcome {
    pub fn set(&mut self, key: &str, v: impl Serialize) {
        self.headline.insert(key.to_string(), serde_json::to_value(v).expect("plain value"));
    }

    pub fn converged(&self) -> bool {
        self.convergence.values().all(|&c| c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    NotConverged,
    Error,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::NotConverged => 2,
            Status::Error => 1,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub wall_time_s: f64,
    pub threads: usize,
    pub version: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub status: Status,
    pub scenario: Scenario,
    pub config: Value,
    pub headline: BTreeMap<String, Value>,
    pub convergence: BTreeMap<String, bool>,
    pub artifacts: Vec<String>,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorRecord>,
    /// The only non-reproducible part of the output.
    pub metadata: Metadata,
}

/// Run a validated configuration, writing data files, `config.json`,
/// `summary.json` and `report.json` into `out_dir`.
pub fn run_scenario(cfg: &RunConfig, out_dir: &Path) -> Result<RunReport, CliError> {
    let start = Instant::now();
    let mut out = Output::new(out_dir, &cfg.raw.output.formats)?;
    // The exact configuration travels with every output directory.
    out.write_json("config.json", &cfg.echo())?;
    let result = scenarios::dispatch(cfg, &mut out);
    let mut warnings = cfg.warnings.clone();
    let (status, outcome, error) = match result {
        Ok(o) => {
            let status = if o.converged() { Status::Ok } else { Status::NotConverged };
            (status, o, None)
        }
        Err(e) => {
            let status = if e.exit_code() == 2 { Status::NotConverged } else { Status::Error };
            (status, Outcome::default(), Some(e.record()))
        }
    };
    warnings.extend(outcome.warnings.iter().cloned());
    if error.is_none() {
        let summary = serde_json::json!({
            "scenario": cfg.scenario,
            "headline": outcome.headline,
            "convergence": outcome.convergence,
        });
        out.write_json("summary.json", &summary)?;
    }
    let mut artifacts = vec!["config.json".to_string()];
    artifacts.extend(out.artifacts().iter().cloned());
    if error.is_none() {
        artifacts.push("summary.json".into());
    }
    let report = RunReport {
        status,
        scenario: cfg.scenario,
        config: cfg.echo(),
        headline: outcome.headline,
        convergence: outcome.convergence,
        artifacts,
        warnings,
        error,
        metadata: Metadata {
            wall_time_s: start.elapsed().as_secs_f64(),
            threads: rayon::current_num_threads(),
            version: env!("CARGO_PKG_VERSION"),
        },
    };
    out.write_json("report.json", &report)?;
    Ok(report)
}
