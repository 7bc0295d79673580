//! Seeded simulation and experiment orchestration behind the command line.

pub mod config;
pub mod lemma;
pub mod output;
pub mod run;
pub mod simulate;

use serde::Serialize;

use crate::error::Error;

pub use config::{ExperimentConfig, LemmaConfig, Method, ModelSpec, OracleOptions};
pub use lemma::{check_lemma, LemmaReport};
pub use run::{ep_fit_report, oracle_report, run, RunOutput, RunSummary, TraceRow};
pub use simulate::{simulate, stream_rng, Observation};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),

    #[error("{method} at step {step}: {source}")]
    Method {
        method: &'static str,
        step: usize,
        #[source]
        source: Error,
    },

    #[error(transparent)]
    Core(#[from] Error),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    pub fn kind(&self) -> &'static str {
        match self {
            HarnessError::Config(_) => "config",
            HarnessError::Method { .. } => "method",
            HarnessError::Core(_) => "numerical",
            HarnessError::Io(_) => "io",
            HarnessError::Json(_) => "json",
            HarnessError::Csv(_) => "csv",
        }
    }

    /// The machine-readable record written to stderr on failure.
    pub fn record(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Body<'a> {
            kind: &'a str,
            message: String,
        }
        serde_json::json!({ "error": Body { kind: self.kind(), message: self.to_string() } })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}
