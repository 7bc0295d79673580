//! Sweep of the identity between the Fisher and editor information integrals.

use serde::{Deserialize, Serialize};

use crate::oracle::lemma_sides;

use super::config::LemmaConfig;
use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaRow {
    pub pair: usize,
    pub beta: f64,
    pub fisher: f64,
    pub pe: f64,
    pub violation: f64,
    pub exact_zero: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub rows: Vec<LemmaRow>,
    pub max_violation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

pub fn check_lemma(config: &LemmaConfig) -> Result<LemmaReport, HarnessError> {
    let mut rows = Vec::new();
    for (index, pair) in config.pairs.iter().enumerate() {
        for &beta in &config.betas {
            let s = lemma_sides(pair, beta, &config.quadrature)?;
            rows.push(LemmaRow {
                pair: index,
                beta,
                fisher: s.fisher,
                pe: s.pe,
                violation: s.violation,
                exact_zero: s.exact_zero,
            });
        }
    }
    let max_violation = rows.iter().fold(0.0, |m: f64, r| m.max(r.violation));
    Ok(LemmaReport {
        rows,
        max_violation,
        tolerance: config.tolerance,
        passed: max_violation <= config.tolerance,
    })
}
