//! Experiment configuration: a versioned JSON document.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::density::{KnownDensity, KnownDensityPair, KnownDensitySet};
use crate::dirichlet::{DirichletState, SecondMomentPolicy};
use crate::gaussian_mean::{GaussianState, MeanMixtureModel};
use crate::quadrature::QuadratureSpec;
use crate::special::SolverSettings;
use crate::weight::{BetaState, EpOptions};

use super::HarnessError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    /// Gaussian components N(c_j μ, σ_j²) sharing an unknown μ.
    MeanMixture { components: MeanMixtureModel },
    /// Two known densities with unknown weight β on the first.
    KnownPair { f1: KnownDensity, f2: KnownDensity },
    /// J known densities with unknown weight vector.
    KnownSet { densities: KnownDensitySet },
}

impl ModelSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ModelSpec::MeanMixture { .. } => "mean_mixture",
            ModelSpec::KnownPair { .. } => "known_pair",
            ModelSpec::KnownSet { .. } => "known_set",
        }
    }

    pub fn pair(&self) -> Option<KnownDensityPair> {
        match self {
            ModelSpec::KnownPair { f1, f2 } => Some(KnownDensityPair {
                f1: f1.clone(),
                f2: f2.clone(),
            }),
            _ => None,
        }
    }

    /// The densities as a set (a pair is a set of two).
    pub fn set(&self) -> Option<KnownDensitySet> {
        match self {
            ModelSpec::KnownPair { .. } => self.pair().map(KnownDensitySet::from),
            ModelSpec::KnownSet { densities } => Some(densities.clone()),
            ModelSpec::MeanMixture { .. } => None,
        }
    }
}

/// μ for a mean mixture, β for a pair, a weight vector for a set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Truth {
    Scalar(f64),
    Vector(Vec<f64>),
}

/// (a, b) for Gaussian or Beta priors, a vector for Dirichlet priors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PriorSpec {
    Pair { a: f64, b: f64 },
    Vector { a: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Adf,
    Qb,
    Pe,
    Kl,
    Vb,
    Confirmed,
    Ep,
    DirichletPe,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Adf => "adf",
            Method::Qb => "qb",
            Method::Pe => "pe",
            Method::Kl => "kl",
            Method::Vb => "vb",
            Method::Confirmed => "confirmed",
            Method::Ep => "ep",
            Method::DirichletPe => "dirichlet-pe",
        }
    }

    fn supports(&self, model: &ModelSpec) -> bool {
        match model {
            ModelSpec::MeanMixture { components } => match self {
                Method::Adf => true,
                Method::Qb | Method::Confirmed => components.is_symmetric(),
                _ => false,
            },
            ModelSpec::KnownPair { .. } => !matches!(self, Method::Adf),
            ModelSpec::KnownSet { .. } => {
                matches!(self, Method::Qb | Method::Confirmed | Method::DirichletPe)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleOptions {
    /// Compute the quadrature posterior of the parameter from the data.
    pub grid: bool,
    /// Compute Fisher-information integrals at the true parameter.
    pub fisher: bool,
    /// Also enumerate allocations when n does not exceed this limit.
    pub enumeration_limit: usize,
    pub quadrature: QuadratureSpec,
    pub solver: SolverSettings,
    pub ep: EpOptions,
    pub dirichlet_policy: SecondMomentPolicy,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            grid: true,
            fisher: true,
            enumeration_limit: crate::oracle::DEFAULT_ENUMERATION_LIMIT,
            quadrature: QuadratureSpec::default(),
            solver: SolverSettings::default(),
            ep: EpOptions::default(),
            dirichlet_policy: SecondMomentPolicy::AvgVariance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputSpec {
    pub trace: String,
    pub summary: String,
    pub data: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            trace: "trace".into(),
            summary: "summary.json".into(),
            data: "data".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub model: ModelSpec,
    pub truth: Truth,
    pub prior: PriorSpec,
    pub n: usize,
    pub seed: u64,
    /// Stream index of this replicate; replicates of one seed never overlap.
    #[serde(default)]
    pub replicate: u64,
    pub methods: Vec<Method>,
    #[serde(default)]
    pub oracle: OracleOptions,
    #[serde(default)]
    pub output: OutputSpec,
}

fn invalid(message: impl Into<String>) -> HarnessError {
    HarnessError::Config(message.into())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.n == 0 {
            return Err(invalid("n must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(invalid("no methods requested"));
        }
        for m in &self.methods {
            if !m.supports(&self.model) {
                return Err(invalid(format!(
                    "method {} is not available for model {}",
                    m.name(),
                    self.model.kind()
                )));
            }
        }
        self.truth_weights()?;
        self.oracle.quadrature.validate()?;
        self.oracle.solver.validate()?;
        match (&self.model, &self.prior) {
            (ModelSpec::MeanMixture { .. }, PriorSpec::Pair { a, b }) => {
                GaussianState::new(*a, *b)?;
            }
            (ModelSpec::KnownPair { .. }, PriorSpec::Pair { a, b }) => {
                BetaState::new(*a, *b)?;
            }
            (ModelSpec::KnownSet { densities }, PriorSpec::Vector { a }) => {
                if a.len() != densities.len() {
                    return Err(invalid("prior length differs from the number of densities"));
                }
                DirichletState::new(a.clone())?;
            }
            _ => return Err(invalid("prior shape does not fit the model")),
        }
        Ok(())
    }

    /// The true weight vector, validated against the simplex; `None` for a
    /// mean mixture, whose truth is μ.
    pub fn truth_weights(&self) -> Result<Option<Vec<f64>>, HarnessError> {
        let weights = match (&self.model, &self.truth) {
            (ModelSpec::MeanMixture { .. }, Truth::Scalar(mu)) => {
                if !mu.is_finite() {
                    return Err(invalid("true mean must be finite"));
                }
                return Ok(None);
            }
            (ModelSpec::KnownPair { .. }, Truth::Scalar(beta)) => vec![*beta, 1.0 - beta],
            (ModelSpec::KnownSet { densities }, Truth::Vector(w)) => {
                if w.len() != densities.len() {
                    return Err(invalid(
                        "weight vector length differs from the number of densities",
                    ));
                }
                w.clone()
            }
            _ => return Err(invalid("truth shape does not fit the model")),
        };
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|w| !(0.0..=1.0).contains(w)) || (total - 1.0).abs() > 1e-12 {
            return Err(invalid(format!(
                "weights {weights:?} are not in the simplex"
            )));
        }
        Ok(Some(weights))
    }

    pub fn beta_prior(&self) -> Option<BetaState> {
        match self.prior {
            PriorSpec::Pair { a, b } if matches!(self.model, ModelSpec::KnownPair { .. }) => {
                Some(BetaState { a, b })
            }
            _ => None,
        }
    }

    pub fn gaussian_prior(&self) -> Option<GaussianState> {
        match self.prior {
            PriorSpec::Pair { a, b } if matches!(self.model, ModelSpec::MeanMixture { .. }) => {
                Some(GaussianState { a, b })
            }
            _ => None,
        }
    }

    /// Dirichlet prior for set models; a Beta prior reads as a two-cell one.
    pub fn dirichlet_prior(&self) -> Option<DirichletState> {
        match (&self.model, &self.prior) {
            (ModelSpec::KnownSet { .. }, PriorSpec::Vector { a }) => {
                Some(DirichletState { a: a.clone() })
            }
            (ModelSpec::KnownPair { .. }, PriorSpec::Pair { a, b }) => {
                Some(DirichletState { a: vec![*a, *b] })
            }
            _ => None,
        }
    }
}

/// Sweep over density pairs and weights for the information identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaConfig {
    pub schema_version: u32,
    pub pairs: Vec<KnownDensityPair>,
    pub betas: Vec<f64>,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default = "default_lemma_tolerance")]
    pub tolerance: f64,
}

fn default_lemma_tolerance() -> f64 {
    1e-6
}

impl Default for LemmaConfig {
    /// Gaussian pairs of varied separation and spread, β ∈ {0.1, …, 0.9}.
    fn default() -> Self {
        let pairs = [
            (0.0, 1.0, 1.0, 1.0),
            (0.0, 1.0, 3.0, 1.0),
            (-1.0, 0.5, 1.0, 2.0),
            (0.0, 1.0, 0.0, 3.0),
            (2.0, 1.5, -0.5, 0.7),
        ]
        .into_iter()
        .map(|(m1, s1, m2, s2)| KnownDensityPair::gaussians(m1, s1, m2, s2).expect("valid"))
        .collect();
        Self {
            schema_version: SCHEMA_VERSION,
            pairs,
            betas: (1..=9).map(|k| k as f64 / 10.0).collect(),
            quadrature: QuadratureSpec::default(),
            tolerance: default_lemma_tolerance(),
        }
    }
}

impl LemmaConfig {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let config: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if config.schema_version != SCHEMA_VERSION {
            return Err(invalid(format!(
                "unsupported schema_version {}",
                config.schema_version
            )));
        }
        if config.pairs.is_empty() || config.betas.is_empty() {
            return Err(invalid("lemma sweep needs at least one pair and one beta"));
        }
        config.quadrature.validate()?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAIR: &str = r#"{
        "schema_version": 1,
        "model": {"kind": "known_pair",
                  "f1": {"kind": "gaussian", "mean": 0, "sd": 1},
                  "f2": {"kind": "gaussian", "mean": 1, "sd": 1}},
        "truth": 0.3,
        "prior": {"a": 1, "b": 1},
        "n": 50,
        "seed": 7,
        "methods": ["qb", "pe", "kl", "vb", "confirmed", "ep", "dirichlet-pe"]
    }"#;

    #[test]
    fn parses_pair_config() {
        let c = ExperimentConfig::from_json(PAIR).unwrap();
        assert_eq!(c.methods.len(), 7);
        assert_eq!(c.beta_prior(), Some(BetaState { a: 1.0, b: 1.0 }));
        assert_eq!(c.truth_weights().unwrap(), Some(vec![0.3, 0.7]));
        assert!(c.oracle.grid);
    }

    #[test]
    fn rejects_bad_configs() {
        let bad_version = PAIR.replace("\"schema_version\": 1", "\"schema_version\": 9");
        assert!(ExperimentConfig::from_json(&bad_version).is_err());
        let zero_n = PAIR.replace("\"n\": 50", "\"n\": 0");
        assert!(ExperimentConfig::from_json(&zero_n).is_err());
        let bad_truth = PAIR.replace("\"truth\": 0.3", "\"truth\": 1.3");
        assert!(ExperimentConfig::from_json(&bad_truth).is_err());
        let bad_method = PAIR.replace("\"qb\",", "\"adf\",");
        assert!(ExperimentConfig::from_json(&bad_method).is_err());
        let unknown = PAIR.replace("\"qb\",", "\"gibbs\",");
        assert!(ExperimentConfig::from_json(&unknown).is_err());
    }

    #[test]
    fn mean_mixture_method_compatibility() {
        let sym = r#"{
            "schema_version": 1,
            "model": {"kind": "mean_mixture", "components": [
                {"c": -1, "sigma": 1, "v": 0.5}, {"c": 1, "sigma": 1, "v": 0.5}]},
            "truth": 1.5, "prior": {"a": 0, "b": 1}, "n": 10, "seed": 1,
            "methods": ["adf", "qb", "confirmed"]
        }"#;
        assert!(ExperimentConfig::from_json(sym).is_ok());
        let clutter = sym.replace(
            "\"c\": -1, \"sigma\": 1",
            "\"c\": 0, \"sigma\": 3.1622776601683795",
        );
        assert!(ExperimentConfig::from_json(&clutter).is_err());
        let adf_only = clutter.replace("\"adf\", \"qb\", \"confirmed\"", "\"adf\"");
        assert!(ExperimentConfig::from_json(&adf_only).is_ok());
    }

    #[test]
    fn set_config() {
        let set = r#"{
            "schema_version": 1,
            "model": {"kind": "known_set", "densities": [
                {"kind": "gaussian", "mean": -2, "sd": 1},
                {"kind": "gaussian", "mean": 0, "sd": 1},
                {"kind": "gaussian", "mean": 2, "sd": 1}]},
            "truth": [0.2, 0.3, 0.5], "prior": {"a": [1, 1, 1]}, "n": 10, "seed": 1,
            "methods": ["qb", "dirichlet-pe", "confirmed"]
        }"#;
        let c = ExperimentConfig::from_json(set).unwrap();
        assert_eq!(c.dirichlet_prior().unwrap().len(), 3);
        let off_simplex = set.replace("[0.2, 0.3, 0.5]", "[0.2, 0.3, 0.6]");
        assert!(ExperimentConfig::from_json(&off_simplex).is_err());
        let wrong_prior = set.replace("[1, 1, 1]", "[1, 1]");
        assert!(ExperimentConfig::from_json(&wrong_prior).is_err());
    }
}
