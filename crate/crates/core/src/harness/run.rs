//! Runs every requested method over one simulated stream.

use serde::{Deserialize, Serialize};

use crate::dirichlet::{
    dir_confirmed_update, dir_pe_update_with_responsibilities, dir_responsibilities, DirichletState,
};
use crate::error::Error;
use crate::gaussian_mean::{self, component_posteriors, CountedGaussianState, GaussianState};
use crate::oracle::{
    exact_beta_posterior, fisher_information_beta, fisher_information_mu, grid_beta_posterior,
    grid_mu_posterior, pe_information_beta, PosteriorSummary,
};
use crate::weight::{
    self, asymptotic_variances, ep_fit, BetaState, SkippedSite, UpdateDiagnostics,
};

use super::config::{ExperimentConfig, Method, ModelSpec, Truth};
use super::simulate::{simulate, Observation};
use super::HarnessError;

/// State of one method after one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub method: Method,
    pub n: usize,
    /// (a, b) for Beta and Gaussian states, (a_1, …, a_J) for Dirichlet.
    pub hyperparameters: Vec<f64>,
    /// Mean (of μ, of β, or of the first weight).
    #[serde(rename = "E")]
    pub e: f64,
    /// Variance matching `e`.
    #[serde(rename = "V")]
    pub v: f64,
    /// Total mass a + b (Σ a_j), or precision 1/b for Gaussian states.
    #[serde(rename = "L")]
    pub l: f64,
    pub w1: Option<f64>,
    pub epsilon: Option<f64>,
    /// Change in `l` over the step.
    pub mass_increment: Option<f64>,
}

impl TraceRow {
    fn beta(method: Method, n: usize, s: &BetaState, diag: Option<UpdateDiagnostics>) -> Self {
        Self {
            method,
            n,
            hyperparameters: vec![s.a, s.b],
            e: s.mean(),
            v: s.variance(),
            l: s.mass(),
            w1: diag.map(|d| d.w1),
            epsilon: diag.map(|d| d.epsilon),
            mass_increment: diag.map(|d| d.mass_increment),
        }
    }

    fn gaussian(method: Method, n: usize, s: &GaussianState, w1: Option<f64>, prev: f64) -> Self {
        Self {
            method,
            n,
            hyperparameters: vec![s.a, s.b],
            e: s.a,
            v: s.b,
            l: s.precision(),
            w1,
            epsilon: None,
            mass_increment: Some(s.precision() - prev),
        }
    }

    fn dirichlet(method: Method, n: usize, s: &DirichletState, w1: Option<f64>, prev: f64) -> Self {
        Self {
            method,
            n,
            hyperparameters: s.a.clone(),
            e: s.means()[0],
            v: s.variances()[0],
            l: s.mass(),
            w1,
            epsilon: None,
            mass_increment: Some(s.mass() - prev),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpSummary {
    pub sweeps_used: usize,
    pub converged: bool,
    pub skipped: Vec<SkippedSite>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub hyperparameters: Vec<f64>,
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "V")]
    pub v: f64,
    #[serde(rename = "L")]
    pub l: f64,
    /// n · V_n.
    pub n_v: f64,
    /// n · V_n · I, which tends to 1 for an asymptotically efficient method.
    pub n_v_information: Option<f64>,
    /// V_n / V_exact from the quadrature posterior.
    pub v_over_exact: Option<f64>,
    pub ep: Option<EpSummary>,
}

/// Limiting n·V predictions for the weight of a pair; the first three are
/// equal by construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Predictions {
    #[serde(rename = "V_CO")]
    pub confirmed: f64,
    #[serde(rename = "V_QB")]
    pub quasi_bayes: f64,
    #[serde(rename = "V_VA")]
    pub variational: f64,
    #[serde(rename = "V_ML")]
    pub maximum_likelihood: f64,
    #[serde(rename = "V_PE")]
    pub probabilistic_editor: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    /// Exact posterior by enumeration (small n only).
    pub exact: Option<PosteriorSummary>,
    /// Quadrature posterior; its variance is V_exact.
    pub grid: Option<PosteriorSummary>,
    /// Fisher information I per observation at the true parameter.
    pub fisher_information: Option<f64>,
    /// 1/I, the limiting n·V of an efficient estimator.
    pub inverse_information: Option<f64>,
    /// (1/(β(1−β))){1 − ∫f1f2/f}, for pairs.
    pub pe_information: Option<f64>,
    /// Limiting n·V of each method, for pairs.
    pub predictions: Option<Predictions>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub model: String,
    pub n: usize,
    pub seed: u64,
    pub replicate: u64,
    pub truth: Truth,
    pub methods: Vec<MethodSummary>,
    pub oracle: OracleSummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub data: Vec<Observation>,
    pub trace: Vec<TraceRow>,
    pub summary: RunSummary,
}

fn step_err(method: Method, step: usize) -> impl Fn(Error) -> HarnessError {
    move |source| HarnessError::Method {
        method: method.name(),
        step,
        source,
    }
}

/// Trace of one method over the stream; EP contributes a single terminal row.
fn run_method(
    config: &ExperimentConfig,
    method: Method,
    data: &[Observation],
) -> Result<(Vec<TraceRow>, Option<EpSummary>), HarnessError> {
    let mut rows = Vec::with_capacity(data.len());
    let opts = &config.oracle;
    match &config.model {
        ModelSpec::MeanMixture { components: model } => {
            let prior = config.gaussian_prior().expect("validated prior");
            match method {
                Method::Adf => {
                    let mut s = prior;
                    for (i, o) in data.iter().enumerate() {
                        let w1 = component_posteriors(model, &s, o.x)[0].w;
                        let prev = s.precision();
                        s = gaussian_mean::adf_update(model, &s, o.x)
                            .map_err(step_err(method, i + 1))?;
                        rows.push(TraceRow::gaussian(method, i + 1, &s, Some(w1), prev));
                    }
                }
                Method::Qb | Method::Confirmed => {
                    let mut s = CountedGaussianState::initial(prior.a);
                    for (i, o) in data.iter().enumerate() {
                        let prev = s.state.precision();
                        s = if method == Method::Qb {
                            gaussian_mean::quasi_bayes_update(model, &s, o.x)
                        } else {
                            gaussian_mean::confirmed_update(&s, o.x, o.z)
                        }
                        .map_err(step_err(method, i + 1))?;
                        rows.push(TraceRow::gaussian(method, i + 1, &s.state, None, prev));
                    }
                }
                _ => unreachable!("validated method set"),
            }
        }
        ModelSpec::KnownPair { .. } if method != Method::DirichletPe => {
            let pair = config.model.pair().expect("pair model");
            let prior = config.beta_prior().expect("validated prior");
            if method == Method::Ep {
                let xs: Vec<f64> = data.iter().map(|o| o.x).collect();
                let fit = ep_fit(&pair, &prior, &xs, &opts.ep).map_err(step_err(method, 0))?;
                rows.push(TraceRow::beta(method, data.len(), &fit.state, None));
                return Ok((
                    rows,
                    Some(EpSummary {
                        sweeps_used: fit.sweeps_used,
                        converged: fit.converged,
                        skipped: fit.skipped,
                    }),
                ));
            }
            let mut s = prior;
            for (i, o) in data.iter().enumerate() {
                let err = step_err(method, i + 1);
                let (next, diag) = match method {
                    Method::Qb => weight::quasi_bayes_update(&pair, &s, o.x).map_err(err)?,
                    Method::Pe => weight::pe_update(&pair, &s, o.x).map_err(err)?,
                    Method::Kl => weight::kl_update(&pair, &s, o.x, &opts.solver).map_err(err)?,
                    Method::Vb => weight::vb_recursive_update(&pair, &s, o.x).map_err(err)?,
                    Method::Confirmed => {
                        let next = weight::confirmed_update(&s, o.z).map_err(err)?;
                        let w1 = if o.z == 1 { 1.0 } else { 0.0 };
                        let e = next.mean();
                        let diag = UpdateDiagnostics {
                            w1,
                            mass_increment: 1.0,
                            epsilon: w1 * (1.0 - w1) / (e * (1.0 - e)),
                        };
                        (next, diag)
                    }
                    _ => unreachable!("validated method set"),
                };
                s = next;
                rows.push(TraceRow::beta(method, i + 1, &s, Some(diag)));
            }
        }
        _ => {
            let set = config.model.set().expect("set model");
            let mut s = config.dirichlet_prior().expect("validated prior");
            for (i, o) in data.iter().enumerate() {
                let err = step_err(method, i + 1);
                let prev = s.mass();
                let (next, w1) = match method {
                    Method::Confirmed => (dir_confirmed_update(&s, o.z).map_err(err)?, None),
                    Method::Qb | Method::DirichletPe => {
                        let w = dir_responsibilities(&set, &s, o.x).map_err(&err)?;
                        let next = if method == Method::Qb {
                            DirichletState {
                                a: s.a.iter().zip(&w).map(|(a, w)| a + w).collect(),
                            }
                        } else {
                            dir_pe_update_with_responsibilities(&s, &w, opts.dirichlet_policy)
                                .map_err(&err)?
                        };
                        (next, Some(w[0]))
                    }
                    _ => unreachable!("validated method set"),
                };
                s = next;
                rows.push(TraceRow::dirichlet(method, i + 1, &s, w1, prev));
            }
        }
    }
    Ok((rows, None))
}

/// Oracle quantities for the configured model, true parameter and data.
pub fn oracle_report(
    config: &ExperimentConfig,
    data: &[Observation],
) -> Result<OracleSummary, HarnessError> {
    let opts = &config.oracle;
    let xs: Vec<f64> = data.iter().map(|o| o.x).collect();
    let mut out = OracleSummary::default();
    match (&config.model, &config.truth) {
        (ModelSpec::MeanMixture { components }, Truth::Scalar(mu)) => {
            let prior = config.gaussian_prior().expect("validated prior");
            if opts.grid {
                out.grid = Some(grid_mu_posterior(
                    components,
                    &prior,
                    &xs,
                    &opts.quadrature,
                )?);
            }
            if opts.fisher {
                let info = fisher_information_mu(components, *mu, &opts.quadrature)?;
                out.fisher_information = Some(info);
                out.inverse_information = (info > 0.0).then(|| 1.0 / info);
            }
        }
        (ModelSpec::KnownPair { .. }, Truth::Scalar(beta)) => {
            let pair = config.model.pair().expect("pair model");
            let prior = config.beta_prior().expect("validated prior");
            if xs.len() <= opts.enumeration_limit {
                out.exact =
                    Some(exact_beta_posterior(&pair, &prior, &xs, opts.enumeration_limit)?.summary);
            }
            if opts.grid {
                out.grid = Some(grid_beta_posterior(&pair, &prior, &xs, &opts.quadrature)?);
            }
            if opts.fisher && *beta > 0.0 && *beta < 1.0 {
                let info = fisher_information_beta(&pair, *beta, &opts.quadrature)?;
                out.fisher_information = Some(info);
                out.pe_information = Some(pe_information_beta(&pair, *beta, &opts.quadrature)?);
                match asymptotic_variances(&pair, *beta, 1, &opts.quadrature) {
                    Ok(v) => {
                        out.inverse_information = Some(1.0 / info);
                        out.predictions = Some(Predictions {
                            confirmed: v.confirmed,
                            quasi_bayes: v.quasi_bayes,
                            variational: v.variational,
                            maximum_likelihood: v.maximum_likelihood,
                            probabilistic_editor: v.probabilistic_editor,
                        });
                    }
                    Err(Error::ZeroInformation) => {}
                    Err(e) => return Err(e.into()),
                }
            }
        }
        _ => {}
    }
    Ok(out)
}

/// Simulates, runs every method and computes the oracle summary.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput, HarnessError> {
    let data = simulate(config)?;
    let oracle = oracle_report(config, &data)?;
    let n = data.len() as f64;
    let mut trace = Vec::new();
    let mut methods = Vec::new();
    for &method in &config.methods {
        let (rows, ep) = run_method(config, method, &data)?;
        let last = rows.last().expect("n >= 1").clone();
        methods.push(MethodSummary {
            method,
            hyperparameters: last.hyperparameters.clone(),
            e: last.e,
            v: last.v,
            l: last.l,
            n_v: n * last.v,
            n_v_information: oracle.fisher_information.map(|i| n * last.v * i),
            v_over_exact: oracle.grid.map(|g| last.v / g.variance),
            ep,
        });
        trace.extend(rows);
    }
    Ok(RunOutput {
        data,
        trace,
        summary: RunSummary {
            schema_version: config.schema_version,
            model: config.model.kind().to_string(),
            n: config.n,
            seed: config.seed,
            replicate: config.replicate,
            truth: config.truth.clone(),
            methods,
            oracle,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpReport {
    pub state: BetaState,
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "V")]
    pub v: f64,
    pub sweeps_used: usize,
    pub converged: bool,
    pub skipped: Vec<SkippedSite>,
    pub grid: Option<PosteriorSummary>,
}

/// EP on the simulated stream, with the quadrature posterior for comparison.
pub fn ep_fit_report(config: &ExperimentConfig) -> Result<EpReport, HarnessError> {
    let (Some(pair), Some(prior)) = (config.model.pair(), config.beta_prior()) else {
        return Err(HarnessError::Config(
            "ep-fit needs a known_pair model".into(),
        ));
    };
    let data = simulate(config)?;
    let xs: Vec<f64> = data.iter().map(|o| o.x).collect();
    let fit = ep_fit(&pair, &prior, &xs, &config.oracle.ep)?;
    let grid = if config.oracle.grid {
        Some(grid_beta_posterior(
            &pair,
            &prior,
            &xs,
            &config.oracle.quadrature,
        )?)
    } else {
        None
    };
    Ok(EpReport {
        e: fit.state.mean(),
        v: fit.state.variance(),
        state: fit.state,
        sweeps_used: fit.sweeps_used,
        converged: fit.converged,
        skipped: fit.skipped,
        grid,
    })
}
