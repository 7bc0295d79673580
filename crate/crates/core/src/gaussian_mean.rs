//! Recursive Gaussian approximation N(a, b) for the unknown location μ of a
//! mixture whose j-th component is N(c_j μ, σ_j²) with known weight v_j.
//!
//! The filter state always advances through the exact moment match of the
//! one-step posterior (a Gaussian mixture over μ, see [`component_posteriors`]).
//! The leading-order increments and the information quantities exist as
//! diagnostics. They are all written in terms of
//!
//! ```text
//! R_j = c_j / σ_j,   S_j = (x − c_j a) / σ_j,
//! T_j = (v_j / σ_j) exp(−(x − a c_j)² / (2σ_j²))
//! ```
//!
//! with `a` replaced by μ for the score and observed information.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Tolerance on Σ v_j = 1.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanComponent {
    /// Multiplier on μ in the component mean.
    pub c: f64,
    pub sigma: f64,
    /// Mixing weight.
    pub v: f64,
}

/// Known constants {c_j, σ_j, v_j} of the mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<MeanComponent>", into = "Vec<MeanComponent>")]
pub struct MeanMixtureModel {
    components: Vec<MeanComponent>,
}

impl TryFrom<Vec<MeanComponent>> for MeanMixtureModel {
    type Error = Error;

    fn try_from(components: Vec<MeanComponent>) -> Result<Self> {
        Self::new(components)
    }
}

impl From<MeanMixtureModel> for Vec<MeanComponent> {
    fn from(model: MeanMixtureModel) -> Self {
        model.components
    }
}

impl MeanMixtureModel {
    pub fn new(components: Vec<MeanComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidModel(
                "mixture needs at least one component".into(),
            ));
        }
        for (j, comp) in components.iter().enumerate() {
            if !comp.c.is_finite() {
                return Err(Error::InvalidModel(format!(
                    "component {j}: c must be finite"
                )));
            }
            if !(comp.sigma.is_finite() && comp.sigma > 0.0) {
                return Err(Error::InvalidModel(format!(
                    "component {j}: sigma must be > 0"
                )));
            }
            if !(comp.v.is_finite() && comp.v > 0.0 && comp.v < 1.0 + WEIGHT_SUM_TOLERANCE) {
                return Err(Error::InvalidModel(format!(
                    "component {j}: weight must be in (0,1]"
                )));
            }
        }
        let total: f64 = components.iter().map(|c| c.v).sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::InvalidModel(format!(
                "weights sum to {total}, not 1"
            )));
        }
        Ok(Self { components })
    }

    /// Equal mixture of N(−μ, 1) (label 1) and N(μ, 1) (label 2).
    pub fn symmetric() -> Self {
        Self {
            components: vec![
                MeanComponent {
                    c: -1.0,
                    sigma: 1.0,
                    v: 0.5,
                },
                MeanComponent {
                    c: 1.0,
                    sigma: 1.0,
                    v: 0.5,
                },
            ],
        }
    }

    /// (1−v)·N(μ, 1) + v·N(0, 10).
    pub fn clutter(v: f64) -> Result<Self> {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::InvalidModel(format!(
                "clutter weight {v} must lie in (0,1)"
            )));
        }
        Ok(Self {
            components: vec![
                MeanComponent {
                    c: 1.0,
                    sigma: 1.0,
                    v: 1.0 - v,
                },
                MeanComponent {
                    c: 0.0,
                    sigma: 10f64.sqrt(),
                    v,
                },
            ],
        })
    }

    /// A single N(cμ, σ²) component: the conjugate Gaussian case.
    pub fn single(c: f64, sigma: f64) -> Result<Self> {
        Self::new(vec![MeanComponent { c, sigma, v: 1.0 }])
    }

    pub fn components(&self) -> &[MeanComponent] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// True for the equal-weight ±μ, unit-variance two-component model.
    pub fn is_symmetric(&self) -> bool {
        match self.components.as_slice() {
            [p, q] => {
                let unit = |m: &MeanComponent| m.sigma == 1.0 && (m.v - 0.5).abs() < 1e-15;
                unit(p) && unit(q) && ((p.c == -1.0 && q.c == 1.0) || (p.c == 1.0 && q.c == -1.0))
            }
            _ => false,
        }
    }

    /// Index of the component whose mean is −μ, when the model is symmetric.
    fn negative_component(&self) -> Option<usize> {
        if !self.is_symmetric() {
            return None;
        }
        self.components.iter().position(|m| m.c < 0.0)
    }

    /// Ancestral draw: component by weight, then Gaussian. Returns (x, 1-based label).
    pub fn sample<R: Rng + ?Sized>(&self, mu: f64, rng: &mut R) -> (f64, usize) {
        let u = rng.random::<f64>();
        let mut acc = 0.0;
        let mut chosen = self.components.len() - 1;
        for (j, comp) in self.components.iter().enumerate() {
            acc += comp.v;
            if u < acc {
                chosen = j;
                break;
            }
        }
        let comp = self.components[chosen];
        let x = Normal::new(comp.c * mu, comp.sigma)
            .expect("validated component")
            .sample(rng);
        (x, chosen + 1)
    }
}

/// Gaussian approximation N(a, b) to the posterior of μ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianState {
    pub a: f64,
    pub b: f64,
}

impl GaussianState {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        let state = Self { a, b };
        state.validate()?;
        Ok(state)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.b.is_finite() && self.b > 0.0) {
            return Err(Error::InvalidState(format!(
                "gaussian state needs finite a and b > 0 (got {}, {})",
                self.a, self.b
            )));
        }
        Ok(())
    }

    pub fn precision(&self) -> f64 {
        1.0 / self.b
    }
}

/// One component N(m, s2) of the one-step posterior for μ, with weight w.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentPosterior {
    pub w: f64,
    pub m: f64,
    pub s2: f64,
}

/// Gaussian state together with the number of updates applied to it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountedGaussianState {
    pub state: GaussianState,
    pub n: usize,
}

impl CountedGaussianState {
    /// The prior N(a0, 1) at count zero, so that b = 1/(n+1) at every step.
    pub fn initial(a0: f64) -> Self {
        Self {
            state: GaussianState { a: a0, b: 1.0 },
            n: 0,
        }
    }
}

/// Normalizes log-weights in place; returns the log of their sum.
///
/// When the maximum is not finite (every term underflowed or the inputs are
/// degenerate) the `fallback` log-weights are used instead.
fn normalize_log_weights(log_w: &mut [f64], fallback: &[f64]) -> f64 {
    let mut max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        log_w.copy_from_slice(fallback);
        max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    }
    let sum: f64 = log_w.iter().map(|l| (l - max).exp()).sum();
    for l in log_w.iter_mut() {
        *l = (*l - max).exp() / sum;
    }
    max + sum.ln()
}

/// ln f(x|μ) = ln Σ_j v_j N(x; c_j μ, σ_j²), with each component a full density.
pub fn log_density(model: &MeanMixtureModel, mu: f64, x: f64) -> f64 {
    let terms: Vec<f64> = model
        .components
        .iter()
        .map(|c| {
            let z = (x - c.c * mu) / c.sigma;
            c.v.ln() - c.sigma.ln() - HALF_LN_2PI - 0.5 * z * z
        })
        .collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// Exact one-step posterior for μ under prior N(a, b) and observation x:
/// the mixture Σ_j w_j N(m_j, s_j²).
pub fn component_posteriors(
    model: &MeanMixtureModel,
    state: &GaussianState,
    x: f64,
) -> Vec<ComponentPosterior> {
    let (a, b) = (state.a, state.b);
    let mut log_w = Vec::with_capacity(model.len());
    let mut fallback = Vec::with_capacity(model.len());
    let mut moments = Vec::with_capacity(model.len());
    for comp in &model.components {
        let prec_ratio = comp.c * comp.c / (comp.sigma * comp.sigma);
        let precision = 1.0 / b + prec_ratio;
        let s2 = 1.0 / precision;
        let m = (a / b + comp.c * x / (comp.sigma * comp.sigma)) * s2;
        let resid = x - a * comp.c;
        let spread = comp.sigma * comp.sigma + b * comp.c * comp.c;
        log_w.push(
            comp.v.ln() - comp.sigma.ln() - 0.5 * precision.ln() - resid * resid / (2.0 * spread),
        );
        fallback.push(comp.v.ln());
        moments.push((m, s2));
    }
    normalize_log_weights(&mut log_w, &fallback);
    log_w
        .into_iter()
        .zip(moments)
        .map(|(w, (m, s2))| ComponentPosterior { w, m, s2 })
        .collect()
}

/// Moment-matched update: N(A, B) with the mean and variance of the one-step
/// posterior mixture.
pub fn adf_update(
    model: &MeanMixtureModel,
    state: &GaussianState,
    x: f64,
) -> Result<GaussianState> {
    state.validate()?;
    crate::error::check_finite("adf_update", x)?;
    let parts = component_posteriors(model, state, x);
    let mean: f64 = parts.iter().map(|p| p.w * p.m).sum();
    let within: f64 = parts.iter().map(|p| p.w * p.s2).sum();
    let between: f64 = parts.iter().map(|p| p.w * (p.m - mean).powi(2)).sum();
    let next = GaussianState {
        a: mean,
        b: within + between,
    };
    next.validate()?;
    Ok(next)
}

/// Normalized T_j together with R_j and S_j, at location `center`.
struct LeadingTerms {
    tau: Vec<f64>,
    r: Vec<f64>,
    s: Vec<f64>,
}

impl LeadingTerms {
    fn at(model: &MeanMixtureModel, center: f64, x: f64) -> Self {
        let mut log_t = Vec::with_capacity(model.len());
        let mut fallback = Vec::with_capacity(model.len());
        let mut r = Vec::with_capacity(model.len());
        let mut s = Vec::with_capacity(model.len());
        for comp in &model.components {
            let sj = (x - comp.c * center) / comp.sigma;
            log_t.push(comp.v.ln() - comp.sigma.ln() - 0.5 * sj * sj);
            fallback.push(comp.v.ln() - comp.sigma.ln());
            r.push(comp.c / comp.sigma);
            s.push(sj);
        }
        normalize_log_weights(&mut log_t, &fallback);
        Self { tau: log_t, r, s }
    }

    /// Σ τ_j R_j S_j
    fn first(&self) -> f64 {
        self.tau
            .iter()
            .zip(&self.r)
            .zip(&self.s)
            .map(|((t, r), s)| t * r * s)
            .sum()
    }

    /// Σ τ_j R_j²
    fn complete(&self) -> f64 {
        self.tau.iter().zip(&self.r).map(|(t, r)| t * r * r).sum()
    }

    /// Σ τ_j R_j² − Σ τ_j R_j² S_j² + (Σ τ_j R_j S_j)²
    fn information(&self) -> f64 {
        let second: f64 = self
            .tau
            .iter()
            .zip(&self.r)
            .zip(&self.s)
            .map(|((t, r), s)| t * r * r * s * s)
            .sum();
        let first = self.first();
        self.complete() - second + first * first
    }
}

/// Leading O(b) term of A − a: b·Σ R_j S_j T_j / Σ T_j.
pub fn asymptotic_mean_increment(model: &MeanMixtureModel, state: &GaussianState, x: f64) -> f64 {
    state.b * LeadingTerms::at(model, state.a, x).first()
}

/// Leading O(1) term of B⁻¹ − b⁻¹.
pub fn asymptotic_precision_increment(
    model: &MeanMixtureModel,
    state: &GaussianState,
    x: f64,
) -> f64 {
    LeadingTerms::at(model, state.a, x).information()
}

/// −∂²/∂μ² ln f(x|μ).
pub fn observed_information(model: &MeanMixtureModel, mu: f64, x: f64) -> f64 {
    LeadingTerms::at(model, mu, x).information()
}

/// ∂/∂μ ln f(x|μ).
pub fn score(model: &MeanMixtureModel, mu: f64, x: f64) -> f64 {
    LeadingTerms::at(model, mu, x).first()
}

/// Expected complete-data information Σ R_j² T_j / Σ T_j given x. This is also
/// the leading precision increment of the variational approximation, and it
/// dominates [`asymptotic_precision_increment`].
pub fn complete_data_precision(model: &MeanMixtureModel, state: &GaussianState, x: f64) -> f64 {
    LeadingTerms::at(model, state.a, x).complete()
}

fn symmetric_responsibility(a: f64, x: f64) -> f64 {
    // weight of N(−a, 1): e1 / (e1 + e2) with e1/e2 = exp(−2ax)
    1.0 / (1.0 + (2.0 * a * x).exp())
}

/// Quasi-Bayes step for the symmetric model: the observation is split between
/// N(−a, 1) and N(a, 1) by responsibility, giving
/// A = a + (n+1)⁻¹{(1−w)x − wx − a}, B = (n+1)⁻¹ with n the updated count.
pub fn quasi_bayes_update(
    model: &MeanMixtureModel,
    counted: &CountedGaussianState,
    x: f64,
) -> Result<CountedGaussianState> {
    let Some(neg) = model.negative_component() else {
        return Err(Error::InvalidModel(
            "quasi-Bayes recursion is defined for the symmetric two-component model only".into(),
        ));
    };
    debug_assert!(neg < 2);
    counted.state.validate()?;
    crate::error::check_finite("quasi_bayes_update", x)?;
    let a = counted.state.a;
    let w = symmetric_responsibility(a, x);
    let n = counted.n + 1;
    let step = 1.0 / (n as f64 + 1.0);
    Ok(CountedGaussianState {
        state: GaussianState {
            a: a + step * ((1.0 - w) * x - w * x - a),
            b: step,
        },
        n,
    })
}

/// Confirmed-label step for the symmetric model; label 1 is N(−μ, 1), label 2
/// is N(μ, 1).
pub fn confirmed_update(
    counted: &CountedGaussianState,
    x: f64,
    z: usize,
) -> Result<CountedGaussianState> {
    let sign = match z {
        1 => -1.0,
        2 => 1.0,
        other => return Err(Error::InvalidLabel(other)),
    };
    counted.state.validate()?;
    crate::error::check_finite("confirmed_update", x)?;
    let n = counted.n + 1;
    let step = 1.0 / (n as f64 + 1.0);
    let a = counted.state.a;
    Ok(CountedGaussianState {
        state: GaussianState {
            a: a + step * (sign * x - a),
            b: step,
        },
        n,
    })
}

/// Closed forms of the general expressions for the two named special cases.
/// Each one rescales its exponentials by the larger exponent before dividing,
/// which leaves the displayed ratios unchanged.
pub mod closed_form {
    fn shifted(l1: f64, l2: f64) -> (f64, f64) {
        let m = l1.max(l2);
        ((l1 - m).exp(), (l2 - m).exp())
    }

    /// Symmetric model: b{(1−w)x − wx − a} with w the N(−a, 1) responsibility.
    pub fn symmetric_mean_increment(a: f64, b: f64, x: f64) -> f64 {
        let (e1, e2) = shifted(-0.5 * (x + a).powi(2), -0.5 * (x - a).powi(2));
        let w = e1 / (e1 + e2);
        b * ((1.0 - w) * x - w * x - a)
    }

    /// Symmetric model: 1 − 4x² e1 e2 / (e1 + e2)², at location `loc`.
    fn symmetric_information(loc: f64, x: f64) -> f64 {
        let (e1, e2) = shifted(-0.5 * (x + loc).powi(2), -0.5 * (x - loc).powi(2));
        1.0 - 4.0 * x * x * e1 * e2 / (e1 + e2).powi(2)
    }

    /// Symmetric model precision increment, at the current mean `a`.
    pub fn symmetric_precision_increment(a: f64, x: f64) -> f64 {
        symmetric_information(a, x)
    }

    /// Symmetric model observed information at μ.
    pub fn symmetric_observed_information(mu: f64, x: f64) -> f64 {
        symmetric_information(mu, x)
    }

    /// Clutter model: P/(P+Q) − Q·P·(x−loc)²/(P+Q)² with
    /// P = (1−v)e^{−(x−loc)²/2} and Q = (v/√10)e^{−x²/20}.
    fn clutter_information(v: f64, loc: f64, x: f64) -> f64 {
        let (p, q) = clutter_terms(v, loc, x);
        let d = x - loc;
        p / (p + q) - q * p * d * d / (p + q).powi(2)
    }

    fn clutter_terms(v: f64, loc: f64, x: f64) -> (f64, f64) {
        let (ep, eq) = shifted(-0.5 * (x - loc).powi(2), -x * x / 20.0);
        ((1.0 - v) * ep, v / 10f64.sqrt() * eq)
    }

    pub fn clutter_precision_increment(v: f64, a: f64, x: f64) -> f64 {
        clutter_information(v, a, x)
    }

    pub fn clutter_observed_information(v: f64, mu: f64, x: f64) -> f64 {
        clutter_information(v, mu, x)
    }

    /// Clutter model: b·w·(x − a), w the responsibility of N(a, 1).
    pub fn clutter_mean_increment(v: f64, a: f64, b: f64, x: f64) -> f64 {
        let (p, q) = clutter_terms(v, a, x);
        b * p / (p + q) * (x - a)
    }

    /// Clutter model: responsibility of the N(a, 1) component.
    pub fn clutter_responsibility(v: f64, a: f64, x: f64) -> f64 {
        let (p, q) = clutter_terms(v, a, x);
        p / (p + q)
    }
}
