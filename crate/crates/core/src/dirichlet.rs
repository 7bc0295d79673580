//! Probabilistic-editor style recursion for Dir(a_1, …, a_J) approximations to
//! the weights of a mixture of J known densities.
//!
//! After one observation the exact posterior is Σ_j w_j Dir(a + δ_j). Its J−1
//! free means are matched exactly, which leaves the total mass L as the only
//! remaining degree of freedom. Every variance and covariance equation has the
//! shape
//!
//! ```text
//! X / (L_new + 1) = X / (L + 2) + Y / ((L + 2)(L + 1))
//! ```
//!
//! with (X, Y) = (E_j(1−E_j), w_j(1−w_j)) for a variance and (E_j E_k, w_j w_k)
//! for a covariance. For J > 2 these generically disagree on L_new, so a
//! policy averages them before solving.

use serde::{Deserialize, Serialize};

use crate::density::KnownDensitySet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DirichletState {
    pub a: Vec<f64>,
}

impl DirichletState {
    pub fn new(a: Vec<f64>) -> Result<Self> {
        let s = Self { a };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.a.len() < 2 {
            return Err(Error::InvalidState(
                "dirichlet state needs at least two cells".into(),
            ));
        }
        if self.a.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidState(format!(
                "dirichlet hyperparameters must be finite and > 0 (got {:?})",
                self.a
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.a.iter().sum()
    }

    pub fn means(&self) -> Vec<f64> {
        let l = self.mass();
        self.a.iter().map(|v| v / l).collect()
    }

    pub fn variances(&self) -> Vec<f64> {
        let l = self.mass();
        self.means()
            .into_iter()
            .map(|e| e * (1.0 - e) / (l + 1.0))
            .collect()
    }
}

/// Which second-moment equations are averaged to fix the updated mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SecondMomentPolicy {
    /// The J variance equations.
    AvgVariance,
    /// The J variance and J(J−1)/2 covariance equations, equally weighted.
    AvgVarianceCovariance,
}

fn check_compatible(set: &KnownDensitySet, state: &DirichletState) -> Result<()> {
    state.validate()?;
    if set.len() != state.len() {
        return Err(Error::InvalidModel(format!(
            "{} densities but {} hyperparameters",
            set.len(),
            state.len()
        )));
    }
    Ok(())
}

/// w_j = a_j f_j(x) / Σ_k a_k f_k(x), computed from log-weights.
pub fn dir_responsibilities(
    set: &KnownDensitySet,
    state: &DirichletState,
    x: f64,
) -> Result<Vec<f64>> {
    check_compatible(set, state)?;
    let logs: Vec<f64> = set
        .densities()
        .iter()
        .zip(&state.a)
        .map(|(d, a)| a.ln() + d.ln_pdf(x))
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::DegenerateObservation { x });
    }
    let weights: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Matched means E_j = (a_j + w_j) / (L + 1).
fn matched_means(state: &DirichletState, w: &[f64]) -> Vec<f64> {
    let l = state.mass();
    state
        .a
        .iter()
        .zip(w)
        .map(|(a, w)| (a + w) / (l + 1.0))
        .collect()
}

/// (X, Y) pairs of every second-moment equation admitted by `policy`.
fn equation_terms(means: &[f64], w: &[f64], policy: SecondMomentPolicy) -> Vec<(f64, f64)> {
    let mut terms: Vec<(f64, f64)> = means
        .iter()
        .zip(w)
        .map(|(e, w)| (e * (1.0 - e), w * (1.0 - w)))
        .collect();
    if policy == SecondMomentPolicy::AvgVarianceCovariance {
        for j in 0..means.len() {
            for k in j + 1..means.len() {
                terms.push((means[j] * means[k], w[j] * w[k]));
            }
        }
    }
    terms
}

/// Update from given responsibilities; see [`dir_pe_update`].
pub fn dir_pe_update_with_responsibilities(
    state: &DirichletState,
    w: &[f64],
    policy: SecondMomentPolicy,
) -> Result<DirichletState> {
    state.validate()?;
    if w.len() != state.len() {
        return Err(Error::InvalidModel("responsibility length mismatch".into()));
    }
    let l = state.mass();
    let means = matched_means(state, w);
    let terms = equation_terms(&means, w, policy);
    let count = terms.len() as f64;
    let mean_x = terms.iter().map(|t| t.0).sum::<f64>() / count;
    let mean_y = terms.iter().map(|t| t.1).sum::<f64>() / count;
    let mass = mean_x * (l + 1.0) * (l + 2.0) / (mean_x * (l + 1.0) + mean_y) - 1.0;
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::NonPositiveMass {
            mass,
            mean_x,
            mean_y,
        });
    }
    DirichletState::new(means.into_iter().map(|e| e * mass).collect())
}

/// Moment-matching update: means matched exactly, the mass fixed by the
/// averaged second-moment equation of `policy`, then A_j = L_new·E_j.
pub fn dir_pe_update(
    set: &KnownDensitySet,
    state: &DirichletState,
    x: f64,
    policy: SecondMomentPolicy,
) -> Result<DirichletState> {
    let w = dir_responsibilities(set, state, x)?;
    dir_pe_update_with_responsibilities(state, &w, policy)
}

/// a_j ← a_j + w_j.
pub fn dir_quasi_bayes_update(
    set: &KnownDensitySet,
    state: &DirichletState,
    x: f64,
) -> Result<DirichletState> {
    let w = dir_responsibilities(set, state, x)?;
    Ok(DirichletState {
        a: state.a.iter().zip(&w).map(|(a, w)| a + w).collect(),
    })
}

/// a_z ← a_z + 1 for an observed 1-based label z.
pub fn dir_confirmed_update(state: &DirichletState, z: usize) -> Result<DirichletState> {
    state.validate()?;
    if z == 0 || z > state.len() {
        return Err(Error::InvalidLabel(z));
    }
    let mut a = state.a.clone();
    a[z - 1] += 1.0;
    Ok(DirichletState { a })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondMomentResiduals {
    /// Signed residual of each variance equation, indexed by cell.
    pub variance: Vec<f64>,
    /// Signed residual of each covariance equation, for cells j < k.
    pub covariance: Vec<((usize, usize), f64)>,
}

impl SecondMomentResiduals {
    pub fn max_abs(&self) -> f64 {
        self.variance
            .iter()
            .copied()
            .chain(self.covariance.iter().map(|c| c.1))
            .fold(0.0, |m, r| m.max(r.abs()))
    }
}

/// Residuals of all second-moment matching equations when the updated mass is
/// `mass_candidate` (means matched exactly).
pub fn second_moment_residuals(
    set: &KnownDensitySet,
    state: &DirichletState,
    x: f64,
    mass_candidate: f64,
) -> Result<SecondMomentResiduals> {
    let w = dir_responsibilities(set, state, x)?;
    Ok(residuals_with_responsibilities(state, &w, mass_candidate))
}

pub fn residuals_with_responsibilities(
    state: &DirichletState,
    w: &[f64],
    mass_candidate: f64,
) -> SecondMomentResiduals {
    let l = state.mass();
    let e = matched_means(state, w);
    let old = 1.0 / (l + 2.0);
    let cross = 1.0 / ((l + 2.0) * (l + 1.0));
    let new = 1.0 / (mass_candidate + 1.0);
    let variance = e
        .iter()
        .zip(w)
        .map(|(e, w)| e * (1.0 - e) * new - (e * (1.0 - e) * old + w * (1.0 - w) * cross))
        .collect();
    let mut covariance = Vec::new();
    for j in 0..e.len() {
        for k in j + 1..e.len() {
            let r = -e[j] * e[k] * new - (-e[j] * e[k] * old - w[j] * w[k] * cross);
            covariance.push(((j, k), r));
        }
    }
    SecondMomentResiduals {
        variance,
        covariance,
    }
}

/// Per-equation values of the updated mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassCandidates {
    /// Mass solving variance equation j exactly.
    pub variance_exact: Vec<f64>,
    /// Leading-order version: L + 1 − w_j(1−w_j)/(E_j(1−E_j)).
    pub variance_approx: Vec<f64>,
    /// Leading-order covariance version: L + 1 − w_j w_k/(E_j E_k), j < k.
    pub covariance_approx: Vec<((usize, usize), f64)>,
}

impl MassCandidates {
    /// True when every pair of per-cell variance candidates differs by more
    /// than `tolerance`, which shows no single mass satisfies them all.
    pub fn pairwise_distinct(&self, tolerance: f64) -> bool {
        let c = &self.variance_approx;
        (0..c.len()).all(|j| (j + 1..c.len()).all(|k| (c[j] - c[k]).abs() > tolerance))
    }
}

pub fn mass_candidates(
    set: &KnownDensitySet,
    state: &DirichletState,
    x: f64,
) -> Result<MassCandidates> {
    let w = dir_responsibilities(set, state, x)?;
    Ok(candidates_with_responsibilities(state, &w))
}

pub fn candidates_with_responsibilities(state: &DirichletState, w: &[f64]) -> MassCandidates {
    let l = state.mass();
    let e = matched_means(state, w);
    let exact = |x: f64, y: f64| x * (l + 1.0) * (l + 2.0) / (x * (l + 1.0) + y) - 1.0;
    let variance_exact = e
        .iter()
        .zip(w)
        .map(|(e, w)| exact(e * (1.0 - e), w * (1.0 - w)))
        .collect();
    let variance_approx = e
        .iter()
        .zip(w)
        .map(|(e, w)| l + 1.0 - w * (1.0 - w) / (e * (1.0 - e)))
        .collect();
    let mut covariance_approx = Vec::new();
    for j in 0..e.len() {
        for k in j + 1..e.len() {
            covariance_approx.push(((j, k), l + 1.0 - w[j] * w[k] / (e[j] * e[k])));
        }
    }
    MassCandidates {
        variance_exact,
        variance_approx,
        covariance_approx,
    }
}
