//! Beta approximations Be(a, b) to the posterior of the mixing weight β in
//! f(x|β) = β f1(x) + (1−β) f2(x), for known f1 and f2.
//!
//! Every update sees the observation only through the responsibility
//! w1 = a f1(x) / (a f1(x) + b f2(x)). The rules differ in what they keep:
//!
//! | rule                 | mass L = a + b            | matches                    |
//! |----------------------|---------------------------|----------------------------|
//! | [`quasi_bayes_update`] | +1                      | posterior mean             |
//! | [`vb_recursive_update`] | +1                     | (digamma-weighted split)   |
//! | [`pe_update`]        | +1 − ε_n + O(1/L)         | mean and variance          |
//! | [`kl_update`]        | as PE asymptotically      | E[ln β], E[ln(1−β)]        |
//!
//! [`ep_fit`] iterates either of the last two over a fixed data set with
//! stored site factors.

use serde::{Deserialize, Serialize};

use crate::density::KnownDensityPair;
use crate::error::{Error, Result};
use crate::oracle;
use crate::quadrature::QuadratureSpec;
use crate::special::{psi, solve_digamma_system, SolverSettings};

/// Beta approximation Be(a, b).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaState {
    pub a: f64,
    pub b: f64,
}

impl BetaState {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        let s = Self { a, b };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.b.is_finite() && self.a > 0.0 && self.b > 0.0) {
            return Err(Error::InvalidState(format!(
                "beta state needs finite a, b > 0 (got {}, {})",
                self.a, self.b
            )));
        }
        Ok(())
    }

    /// L = a + b.
    pub fn mass(&self) -> f64 {
        self.a + self.b
    }

    /// E = a / (a + b).
    pub fn mean(&self) -> f64 {
        self.a / self.mass()
    }

    /// E[β²] = a(a+1) / ((a+b)(a+b+1)).
    pub fn second_moment(&self) -> f64 {
        let l = self.mass();
        self.a * (self.a + 1.0) / (l * (l + 1.0))
    }

    /// V = E(1−E) / (L+1).
    pub fn variance(&self) -> f64 {
        let l = self.mass();
        self.a * self.b / (l * l * (l + 1.0))
    }
}

/// One observation's site factor, as its additive contribution to (a, b).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EpSite {
    pub da: f64,
    pub db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateDiagnostics {
    /// Responsibility of f1 under the pre-update state.
    pub w1: f64,
    /// L_n − L_{n−1}.
    pub mass_increment: f64,
    /// ε_n = w1(1−w1) / (E_n(1−E_n)), with E_n the updated mean.
    pub epsilon: f64,
}

impl UpdateDiagnostics {
    fn new(w1: f64, before: &BetaState, after: &BetaState) -> Self {
        let e = after.mean();
        Self {
            w1,
            mass_increment: after.mass() - before.mass(),
            epsilon: w1 * (1.0 - w1) / (e * (1.0 - e)),
        }
    }
}

/// w1 from log-weights `ln a + ln f1` and `ln b + ln f2`.
fn two_way_split(log1: f64, log2: f64, x: f64) -> Result<f64> {
    if log1 == f64::NEG_INFINITY && log2 == f64::NEG_INFINITY {
        return Err(Error::DegenerateObservation { x });
    }
    if log1.is_nan() || log2.is_nan() {
        return Err(Error::DegenerateObservation { x });
    }
    // logistic of the log-odds, written to avoid overflow on either side
    let d = log2 - log1;
    Ok(if d > 0.0 {
        let e = (-d).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + d.exp())
    })
}

/// Quasi-Bayes responsibility w1 = a f1(x) / (a f1(x) + b f2(x)).
pub fn responsibility(pair: &KnownDensityPair, state: &BetaState, x: f64) -> Result<f64> {
    state.validate()?;
    two_way_split(
        state.a.ln() + pair.f1.ln_pdf(x),
        state.b.ln() + pair.f2.ln_pdf(x),
        x,
    )
}

/// a ← a + w1, b ← b + (1 − w1).
pub fn quasi_bayes_update(
    pair: &KnownDensityPair,
    state: &BetaState,
    x: f64,
) -> Result<(BetaState, UpdateDiagnostics)> {
    let w1 = responsibility(pair, state, x)?;
    let next = BetaState {
        a: state.a + w1,
        b: state.b + (1.0 - w1),
    };
    Ok((next, UpdateDiagnostics::new(w1, state, &next)))
}

/// Exact conjugate step when the label z ∈ {1, 2} is observed.
pub fn confirmed_update(state: &BetaState, z: usize) -> Result<BetaState> {
    state.validate()?;
    match z {
        1 => Ok(BetaState {
            a: state.a + 1.0,
            b: state.b,
        }),
        2 => Ok(BetaState {
            a: state.a,
            b: state.b + 1.0,
        }),
        other => Err(Error::InvalidLabel(other)),
    }
}

/// Recursive variational step: the observation is split with weights
/// proportional to exp(Ψ(a) − Ψ(a+b)) f1(x) and exp(Ψ(b) − Ψ(a+b)) f2(x).
/// The diagnostics carry that variational split as `w1`.
pub fn vb_recursive_update(
    pair: &KnownDensityPair,
    state: &BetaState,
    x: f64,
) -> Result<(BetaState, UpdateDiagnostics)> {
    state.validate()?;
    let total = psi(state.mass());
    let w1 = two_way_split(
        psi(state.a) - total + pair.f1.ln_pdf(x),
        psi(state.b) - total + pair.f2.ln_pdf(x),
        x,
    )?;
    let next = BetaState {
        a: state.a + w1,
        b: state.b + (1.0 - w1),
    };
    Ok((next, UpdateDiagnostics::new(w1, state, &next)))
}

/// Probabilistic-editor step for a given responsibility: Be(A, B) with the
/// mean and variance of w1·Be(a+1, b) + (1−w1)·Be(a, b+1).
///
/// The mean is E = (a + w1)/(L+1); the variance equation
/// E(1−E)/(L'+1) = E(1−E)/(L+2) + w1(1−w1)/((L+2)(L+1))
/// is solved exactly for the new mass L'.
pub fn pe_update_with_responsibility(
    state: &BetaState,
    w1: f64,
) -> Result<(BetaState, UpdateDiagnostics)> {
    state.validate()?;
    if !(0.0..=1.0).contains(&w1) {
        return Err(Error::Domain {
            function: "pe_update responsibility",
            value: w1,
        });
    }
    let l = state.mass();
    let e = (state.a + w1) / (l + 1.0);
    let spread = e * (1.0 - e);
    assert!(spread > 0.0, "updated mean left (0,1) for a positive state");
    let y = w1 * (1.0 - w1);
    let new_mass = spread * (l + 1.0) * (l + 2.0) / (spread * (l + 1.0) + y) - 1.0;
    if !(new_mass > 0.0) {
        return Err(Error::NonPositiveMass {
            mass: new_mass,
            mean_x: spread,
            mean_y: y,
        });
    }
    let next = BetaState {
        a: e * new_mass,
        b: (1.0 - e) * new_mass,
    };
    Ok((next, UpdateDiagnostics::new(w1, state, &next)))
}

/// Probabilistic editor (moment-matching ADF) step.
pub fn pe_update(
    pair: &KnownDensityPair,
    state: &BetaState,
    x: f64,
) -> Result<(BetaState, UpdateDiagnostics)> {
    let w1 = responsibility(pair, state, x)?;
    pe_update_with_responsibility(state, w1)
}

/// Right-hand sides (r1, r2) of the KL projection equations:
/// r1 = f1/(a f1 + b f2) − 1/(a+b) + Ψ(a) − Ψ(a+b), and r2 likewise.
pub fn kl_targets(state: &BetaState, w1: f64) -> (f64, f64) {
    let l = state.mass();
    let total = psi(l);
    // f1/(a f1 + b f2) = w1/a
    let r1 = w1 / state.a - 1.0 / l + psi(state.a) - total;
    let r2 = (1.0 - w1) / state.b - 1.0 / l + psi(state.b) - total;
    (r1, r2)
}

/// KL-projection step: Be(A, B) matching E[ln β] and E[ln(1−β)] of the
/// one-step posterior, solved by Newton from the moment-matching solution.
pub fn kl_update(
    pair: &KnownDensityPair,
    state: &BetaState,
    x: f64,
    settings: &SolverSettings,
) -> Result<(BetaState, UpdateDiagnostics)> {
    let w1 = responsibility(pair, state, x)?;
    kl_update_with_responsibility(state, w1, settings)
}

pub fn kl_update_with_responsibility(
    state: &BetaState,
    w1: f64,
    settings: &SolverSettings,
) -> Result<(BetaState, UpdateDiagnostics)> {
    let (start, _) = pe_update_with_responsibility(state, w1)?;
    let (r1, r2) = kl_targets(state, w1);
    let root = solve_digamma_system(r1, r2, (start.a, start.b), settings)?;
    let next = BetaState {
        a: root.a,
        b: root.b,
    };
    Ok((next, UpdateDiagnostics::new(w1, state, &next)))
}

/// Single-observation projection used inside [`ep_fit`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateRule {
    MomentMatch,
    Kl(SolverSettings),
}

impl UpdateRule {
    pub fn apply(&self, pair: &KnownDensityPair, state: &BetaState, x: f64) -> Result<BetaState> {
        match self {
            UpdateRule::MomentMatch => pe_update(pair, state, x).map(|(s, _)| s),
            UpdateRule::Kl(settings) => kl_update(pair, state, x, settings).map(|(s, _)| s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpOptions {
    pub rule: UpdateRule,
    pub max_sweeps: usize,
    /// Converged once no hyperparameter moves by this much during a sweep.
    pub tolerance: f64,
}

impl Default for EpOptions {
    fn default() -> Self {
        Self {
            rule: UpdateRule::MomentMatch,
            max_sweeps: 100,
            tolerance: 1e-10,
        }
    }
}

/// A site left untouched because removing it made the cavity improper.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkippedSite {
    pub sweep: usize,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpFit {
    pub state: BetaState,
    pub sites: Vec<EpSite>,
    pub sweeps_used: usize,
    pub converged: bool,
    pub skipped: Vec<SkippedSite>,
}

/// Expectation propagation over `data` with Beta sites.
///
/// Each visit removes the site from the current approximation to form the
/// cavity, applies the single-observation rule to the cavity, and stores the
/// difference as the new site, so the approximation is always the prior plus
/// the sum of the sites. A site whose removal leaves a non-positive cavity is
/// skipped for that sweep and recorded.
pub fn ep_fit(
    pair: &KnownDensityPair,
    prior: &BetaState,
    data: &[f64],
    options: &EpOptions,
) -> Result<EpFit> {
    prior.validate()?;
    if options.max_sweeps == 0 || !(options.tolerance > 0.0) {
        return Err(Error::Domain {
            function: "ep_fit options",
            value: options.tolerance,
        });
    }
    let mut state = *prior;
    let mut sites = vec![EpSite::default(); data.len()];
    let mut skipped = Vec::new();
    let mut sweeps_used = 0;
    let mut converged = false;

    for sweep in 1..=options.max_sweeps {
        sweeps_used = sweep;
        let mut max_change: f64 = 0.0;
        for (index, (&x, site)) in data.iter().zip(sites.iter_mut()).enumerate() {
            let cavity = BetaState {
                a: state.a - site.da,
                b: state.b - site.db,
            };
            if !(cavity.a > 0.0 && cavity.b > 0.0) {
                skipped.push(SkippedSite { sweep, index });
                continue;
            }
            let next = options.rule.apply(pair, &cavity, x)?;
            max_change = max_change
                .max((next.a - state.a).abs())
                .max((next.b - state.b).abs());
            *site = EpSite {
                da: next.a - cavity.a,
                db: next.b - cavity.b,
            };
            state = next;
        }
        if max_change < options.tolerance {
            converged = true;
            break;
        }
    }

    Ok(EpFit {
        state,
        sites,
        sweeps_used,
        converged,
        skipped,
    })
}

/// Large-n variance predictions for the weight filters after n observations
/// at true weight β.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticVariances {
    /// Confirmed labels: β(1−β)/n.
    pub confirmed: f64,
    /// Quasi-Bayes: β(1−β)/n.
    pub quasi_bayes: f64,
    /// Variational: β(1−β)/n.
    pub variational: f64,
    /// Maximum likelihood: 1/(n I(β)).
    pub maximum_likelihood: f64,
    /// Probabilistic editor: β(1−β)/(n {1 − ∫ f1 f2 / f}).
    pub probabilistic_editor: f64,
}

pub fn asymptotic_variances(
    pair: &KnownDensityPair,
    beta: f64,
    n: usize,
    quad: &QuadratureSpec,
) -> Result<AsymptoticVariances> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Domain {
            function: "asymptotic_variances beta",
            value: beta,
        });
    }
    if n == 0 {
        return Err(Error::Domain {
            function: "asymptotic_variances n",
            value: 0.0,
        });
    }
    let n = n as f64;
    let complete = beta * (1.0 - beta) / n;
    let fisher = oracle::fisher_information_beta(pair, beta, quad)?;
    let pe_information = oracle::pe_information_beta(pair, beta, quad)?;
    // Integrals at roundoff level mean the components are indistinguishable.
    let floor = 1e-12 / (beta * (1.0 - beta));
    if fisher <= floor || pe_information <= floor {
        return Err(Error::ZeroInformation);
    }
    Ok(AsymptoticVariances {
        confirmed: complete,
        quasi_bayes: complete,
        variational: complete,
        maximum_likelihood: 1.0 / (n * fisher),
        probabilistic_editor: 1.0 / (n * pe_information),
    })
}
