//! Log-gamma, digamma and trigamma on the positive half-line, plus the damped
//! Newton solver for the Beta digamma system
//!
//! ```text
//! Ψ(A) − Ψ(A+B) = r1
//! Ψ(B) − Ψ(A+B) = r2
//! ```
//!
//! which is what a Kullback–Leibler projection onto the Beta family reduces to.
//!
//! All three functions shift the argument upward with the recurrence until it
//! reaches [`ASYMPTOTIC_THRESHOLD`] and then evaluate a truncated asymptotic
//! series. At the threshold the first omitted series term is below 1e-17, so
//! the accuracy is limited by the recurrence sums, not the series.

use crate::error::{Error, Result};

const ASYMPTOTIC_THRESHOLD: f64 = 10.0;
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Stirling series coefficients B_{2k} / (2k (2k−1)), k = 1..7.
const LN_GAMMA_SERIES: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
];

/// B_{2k} / (2k), k = 1..7, for ψ(x) ~ ln x − 1/(2x) − Σ B_{2k}/(2k x^{2k}).
const DIGAMMA_SERIES: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
];

/// B_{2k}, k = 1..7, for ψ'(x) ~ 1/x + 1/(2x²) + Σ B_{2k}/x^{2k+1}.
const TRIGAMMA_SERIES: [f64; 7] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
];

fn check_positive(function: &'static str, x: f64) -> Result<f64> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(Error::Domain { function, value: x })
    }
}

/// ln Γ(x) for x > 0.
pub fn log_gamma(x: f64) -> Result<f64> {
    check_positive("log_gamma", x).map(ln_gamma_pos)
}

/// Digamma ψ(x) = d/dx ln Γ(x) for x > 0.
pub fn digamma(x: f64) -> Result<f64> {
    check_positive("digamma", x).map(psi)
}

/// Trigamma ψ'(x) for x > 0.
pub fn trigamma(x: f64) -> Result<f64> {
    check_positive("trigamma", x).map(psi1)
}

/// Unchecked ln Γ; callers guarantee `x > 0`.
pub(crate) fn ln_gamma_pos(x: f64) -> f64 {
    let mut z = x;
    let mut product = 1.0;
    while z < ASYMPTOTIC_THRESHOLD {
        product *= z;
        z += 1.0;
    }
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let mut series = 0.0;
    let mut power = inv;
    for c in LN_GAMMA_SERIES {
        series += c * power;
        power *= inv2;
    }
    let shifted = (z - 0.5) * z.ln() - z + HALF_LN_2PI + series;
    if product == 1.0 {
        shifted
    } else {
        shifted - product.ln()
    }
}

/// ln B(a, b).
pub(crate) fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma_pos(a) + ln_gamma_pos(b) - ln_gamma_pos(a + b)
}

/// Unchecked digamma; callers guarantee `x > 0`.
pub(crate) fn psi(x: f64) -> f64 {
    let mut z = x;
    let mut shift = 0.0;
    while z < ASYMPTOTIC_THRESHOLD {
        shift += 1.0 / z;
        z += 1.0;
    }
    let inv2 = 1.0 / (z * z);
    let mut series = 0.0;
    let mut power = inv2;
    for c in DIGAMMA_SERIES {
        series += c * power;
        power *= inv2;
    }
    z.ln() - 0.5 / z - series - shift
}

/// Unchecked trigamma; callers guarantee `x > 0`.
pub(crate) fn psi1(x: f64) -> f64 {
    let mut z = x;
    let mut shift = 0.0;
    while z < ASYMPTOTIC_THRESHOLD {
        shift += 1.0 / (z * z);
        z += 1.0;
    }
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let mut series = 0.0;
    let mut power = inv2 * inv;
    for c in TRIGAMMA_SERIES {
        series += c * power;
        power *= inv2;
    }
    inv + 0.5 * inv2 + series + shift
}

/// Controls for [`solve_digamma_system`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SolverSettings {
    pub max_iterations: usize,
    /// Stop once |F1| + |F2| falls to this level.
    pub tolerance: f64,
    /// Fraction of the Newton step tried first, in (0, 1].
    pub damping: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            tolerance: 1e-12,
            damping: 1.0,
        }
    }
}

impl SolverSettings {
    pub fn new(max_iterations: usize, tolerance: f64, damping: f64) -> Result<Self> {
        let settings = Self {
            max_iterations,
            tolerance,
            damping,
        };
        settings.validate()?;
        Ok(settings)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::Domain {
                function: "SolverSettings::max_iterations",
                value: 0.0,
            });
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::Domain {
                function: "SolverSettings::tolerance",
                value: self.tolerance,
            });
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Domain {
                function: "SolverSettings::damping",
                value: self.damping,
            });
        }
        Ok(())
    }
}

/// Root of the digamma system together with how it was reached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DigammaSolution {
    pub a: f64,
    pub b: f64,
    pub iterations: usize,
    /// |F1| + |F2| at the returned point.
    pub residual: f64,
}

/// The map (A, B) ↦ (Ψ(A) − Ψ(A+B), Ψ(B) − Ψ(A+B)), i.e. E[ln β] and
/// E[ln(1−β)] under Be(A, B).
pub fn beta_log_moments(a: f64, b: f64) -> Result<(f64, f64)> {
    check_positive("beta_log_moments", a)?;
    check_positive("beta_log_moments", b)?;
    let total = psi(a + b);
    Ok((psi(a) - total, psi(b) - total))
}

struct System {
    r1: f64,
    r2: f64,
}

impl System {
    fn residual(&self, a: f64, b: f64) -> (f64, f64) {
        let total = psi(a + b);
        (psi(a) - total - self.r1, psi(b) - total - self.r2)
    }

    /// ln B(A, B) − r1·A − r2·B; its gradient is the residual and its Hessian
    /// the (positive definite) Jacobian, so Newton descends it.
    fn objective(&self, a: f64, b: f64) -> f64 {
        ln_beta(a, b) - self.r1 * a - self.r2 * b
    }

    fn newton_direction(&self, a: f64, b: f64, f: (f64, f64)) -> Option<(f64, f64)> {
        let t = psi1(a + b);
        let j11 = psi1(a) - t;
        let j22 = psi1(b) - t;
        let j12 = -t;
        let det = j11 * j22 - j12 * j12;
        if !(det.is_finite() && det > 0.0) {
            return None;
        }
        let da = -(j22 * f.0 - j12 * f.1) / det;
        let db = -(j11 * f.1 - j12 * f.0) / det;
        Some((da, db))
    }
}

fn l1(f: (f64, f64)) -> f64 {
    f.0.abs() + f.1.abs()
}

/// Solves Ψ(A) − Ψ(A+B) = r1, Ψ(B) − Ψ(A+B) = r2 for A, B > 0 by damped
/// Newton iteration.
///
/// The targets are attainable exactly when e^{r1} + e^{r2} < 1 (both
/// negative is necessary but not sufficient); anything else is reported as
/// [`Error::Infeasible`]. Steps are halved until both coordinates stay
/// positive and then until either the convex objective or the residual
/// decreases. Once the tolerance is met, up to three further Newton steps
/// polish the root while they keep lowering the residual.
pub fn solve_digamma_system(
    r1: f64,
    r2: f64,
    initial: (f64, f64),
    settings: &SolverSettings,
) -> Result<DigammaSolution> {
    settings.validate()?;
    if !(r1.is_finite() && r2.is_finite()) || r1 >= 0.0 || r2 >= 0.0 || r1.exp() + r2.exp() >= 1.0 {
        return Err(Error::Infeasible { r1, r2 });
    }
    let (mut a, mut b) = initial;
    check_positive("solve_digamma_system initial", a)?;
    check_positive("solve_digamma_system initial", b)?;

    let system = System { r1, r2 };
    let mut f = system.residual(a, b);
    let mut norm = l1(f);
    let mut iterations = 0;

    while norm > settings.tolerance {
        if iterations == settings.max_iterations {
            return Err(Error::NonConvergence {
                iterations,
                residual: norm,
            });
        }
        iterations += 1;
        let Some((da, db)) = system.newton_direction(a, b, f) else {
            return Err(Error::NonConvergence {
                iterations,
                residual: norm,
            });
        };
        let objective = system.objective(a, b);
        let slope = f.0 * da + f.1 * db;
        let mut step = settings.damping;
        let mut accepted = false;
        for _ in 0..80 {
            let (na, nb) = (a + step * da, b + step * db);
            if na > 0.0 && nb > 0.0 {
                let nf = system.residual(na, nb);
                let nnorm = l1(nf);
                let descent = system.objective(na, nb) <= objective + 1e-4 * step * slope;
                if nnorm.is_finite() && (descent || nnorm < norm) {
                    a = na;
                    b = nb;
                    f = nf;
                    norm = nnorm;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            return Err(Error::NonConvergence {
                iterations,
                residual: norm,
            });
        }
    }

    for _ in 0..3 {
        let Some((da, db)) = system.newton_direction(a, b, f) else {
            break;
        };
        let (na, nb) = (a + da, b + db);
        if !(na > 0.0 && nb > 0.0) {
            break;
        }
        let nf = system.residual(na, nb);
        let nnorm = l1(nf);
        if !(nnorm < norm) {
            break;
        }
        a = na;
        b = nb;
        f = nf;
        norm = nnorm;
    }

    Ok(DigammaSolution {
        a,
        b,
        iterations,
        residual: norm,
    })
}
