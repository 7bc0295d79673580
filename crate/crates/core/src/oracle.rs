//! Ground truth for the filters: exact posteriors by enumeration or
//! quadrature, and the information integrals behind the asymptotic variances.
//!
//! Densities that vanish inside a logarithm are floored at [`DENSITY_FLOOR`].

use serde::{Deserialize, Serialize};

use crate::density::KnownDensityPair;
use crate::error::{Error, Result};
use crate::gaussian_mean::{log_density, observed_information, GaussianState, MeanMixtureModel};
use crate::quadrature::{integrate, QuadratureSpec};
use crate::special::ln_beta;
use crate::weight::BetaState;

pub const DENSITY_FLOOR: f64 = 1e-300;
pub const DEFAULT_ENUMERATION_LIMIT: usize = 15;
/// Half-width of the initial μ window, in prior standard deviations.
pub const MU_WINDOW_SDS: f64 = 10.0;
/// Relative tail mass below which the μ window stops widening.
pub const MU_TAIL_MASS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PosteriorMethod {
    Enumeration,
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub mean: f64,
    pub variance: f64,
    /// Log of the marginal likelihood of the data.
    pub log_normalizer: f64,
    pub method: PosteriorMethod,
}

/// One term ω·Be(a, b) of the exact posterior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaMixtureTerm {
    pub weight: f64,
    pub state: BetaState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactBetaPosterior {
    pub summary: PosteriorSummary,
    /// Allocations grouped by the number assigned to f1, in increasing order.
    pub mixture: Vec<BetaMixtureTerm>,
}

fn floored_ln(ln_value: f64) -> f64 {
    ln_value.max(DENSITY_FLOOR.ln())
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Exact posterior for β by summing over all 2^n allocations of the data.
pub fn exact_beta_posterior(
    pair: &KnownDensityPair,
    prior: &BetaState,
    data: &[f64],
    limit: usize,
) -> Result<ExactBetaPosterior> {
    prior.validate()?;
    let n = data.len();
    if n > limit || n >= usize::BITS as usize - 1 {
        return Err(Error::TooManyObservations { n, limit });
    }
    let ln_f: Vec<(f64, f64)> = data
        .iter()
        .map(|&x| (floored_ln(pair.f1.ln_pdf(x)), floored_ln(pair.f2.ln_pdf(x))))
        .collect();
    let prior_ln_beta = ln_beta(prior.a, prior.b);

    // Log-weights of every allocation, bucketed by n1.
    let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); n + 1];
    for mask in 0u64..(1u64 << n) {
        let mut ln_w = 0.0;
        for (i, (l1, l2)) in ln_f.iter().enumerate() {
            ln_w += if mask >> i & 1 == 1 { l1 } else { l2 };
        }
        let n1 = mask.count_ones() as usize;
        ln_w += ln_beta(prior.a + n1 as f64, prior.b + (n - n1) as f64) - prior_ln_beta;
        buckets[n1].push(ln_w);
    }
    let bucket_ln: Vec<f64> = buckets.iter().map(|b| log_sum_exp(b)).collect();
    let log_normalizer = log_sum_exp(&bucket_ln);

    let mixture: Vec<BetaMixtureTerm> = bucket_ln
        .iter()
        .enumerate()
        .map(|(n1, l)| BetaMixtureTerm {
            weight: (l - log_normalizer).exp(),
            state: BetaState {
                a: prior.a + n1 as f64,
                b: prior.b + (n - n1) as f64,
            },
        })
        .collect();
    let mean: f64 = mixture.iter().map(|t| t.weight * t.state.mean()).sum();
    let variance: f64 = mixture
        .iter()
        .map(|t| t.weight * (t.state.variance() + (t.state.mean() - mean).powi(2)))
        .sum();
    Ok(ExactBetaPosterior {
        summary: PosteriorSummary {
            mean,
            variance,
            log_normalizer,
            method: PosteriorMethod::Enumeration,
        },
        mixture,
    })
}

/// Normalized mean and central variance of exp(h) over [lo, hi], where the
/// caller has shifted `h` so that its maximum is near zero.
fn moments_of_log_density<F: Fn(f64) -> f64>(
    h: F,
    shift: f64,
    lo: f64,
    hi: f64,
    breakpoints: &[f64],
    quad: &QuadratureSpec,
) -> Result<PosteriorSummary> {
    let density = |t: f64| (h(t) - shift).exp();
    let z = integrate(density, lo, hi, breakpoints, quad)?.value;
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::Quadrature {
            estimate: z,
            error: f64::NAN,
        });
    }
    let mean = integrate(|t| t * density(t), lo, hi, breakpoints, quad)?.value / z;
    let variance = integrate(
        |t| (t - mean).powi(2) * density(t),
        lo,
        hi,
        breakpoints,
        quad,
    )?
    .value
        / z;
    Ok(PosteriorSummary {
        mean,
        variance,
        log_normalizer: shift + z.ln(),
        method: PosteriorMethod::Grid,
    })
}

/// Location and value of the largest of `points + 1` equally spaced samples.
fn scan_max<F: Fn(f64) -> f64>(h: &F, lo: f64, hi: f64, points: usize) -> (usize, f64, f64) {
    let mut best = (0, lo, f64::NEG_INFINITY);
    for i in 0..=points {
        let t = lo + (hi - lo) * i as f64 / points as f64;
        let v = h(t);
        if v > best.2 {
            best = (i, t, v);
        }
    }
    best
}

/// Refines a scanned maximum by golden-section search on the neighbouring
/// cells, then returns the mode, its log-density and breakpoints placed at
/// multiples of the local curvature scale.
fn refine_peak<F: Fn(f64) -> f64>(
    h: &F,
    lo: f64,
    hi: f64,
    scan: (usize, f64, f64),
    points: usize,
) -> (f64, f64, Vec<f64>) {
    let step = (hi - lo) / points as f64;
    let (mut a, mut b) = ((scan.1 - step).max(lo), (scan.1 + step).min(hi));
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let (mut c, mut d) = (b - ratio * (b - a), a + ratio * (b - a));
    let (mut hc, mut hd) = (h(c), h(d));
    for _ in 0..80 {
        if hc > hd {
            b = d;
            d = c;
            hd = hc;
            c = b - ratio * (b - a);
            hc = h(c);
        } else {
            a = c;
            c = d;
            hc = hd;
            d = a + ratio * (b - a);
            hd = h(d);
        }
    }
    let (mode, value) = [(c, hc), (d, hd), (scan.1, scan.2)].into_iter().fold(
        (scan.1, f64::NEG_INFINITY),
        |best, p| if p.1 > best.1 { p } else { best },
    );
    let delta = (step * 1e-3).max(1e-7 * (1.0 + mode.abs()));
    let curvature = -(h(mode + delta) - 2.0 * value + h(mode - delta)) / (delta * delta);
    let scale = if curvature > 0.0 && curvature.is_finite() {
        (1.0 / curvature.sqrt()).min(hi - lo)
    } else {
        step
    };
    let mut breakpoints = vec![mode];
    for k in [1.0, 2.0, 4.0, 8.0, 16.0, 32.0] {
        breakpoints.push(mode - k * scale);
        breakpoints.push(mode + k * scale);
    }
    (mode, value, breakpoints)
}

/// Posterior for β under prior Be(a, b) by quadrature over (0, 1).
pub fn grid_beta_posterior(
    pair: &KnownDensityPair,
    prior: &BetaState,
    data: &[f64],
    quad: &QuadratureSpec,
) -> Result<PosteriorSummary> {
    prior.validate()?;
    let ln_f: Vec<(f64, f64)> = data
        .iter()
        .map(|&x| (floored_ln(pair.f1.ln_pdf(x)), floored_ln(pair.f2.ln_pdf(x))))
        .collect();
    let prior_ln_beta = ln_beta(prior.a, prior.b);
    let h = |beta: f64| {
        let (lb, lc) = (beta.ln(), (-beta).ln_1p());
        let mut v = (prior.a - 1.0) * lb + (prior.b - 1.0) * lc - prior_ln_beta;
        for (l1, l2) in &ln_f {
            let (u, w) = (lb + l1, lc + l2);
            let m = u.max(w);
            v += m + ((u - m).exp() + (w - m).exp()).ln();
        }
        v
    };
    let (lo, hi) = quad.interval.unwrap_or((0.0, 1.0));
    let scan = scan_max(&h, lo + 1e-9, hi - 1e-9, 2000);
    let (_, shift, breakpoints) = refine_peak(&h, lo + 1e-9, hi - 1e-9, scan, 2000);
    moments_of_log_density(h, shift, lo, hi, &breakpoints, quad)
}

/// Posterior for μ under prior N(a, b) by quadrature on a window that starts
/// at the prior mean ± 10 prior sd and widens until the tails are negligible.
pub fn grid_mu_posterior(
    model: &MeanMixtureModel,
    prior: &GaussianState,
    data: &[f64],
    quad: &QuadratureSpec,
) -> Result<PosteriorSummary> {
    prior.validate()?;
    let h = |mu: f64| {
        let prior_ln = -0.5 * (mu - prior.a).powi(2) / prior.b
            - 0.5 * (2.0 * std::f64::consts::PI * prior.b).ln();
        prior_ln + data.iter().map(|&x| log_density(model, mu, x)).sum::<f64>()
    };
    const SCAN: usize = 400;
    let tail_nats = -MU_TAIL_MASS.ln() + (SCAN as f64).ln();
    let (lo, hi) = match quad.interval {
        Some(window) => window,
        None => {
            let sd = prior.b.sqrt();
            let (mut lo, mut hi) = (prior.a - MU_WINDOW_SDS * sd, prior.a + MU_WINDOW_SDS * sd);
            for _ in 0..64 {
                let (idx, _, peak) = scan_max(&h, lo, hi, SCAN);
                let width = hi - lo;
                let grow_lo = idx == 0 || h(lo) > peak - tail_nats;
                let grow_hi = idx == SCAN || h(hi) > peak - tail_nats;
                if !grow_lo && !grow_hi {
                    break;
                }
                if grow_lo {
                    lo -= width;
                }
                if grow_hi {
                    hi += width;
                }
            }
            (lo, hi)
        }
    };
    let scan = scan_max(&h, lo, hi, SCAN);
    let (_, shift, breakpoints) = refine_peak(&h, lo, hi, scan, SCAN);
    moments_of_log_density(h, shift, lo, hi, &breakpoints, quad)
}

fn check_beta(function: &'static str, beta: f64) -> Result<()> {
    if beta > 0.0 && beta < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            function,
            value: beta,
        })
    }
}

fn pair_window(pair: &KnownDensityPair, quad: &QuadratureSpec) -> (f64, f64, Vec<f64>) {
    let (lo, hi, points) = pair.window();
    match quad.interval {
        Some((l, h)) => (l, h, points),
        None => (lo, hi, points),
    }
}

/// I(β) = ∫ (f1 − f2)² / (β f1 + (1−β) f2) dx.
pub fn fisher_information_beta(
    pair: &KnownDensityPair,
    beta: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    check_beta("fisher_information_beta", beta)?;
    let (lo, hi, points) = pair_window(pair, quad);
    let integrand = |x: f64| {
        let (f1, f2) = (pair.f1.pdf(x), pair.f2.pdf(x));
        let f = beta * f1 + (1.0 - beta) * f2;
        if f1 == f2 {
            0.0
        } else {
            (f1 - f2).powi(2) / f.max(DENSITY_FLOOR)
        }
    };
    Ok(integrate(integrand, lo, hi, &points, quad)?.value.max(0.0))
}

/// ∫ f1 f2 / (β f1 + (1−β) f2) dx, the overlap of the two components.
pub fn overlap_integral(pair: &KnownDensityPair, beta: f64, quad: &QuadratureSpec) -> Result<f64> {
    check_beta("overlap_integral", beta)?;
    let (lo, hi, points) = pair_window(pair, quad);
    let integrand = |x: f64| {
        let (f1, f2) = (pair.f1.pdf(x), pair.f2.pdf(x));
        let product = f1 * f2;
        if product == 0.0 {
            0.0
        } else {
            product / (beta * f1 + (1.0 - beta) * f2).max(DENSITY_FLOOR)
        }
    };
    Ok(integrate(integrand, lo, hi, &points, quad)?.value)
}

/// (1/(β(1−β))) · {1 − ∫ f1 f2 / f}, the expected mass increment of the
/// probabilistic editor scaled to an information.
pub fn pe_information_beta(
    pair: &KnownDensityPair,
    beta: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let overlap = overlap_integral(pair, beta, quad)?;
    Ok(((1.0 - overlap) / (beta * (1.0 - beta))).max(0.0))
}

/// (f1 − f2)² / f² at a single x.
pub fn pointwise_observed_information_beta(pair: &KnownDensityPair, beta: f64, x: f64) -> f64 {
    let (f1, f2) = (pair.f1.pdf(x), pair.f2.pdf(x));
    let f = (beta * f1 + (1.0 - beta) * f2).max(DENSITY_FLOOR);
    ((f1 - f2) / f).powi(2)
}

/// (1/(β(1−β))) · {1 − f1 f2 / f²} at a single x.
pub fn pointwise_pe_information_beta(pair: &KnownDensityPair, beta: f64, x: f64) -> f64 {
    let (f1, f2) = (pair.f1.pdf(x), pair.f2.pdf(x));
    let f = (beta * f1 + (1.0 - beta) * f2).max(DENSITY_FLOOR);
    (1.0 - f1 / f * (f2 / f)) / (beta * (1.0 - beta))
}

/// E_x[observed information] for the mean-mixture model at μ.
pub fn fisher_information_mu(
    model: &MeanMixtureModel,
    mu: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let mut points = Vec::new();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for comp in model.components() {
        let center = comp.c * mu;
        lo = lo.min(center - crate::density::GAUSSIAN_TAIL_SDS * comp.sigma);
        hi = hi.max(center + crate::density::GAUSSIAN_TAIL_SDS * comp.sigma);
        points.push(center);
    }
    if let Some(window) = quad.interval {
        (lo, hi) = window;
    }
    let integrand = |x: f64| {
        let ln_f = log_density(model, mu, x);
        if ln_f == f64::NEG_INFINITY {
            0.0
        } else {
            ln_f.exp() * observed_information(model, mu, x)
        }
    };
    Ok(integrate(integrand, lo, hi, &points, quad)?.value)
}

/// Both sides of the identity ∫(f1−f2)²/f = (1/(β(1−β)))(1 − ∫f1f2/f).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaSides {
    pub beta: f64,
    pub fisher: f64,
    pub pe: f64,
    /// |pe − fisher| / max(fisher, ε); zero when both sides vanish.
    pub violation: f64,
    pub exact_zero: bool,
}

/// Level below which both sides count as exactly zero.
pub const LEMMA_ZERO: f64 = 1e-10;

pub fn lemma_sides(
    pair: &KnownDensityPair,
    beta: f64,
    quad: &QuadratureSpec,
) -> Result<LemmaSides> {
    let fisher = fisher_information_beta(pair, beta, quad)?;
    let pe = pe_information_beta(pair, beta, quad)?;
    let exact_zero = fisher.abs() <= LEMMA_ZERO && pe.abs() <= LEMMA_ZERO;
    let violation = if exact_zero {
        0.0
    } else {
        (pe - fisher).abs() / fisher.max(LEMMA_ZERO)
    };
    Ok(LemmaSides {
        beta,
        fisher,
        pe,
        violation,
        exact_zero,
    })
}

/// A density tabulated on a grid, used for grid KL divergences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDensity {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl GridDensity {
    pub fn from_fn<F: Fn(f64) -> f64>(grid: Vec<f64>, f: F) -> Self {
        let values = grid.iter().map(|&t| f(t)).collect();
        Self { grid, values }
    }

    pub fn beta(state: &BetaState, grid: Vec<f64>) -> Self {
        let norm = ln_beta(state.a, state.b);
        Self::from_fn(grid, |t| {
            if t <= 0.0 || t >= 1.0 {
                0.0
            } else {
                ((state.a - 1.0) * t.ln() + (state.b - 1.0) * (-t).ln_1p() - norm).exp()
            }
        })
    }

    /// Equally spaced interior points of (lo, hi).
    pub fn interior_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
        let h = (hi - lo) / (points + 1) as f64;
        (1..=points).map(|i| lo + h * i as f64).collect()
    }

    fn trapezoid(&self, values: &[f64]) -> f64 {
        self.grid
            .windows(2)
            .zip(values.windows(2))
            .map(|(g, v)| 0.5 * (g[1] - g[0]) * (v[0] + v[1]))
            .sum()
    }
}

/// KL(p ‖ q) by the trapezoid rule after normalizing both on the shared grid.
pub fn grid_kl(p: &GridDensity, q: &GridDensity) -> Result<f64> {
    if p.grid != q.grid || p.values.len() != p.grid.len() || q.values.len() != q.grid.len() {
        return Err(Error::GridMismatch);
    }
    if p.grid.len() < 2 {
        return Err(Error::GridMismatch);
    }
    let (zp, zq) = (p.trapezoid(&p.values), q.trapezoid(&q.values));
    let terms: Vec<f64> = p
        .values
        .iter()
        .zip(&q.values)
        .map(|(&pv, &qv)| {
            let (pn, qn) = (pv / zp, qv / zq);
            if pn <= 0.0 {
                0.0
            } else if qn <= 0.0 {
                f64::INFINITY
            } else {
                pn * (pn / qn).ln()
            }
        })
        .collect();
    Ok(p.trapezoid(&terms).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Divergence {
    /// mean_A − mean_B.
    pub mean_gap: f64,
    /// variance_A / variance_B.
    pub variance_ratio: f64,
    pub log_variance_ratio: f64,
    pub kl: Option<f64>,
}

/// Compares two posterior summaries, and their grid densities when supplied.
pub fn divergence(
    a: &PosteriorSummary,
    b: &PosteriorSummary,
    densities: Option<(&GridDensity, &GridDensity)>,
) -> Result<Divergence> {
    let variance_ratio = a.variance / b.variance;
    Ok(Divergence {
        mean_gap: a.mean - b.mean,
        variance_ratio,
        log_variance_ratio: variance_ratio.ln(),
        kl: densities.map(|(p, q)| grid_kl(p, q)).transpose()?,
    })
}

impl From<&BetaState> for PosteriorSummary {
    fn from(state: &BetaState) -> Self {
        Self {
            mean: state.mean(),
            variance: state.variance(),
            log_normalizer: 0.0,
            method: PosteriorMethod::Grid,
        }
    }
}
