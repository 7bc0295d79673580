//! Known component densities for the mixing-weight problems.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadratureSpec};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Half-width, in standard deviations, of the window used to integrate
/// against a Gaussian component.
pub const GAUSSIAN_TAIL_SDS: f64 = 12.0;

/// Tolerance on ∫f = 1 for tabulated densities.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-8;

/// Piecewise-linear density through `(x, y)` knots, zero outside the knot range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TabulatedRaw", into = "TabulatedRaw")]
pub struct Tabulated {
    xs: Vec<f64>,
    ys: Vec<f64>,
    cumulative: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct TabulatedRaw {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl TryFrom<TabulatedRaw> for Tabulated {
    type Error = Error;

    fn try_from(raw: TabulatedRaw) -> Result<Self> {
        Tabulated::new(raw.xs, raw.ys)
    }
}

impl From<Tabulated> for TabulatedRaw {
    fn from(t: Tabulated) -> Self {
        TabulatedRaw { xs: t.xs, ys: t.ys }
    }
}

impl Tabulated {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != ys.len() {
            return Err(Error::InvalidModel(
                "tabulated density needs at least two knots and matching lengths".into(),
            ));
        }
        if xs.windows(2).any(|w| !(w[0] < w[1])) || xs.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidModel(
                "tabulated knots must be finite and strictly increasing".into(),
            ));
        }
        if ys.iter().any(|y| !(y.is_finite() && *y >= 0.0)) {
            return Err(Error::InvalidModel(
                "tabulated density values must be finite and nonnegative".into(),
            ));
        }
        let mut cumulative = Vec::with_capacity(xs.len());
        cumulative.push(0.0);
        for k in 1..xs.len() {
            let area = 0.5 * (ys[k - 1] + ys[k]) * (xs[k] - xs[k - 1]);
            cumulative.push(cumulative[k - 1] + area);
        }
        let table = Self { xs, ys, cumulative };
        let spec = QuadratureSpec::default();
        let mass = integrate(
            |x| table.pdf(x),
            table.xs[0],
            table.xs[table.xs.len() - 1],
            &table.xs,
            &spec,
        )?
        .value;
        if (mass - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::InvalidModel(format!(
                "tabulated density integrates to {mass}, not 1"
            )));
        }
        Ok(table)
    }

    pub fn knots(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.ys
    }

    fn pdf(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if !(x >= self.xs[0] && x <= self.xs[n - 1]) {
            return 0.0;
        }
        let k = self.xs.partition_point(|&knot| knot <= x).clamp(1, n - 1);
        let (x0, x1) = (self.xs[k - 1], self.xs[k]);
        let t = (x - x0) / (x1 - x0);
        self.ys[k - 1] + t * (self.ys[k] - self.ys[k - 1])
    }

    /// Inverse of the piecewise-quadratic CDF.
    fn quantile(&self, u: f64) -> f64 {
        let total = *self.cumulative.last().expect("at least two knots");
        let target = u * total;
        let n = self.xs.len();
        let k = self
            .cumulative
            .partition_point(|&c| c < target)
            .clamp(1, n - 1);
        let (x0, x1) = (self.xs[k - 1], self.xs[k]);
        let (y0, y1) = (self.ys[k - 1], self.ys[k]);
        let h = x1 - x0;
        let need = target - self.cumulative[k - 1];
        // need = y0·s + (y1 − y0)·s²/(2h), s ∈ [0, h]
        let slope = (y1 - y0) / h;
        // stable root of slope/2·s² + y0·s − need = 0
        let denom = y0 + (y0 * y0 + 2.0 * slope * need).max(0.0).sqrt();
        let s = if denom > 0.0 {
            2.0 * need / denom
        } else {
            0.5 * h
        };
        (x0 + s.clamp(0.0, h)).min(x1)
    }
}

/// A fully specified, normalized density on the real line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KnownDensity {
    Gaussian { mean: f64, sd: f64 },
    Uniform { lo: f64, hi: f64 },
    Tabulated(Tabulated),
}

impl KnownDensity {
    pub fn gaussian(mean: f64, sd: f64) -> Result<Self> {
        let d = KnownDensity::Gaussian { mean, sd };
        d.validate()?;
        Ok(d)
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        let d = KnownDensity::Uniform { lo, hi };
        d.validate()?;
        Ok(d)
    }

    pub fn tabulated(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        Tabulated::new(xs, ys).map(KnownDensity::Tabulated)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KnownDensity::Gaussian { mean, sd } => {
                if !(mean.is_finite() && sd.is_finite() && sd > 0.0) {
                    return Err(Error::InvalidModel(format!(
                        "gaussian density needs finite mean and sd > 0 (got {mean}, {sd})"
                    )));
                }
            }
            KnownDensity::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(Error::InvalidModel(format!(
                        "uniform density needs lo < hi (got {lo}, {hi})"
                    )));
                }
            }
            KnownDensity::Tabulated(_) => {}
        }
        Ok(())
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            KnownDensity::Gaussian { .. } => self.ln_pdf(x).exp(),
            KnownDensity::Uniform { lo, hi } => {
                if x >= *lo && x <= *hi {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            KnownDensity::Tabulated(t) => t.pdf(x),
        }
    }

    /// ln f(x); `-inf` where the density vanishes.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        match self {
            KnownDensity::Gaussian { mean, sd } => {
                let z = (x - mean) / sd;
                -0.5 * z * z - sd.ln() - HALF_LN_2PI
            }
            _ => self.pdf(x).ln(),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            KnownDensity::Gaussian { mean, .. } => *mean,
            KnownDensity::Uniform { lo, hi } => 0.5 * (lo + hi),
            KnownDensity::Tabulated(t) => {
                let mut m = 0.0;
                for k in 1..t.xs.len() {
                    let (x0, x1, y0, y1) = (t.xs[k - 1], t.xs[k], t.ys[k - 1], t.ys[k]);
                    // ∫ x·(linear) over the segment
                    m += (x1 - x0) * (y0 * (2.0 * x0 + x1) + y1 * (x0 + 2.0 * x1)) / 6.0;
                }
                m
            }
        }
    }

    /// Interval outside which the density is negligible (Gaussian) or zero.
    pub fn support(&self) -> (f64, f64) {
        match self {
            KnownDensity::Gaussian { mean, sd } => {
                (mean - GAUSSIAN_TAIL_SDS * sd, mean + GAUSSIAN_TAIL_SDS * sd)
            }
            KnownDensity::Uniform { lo, hi } => (*lo, *hi),
            KnownDensity::Tabulated(t) => (t.xs[0], t.xs[t.xs.len() - 1]),
        }
    }

    /// Points where the density is non-smooth or peaked; used to seed quadrature.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            KnownDensity::Gaussian { mean, .. } => vec![*mean],
            KnownDensity::Uniform { lo, hi } => vec![*lo, *hi],
            KnownDensity::Tabulated(t) => t.xs.clone(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            KnownDensity::Gaussian { mean, sd } => Normal::new(*mean, *sd)
                .expect("validated gaussian")
                .sample(rng),
            KnownDensity::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            KnownDensity::Tabulated(t) => t.quantile(rng.random::<f64>()),
        }
    }
}

/// Integration window and breakpoints covering a family of densities.
pub fn integration_window<'a, I>(densities: I) -> (f64, f64, Vec<f64>)
where
    I: IntoIterator<Item = &'a KnownDensity>,
{
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut points = Vec::new();
    for d in densities {
        let (l, h) = d.support();
        lo = lo.min(l);
        hi = hi.max(h);
        points.extend(d.breakpoints());
    }
    points.sort_by(f64::total_cmp);
    points.dedup();
    (lo, hi, points)
}

/// The two known components of f(x|β) = β f1(x) + (1−β) f2(x).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnownDensityPair {
    pub f1: KnownDensity,
    pub f2: KnownDensity,
}

impl KnownDensityPair {
    pub fn new(f1: KnownDensity, f2: KnownDensity) -> Result<Self> {
        f1.validate()?;
        f2.validate()?;
        Ok(Self { f1, f2 })
    }

    pub fn gaussians(mean1: f64, sd1: f64, mean2: f64, sd2: f64) -> Result<Self> {
        Self::new(
            KnownDensity::gaussian(mean1, sd1)?,
            KnownDensity::gaussian(mean2, sd2)?,
        )
    }

    pub fn window(&self) -> (f64, f64, Vec<f64>) {
        integration_window([&self.f1, &self.f2])
    }

    /// Draws (x, z) with z = 1 for f1 (probability β) and z = 2 for f2.
    pub fn sample<R: Rng + ?Sized>(&self, beta: f64, rng: &mut R) -> (f64, usize) {
        if rng.random::<f64>() < beta {
            (self.f1.sample(rng), 1)
        } else {
            (self.f2.sample(rng), 2)
        }
    }
}

/// J ≥ 2 known component densities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<KnownDensity>", into = "Vec<KnownDensity>")]
pub struct KnownDensitySet {
    densities: Vec<KnownDensity>,
}

impl TryFrom<Vec<KnownDensity>> for KnownDensitySet {
    type Error = Error;

    fn try_from(densities: Vec<KnownDensity>) -> Result<Self> {
        Self::new(densities)
    }
}

impl From<KnownDensitySet> for Vec<KnownDensity> {
    fn from(set: KnownDensitySet) -> Self {
        set.densities
    }
}

impl From<KnownDensityPair> for KnownDensitySet {
    fn from(pair: KnownDensityPair) -> Self {
        Self {
            densities: vec![pair.f1, pair.f2],
        }
    }
}

impl KnownDensitySet {
    pub fn new(densities: Vec<KnownDensity>) -> Result<Self> {
        if densities.len() < 2 {
            return Err(Error::InvalidModel(format!(
                "a density set needs at least two components, got {}",
                densities.len()
            )));
        }
        for d in &densities {
            d.validate()?;
        }
        Ok(Self { densities })
    }

    pub fn len(&self) -> usize {
        self.densities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.densities.is_empty()
    }

    pub fn densities(&self) -> &[KnownDensity] {
        &self.densities
    }

    /// Draws (x, z) with z the 1-based component label.
    pub fn sample<R: Rng + ?Sized>(&self, weights: &[f64], rng: &mut R) -> (f64, usize) {
        let u = rng.random::<f64>();
        let mut acc = 0.0;
        let mut chosen = self.densities.len() - 1;
        for (j, w) in weights.iter().enumerate() {
            acc += w;
            if u < acc {
                chosen = j;
                break;
            }
        }
        (self.densities[chosen].sample(rng), chosen + 1)
    }
}
