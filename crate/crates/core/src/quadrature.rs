//! Globally adaptive 15-point Gauss–Kronrod quadrature with QUADPACK-style
//! error estimates.
//!
//! Segments live in a max-heap keyed on their error estimate; the worst one is
//! bisected until the summed error meets `max(abs_tolerance, rel_tolerance·|I|)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

/// Gauss weights for the odd-indexed Kronrod nodes (XGK[1], XGK[3], XGK[5], XGK[7]).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureScheme {
    /// Bisect the worst segment until the error target is met.
    Adaptive,
    /// Fixed composite rule with this many equal panels per breakpoint interval.
    Composite { panels: usize },
}

/// How an integral is to be computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Integration interval. `None` lets the caller derive one from the
    /// integrand (the density supports, or the unit interval for weights).
    #[serde(default)]
    pub interval: Option<(f64, f64)>,
    pub abs_tolerance: f64,
    pub rel_tolerance: f64,
    pub max_subdivisions: usize,
    pub scheme: QuadratureScheme,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            interval: None,
            abs_tolerance: 1e-13,
            rel_tolerance: 1e-12,
            max_subdivisions: 4000,
            scheme: QuadratureScheme::Adaptive,
        }
    }
}

impl QuadratureSpec {
    pub fn with_interval(mut self, lo: f64, hi: f64) -> Self {
        self.interval = Some((lo, hi));
        self
    }

    pub fn with_rel_tolerance(mut self, rel_tolerance: f64) -> Self {
        self.rel_tolerance = rel_tolerance;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let Some((lo, hi)) = self.interval {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Domain {
                    function: "QuadratureSpec::interval",
                    value: hi - lo,
                });
            }
        }
        if !(self.abs_tolerance >= 0.0 && self.rel_tolerance >= 0.0)
            || (self.abs_tolerance == 0.0 && self.rel_tolerance == 0.0)
        {
            return Err(Error::Domain {
                function: "QuadratureSpec::tolerance",
                value: self.rel_tolerance,
            });
        }
        if self.max_subdivisions == 0 {
            return Err(Error::Domain {
                function: "QuadratureSpec::max_subdivisions",
                value: 0.0,
            });
        }
        if let QuadratureScheme::Composite { panels: 0 } = self.scheme {
            return Err(Error::Domain {
                function: "QuadratureSpec::panels",
                value: 0.0,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod15<F: FnMut(f64) -> f64>(f: &mut F, lo: f64, hi: f64) -> Segment {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_sum = fc.abs() * WGK[7];
    let mut values = [(0.0, 0.0); 7];
    for (k, slot) in values.iter_mut().enumerate() {
        let dx = half * XGK[k];
        let (f1, f2) = (f(center - dx), f(center + dx));
        *slot = (f1, f2);
        kronrod += WGK[k] * (f1 + f2);
        abs_sum += WGK[k] * (f1.abs() + f2.abs());
        if k % 2 == 1 {
            gauss += WG[k / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[7] * (fc - mean).abs();
    for (k, (f1, f2)) in values.iter().enumerate() {
        asc += WGK[k] * ((f1 - mean).abs() + (f2 - mean).abs());
    }
    let value = kronrod * half;
    let abs_sum = abs_sum * half.abs();
    let asc = asc * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    if asc != 0.0 && error != 0.0 {
        error = asc * (200.0 * error / asc).powf(1.5).min(1.0);
    }
    if abs_sum > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * abs_sum);
    }
    Segment {
        lo,
        hi,
        value,
        error,
    }
}

/// Integrates `f` over `[lo, hi]`, splitting first at any `breakpoints` that
/// fall strictly inside the interval.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    breakpoints: &[f64],
    spec: &QuadratureSpec,
) -> Result<Integral> {
    spec.validate()?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::Domain {
            function: "integrate",
            value: hi - lo,
        });
    }
    let mut edges = vec![lo];
    let mut inner: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|p| p.is_finite() && *p > lo && *p < hi)
        .collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    edges.extend(inner);
    edges.push(hi);

    let mut segments = Vec::new();
    match spec.scheme {
        QuadratureScheme::Adaptive => {
            for pair in edges.windows(2) {
                segments.push(kronrod15(&mut f, pair[0], pair[1]));
            }
        }
        QuadratureScheme::Composite { panels } => {
            for pair in edges.windows(2) {
                let width = (pair[1] - pair[0]) / panels as f64;
                for p in 0..panels {
                    let a = pair[0] + width * p as f64;
                    let b = if p + 1 == panels { pair[1] } else { a + width };
                    segments.push(kronrod15(&mut f, a, b));
                }
            }
        }
    }
    let mut evaluations = 15 * segments.len();
    let mut heap: BinaryHeap<Segment> = segments.into_iter().collect();
    let target = |value: f64| spec.abs_tolerance.max(spec.rel_tolerance * value.abs());
    let totals = |heap: &BinaryHeap<Segment>| {
        heap.iter()
            .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error))
    };

    let (mut value, mut error) = totals(&heap);
    if matches!(spec.scheme, QuadratureScheme::Adaptive) {
        let mut subdivisions = heap.len();
        while error > target(value) && subdivisions < spec.max_subdivisions {
            let worst = heap.pop().expect("heap is never empty");
            let mid = 0.5 * (worst.lo + worst.hi);
            if !(mid > worst.lo && mid < worst.hi) {
                heap.push(worst);
                break;
            }
            heap.push(kronrod15(&mut f, worst.lo, mid));
            heap.push(kronrod15(&mut f, mid, worst.hi));
            evaluations += 30;
            subdivisions += 1;
            // Re-summing keeps the totals free of accumulated cancellation.
            (value, error) = totals(&heap);
        }
    }

    if !value.is_finite() || error > target(value) {
        return Err(Error::Quadrature {
            estimate: value,
            error,
        });
    }
    Ok(Integral {
        value,
        error,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(
            |x| x.powi(5) - 2.0 * x,
            0.0,
            2.0,
            &[],
            &QuadratureSpec::default(),
        )
        .unwrap();
        assert!((r.value - (64.0 / 6.0 - 4.0)).abs() < 1e-13);
    }

    #[test]
    fn gaussian_integral() {
        let spec = QuadratureSpec::default();
        let r = integrate(|x: f64| (-x * x).exp(), -12.0, 12.0, &[0.0], &spec).unwrap();
        assert!((r.value - std::f64::consts::PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn endpoint_singularity_converges() {
        // ∫_0^1 x^{-1/2} dx = 2
        let spec = QuadratureSpec::default().with_rel_tolerance(1e-10);
        let r = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, &[], &spec).unwrap();
        assert!((r.value - 2.0).abs() < 1e-8);
    }

    #[test]
    fn breakpoints_handle_kinks() {
        let spec = QuadratureSpec::default();
        let r = integrate(|x: f64| x.abs(), -1.0, 2.0, &[0.0], &spec).unwrap();
        assert!((r.value - 2.5).abs() < 1e-14);
        assert!(r.evaluations <= 30);
    }

    #[test]
    fn failure_is_reported() {
        let spec = QuadratureSpec {
            max_subdivisions: 2,
            ..QuadratureSpec::default()
        };
        let r = integrate(|x: f64| (1.0 / x).sin(), 1e-6, 1.0, &[], &spec);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }

    #[test]
    fn composite_scheme() {
        let spec = QuadratureSpec {
            scheme: QuadratureScheme::Composite { panels: 8 },
            ..QuadratureSpec::default()
        };
        let r = integrate(|x: f64| x.cos(), 0.0, 1.0, &[], &spec).unwrap();
        assert!((r.value - 1f64.sin()).abs() < 1e-14);
    }

    #[test]
    fn invalid_spec_rejected() {
        let bad = QuadratureSpec {
            abs_tolerance: 0.0,
            rel_tolerance: 0.0,
            ..QuadratureSpec::default()
        };
        assert!(integrate(|x| x, 0.0, 1.0, &[], &bad).is_err());
        assert!(integrate(|x| x, 1.0, 0.0, &[], &QuadratureSpec::default()).is_err());
    }
}
