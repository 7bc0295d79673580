//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Run with `cargo test -p mixture-ep --test acceptance -- --nocapture` to see
//! the report lines.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use mixture_ep::density::{KnownDensity, KnownDensityPair, KnownDensitySet};
use mixture_ep::dirichlet::{dir_pe_update, mass_candidates, DirichletState, SecondMomentPolicy};
use mixture_ep::gaussian_mean::{
    adf_update, asymptotic_mean_increment, asymptotic_precision_increment, closed_form,
    complete_data_precision, log_density, observed_information, score, GaussianState,
    MeanComponent, MeanMixtureModel,
};
use mixture_ep::harness::stream_rng;
use mixture_ep::oracle::{
    exact_beta_posterior, fisher_information_beta, fisher_information_mu, grid_beta_posterior,
    grid_mu_posterior, lemma_sides, DEFAULT_ENUMERATION_LIMIT,
};
use mixture_ep::quadrature::QuadratureSpec;
use mixture_ep::special::{beta_log_moments, solve_digamma_system, SolverSettings};
use mixture_ep::weight::{kl_update, pe_update, quasi_bayes_update, BetaState};

const SEED: u64 = 0x5eed_2024;

fn report(criterion: u32, name: &str, pass: bool, detail: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("[{verdict}] criterion {criterion:>2} {name}: {detail}");
    assert!(pass, "criterion {criterion} ({name}) failed: {detail}");
}

fn rng(criterion: u64) -> ChaCha8Rng {
    stream_rng(SEED, criterion)
}

fn random_gaussian_pair(rng: &mut ChaCha8Rng) -> KnownDensityPair {
    KnownDensityPair::gaussians(
        rng.random_range(-3.0..3.0),
        rng.random_range(0.3..3.0),
        rng.random_range(-3.0..3.0),
        rng.random_range(0.3..3.0),
    )
    .unwrap()
}

fn random_mean_model(rng: &mut ChaCha8Rng) -> MeanMixtureModel {
    let j = rng.random_range(1..=3);
    let raw: Vec<(f64, f64, f64)> = (0..j)
        .map(|_| {
            (
                rng.random_range(-2.0..2.0),
                rng.random_range(0.5..3.0),
                rng.random_range(0.1..1.0),
            )
        })
        .collect();
    let total: f64 = raw.iter().map(|r| r.2).sum();
    MeanMixtureModel::new(
        raw.into_iter()
            .map(|(c, sigma, v)| MeanComponent {
                c,
                sigma,
                v: v / total,
            })
            .collect(),
    )
    .unwrap()
}

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn near_pair() -> KnownDensityPair {
    KnownDensityPair::gaussians(0.0, 1.0, 1.0, 1.0).unwrap()
}

#[test]
fn criterion_01_lemma_identity() {
    let mut rng = rng(1);
    let quad = QuadratureSpec::default();
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let pair = random_gaussian_pair(&mut rng);
        let beta = rng.random_range(0.05..0.95);
        worst = worst.max(lemma_sides(&pair, beta, &quad).unwrap().violation);
    }
    report(
        1,
        "lemma identity",
        worst <= 1e-6,
        format!("max relative violation {worst:.3e} over 20 configurations (limit 1e-6)"),
    );
}

#[test]
fn criterion_02_editor_variance_matches_fisher() {
    let pair = near_pair();
    let beta = 0.3;
    let complete = beta * (1.0 - beta);
    // fixed before any simulation
    let inverse_information =
        1.0 / fisher_information_beta(&pair, beta, &QuadratureSpec::default()).unwrap();
    let n = 20_000;
    let prior = BetaState::new(1.0, 1.0).unwrap();
    let (mut pe_nv, mut qb_nv, mut qb_means) = (Vec::new(), Vec::new(), Vec::new());
    for r in 0..20 {
        let mut rng = stream_rng(SEED + 2, r);
        let (mut pe, mut qb) = (prior, prior);
        for _ in 0..n {
            let x = pair.sample(beta, &mut rng).0;
            pe = pe_update(&pair, &pe, x).unwrap().0;
            qb = quasi_bayes_update(&pair, &qb, x).unwrap().0;
        }
        pe_nv.push(n as f64 * pe.variance());
        qb_nv.push(n as f64 * qb.variance());
        qb_means.push(qb.mean());
    }
    let (pe_med, qb_med) = (median(pe_nv), median(qb_nv));
    let pe_gap = (pe_med - inverse_information).abs() / inverse_information;
    let qb_gap = (qb_med - complete).abs() / complete;
    let ratio = inverse_information / complete;
    // n·V_QB is E_n(1 − E_n) up to O(1/n), so its gap tracks the bias of the mean.
    let qb_mean = median(qb_means);
    report(
        2,
        "editor variance matches inverse Fisher information",
        pe_gap <= 0.10 && qb_gap <= 0.05 && ratio > 1.5,
        format!(
            "median n·V_PE {pe_med:.4} vs 1/I {inverse_information:.4} ({:.2}%), \
             median n·V_QB {qb_med:.4} vs β(1−β) {complete} ({:.2}%), (1/I)/(β(1−β)) = {ratio:.3}; \
             median terminal QB mean {qb_mean:.4} vs β {beta}",
            100.0 * pe_gap,
            100.0 * qb_gap
        ),
    );
}

#[test]
fn criterion_03_enumeration_agrees_with_quadrature() {
    let pair = near_pair();
    let prior = BetaState::new(1.0, 1.0).unwrap();
    let quad = QuadratureSpec::default();
    let (mut mean_gap, mut var_gap): (f64, f64) = (0.0, 0.0);
    for r in 0..20 {
        let mut rng = stream_rng(SEED + 3, r);
        let n = 1 + (r as usize % 12);
        let data: Vec<f64> = (0..n).map(|_| pair.sample(0.3, &mut rng).0).collect();
        let exact = exact_beta_posterior(&pair, &prior, &data, DEFAULT_ENUMERATION_LIMIT)
            .unwrap()
            .summary;
        let grid = grid_beta_posterior(&pair, &prior, &data, &quad).unwrap();
        mean_gap = mean_gap.max((exact.mean - grid.mean).abs());
        var_gap = var_gap.max((exact.variance - grid.variance).abs());
    }
    report(
        3,
        "enumeration and quadrature posteriors agree",
        mean_gap <= 1e-8 && var_gap <= 1e-8,
        format!(
            "max |Δmean| {mean_gap:.3e}, max |Δvariance| {var_gap:.3e} over 20 data sets, n ≤ 12"
        ),
    );
}

#[test]
fn criterion_04_small_sample_calibration() {
    let pair = near_pair();
    let prior = BetaState::new(1.0, 1.0).unwrap();
    let settings = SolverSettings::default();
    let quad = QuadratureSpec::default();
    let (mut pe_ok, mut kl_ok, mut qb_narrow) = (0, 0, 0);
    let replicates = 20;
    for r in 0..replicates {
        let mut rng = stream_rng(SEED + 4, r);
        let data: Vec<f64> = (0..500).map(|_| pair.sample(0.3, &mut rng).0).collect();
        let exact = grid_beta_posterior(&pair, &prior, &data, &quad)
            .unwrap()
            .variance;
        let (mut pe, mut kl, mut qb) = (prior, prior, prior);
        for &x in &data {
            pe = pe_update(&pair, &pe, x).unwrap().0;
            kl = kl_update(&pair, &kl, x, &settings).unwrap().0;
            qb = quasi_bayes_update(&pair, &qb, x).unwrap().0;
        }
        let within = |v: f64| (0.8..=1.25).contains(&(v / exact));
        pe_ok += within(pe.variance()) as usize;
        kl_ok += within(kl.variance()) as usize;
        qb_narrow += (qb.variance() / exact < 0.6) as usize;
    }
    let need = (0.8 * replicates as f64).ceil() as usize;
    report(
        4,
        "small-sample calibration against the exact posterior",
        pe_ok >= need && kl_ok >= need && qb_narrow >= need,
        format!(
            "V_PE/V_exact in [0.8,1.25]: {pe_ok}/20, V_KL/V_exact in [0.8,1.25]: {kl_ok}/20, \
             V_QB/V_exact < 0.6: {qb_narrow}/20 (need {need})"
        ),
    );
}

#[test]
fn criterion_05_gaussian_adf_exactness() {
    let mut rng = rng(5);
    let mut conjugate_gap: f64 = 0.0;
    for _ in 0..200 {
        let (c, sigma) = (rng.random_range(-3.0..3.0), rng.random_range(0.2..4.0));
        let (a, b) = (rng.random_range(-5.0..5.0), rng.random_range(0.01..10.0));
        let x = rng.random_range(-10.0..10.0);
        let model = MeanMixtureModel::single(c, sigma).unwrap();
        let next = adf_update(&model, &GaussianState::new(a, b).unwrap(), x).unwrap();
        let precision = 1.0 / b + c * c / (sigma * sigma);
        let mean = (a / b + c * x / (sigma * sigma)) / precision;
        conjugate_gap = conjugate_gap
            .max((next.a - mean).abs() / mean.abs().max(1.0))
            .max((next.b - 1.0 / precision).abs() * precision);
    }
    let quad = QuadratureSpec::default();
    let mut grid_gap: f64 = 0.0;
    for _ in 0..50 {
        let model = random_mean_model(&mut rng);
        let state =
            GaussianState::new(rng.random_range(-3.0..3.0), rng.random_range(0.05..5.0)).unwrap();
        let x = rng.random_range(-5.0..5.0);
        let next = adf_update(&model, &state, x).unwrap();
        let grid = grid_mu_posterior(&model, &state, &[x], &quad).unwrap();
        let scale = grid.mean.abs().max(grid.variance.sqrt());
        grid_gap = grid_gap
            .max((next.a - grid.mean).abs() / scale)
            .max((next.b - grid.variance).abs() / grid.variance);
    }
    report(
        5,
        "Gaussian moment matching is exact",
        conjugate_gap <= 1e-12 && grid_gap <= 1e-8,
        format!("single component max rel gap {conjugate_gap:.3e} (limit 1e-12); mixtures vs quadrature {grid_gap:.3e} (limit 1e-8)"),
    );
}

#[test]
fn criterion_06_asymptotic_expansion_validity() {
    let models = [
        ("symmetric", MeanMixtureModel::symmetric()),
        ("clutter", MeanMixtureModel::clutter(0.5).unwrap()),
        (
            "three-component",
            MeanMixtureModel::new(vec![
                MeanComponent {
                    c: -1.0,
                    sigma: 1.0,
                    v: 0.3,
                },
                MeanComponent {
                    c: 0.5,
                    sigma: 2.0,
                    v: 0.3,
                },
                MeanComponent {
                    c: 2.0,
                    sigma: 0.7,
                    v: 0.4,
                },
            ])
            .unwrap(),
        ),
    ];
    // The pass condition uses the three listed step sizes; 1e-4 is only
    // evaluated to report the rate one decade further into the asymptotic regime.
    let bs = [0.1, 0.01, 0.001, 0.0001];
    let mut decades: [Vec<f64>; 3] = Default::default();
    for (_, model) in &models {
        for a in [-1.0, 0.5, 2.0] {
            for x in [-2.0, 0.3, 1.5] {
                // precision and (scaled) mean remainders at each b
                let mut prec = Vec::new();
                let mut mean = Vec::new();
                for &b in &bs {
                    let s = GaussianState::new(a, b).unwrap();
                    let next = adf_update(model, &s, x).unwrap();
                    prec.push(
                        ((1.0 / next.b - 1.0 / b) - asymptotic_precision_increment(model, &s, x))
                            .abs(),
                    );
                    mean.push(((next.a - a) - asymptotic_mean_increment(model, &s, x)).abs() / b);
                }
                for series in [prec, mean] {
                    if series[0] < 1e-9 {
                        continue; // remainder vanishes identically at this point
                    }
                    for (k, rates) in decades.iter_mut().enumerate() {
                        rates.push((series[k] / series[k + 1]).log10());
                    }
                }
            }
        }
    }
    let range = |rates: &[f64]| {
        rates
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), s| {
                (l.min(*s), h.max(*s))
            })
    };
    let slopes: Vec<f64> = decades[..2].concat();
    let (lo, hi) = range(&slopes);
    let [first, second, tail] = decades.each_ref().map(|rates| range(rates));
    report(
        6,
        "asymptotic expansion remainders shrink linearly in b",
        !slopes.is_empty() && lo >= 0.75 && hi <= 1.25,
        format!(
            "{} decade-to-decade log10 decay rates in [{lo:.3}, {hi:.3}] (linear = 1, band [0.75, 1.25]); \
             by decade: 0.1→0.01 [{:.3}, {:.3}], 0.01→0.001 [{:.3}, {:.3}], beyond the grid 0.001→0.0001 [{:.3}, {:.3}]",
            slopes.len(),
            first.0, first.1, second.0, second.1, tail.0, tail.1
        ),
    );
}

#[test]
fn criterion_07_specialization_identities() {
    let mut rng = rng(7);
    let symmetric = MeanMixtureModel::symmetric();
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let (a, x) = (rng.random_range(-5.0..5.0), rng.random_range(-6.0..6.0));
        let b = rng.random_range(0.001..1.0);
        let s = GaussianState::new(a, b).unwrap();
        worst = worst
            .max(
                (asymptotic_precision_increment(&symmetric, &s, x)
                    - closed_form::symmetric_precision_increment(a, x))
                .abs(),
            )
            .max(
                (observed_information(&symmetric, a, x)
                    - closed_form::symmetric_observed_information(a, x))
                .abs(),
            )
            .max(
                (asymptotic_mean_increment(&symmetric, &s, x)
                    - closed_form::symmetric_mean_increment(a, b, x))
                .abs(),
            );

        let v = rng.random_range(0.05..0.95);
        let clutter = MeanMixtureModel::clutter(v).unwrap();
        worst = worst
            .max(
                (asymptotic_precision_increment(&clutter, &s, x)
                    - closed_form::clutter_precision_increment(v, a, x))
                .abs(),
            )
            .max(
                (observed_information(&clutter, a, x)
                    - closed_form::clutter_observed_information(v, a, x))
                .abs(),
            )
            .max(
                (asymptotic_mean_increment(&clutter, &s, x)
                    - closed_form::clutter_mean_increment(v, a, b, x))
                .abs(),
            );
    }
    report(
        7,
        "specialization identities",
        worst <= 1e-12,
        format!("max abs deviation {worst:.3e} over 1000 draws per model (limit 1e-12)"),
    );
}

/// Eliminates the h² and h⁴ terms of a central difference evaluated at h, h/2, h/4.
fn richardson(full: f64, half: f64, quarter: f64) -> f64 {
    let first = (4.0 * half - full) / 3.0;
    let second = (4.0 * quarter - half) / 3.0;
    (16.0 * second - first) / 15.0
}

#[test]
fn criterion_08_derivative_checks() {
    let mut rng = rng(8);
    let (mut score_gap, mut info_gap): (f64, f64) = (0.0, 0.0);
    for _ in 0..200 {
        let model = random_mean_model(&mut rng);
        let (mu, x) = (rng.random_range(-3.0..3.0), rng.random_range(-6.0..6.0));
        let f = |m: f64| log_density(&model, m, x);
        let d1 = |h: f64| (f(mu + h) - f(mu - h)) / (2.0 * h);
        let d2 = |h: f64| (f(mu + h) - 2.0 * f(mu) + f(mu - h)) / (h * h);
        // Step scaled to the narrowest component in mu units, large enough that
        // roundoff in log_density stays negligible; two Richardson levels.
        let width = model
            .components()
            .iter()
            .map(|c| c.sigma / c.c.abs().max(1e-3))
            .fold(1.0, f64::min);
        let h = 0.1 * width;
        let fd_score = richardson(d1(h), d1(h / 2.0), d1(h / 4.0));
        let fd_info = -richardson(d2(h), d2(h / 2.0), d2(h / 4.0));
        let s = score(&model, mu, x);
        let i = observed_information(&model, mu, x);
        // Both derivatives can cross zero; scale by the complete-data terms they are built from.
        let complete = complete_data_precision(&model, &GaussianState { a: mu, b: 1.0 }, x);
        score_gap = score_gap.max((fd_score - s).abs() / s.abs().max(complete.sqrt()));
        info_gap = info_gap.max((fd_info - i).abs() / i.abs().max(complete));
    }
    report(
        8,
        "score and observed information match finite differences",
        score_gap <= 1e-6 && info_gap <= 1e-6,
        format!("max relative gap: score {score_gap:.3e}, information {info_gap:.3e} over 200 points (limit 1e-6)"),
    );
}

#[test]
fn criterion_09_kl_close_to_moment_matching() {
    let mut rng = rng(9);
    let pair = near_pair();
    let settings = SolverSettings::default();
    let (mut gap, mut round_trip, mut residual): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..100 {
        let e = rng.random_range(0.05..0.95);
        let state = BetaState::new(e * 1e4, (1.0 - e) * 1e4).unwrap();
        let x = pair.sample(rng.random_range(0.05..0.95), &mut rng).0;
        let (kl, _) = kl_update(&pair, &state, x, &settings).unwrap();
        let (pe, _) = pe_update(&pair, &state, x).unwrap();
        gap = gap
            .max((kl.a - pe.a).abs() / pe.a)
            .max((kl.b - pe.b).abs() / pe.b);
        // forward-evaluate the KL solution and solve back from scratch
        let (r1, r2) = beta_log_moments(kl.a, kl.b).unwrap();
        let back = solve_digamma_system(r1, r2, (1.0, 1.0), &settings).unwrap();
        round_trip = round_trip
            .max((back.a - kl.a).abs() / kl.a)
            .max((back.b - kl.b).abs() / kl.b);
        residual = residual.max(back.residual);
    }
    report(
        9,
        "KL update is close to moment matching at large mass",
        gap <= 1e-3 && round_trip <= 1e-9 && residual <= 1e-9,
        format!(
            "max relative |KL − PE| {gap:.3e} (limit 1e-3); digamma round trip {round_trip:.3e}, residual {residual:.3e} (limit 1e-9)"
        ),
    );
}

#[test]
fn criterion_10_dirichlet_collapse() {
    let mut rng = rng(10);
    let mut collapse: f64 = 0.0;
    for _ in 0..100 {
        let pair = random_gaussian_pair(&mut rng);
        let (a, b) = (rng.random_range(0.1..100.0), rng.random_range(0.1..100.0));
        let x = rng.random_range(-5.0..5.0);
        let (beta, _) = pe_update(&pair, &BetaState::new(a, b).unwrap(), x).unwrap();
        let set = KnownDensitySet::from(pair);
        for policy in [
            SecondMomentPolicy::AvgVariance,
            SecondMomentPolicy::AvgVarianceCovariance,
        ] {
            let dir =
                dir_pe_update(&set, &DirichletState::new(vec![a, b]).unwrap(), x, policy).unwrap();
            collapse = collapse
                .max((dir.a[0] - beta.a).abs())
                .max((dir.a[1] - beta.b).abs());
        }
    }

    let three = KnownDensitySet::new(vec![
        KnownDensity::gaussian(-1.0, 1.0).unwrap(),
        KnownDensity::gaussian(0.5, 1.0).unwrap(),
        KnownDensity::gaussian(2.0, 1.0).unwrap(),
    ])
    .unwrap();
    let state = DirichletState::new(vec![2.0, 3.0, 1.5]).unwrap();
    let candidates = mass_candidates(&three, &state, 0.9).unwrap();
    let witness = candidates.pairwise_distinct(1e-6);

    let flat = KnownDensitySet::new(vec![KnownDensity::gaussian(0.0, 1.0).unwrap(); 3]).unwrap();
    let mut fixed_point: f64 = 0.0;
    for policy in [
        SecondMomentPolicy::AvgVariance,
        SecondMomentPolicy::AvgVarianceCovariance,
    ] {
        let next = dir_pe_update(&flat, &state, 0.4, policy).unwrap();
        for (p, q) in next.a.iter().zip(&state.a) {
            fixed_point = fixed_point.max((p - q).abs());
        }
    }
    report(
        10,
        "Dirichlet update collapses to the Beta editor",
        collapse <= 1e-10 && witness && fixed_point <= 1e-12,
        format!(
            "J=2 max gap {collapse:.3e} (limit 1e-10); J=3 per-cell mass candidates {:?} pairwise distinct: {witness}; \
             uninformative step moves state by {fixed_point:.3e} (limit 1e-12)",
            candidates.variance_approx
        ),
    );
}

#[test]
fn criterion_11_separation_limit() {
    let quad = QuadratureSpec::default();
    let model = MeanMixtureModel::symmetric();
    let near = fisher_information_mu(&model, 0.5, &quad).unwrap();
    let far = fisher_information_mu(&model, 6.0, &quad).unwrap();
    report(
        11,
        "Fisher information approaches one as components separate",
        near < 1.0 && far > 0.99,
        format!("I(0.5) = {near:.6} (< 1), I(6) = {far:.12} (> 0.99)"),
    );
}
