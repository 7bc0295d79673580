//! Property tests for the invariants of each module.

use proptest::prelude::*;

use mixture_ep::density::{KnownDensity, KnownDensityPair, KnownDensitySet};
use mixture_ep::dirichlet::{
    dir_pe_update, dir_responsibilities, second_moment_residuals, DirichletState,
    SecondMomentPolicy,
};
use mixture_ep::gaussian_mean::{
    adf_update, asymptotic_precision_increment, complete_data_precision, observed_information,
    GaussianState, MeanComponent, MeanMixtureModel,
};
use mixture_ep::harness::{run, ExperimentConfig};
use mixture_ep::oracle::{fisher_information_beta, grid_mu_posterior};
use mixture_ep::quadrature::{integrate, QuadratureSpec};
use mixture_ep::special::{
    beta_log_moments, digamma, log_gamma, solve_digamma_system, trigamma, SolverSettings,
};
use mixture_ep::weight::{
    confirmed_update, kl_update, pe_update, pe_update_with_responsibility, quasi_bayes_update,
    vb_recursive_update, BetaState,
};

fn log_uniform(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo.ln()..hi.ln()).prop_map(f64::exp)
}

fn mean_model() -> impl Strategy<Value = MeanMixtureModel> {
    prop::collection::vec((-2.0..2.0f64, 0.5..3.0f64, 0.1..1.0f64), 1..=3).prop_map(|parts| {
        let total: f64 = parts.iter().map(|p| p.2).sum();
        MeanMixtureModel::new(
            parts
                .into_iter()
                .map(|(c, sigma, v)| MeanComponent {
                    c,
                    sigma,
                    v: v / total,
                })
                .collect(),
        )
        .expect("normalized weights")
    })
}

fn gaussian_pair() -> impl Strategy<Value = KnownDensityPair> {
    (-3.0..3.0f64, 0.3..3.0f64, -3.0..3.0f64, 0.3..3.0f64)
        .prop_map(|(m1, s1, m2, s2)| KnownDensityPair::gaussians(m1, s1, m2, s2).unwrap())
}

fn beta_mixture_moments(a: f64, b: f64, w1: f64) -> (f64, f64) {
    let moments = |a: f64, b: f64| {
        let l = a + b;
        (a / l, a * (a + 1.0) / (l * (l + 1.0)))
    };
    let (m1, s1) = moments(a + 1.0, b);
    let (m2, s2) = moments(a, b + 1.0);
    let mean = w1 * m1 + (1.0 - w1) * m2;
    (mean, w1 * s1 + (1.0 - w1) * s2 - mean * mean)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn digamma_and_trigamma_recurrences(x in log_uniform(1e-3, 1e6)) {
        let (p0, p1) = (digamma(x).unwrap(), digamma(x + 1.0).unwrap());
        let scale = p0.abs().max(p1.abs()).max(1.0 / x);
        prop_assert!((p1 - p0 - 1.0 / x).abs() <= 1e-12 * scale);
        let (t0, t1) = (trigamma(x).unwrap(), trigamma(x + 1.0).unwrap());
        prop_assert!((t1 - t0 + 1.0 / (x * x)).abs() <= 1e-12 * t0);
    }

    #[test]
    fn digamma_is_log_gamma_derivative(x in 0.1..100.0f64) {
        let h = 1e-5 * x;
        let fd = (log_gamma(x + h).unwrap() - log_gamma(x - h).unwrap()) / (2.0 * h);
        let psi = digamma(x).unwrap();
        prop_assert!((fd - psi).abs() <= 1e-6 * psi.abs().max(1.0), "{fd} vs {psi}");
    }

    #[test]
    fn digamma_system_round_trip(a in log_uniform(0.1, 1e4), b in log_uniform(0.1, 1e4)) {
        let (r1, r2) = beta_log_moments(a, b).unwrap();
        let s = solve_digamma_system(r1, r2, (1.0, 1.0), &SolverSettings::default()).unwrap();
        prop_assert!((s.a - a).abs() <= 1e-9 * a, "{} vs {a}", s.a);
        prop_assert!((s.b - b).abs() <= 1e-9 * b, "{} vs {b}", s.b);
    }

    #[test]
    fn adf_matches_grid_posterior(
        model in mean_model(),
        a in -3.0..3.0f64,
        b in 0.05..5.0f64,
        x in -5.0..5.0f64,
    ) {
        let state = GaussianState::new(a, b).unwrap();
        let adf = adf_update(&model, &state, x).unwrap();
        let grid = grid_mu_posterior(&model, &state, &[x], &QuadratureSpec::default()).unwrap();
        let sd = grid.variance.sqrt();
        prop_assert!((adf.a - grid.mean).abs() <= 1e-8 * grid.mean.abs().max(sd));
        prop_assert!((adf.b - grid.variance).abs() <= 1e-8 * grid.variance);
    }

    #[test]
    fn prior_mean_plays_the_role_of_mu(
        model in mean_model(),
        mu in -3.0..3.0f64,
        b in 0.01..2.0f64,
        x in -5.0..5.0f64,
    ) {
        let state = GaussianState::new(mu, b).unwrap();
        prop_assert_eq!(
            asymptotic_precision_increment(&model, &state, x),
            observed_information(&model, mu, x)
        );
    }

    #[test]
    fn complete_data_precision_dominates(
        model in mean_model(),
        a in -3.0..3.0f64,
        b in 0.01..2.0f64,
        x in -5.0..5.0f64,
    ) {
        let state = GaussianState::new(a, b).unwrap();
        let complete = complete_data_precision(&model, &state, x);
        let increment = asymptotic_precision_increment(&model, &state, x);
        prop_assert!(complete >= increment - 1e-12 * complete.abs().max(1.0));
    }

    #[test]
    fn pe_matches_beta_mixture_moments(
        a in log_uniform(0.1, 100.0),
        b in log_uniform(0.1, 100.0),
        w1 in 0.0..=1.0f64,
    ) {
        let state = BetaState::new(a, b).unwrap();
        let (next, _) = pe_update_with_responsibility(&state, w1).unwrap();
        let (mean, var) = beta_mixture_moments(a, b, w1);
        prop_assert!((next.mean() - mean).abs() <= 1e-10 * mean);
        prop_assert!((next.variance() - var).abs() <= 1e-10 * var);
    }

    #[test]
    fn pe_mass_increment_bounds(
        l in log_uniform(100.0, 1e5),
        e in 0.05..0.95f64,
        w1 in 0.0..=1.0f64,
    ) {
        let state = BetaState::new(e * l, (1.0 - e) * l).unwrap();
        let (_, d) = pe_update_with_responsibility(&state, w1).unwrap();
        prop_assert!(d.mass_increment <= 1.0 + 1e-12 * l);
        // Solving the variance equation gives the remainder in closed form:
        // increment − (1 − ε) = ε(ε − 1)/(L + 1 + ε).
        let remainder = d.mass_increment - (1.0 - d.epsilon);
        let exact = d.epsilon * (d.epsilon - 1.0) / (l + 1.0 + d.epsilon);
        prop_assert!((remainder - exact).abs() <= 1e-9 * (1.0 + d.epsilon * d.epsilon));
        if d.epsilon <= 3.0 {
            prop_assert!(remainder.abs() <= 10.0 / l);
        }
    }

    #[test]
    fn uninformative_observation_behaviour(
        a in log_uniform(0.2, 50.0),
        b in log_uniform(0.2, 50.0),
        x in -4.0..4.0f64,
    ) {
        let same = KnownDensityPair::gaussians(0.3, 1.2, 0.3, 1.2).unwrap();
        let state = BetaState::new(a, b).unwrap();
        let (pe, _) = pe_update(&same, &state, x).unwrap();
        prop_assert!((pe.a - a).abs() <= 1e-12 * a && (pe.b - b).abs() <= 1e-12 * b);
        let (kl, _) = kl_update(&same, &state, x, &SolverSettings::default()).unwrap();
        prop_assert!((kl.a - a).abs() <= 1e-9 * a && (kl.b - b).abs() <= 1e-9 * b);
        let (qb, _) = quasi_bayes_update(&same, &state, x).unwrap();
        let (vb, _) = vb_recursive_update(&same, &state, x).unwrap();
        prop_assert!((qb.mass() - state.mass() - 1.0).abs() <= 1e-12 * state.mass());
        prop_assert!((vb.mass() - state.mass() - 1.0).abs() <= 1e-12 * state.mass());
    }

    #[test]
    fn unit_mass_updates(
        pair in gaussian_pair(),
        a in log_uniform(0.1, 1e3),
        b in log_uniform(0.1, 1e3),
        x in -5.0..5.0f64,
        z in 1usize..=2,
    ) {
        let state = BetaState::new(a, b).unwrap();
        let l = state.mass();
        let tol = 4.0 * f64::EPSILON * (l + 1.0);
        prop_assert!((quasi_bayes_update(&pair, &state, x).unwrap().0.mass() - l - 1.0).abs() <= tol);
        prop_assert!((vb_recursive_update(&pair, &state, x).unwrap().0.mass() - l - 1.0).abs() <= tol);
        prop_assert!((confirmed_update(&state, z).unwrap().mass() - l - 1.0).abs() <= tol);
    }

    #[test]
    fn dirichlet_mean_matching_and_policy_residual(
        means in prop::collection::vec(-3.0..3.0f64, 3..=5),
        alphas in prop::collection::vec(log_uniform(0.2, 50.0), 5),
        x in -4.0..4.0f64,
    ) {
        let set = KnownDensitySet::new(
            means.iter().map(|m| KnownDensity::gaussian(*m, 1.0).unwrap()).collect(),
        ).unwrap();
        let state = DirichletState::new(alphas[..means.len()].to_vec()).unwrap();
        let w = dir_responsibilities(&set, &state, x).unwrap();
        let l = state.mass();
        for policy in [SecondMomentPolicy::AvgVariance, SecondMomentPolicy::AvgVarianceCovariance] {
            let next = dir_pe_update(&set, &state, x, policy).unwrap();
            for ((e, a), w) in next.means().iter().zip(&state.a).zip(&w) {
                prop_assert!((e - (a + w) / (l + 1.0)).abs() <= 1e-12);
            }
            if policy == SecondMomentPolicy::AvgVariance {
                let r = second_moment_residuals(&set, &state, x, next.mass()).unwrap();
                let mean: f64 = r.variance.iter().sum::<f64>() / r.variance.len() as f64;
                prop_assert!(mean.abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn two_cell_dirichlet_is_beta_editor(
        pair in gaussian_pair(),
        a in log_uniform(0.1, 1e3),
        b in log_uniform(0.1, 1e3),
        x in -5.0..5.0f64,
    ) {
        let (beta, _) = pe_update(&pair, &BetaState::new(a, b).unwrap(), x).unwrap();
        let set = KnownDensitySet::from(pair);
        let state = DirichletState::new(vec![a, b]).unwrap();
        for policy in [SecondMomentPolicy::AvgVariance, SecondMomentPolicy::AvgVarianceCovariance] {
            let dir = dir_pe_update(&set, &state, x, policy).unwrap();
            prop_assert!((dir.a[0] - beta.a).abs() <= 1e-10 * beta.a.max(1.0));
            prop_assert!((dir.a[1] - beta.b).abs() <= 1e-10 * beta.b.max(1.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fisher_information_below_complete_data(pair in gaussian_pair(), beta in 0.02..0.98f64) {
        let i = fisher_information_beta(&pair, beta, &QuadratureSpec::default()).unwrap();
        prop_assert!(i >= 0.0);
        // Gaussian pairs always overlap, so the bound is strict.
        prop_assert!(i < 1.0 / (beta * (1.0 - beta)));
    }

    #[test]
    fn halving_tolerance_stays_within_error_estimate(pair in gaussian_pair(), beta in 0.05..0.95f64) {
        let (lo, hi, points) = pair.window();
        let f = |x: f64| {
            let (f1, f2) = (pair.f1.pdf(x), pair.f2.pdf(x));
            let mix = beta * f1 + (1.0 - beta) * f2;
            if mix > 0.0 { (f1 - f2).powi(2) / mix } else { 0.0 }
        };
        let coarse_spec = QuadratureSpec::default().with_rel_tolerance(1e-8);
        let fine_spec = QuadratureSpec {
            abs_tolerance: coarse_spec.abs_tolerance / 2.0,
            ..coarse_spec.with_rel_tolerance(5e-9)
        };
        let coarse = integrate(f, lo, hi, &points, &coarse_spec).unwrap();
        let fine = integrate(f, lo, hi, &points, &fine_spec).unwrap();
        prop_assert!((coarse.value - fine.value).abs() <= coarse.error);
    }

    #[test]
    fn runs_are_pure_and_states_valid(seed in any::<u64>(), beta in 0.05..0.95f64) {
        let config = ExperimentConfig::from_json(&format!(
            r#"{{"schema_version": 1,
                "model": {{"kind": "known_set", "densities": [
                    {{"kind": "gaussian", "mean": -1, "sd": 1}},
                    {{"kind": "gaussian", "mean": 0.5, "sd": 1}},
                    {{"kind": "gaussian", "mean": 2, "sd": 1.5}}]}},
                "truth": [{beta}, {rest}, {rest}], "prior": {{"a": [1, 2, 1]}},
                "n": 40, "seed": {seed},
                "methods": ["qb", "dirichlet-pe", "confirmed"]}}"#,
            rest = (1.0 - beta) / 2.0
        ));
        // A truth vector whose halves round off the simplex is rejected up front.
        prop_assume!(config.is_ok());
        let config = config.unwrap();
        let first = run(&config).unwrap();
        prop_assert_eq!(&first, &run(&config).unwrap());
        for row in &first.trace {
            prop_assert!(row.hyperparameters.iter().all(|a| *a > 0.0 && a.is_finite()));
            prop_assert!(row.e > 0.0 && row.e < 1.0 && row.v > 0.0);
        }
    }
}
