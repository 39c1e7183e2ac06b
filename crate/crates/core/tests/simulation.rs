//! Sampler checks against closed forms and one-dimensional quadrature.

use hazard_sbf::simulation::{
    derive_seed, draw_covariates, draw_latent_gaussians, invert_cumulative, reference_covariates, subject_rng,
    COVARIATE_BOUND,
};
use hazard_sbf::{simulate_dataset, SimConfig};

/// Standard deviation of `2.5/π · arctan(G)` with `G ~ N(0, 1)`, by Simpson's
/// rule on `[-12, 12]`.
fn transformed_std() -> f64 {
    let n = 20_000;
    let (a, b) = (-12.0f64, 12.0f64);
    let h = (b - a) / n as f64;
    let f = |g: f64| {
        let z = 2.0 * COVARIATE_BOUND / std::f64::consts::PI * g.atan();
        z * z * (-0.5 * g * g).exp() / (2.0 * std::f64::consts::PI).sqrt()
    };
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    (s * h / 3.0).sqrt()
}

#[test]
fn independent_covariate_std_matches_quadrature() {
    // zero amplitude removes the rejection step, leaving the plain arctan law
    let sc = SimConfig {
        amplitude: 0.0,
        ..SimConfig::new(10, 2, 0.0, 1).unwrap()
    };
    let draws: Vec<f64> = (0..100_000u64)
        .flat_map(|i| draw_covariates(&sc, &mut subject_rng(11, i)).unwrap())
        .collect();
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    let sd = (draws.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / draws.len() as f64).sqrt();
    let expected = transformed_std();
    assert!((sd - expected).abs() <= 0.01 * expected, "{sd} vs {expected}");
    assert!(draws.iter().all(|z| z.abs() < COVARIATE_BOUND));
}

#[test]
fn latent_correlation_matches_rho() {
    for (d, rho) in [(3, 0.5), (4, -0.2), (2, 0.0)] {
        let sc = SimConfig::new(10, d, rho, 1).unwrap();
        let n = 50_000;
        let draws: Vec<Vec<f64>> = (0..n as u64)
            .map(|i| draw_latent_gaussians(&sc, &mut subject_rng(12, i)).unwrap())
            .collect();
        for j in 0..d {
            for l in j + 1..d {
                let (mut sj, mut sl, mut sjl, mut sjj, mut sll) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for x in &draws {
                    sj += x[j];
                    sl += x[l];
                    sjl += x[j] * x[l];
                    sjj += x[j] * x[j];
                    sll += x[l] * x[l];
                }
                let nf = n as f64;
                let cov = sjl / nf - sj * sl / (nf * nf);
                let corr = cov / ((sjj / nf - (sj / nf).powi(2)) * (sll / nf - (sl / nf).powi(2))).sqrt();
                assert!((corr - rho).abs() <= 3.0 / nf.sqrt(), "d = {d}: corr {corr} vs {rho}");
            }
        }
    }
}

#[test]
fn accepted_draws_have_positive_hazard() {
    let sc = SimConfig::new(2000, 5, 0.5, 3).unwrap();
    let (records, truth) = simulate_dataset(&sc).unwrap();
    for r in &records {
        let z: Vec<f64> = r.covariates.iter().map(|c| c.value_at(0.0)).collect();
        assert!(z.iter().all(|v| v.abs() < COVARIATE_BOUND));
        assert!(truth.covariate_effect(&z) > 0.0);
        assert!(r.exit_time <= sc.horizon);
        assert!(truth.hazard(r.exit_time, &z) > 0.0);
    }
}

#[test]
fn inversion_round_trip() {
    let sc = SimConfig::new(10, 3, 0.5, 1).unwrap();
    let truth = sc.truth();
    let z = [0.4, -0.1, 0.7];
    for t0 in [1e-4, 0.01, 0.3, 1.0, 2.5, 10.0] {
        let t = invert_cumulative(&truth, &z, truth.cumulative(t0, &z));
        assert!((t - t0).abs() <= 1e-10 * t0.max(1.0), "{t} vs {t0}");
    }
}

#[test]
fn censoring_proportion_sanity_band() {
    let sc = SimConfig::new(10_000, 3, 0.5, 5).unwrap();
    let (records, _) = simulate_dataset(&sc).unwrap();
    let censored = records.iter().filter(|r| !r.event).count() as f64 / records.len() as f64;
    assert!(censored > 0.3 && censored < 0.8, "{censored}");

    let heavy = SimConfig {
        censor_scale_divisor: 1e6,
        ..SimConfig::new(2000, 3, 0.5, 5).unwrap()
    };
    let (records, _) = simulate_dataset(&heavy).unwrap();
    let censored = records.iter().filter(|r| !r.event).count() as f64 / records.len() as f64;
    assert!(censored > 0.995, "{censored}");
}

#[test]
fn flat_hazard_scenario_has_exponential_times() {
    let sc = SimConfig {
        n: 20_000,
        d: 2,
        rho: 0.5,
        gompertz_rate: 0.0,
        baseline_scale: 2.0,
        amplitude: 0.0,
        censor_scale_divisor: 1e-6,
        horizon: 50.0,
        seed: 8,
    };
    let (records, _) = simulate_dataset(&sc).unwrap();
    // the censoring times are a million times longer, so every record is an event
    assert!(records.iter().all(|r| r.event));
    let mean = records.iter().map(|r| r.exit_time).sum::<f64>() / records.len() as f64;
    let se = 0.5 / (records.len() as f64).sqrt();
    assert!((mean - 0.5).abs() <= 4.0 * se, "{mean}");
}

#[test]
fn reference_sample_depends_only_on_the_scenario_seed() {
    let sc = SimConfig::new(100, 3, 0.5, 6).unwrap();
    let a = reference_covariates(&sc, 200).unwrap();
    let b = reference_covariates(&sc, 400).unwrap();
    assert_eq!(a[..], b[..200]);
    let c = reference_covariates(&sc.with_seed(7), 200).unwrap();
    assert_ne!(a, c);
}

#[test]
fn derived_seeds_are_distinct() {
    let mut seeds: Vec<u64> = (0..10_000).map(|r| derive_seed(1, r)).collect();
    seeds.sort_unstable();
    seeds.dedup();
    assert_eq!(seeds.len(), 10_000);
}

#[test]
fn invalid_scenarios_are_rejected() {
    assert!(SimConfig::new(100, 3, 1.2, 1).is_err());
    assert!(SimConfig::new(100, 3, -0.6, 1).is_err());
    assert!(SimConfig::new(0, 3, 0.5, 1).is_err());
    let sc = SimConfig::new(10, 2, 0.5, 1).unwrap();
    assert!(SimConfig { amplitude: 0.0, baseline_scale: 0.0, ..sc.clone() }.validate().is_err());
    assert!(SimConfig { horizon: -1.0, ..sc }.validate().is_err());
}
