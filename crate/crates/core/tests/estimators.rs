//! Cross-checks between the four estimators, the projection solver and the
//! closed-form special cases.

mod common;

use common::{components_sup_diff, random_instance, random_points, sup_diff};
use hazard_sbf::{
    build_full_pilot, build_lc_marginals, classic_lc_fit, classic_ll_fit, fit, lc_backfit, lc_fit, ll_fit,
    oracle_solve, simulate_dataset, validate_dataset, Estimator, FitConfig, Norming, SimConfig,
};

#[test]
fn classical_and_smooth_agree_without_covariates() {
    for seed in 0..3 {
        let ds = random_instance(400 + seed, 80, 0, &[21]);
        for norming in [Norming::ExposureWeighted, Norming::Uniform] {
            let lc = FitConfig::new(Estimator::LocalConstantSbf, 0.4).with_norming(norming).with_tolerance(1e-12);
            let d_lc = components_sup_diff(&lc_fit(&ds, &lc).unwrap(), &classic_lc_fit(&ds, &lc).unwrap());
            assert!(d_lc <= 1e-10, "LC {d_lc}");
            let ll = FitConfig { estimator: Estimator::LocalLinearSbf, ..lc };
            let d_ll = components_sup_diff(&ll_fit(&ds, &ll).unwrap(), &classic_ll_fit(&ds, &ll).unwrap());
            assert!(d_ll <= 1e-10, "LL {d_ll}");
        }
    }
}

#[test]
fn projection_matches_backfitting_at_tight_tolerance() {
    for i in 0..6u64 {
        let points = random_points(500 + i, 3, 9, 17);
        let ds = random_instance(500 + i, 60, 2, &points);
        for norming in [Norming::ExposureWeighted, Norming::Uniform] {
            let cfg = FitConfig::new(Estimator::LocalConstantSbf, 0.5)
                .with_norming(norming)
                .with_tolerance(1e-15)
                .with_max_iterations(100_000);
            let pilot = build_full_pilot(&ds, &cfg).unwrap();
            let d = components_sup_diff(&lc_backfit(&pilot.marginals(), &cfg), &oracle_solve(&pilot, norming).unwrap());
            assert!(d <= 1e-6, "instance {i}: {d}");
        }
    }
}

#[test]
fn full_pilot_marginals_recover_the_direct_tables() {
    // trapezoid marginalization of the full arrays is a quadrature of the
    // integral the direct tables evaluate exactly, so it needs a fine grid
    let err = |points: usize| {
        let ds = random_instance(600, 50, 1, &[points, points]);
        let cfg = FitConfig::new(Estimator::LocalConstantSbf, 0.5);
        let direct = build_lc_marginals(&ds, &cfg).unwrap();
        let from_full = build_full_pilot(&ds, &cfg).unwrap().marginals();
        let scale = direct.exposure.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
        (0..2).map(|k| sup_diff(&direct.exposure[k], &from_full.exposure[k])).fold(0.0, f64::max) / scale
    };
    let (coarse, fine) = (err(41), err(1001));
    assert!(fine <= 1e-6, "{fine}");
    assert!(fine < coarse);
}

#[test]
fn divergence_is_reported_not_raised() {
    let sc = SimConfig::new(120, 8, 0.5, 3).unwrap();
    let (records, _) = simulate_dataset(&sc).unwrap();
    let ds = validate_dataset(records, &sc.grid(21).unwrap()).unwrap();
    for estimator in Estimator::ALL {
        let f = fit(&ds, &FitConfig::new(estimator, 0.15).with_max_iterations(200)).unwrap();
        if f.diverged {
            assert!(!f.converged);
        }
        assert!(f.is_centered(1e-8) || f.diverged, "{estimator}");
    }
}

#[test]
fn smooth_backfitting_converges_on_random_seeds() {
    for seed in 0..20u64 {
        let points = random_points(700 + seed, 4, 11, 21);
        let ds = random_instance(700 + seed, 200, 3, &points);
        let f = lc_fit(&ds, &FitConfig::new(Estimator::LocalConstantSbf, 0.6)).unwrap();
        assert!(f.converged, "seed {seed}");
        assert!(f.iterations_used <= 500);
        assert!(f.final_criterion.is_finite());
    }
}

#[test]
fn one_more_sweep_stays_below_tolerance() {
    let ds = random_instance(800, 150, 2, &[17, 15, 13]);
    let cfg = FitConfig::new(Estimator::LocalConstantSbf, 0.5).with_tolerance(1e-8);
    let m = build_lc_marginals(&ds, &cfg).unwrap();
    let f = lc_backfit(&m, &cfg);
    assert!(f.converged);
    let mut g = f.clone();
    for k in 0..g.n_dims() {
        hazard_sbf::lc_backfit_update(&mut g, &m, k);
    }
    let tw: Vec<Vec<f64>> = f.grid.dims.iter().map(|d| d.trapezoid_weights()).collect();
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..f.n_dims() {
        for x in 0..tw[k].len() {
            if f.unsupported[k][x] {
                continue;
            }
            num += tw[k][x] * (g.components[k][x] - f.components[k][x]).powi(2);
            den += tw[k][x] * g.components[k][x].powi(2);
        }
    }
    assert!(num / (den + cfg.tol_offset) < cfg.tolerance);
}

#[test]
fn local_linear_fit_carries_derivatives_and_shares_the_intercept() {
    let ds = random_instance(900, 150, 2, &[17, 15, 13]);
    let lc = fit(&ds, &FitConfig::new(Estimator::LocalConstantSbf, 0.5)).unwrap();
    let ll = fit(&ds, &FitConfig::new(Estimator::LocalLinearSbf, 0.5)).unwrap();
    assert!(lc.derivatives.is_none());
    let derivs = ll.derivatives.as_ref().unwrap();
    assert_eq!(derivs.len(), 3);
    // both use the exposure-weighted centering, whose intercept is events/exposure
    let expected = ds.total_events() as f64 / ds.total_exposure();
    assert!((lc.intercept - expected).abs() <= 1e-12);
    assert!((ll.intercept - expected).abs() <= 1e-12);
}
