//! Monte-Carlo metrics: MISE definition, decomposition, determinism and the
//! bias/variance signature across bandwidths.

use hazard_sbf::evaluation::{centered_truth, mc_fit_config, mc_study_with};
use hazard_sbf::{
    bandwidth_search, component_mise, fit, mc_study, simulate_dataset, validate_dataset, Estimator, SimConfig,
};

#[test]
fn zero_fit_mise_is_the_second_moment_of_the_centered_truth() {
    let sc = SimConfig::new(300, 2, 0.5, 12).unwrap();
    let (records, truth) = simulate_dataset(&sc).unwrap();
    let ds = validate_dataset(records, &sc.grid(41).unwrap()).unwrap();
    let mut f = fit(&ds, &mc_fit_config(Estimator::LocalConstantSbf, 0.4)).unwrap();
    f.components.iter_mut().for_each(|c| c.iter_mut().for_each(|v| *v = 0.0));
    for k in 1..=2 {
        // offset: the truth's mean under the fit's centering weights
        let dim = &f.grid.dims[k];
        let tw = dim.trapezoid_weights();
        let (mut num, mut den) = (0.0, 0.0);
        for g in 0..dim.n_points {
            if !f.unsupported[k][g] {
                num += tw[g] * f.weights[k][g] * truth.component(k, dim.node(g));
                den += tw[g] * f.weights[k][g];
            }
        }
        let offset = num / den;
        let m: f64 = ds
            .records()
            .iter()
            .map(|r| (truth.component(k, r.covariates[k - 1].value_at(0.0)) - offset).powi(2))
            .sum::<f64>()
            / ds.len() as f64;
        let mise = component_mise(&f, &truth, &ds, k);
        assert!((mise - m).abs() <= 1e-12 * m, "{mise} vs {m}");
        let target = centered_truth(&f, &truth, k);
        assert!((target(0.3) - (truth.component(k, 0.3) - offset)).abs() < 1e-14);
    }
}

#[test]
fn single_replication_has_no_variance() {
    let sc = SimConfig::new(200, 2, 0.5, 13).unwrap();
    let grid = sc.grid(21).unwrap();
    for r in mc_study(&sc, &Estimator::ALL, 0.5, 1, &grid).unwrap() {
        for c in r.per_component.as_ref().unwrap() {
            assert_eq!(c.variance, 0.0);
            assert!((c.mise - c.bias_sq).abs() <= 1e-12 * c.mise);
        }
    }
}

#[test]
fn decomposition_holds_and_reports_are_order_independent() {
    let sc = SimConfig::new(200, 2, 0.5, 14).unwrap();
    let grid = sc.grid(21).unwrap();
    let a = mc_study(&sc, &[Estimator::LocalLinearSbf, Estimator::LocalConstantSbf], 0.5, 4, &grid).unwrap();
    let b = mc_study(&sc, &[Estimator::LocalConstantSbf, Estimator::LocalLinearSbf], 0.5, 4, &grid).unwrap();
    assert_eq!(a[0], b[1]);
    assert_eq!(a[1], b[0]);
    for r in &a {
        assert!(r.n_converged <= r.n_reps);
        for c in r.per_component.as_ref().unwrap() {
            assert!(c.mise >= 0.0 && c.variance >= 0.0);
            assert!((c.mise - (c.bias_sq + c.variance)).abs() <= 1e-8 * c.mise + 1e-12);
        }
    }
}

#[test]
fn all_diverging_replications_give_na() {
    let sc = SimConfig::new(150, 2, 0.5, 15).unwrap();
    let grid = sc.grid(21).unwrap();
    let plan = mc_fit_config(Estimator::LocalLinearSbf, 0.5).with_max_iterations(1);
    let r = mc_study_with(&sc, &[plan], 3, &grid).unwrap().pop().unwrap();
    assert_eq!(r.n_converged, 0);
    assert!(r.is_na());
    assert!(r.per_component.is_none());
}

#[test]
fn bandwidth_ends_show_the_bias_variance_signature() {
    let sc = SimConfig::new(500, 3, 0.5, 16).unwrap();
    let grid = sc.grid(41).unwrap();
    let profile = bandwidth_search(&sc, Estimator::LocalConstantSbf, &[0.08, 1.0], 8, &grid).unwrap();
    let under = profile.reports[0].component(1).unwrap();
    let over = profile.reports[1].component(1).unwrap();
    assert!(under.variance >= under.bias_sq, "{under:?}");
    assert!(over.bias_sq >= over.variance, "{over:?}");
}

#[test]
fn bandwidth_search_is_repeatable_and_complete() {
    let sc = SimConfig::new(200, 2, 0.5, 17).unwrap();
    let grid = sc.grid(21).unwrap();
    let candidates = [0.3, 0.5, 0.9];
    let a = bandwidth_search(&sc, Estimator::LocalConstantSbf, &candidates, 3, &grid).unwrap();
    let b = bandwidth_search(&sc, Estimator::LocalConstantSbf, &candidates, 3, &grid).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.reports.len(), candidates.len());
    let best = a.best_report().unwrap();
    assert!(a.reports.iter().all(|r| r.total_sample_mise() >= best.total_sample_mise()));
    assert!(bandwidth_search(&sc, Estimator::LocalConstantSbf, &[0.3], 3, &grid).is_err());
}
