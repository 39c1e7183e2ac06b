//! Invariant checks shared by the property tests and the acceptance suite.
//! Each returns the largest violation it found.

use hazard_sbf::evaluation::mc_study_with;
use hazard_sbf::io::format_csv;
use hazard_sbf::simulation::simulate_dataset;
use hazard_sbf::{
    boundary_kernel, build_lc_marginals, build_ll_marginals, fit, lc_backfit, lc_backfit_update, ll_backfit,
    ll_backfit_update, validate_dataset, Dataset, DimensionGrid, Estimator, EvaluationGrid, FitConfig, Norming,
    SimConfig,
};

use super::{components_sup_diff, random_instance, sup_diff};

/// Three-point Gauss–Legendre, exact for the piecewise quadratic kernel once
/// the integral is split at its breakpoints.
fn gauss3(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
    let x = (0.6f64).sqrt();
    r * (5.0 * f(m - r * x) + 8.0 * f(m) + 5.0 * f(m + r * x)) / 9.0
}

/// `|∫ k_h(u, v) du - 1|` over 50 data points `v` within `h` of either end.
pub fn kernel_normalization(h: f64, lo: f64, hi: f64) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..50 {
        let frac = i as f64 / 49.0;
        let v = if i % 2 == 0 { lo + frac * h } else { hi - frac * h };
        let a = (v - h).max(lo);
        let b = (v + h).min(hi);
        let total = gauss3(a, v, |u| boundary_kernel(u, v, h, lo, hi)) + gauss3(v, b, |u| boundary_kernel(u, v, h, lo, hi));
        worst = worst.max((total - 1.0).abs());
    }
    worst
}

/// Relative centering residual after every single component update, over
/// `sweeps` sweeps of both smooth backfitting algorithms.
pub fn centering_every_sweep(dataset: &Dataset, h: f64, norming: Norming, sweeps: usize) -> f64 {
    let mut worst = 0.0f64;
    let mut record = |f: &hazard_sbf::AdditiveFit| {
        for k in 0..f.n_dims() {
            let (r, scale) = f.centering_residual(k);
            worst = worst.max(r / scale.max(f64::MIN_POSITIVE));
        }
    };
    let cfg = FitConfig::new(Estimator::LocalConstantSbf, h).with_norming(norming).with_max_iterations(1);
    let m = build_lc_marginals(dataset, &cfg).unwrap();
    let mut f = lc_backfit(&m, &cfg);
    record(&f);
    for _ in 0..sweeps {
        for k in 0..f.n_dims() {
            lc_backfit_update(&mut f, &m, k);
            record(&f);
        }
    }
    let cfg = FitConfig { estimator: Estimator::LocalLinearSbf, ..cfg };
    let m = build_ll_marginals(dataset, &cfg).unwrap();
    let mut f = ll_backfit(&m, &cfg);
    record(&f);
    for _ in 0..sweeps {
        for k in 0..f.n_dims() {
            ll_backfit_update(&mut f, &m, k);
            record(&f);
        }
    }
    worst
}

/// Dataset on a fine grid, so that trapezoid integrals of the tables are
/// accurate to well below the tolerance of the mass identities.
pub fn fine_instance(seed: u64, n: usize) -> Dataset {
    let coarse = random_instance(seed, n, 2, &[9, 9, 9]);
    let grid = EvaluationGrid::new(vec![
        DimensionGrid::new(0.0, 2.0, 2001).unwrap(),
        DimensionGrid::new(-1.0, 1.0, 2001).unwrap(),
        DimensionGrid::new(-1.0, 1.0, 2001).unwrap(),
    ])
    .unwrap();
    validate_dataset(coarse.into_records(), &grid).unwrap()
}

/// Relative error of the mass identities
/// `∫ Ê_k dx_k = total exposure / n`, `∫ Ô_k dx_k = events / n` and
/// `∫ Ê_{j,k}(x_j, x_k) dx_j = Ê_k(x_k)`.
pub fn marginal_identities(dataset: &Dataset, h: f64) -> f64 {
    let cfg = FitConfig::new(Estimator::LocalConstantSbf, h);
    let m = build_lc_marginals(dataset, &cfg).unwrap();
    let n = dataset.len() as f64;
    let exposure = dataset.total_exposure() / n;
    let events = dataset.total_events() as f64 / n;
    let tw: Vec<Vec<f64>> = m.grid.dims.iter().map(|d| d.trapezoid_weights()).collect();
    let integral = |k: usize, v: &[f64]| -> f64 { tw[k].iter().zip(v).map(|(a, b)| a * b).sum() };
    let mut worst = 0.0f64;
    for k in 0..m.n_dims() {
        worst = worst.max((integral(k, &m.exposure[k]) - exposure).abs() / exposure);
        if events > 0.0 {
            worst = worst.max((integral(k, &m.occurrence[k]) - events).abs() / events);
        }
    }
    let scale = m.exposure.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
    for j in 0..m.n_dims() {
        for k in 0..m.n_dims() {
            if j == k {
                continue;
            }
            for xk in (0..m.grid.dims[k].n_points).step_by(50) {
                let s: f64 = (0..m.grid.dims[j].n_points).map(|xj| tw[j][xj] * m.pairs.value(j, k, xj, xk)).sum();
                worst = worst.max((s - m.exposure[k][xk]).abs() / scale);
            }
        }
    }
    worst
}

/// `(|α* - events/exposure|, |intercept - events/exposure|)` for the tables
/// and for an exposure-normed fit. The first is exactly zero when the closed
/// form holds; the second carries the rounding of the centering shift.
pub fn intercept_closed_form(dataset: &Dataset, h: f64) -> (f64, f64) {
    let cfg = FitConfig::new(Estimator::LocalConstantSbf, h);
    let m = build_lc_marginals(dataset, &cfg).unwrap();
    let f = fit(dataset, &cfg).unwrap();
    let expected = dataset.total_events() as f64 / dataset.total_exposure();
    ((m.alpha_star - expected).abs(), (f.intercept - expected).abs())
}

/// Largest difference between the power-zero local linear tables and the
/// local constant tables.
pub fn ll_reduces_to_lc(dataset: &Dataset, h: f64) -> f64 {
    let cfg = FitConfig::new(Estimator::LocalConstantSbf, h);
    let lc = build_lc_marginals(dataset, &cfg).unwrap();
    let ll = build_ll_marginals(dataset, &cfg).unwrap();
    let mut worst = (lc.alpha_star - ll.lc.alpha_star).abs();
    for k in 0..lc.n_dims() {
        worst = worst.max(sup_diff(&lc.exposure[k], &ll.lc.exposure[k]));
        worst = worst.max(sup_diff(&lc.occurrence[k], &ll.lc.occurrence[k]));
        for j in 0..lc.n_dims() {
            if j == k {
                continue;
            }
            for a in 0..lc.grid.dims[j].n_points {
                for b in 0..lc.grid.dims[k].n_points {
                    worst = worst.max((lc.pairs.value(j, k, a, b) - ll.lc.pairs.value(j, k, a, b)).abs());
                }
            }
        }
    }
    worst
}

/// `|mise - (bias² + variance)|` relative to the MISE, over every component of
/// a small Monte-Carlo study.
pub fn mise_decomposition(seed: u64, n_reps: usize) -> f64 {
    let sc = SimConfig::new(150, 2, 0.3, seed).unwrap();
    let grid = sc.grid(21).unwrap();
    let plans = [
        hazard_sbf::evaluation::mc_fit_config(Estimator::LocalConstantSbf, 0.5),
        hazard_sbf::evaluation::mc_fit_config(Estimator::LocalLinearSbf, 0.5),
    ];
    let reports = mc_study_with(&sc, &plans, n_reps, &grid).unwrap();
    let mut worst = 0.0f64;
    for r in &reports {
        for c in r.per_component.iter().flatten() {
            worst = worst.max((c.mise - (c.bias_sq + c.variance)).abs() / c.mise.max(f64::MIN_POSITIVE));
        }
    }
    worst
}

/// Largest component difference between fits of a dataset and of its
/// records in reversed, rotated order, for all four estimators.
pub fn order_invariance(dataset: &Dataset, h: f64) -> f64 {
    let mut shuffled = dataset.records().to_vec();
    shuffled.reverse();
    let mid = shuffled.len() / 3;
    shuffled.rotate_left(mid);
    let other = validate_dataset(shuffled, dataset.grid()).unwrap();
    Estimator::ALL
        .iter()
        .map(|&e| {
            let cfg = FitConfig::new(e, h).with_tolerance(1e-8);
            components_sup_diff(&fit(dataset, &cfg).unwrap(), &fit(&other, &cfg).unwrap())
        })
        .fold(0.0, f64::max)
}

/// Largest component difference between fits of a dataset and of the same
/// dataset with every record duplicated.
pub fn duplication_invariance(dataset: &Dataset, h: f64) -> f64 {
    let doubled: Vec<_> = dataset.records().iter().flat_map(|r| [r.clone(), r.clone()]).collect();
    let other = validate_dataset(doubled, dataset.grid()).unwrap();
    Estimator::ALL
        .iter()
        .map(|&e| {
            let cfg = FitConfig::new(e, h).with_tolerance(1e-8);
            components_sup_diff(&fit(dataset, &cfg).unwrap(), &fit(&other, &cfg).unwrap())
        })
        .fold(0.0, f64::max)
}

/// True when two simulations with the same seed serialize to the same bytes,
/// also when one of them runs on a multi-threaded pool.
pub fn seed_determinism(seed: u64) -> bool {
    let sc = SimConfig::new(300, 3, 0.5, seed).unwrap();
    let a = format_csv(&simulate_dataset(&sc).unwrap().0);
    let b = format_csv(&simulate_dataset(&sc).unwrap().0);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let c = pool.install(|| format_csv(&simulate_dataset(&sc).unwrap().0));
    let other = format_csv(&simulate_dataset(&sc.with_seed(seed + 1)).unwrap().0);
    a == b && a == c && a != other
}
