//! Local constant smooth backfitting.

use crate::error::Result;
use crate::iterate::{assemble_fit, criterion, Centering, Progress};
use crate::marginals::{build_lc_marginals, lc_pilot, LcMarginals};
use crate::model::{AdditiveFit, Dataset, Estimator, FitConfig};

/// Uncentered update `m̄_k = α̂_k - Σ_{j≠k} ∫ α_j Ê_{k,j} / Ê_k` using the
/// current contents of `components` for every `j ≠ k`.
pub(crate) fn lc_raw_update(components: &[Vec<f64>], m: &LcMarginals, k: usize, centering: &Centering) -> Vec<f64> {
    let g = m.exposure[k].len();
    let mut cross = vec![0.0; g];
    let mut weighted = Vec::new();
    for (j, alpha_j) in components.iter().enumerate() {
        if j == k {
            continue;
        }
        weighted.clear();
        weighted.extend(alpha_j.iter().zip(&centering.tw[j]).map(|(a, t)| a * t));
        m.pairs.view(k, j).apply_add(&weighted, &mut cross);
    }
    (0..g)
        .map(|x| {
            if centering.unsupported[k][x] {
                0.0
            } else {
                (m.occurrence[k][x] - cross[x]) / m.exposure[k][x]
            }
        })
        .collect()
}

/// One Gauss–Seidel update of component `k` of `fit`, in place.
///
/// Returns the uncentered curve `m̄_k`; `fit.components[k]` receives its
/// centered version.
pub fn lc_backfit_update(fit: &mut AdditiveFit, marginals: &LcMarginals, k: usize) -> Vec<f64> {
    let centering = centering_of(fit, marginals);
    let raw = lc_raw_update(&fit.components, marginals, k, &centering);
    let mut centered = raw.clone();
    centering.center(k, &mut centered);
    fit.components[k] = centered;
    raw
}

pub(crate) fn centering_of(fit: &AdditiveFit, marginals: &LcMarginals) -> Centering {
    Centering {
        tw: fit.grid.dims.iter().map(|d| d.trapezoid_weights()).collect(),
        w: fit.weights.clone(),
        exposure: marginals.exposure.clone(),
        unsupported: fit.unsupported.clone(),
    }
}

/// Local constant smooth backfitting on prebuilt tables.
pub fn lc_backfit(marginals: &LcMarginals, config: &FitConfig) -> AdditiveFit {
    lc_backfit_from(marginals, config, None)
}

/// Same as [`lc_backfit`], starting from `start` instead of the centered pilot.
pub fn lc_backfit_from(marginals: &LcMarginals, config: &FitConfig, start: Option<Vec<Vec<f64>>>) -> AdditiveFit {
    let grid = &marginals.grid;
    let centering = Centering::new(grid, &marginals.exposure, marginals.unsupported(), config.norming);
    let mut components = start.unwrap_or_else(|| lc_pilot(marginals).alpha);
    for (k, c) in components.iter_mut().enumerate() {
        centering.center(k, c);
    }
    let progress = sweep_until_converged(&mut components, config, &centering, None, |comps, k| {
        let mut c = lc_raw_update(comps, marginals, k, &centering);
        centering.center(k, &mut c);
        c
    });
    assemble_fit(
        Estimator::LocalConstantSbf,
        config.norming,
        grid,
        config.bandwidths(grid.n_dims()),
        marginals.alpha_star,
        components,
        None,
        centering,
        progress,
    )
}

/// Gauss–Seidel sweeps `k = 0..d` of `update` until the relative change
/// criterion drops below the tolerance or the iteration budget runs out.
/// A non-finite criterion, or a change numerator above
/// `divergence_threshold`, stops the loop and marks the fit divergent.
pub(crate) fn sweep_until_converged(
    components: &mut [Vec<f64>],
    config: &FitConfig,
    centering: &Centering,
    divergence_threshold: Option<f64>,
    mut update: impl FnMut(&[Vec<f64>], usize) -> Vec<f64>,
) -> Progress {
    let mut progress = Progress {
        iterations: 0,
        converged: false,
        diverged: false,
        criterion: f64::INFINITY,
    };
    for _ in 0..config.max_iterations {
        let (mut num, mut den) = (0.0, 0.0);
        for k in 0..components.len() {
            let new = update(components, k);
            let (a, b) = centering.change(k, &components[k], &new);
            num += a;
            den += b;
            components[k] = new;
        }
        progress.iterations += 1;
        progress.criterion = criterion(num, den, config.tol_offset);
        let blown_up = divergence_threshold.is_some_and(|t| num > t);
        if !progress.criterion.is_finite() || blown_up {
            progress.diverged = true;
            break;
        }
        if progress.criterion < config.tolerance {
            progress.converged = true;
            break;
        }
    }
    progress
}

/// Local constant smooth backfitting fit of `dataset`.
pub fn lc_fit(dataset: &Dataset, config: &FitConfig) -> Result<AdditiveFit> {
    let marginals = build_lc_marginals(dataset, config)?;
    Ok(lc_backfit(&marginals, config))
}

/// Weighted mean used for centering; exposed for tests of the norming rule.
pub fn weighted_mean(values: &[f64], weights: &[f64], trapezoid: &[f64]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for ((v, w), t) in values.iter().zip(weights).zip(trapezoid) {
        num += v * w * t;
        den += w * t;
    }
    num / den
}
