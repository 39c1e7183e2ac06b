//! Local linear smooth backfitting with value and slope curves.
//!
//! Slopes are coefficients of `(x - X)/h`, so a slope curve divided by the
//! bandwidth is the derivative per unit of `x`.

use crate::error::Result;
use crate::iterate::{assemble_fit, Centering};
use crate::local_constant::{centering_of, sweep_until_converged};
use crate::marginals::{build_ll_marginals, unsupported_mask, LlMarginals};
use crate::model::{AdditiveFit, Dataset, Estimator, FitConfig};

/// `Σ_{l≠j} ∫ (α_l V^{l,j}_{·,p} + α^l V^{l,j}_{l,p}) dx_l` at every node of
/// dimension `j`, where `p` is the moment power on `x_j`.
fn cross_term(values: &[Vec<f64>], slopes: &[Vec<f64>], m: &LlMarginals, j: usize, p: usize, tw: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; m.lc.exposure[j].len()];
    let mut weighted = Vec::new();
    for l in 0..values.len() {
        if l == j {
            continue;
        }
        weighted.clear();
        weighted.extend(values[l].iter().zip(&tw[l]).map(|(a, t)| a * t));
        m.pair_view(j, p, l, 0).apply_add(&weighted, &mut out);
        weighted.clear();
        weighted.extend(slopes[l].iter().zip(&tw[l]).map(|(a, t)| a * t));
        m.pair_view(j, p, l, 1).apply_add(&weighted, &mut out);
    }
    out
}

/// Uncentered value update followed by the slope update, both for
/// dimension `j`. The slope update uses the fresh uncentered values.
pub(crate) fn ll_raw_update(
    values: &[Vec<f64>],
    slopes: &[Vec<f64>],
    m: &LlMarginals,
    j: usize,
    centering: &Centering,
    slope_unsupported: &[bool],
) -> (Vec<f64>, Vec<f64>) {
    let a_star = m.lc.alpha_star;
    let (v00, v10, v11) = (&m.lc.exposure[j], &m.v_j0[j], &m.v_jj[j]);
    let (u0, u1) = (&m.lc.occurrence[j], &m.u_j[j]);
    let cross0 = cross_term(values, slopes, m, j, 0, &centering.tw);
    let g = v00.len();
    let raw: Vec<f64> = (0..g)
        .map(|x| {
            if centering.unsupported[j][x] {
                0.0
            } else {
                (u0[x] - slopes[j][x] * v10[x] - a_star * v00[x] - cross0[x]) / v00[x]
            }
        })
        .collect();
    let cross1 = cross_term(values, slopes, m, j, 1, &centering.tw);
    let slope: Vec<f64> = (0..g)
        .map(|x| {
            if centering.unsupported[j][x] || slope_unsupported[x] {
                0.0
            } else {
                (u1[x] - (raw[x] + a_star) * v10[x] - cross1[x]) / v11[x]
            }
        })
        .collect();
    (raw, slope)
}

/// One update of `(α_j, α^j)` in `fit`, in place. Returns the uncentered
/// value curve.
pub fn ll_backfit_update(fit: &mut AdditiveFit, marginals: &LlMarginals, j: usize) -> Vec<f64> {
    let centering = centering_of(fit, &marginals.lc);
    let slopes = fit.derivatives.get_or_insert_with(|| fit.components.iter().map(|c| vec![0.0; c.len()]).collect());
    let slope_unsupported = unsupported_mask(&marginals.v_jj[j]);
    let (raw, slope) = ll_raw_update(&fit.components, slopes, marginals, j, &centering, &slope_unsupported);
    slopes[j] = slope;
    let mut centered = raw.clone();
    centering.center(j, &mut centered);
    fit.components[j] = centered;
    raw
}

/// Local linear smooth backfitting on prebuilt tables, started at zero.
pub fn ll_backfit(marginals: &LlMarginals, config: &FitConfig) -> AdditiveFit {
    let lc = &marginals.lc;
    let grid = &lc.grid;
    let centering = Centering::new(grid, &lc.exposure, lc.unsupported(), config.norming);
    let slope_unsupported: Vec<Vec<bool>> = marginals.v_jj.iter().map(|v| unsupported_mask(v)).collect();
    let mut values: Vec<Vec<f64>> = lc.exposure.iter().map(|e| vec![0.0; e.len()]).collect();
    let mut slopes = values.clone();
    let progress = sweep_until_converged(&mut values, config, &centering, None, |vals, j| {
        let (mut raw, slope) = ll_raw_update(vals, &slopes, marginals, j, &centering, &slope_unsupported[j]);
        slopes[j] = slope;
        centering.center(j, &mut raw);
        raw
    });
    assemble_fit(
        Estimator::LocalLinearSbf,
        config.norming,
        grid,
        config.bandwidths(grid.n_dims()),
        lc.alpha_star,
        values,
        Some(slopes),
        centering,
        progress,
    )
}

/// Local linear smooth backfitting fit of `dataset`.
pub fn ll_fit(dataset: &Dataset, config: &FitConfig) -> Result<AdditiveFit> {
    let marginals = build_ll_marginals(dataset, config)?;
    Ok(ll_backfit(&marginals, config))
}

/// Residuals of the two first-order conditions at every grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrderResiduals {
    /// Per-dimension level `a_j` identified by the centering constraint.
    pub levels: Vec<f64>,
    /// Relative residual of the value condition per node (NaN when unsupported).
    pub value: Vec<Vec<f64>>,
    /// Relative residual of the slope condition per node (NaN when unsupported).
    pub slope: Vec<Vec<f64>>,
}

impl FirstOrderResiduals {
    /// Largest relative residual over supported nodes.
    pub fn max_relative(&self) -> f64 {
        self.value
            .iter()
            .chain(&self.slope)
            .flatten()
            .filter(|v| !v.is_nan())
            .fold(0.0, |a, &b| a.max(b))
    }
}

/// Plugs the value and slope curves of `fit` into the local linear
/// first-order conditions.
///
/// The intercept of each condition is the level `a_j` that makes the
/// centered curve satisfy the value condition in the weighted mean; the
/// residuals measure what is left node by node, relative to the size of the
/// largest term.
pub fn ll_first_order_residuals(fit: &AdditiveFit, m: &LlMarginals) -> FirstOrderResiduals {
    let n_dims = fit.n_dims();
    let zeros: Vec<Vec<f64>> = fit.components.iter().map(|c| vec![0.0; c.len()]).collect();
    let slopes = fit.derivatives.as_ref().unwrap_or(&zeros);
    let tw: Vec<Vec<f64>> = fit.grid.dims.iter().map(|d| d.trapezoid_weights()).collect();
    let unsupported = m.lc.unsupported();
    let mut levels = Vec::with_capacity(n_dims);
    let mut value_res = Vec::with_capacity(n_dims);
    let mut slope_res = Vec::with_capacity(n_dims);
    for j in 0..n_dims {
        let (v00, v10, v11) = (&m.lc.exposure[j], &m.v_j0[j], &m.v_jj[j]);
        let (u0, u1) = (&m.lc.occurrence[j], &m.u_j[j]);
        let cross0 = cross_term(&fit.components, slopes, m, j, 0, &tw);
        let cross1 = cross_term(&fit.components, slopes, m, j, 1, &tw);
        let (alpha, slope) = (&fit.components[j], &slopes[j]);
        let (mut num, mut den) = (0.0, 0.0);
        for x in 0..alpha.len() {
            if unsupported[j][x] {
                continue;
            }
            num += tw[j][x] * (u0[x] - slope[x] * v10[x] - cross0[x] - alpha[x] * v00[x]);
            den += tw[j][x] * v00[x];
        }
        let a = num / den;
        let slope_unsupported = unsupported_mask(v11);
        let mut rv = vec![f64::NAN; alpha.len()];
        let mut rs = vec![f64::NAN; alpha.len()];
        for x in 0..alpha.len() {
            if unsupported[j][x] {
                continue;
            }
            let level = alpha[x] + a;
            let terms0 = [level * v00[x], slope[x] * v10[x], -u0[x], cross0[x]];
            rv[x] = relative(&terms0);
            if !slope_unsupported[x] {
                let terms1 = [level * v10[x], slope[x] * v11[x], -u1[x], cross1[x]];
                rs[x] = relative(&terms1);
            }
        }
        levels.push(a);
        value_res.push(rv);
        slope_res.push(rs);
    }
    FirstOrderResiduals {
        levels,
        value: value_res,
        slope: slope_res,
    }
}

fn relative(terms: &[f64]) -> f64 {
    let sum: f64 = terms.iter().sum();
    let scale = terms.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    if scale == 0.0 {
        0.0
    } else {
        sum.abs() / scale
    }
}
