//! Classical backfitting baselines.
//!
//! Only the component being updated is smoothed. Every other component is
//! evaluated at the subjects' own covariate paths by linear interpolation of
//! its node values, instead of being integrated against a pair table.

use crate::design::{point_vectors, KernelDesign};
use crate::error::Result;
use crate::iterate::{assemble_fit, Centering, DIVERGENCE_THRESHOLD};
use crate::local_constant::sweep_until_converged;
use crate::marginals::{one_dim_tables, unsupported_mask};
use crate::model::{AdditiveFit, Dataset, DimensionGrid, Estimator, FitConfig, Path};

/// `∫_lo^{x_g} f` at every node for the piecewise-linear interpolant of `values`.
fn cumulative(dim: &DimensionGrid, values: &[f64]) -> Vec<f64> {
    let step = dim.step();
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in values.windows(2) {
        acc += 0.5 * step * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

/// `∫_lo^x f` for the interpolant, `x` clamped to the grid.
fn antiderivative(dim: &DimensionGrid, values: &[f64], cum: &[f64], x: f64) -> f64 {
    let (i, frac) = dim.locate(x);
    let step = dim.step();
    let t = frac * step;
    let slope = (values[i + 1] - values[i]) / step;
    cum[i] + values[i] * t + 0.5 * slope * t * t
}

/// Pointwise smoother state: component values at each subject's constant
/// covariates, kept in step with the Gauss–Seidel sweep.
struct PointCache {
    values: Vec<Vec<f64>>,
    fixed_sum: Vec<f64>,
}

impl PointCache {
    fn new(design: &KernelDesign, components: &[Vec<f64>]) -> Self {
        let mut values = Vec::with_capacity(design.subjects.len());
        let mut fixed_sum = Vec::with_capacity(design.subjects.len());
        for subj in &design.subjects {
            let row: Vec<f64> = subj
                .paths
                .iter()
                .enumerate()
                .map(|(k, p)| match *p {
                    Path::Fixed(z) => design.grid.dims[k].interpolate(&components[k], z),
                    Path::Shift(_) => 0.0,
                })
                .collect();
            fixed_sum.push(row.iter().sum());
            values.push(row);
        }
        PointCache { values, fixed_sum }
    }

    fn refresh(&mut self, design: &KernelDesign, k: usize, curve: &[f64]) {
        for (i, subj) in design.subjects.iter().enumerate() {
            if let Path::Fixed(z) = subj.paths[k] {
                let v = design.grid.dims[k].interpolate(curve, z);
                self.fixed_sum[i] += v - self.values[i][k];
                self.values[i][k] = v;
            }
        }
    }
}

/// `n⁻¹ Σ_i ∫ ((x - X_ik)/h)^p k_h(x, X_ik(s)) Σ_{j≠k} α_j(X_ij(s)) ds` for
/// `p < powers`.
fn pointwise_cross(design: &KernelDesign, components: &[Vec<f64>], cache: &PointCache, k: usize, powers: usize) -> Vec<Vec<f64>> {
    let dim_k = &design.grid.dims[k];
    let mut out = vec![vec![0.0; dim_k.n_points]; powers];
    let n_dims = design.n_dims();
    let cums: Vec<Option<Vec<f64>>> = (0..n_dims)
        .map(|j| {
            let moving = design.subjects.iter().any(|s| matches!(s.paths[j], Path::Shift(_)));
            (j != k && moving).then(|| cumulative(&design.grid.dims[j], &components[j]))
        })
        .collect();
    for (i, subj) in design.subjects.iter().enumerate() {
        let own = match subj.paths[k] {
            Path::Fixed(_) => cache.values[i][k],
            Path::Shift(_) => 0.0,
        };
        let fixed = cache.fixed_sum[i] - own;
        for (p, o) in out.iter_mut().enumerate() {
            subj.add_exposure(k, p, fixed, o);
        }
        let moving: Vec<(usize, f64)> = subj
            .paths
            .iter()
            .enumerate()
            .filter_map(|(j, p)| match *p {
                Path::Shift(a) if j != k => Some((j, a)),
                _ => None,
            })
            .collect();
        if moving.is_empty() {
            continue;
        }
        let (entry, exit) = match subj.paths[0] {
            Path::Shift(_) => time_window(subj),
            Path::Fixed(_) => unreachable!("time always moves"),
        };
        match subj.paths[k] {
            Path::Fixed(_) => {
                let mut integral = 0.0;
                for &(j, a) in &moving {
                    let dim = &design.grid.dims[j];
                    let cum = cums[j].as_ref().expect("moving dimension has a cumulative integral");
                    integral += antiderivative(dim, &components[j], cum, a + exit)
                        - antiderivative(dim, &components[j], cum, a + entry);
                }
                if let crate::design::DimProfile::Fixed { point } = &subj.dims[k] {
                    for (p, o) in out.iter_mut().enumerate() {
                        point[p].add_scaled_to(integral, o);
                    }
                }
            }
            Path::Shift(ak) => {
                let quad = subj.quadrature.as_ref().expect("two moving coordinates carry a quadrature");
                for &(s, w) in quad {
                    let v: f64 = moving
                        .iter()
                        .map(|&(j, a)| design.grid.dims[j].interpolate(&components[j], a + s))
                        .sum();
                    if v == 0.0 {
                        continue;
                    }
                    let pv = point_vectors(dim_k, &design.kernels[k], ak + s, powers);
                    for (p, o) in out.iter_mut().enumerate() {
                        pv[p].add_scaled_to(w * v, o);
                    }
                }
            }
        }
    }
    let inv_n = 1.0 / design.n_subjects() as f64;
    for o in &mut out {
        o.iter_mut().for_each(|v| *v *= inv_n);
    }
    out
}

fn time_window(subj: &crate::design::SubjectProfile) -> (f64, f64) {
    (subj.entry, subj.entry + subj.length)
}

/// Classical local constant backfitting.
pub fn classic_lc_fit(dataset: &Dataset, config: &FitConfig) -> Result<AdditiveFit> {
    let design = KernelDesign::build(dataset, config, 1)?;
    let occurrence = one_dim_tables(&design, 0, Some(0));
    let exposure = one_dim_tables(&design, 0, None);
    let alpha_star = design.total_events as f64 / design.total_exposure;
    let grid = &design.grid;
    let unsupported: Vec<Vec<bool>> = exposure.iter().map(|e| unsupported_mask(e)).collect();
    let centering = Centering::new(grid, &exposure, unsupported, config.norming);
    let mut components: Vec<Vec<f64>> = (0..grid.n_dims())
        .map(|k| {
            let mut c: Vec<f64> = occurrence[k]
                .iter()
                .zip(&exposure[k])
                .zip(&centering.unsupported[k])
                .map(|((o, e), &u)| if u { 0.0 } else { o / e })
                .collect();
            centering.center(k, &mut c);
            c
        })
        .collect();
    let mut cache = PointCache::new(&design, &components);
    let progress = sweep_until_converged(&mut components, config, &centering, Some(DIVERGENCE_THRESHOLD), |comps, k| {
        let cross = pointwise_cross(&design, comps, &cache, k, 1);
        let mut c: Vec<f64> = (0..exposure[k].len())
            .map(|x| {
                if centering.unsupported[k][x] {
                    0.0
                } else {
                    (occurrence[k][x] - cross[0][x]) / exposure[k][x]
                }
            })
            .collect();
        centering.center(k, &mut c);
        cache.refresh(&design, k, &c);
        c
    });
    Ok(assemble_fit(
        Estimator::LocalConstantClassicBf,
        config.norming,
        grid,
        config.bandwidths(grid.n_dims()),
        alpha_star,
        components,
        None,
        centering,
        progress,
    ))
}

/// Classical local linear backfitting.
pub fn classic_ll_fit(dataset: &Dataset, config: &FitConfig) -> Result<AdditiveFit> {
    let design = KernelDesign::build(dataset, config, 3)?;
    let u0 = one_dim_tables(&design, 0, Some(0));
    let u1 = one_dim_tables(&design, 0, Some(1));
    let v00 = one_dim_tables(&design, 0, None);
    let v10 = one_dim_tables(&design, 1, None);
    let v11 = one_dim_tables(&design, 2, None);
    let alpha_star = design.total_events as f64 / design.total_exposure;
    let grid = &design.grid;
    let unsupported: Vec<Vec<bool>> = v00.iter().map(|e| unsupported_mask(e)).collect();
    let slope_unsupported: Vec<Vec<bool>> = v11.iter().map(|e| unsupported_mask(e)).collect();
    let centering = Centering::new(grid, &v00, unsupported, config.norming);
    let mut values: Vec<Vec<f64>> = v00.iter().map(|e| vec![0.0; e.len()]).collect();
    let mut slopes = values.clone();
    let mut cache = PointCache::new(&design, &values);
    let progress = sweep_until_converged(&mut values, config, &centering, Some(DIVERGENCE_THRESHOLD), |vals, j| {
        let cross = pointwise_cross(&design, vals, &cache, j, 2);
        let g = v00[j].len();
        let raw: Vec<f64> = (0..g)
            .map(|x| {
                if centering.unsupported[j][x] {
                    0.0
                } else {
                    (u0[j][x] - slopes[j][x] * v10[j][x] - alpha_star * v00[j][x] - cross[0][x]) / v00[j][x]
                }
            })
            .collect();
        slopes[j] = (0..g)
            .map(|x| {
                if centering.unsupported[j][x] || slope_unsupported[j][x] {
                    0.0
                } else {
                    (u1[j][x] - (raw[x] + alpha_star) * v10[j][x] - cross[1][x]) / v11[j][x]
                }
            })
            .collect();
        let mut c = raw;
        centering.center(j, &mut c);
        cache.refresh(&design, j, &c);
        c
    });
    Ok(assemble_fit(
        Estimator::LocalLinearClassicBf,
        config.norming,
        grid,
        config.bandwidths(grid.n_dims()),
        alpha_star,
        values,
        Some(slopes),
        centering,
        progress,
    ))
}
