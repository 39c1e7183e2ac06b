//! Dense projection of the full-dimensional pilot onto additive surfaces.
//!
//! For small problems the full product-kernel occurrence and exposure
//! arrays fit in memory. Minimizing the exposure-weighted squared distance
//! between the pilot `Ô/Ê` and an additive surface over all grid cells is a
//! linear least-squares problem whose normal equations are solved directly.
//! The backfitting iteration run on the trapezoid marginals of the same
//! arrays must reach the same solution.

use nalgebra::{DMatrix, DVector};

use crate::design::{point_vectors, DimProfile, KernelDesign, SparseVec};
use crate::error::{Error, Result};
use crate::iterate::{Centering, Progress};
use crate::marginals::{pair_index, LcMarginals, PairTables};
use crate::model::{AdditiveFit, Dataset, Estimator, EvaluationGrid, FitConfig, Norming, Path};

/// Largest covariate dimension accepted by [`build_full_pilot`].
pub const MAX_COVARIATES: usize = 3;
/// Largest number of grid cells accepted by [`build_full_pilot`].
pub const MAX_CELLS: usize = 2_000_000;

/// Full-grid occurrence, exposure and pilot hazard arrays, row-major with
/// the last dimension varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct FullGridPilot {
    pub grid: EvaluationGrid,
    pub shape: Vec<usize>,
    pub occurrence: Vec<f64>,
    pub exposure: Vec<f64>,
    pub alpha: Vec<f64>,
    pub total_events: usize,
    pub total_exposure: f64,
}

fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for k in (0..shape.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * shape[k + 1];
    }
    s
}

/// Adds `scale · ⊗_k vecs[k]` into the dense array.
fn add_tensor(scale: f64, vecs: &[&SparseVec], strides: &[usize], base: usize, out: &mut [f64]) {
    let Some((first, rest)) = vecs.split_first() else {
        out[base] += scale;
        return;
    };
    for (i, &v) in first.vals.iter().enumerate() {
        if v != 0.0 {
            add_tensor(scale * v, rest, &strides[1..], base + (first.start + i) * strides[0], out);
        }
    }
}

/// Cell index → multi-index.
fn unravel(mut idx: usize, shape: &[usize], out: &mut [usize]) {
    for k in (0..shape.len()).rev() {
        out[k] = idx % shape[k];
        idx /= shape[k];
    }
}

/// Product-kernel occurrence and exposure on the full grid.
pub fn build_full_pilot(dataset: &Dataset, config: &FitConfig) -> Result<FullGridPilot> {
    let grid = dataset.grid();
    if grid.covariate_dim() > MAX_COVARIATES {
        return Err(Error::BudgetExceeded(format!(
            "{} covariates, at most {MAX_COVARIATES} supported",
            grid.covariate_dim()
        )));
    }
    let shape: Vec<usize> = grid.dims.iter().map(|d| d.n_points).collect();
    let cells = shape.iter().try_fold(1usize, |acc, &g| acc.checked_mul(g)).unwrap_or(usize::MAX);
    if cells > MAX_CELLS {
        return Err(Error::BudgetExceeded(format!("{cells} grid cells, at most {MAX_CELLS} supported")));
    }
    let design = KernelDesign::build(dataset, config, 1)?;
    let st = strides(&shape);
    let mut occurrence = vec![0.0; cells];
    let mut exposure = vec![0.0; cells];
    for subj in &design.subjects {
        if let Some(occ) = &subj.occurrence {
            let vecs: Vec<&SparseVec> = occ.iter().map(|v| &v[0]).collect();
            add_tensor(1.0, &vecs, &st, 0, &mut occurrence);
        }
        match &subj.quadrature {
            None => {
                let vecs: Vec<&SparseVec> = subj
                    .dims
                    .iter()
                    .map(|d| match d {
                        DimProfile::Fixed { point } => &point[0],
                        DimProfile::Shift { exposure } => &exposure[0],
                    })
                    .collect();
                // exactly one moving coordinate carries the time integral
                add_tensor(1.0, &vecs, &st, 0, &mut exposure);
            }
            Some(quad) => {
                for &(s, w) in quad {
                    let owned: Vec<Option<SparseVec>> = subj
                        .paths
                        .iter()
                        .enumerate()
                        .map(|(k, p)| match *p {
                            Path::Shift(a) => point_vectors(&grid.dims[k], &design.kernels[k], a + s, 1).pop(),
                            Path::Fixed(_) => None,
                        })
                        .collect();
                    let vecs: Vec<&SparseVec> = subj
                        .dims
                        .iter()
                        .zip(&owned)
                        .map(|(d, o)| match (d, o) {
                            (_, Some(v)) => v,
                            (DimProfile::Fixed { point }, None) => &point[0],
                            (DimProfile::Shift { .. }, None) => unreachable!(),
                        })
                        .collect();
                    add_tensor(w, &vecs, &st, 0, &mut exposure);
                }
            }
        }
    }
    let inv_n = 1.0 / design.n_subjects() as f64;
    occurrence.iter_mut().for_each(|v| *v *= inv_n);
    exposure.iter_mut().for_each(|v| *v *= inv_n);
    Ok(FullGridPilot::from_arrays(
        grid.clone(),
        occurrence,
        exposure,
        design.total_events,
        design.total_exposure,
    ))
}

impl FullGridPilot {
    /// Pilot from explicit arrays; `alpha = O/E` with the exposure floor.
    pub fn from_arrays(grid: EvaluationGrid, occurrence: Vec<f64>, exposure: Vec<f64>, total_events: usize, total_exposure: f64) -> Self {
        let shape: Vec<usize> = grid.dims.iter().map(|d| d.n_points).collect();
        assert_eq!(occurrence.len(), shape.iter().product::<usize>());
        assert_eq!(exposure.len(), occurrence.len());
        let max = exposure.iter().cloned().fold(0.0, f64::max);
        let floor = crate::marginals::EXPOSURE_FLOOR * max;
        let alpha = occurrence
            .iter()
            .zip(&exposure)
            .map(|(&o, &e)| if e > floor { o / e } else { 0.0 })
            .collect();
        FullGridPilot {
            grid,
            shape,
            occurrence,
            exposure,
            alpha,
            total_events,
            total_exposure,
        }
    }

    /// Pilot whose hazard is `alpha` under exposure `exposure`.
    pub fn from_surface(grid: EvaluationGrid, alpha: &[f64], exposure: Vec<f64>) -> Self {
        let occurrence = alpha.iter().zip(&exposure).map(|(a, e)| a * e).collect();
        FullGridPilot::from_arrays(grid, occurrence, exposure, 0, 1.0)
    }

    pub fn n_cells(&self) -> usize {
        self.exposure.len()
    }

    fn cell_weights(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        let tw: Vec<Vec<f64>> = self.grid.dims.iter().map(|d| d.trapezoid_weights()).collect();
        let mut idx = vec![0; self.shape.len()];
        let w = (0..self.n_cells())
            .map(|c| {
                unravel(c, &self.shape, &mut idx);
                idx.iter().enumerate().map(|(k, &i)| tw[k][i]).product()
            })
            .collect();
        (tw, w)
    }

    /// Trapezoid marginals of the full arrays, in the layout used by the
    /// backfitting solver.
    pub fn marginals(&self) -> LcMarginals {
        let n_dims = self.shape.len();
        let (tw, w) = self.cell_weights();
        let mut occurrence: Vec<Vec<f64>> = self.shape.iter().map(|&g| vec![0.0; g]).collect();
        let mut exposure = occurrence.clone();
        let mut pair_acc: Vec<Vec<f64>> = Vec::new();
        for a in 0..n_dims {
            for b in a + 1..n_dims {
                pair_acc.push(vec![0.0; self.shape[a] * self.shape[b]]);
            }
        }
        let mut idx = vec![0; n_dims];
        for c in 0..self.n_cells() {
            unravel(c, &self.shape, &mut idx);
            let (o, e) = (w[c] * self.occurrence[c], w[c] * self.exposure[c]);
            for k in 0..n_dims {
                let t = tw[k][idx[k]];
                occurrence[k][idx[k]] += o / t;
                exposure[k][idx[k]] += e / t;
            }
            let mut p = 0;
            for a in 0..n_dims {
                for b in a + 1..n_dims {
                    pair_acc[p][idx[a] * self.shape[b] + idx[b]] += e / (tw[a][idx[a]] * tw[b][idx[b]]);
                    p += 1;
                }
            }
        }
        let shape = &self.shape;
        let pairs = PairTables::from_fn(shape, |a, b, i, j| pair_acc[pair_index(n_dims, a, b)][i * shape[b] + j]);
        let total_o: f64 = w.iter().zip(&self.occurrence).map(|(a, b)| a * b).sum();
        let total_e: f64 = w.iter().zip(&self.exposure).map(|(a, b)| a * b).sum();
        LcMarginals {
            grid: self.grid.clone(),
            n: 1,
            occurrence,
            exposure,
            pairs,
            alpha_star: if total_e > 0.0 { total_o / total_e } else { 0.0 },
            total_events: self.total_events,
            total_exposure: self.total_exposure,
        }
    }
}

/// Minimizes `Σ_cells W Ê (α̂ - α* - Σ_k α_k(x_k))²` subject to the centering
/// constraints of `norming`, by solving the bordered normal equations.
pub fn oracle_solve(pilot: &FullGridPilot, norming: Norming) -> Result<AdditiveFit> {
    let n_dims = pilot.shape.len();
    let offsets: Vec<usize> = pilot
        .shape
        .iter()
        .scan(1usize, |acc, &g| {
            let o = *acc;
            *acc += g;
            Some(o)
        })
        .collect();
    let n_vars = 1 + pilot.shape.iter().sum::<usize>();
    let size = n_vars + n_dims;
    let (tw, w) = pilot.cell_weights();
    let mut h = DMatrix::<f64>::zeros(size, size);
    let mut rhs = DVector::<f64>::zeros(size);
    let mut idx = vec![0; n_dims];
    let mut vars = vec![0; n_dims + 1];
    for c in 0..pilot.n_cells() {
        let we = w[c] * pilot.exposure[c];
        if we == 0.0 {
            continue;
        }
        unravel(c, &pilot.shape, &mut idx);
        vars[0] = 0;
        for k in 0..n_dims {
            vars[k + 1] = offsets[k] + idx[k];
        }
        let target = we * pilot.alpha[c];
        for &a in &vars {
            rhs[a] += target;
            for &b in &vars {
                h[(a, b)] += we;
            }
        }
    }
    let max_diag = (0..n_vars).map(|i| h[(i, i)]).fold(0.0, f64::max);
    for k in 0..n_dims {
        for x in 0..pilot.shape[k] {
            let v = offsets[k] + x;
            if !(h[(v, v)] > 1e-14 * max_diag) {
                return Err(Error::SingularSystem { dim: k, node: x });
            }
        }
    }
    // centering rows: Σ_x tw_k(x) w_k(x) α_k(x) = 0
    let mut weights = Vec::with_capacity(n_dims);
    for k in 0..n_dims {
        let wk: Vec<f64> = (0..pilot.shape[k])
            .map(|x| match norming {
                Norming::ExposureWeighted => h[(offsets[k] + x, offsets[k] + x)] / tw[k][x],
                Norming::Uniform => 1.0,
            })
            .collect();
        let row = n_vars + k;
        for x in 0..pilot.shape[k] {
            let c = tw[k][x] * wk[x];
            h[(row, offsets[k] + x)] = c;
            h[(offsets[k] + x, row)] = c;
        }
        weights.push(wk);
    }
    let exposure_marg: Vec<Vec<f64>> = (0..n_dims)
        .map(|k| (0..pilot.shape[k]).map(|x| h[(offsets[k] + x, offsets[k] + x)] / tw[k][x]).collect())
        .collect();
    let sol = h.lu().solve(&rhs).ok_or(Error::SingularSystem { dim: 0, node: 0 })?;
    let components: Vec<Vec<f64>> = (0..n_dims)
        .map(|k| (0..pilot.shape[k]).map(|x| sol[offsets[k] + x]).collect())
        .collect();
    let centering = Centering {
        tw,
        w: weights,
        exposure: exposure_marg,
        unsupported: pilot.shape.iter().map(|&g| vec![false; g]).collect(),
    };
    let intercept = sol[0];
    let mut fit = crate::iterate::assemble_fit(
        Estimator::LocalConstantSbf,
        norming,
        &pilot.grid,
        Vec::new(),
        intercept,
        components,
        None,
        centering,
        Progress {
            iterations: 0,
            converged: true,
            diverged: false,
            criterion: 0.0,
        },
    );
    fit.intercept = intercept;
    Ok(fit)
}
