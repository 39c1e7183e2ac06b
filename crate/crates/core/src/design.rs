//! Per-subject kernel profiles on the evaluation grid.
//!
//! Every table built in [`crate::marginals`] and every pointwise smoother in
//! [`crate::classic`] is a sum over subjects of products of one-dimensional
//! kernel vectors. A [`KernelDesign`] computes those vectors once.

use rayon::prelude::*;

use crate::error::Result;
use crate::kernel::BoundaryKernel;
use crate::model::{Dataset, EvaluationGrid, FitConfig, Path, SurvivalRecord};
use crate::quadrature::GaussLegendre;

/// Node values `vals[i]` at grid indices `start + i`.
#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct SparseVec {
    pub start: usize,
    pub vals: Vec<f64>,
}

impl SparseVec {
    pub fn end(&self) -> usize {
        self.start + self.vals.len()
    }

    pub fn add_scaled_to(&self, scale: f64, out: &mut [f64]) {
        for (o, v) in out[self.start..self.end()].iter_mut().zip(&self.vals) {
            *o += scale * v;
        }
    }
}

/// Kernel vectors of one subject in one dimension.
#[derive(Debug, Clone)]
pub(crate) enum DimProfile {
    /// Constant covariate: `((x - z)/h)^p k_h(x, z)` for each power `p`.
    /// Exposure moments are these times the at-risk length.
    Fixed { point: Vec<SparseVec> },
    /// Moving coordinate: `∫ ((x - X(s))/h)^p k_h(x, X(s)) ds` over the at-risk interval.
    Shift { exposure: Vec<SparseVec> },
}

#[derive(Debug, Clone)]
pub(crate) struct SubjectProfile {
    pub entry: f64,
    pub length: f64,
    pub paths: Vec<Path>,
    pub dims: Vec<DimProfile>,
    /// `((x - X(exit))/h)^p k_h(x, X(exit))` for `p = 0, 1`, event records only.
    pub occurrence: Option<Vec<Vec<SparseVec>>>,
    /// Quadrature in `s` over the at-risk interval, present when two or more
    /// coordinates move with time.
    pub quadrature: Option<Vec<(f64, f64)>>,
}

impl SubjectProfile {
    /// Exposure moment vector `p` of dimension `k`, scaled and added to `out`.
    pub fn add_exposure(&self, k: usize, p: usize, scale: f64, out: &mut [f64]) {
        match &self.dims[k] {
            DimProfile::Fixed { point } => point[p].add_scaled_to(scale * self.length, out),
            DimProfile::Shift { exposure } => exposure[p].add_scaled_to(scale, out),
        }
    }
}

/// Kernel profiles for every subject of a dataset.
#[derive(Debug, Clone)]
pub struct KernelDesign {
    pub(crate) grid: EvaluationGrid,
    pub(crate) kernels: Vec<BoundaryKernel>,
    pub(crate) subjects: Vec<SubjectProfile>,
    pub(crate) powers: usize,
    pub(crate) total_events: usize,
    pub(crate) total_exposure: f64,
}

impl KernelDesign {
    /// Profiles with exposure powers `0..powers` (1 for local constant, 3 for
    /// local linear).
    pub fn build(dataset: &Dataset, config: &FitConfig, powers: usize) -> Result<Self> {
        let grid = dataset.grid().clone();
        config.validate(&grid)?;
        let kernels: Vec<BoundaryKernel> = grid
            .dims
            .iter()
            .enumerate()
            .map(|(k, dim)| BoundaryKernel::new(config.kernel, config.bandwidth_for(k), dim.lo, dim.hi, config.quadrature_order))
            .collect();
        let rule = GaussLegendre::new(config.quadrature_order);
        let subjects: Vec<SubjectProfile> = dataset
            .records()
            .par_iter()
            .map(|rec| subject_profile(rec, &grid, &kernels, &rule, powers))
            .collect();
        Ok(KernelDesign {
            grid,
            kernels,
            subjects,
            powers,
            total_events: dataset.total_events(),
            total_exposure: dataset.total_exposure(),
        })
    }

    pub fn n_subjects(&self) -> usize {
        self.subjects.len()
    }

    pub fn grid(&self) -> &EvaluationGrid {
        &self.grid
    }

    pub fn n_dims(&self) -> usize {
        self.grid.n_dims()
    }
}

/// `((x_g - v)/h)^p k_h(x_g, v)` for all nodes near `v`, `p < powers`.
pub(crate) fn point_vectors(grid_dim: &crate::model::DimensionGrid, kernel: &BoundaryKernel, v: f64, powers: usize) -> Vec<SparseVec> {
    let range = grid_dim.nodes_within(v, kernel.h);
    let mut out: Vec<SparseVec> = (0..powers)
        .map(|_| SparseVec {
            start: range.start,
            vals: Vec::with_capacity(range.len()),
        })
        .collect();
    if !(v >= kernel.lo && v <= kernel.hi) {
        for o in &mut out {
            o.start = 0;
        }
        return out;
    }
    let norm = kernel.h * kernel.normalizer(v);
    for g in range {
        let x = grid_dim.node(g);
        let u = (x - v) / kernel.h;
        let k = kernel.spec.value(u) / norm;
        let mut f = k;
        for o in out.iter_mut() {
            o.vals.push(f);
            f *= u;
        }
    }
    out
}

fn moment_vectors(
    grid_dim: &crate::model::DimensionGrid,
    kernel: &BoundaryKernel,
    a: f64,
    b: f64,
    powers: usize,
) -> Vec<SparseVec> {
    let h = kernel.h;
    let range = grid_dim.nodes_within(0.5 * (a + b), 0.5 * (b - a) + h);
    let mut out: Vec<SparseVec> = (0..powers)
        .map(|_| SparseVec {
            start: range.start,
            vals: Vec::with_capacity(range.len()),
        })
        .collect();
    for g in range {
        let x = grid_dim.node(g);
        for (p, o) in out.iter_mut().enumerate() {
            o.vals.push(kernel.moment_integral(x, a, b, p as u32));
        }
    }
    out
}

fn subject_profile(
    rec: &SurvivalRecord,
    grid: &EvaluationGrid,
    kernels: &[BoundaryKernel],
    rule: &GaussLegendre,
    powers: usize,
) -> SubjectProfile {
    let n_dims = grid.n_dims();
    let paths: Vec<Path> = (0..n_dims).map(|k| rec.path(k)).collect();
    let (entry, exit) = (rec.entry_time, rec.exit_time);
    let dims = paths
        .iter()
        .enumerate()
        .map(|(k, path)| match *path {
            Path::Fixed(z) => DimProfile::Fixed {
                point: point_vectors(&grid.dims[k], &kernels[k], z, powers),
            },
            Path::Shift(a) => DimProfile::Shift {
                exposure: moment_vectors(&grid.dims[k], &kernels[k], a + entry, a + exit, powers),
            },
        })
        .collect();
    let occurrence = rec.event.then(|| {
        paths
            .iter()
            .enumerate()
            .map(|(k, path)| point_vectors(&grid.dims[k], &kernels[k], path.at(exit), 2))
            .collect()
    });
    let n_shift = paths.iter().filter(|p| matches!(p, Path::Shift(_))).count();
    let quadrature = (n_shift >= 2).then(|| shift_quadrature(&paths, grid, kernels, entry, exit, rule));
    SubjectProfile {
        entry,
        length: exit - entry,
        paths,
        dims,
        occurrence,
        quadrature,
    }
}

/// Composite Gauss–Legendre nodes on `[entry, exit]`, split wherever any
/// moving coordinate crosses a kernel kink, a normalizer breakpoint or a grid
/// node, so that every integrand built from kernels and piecewise-linear
/// curves is smooth on each piece.
fn shift_quadrature(
    paths: &[Path],
    grid: &EvaluationGrid,
    kernels: &[BoundaryKernel],
    entry: f64,
    exit: f64,
    rule: &GaussLegendre,
) -> Vec<(f64, f64)> {
    let mut cuts = vec![entry, exit];
    for (k, path) in paths.iter().enumerate() {
        let Path::Shift(a) = *path else { continue };
        let dim = &grid.dims[k];
        let h = kernels[k].h;
        let mut push = |v: f64| {
            let s = v - a;
            if s > entry && s < exit {
                cuts.push(s);
            }
        };
        push(dim.lo + h);
        push(dim.hi - h);
        for g in 0..dim.n_points {
            let x = dim.node(g);
            push(x - h);
            push(x);
            push(x + h);
        }
    }
    cuts.sort_by(f64::total_cmp);
    let scale = (exit - entry).max(1.0);
    cuts.dedup_by(|b, a| (*b - *a).abs() <= 1e-13 * scale);
    let mut nodes = Vec::with_capacity(cuts.len() * rule.order());
    for w in cuts.windows(2) {
        if w[1] > w[0] {
            rule.push_mapped(w[0], w[1], &mut nodes);
        }
    }
    nodes
}
