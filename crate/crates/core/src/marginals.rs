//! One- and two-dimensional occurrence and exposure tables.
//!
//! All tables are per-subject averages (divided by `n`). Pair tables are
//! stored once per unordered pair `a < b` as dense `g_a × g_b` row-major
//! matrices; [`PairTables::view`] hands out either orientation.

use rayon::prelude::*;

use crate::design::{point_vectors, DimProfile, KernelDesign, SparseVec, SubjectProfile};
use crate::error::Result;
use crate::model::{Dataset, EvaluationGrid, FitConfig, Path};

/// Relative floor below which an exposure value marks its node unsupported.
pub const EXPOSURE_FLOOR: f64 = 1e-10;
/// Relative determinant floor for the local linear 2×2 pilot systems.
pub const DET_FLOOR: f64 = 1e-12;

/// Dense pair tables for every `a < b`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairTables {
    sizes: Vec<usize>,
    tables: Vec<Vec<f64>>,
}

/// Read-only view of a pair table oriented as `M(x_target, x_other)`.
#[derive(Debug, Clone, Copy)]
pub struct PairView<'a> {
    data: &'a [f64],
    stride_target: usize,
    stride_other: usize,
    n_target: usize,
    n_other: usize,
}

impl<'a> PairView<'a> {
    #[inline]
    pub fn get(&self, target: usize, other: usize) -> f64 {
        self.data[target * self.stride_target + other * self.stride_other]
    }

    pub fn n_target(&self) -> usize {
        self.n_target
    }

    pub fn n_other(&self) -> usize {
        self.n_other
    }

    /// `out[t] += Σ_o M(t, o) · v[o]`.
    pub fn apply_add(&self, v: &[f64], out: &mut [f64]) {
        if self.stride_other == 1 {
            for (t, o) in out.iter_mut().enumerate() {
                let row = &self.data[t * self.stride_target..t * self.stride_target + self.n_other];
                *o += row.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
            }
        } else {
            for (i, &vi) in v.iter().enumerate() {
                if vi == 0.0 {
                    continue;
                }
                let row = &self.data[i * self.stride_other..i * self.stride_other + self.n_target];
                for (o, m) in out.iter_mut().zip(row) {
                    *o += vi * m;
                }
            }
        }
    }
}

/// Index of pair `(a, b)`, `a < b`, in lexicographic order.
pub(crate) fn pair_index(n_dims: usize, a: usize, b: usize) -> usize {
    debug_assert!(a < b && b < n_dims);
    a * (2 * n_dims - a - 1) / 2 + (b - a - 1)
}

impl PairTables {
    fn zeros(sizes: &[usize]) -> Self {
        let n = sizes.len();
        let mut tables = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for a in 0..n {
            for b in a + 1..n {
                tables.push(vec![0.0; sizes[a] * sizes[b]]);
            }
        }
        PairTables {
            sizes: sizes.to_vec(),
            tables,
        }
    }

    pub fn n_dims(&self) -> usize {
        self.sizes.len()
    }

    /// Table for `(target, other)` with rows indexed by the target node.
    pub fn view(&self, target: usize, other: usize) -> PairView<'_> {
        assert_ne!(target, other, "pair tables need two distinct dimensions");
        let n = self.n_dims();
        if target < other {
            PairView {
                data: &self.tables[pair_index(n, target, other)],
                stride_target: self.sizes[other],
                stride_other: 1,
                n_target: self.sizes[target],
                n_other: self.sizes[other],
            }
        } else {
            PairView {
                data: &self.tables[pair_index(n, other, target)],
                stride_target: 1,
                stride_other: self.sizes[target],
                n_target: self.sizes[target],
                n_other: self.sizes[other],
            }
        }
    }

    /// Value at `(x_j = node xj, x_k = node xk)`.
    pub fn value(&self, j: usize, k: usize, xj: usize, xk: usize) -> f64 {
        self.view(j, k).get(xj, xk)
    }

    /// Pair tables from explicit dense matrices, `tables[(a, b)]` row-major
    /// `g_a × g_b`, for hand-built test fixtures.
    pub fn from_fn(sizes: &[usize], mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> Self {
        let mut out = PairTables::zeros(sizes);
        let n = sizes.len();
        for a in 0..n {
            for b in a + 1..n {
                let t = &mut out.tables[pair_index(n, a, b)];
                for i in 0..sizes[a] {
                    for j in 0..sizes[b] {
                        t[i * sizes[b] + j] = f(a, b, i, j);
                    }
                }
            }
        }
        out
    }
}

/// Local constant tables `Ô_k`, `Ê_k`, `Ê_{j,k}` and the intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct LcMarginals {
    pub grid: EvaluationGrid,
    pub n: usize,
    pub occurrence: Vec<Vec<f64>>,
    pub exposure: Vec<Vec<f64>>,
    pub pairs: PairTables,
    pub alpha_star: f64,
    pub total_events: usize,
    pub total_exposure: f64,
}

/// Local linear tables. The power-zero tables are the local constant ones.
#[derive(Debug, Clone, PartialEq)]
pub struct LlMarginals {
    pub lc: LcMarginals,
    /// `V^j_{j,0}`: first exposure moment.
    pub v_j0: Vec<Vec<f64>>,
    /// `V^j_{j,j}`: second exposure moment.
    pub v_jj: Vec<Vec<f64>>,
    /// `U^j_j`: first occurrence moment.
    pub u_j: Vec<Vec<f64>>,
    /// Pair tables with the moment factor on the first (smaller) index.
    pub pairs_10: PairTables,
    /// Pair tables with the moment factor on the second (larger) index.
    pub pairs_01: PairTables,
    /// Pair tables with moment factors on both indices.
    pub pairs_11: PairTables,
}

impl LlMarginals {
    /// `V^{l,j}` oriented as `M(x_target, x_other)`, with moment power
    /// `p_target` on the target coordinate and `p_other` on the other.
    pub fn pair_view(&self, target: usize, p_target: usize, other: usize, p_other: usize) -> PairView<'_> {
        let (p_first, p_second) = if target < other {
            (p_target, p_other)
        } else {
            (p_other, p_target)
        };
        let tables = match (p_first, p_second) {
            (0, 0) => &self.lc.pairs,
            (1, 0) => &self.pairs_10,
            (0, 1) => &self.pairs_01,
            (1, 1) => &self.pairs_11,
            _ => panic!("pair moments are limited to powers 0 and 1"),
        };
        tables.view(target, other)
    }
}

impl LcMarginals {
    pub fn n_dims(&self) -> usize {
        self.exposure.len()
    }

    /// Nodes where `Ê_k` falls below the exposure floor.
    pub fn unsupported(&self) -> Vec<Vec<bool>> {
        self.exposure.iter().map(|e| unsupported_mask(e)).collect()
    }
}

pub(crate) fn unsupported_mask(e: &[f64]) -> Vec<bool> {
    let max = e.iter().cloned().fold(0.0, f64::max);
    let floor = EXPOSURE_FLOOR * max;
    e.iter().map(|&v| !(v > floor)).collect()
}

/// Local constant tables for `dataset` under `config`.
pub fn build_lc_marginals(dataset: &Dataset, config: &FitConfig) -> Result<LcMarginals> {
    let design = KernelDesign::build(dataset, config, 1)?;
    Ok(lc_from_design(&design))
}

/// Local linear tables for `dataset` under `config`.
pub fn build_ll_marginals(dataset: &Dataset, config: &FitConfig) -> Result<LlMarginals> {
    let design = KernelDesign::build(dataset, config, 3)?;
    Ok(ll_from_design(&design))
}

pub(crate) fn one_dim_tables(design: &KernelDesign, exposure_power: usize, occurrence_power: Option<usize>) -> Vec<Vec<f64>> {
    let inv_n = 1.0 / design.n_subjects() as f64;
    (0..design.n_dims())
        .into_par_iter()
        .map(|k| {
            let mut out = vec![0.0; design.grid.dims[k].n_points];
            for subj in &design.subjects {
                match occurrence_power {
                    Some(p) => {
                        if let Some(occ) = &subj.occurrence {
                            occ[k][p].add_scaled_to(1.0, &mut out);
                        }
                    }
                    None => subj.add_exposure(k, exposure_power, 1.0, &mut out),
                }
            }
            out.iter_mut().for_each(|v| *v *= inv_n);
            out
        })
        .collect()
}

/// Builds the pair tables for all `(p_a, p_b)` in `kinds`.
fn pair_tables(design: &KernelDesign, kinds: &[(usize, usize)]) -> Vec<PairTables> {
    let n_dims = design.n_dims();
    let sizes: Vec<usize> = design.grid.dims.iter().map(|d| d.n_points).collect();
    let pairs: Vec<(usize, usize)> = (0..n_dims).flat_map(|a| (a + 1..n_dims).map(move |b| (a, b))).collect();
    let inv_n = 1.0 / design.n_subjects() as f64;
    let built: Vec<Vec<Vec<f64>>> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let cols = sizes[b];
            let mut tables: Vec<Vec<f64>> = kinds.iter().map(|_| vec![0.0; sizes[a] * cols]).collect();
            for subj in &design.subjects {
                accumulate_pair(design, subj, a, b, kinds, cols, &mut tables);
            }
            for t in &mut tables {
                t.iter_mut().for_each(|v| *v *= inv_n);
            }
            tables
        })
        .collect();
    let mut out: Vec<PairTables> = kinds.iter().map(|_| PairTables::zeros(&sizes)).collect();
    for (idx, tables) in built.into_iter().enumerate() {
        for (kind, t) in tables.into_iter().enumerate() {
            out[kind].tables[idx] = t;
        }
    }
    out
}

#[inline]
fn add_outer(scale: f64, u: &SparseVec, v: &SparseVec, cols: usize, table: &mut [f64]) {
    for (i, &ui) in u.vals.iter().enumerate() {
        let s = scale * ui;
        if s == 0.0 {
            continue;
        }
        let row = (u.start + i) * cols + v.start;
        for (t, &vj) in table[row..row + v.vals.len()].iter_mut().zip(&v.vals) {
            *t += s * vj;
        }
    }
}

fn accumulate_pair(
    design: &KernelDesign,
    subj: &SubjectProfile,
    a: usize,
    b: usize,
    kinds: &[(usize, usize)],
    cols: usize,
    tables: &mut [Vec<f64>],
) {
    match (&subj.dims[a], &subj.dims[b]) {
        (DimProfile::Fixed { point: pa }, DimProfile::Fixed { point: pb }) => {
            for (t, &(p, q)) in tables.iter_mut().zip(kinds) {
                add_outer(subj.length, &pa[p], &pb[q], cols, t);
            }
        }
        (DimProfile::Shift { exposure: ea }, DimProfile::Fixed { point: pb }) => {
            for (t, &(p, q)) in tables.iter_mut().zip(kinds) {
                add_outer(1.0, &ea[p], &pb[q], cols, t);
            }
        }
        (DimProfile::Fixed { point: pa }, DimProfile::Shift { exposure: eb }) => {
            for (t, &(p, q)) in tables.iter_mut().zip(kinds) {
                add_outer(1.0, &pa[p], &eb[q], cols, t);
            }
        }
        (DimProfile::Shift { .. }, DimProfile::Shift { .. }) => {
            let quad = subj.quadrature.as_ref().expect("two moving coordinates carry a quadrature");
            let (Path::Shift(oa), Path::Shift(ob)) = (subj.paths[a], subj.paths[b]) else {
                unreachable!()
            };
            let powers = kinds.iter().map(|&(p, q)| p.max(q)).max().unwrap_or(0) + 1;
            for &(s, w) in quad {
                let va = point_vectors(&design.grid.dims[a], &design.kernels[a], oa + s, powers);
                if va[0].vals.is_empty() {
                    continue;
                }
                let vb = point_vectors(&design.grid.dims[b], &design.kernels[b], ob + s, powers);
                for (t, &(p, q)) in tables.iter_mut().zip(kinds) {
                    add_outer(w, &va[p], &vb[q], cols, t);
                }
            }
        }
    }
}

pub(crate) fn lc_from_design(design: &KernelDesign) -> LcMarginals {
    let occurrence = one_dim_tables(design, 0, Some(0));
    let exposure = one_dim_tables(design, 0, None);
    let pairs = pair_tables(design, &[(0, 0)]).pop().expect("one kind requested");
    LcMarginals {
        grid: design.grid.clone(),
        n: design.n_subjects(),
        occurrence,
        exposure,
        pairs,
        alpha_star: design.total_events as f64 / design.total_exposure,
        total_events: design.total_events,
        total_exposure: design.total_exposure,
    }
}

pub(crate) fn ll_from_design(design: &KernelDesign) -> LlMarginals {
    assert!(design.powers >= 3, "local linear tables need exposure moments up to power 2");
    let occurrence = one_dim_tables(design, 0, Some(0));
    let exposure = one_dim_tables(design, 0, None);
    let v_j0 = one_dim_tables(design, 1, None);
    let v_jj = one_dim_tables(design, 2, None);
    let u_j = one_dim_tables(design, 0, Some(1));
    let mut tables = pair_tables(design, &[(0, 0), (1, 0), (0, 1), (1, 1)]).into_iter();
    let pairs = tables.next().unwrap();
    let pairs_10 = tables.next().unwrap();
    let pairs_01 = tables.next().unwrap();
    let pairs_11 = tables.next().unwrap();
    LlMarginals {
        lc: LcMarginals {
            grid: design.grid.clone(),
            n: design.n_subjects(),
            occurrence,
            exposure,
            pairs,
            alpha_star: design.total_events as f64 / design.total_exposure,
            total_events: design.total_events,
            total_exposure: design.total_exposure,
        },
        v_j0,
        v_jj,
        u_j,
        pairs_10,
        pairs_01,
        pairs_11,
    }
}

/// One-dimensional local constant pilot `α̂_k = Ô_k / Ê_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LcPilot {
    pub alpha: Vec<Vec<f64>>,
    pub unsupported: Vec<Vec<bool>>,
}

/// One-dimensional local linear pilot `(α̂_j, α̂^j)` per dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct LlPilot {
    pub alpha: Vec<Vec<f64>>,
    pub slope: Vec<Vec<f64>>,
    pub unsupported: Vec<Vec<bool>>,
    /// Nodes where the 2×2 system was too ill-conditioned and the local
    /// constant ratio was used instead.
    pub fallback: Vec<Vec<bool>>,
}

pub fn lc_pilot(m: &LcMarginals) -> LcPilot {
    let unsupported = m.unsupported();
    let alpha = m
        .occurrence
        .iter()
        .zip(&m.exposure)
        .zip(&unsupported)
        .map(|((o, e), u)| {
            o.iter()
                .zip(e)
                .zip(u)
                .map(|((&o, &e), &u)| if u { 0.0 } else { o / e })
                .collect()
        })
        .collect();
    LcPilot { alpha, unsupported }
}

pub fn ll_pilot(m: &LlMarginals) -> LlPilot {
    let unsupported = m.lc.unsupported();
    let n_dims = m.lc.n_dims();
    let mut alpha = Vec::with_capacity(n_dims);
    let mut slope = Vec::with_capacity(n_dims);
    let mut fallback = Vec::with_capacity(n_dims);
    for j in 0..n_dims {
        let g = m.lc.exposure[j].len();
        let (mut a, mut s, mut f) = (vec![0.0; g], vec![0.0; g], vec![false; g]);
        for x in 0..g {
            if unsupported[j][x] {
                continue;
            }
            let (v00, v10, v11) = (m.lc.exposure[j][x], m.v_j0[j][x], m.v_jj[j][x]);
            let (u0, u1) = (m.lc.occurrence[j][x], m.u_j[j][x]);
            let det = v00 * v11 - v10 * v10;
            if det > DET_FLOOR * v00 * v11 && det > 0.0 {
                a[x] = (v11 * u0 - v10 * u1) / det;
                s[x] = (v00 * u1 - v10 * u0) / det;
            } else {
                a[x] = u0 / v00;
                f[x] = true;
            }
        }
        alpha.push(a);
        slope.push(s);
        fallback.push(f);
    }
    LlPilot {
        alpha,
        slope,
        unsupported,
        fallback,
    }
}

/// Local constant pilot curves for `dataset`.
pub fn pilot_estimates(dataset: &Dataset, config: &FitConfig) -> Result<LcPilot> {
    Ok(lc_pilot(&build_lc_marginals(dataset, config)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{boundary_kernel, BoundaryKernel};
    use crate::model::{validate_dataset, CovariateChannel, DimensionGrid, Estimator, SurvivalRecord};

    fn trapz(grid: &DimensionGrid, f: &[f64]) -> f64 {
        grid.trapezoid_weights().iter().zip(f).map(|(w, v)| w * v).sum()
    }

    fn lc_config(h: f64) -> FitConfig {
        FitConfig::new(Estimator::LocalConstantSbf, h)
    }

    #[test]
    fn single_subject_reduction() {
        let grid = EvaluationGrid::uniform(2.0, 0.0, 1.0, 1, 21).unwrap();
        let ds = validate_dataset(vec![SurvivalRecord::with_constants(0.0, 1.0, true, &[0.5])], &grid).unwrap();
        let m = build_lc_marginals(&ds, &lc_config(0.3)).unwrap();
        for g in 0..21 {
            let x = grid.dims[1].node(g);
            let k = boundary_kernel(x, 0.5, 0.3, 0.0, 1.0);
            assert!((m.occurrence[1][g] - k).abs() < 1e-14);
            assert!((m.exposure[1][g] - k).abs() < 1e-14);
        }
        assert_eq!(m.alpha_star, 1.0);
    }

    #[test]
    fn moving_pair_matches_adaptive_oracle() {
        let grid = EvaluationGrid::new(vec![
            DimensionGrid::new(0.0, 2.0, 5).unwrap(),
            DimensionGrid::new(0.0, 3.0, 5).unwrap(),
            DimensionGrid::new(-1.0, 1.0, 5).unwrap(),
        ])
        .unwrap();
        let recs = vec![
            SurvivalRecord::new(0.1, 1.7, true, vec![CovariateChannel::TimeOffset(0.4), CovariateChannel::Constant(0.3)]),
            SurvivalRecord::new(0.0, 1.2, false, vec![CovariateChannel::TimeOffset(1.1), CovariateChannel::Constant(-0.8)]),
            SurvivalRecord::new(0.5, 2.0, true, vec![CovariateChannel::TimeOffset(0.0), CovariateChannel::Constant(0.95)]),
        ];
        let ds = validate_dataset(recs, &grid).unwrap();
        let h = 0.6;
        let m = build_lc_marginals(&ds, &lc_config(h)).unwrap();
        let k0 = BoundaryKernel::new(Default::default(), h, 0.0, 2.0, 16);
        let k1 = BoundaryKernel::new(Default::default(), h, 0.0, 3.0, 16);
        for a in 0..5 {
            for b in 0..5 {
                let x0 = grid.dims[0].node(a);
                let x1 = grid.dims[1].node(b);
                let mut want = 0.0;
                for r in ds.records() {
                    let CovariateChannel::TimeOffset(off) = r.covariates[0] else { unreachable!() };
                    want += adaptive_simpson(
                        &|s: f64| k0.eval(x0, s) * k1.eval(x1, off + s),
                        r.entry_time,
                        r.exit_time,
                        1e-13,
                        40,
                    );
                }
                want /= 3.0;
                let got = m.pairs.value(0, 1, a, b);
                assert!((got - want).abs() < 1e-8, "({a},{b}) got {got} want {want}");
                assert_eq!(got, m.pairs.value(1, 0, b, a));
            }
        }
    }

    fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
            (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
        }
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let l = simpson(f, a, m);
            let r = simpson(f, m, b);
            if depth == 0 || (l + r - whole).abs() <= 15.0 * tol {
                l + r + (l + r - whole) / 15.0
            } else {
                rec(f, a, m, l, 0.5 * tol, depth - 1) + rec(f, m, b, r, 0.5 * tol, depth - 1)
            }
        }
        // pre-split so that narrow kernel supports are never skipped
        let pieces = 64;
        (0..pieces)
            .map(|i| {
                let lo = a + (b - a) * i as f64 / pieces as f64;
                let hi = a + (b - a) * (i + 1) as f64 / pieces as f64;
                rec(f, lo, hi, simpson(f, lo, hi), tol / pieces as f64, depth)
            })
            .sum()
    }

    #[test]
    fn ll_single_subject_moments() {
        let grid = EvaluationGrid::uniform(1.0, 0.0, 1.0, 1, 21).unwrap();
        let ds = validate_dataset(vec![SurvivalRecord::with_constants(0.0, 1.0, true, &[0.5])], &grid).unwrap();
        let m = build_ll_marginals(&ds, &FitConfig::new(Estimator::LocalLinearSbf, 0.2)).unwrap();
        let x = 10;
        assert_eq!(grid.dims[1].node(x), 0.5);
        assert!(m.v_j0[1][x].abs() < 1e-15);
        // at x = z the moment factor vanishes, so use a neighbour with full window
        let x = 9;
        let xv = grid.dims[1].node(x);
        let k = boundary_kernel(xv, 0.5, 0.2, 0.0, 1.0);
        let u = (xv - 0.5) / 0.2;
        assert!((m.v_jj[1][x] - u * u * k).abs() < 1e-14);
    }

    #[test]
    fn ll_time_moments_at_interior_point() {
        let grid = EvaluationGrid::uniform(4.0, 0.0, 1.0, 1, 41).unwrap();
        let ds = validate_dataset(vec![SurvivalRecord::with_constants(0.0, 4.0, false, &[0.5])], &grid).unwrap();
        let m = build_ll_marginals(&ds, &FitConfig::new(Estimator::LocalLinearSbf, 0.3)).unwrap();
        let x = 20;
        assert!((m.lc.exposure[0][x] - 1.0).abs() < 1e-12);
        assert!(m.v_j0[0][x].abs() < 1e-12);
        assert!((m.v_jj[0][x] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn pilot_constant_ratio_and_zero_events() {
        let grid = EvaluationGrid::uniform(1.0, 0.0, 1.0, 1, 5).unwrap();
        let m = LcMarginals {
            grid: grid.clone(),
            n: 1,
            occurrence: vec![vec![0.6, 1.2, 1.8, 0.0, 0.3]; 2],
            exposure: vec![vec![0.2, 0.4, 0.6, 0.0, 0.1]; 2],
            pairs: PairTables::zeros(&[5, 5]),
            alpha_star: 1.0,
            total_events: 1,
            total_exposure: 1.0,
        };
        let p = lc_pilot(&m);
        for (a, want) in p.alpha[0].iter().zip([3.0, 3.0, 3.0, 0.0, 3.0]) {
            assert!((a - want).abs() < 1e-14);
        }
        assert_eq!(p.unsupported[1], vec![false, false, false, true, false]);
    }

    #[test]
    fn ll_pilot_solves_two_by_two() {
        let lc = LcMarginals {
            grid: EvaluationGrid::uniform(1.0, 0.0, 1.0, 0, 3).unwrap(),
            n: 1,
            occurrence: vec![vec![1.0, 2.0, 0.5]],
            exposure: vec![vec![2.0, 1.0, 1.0]],
            pairs: PairTables::zeros(&[3]),
            alpha_star: 1.0,
            total_events: 1,
            total_exposure: 1.0,
        };
        let m = LlMarginals {
            lc,
            v_j0: vec![vec![0.5, 0.0, 1.0]],
            v_jj: vec![vec![1.0, 0.2, 1.0]],
            u_j: vec![vec![0.0, 0.4, 0.5]],
            pairs_10: PairTables::zeros(&[3]),
            pairs_01: PairTables::zeros(&[3]),
            pairs_11: PairTables::zeros(&[3]),
        };
        let p = ll_pilot(&m);
        // node 0: [[2, .5], [.5, 1]] (a, s) = (1, 0)
        let (a, s) = (p.alpha[0][0], p.slope[0][0]);
        assert!((2.0 * a + 0.5 * s - 1.0).abs() < 1e-14 && (0.5 * a + s).abs() < 1e-14);
        assert!((p.alpha[0][1] - 2.0).abs() < 1e-14 && (p.slope[0][1] - 2.0).abs() < 1e-14);
        // node 2 is singular: falls back to the ratio
        assert!(p.fallback[0][2]);
        assert_eq!((p.alpha[0][2], p.slope[0][2]), (0.5, 0.0));
    }

    #[test]
    fn total_mass_identities_on_fine_grid() {
        let grid = EvaluationGrid::new(vec![
            DimensionGrid::new(0.0, 3.0, 6001).unwrap(),
            DimensionGrid::new(-1.0, 1.0, 4001).unwrap(),
        ])
        .unwrap();
        let recs = vec![
            SurvivalRecord::with_constants(0.0, 1.3, true, &[0.1]),
            SurvivalRecord::with_constants(0.4, 2.9, false, &[-0.95]),
            SurvivalRecord::with_constants(0.0, 0.7, true, &[0.99]),
        ];
        let ds = validate_dataset(recs, &grid).unwrap();
        let m = build_lc_marginals(&ds, &lc_config(0.4)).unwrap();
        for k in 0..2 {
            let e = trapz(&grid.dims[k], &m.exposure[k]);
            let o = trapz(&grid.dims[k], &m.occurrence[k]);
            assert!((e - ds.total_exposure() / 3.0).abs() < 1e-6 * e, "k={k} e={e}");
            assert!((o - 2.0 / 3.0).abs() < 1e-6, "k={k} o={o}");
        }
    }
}
