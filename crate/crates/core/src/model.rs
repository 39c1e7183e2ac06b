//! Domain types shared by every estimator: survival records, evaluation
//! grids, fit configuration and the fitted additive hazard.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;

/// How a covariate evolves along a subject's at-risk interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CovariateChannel {
    /// `Z(t) = value` for all `t`.
    Constant(f64),
    /// `Z(t) = offset + t`, e.g. age when `t` is time since diagnosis.
    TimeOffset(f64),
}

impl CovariateChannel {
    pub fn value_at(&self, t: f64) -> f64 {
        match *self {
            CovariateChannel::Constant(v) => v,
            CovariateChannel::TimeOffset(a) => a + t,
        }
    }

    pub(crate) fn path(&self) -> Path {
        match *self {
            CovariateChannel::Constant(v) => Path::Fixed(v),
            CovariateChannel::TimeOffset(a) => Path::Shift(a),
        }
    }
}

/// Trajectory `X_k(s)` of one coordinate of `x = (t, z_1, ..., z_d)` in the
/// integration variable `s`. The time coordinate is `Shift(0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Path {
    Fixed(f64),
    Shift(f64),
}

impl Path {
    #[inline]
    pub(crate) fn at(self, s: f64) -> f64 {
        match self {
            Path::Fixed(v) => v,
            Path::Shift(a) => a + s,
        }
    }
}

/// One subject: at-risk interval `(entry, exit]`, event indicator and
/// covariate channels.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalRecord {
    pub entry_time: f64,
    pub exit_time: f64,
    pub event: bool,
    pub covariates: Vec<CovariateChannel>,
}

impl SurvivalRecord {
    pub fn new(entry_time: f64, exit_time: f64, event: bool, covariates: Vec<CovariateChannel>) -> Self {
        SurvivalRecord {
            entry_time,
            exit_time,
            event,
            covariates,
        }
    }

    /// Record with constant covariates only.
    pub fn with_constants(entry_time: f64, exit_time: f64, event: bool, z: &[f64]) -> Self {
        SurvivalRecord::new(
            entry_time,
            exit_time,
            event,
            z.iter().map(|&v| CovariateChannel::Constant(v)).collect(),
        )
    }

    pub fn exposure(&self) -> f64 {
        self.exit_time - self.entry_time
    }

    pub(crate) fn path(&self, k: usize) -> Path {
        if k == 0 {
            Path::Shift(0.0)
        } else {
            self.covariates[k - 1].path()
        }
    }
}

/// Equally spaced grid on `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DimensionGrid {
    pub lo: f64,
    pub hi: f64,
    pub n_points: usize,
}

impl DimensionGrid {
    pub fn new(lo: f64, hi: f64, n_points: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(Error::InvalidGrid(format!("need lo < hi, got [{lo}, {hi}]")));
        }
        if n_points < 3 {
            return Err(Error::InvalidGrid(format!("need at least 3 points, got {n_points}")));
        }
        Ok(DimensionGrid { lo, hi, n_points })
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.n_points - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.hi
        } else {
            self.lo + i as f64 * self.step()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.node(i)).collect()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    /// Trapezoid quadrature weights; `Σ w_i f(x_i) ≈ ∫ f`.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let step = self.step();
        let mut w = vec![step; self.n_points];
        w[0] = 0.5 * step;
        w[self.n_points - 1] = 0.5 * step;
        w
    }

    /// Bracketing cell `(i, frac)` with `x = (1 - frac) x_i + frac x_{i+1}`.
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let pos = ((x - self.lo) / self.step()).clamp(0.0, (self.n_points - 1) as f64);
        let i = (pos.floor() as usize).min(self.n_points - 2);
        (i, pos - i as f64)
    }

    /// Linear interpolation of node values; `x` is clamped to the grid.
    pub fn interpolate(&self, values: &[f64], x: f64) -> f64 {
        let (i, frac) = self.locate(x);
        if frac == 0.0 {
            values[i]
        } else if frac == 1.0 {
            values[i + 1]
        } else {
            values[i] + frac * (values[i + 1] - values[i])
        }
    }

    /// Index range of nodes strictly within `radius` of `v`.
    pub(crate) fn nodes_within(&self, v: f64, radius: f64) -> std::ops::Range<usize> {
        let step = self.step();
        let first = ((v - radius - self.lo) / step).floor() + 1.0;
        let last = ((v + radius - self.lo) / step).ceil();
        let start = first.clamp(0.0, self.n_points as f64) as usize;
        let end = last.clamp(0.0, self.n_points as f64) as usize;
        start.min(end)..end
    }
}

/// Grid over `[0, T] x [lo_1, hi_1] x ... x [lo_d, hi_d]`; dimension 0 is time.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationGrid {
    pub dims: Vec<DimensionGrid>,
}

impl EvaluationGrid {
    pub fn new(dims: Vec<DimensionGrid>) -> Result<Self> {
        let Some(time) = dims.first() else {
            return Err(Error::InvalidGrid("grid has no time dimension".into()));
        };
        if time.lo != 0.0 {
            return Err(Error::InvalidGrid(format!(
                "time dimension must start at 0, starts at {}",
                time.lo
            )));
        }
        Ok(EvaluationGrid { dims })
    }

    /// Time grid on `[0, horizon]` plus `d` covariate grids on the same `[lo, hi]`.
    pub fn uniform(horizon: f64, lo: f64, hi: f64, d: usize, n_points: usize) -> Result<Self> {
        let mut dims = vec![DimensionGrid::new(0.0, horizon, n_points)?];
        for _ in 0..d {
            dims.push(DimensionGrid::new(lo, hi, n_points)?);
        }
        EvaluationGrid::new(dims)
    }

    pub fn horizon(&self) -> f64 {
        self.dims[0].hi
    }

    /// Number of covariates `d`.
    pub fn covariate_dim(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn n_dims(&self) -> usize {
        self.dims.len()
    }
}

/// Counts from [`validate_dataset`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub clipped: usize,
    pub dropped: usize,
}

/// Records that passed validation against an [`EvaluationGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<SurvivalRecord>,
    grid: EvaluationGrid,
    pub report: ValidationReport,
}

impl Dataset {
    pub fn records(&self) -> &[SurvivalRecord] {
        &self.records
    }

    pub fn grid(&self) -> &EvaluationGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn covariate_dim(&self) -> usize {
        self.grid.covariate_dim()
    }

    pub fn total_events(&self) -> usize {
        self.records.iter().filter(|r| r.event).count()
    }

    pub fn total_exposure(&self) -> f64 {
        self.records.iter().map(SurvivalRecord::exposure).sum()
    }

    pub fn into_records(self) -> Vec<SurvivalRecord> {
        self.records
    }
}

/// Check records against the grid and clip them to the study window.
///
/// Exits beyond the horizon are clipped and turned into censorings, and a
/// `TimeOffset` channel restricts the at-risk interval to times where it stays
/// inside its covariate domain. Records with no exposure left inside the
/// window are dropped and counted.
pub fn validate_dataset(records: Vec<SurvivalRecord>, grid: &EvaluationGrid) -> Result<Dataset> {
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let d = grid.covariate_dim();
    let horizon = grid.horizon();
    let mut report = ValidationReport::default();
    let mut kept = Vec::with_capacity(records.len());

    for (index, mut rec) in records.into_iter().enumerate() {
        if !(rec.entry_time.is_finite() && rec.exit_time.is_finite()) {
            return Err(Error::InvalidRecord {
                index,
                message: "non-finite time".into(),
            });
        }
        if rec.entry_time < 0.0 {
            return Err(Error::InvalidRecord {
                index,
                message: format!("negative entry time {}", rec.entry_time),
            });
        }
        if rec.entry_time >= rec.exit_time {
            return Err(Error::ZeroLengthExposure {
                index,
                entry: rec.entry_time,
                exit: rec.exit_time,
            });
        }
        if rec.covariates.len() != d {
            return Err(Error::DimensionMismatch {
                index,
                expected: d,
                found: rec.covariates.len(),
            });
        }

        let mut entry = rec.entry_time;
        let mut exit = rec.exit_time.min(horizon);
        for (j, ch) in rec.covariates.iter().enumerate() {
            let dom = &grid.dims[j + 1];
            match *ch {
                CovariateChannel::Constant(v) => {
                    if !v.is_finite() || !dom.contains(v) {
                        return Err(Error::CovariateOutOfDomain {
                            index,
                            dim: j + 1,
                            value: v,
                            lo: dom.lo,
                            hi: dom.hi,
                        });
                    }
                }
                CovariateChannel::TimeOffset(a) => {
                    if !a.is_finite() {
                        return Err(Error::InvalidRecord {
                            index,
                            message: format!("non-finite offset in covariate {}", j + 1),
                        });
                    }
                    entry = entry.max(dom.lo - a);
                    exit = exit.min(dom.hi - a);
                }
            }
        }

        if entry >= exit {
            report.dropped += 1;
            continue;
        }
        if entry != rec.entry_time || exit != rec.exit_time {
            report.clipped += 1;
            if exit < rec.exit_time {
                // the event, if any, happened outside the observed window
                rec.event = false;
            }
            rec.entry_time = entry;
            rec.exit_time = exit;
        }
        kept.push(rec);
    }

    if kept.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(Dataset {
        records: kept,
        grid: grid.clone(),
        report,
    })
}

/// The four estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Estimator {
    LocalConstantSbf,
    LocalLinearSbf,
    LocalConstantClassicBf,
    LocalLinearClassicBf,
}

impl Estimator {
    pub const ALL: [Estimator; 4] = [
        Estimator::LocalLinearSbf,
        Estimator::LocalConstantSbf,
        Estimator::LocalLinearClassicBf,
        Estimator::LocalConstantClassicBf,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Estimator::LocalConstantSbf => "LC-SBF",
            Estimator::LocalLinearSbf => "LL-SBF",
            Estimator::LocalConstantClassicBf => "LC-BF",
            Estimator::LocalLinearClassicBf => "LL-BF",
        }
    }

    pub fn is_local_linear(self) -> bool {
        matches!(self, Estimator::LocalLinearSbf | Estimator::LocalLinearClassicBf)
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "LC-SBF" | "LOCALCONSTANTSBF" => Ok(Estimator::LocalConstantSbf),
            "LL-SBF" | "LOCALLINEARSBF" => Ok(Estimator::LocalLinearSbf),
            "LC-BF" | "LOCALCONSTANTCLASSICBF" => Ok(Estimator::LocalConstantClassicBf),
            "LL-BF" | "LOCALLINEARCLASSICBF" => Ok(Estimator::LocalLinearClassicBf),
            other => Err(Error::config("estimator", format!("unknown estimator `{other}`"))),
        }
    }
}

/// Weight used in the component centering constraint `∫ α_k w_k = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Norming {
    /// `w_k = Ê_k`, the marginal exposure.
    #[default]
    ExposureWeighted,
    /// `w_k = 1`.
    Uniform,
}

impl Norming {
    pub fn label(self) -> &'static str {
        match self {
            Norming::ExposureWeighted => "exposure",
            Norming::Uniform => "uniform",
        }
    }
}

impl FromStr for Norming {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exposure" | "exposureweighted" | "exposure_weighted" => Ok(Norming::ExposureWeighted),
            "uniform" => Ok(Norming::Uniform),
            other => Err(Error::config("norming", format!("unknown norming `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    /// One bandwidth per dimension, or a single value broadcast to all.
    pub bandwidth: Vec<f64>,
    pub kernel: KernelSpec,
    pub estimator: Estimator,
    pub tolerance: f64,
    pub tol_offset: f64,
    pub max_iterations: usize,
    pub norming: Norming,
    pub quadrature_order: usize,
}

impl FitConfig {
    pub fn new(estimator: Estimator, bandwidth: f64) -> Self {
        FitConfig {
            bandwidth: vec![bandwidth],
            kernel: KernelSpec::default(),
            estimator,
            tolerance: 1e-4,
            tol_offset: 1e-4,
            max_iterations: 500,
            norming: Norming::ExposureWeighted,
            quadrature_order: 16,
        }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_norming(mut self, norming: Norming) -> Self {
        self.norming = norming;
        self
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    pub fn bandwidth_for(&self, k: usize) -> f64 {
        if self.bandwidth.len() == 1 {
            self.bandwidth[0]
        } else {
            self.bandwidth[k]
        }
    }

    pub fn bandwidths(&self, n_dims: usize) -> Vec<f64> {
        (0..n_dims).map(|k| self.bandwidth_for(k)).collect()
    }

    pub fn validate(&self, grid: &EvaluationGrid) -> Result<()> {
        let n_dims = grid.n_dims();
        if self.bandwidth.is_empty() || (self.bandwidth.len() != 1 && self.bandwidth.len() != n_dims) {
            return Err(Error::config(
                "bandwidth",
                format!("expected 1 or {n_dims} values, got {}", self.bandwidth.len()),
            ));
        }
        for (k, dim) in grid.dims.iter().enumerate() {
            let h = self.bandwidth_for(k);
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::config("bandwidth", format!("must be positive, got {h}")));
            }
            if h >= 0.5 * (dim.hi - dim.lo) {
                return Err(Error::config(
                    "bandwidth",
                    format!(
                        "{h} in dimension {k} is not below half the domain width {}",
                        0.5 * (dim.hi - dim.lo)
                    ),
                ));
            }
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::config("tolerance", "must be positive"));
        }
        if !(self.tol_offset >= 0.0) {
            return Err(Error::config("tol_offset", "must be non-negative"));
        }
        if self.max_iterations == 0 {
            return Err(Error::config("max_iterations", "must be at least 1"));
        }
        if self.quadrature_order == 0 || self.quadrature_order > 64 {
            return Err(Error::config("quadrature_order", "must be in 1..=64"));
        }
        Ok(())
    }
}

/// Fitted additive hazard `α* + Σ_k α_k(x_k)` on an [`EvaluationGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct AdditiveFit {
    pub estimator: Estimator,
    pub norming: Norming,
    pub grid: EvaluationGrid,
    pub bandwidth: Vec<f64>,
    pub intercept: f64,
    /// Component curves at the grid nodes, one per dimension.
    pub components: Vec<Vec<f64>>,
    /// Derivative curves on the `(x - X)/h` scale (local linear only).
    pub derivatives: Option<Vec<Vec<f64>>>,
    /// Centering weights `w_k` at the grid nodes.
    pub weights: Vec<Vec<f64>>,
    /// Grid nodes with too little exposure to support an estimate.
    pub unsupported: Vec<Vec<bool>>,
    pub iterations_used: usize,
    pub converged: bool,
    pub diverged: bool,
    pub final_criterion: f64,
}

impl AdditiveFit {
    pub fn n_dims(&self) -> usize {
        self.components.len()
    }

    /// Component `k` at `x` by linear interpolation (clamped to the grid).
    pub fn component_value(&self, k: usize, x: f64) -> f64 {
        self.grid.dims[k].interpolate(&self.components[k], x)
    }

    /// Hazard at `x = (t, z_1, ..., z_d)`. No extrapolation.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_dims() {
            return Err(Error::InvalidGrid(format!(
                "point has {} coordinates, fit has {}",
                x.len(),
                self.n_dims()
            )));
        }
        let mut value = self.intercept;
        for (k, &xk) in x.iter().enumerate() {
            let dim = &self.grid.dims[k];
            if !dim.contains(xk) {
                return Err(Error::OutsideDomain {
                    dim: k,
                    value: xk,
                    lo: dim.lo,
                    hi: dim.hi,
                });
            }
            value += self.component_value(k, xk);
        }
        Ok(value)
    }

    /// `(|∫ α_k w_k|, ∫ w_k)` by the trapezoid rule.
    pub fn centering_residual(&self, k: usize) -> (f64, f64) {
        let tw = self.grid.dims[k].trapezoid_weights();
        let mut num = 0.0;
        let mut den = 0.0;
        for ((t, a), w) in tw.iter().zip(&self.components[k]).zip(&self.weights[k]) {
            num += t * a * w;
            den += t * w;
        }
        (num.abs(), den)
    }

    /// True when every component satisfies its centering constraint to `rel`.
    pub fn is_centered(&self, rel: f64) -> bool {
        (0..self.n_dims()).all(|k| {
            let (r, scale) = self.centering_residual(k);
            r <= rel * scale.max(f64::MIN_POSITIVE)
        })
    }
}

/// Hazard of `fit` at `x`; see [`AdditiveFit::evaluate`].
pub fn evaluate_fit(fit: &AdditiveFit, x: &[f64]) -> Result<f64> {
    fit.evaluate(x)
}
