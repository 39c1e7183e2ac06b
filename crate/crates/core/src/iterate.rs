//! Bookkeeping shared by every backfitting loop: centering, the relative
//! change criterion and assembly of the returned fit.

use crate::model::{AdditiveFit, Estimator, EvaluationGrid, Norming};

/// Criterion numerator above which a classical fit is declared divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e6;

#[derive(Debug, Clone)]
pub(crate) struct Centering {
    /// Trapezoid weights per dimension.
    pub tw: Vec<Vec<f64>>,
    /// Centering weights per dimension (exposure or one).
    pub w: Vec<Vec<f64>>,
    /// Exposure per dimension, used to recover the intercept under uniform norming.
    pub exposure: Vec<Vec<f64>>,
    pub unsupported: Vec<Vec<bool>>,
}

impl Centering {
    pub fn new(grid: &EvaluationGrid, exposure: &[Vec<f64>], unsupported: Vec<Vec<bool>>, norming: Norming) -> Self {
        let tw: Vec<Vec<f64>> = grid.dims.iter().map(|d| d.trapezoid_weights()).collect();
        let w = exposure
            .iter()
            .map(|e| match norming {
                Norming::ExposureWeighted => e.clone(),
                Norming::Uniform => vec![1.0; e.len()],
            })
            .collect();
        Centering {
            tw,
            w,
            exposure: exposure.to_vec(),
            unsupported,
        }
    }

    /// Zeroes unsupported nodes, then subtracts the weighted mean.
    pub fn center(&self, k: usize, curve: &mut [f64]) {
        for (c, &u) in curve.iter_mut().zip(&self.unsupported[k]) {
            if u {
                *c = 0.0;
            }
        }
        let (mut num, mut den) = (0.0, 0.0);
        for ((c, t), w) in curve.iter().zip(&self.tw[k]).zip(&self.w[k]) {
            num += t * w * c;
            den += t * w;
        }
        if den > 0.0 {
            let mean = num / den;
            curve.iter_mut().for_each(|c| *c -= mean);
        }
    }

    /// `(∫ (new - old)², ∫ new²)` over supported nodes.
    pub fn change(&self, k: usize, old: &[f64], new: &[f64]) -> (f64, f64) {
        let (mut num, mut den) = (0.0, 0.0);
        for (((o, n), t), &u) in old.iter().zip(new).zip(&self.tw[k]).zip(&self.unsupported[k]) {
            if u {
                continue;
            }
            num += t * (n - o) * (n - o);
            den += t * n * n;
        }
        (num, den)
    }

    /// Intercept making `intercept + Σ_k α_k` agree with an exposure-centered
    /// decomposition whose intercept is `alpha_star`.
    pub fn intercept(&self, alpha_star: f64, components: &[Vec<f64>]) -> f64 {
        let mut shift = 0.0;
        for (k, c) in components.iter().enumerate() {
            let (mut num, mut den) = (0.0, 0.0);
            for ((v, t), e) in c.iter().zip(&self.tw[k]).zip(&self.exposure[k]) {
                num += t * e * v;
                den += t * e;
            }
            if den > 0.0 {
                shift += num / den;
            }
        }
        alpha_star - shift
    }
}

/// Running state of a Gauss–Seidel sweep loop.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Progress {
    pub iterations: usize,
    pub converged: bool,
    pub diverged: bool,
    pub criterion: f64,
}

/// Criterion value from accumulated `(num, den)` sums.
pub(crate) fn criterion(num: f64, den: f64, tol_offset: f64) -> f64 {
    num / (den + tol_offset)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn assemble_fit(
    estimator: Estimator,
    norming: Norming,
    grid: &EvaluationGrid,
    bandwidth: Vec<f64>,
    alpha_star: f64,
    components: Vec<Vec<f64>>,
    derivatives: Option<Vec<Vec<f64>>>,
    centering: Centering,
    progress: Progress,
) -> AdditiveFit {
    let intercept = centering.intercept(alpha_star, &components);
    AdditiveFit {
        estimator,
        norming,
        grid: grid.clone(),
        bandwidth,
        intercept,
        components,
        derivatives,
        weights: centering.w,
        unsupported: centering.unsupported,
        iterations_used: progress.iterations,
        converged: progress.converged,
        diverged: progress.diverged,
        final_criterion: progress.criterion,
    }
}
