//! Monte-Carlo evaluation: component MISE, bias²/variance decomposition and
//! bandwidth search over a simulated scenario.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{validate_dataset, AdditiveFit, Dataset, Estimator, EvaluationGrid, FitConfig};
use crate::simulation::{derive_seed, reference_covariates, simulate_dataset, SimConfig, TrueHazard};

/// Size of the fixed covariate sample on which bias and variance are split.
pub const REFERENCE_SIZE: usize = 2000;
/// Convergence tolerance used by [`mc_study`] and [`bandwidth_search`].
pub const MC_TOLERANCE: f64 = 1e-6;
/// Iteration cap used by [`mc_study`] and [`bandwidth_search`].
pub const MC_MAX_ITERATIONS: usize = 3000;

/// Fit settings used by the Monte-Carlo drivers.
pub fn mc_fit_config(estimator: Estimator, bandwidth: f64) -> FitConfig {
    FitConfig::new(estimator, bandwidth)
        .with_tolerance(MC_TOLERANCE)
        .with_max_iterations(MC_MAX_ITERATIONS)
}

/// Value the fit's component `k` estimates at `x`: the true component minus
/// its mean under the fit's centering weights.
pub fn centered_truth<'a>(fit: &AdditiveFit, truth: &'a TrueHazard, k: usize) -> impl Fn(f64) -> f64 + 'a {
    let dim = &fit.grid.dims[k];
    let tw = dim.trapezoid_weights();
    let mut num = 0.0;
    let mut den = 0.0;
    for (g, (t, w)) in tw.iter().zip(&fit.weights[k]).enumerate() {
        if fit.unsupported[k][g] {
            continue;
        }
        num += t * w * truth.dimension_value(k, dim.node(g));
        den += t * w;
    }
    let offset = if den > 0.0 { num / den } else { 0.0 };
    move |x| truth.dimension_value(k, x) - offset
}

/// Mean over subjects of the squared difference between the fitted and the
/// centered true component `k` at the subjects' covariate values.
pub fn component_mise(fit: &AdditiveFit, truth: &TrueHazard, dataset: &Dataset, k: usize) -> f64 {
    let target = centered_truth(fit, truth, k);
    let records = dataset.records();
    let sum: f64 = records
        .iter()
        .map(|rec| {
            let x = rec.path(k).at(rec.exit_time);
            let e = fit.component_value(k, x) - target(x);
            e * e
        })
        .sum();
    sum / records.len() as f64
}

/// Error metrics of one covariate component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentMetrics {
    /// Mean squared error on the reference sample; equals `bias_sq + variance`.
    pub mise: f64,
    pub bias_sq: f64,
    pub variance: f64,
    /// Mean over replications of [`component_mise`] at each replication's own
    /// covariates.
    pub sample_mise: f64,
}

/// Monte-Carlo summary of one estimator at one bandwidth.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub estimator: Estimator,
    pub bandwidth: f64,
    pub n_reps: usize,
    pub n_converged: usize,
    pub scenario: String,
    /// Metrics for covariates `1..=d`; `None` when no replication converged.
    pub per_component: Option<Vec<ComponentMetrics>>,
}

impl EvalReport {
    pub fn is_na(&self) -> bool {
        self.per_component.is_none()
    }

    /// Metrics of covariate `k` (1-based), if any replication converged.
    pub fn component(&self, k: usize) -> Option<&ComponentMetrics> {
        self.per_component.as_ref().map(|m| &m[k - 1])
    }

    /// Sum of [`ComponentMetrics::sample_mise`] over covariates, infinite for NA rows.
    pub fn total_sample_mise(&self) -> f64 {
        self.per_component
            .as_ref()
            .map_or(f64::INFINITY, |m| m.iter().map(|c| c.sample_mise).sum())
    }
}

/// One converged fit reduced to what the aggregation needs.
struct RepResult {
    sample_mise: Vec<f64>,
    /// `errors[k][i]`: fitted minus centered truth for covariate `k + 1` at
    /// reference point `i`.
    errors: Vec<Vec<f64>>,
}

fn summarize(fit: &AdditiveFit, truth: &TrueHazard, dataset: &Dataset, reference: &[Vec<f64>]) -> RepResult {
    let d = fit.n_dims() - 1;
    let sample_mise = (1..=d).map(|k| component_mise(fit, truth, dataset, k)).collect();
    let errors = (1..=d)
        .map(|k| {
            let target = centered_truth(fit, truth, k);
            reference
                .iter()
                .map(|z| {
                    let x = z[k - 1];
                    fit.component_value(k, x) - target(x)
                })
                .collect()
        })
        .collect();
    RepResult { sample_mise, errors }
}

fn aggregate(results: &[&RepResult], d: usize) -> Option<Vec<ComponentMetrics>> {
    if results.is_empty() {
        return None;
    }
    let r = results.len() as f64;
    Some(
        (0..d)
            .map(|k| {
                let n_ref = results[0].errors[k].len();
                let (mut mise, mut bias_sq, mut variance) = (0.0, 0.0, 0.0);
                for i in 0..n_ref {
                    let mean = results.iter().map(|res| res.errors[k][i]).sum::<f64>() / r;
                    let mut second = 0.0;
                    let mut spread = 0.0;
                    for res in results {
                        let e = res.errors[k][i];
                        second += e * e;
                        spread += (e - mean) * (e - mean);
                    }
                    mise += second / r;
                    bias_sq += mean * mean;
                    variance += spread / r;
                }
                let n = n_ref as f64;
                ComponentMetrics {
                    mise: mise / n,
                    bias_sq: bias_sq / n,
                    variance: variance / n,
                    sample_mise: results.iter().map(|res| res.sample_mise[k]).sum::<f64>() / r,
                }
            })
            .collect(),
    )
}

/// Monte-Carlo study of several fit configurations on common datasets.
///
/// Replication `r` uses the dataset simulated with seed
/// `derive_seed(scenario.seed, r)`, whatever the configurations; a fit that
/// does not converge is counted and left out of the metrics.
pub fn mc_study_with(scenario: &SimConfig, plans: &[FitConfig], n_reps: usize, grid: &EvaluationGrid) -> Result<Vec<EvalReport>> {
    scenario.validate()?;
    if n_reps == 0 {
        return Err(Error::config("n_reps", "must be at least 1"));
    }
    if grid.covariate_dim() != scenario.d {
        return Err(Error::config(
            "grid",
            format!("grid has {} covariates, scenario has {}", grid.covariate_dim(), scenario.d),
        ));
    }
    for plan in plans {
        plan.validate(grid)?;
    }
    let reference = reference_covariates(scenario, REFERENCE_SIZE)?;
    let reps: Vec<Vec<Option<RepResult>>> = (0..n_reps)
        .into_par_iter()
        .map(|r| {
            let cfg = scenario.with_seed(derive_seed(scenario.seed, r as u64));
            let (records, truth) = simulate_dataset(&cfg)?;
            let dataset = validate_dataset(records, grid)?;
            plans
                .iter()
                .map(|plan| {
                    let fit = crate::fit(&dataset, plan)?;
                    Ok(fit.converged.then(|| summarize(&fit, &truth, &dataset, &reference)))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let digest = scenario.digest();
    Ok(plans
        .iter()
        .enumerate()
        .map(|(p, plan)| {
            let converged: Vec<&RepResult> = reps.iter().filter_map(|rep| rep[p].as_ref()).collect();
            EvalReport {
                estimator: plan.estimator,
                bandwidth: plan.bandwidth[0],
                n_reps,
                n_converged: converged.len(),
                scenario: digest.clone(),
                per_component: aggregate(&converged, scenario.d),
            }
        })
        .collect())
}

/// Monte-Carlo study of `estimators` at a common `bandwidth` with the
/// settings of [`mc_fit_config`].
pub fn mc_study(
    scenario: &SimConfig,
    estimators: &[Estimator],
    bandwidth: f64,
    n_reps: usize,
    grid: &EvaluationGrid,
) -> Result<Vec<EvalReport>> {
    let plans: Vec<FitConfig> = estimators.iter().map(|&e| mc_fit_config(e, bandwidth)).collect();
    mc_study_with(scenario, &plans, n_reps, grid)
}

/// MISE profile over candidate bandwidths.
#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthProfile {
    pub estimator: Estimator,
    /// One report per candidate, in the order given.
    pub reports: Vec<EvalReport>,
    /// Candidate minimizing the summed covariate MISE, `None` if every
    /// candidate is NA.
    pub best: Option<f64>,
}

impl BandwidthProfile {
    pub fn best_report(&self) -> Option<&EvalReport> {
        let best = self.best?;
        self.reports.iter().find(|r| r.bandwidth == best)
    }
}

/// Grid search over `candidates` with common random numbers, starting from
/// the settings in `template`.
pub fn bandwidth_search_with(
    scenario: &SimConfig,
    template: &FitConfig,
    candidates: &[f64],
    n_reps: usize,
    grid: &EvaluationGrid,
) -> Result<BandwidthProfile> {
    if candidates.len() < 2 {
        return Err(Error::config("bandwidths", "need at least two candidates"));
    }
    let plans: Vec<FitConfig> = candidates
        .iter()
        .map(|&h| FitConfig {
            bandwidth: vec![h],
            ..template.clone()
        })
        .collect();
    let reports = mc_study_with(scenario, &plans, n_reps, grid)?;
    let best = reports
        .iter()
        .filter(|r| !r.is_na())
        .min_by(|a, b| a.total_sample_mise().total_cmp(&b.total_sample_mise()))
        .map(|r| r.bandwidth);
    Ok(BandwidthProfile {
        estimator: template.estimator,
        reports,
        best,
    })
}

/// Grid search over `candidates` with the settings of [`mc_fit_config`].
pub fn bandwidth_search(
    scenario: &SimConfig,
    estimator: Estimator,
    candidates: &[f64],
    n_reps: usize,
    grid: &EvaluationGrid,
) -> Result<BandwidthProfile> {
    if candidates.is_empty() {
        return Err(Error::config("bandwidths", "need at least two candidates"));
    }
    bandwidth_search_with(scenario, &mc_fit_config(estimator, candidates[0]), candidates, n_reps, grid)
}
