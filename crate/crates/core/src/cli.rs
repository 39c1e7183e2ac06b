//! Batch commands behind the `hazard-sbf` binary.
//!
//! Every command reads a flat `key = value` configuration file, writes its
//! artifacts, and returns a summary. [`exit_code`] maps outcomes to process
//! exit codes: 0 ok, 1 input error, 2 configuration error, 3 non-convergence.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::evaluation::{bandwidth_search_with, mc_fit_config, mc_study_with, BandwidthProfile, EvalReport};
use crate::io::{read_csv, write_csv, write_fit, ConfigFile};
use crate::model::{validate_dataset, AdditiveFit, CovariateChannel, DimensionGrid, Estimator, EvaluationGrid, FitConfig, Norming, SurvivalRecord};
use crate::simulation::{pilot_horizon, simulate_dataset, SimConfig, COVARIATE_BOUND};

/// Grid points per dimension used by the simulation-based commands.
pub const DEFAULT_GRID_POINTS: usize = 101;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

/// Exit code for a failed command.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidConfig { .. } => EXIT_CONFIG,
        _ => EXIT_INPUT,
    }
}

/// Runs `f` on a thread pool of `threads` workers (0 = all cores).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::config("threads", e.to_string()))?;
    Ok(pool.install(f))
}

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn take_scenario(cfg: &mut ConfigFile) -> Result<SimConfig> {
    let mut sc = SimConfig {
        n: cfg.require("n")?,
        d: cfg.require("d")?,
        rho: cfg.take("rho")?.unwrap_or(0.5),
        gompertz_rate: 0.01,
        baseline_scale: 1.0,
        amplitude: 4.0,
        censor_scale_divisor: 1.75,
        horizon: 1.0,
        seed: cfg.take("seed")?.unwrap_or(1),
    };
    take_scenario_constants(cfg, &mut sc)?;
    let horizon: Option<f64> = cfg.take("horizon")?;
    sc.validate()?;
    sc.horizon = match horizon {
        Some(h) => h,
        None => pilot_horizon(&sc)?,
    };
    sc.validate()?;
    Ok(sc)
}

fn take_scenario_constants(cfg: &mut ConfigFile, sc: &mut SimConfig) -> Result<()> {
    if let Some(v) = cfg.take("gompertz_rate")? {
        sc.gompertz_rate = v;
    }
    if let Some(v) = cfg.take("baseline_scale")? {
        sc.baseline_scale = v;
    }
    if let Some(v) = cfg.take("amplitude")? {
        sc.amplitude = v;
    }
    if let Some(v) = cfg.take("censor_scale_divisor")? {
        sc.censor_scale_divisor = v;
    }
    Ok(())
}

/// Fit settings shared by the Monte-Carlo commands.
fn take_mc_settings(cfg: &mut ConfigFile, estimator: Estimator) -> Result<FitConfig> {
    let mut fc = mc_fit_config(estimator, 0.1);
    if let Some(v) = cfg.take("tolerance")? {
        fc.tolerance = v;
    }
    if let Some(v) = cfg.take("max_iterations")? {
        fc.max_iterations = v;
    }
    Ok(fc)
}

// ---------------------------------------------------------------------------
// simulate

/// Result of [`cmd_simulate`].
#[derive(Debug, Clone)]
pub struct SimulateSummary {
    pub scenario: SimConfig,
    pub records: usize,
    pub censoring_proportion: f64,
}

/// Simulates a dataset; writes the CSV to `out` and a digest to `<out>.digest`.
///
/// Keys: `n`, `d`, `rho`, `seed`, `horizon`, `gompertz_rate`,
/// `baseline_scale`, `amplitude`, `censor_scale_divisor`, `threads`.
pub fn cmd_simulate(config: &Path, out: &Path) -> Result<SimulateSummary> {
    let mut cfg = ConfigFile::read(config)?;
    let threads: usize = cfg.take("threads")?.unwrap_or(0);
    with_threads(threads, move || {
        let sc = take_scenario(&mut cfg)?;
        cfg.finish()?;
        let (records, _) = simulate_dataset(&sc)?;
        write_csv(out, &records)?;
        let censored = records.iter().filter(|r| !r.event).count();
        let summary = SimulateSummary {
            records: records.len(),
            censoring_proportion: censored as f64 / records.len() as f64,
            scenario: sc,
        };
        let digest = format!(
            "scenario = {}\nrecords = {}\nevents = {}\ncensoring_proportion = {}\n",
            summary.scenario.digest(),
            summary.records,
            records.len() - censored,
            summary.censoring_proportion
        );
        fs::write(sidecar(out, ".digest"), digest)?;
        Ok(summary)
    })?
}

// ---------------------------------------------------------------------------
// fit

fn broadcast(values: Option<Vec<f64>>, default: Vec<f64>, key: &str) -> Result<Vec<f64>> {
    match values {
        None => Ok(default),
        Some(v) if v.len() == 1 => Ok(vec![v[0]; default.len()]),
        Some(v) if v.len() == default.len() => Ok(v),
        Some(v) => Err(Error::config(key, format!("expected 1 or {} values, got {}", default.len(), v.len()))),
    }
}

/// Range of covariate `k` over the data, along the whole at-risk path.
fn data_range(records: &[SurvivalRecord], k: usize) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for r in records {
        let (a, b) = match r.covariates.get(k) {
            Some(CovariateChannel::Constant(v)) => (*v, *v),
            Some(CovariateChannel::TimeOffset(a)) => (a + r.entry_time, a + r.exit_time),
            None => continue,
        };
        lo = lo.min(a);
        hi = hi.max(b);
    }
    if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Fits an estimator to a CSV dataset and writes the fit file to `out`.
///
/// Keys: `estimator` (required), `bandwidth` (required, one value or one per
/// dimension), `norming`, `tolerance`, `tol_offset`, `max_iterations`,
/// `quadrature_order`, `grid_points`, `horizon`, `covariate_lo`,
/// `covariate_hi`, `threads`. The fit is written even when it did not
/// converge.
pub fn cmd_fit(dataset: &Path, config: &Path, out: &Path) -> Result<AdditiveFit> {
    let mut cfg = ConfigFile::read(config)?;
    let estimator: Estimator = cfg.require("estimator")?;
    let bandwidth: Vec<f64> = cfg.take_list("bandwidth")?.ok_or_else(|| Error::config("bandwidth", "missing"))?;
    let mut fc = FitConfig::new(estimator, 0.1);
    fc.bandwidth = bandwidth;
    if let Some(v) = cfg.take::<Norming>("norming")? {
        fc.norming = v;
    }
    if let Some(v) = cfg.take("tolerance")? {
        fc.tolerance = v;
    }
    if let Some(v) = cfg.take("tol_offset")? {
        fc.tol_offset = v;
    }
    if let Some(v) = cfg.take("max_iterations")? {
        fc.max_iterations = v;
    }
    if let Some(v) = cfg.take("quadrature_order")? {
        fc.quadrature_order = v;
    }
    let grid_points: Option<Vec<usize>> = cfg.take_list("grid_points")?;
    let horizon: Option<f64> = cfg.take("horizon")?;
    let lo: Option<Vec<f64>> = cfg.take_list("covariate_lo")?;
    let hi: Option<Vec<f64>> = cfg.take_list("covariate_hi")?;
    let threads: usize = cfg.take("threads")?.unwrap_or(0);
    cfg.finish()?;

    let records = read_csv(dataset)?;
    let d = records.first().map_or(0, |r| r.covariates.len());
    let horizon = horizon.unwrap_or_else(|| records.iter().map(|r| r.exit_time).fold(0.0, f64::max));
    let ranges: Vec<(f64, f64)> = (0..d).map(|k| data_range(&records, k)).collect();
    let lo = broadcast(lo, ranges.iter().map(|r| r.0).collect(), "covariate_lo")?;
    let hi = broadcast(hi, ranges.iter().map(|r| r.1).collect(), "covariate_hi")?;
    let points: Vec<usize> = match grid_points {
        None => vec![41; d + 1],
        Some(v) if v.len() == 1 => vec![v[0]; d + 1],
        Some(v) if v.len() == d + 1 => v,
        Some(v) => return Err(Error::config("grid_points", format!("expected 1 or {} values, got {}", d + 1, v.len()))),
    };
    let mut dims = vec![DimensionGrid::new(0.0, horizon, points[0]).map_err(|e| Error::config("horizon", e.to_string()))?];
    for k in 0..d {
        dims.push(DimensionGrid::new(lo[k], hi[k], points[k + 1]).map_err(|e| Error::config("covariate_lo", e.to_string()))?);
    }
    let grid = EvaluationGrid::new(dims)?;
    fc.validate(&grid)?;
    let ds = validate_dataset(records, &grid)?;
    let fit = with_threads(threads, || crate::fit(&ds, &fc))??;
    write_fit(out, &fit)?;
    Ok(fit)
}

// ---------------------------------------------------------------------------
// mc-study

const NA: &str = "NA";

/// Header of the Monte-Carlo table; metrics refer to covariate 1.
pub const MC_TABLE_HEADER: &str = "d,n,rho,estimator,bandwidth,n_reps,n_converged,sample_mise,mise,bias_sq,variance";

/// One table row in the [`MC_TABLE_HEADER`] layout.
pub fn mc_table_row(sc: &SimConfig, r: &EvalReport) -> String {
    let mut row = format!(
        "{},{},{},{},{},{},{}",
        sc.d,
        sc.n,
        sc.rho,
        r.estimator.label(),
        r.bandwidth,
        r.n_reps,
        r.n_converged
    );
    match r.component(1) {
        Some(c) => {
            let _ = write!(row, ",{},{},{},{}", c.sample_mise, c.mise, c.bias_sq, c.variance);
        }
        None => {
            for _ in 0..4 {
                let _ = write!(row, ",{NA}");
            }
        }
    }
    row
}

/// Runs a scenario × bandwidth × estimator matrix and writes the table to `out`.
///
/// Keys: `n`, `d`, `rho` (each a list), `seed`, `estimators`, `bandwidths`,
/// `n_reps`, `grid_points`, `tolerance`, `max_iterations`, `gompertz_rate`,
/// `baseline_scale`, `amplitude`, `censor_scale_divisor`, `threads`.
pub fn cmd_mc_study(config: &Path, out: &Path) -> Result<Vec<(SimConfig, EvalReport)>> {
    let mut cfg = ConfigFile::read(config)?;
    let ns: Vec<usize> = cfg.take_list("n")?.ok_or_else(|| Error::config("n", "missing"))?;
    let ds: Vec<usize> = cfg.take_list("d")?.ok_or_else(|| Error::config("d", "missing"))?;
    let rhos: Vec<f64> = cfg.take_list("rho")?.unwrap_or_else(|| vec![0.5]);
    let seed: u64 = cfg.take("seed")?.unwrap_or(1);
    let estimators: Vec<Estimator> = cfg.take_list("estimators")?.ok_or_else(|| Error::config("estimators", "missing"))?;
    let bandwidths: Vec<f64> = cfg.take_list("bandwidths")?.ok_or_else(|| Error::config("bandwidths", "missing"))?;
    let n_reps: usize = cfg.take("n_reps")?.unwrap_or(100);
    let grid_points: usize = cfg.take("grid_points")?.unwrap_or(DEFAULT_GRID_POINTS);
    let template = take_mc_settings(&mut cfg, estimators[0])?;
    let mut constants = SimConfig {
        n: 1,
        d: 1,
        rho: 0.0,
        gompertz_rate: 0.01,
        baseline_scale: 1.0,
        amplitude: 4.0,
        censor_scale_divisor: 1.75,
        horizon: 1.0,
        seed,
    };
    take_scenario_constants(&mut cfg, &mut constants)?;
    let threads: usize = cfg.take("threads")?.unwrap_or(0);
    cfg.finish()?;

    with_threads(threads, || {
        let mut rows = Vec::new();
        let mut text = String::from(MC_TABLE_HEADER);
        text.push('\n');
        for &d in &ds {
            for &n in &ns {
                for &rho in &rhos {
                    let mut sc = SimConfig { n, d, rho, ..constants.clone() };
                    sc.validate()?;
                    sc.horizon = pilot_horizon(&sc)?;
                    let grid = sc.grid(grid_points)?;
                    let plans: Vec<FitConfig> = bandwidths
                        .iter()
                        .flat_map(|&h| {
                            let template = &template;
                            estimators.iter().map(move |&e| FitConfig {
                                estimator: e,
                                bandwidth: vec![h],
                                ..template.clone()
                            })
                        })
                        .collect();
                    for r in mc_study_with(&sc, &plans, n_reps, &grid)? {
                        text.push_str(&mc_table_row(&sc, &r));
                        text.push('\n');
                        rows.push((sc.clone(), r));
                    }
                }
            }
        }
        fs::write(out, text)?;
        Ok(rows)
    })?
}

// ---------------------------------------------------------------------------
// bandwidth-search

/// Header of the bandwidth profile file.
pub const PROFILE_HEADER: &str = "bandwidth,n_reps,n_converged,total_sample_mise,sample_mise_1,mise_1,bias_sq_1,variance_1";

/// Formats a profile in the [`PROFILE_HEADER`] layout.
pub fn format_profile(profile: &BandwidthProfile) -> String {
    let mut text = String::from(PROFILE_HEADER);
    text.push('\n');
    for r in &profile.reports {
        let _ = write!(text, "{},{},{}", r.bandwidth, r.n_reps, r.n_converged);
        match r.component(1) {
            Some(c) => {
                let _ = write!(
                    text,
                    ",{},{},{},{},{}",
                    r.total_sample_mise(),
                    c.sample_mise,
                    c.mise,
                    c.bias_sq,
                    c.variance
                );
            }
            None => {
                for _ in 0..5 {
                    let _ = write!(text, ",{NA}");
                }
            }
        }
        text.push('\n');
    }
    text
}

/// Searches candidate bandwidths; writes the profile to `out` and the
/// selection to `<out>.selected`.
///
/// Keys: `n`, `d`, `rho`, `seed`, `horizon`, `estimator`, `bandwidths`,
/// `n_reps`, `grid_points`, `tolerance`, `max_iterations`, `threads`, and the
/// scenario constants of [`cmd_simulate`].
pub fn cmd_bandwidth_search(config: &Path, out: &Path) -> Result<BandwidthProfile> {
    let mut cfg = ConfigFile::read(config)?;
    let threads: usize = cfg.take("threads")?.unwrap_or(0);
    with_threads(threads, move || {
        let sc = take_scenario(&mut cfg)?;
        let estimator: Estimator = cfg.require("estimator")?;
        let candidates: Vec<f64> = cfg.take_list("bandwidths")?.ok_or_else(|| Error::config("bandwidths", "missing"))?;
        let n_reps: usize = cfg.take("n_reps")?.unwrap_or(20);
        let grid_points: usize = cfg.take("grid_points")?.unwrap_or(DEFAULT_GRID_POINTS);
        let template = take_mc_settings(&mut cfg, estimator)?;
        cfg.finish()?;
        let grid = sc.grid(grid_points)?;
        let profile = bandwidth_search_with(&sc, &template, &candidates, n_reps, &grid)?;
        fs::write(out, format_profile(&profile))?;
        let selected = match profile.best {
            Some(h) => format!("estimator = {}\nbandwidth = {h}\n", estimator.label()),
            None => format!("estimator = {}\nbandwidth = {NA}\n", estimator.label()),
        };
        fs::write(sidecar(out, ".selected"), selected)?;
        Ok(profile)
    })?
}

/// Covariate domain used by the simulation commands.
pub fn simulation_domain() -> (f64, f64) {
    (-COVARIATE_BOUND, COVARIATE_BOUND)
}
