//! Table-1 style Monte-Carlo reproduction and fit timing benchmarks.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use crate::cli::{format_profile, mc_table_row, DEFAULT_GRID_POINTS, MC_TABLE_HEADER};
use crate::error::{Error, Result};
use crate::evaluation::{bandwidth_search_with, mc_fit_config, mc_study_with, BandwidthProfile, EvalReport};
use crate::local_constant::lc_backfit;
use crate::local_linear::ll_backfit;
use crate::marginals::{build_lc_marginals, build_ll_marginals};
use crate::model::{validate_dataset, Estimator, FitConfig};
use crate::simulation::{derive_seed, simulate_dataset, SimConfig};

/// Size of a reproduction run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReproScale {
    /// `d = 3`, `n = 500`, 10 replications.
    Smoke,
    /// `d ∈ {3, 10}`, `n ∈ {500, 5000}`, 100 replications.
    Desk,
    /// `d ∈ {3, 10, 30}`, `n ∈ {500, 5000}`, 500 replications.
    Full,
}

impl ReproScale {
    pub fn label(self) -> &'static str {
        match self {
            ReproScale::Smoke => "smoke",
            ReproScale::Desk => "desk",
            ReproScale::Full => "full",
        }
    }

    /// `(d, n)` cells of the table.
    pub fn cells(self) -> Vec<(usize, usize)> {
        let (ds, ns): (&[usize], &[usize]) = match self {
            ReproScale::Smoke => (&[3], &[500]),
            ReproScale::Desk => (&[3, 10], &[500, 5000]),
            ReproScale::Full => (&[3, 10, 30], &[500, 5000]),
        };
        ds.iter().flat_map(|&d| ns.iter().map(move |&n| (d, n))).collect()
    }

    pub fn n_reps(self) -> usize {
        match self {
            ReproScale::Smoke => 10,
            ReproScale::Desk => 100,
            ReproScale::Full => 500,
        }
    }

    /// Replications per candidate in the bandwidth search.
    pub fn search_reps(self) -> usize {
        match self {
            ReproScale::Smoke => 5,
            ReproScale::Desk => 20,
            ReproScale::Full => 50,
        }
    }
}

impl FromStr for ReproScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "smoke" => Ok(ReproScale::Smoke),
            "desk" => Ok(ReproScale::Desk),
            "full" => Ok(ReproScale::Full),
            other => Err(Error::config("scale", format!("expected smoke, desk or full, got `{other}`"))),
        }
    }
}

/// Candidate bandwidths searched for a `(d, n)` cell.
pub fn default_candidates(d: usize, n: usize) -> Vec<f64> {
    if n <= 1000 {
        vec![0.15, 0.2, 0.25, 0.3, 0.4, 0.5]
    } else if d < 10 {
        vec![0.08, 0.1, 0.12, 0.15, 0.2, 0.25]
    } else {
        vec![0.15, 0.2, 0.25, 0.3, 0.35, 0.4]
    }
}

/// Outcome of one estimator in one table cell.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub estimator: Estimator,
    pub profile: BandwidthProfile,
    /// Study at the selected bandwidth; `None` when every candidate was NA.
    pub report: Option<EvalReport>,
}

impl CellResult {
    /// Component-1 MISE at the selected bandwidth, infinite for NA.
    pub fn mise(&self) -> f64 {
        self.report
            .as_ref()
            .and_then(|r| r.component(1))
            .map_or(f64::INFINITY, |c| c.sample_mise)
    }
}

/// Bandwidth search followed by a Monte-Carlo study at the selected
/// bandwidth, for each estimator. The search runs on its own seed so the
/// selection and the final study use different datasets.
pub fn table1_cell(
    scenario: &SimConfig,
    estimators: &[Estimator],
    candidates: &[f64],
    search_reps: usize,
    n_reps: usize,
    grid_points: usize,
) -> Result<Vec<CellResult>> {
    let grid = scenario.grid(grid_points)?;
    let search_scenario = scenario.with_seed(derive_seed(scenario.seed, 1 << 40));
    estimators
        .iter()
        .map(|&e| {
            let template = mc_fit_config(e, candidates[0]);
            let profile = bandwidth_search_with(&search_scenario, &template, candidates, search_reps, &grid)?;
            let report = match profile.best {
                None => None,
                Some(h) => {
                    let plan = FitConfig {
                        bandwidth: vec![h],
                        ..template
                    };
                    mc_study_with(scenario, &[plan], n_reps, &grid)?.pop()
                }
            };
            Ok(CellResult {
                estimator: e,
                profile,
                report,
            })
        })
        .collect()
}

/// One acceptance check of a reproduction run.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub check: String,
    pub measured: String,
    pub expected: String,
    pub pass: bool,
}

fn band(check: &str, value: f64, lo: f64, hi: f64) -> Verdict {
    Verdict {
        check: check.to_string(),
        measured: format!("{value:.4}"),
        expected: format!("[{lo}, {hi}]"),
        pass: value >= lo && value <= hi,
    }
}

fn ordering(check: &str, cells: &[&CellResult]) -> Verdict {
    let values: Vec<f64> = cells.iter().map(|c| c.mise()).collect();
    Verdict {
        check: check.to_string(),
        measured: cells
            .iter()
            .zip(&values)
            .map(|(c, v)| format!("{}={v:.4}", c.estimator.label()))
            .collect::<Vec<_>>()
            .join(" "),
        expected: cells.iter().map(|c| c.estimator.label()).collect::<Vec<_>>().join(" < "),
        pass: values.windows(2).all(|w| w[0] < w[1]),
    }
}

/// Acceptance checks that apply to the cell `(d, n)`.
pub fn cell_verdicts(d: usize, n: usize, results: &[CellResult]) -> Vec<Verdict> {
    let get = |e: Estimator| results.iter().find(|r| r.estimator == e);
    let ll = get(Estimator::LocalLinearSbf);
    let lc = get(Estimator::LocalConstantSbf);
    let llbf = get(Estimator::LocalLinearClassicBf);
    let lcbf = get(Estimator::LocalConstantClassicBf);
    let mut out = Vec::new();
    match (d, n) {
        (3, 5000) => {
            if let Some(r) = ll {
                out.push(band("d3_n5000_ll_sbf_mise", r.mise(), 0.021, 0.046));
            }
            if let Some(r) = lc {
                out.push(band("d3_n5000_lc_sbf_mise", r.mise(), 0.035, 0.075));
            }
            if let (Some(a), Some(b), Some(c), Some(e)) = (ll, lc, lcbf, llbf) {
                out.push(ordering("d3_n5000_ordering", &[a, b, c, e]));
            }
        }
        (3, 500) => {
            if let Some(r) = ll {
                out.push(band("d3_n500_ll_sbf_mise", r.mise(), 0.15, 0.40));
            }
            if let Some(r) = lc {
                out.push(band("d3_n500_lc_sbf_mise", r.mise(), 0.18, 0.45));
            }
            if let Some(r) = llbf {
                let v = r.mise();
                out.push(Verdict {
                    check: "d3_n500_ll_bf_blowup".into(),
                    measured: format!("{v:.4}"),
                    expected: "> 5".into(),
                    pass: v > 5.0,
                });
            }
            if let (Some(a), Some(b)) = (ll, llbf) {
                out.push(ordering("d3_n500_ll_sbf_below_ll_bf", &[a, b]));
            }
        }
        (10, 5000) => {
            if let Some(r) = ll {
                out.push(band("d10_n5000_ll_sbf_mise", r.mise(), 0.013, 0.030));
            }
            if let (Some(a), Some(b)) = (ll, lc) {
                out.push(ordering("d10_n5000_ll_sbf_below_lc_sbf", &[a, b]));
            }
        }
        (30, 500) => {
            for r in [llbf, lcbf].into_iter().flatten() {
                let na = r.report.as_ref().is_none_or(|x| x.is_na());
                out.push(Verdict {
                    check: format!("d30_n500_{}_na", r.estimator.label().to_ascii_lowercase().replace('-', "_")),
                    measured: if na { "NA".into() } else { format!("{:.4}", r.mise()) },
                    expected: "NA".into(),
                    pass: na,
                });
            }
        }
        _ => {}
    }
    out
}

/// Files written by [`repro_table1`].
#[derive(Debug, Clone)]
pub struct ReproOutput {
    pub table: PathBuf,
    pub profiles: PathBuf,
    pub verdicts: PathBuf,
    pub checks: Vec<Verdict>,
}

/// Runs the reproduction at `scale` and writes the table, the bandwidth
/// profiles and the verdict file into `out_dir`.
pub fn repro_table1(scale: ReproScale, out_dir: &Path, seed: u64) -> Result<ReproOutput> {
    fs::create_dir_all(out_dir)?;
    let mut table = String::from(MC_TABLE_HEADER);
    table.push('\n');
    let mut profiles = String::new();
    let mut checks = Vec::new();
    for (d, n) in scale.cells() {
        let sc = SimConfig::new(n, d, 0.5, seed)?;
        let results = table1_cell(
            &sc,
            &Estimator::ALL,
            &default_candidates(d, n),
            scale.search_reps(),
            scale.n_reps(),
            DEFAULT_GRID_POINTS,
        )?;
        for r in &results {
            match &r.report {
                Some(rep) => table.push_str(&mc_table_row(&sc, rep)),
                None => {
                    let _ = write!(table, "{},{},{},{},NA,{},0,NA,NA,NA,NA", d, n, sc.rho, r.estimator.label(), scale.n_reps());
                }
            }
            table.push('\n');
            let _ = writeln!(profiles, "# d = {d}, n = {n}, estimator = {}", r.estimator.label());
            profiles.push_str(&format_profile(&r.profile));
        }
        checks.extend(cell_verdicts(d, n, &results));
    }
    let label = scale.label();
    let out = ReproOutput {
        table: out_dir.join(format!("table1_{label}.csv")),
        profiles: out_dir.join(format!("profiles_{label}.txt")),
        verdicts: out_dir.join(format!("verdicts_{label}.csv")),
        checks,
    };
    fs::write(&out.table, table)?;
    fs::write(&out.profiles, profiles)?;
    let mut v = String::from("check,measured,expected,verdict\n");
    for c in &out.checks {
        let _ = writeln!(v, "{},{},\"{}\",{}", c.check, c.measured, c.expected, if c.pass { "PASS" } else { "FAIL" });
    }
    fs::write(&out.verdicts, v)?;
    Ok(out)
}

// ---------------------------------------------------------------------------
// Benchmarks

/// Wall-clock timing of one smooth backfitting fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitTiming {
    pub estimator: Estimator,
    pub n: usize,
    pub d: usize,
    pub grid_points: usize,
    pub threads: usize,
    pub marginal_secs: f64,
    pub sweeps: usize,
    pub sweep_secs: f64,
    pub total_secs: f64,
}

impl FitTiming {
    pub const HEADER: &'static str = "estimator,n,d,grid_points,threads,marginal_secs,sweeps,per_sweep_secs,total_secs";

    pub fn per_sweep_secs(&self) -> f64 {
        self.sweep_secs / self.sweeps.max(1) as f64
    }

    pub fn row(&self) -> String {
        format!(
            "{},{},{},{},{},{:.6},{},{:.6e},{:.6}",
            self.estimator.label(),
            self.n,
            self.d,
            self.grid_points,
            self.threads,
            self.marginal_secs,
            self.sweeps,
            self.per_sweep_secs(),
            self.total_secs
        )
    }
}

/// Times marginal construction and backfitting sweeps for one simulated
/// dataset. `estimator` must be one of the smooth backfitting estimators.
pub fn bench_fit(estimator: Estimator, n: usize, d: usize, grid_points: usize, bandwidth: f64, seed: u64) -> Result<FitTiming> {
    let sc = SimConfig::new(n, d, 0.5, seed)?;
    let grid = sc.grid(grid_points)?;
    let (records, _) = simulate_dataset(&sc)?;
    let ds = validate_dataset(records, &grid)?;
    let config = mc_fit_config(estimator, bandwidth);
    let start = Instant::now();
    let (marginal_secs, fit) = match estimator {
        Estimator::LocalConstantSbf => {
            let m = build_lc_marginals(&ds, &config)?;
            let t = start.elapsed().as_secs_f64();
            (t, lc_backfit(&m, &config))
        }
        Estimator::LocalLinearSbf => {
            let m = build_ll_marginals(&ds, &config)?;
            let t = start.elapsed().as_secs_f64();
            (t, ll_backfit(&m, &config))
        }
        other => {
            return Err(Error::config(
                "estimator",
                format!("{other} has no marginal tables to benchmark"),
            ))
        }
    };
    let total_secs = start.elapsed().as_secs_f64();
    Ok(FitTiming {
        estimator,
        n,
        d,
        grid_points,
        threads: rayon::current_num_threads(),
        marginal_secs,
        sweeps: fit.iterations_used,
        sweep_secs: total_secs - marginal_secs,
        total_secs,
    })
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / lx.len() as f64;
    let my = ly.iter().sum::<f64>() / ly.len() as f64;
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    num / den
}

/// Writes timings in the [`FitTiming::HEADER`] layout.
pub fn write_timings(path: &Path, timings: &[FitTiming]) -> Result<()> {
    let mut text = String::from(FitTiming::HEADER);
    text.push('\n');
    for t in timings {
        text.push_str(&t.row());
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}
