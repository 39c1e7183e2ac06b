//! Synthetic survival data with a Gompertz–Makeham baseline and additive
//! sinusoidal covariate effects.
//!
//! The hazard of a subject with covariates `z` is
//! `a·e^{b t} + (A/√d) Σ_k (-1)^{k+1} sin(π z_k)`; covariates are arctan
//! transforms of equicorrelated Gaussians, redrawn until the covariate part
//! is positive. Censoring times are independent copies of the survival time
//! divided by a constant.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{EvaluationGrid, SurvivalRecord};

/// Half-width of the covariate range `(-1.25, 1.25)`.
pub const COVARIATE_BOUND: f64 = 1.25;
/// Redraw budget per subject for the positivity condition.
pub const MAX_REJECTIONS: usize = 100_000;
const PILOT_SIZE: usize = 20_000;
const HORIZON_QUANTILE: f64 = 0.99;

/// Scenario parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub d: usize,
    pub rho: f64,
    /// `b` in the baseline `a·e^{b t}`; zero gives a constant baseline.
    pub gompertz_rate: f64,
    /// `a` in the baseline `a·e^{b t}`; zero gives exponential survival.
    pub baseline_scale: f64,
    /// `A` in the covariate amplitude `A/√d`; zero gives a hazard that does
    /// not depend on the covariates.
    pub amplitude: f64,
    pub censor_scale_divisor: f64,
    /// Administrative end of follow-up.
    pub horizon: f64,
    pub seed: u64,
}

impl SimConfig {
    /// Scenario with the default constants and the horizon set to the 99th
    /// percentile of the survival time.
    pub fn new(n: usize, d: usize, rho: f64, seed: u64) -> Result<Self> {
        let mut cfg = SimConfig {
            n,
            d,
            rho,
            gompertz_rate: 0.01,
            baseline_scale: 1.0,
            amplitude: 4.0,
            censor_scale_divisor: 1.75,
            horizon: f64::INFINITY,
            seed,
        };
        cfg.validate()?;
        cfg.horizon = pilot_horizon(&cfg)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::config("n", "must be at least 1"));
        }
        if self.d == 0 {
            return Err(Error::config("d", "must be at least 1"));
        }
        if !(self.rho.abs() < 1.0) {
            return Err(Error::config("rho", format!("must lie in (-1, 1), got {}", self.rho)));
        }
        if self.d > 1 && self.rho <= -1.0 / (self.d as f64 - 1.0) {
            return Err(Error::config(
                "rho",
                format!("{} makes the equicorrelation matrix singular for d = {}", self.rho, self.d),
            ));
        }
        if !(self.gompertz_rate >= 0.0) {
            return Err(Error::config("gompertz_rate", "must be non-negative"));
        }
        if !(self.baseline_scale >= 0.0) {
            return Err(Error::config("baseline_scale", "must be non-negative"));
        }
        if !(self.amplitude >= 0.0) {
            return Err(Error::config("amplitude", "must be non-negative"));
        }
        if self.amplitude == 0.0 && self.baseline_scale == 0.0 {
            return Err(Error::config("baseline_scale", "must be positive when amplitude is 0"));
        }
        if !(self.censor_scale_divisor > 0.0) {
            return Err(Error::config("censor_scale_divisor", "must be positive"));
        }
        if !(self.horizon > 0.0) {
            return Err(Error::config("horizon", "must be positive"));
        }
        Ok(())
    }

    pub fn truth(&self) -> TrueHazard {
        TrueHazard {
            d: self.d,
            amplitude: self.amplitude,
            gompertz_rate: self.gompertz_rate,
            baseline_scale: self.baseline_scale,
        }
    }

    /// Evaluation grid covering `[0, horizon] × (-1.25, 1.25)^d`.
    pub fn grid(&self, n_points: usize) -> Result<EvaluationGrid> {
        EvaluationGrid::uniform(self.horizon, -COVARIATE_BOUND, COVARIATE_BOUND, self.d, n_points)
    }

    /// Short text identifying the scenario.
    pub fn digest(&self) -> String {
        format!(
            "n={} d={} rho={} gompertz_rate={} baseline_scale={} amplitude={} censor_scale_divisor={} horizon={:.6} seed={}",
            self.n,
            self.d,
            self.rho,
            self.gompertz_rate,
            self.baseline_scale,
            self.amplitude,
            self.censor_scale_divisor,
            self.horizon,
            self.seed
        )
    }

    /// Same scenario with a different seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        SimConfig { seed, ..self.clone() }
    }
}

/// The data-generating hazard.
#[derive(Debug, Clone, PartialEq)]
pub struct TrueHazard {
    pub d: usize,
    pub amplitude: f64,
    pub gompertz_rate: f64,
    pub baseline_scale: f64,
}

impl TrueHazard {
    pub fn baseline(&self, t: f64) -> f64 {
        self.baseline_scale * (self.gompertz_rate * t).exp()
    }

    /// Component `k = 1..=d` at `z`.
    pub fn component(&self, k: usize, z: f64) -> f64 {
        assert!(k >= 1 && k <= self.d, "covariate components are numbered 1..=d");
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        sign * self.amplitude / (self.d as f64).sqrt() * (std::f64::consts::PI * z).sin()
    }

    /// Component `k` of `x = (t, z_1, ..., z_d)`; `k = 0` is the baseline.
    pub fn dimension_value(&self, k: usize, x: f64) -> f64 {
        if k == 0 {
            self.baseline(x)
        } else {
            self.component(k, x)
        }
    }

    /// Covariate part `c(z) = Σ_k α_k(z_k)`.
    pub fn covariate_effect(&self, z: &[f64]) -> f64 {
        z.iter().enumerate().map(|(i, &v)| self.component(i + 1, v)).sum()
    }

    pub fn hazard(&self, t: f64, z: &[f64]) -> f64 {
        self.baseline(t) + self.covariate_effect(z)
    }

    /// `Λ(t | z) = c(z) t + a (e^{b t} - 1)/b`, or `(c(z) + a) t` when `b = 0`.
    pub fn cumulative(&self, t: f64, z: &[f64]) -> f64 {
        let baseline = if self.gompertz_rate == 0.0 {
            self.baseline_scale * t
        } else {
            self.baseline_scale * (self.gompertz_rate * t).exp_m1() / self.gompertz_rate
        };
        self.covariate_effect(z) * t + baseline
    }
}

/// Lower Cholesky factor of the equicorrelation matrix.
fn equicorrelation_factor(d: usize, rho: f64) -> Result<DMatrix<f64>> {
    let sigma = DMatrix::from_fn(d, d, |i, j| if i == j { 1.0 } else { rho });
    sigma
        .cholesky()
        .map(|c| c.l())
        .ok_or_else(|| Error::config("rho", "equicorrelation matrix is not positive definite"))
}

/// Latent Gaussian vector with unit variances and correlation `rho`.
fn draw_latent<R: Rng>(config: &SimConfig, factor: Option<&DMatrix<f64>>, rng: &mut R) -> Vec<f64> {
    let d = config.d;
    match factor {
        None => {
            let g0: f64 = rng.sample(StandardNormal);
            let (a, b) = (config.rho.sqrt(), (1.0 - config.rho).sqrt());
            (0..d)
                .map(|_| {
                    let g: f64 = rng.sample(StandardNormal);
                    a * g0 + b * g
                })
                .collect()
        }
        Some(l) => {
            let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            (0..d).map(|i| (0..=i).map(|j| l[(i, j)] * g[j]).sum()).collect()
        }
    }
}

fn latent_factor(config: &SimConfig) -> Result<Option<DMatrix<f64>>> {
    if config.rho >= 0.0 {
        Ok(None)
    } else {
        equicorrelation_factor(config.d, config.rho).map(Some)
    }
}

/// Equicorrelated Gaussian draws before the arctan map, for diagnostics.
pub fn draw_latent_gaussians<R: Rng>(config: &SimConfig, rng: &mut R) -> Result<Vec<f64>> {
    let factor = latent_factor(config)?;
    Ok(draw_latent(config, factor.as_ref(), rng))
}

/// Covariate vector in `(-1.25, 1.25)^d` with a positive covariate effect
/// (any draw is accepted when the amplitude is zero).
pub fn draw_covariates<R: Rng>(config: &SimConfig, rng: &mut R) -> Result<Vec<f64>> {
    let factor = latent_factor(config)?;
    draw_covariates_with(config, &config.truth(), factor.as_ref(), rng)
}

fn draw_covariates_with<R: Rng>(config: &SimConfig, truth: &TrueHazard, factor: Option<&DMatrix<f64>>, rng: &mut R) -> Result<Vec<f64>> {
    let scale = 2.0 * COVARIATE_BOUND / std::f64::consts::PI;
    for _ in 0..MAX_REJECTIONS {
        let z: Vec<f64> = draw_latent(config, factor, rng).into_iter().map(|g| scale * g.atan()).collect();
        // with no covariate effect the baseline alone keeps the hazard positive
        if truth.amplitude == 0.0 || truth.covariate_effect(&z) > 0.0 {
            return Ok(z);
        }
    }
    Err(Error::Simulation(format!(
        "no covariate draw with positive hazard after {MAX_REJECTIONS} tries"
    )))
}

/// Solves `Λ(t | z) = target` for `t`.
pub fn invert_cumulative(truth: &TrueHazard, z: &[f64], target: f64) -> f64 {
    if target <= 0.0 {
        return 0.0;
    }
    let mut hi = 1.0;
    while truth.cumulative(hi, z) < target {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if truth.cumulative(mid, z) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..20 {
        let f = truth.cumulative(t, z) - target;
        if f.abs() <= 1e-12 * target.max(1.0) {
            break;
        }
        let step = f / truth.hazard(t, z);
        let next = t - step;
        if !(next > 0.0) || !next.is_finite() {
            break;
        }
        t = next;
    }
    t
}

/// Survival time given covariates, by inversion of the cumulative hazard.
pub fn sample_survival_time<R: Rng>(z: &[f64], truth: &TrueHazard, rng: &mut R) -> f64 {
    // 1 - U lies in (0, 1], so the log is finite
    let u: f64 = 1.0 - rng.random::<f64>();
    invert_cumulative(truth, z, -u.ln())
}

/// Random stream for subject `index` of the dataset with `seed`.
pub fn subject_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Seed of replication `rep` derived from a scenario seed.
pub fn derive_seed(seed: u64, rep: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ rep.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn simulate_subject(config: &SimConfig, truth: &TrueHazard, factor: Option<&DMatrix<f64>>, index: usize) -> Result<SurvivalRecord> {
    let mut rng = subject_rng(config.seed, index as u64);
    let z = draw_covariates_with(config, truth, factor, &mut rng)?;
    let t = sample_survival_time(&z, truth, &mut rng);
    let c = sample_survival_time(&z, truth, &mut rng) / config.censor_scale_divisor;
    let exit = t.min(c).min(config.horizon);
    let event = t <= c && t <= config.horizon;
    Ok(SurvivalRecord::with_constants(0.0, exit, event, &z))
}

/// Draws `config.n` records; deterministic in `config.seed`.
pub fn simulate_dataset(config: &SimConfig) -> Result<(Vec<SurvivalRecord>, TrueHazard)> {
    config.validate()?;
    let truth = config.truth();
    let factor = latent_factor(config)?;
    let records = (0..config.n)
        .into_par_iter()
        .map(|i| simulate_subject(config, &truth, factor.as_ref(), i))
        .collect::<Result<Vec<_>>>()?;
    Ok((records, truth))
}

/// Covariate sample of size `n` from the scenario's covariate law, on its own
/// stream so it does not depend on any dataset seed.
pub fn reference_covariates(config: &SimConfig, n: usize) -> Result<Vec<Vec<f64>>> {
    let truth = config.truth();
    let factor = latent_factor(config)?;
    let seed = derive_seed(config.seed, u64::MAX);
    (0..n)
        .into_par_iter()
        .map(|i| draw_covariates_with(config, &truth, factor.as_ref(), &mut subject_rng(seed, i as u64)))
        .collect()
}

/// 99th percentile of the uncensored survival time under the scenario,
/// from a fixed-size pilot sample seeded by the scenario parameters.
pub fn pilot_horizon(config: &SimConfig) -> Result<f64> {
    let truth = config.truth();
    let factor = latent_factor(config)?;
    let seed = derive_seed(config.d as u64, config.rho.to_bits());
    let mut times = (0..PILOT_SIZE)
        .into_par_iter()
        .map(|i| {
            let mut rng = subject_rng(seed, i as u64);
            let z = draw_covariates_with(config, &truth, factor.as_ref(), &mut rng)?;
            Ok(sample_survival_time(&z, &truth, &mut rng))
        })
        .collect::<Result<Vec<f64>>>()?;
    times.sort_by(f64::total_cmp);
    let idx = ((HORIZON_QUANTILE * PILOT_SIZE as f64).ceil() as usize).min(PILOT_SIZE) - 1;
    Ok(times[idx])
}
