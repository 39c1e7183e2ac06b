//! Smooth backfitting estimators for additive hazard models.
//!
//! The hazard of a subject at time `t` with covariates `z` is modelled as
//! `α(t, z) = α* + α_0(t) + Σ_k α_k(z_k)`. Components are estimated on an
//! [`EvaluationGrid`] by local constant or local linear smooth backfitting,
//! with classical backfitting and a dense projection solver as baselines.

pub mod classic;
pub mod cli;
pub mod design;
pub mod error;
pub mod evaluation;
pub mod io;
pub mod iterate;
pub mod local_constant;
pub mod local_linear;
pub mod kernel;
pub mod marginals;
pub mod model;
pub mod oracle;
pub mod quadrature;
pub mod repro;
pub mod simulation;

pub use error::{Error, Result};
pub use kernel::{boundary_kernel, kernel_moment_integral, kernel_value, BoundaryKernel, KernelFamily, KernelSpec};
pub use marginals::{build_lc_marginals, build_ll_marginals, LcMarginals, LlMarginals, PairTables};
pub use model::{
    evaluate_fit, validate_dataset, AdditiveFit, CovariateChannel, Dataset, DimensionGrid, Estimator,
    EvaluationGrid, FitConfig, Norming, SurvivalRecord, ValidationReport,
};
pub use classic::{classic_lc_fit, classic_ll_fit};
pub use local_constant::{lc_backfit, lc_backfit_update, lc_fit};
pub use local_linear::{ll_backfit, ll_backfit_update, ll_first_order_residuals, ll_fit};
pub use oracle::{build_full_pilot, oracle_solve, FullGridPilot};
pub use simulation::{simulate_dataset, SimConfig, TrueHazard};
pub use evaluation::{bandwidth_search, component_mise, mc_study, BandwidthProfile, ComponentMetrics, EvalReport};

/// Fits `config.estimator` to `dataset`.
pub fn fit(dataset: &Dataset, config: &FitConfig) -> Result<AdditiveFit> {
    match config.estimator {
        Estimator::LocalConstantSbf => lc_fit(dataset, config),
        Estimator::LocalLinearSbf => ll_fit(dataset, config),
        Estimator::LocalConstantClassicBf => classic_lc_fit(dataset, config),
        Estimator::LocalLinearClassicBf => classic_ll_fit(dataset, config),
    }
}
