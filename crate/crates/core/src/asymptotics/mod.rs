//! Covariance of the limit process, the asymptotic variance `σ²`, draws of
//! the limit functional, and rate arithmetic for dependent data.

mod admissibility;
mod covariance;
mod sampler;
mod variance;

pub use admissibility::{admissibility, rate_comparison, AdmissibilityReport, Condition, RateComparison};
pub use covariance::{
    brownian_bridge_cov, default_lags_analytic, default_lags_path, longrun_cov, longrun_cov_from_path, min_eigenvalue,
    psd_repair, CovarianceKind, CovarianceModel, LagSource, LagWindow, LAG_RULE_TOL,
};
pub use sampler::{path_functional, path_grid, sample_limit, GaussianPath, LimitSampler, JITTER, PATH_LEVEL, PATH_POINTS};
pub use variance::{asymptotic_variance, hoeffding_variance, Resolution, VarianceReport};
