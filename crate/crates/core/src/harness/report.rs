use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::stats::Quantiles;
use crate::asymptotics::{AdmissibilityReport, VarianceReport};
use crate::empirical::{BandwidthCheck, GammaCheck, LipschitzCheck};
use crate::error::{Error, Result};
use crate::kernels::AssumptionReport;

/// Replicate `r` at the `k`-th sample size draws from stream
/// `(k << 32) | r` of the configured seed.
pub const STREAM_RULE: &str = "stream = (n_index << 32) | replicate";

pub fn stream(n_index: usize, replicate: usize) -> u64 {
    ((n_index as u64) << 32) | replicate as u64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub stream_rule: String,
    pub version: String,
}

impl Provenance {
    /// Output paths are left out so reruns into other files compare equal.
    pub fn of(cfg: &ExperimentConfig) -> Self {
        let mut config = cfg.clone();
        config.output = Default::default();
        Provenance { config, seed: cfg.seed, stream_rule: STREAM_RULE.into(), version: env!("CARGO_PKG_VERSION").into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltSummary {
    pub n: usize,
    pub replications: usize,
    /// Mean and variance of `√n(estimate − U(F))`.
    pub mean: f64,
    pub variance: f64,
    pub sigma2: f64,
    pub variance_ratio: f64,
    /// KS distance to `N(0, 1)` of `(value − mean)/σ`.
    pub ks_distance: f64,
    /// KS distance of `value/σ`, which also sees the `O(n^{-1/2})` bias.
    pub ks_distance_uncentred: f64,
    /// KS distance after centring and scaling by the sample moments.
    pub ks_self_normalized: f64,
    pub weighted_norm: Quantiles,
    /// `|√n(U_n − U(F̂_n))|`.
    pub uv_gap: Quantiles,
    pub linear_part_correlation: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothing_gap: Option<Quantiles>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<BandwidthCheck>,
    /// Replicates with `|value − mean| > 6σ`; kept in every statistic.
    pub outliers: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub kernel: String,
    pub process: String,
    pub estimator: String,
    pub lambda: f64,
    pub lambda_prime: f64,
    pub u_f: f64,
    pub variance: VarianceReport,
    pub assumptions: AssumptionReport,
    pub admissibility: Vec<AdmissibilityReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<LipschitzCheck>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_check: Option<GammaCheck>,
    pub per_n: Vec<CltSummary>,
    pub warnings: Vec<String>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UvSummary {
    pub n: usize,
    pub abs_gap: Quantiles,
    pub median_s1: f64,
    pub median_s2: f64,
    /// Largest `|gap − (S₁ − S₂)|` over the replicates.
    pub max_identity_residual: f64,
    /// Replicate-wise correlation of `U_n` and `U(F̂_n)`.
    pub uv_correlation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UvReport {
    pub experiment: String,
    pub kernel: String,
    pub process: String,
    pub per_n: Vec<UvSummary>,
    /// Slope of `log median|gap|` on `log n`.
    pub decay_slope: f64,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WepSummary {
    pub n: usize,
    pub norm: Quantiles,
    pub divergent_norms: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WepReport {
    pub experiment: String,
    pub process: String,
    pub lambda: f64,
    pub gamma: f64,
    /// `γ < 2λ`: the norm is not expected to stay bounded.
    pub divergence_regime: bool,
    pub per_n: Vec<WepSummary>,
    /// Slopes of `log` median and 90% quantile on `log n`.
    pub median_slope: f64,
    pub q90_slope: f64,
    /// Reference median of the classical Kolmogorov law (`λ = 0` only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kolmogorov_median: Option<f64>,
    pub provenance: Provenance,
}

/// One CSV row: `replicate,n,statistic,value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Row {
    pub replicate: usize,
    pub n: usize,
    pub statistic: &'static str,
    pub value: f64,
}

pub fn csv(rows: &[Row]) -> String {
    let mut s = String::from("replicate,n,statistic,value\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{:e}", r.replicate, r.n, r.statistic, r.value);
    }
    s
}

/// Pretty JSON with a trailing newline; field order follows the structs.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Numeric(format!("cannot serialize report: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        }
    }
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
