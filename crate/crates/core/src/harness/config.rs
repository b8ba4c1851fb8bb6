use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::asymptotics::LagWindow;
use crate::datagen::{DependentProcess, ProcessKind};
use crate::empirical::DistributionModel;
use crate::error::{Error, Result};
use crate::kernels::{Kernel, KernelSpec};

fn iid() -> ProcessKind {
    ProcessKind::Iid
}

/// Bandwidths `ε_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EpsilonSchedule {
    /// `scale · n^exponent`
    Power { scale: f64, exponent: f64 },
    Fixed { value: f64 },
}

impl EpsilonSchedule {
    pub fn at(&self, n: usize) -> f64 {
        match *self {
            EpsilonSchedule::Power { scale, exponent } => scale * (n as f64).powf(exponent),
            EpsilonSchedule::Fixed { value } => value,
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            EpsilonSchedule::Power { scale, .. } => scale == 0.0,
            EpsilonSchedule::Fixed { value } => value == 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EstimatorSpec {
    #[default]
    Edf,
    Smoothed { epsilon: EpsilonSchedule },
    UStatistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum GammaSource {
    #[default]
    Analytic,
    PathEstimated,
}

/// How the long-run covariance is obtained for dependent processes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaMode {
    #[serde(default)]
    pub mode: GammaSource,
    /// Lag truncation `K`; the default rule applies when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lags: Option<usize>,
    /// Lag weights; rectangular for analytic and Bartlett for
    /// path-estimated covariances when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<LagWindow>,
    /// Length of the calibration path in path-estimated mode.
    #[serde(default = "default_path_length")]
    pub path_length: usize,
}

fn default_path_length() -> usize {
    200_000
}

impl GammaMode {
    pub fn window(&self) -> LagWindow {
        self.window.unwrap_or(match self.mode {
            GammaSource::Analytic => LagWindow::Rectangular,
            GammaSource::PathEstimated => LagWindow::Bartlett,
        })
    }
}

impl Default for GammaMode {
    fn default() -> Self {
        Self { mode: GammaSource::Analytic, lags: None, window: None, path_length: default_path_length() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

/// One Monte Carlo experiment, as read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kernel: KernelSpec,
    pub marginal: DistributionModel,
    #[serde(default = "iid")]
    pub process: ProcessKind,
    #[serde(default)]
    pub estimator: EstimatorSpec,
    pub n: Vec<usize>,
    pub replications: usize,
    pub lambda: f64,
    /// Overrides the kernel's declared growth exponent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_prime: Option<f64>,
    #[serde(default)]
    pub gamma: GammaMode,
    pub seed: u64,
    #[serde(default)]
    pub output: OutputSpec,
    /// Directory that relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if self.n.is_empty() || self.n.iter().any(|&n| n < 2) {
            return bad("the n schedule needs sample sizes of at least 2".into());
        }
        if self.n.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("the n schedule must be increasing, got {:?}", self.n));
        }
        if let Some(lp) = self.lambda_prime {
            if !(lp >= 0.0) {
                return bad(format!("lambda_prime must be nonnegative, got {lp}"));
            }
        }
        if !self.lambda.is_finite() {
            return bad(format!("lambda must be finite, got {}", self.lambda));
        }
        if let EstimatorSpec::Smoothed { epsilon } = self.estimator {
            if (0..3).map(|k| epsilon.at(1 << (4 * k + 4))).any(|e| !(e >= 0.0) || !e.is_finite()) {
                return bad("the bandwidth schedule must be finite and nonnegative".into());
            }
        }
        self.process().validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn process(&self) -> DependentProcess {
        DependentProcess { kind: self.process, marginal: self.marginal.clone() }
    }

    pub fn kernel(&self) -> Result<Kernel> {
        let mut k = self.kernel.build(&self.base_dir)?;
        if let Some(lp) = self.lambda_prime {
            k.lambda_prime = lp;
        }
        Ok(k)
    }

    pub fn lambda_prime(&self) -> Result<f64> {
        Ok(self.kernel()?.lambda_prime)
    }

    /// A smoothed estimator with the zero schedule is the EDF plug-in.
    pub fn normalized(&self) -> Self {
        let mut c = self.clone();
        if let EstimatorSpec::Smoothed { epsilon } = c.estimator {
            if epsilon.is_zero() {
                c.estimator = EstimatorSpec::Edf;
            }
        }
        c
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}
