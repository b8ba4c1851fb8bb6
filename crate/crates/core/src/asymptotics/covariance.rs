use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::DependentProcess;
use crate::empirical::DistributionModel;
use crate::error::{invalid, Error, Result};
use crate::special::{bvn_cdf, norm_cdf, norm_quantile};

/// Contribution threshold of the default lag rule, relative to the bridge
/// term at the median.
pub const LAG_RULE_TOL: f64 = 1e-4;
const MAX_LAGS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum LagWindow {
    Rectangular,
    #[default]
    Bartlett,
}

impl LagWindow {
    /// Weight of lag `h ∈ 1..=lags`.
    pub fn weight(&self, h: usize, lags: usize) -> f64 {
        match self {
            LagWindow::Rectangular => 1.0,
            LagWindow::Bartlett => 1.0 - h as f64 / (lags + 1) as f64,
        }
    }
}

/// Where the lag covariances `Cov(1{X₁ ≤ s}, 1{X_{1+h} ≤ t})` come from.
#[derive(Debug, Clone)]
pub enum LagSource {
    /// Gaussian copula with latent correlations `ρ(1), …, ρ(K)`.
    GaussianCopula { correlations: Vec<f64> },
    /// Moment estimates from one stationary path.
    Path { sample: Arc<Vec<f64>> },
}

#[derive(Debug, Clone)]
pub enum CovarianceKind {
    BrownianBridge,
    LongRun { source: LagSource, lags: usize, window: LagWindow },
}

/// Covariance `Γ(s, t)` of the limit of the empirical process under `f`.
#[derive(Debug, Clone)]
pub struct CovarianceModel {
    pub f: DistributionModel,
    pub kind: CovarianceKind,
}

/// `x` with `F(x)`, `1 − F(x)` and the normal score `Φ^{-1}(F(x))`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CovPoint {
    pub x: f64,
    pub u: f64,
    pub sf: f64,
    pub z: f64,
}

pub fn brownian_bridge_cov(f: &DistributionModel) -> CovarianceModel {
    CovarianceModel { f: f.clone(), kind: CovarianceKind::BrownianBridge }
}

/// Long-run covariance with `lags` lag terms; `None` picks the default rule.
pub fn longrun_cov(process: &DependentProcess, lags: Option<usize>, window: LagWindow) -> Result<CovarianceModel> {
    process.validate()?;
    let k = match lags {
        Some(k) => k,
        None => default_lags_analytic(process),
    };
    let correlations = (1..=k).map(|h| process.latent_correlation(h)).collect();
    Ok(CovarianceModel {
        f: process.marginal.clone(),
        kind: CovarianceKind::LongRun { source: LagSource::GaussianCopula { correlations }, lags: k, window },
    })
}

/// Long-run covariance with lag covariances estimated from a path.
pub fn longrun_cov_from_path(
    f: &DistributionModel,
    sample: Vec<f64>,
    lags: Option<usize>,
    window: LagWindow,
) -> Result<CovarianceModel> {
    f.validate()?;
    crate::error::ensure_finite(&sample, "sample path")?;
    let k = match lags {
        Some(k) => k,
        None => default_lags_path(&sample),
    };
    if k >= sample.len() {
        return Err(invalid(format!("lag truncation K = {k} must be below the path length {}", sample.len())));
    }
    Ok(CovarianceModel {
        f: f.clone(),
        kind: CovarianceKind::LongRun { source: LagSource::Path { sample: Arc::new(sample) }, lags: k, window },
    })
}

/// Smallest `K` whose next lag term at the median is below
/// `LAG_RULE_TOL · ¼`. For a Gaussian copula that term is `arcsin ρ / π`.
pub fn default_lags_analytic(process: &DependentProcess) -> usize {
    (0..MAX_LAGS)
        .find(|&k| process.latent_correlation(k + 1).asin().abs() / std::f64::consts::PI < LAG_RULE_TOL * 0.25)
        .unwrap_or(MAX_LAGS)
}

/// The same rule with estimated lag terms; estimates below two standard
/// errors `2/√n` count as negligible, since the rule cannot resolve less.
pub fn default_lags_path(sample: &[f64]) -> usize {
    let n = sample.len();
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let med = sorted[n / 2];
    let ind: Vec<f64> = sample.iter().map(|&x| if x <= med { 1.0 } else { 0.0 }).collect();
    let p = ind.iter().sum::<f64>() / n as f64;
    let tol = (LAG_RULE_TOL * p * (1.0 - p)).max(2.0 / (n as f64).sqrt());
    let cap = MAX_LAGS.min(n / 4);
    (0..cap)
        .find(|&k| {
            let h = k + 1;
            let c = ind.iter().zip(&ind[h..]).map(|(a, b)| a * b).sum::<f64>() / (n - h) as f64 - p * p;
            (2.0 * c).abs() < tol
        })
        .unwrap_or(cap)
}

impl CovarianceModel {
    pub fn lags(&self) -> usize {
        match &self.kind {
            CovarianceKind::BrownianBridge => 0,
            CovarianceKind::LongRun { lags, .. } => *lags,
        }
    }

    pub fn is_path_estimate(&self) -> bool {
        matches!(&self.kind, CovarianceKind::LongRun { source: LagSource::Path { .. }, .. })
    }

    pub fn label(&self) -> String {
        match &self.kind {
            CovarianceKind::BrownianBridge => format!("brownian-bridge {}", self.f.label()),
            CovarianceKind::LongRun { source, lags, window } => {
                let src = match source {
                    LagSource::GaussianCopula { .. } => "gaussian-copula",
                    LagSource::Path { .. } => "path-estimate",
                };
                format!("long-run {src} K={lags} window={window:?} {}", self.f.label())
            }
        }
    }

    pub(crate) fn point(&self, x: f64) -> CovPoint {
        let u = self.f.cdf(x);
        let sf = self.f.sf(x);
        let z = match self.f {
            DistributionModel::Normal { mean, sd } => (x - mean) / sd,
            _ if u == 0.0 => f64::NEG_INFINITY,
            _ if sf == 0.0 => f64::INFINITY,
            _ if u < 0.5 => norm_quantile(u),
            _ => -norm_quantile(sf),
        };
        CovPoint { x, u, sf, z }
    }

    #[inline]
    pub(crate) fn bridge(p: &CovPoint, q: &CovPoint) -> f64 {
        if p.x <= q.x {
            p.u * q.sf
        } else {
            q.u * p.sf
        }
    }

    /// `Γ(s, t)`.
    pub fn eval(&self, s: f64, t: f64) -> f64 {
        let (p, q) = (self.point(s), self.point(t));
        Self::bridge(&p, &q) + self.lag_part(&p, &q)
    }

    /// Partial sums of the lag series at `(s, t)`, for inspecting
    /// convergence of the truncated long-run covariance.
    pub fn lag_partial_sums(&self, s: f64, t: f64) -> Vec<f64> {
        let (p, q) = (self.point(s), self.point(t));
        let mut acc = 0.0;
        (1..=self.lags())
            .map(|h| {
                acc += self.lag_term(&p, &q, h);
                acc
            })
            .collect()
    }

    fn lag_part(&self, p: &CovPoint, q: &CovPoint) -> f64 {
        (1..=self.lags()).map(|h| self.lag_term(p, q, h)).sum()
    }

    /// `w_h [C_h(s, t) + C_h(t, s)]`.
    fn lag_term(&self, p: &CovPoint, q: &CovPoint, h: usize) -> f64 {
        let CovarianceKind::LongRun { source, lags, window } = &self.kind else {
            return 0.0;
        };
        let w = window.weight(h, *lags);
        match source {
            LagSource::GaussianCopula { correlations } => 2.0 * w * copula_cov(p, q, correlations[h - 1]),
            LagSource::Path { sample } => {
                let n = sample.len();
                let (mut st, mut ts) = (0usize, 0usize);
                for i in 0..n - h {
                    let (a, b) = (sample[i], sample[i + h]);
                    st += usize::from(a <= p.x && b <= q.x);
                    ts += usize::from(a <= q.x && b <= p.x);
                }
                let fs = sample.iter().filter(|&&v| v <= p.x).count() as f64 / n as f64;
                let ft = sample.iter().filter(|&&v| v <= q.x).count() as f64 / n as f64;
                let m = (n - h) as f64;
                w * (st as f64 / m + ts as f64 / m - 2.0 * fs * ft)
            }
        }
    }

    /// Gram matrix `Γ(x_a, x_b)`, symmetric by construction.
    pub fn gram(&self, xs: &[f64]) -> DMatrix<f64> {
        let pts: Vec<CovPoint> = xs.iter().map(|&x| self.point(x)).collect();
        let mut g = self.lag_gram_points(&pts);
        for a in 0..pts.len() {
            for b in 0..=a {
                let v = Self::bridge(&pts[a], &pts[b]);
                g[(a, b)] += v;
                if a != b {
                    g[(b, a)] += v;
                }
            }
        }
        g
    }

    /// Lag part of the Gram matrix only.
    pub(crate) fn lag_gram_points(&self, pts: &[CovPoint]) -> DMatrix<f64> {
        let m = pts.len();
        let CovarianceKind::LongRun { source, lags, window } = &self.kind else {
            return DMatrix::zeros(m, m);
        };
        if *lags == 0 {
            return DMatrix::zeros(m, m);
        }
        match source {
            LagSource::GaussianCopula { correlations } => {
                let weights: Vec<f64> = (1..=*lags).map(|h| 2.0 * window.weight(h, *lags)).collect();
                let rows: Vec<Vec<f64>> = (0..m)
                    .into_par_iter()
                    .map(|a| {
                        (0..=a)
                            .map(|b| weights.iter().zip(correlations).map(|(w, &r)| w * copula_cov(&pts[a], &pts[b], r)).sum())
                            .collect()
                    })
                    .collect();
                let mut g = DMatrix::zeros(m, m);
                for (a, row) in rows.iter().enumerate() {
                    for (b, &v) in row.iter().enumerate() {
                        g[(a, b)] = v;
                        g[(b, a)] = v;
                    }
                }
                g
            }
            LagSource::Path { sample } => path_lag_gram(sample, pts, *lags, *window),
        }
    }
}

/// `Φ₂(z_s, z_t; ρ) − F(s)F(t)`, evaluated in the orthant where both
/// probabilities are small to avoid cancellation.
fn copula_cov(p: &CovPoint, q: &CovPoint, rho: f64) -> f64 {
    if rho == 0.0 || !p.z.is_finite() || !q.z.is_finite() {
        return 0.0;
    }
    let (mut a, mut b, mut r, mut sign) = (p.z, q.z, rho, 1.0);
    if a > 0.0 {
        a = -a;
        r = -r;
        sign = -sign;
    }
    if b > 0.0 {
        b = -b;
        r = -r;
        sign = -sign;
    }
    sign * (bvn_cdf(a, b, r) - norm_cdf(a) * norm_cdf(b))
}

/// Lag part from a path: per lag, joint counts on the bins cut by the
/// points, turned into `#{X_i ≤ s, X_{i+h} ≤ t}` by a 2D prefix sum.
fn path_lag_gram(sample: &[f64], pts: &[CovPoint], lags: usize, window: LagWindow) -> DMatrix<f64> {
    let m = pts.len();
    let n = sample.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| pts[a].x.total_cmp(&pts[b].x));
    let sorted: Vec<f64> = order.iter().map(|&a| pts[a].x).collect();
    // X_i ≤ sorted[j] iff j ≥ bin[i]
    let bin: Vec<usize> = sample.iter().map(|&x| sorted.partition_point(|&p| p < x)).collect();
    let mut marg = vec![0.0; m + 1];
    for &b in &bin {
        marg[b] += 1.0;
    }
    let mut fhat = vec![0.0; m];
    let mut acc = 0.0;
    for j in 0..m {
        acc += marg[j];
        fhat[j] = acc / n as f64;
    }
    let mut out = DMatrix::zeros(m, m);
    let mut counts = vec![0.0; (m + 1) * (m + 1)];
    for h in 1..=lags {
        counts.iter_mut().for_each(|c| *c = 0.0);
        for i in 0..n - h {
            counts[bin[i] * (m + 1) + bin[i + h]] += 1.0;
        }
        for a in 0..=m {
            for b in 0..=m {
                let mut v = counts[a * (m + 1) + b];
                if a > 0 {
                    v += counts[(a - 1) * (m + 1) + b];
                }
                if b > 0 {
                    v += counts[a * (m + 1) + b - 1];
                }
                if a > 0 && b > 0 {
                    v -= counts[(a - 1) * (m + 1) + b - 1];
                }
                counts[a * (m + 1) + b] = v;
            }
        }
        let w = window.weight(h, lags);
        let denom = (n - h) as f64;
        for j in 0..m {
            for l in 0..m {
                let c = counts[j * (m + 1) + l] / denom - fhat[j] * fhat[l];
                out[(order[j], order[l])] += w * c;
                out[(order[l], order[j])] += w * c;
            }
        }
    }
    out
}

/// Clips negative eigenvalues at zero; returns the repaired matrix and the
/// Frobenius norm of the change.
pub fn psd_repair(g: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let eig = SymmetricEigen::new(g.clone());
    if eig.eigenvalues.iter().all(|&l| l >= 0.0) {
        return (g.clone(), 0.0);
    }
    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    let repaired = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    let repaired = (&repaired + repaired.transpose()) * 0.5;
    let norm = (&repaired - g).norm();
    (repaired, norm)
}

/// Smallest eigenvalue, for diagnostics.
pub fn min_eigenvalue(g: &DMatrix<f64>) -> Result<f64> {
    let eig = SymmetricEigen::try_new(g.clone(), 1e-14, 10_000)
        .ok_or_else(|| Error::Numeric("symmetric eigen decomposition did not converge".into()))?;
    Ok(eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
}
