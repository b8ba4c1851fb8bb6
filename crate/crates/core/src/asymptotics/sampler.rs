use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::covariance::{min_eigenvalue, psd_repair, CovarianceModel};
use crate::bv::{stieltjes, GridFunction, Tail};
use crate::datagen::replicate_rng;
use crate::empirical::DistributionModel;
use crate::error::{invalid, Error, Result};
use crate::kernels::Projection;
use crate::quadrature::{logit_grid, OUTER_QUANTILE};

/// Default number of path points.
pub const PATH_POINTS: usize = 257;
/// Quantile level of the outermost path points.
pub const PATH_LEVEL: f64 = 1e-8;
/// Diagonal jitter of the factorization, relative to the trace.
pub const JITTER: f64 = 1e-12;

/// A draw of the limit process on a grid. The first and last nodes are
/// anchors where the path is pinned to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianPath {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub seed: u64,
    pub replicate: u64,
}

impl GaussianPath {
    pub fn to_grid_function(&self) -> Result<GridFunction> {
        GridFunction::continuous(self.grid.clone(), self.values.clone(), Tail::ZERO, Tail::ZERO)
    }
}

/// `points` logit-spaced quantiles strictly inside the support, plus two
/// anchors (support ends, or the outer quantiles) where `Γ` vanishes.
pub fn path_grid(f: &DistributionModel, points: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if points < 2 {
        return Err(invalid("a limit path needs at least two points"));
    }
    if !f.is_continuous() {
        return Err(invalid("limit paths need a continuous marginal"));
    }
    let inner: Vec<f64> = logit_grid(f, points - 1, PATH_LEVEL)
        .into_iter()
        .filter(|&x| f.cdf(x) > 0.0 && f.sf(x) > 0.0)
        .collect();
    let (a, b) = f.support();
    let lo = if a.is_finite() { a } else { f.quantile(OUTER_QUANTILE) };
    let hi = if b.is_finite() { b } else { f.upper_quantile(OUTER_QUANTILE) };
    let mut full = Vec::with_capacity(inner.len() + 2);
    full.push(lo);
    full.extend(&inner);
    full.push(hi);
    Ok((inner, full))
}

/// Factorized Gram matrix with the linear functional
/// `B ↦ −∫B dg₁ − ∫B dg₂` of the piecewise-linear path.
#[derive(Debug, Clone)]
pub struct LimitSampler {
    /// Anchored grid (interior points plus the two anchors).
    pub grid: Vec<f64>,
    factor: DMatrix<f64>,
    /// `Lᵀc`: each draw is `−w·z` for a standard normal vector `z`.
    weights: Vec<f64>,
    /// `cᵀ Γ c`, the exact variance of the discretized functional.
    pub discretized_variance: f64,
    pub jitter: f64,
    /// Frobenius norm of the PSD repair (path-estimated covariances only).
    pub repair_norm: f64,
}

impl LimitSampler {
    pub fn new(p: &Projection, cov: &CovarianceModel, points: usize) -> Result<Self> {
        let (inner, full) = path_grid(&cov.f, points)?;
        let m = inner.len();
        let mut gram = cov.gram(&inner);
        let mut repair_norm = 0.0;
        if cov.is_path_estimate() {
            let (g, norm) = psd_repair(&gram);
            gram = g;
            repair_norm = norm;
        }
        let jitter = JITTER * gram.trace();
        let mut jittered = gram.clone();
        for i in 0..m {
            jittered[(i, i)] += jitter;
        }
        let factor = match jittered.cholesky() {
            Some(c) => c.l(),
            None => {
                let lmin = min_eigenvalue(&gram).unwrap_or(f64::NAN);
                return Err(Error::Numeric(format!(
                    "Gram matrix of Γ on {m} points is not positive definite after jitter {jitter:.3e}: smallest eigenvalue {lmin:.3e}, trace {:.3e}",
                    gram.trace()
                )));
            }
        };
        // c_k = ∫ hat_k d(dg₁ + dg₂)
        let c: Vec<f64> = (1..=m)
            .into_par_iter()
            .map(|k| {
                let mut v = vec![0.0; full.len()];
                v[k] = 1.0;
                let hat = GridFunction::continuous(full.clone(), v, Tail::ZERO, Tail::ZERO)?;
                Ok(stieltjes(&hat, &p.dg1, false)? + stieltjes(&hat, &p.dg2, false)?)
            })
            .collect::<Result<_>>()?;
        let cv = DVector::from_vec(c);
        let discretized_variance = (gram * &cv).dot(&cv);
        let weights = (factor.transpose() * &cv).as_slice().to_vec();
        Ok(Self { grid: full, factor, weights, discretized_variance, jitter, repair_norm })
    }

    pub fn draw(&self, rng: &mut impl Rng) -> f64 {
        -self.weights.iter().map(|w| w * rng.sample::<f64, _>(StandardNormal)).sum::<f64>()
    }

    /// A path and, from the same normal vector, its functional value.
    pub fn path(&self, seed: u64, replicate: u64) -> (GaussianPath, f64) {
        let mut rng = replicate_rng(seed, replicate);
        let m = self.weights.len();
        let z = DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
        let b = &self.factor * &z;
        let mut values = vec![0.0; m + 2];
        values[1..=m].copy_from_slice(b.as_slice());
        let draw = -self.weights.iter().zip(z.iter()).map(|(w, z)| w * z).sum::<f64>();
        (GaussianPath { grid: self.grid.clone(), values, seed, replicate }, draw)
    }

    /// `R` draws; replicate `r` uses stream `r` of `seed`.
    pub fn sample(&self, seed: u64, replications: usize) -> Vec<f64> {
        (0..replications as u64)
            .into_par_iter()
            .map(|r| self.draw(&mut replicate_rng(seed, r)))
            .collect()
    }
}

/// `R` draws of the limit functional on the default path grid.
pub fn sample_limit(
    p: &Projection,
    cov: &CovarianceModel,
    points: Option<usize>,
    seed: u64,
    replications: usize,
) -> Result<Vec<f64>> {
    Ok(LimitSampler::new(p, cov, points.unwrap_or(PATH_POINTS))?.sample(seed, replications))
}

/// `−∫B dg₁ − ∫B dg₂` of an explicit path.
pub fn path_functional(path: &GaussianPath, p: &Projection) -> Result<f64> {
    let b = path.to_grid_function()?;
    Ok(-(stieltjes(&b, &p.dg1, false)? + stieltjes(&b, &p.dg2, false)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotics::{asymptotic_variance, brownian_bridge_cov, longrun_cov, LagWindow};
    use crate::bv::{Quadratic, SignedMeasure};
    use crate::datagen::DependentProcess;
    use crate::kernels::{gini_kernel, project, variance_kernel, Kernel};

    #[test]
    fn constant_projection_draws_zero() {
        let f = DistributionModel::uniform();
        let k = Kernel::custom("one", true, 0.0, |_, _| 1.0).unwrap();
        let p = project(&k, &f).unwrap();
        let draws = sample_limit(&p, &brownian_bridge_cov(&f), Some(33), 1, 100).unwrap();
        assert!(draws.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn gini_uniform_two_routes() {
        let f = DistributionModel::uniform();
        let p = project(&gini_kernel(), &f).unwrap();
        let s = LimitSampler::new(&p, &brownian_bridge_cov(&f), PATH_POINTS).unwrap();
        assert!((s.discretized_variance - 1.0 / 45.0).abs() < 0.005 / 45.0, "{}", s.discretized_variance);
        // 2∫B(1 − 2F)dx with the density written out
        let explicit = SignedMeasure::from_signed(
            vec![0.0, 0.5, 1.0],
            vec![0.0; 3],
            vec![Quadratic::linear(2.0, 0.0), Quadratic::linear(0.0, -2.0)],
            Tail::ZERO,
            Tail::ZERO,
        )
        .unwrap();
        for r in 0..5 {
            let (path, draw) = s.path(9, r);
            let b = path.to_grid_function().unwrap();
            let route2 = stieltjes(&b, &explicit, false).unwrap();
            let route1 = path_functional(&path, &p).unwrap();
            assert!((route1 - route2).abs() < 1e-8, "{route1} {route2}");
            assert!((route1 - draw).abs() < 1e-10);
        }
    }

    #[test]
    fn sample_variance_matches_sigma2() {
        let f = DistributionModel::standard_normal();
        let p = project(&variance_kernel(), &f).unwrap();
        let cov = brownian_bridge_cov(&f);
        let s = LimitSampler::new(&p, &cov, PATH_POINTS).unwrap();
        let sigma2 = asymptotic_variance(&p, &cov, None).unwrap().sigma2;
        assert!((s.discretized_variance / sigma2 - 1.0).abs() < 5e-3, "{} vs {sigma2}", s.discretized_variance);
        let d = s.sample(3, 20_000);
        let m = d.iter().sum::<f64>() / d.len() as f64;
        let v = d.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (d.len() - 1) as f64;
        assert!((v / sigma2 - 1.0).abs() < 0.05);
        assert_eq!(s.sample(3, 10), d[..10]);
    }

    #[test]
    fn dependent_gram_factorizes() {
        let p = DependentProcess::ar1(0.5, DistributionModel::standard_normal());
        let cov = longrun_cov(&p, Some(50), LagWindow::Rectangular).unwrap();
        let s = LimitSampler::new(&project(&variance_kernel(), &p.marginal).unwrap(), &cov, PATH_POINTS).unwrap();
        assert!((s.discretized_variance / (10.0 / 3.0) - 1.0).abs() < 0.01, "{}", s.discretized_variance);
    }
}
