use serde::{Deserialize, Serialize};

use super::model::DistributionModel;
use crate::bv::{merge_grids, weighted_norm, GridFunction, Measure, NormValue, SignedMeasure, Tail, WeightedNorm};
use crate::error::{ensure_finite, invalid, Error, Result};
use crate::special::{norm_cdf, norm_pdf};

/// Empirical distribution function of a sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(sample: &[f64]) -> Result<Self> {
        if sample.is_empty() {
            return Err(invalid("empirical distribution of an empty sample"));
        }
        ensure_finite(sample, "sample")?;
        let mut sorted = sample.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { sorted })
    }

    pub fn n(&self) -> usize {
        self.sorted.len()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// `F̂_n(x) = #{X_i ≤ x} / n`.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.n() as f64
    }

    /// `F̂_n(x−) = #{X_i < x} / n`.
    pub fn eval_left(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v < x) as f64 / self.n() as f64
    }

    /// Distinct sample values with their accumulated masses.
    pub fn jumps(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.n() as f64;
        let mut xs = Vec::new();
        let mut ms: Vec<f64> = Vec::new();
        for &v in &self.sorted {
            if xs.last() == Some(&v) {
                *ms.last_mut().unwrap() += 1.0;
            } else {
                xs.push(v);
                ms.push(1.0);
            }
        }
        (xs, ms.into_iter().map(|c| c / n).collect())
    }

    pub fn to_grid_function(&self) -> GridFunction {
        let (xs, ms) = self.jumps();
        let n = self.n();
        let mut count = 0usize;
        let mut values = Vec::with_capacity(xs.len());
        let mut left = Vec::with_capacity(xs.len());
        for m in &ms {
            left.push(count as f64 / n as f64);
            count += (m * n as f64).round() as usize;
            values.push(count as f64 / n as f64);
        }
        *values.last_mut().unwrap() = 1.0;
        GridFunction::new(xs, values, left, Tail::constant(0.0), Tail::constant(1.0))
            .expect("EDF is a valid step function")
    }

    /// `dF̂_n`: atoms of mass `k/n` at the distinct sample points.
    pub fn to_measure(&self) -> SignedMeasure {
        let (xs, ms) = self.jumps();
        SignedMeasure::from_positive(Measure::atomic(xs, ms).expect("EDF atoms are valid"))
    }

    /// `sup_x |F̂_n(x) − F(x)|`, evaluated at every jump (value and left limit).
    pub fn kolmogorov_distance(&self, f: &DistributionModel) -> f64 {
        let (xs, _) = self.jumps();
        xs.iter()
            .map(|&x| {
                let fx = f.cdf(x);
                (self.eval(x) - fx).abs().max((self.eval_left(x) - fx).abs())
            })
            .fold(0.0, f64::max)
    }
}

/// Reads a sample, one value per line. Blank lines and `#` comments are skipped.
pub fn read_sample(text: &str) -> Result<Vec<f64>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| {
            l.trim().parse::<f64>().map_err(|_| invalid(format!("line {}: not a number: {:?}", i + 1, l.trim())))
        })
        .collect()
}

/// Standard deviation `s(ε) = √(2ε)` of the heat kernel at time `ε`.
pub fn heat_scale(epsilon: f64) -> f64 {
    (2.0 * epsilon).sqrt()
}

/// `P_ε F̂_n`: the EDF convolved with the heat kernel at time `ε`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothedCdf {
    pub base: EmpiricalCdf,
    pub epsilon: f64,
}

impl SmoothedCdf {
    pub fn new(base: EmpiricalCdf, epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(invalid(format!("bandwidth must be finite and nonnegative, got {epsilon}")));
        }
        Ok(Self { base, epsilon })
    }

    pub fn scale(&self) -> f64 {
        heat_scale(self.epsilon)
    }

    /// `(1/n) Σ Φ((x − X_i)/s)`; the EDF itself when `ε = 0`.
    pub fn eval(&self, x: f64) -> f64 {
        if self.epsilon == 0.0 {
            return self.base.eval(x);
        }
        let s = self.scale();
        let n = self.base.n() as f64;
        self.base.sorted.iter().map(|&xi| norm_cdf((x - xi) / s)).sum::<f64>() / n
    }

    /// Gaussian-mixture density; `None` when `ε = 0`.
    pub fn density(&self, x: f64) -> Option<f64> {
        if self.epsilon == 0.0 {
            return None;
        }
        let s = self.scale();
        let n = self.base.n() as f64;
        Some(self.base.sorted.iter().map(|&xi| norm_pdf((x - xi) / s)).sum::<f64>() / (n * s))
    }
}

/// Value of `√n · ε^{(γ−λ)/(2γ)}` and whether it is within `threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthCheck {
    pub n: usize,
    pub epsilon: f64,
    pub value: f64,
    pub passed: bool,
}

/// Default upper bound on `√n ε^{(γ−λ)/(2γ)}` for an admissible bandwidth.
pub const BANDWIDTH_THRESHOLD: f64 = 0.25;

pub fn bandwidth_admissible(n: usize, epsilon: f64, gamma: f64, lambda: f64, threshold: f64) -> Result<BandwidthCheck> {
    if !(gamma > lambda && lambda > 0.0) {
        return Err(Error::Hypothesis(format!("bandwidth check needs γ > λ > 0, got γ = {gamma}, λ = {lambda}")));
    }
    if !(epsilon >= 0.0) {
        return Err(invalid(format!("negative bandwidth {epsilon}")));
    }
    let exponent = if gamma.is_infinite() { 0.5 } else { (gamma - lambda) / (2.0 * gamma) };
    let value = if epsilon == 0.0 { 0.0 } else { (n as f64).sqrt() * epsilon.powf(exponent) };
    Ok(BandwidthCheck { n, epsilon, value, passed: value <= threshold })
}

/// Checks a bandwidth schedule: every value within the threshold and the
/// sequence nonincreasing in `n`.
pub fn bandwidth_schedule_admissible(
    schedule: &[(usize, f64)],
    gamma: f64,
    lambda: f64,
    threshold: f64,
) -> Result<(Vec<BandwidthCheck>, bool)> {
    let checks = schedule
        .iter()
        .map(|&(n, e)| bandwidth_admissible(n, e, gamma, lambda, threshold))
        .collect::<Result<Vec<_>>>()?;
    let monotone = checks.windows(2).all(|w| w[1].value <= w[0].value * (1.0 + 1e-12));
    let ok = monotone && checks.iter().all(|c| c.passed);
    Ok((checks, ok))
}

/// Background points for empirical processes: quantile-spaced levels plus
/// decades out to `1e-15` in both tails and the finite support endpoints.
pub fn background_grid(f: &DistributionModel, points: usize) -> Vec<f64> {
    let mut xs: Vec<f64> = (0..points).map(|k| f.quantile((k as f64 + 1.0) / (points as f64 + 1.0))).collect();
    for d in 4..=15 {
        let p = 10f64.powi(-d);
        xs.push(f.quantile(p));
        xs.push(f.upper_quantile(p));
    }
    let (a, b) = f.support();
    xs.push(a);
    xs.push(b);
    xs.retain(|x| x.is_finite());
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

/// Tail exponent used for light (faster than any power) decay.
const LIGHT_TAIL_EXPONENT: f64 = -60.0;

/// `√n(F̂_n − F)` on the sample points and a background grid, with its
/// weighted sup-norm `‖·‖_λ`.
pub fn weighted_empirical_process(
    sample: &[f64],
    f: &DistributionModel,
    lambda: f64,
) -> Result<(GridFunction, NormValue)> {
    let edf = EmpiricalCdf::new(sample)?;
    let root_n = (edf.n() as f64).sqrt();
    let grid = merge_grids(&edf.jumps().0, &background_grid(f, 2049));
    let values: Vec<f64> = grid.iter().map(|&x| root_n * (edf.eval(x) - f.cdf(x))).collect();
    let left: Vec<f64> = grid.iter().map(|&x| root_n * (edf.eval_left(x) - f.cdf(x))).collect();
    let (x0, xl) = (grid[0], *grid.last().unwrap());
    let tail = |edge: f64, v: f64, left_side: bool| {
        let power = f.tail_exponent(left_side).map(|a| -a).unwrap_or(LIGHT_TAIL_EXPONENT);
        let straddles = if left_side { edge > 0.0 } else { edge < 0.0 };
        if v == 0.0 || straddles {
            Tail::constant(v)
        } else {
            Tail::matching(edge, v, 0.0, power)
        }
    };
    let tl = tail(x0, left[0], true);
    let tr = tail(xl, *values.last().unwrap(), false);
    let process = GridFunction::new(grid, values, left, tl, tr)?;
    let norm = weighted_norm(&process, &WeightedNorm::new(lambda));
    Ok((process, norm))
}
