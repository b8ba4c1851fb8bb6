//! Summary statistics of replicate values, all in a fixed summation order.

use serde::{Deserialize, Serialize};

use crate::special::norm_cdf;
use crate::summation::Neumaier;

pub fn mean(x: &[f64]) -> f64 {
    x.iter().copied().collect::<Neumaier>().total() / x.len() as f64
}

/// Unbiased sample variance; 0 for a single value.
pub fn variance(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).collect::<Neumaier>().total() / (x.len() - 1) as f64
}

pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let sxy = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect::<Neumaier>().total();
    let sxx = x.iter().map(|a| (a - mx) * (a - mx)).collect::<Neumaier>().total();
    let syy = y.iter().map(|b| (b - my) * (b - my)).collect::<Neumaier>().total();
    sxy / (sxx * syy).sqrt()
}

/// Linear-interpolation quantile of sorted data (the usual type-7 rule).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = p.clamp(0.0, 1.0) * (n - 1) as f64;
    let i = h.floor() as usize;
    if i + 1 >= n {
        return sorted[n - 1];
    }
    sorted[i] + (h - i as f64) * (sorted[i + 1] - sorted[i])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub q05: f64,
    pub q50: f64,
    pub q90: f64,
    pub q99: f64,
    pub max: f64,
}

pub fn quantiles(x: &[f64]) -> Quantiles {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    Quantiles {
        q05: quantile_sorted(&s, 0.05),
        q50: quantile_sorted(&s, 0.5),
        q90: quantile_sorted(&s, 0.9),
        q99: quantile_sorted(&s, 0.99),
        max: s[s.len() - 1],
    }
}

/// `sup_x |F̂(x) − Φ(x)|` of the values, exact over the jump points.
pub fn ks_normal(x: &[f64]) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &v)| {
            let c = norm_cdf(v);
            (c - i as f64 / n).max((i + 1) as f64 / n - c)
        })
        .fold(0.0, f64::max)
}

/// Least-squares slope of `y` on `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let sxy = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect::<Neumaier>().total();
    let sxx = x.iter().map(|a| (a - mx) * (a - mx)).collect::<Neumaier>().total();
    sxy / sxx
}

/// Slope of `log y` on `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    ols_slope(&lx, &ly)
}

/// Median of the Kolmogorov distribution of `√n sup|F̂_n − F|`.
pub const KOLMOGOROV_MEDIAN: f64 = 0.827_573_555_189_906;
