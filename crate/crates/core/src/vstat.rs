//! Plug-in V-statistics, U-statistics and the decompositions relating them.

use serde::{Deserialize, Serialize};

use crate::bv::{merge_grids, stieltjes, GridFunction, SignedMeasure, Tail};
use crate::empirical::{DistributionModel, EmpiricalCdf, SmoothedCdf};
use crate::error::{ensure_finite, invalid, Error, Result};
use crate::kernels::{functional_value, project, Kernel, KernelRepr, Projection};
use crate::quadrature::ProductRule;
use crate::special::{gauss_hermite, norm_cdf, norm_pdf};
use crate::summation::{block_sum, Neumaier};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    VPluginEdf,
    VPluginSmoothed,
    UStatistic,
    VPluginGeneric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    GenericQuadratic,
    FastSorted,
    MomentForm,
    /// Gaussian-mixture closed form per pair of observations.
    ClosedFormPairs,
    /// Gauss–Hermite per pair of observations.
    HermitePairs,
    /// Product quadrature over the density part of a measure.
    ProductQuadrature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub value: f64,
    pub estimator_kind: EstimatorKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub kernel: String,
    pub algorithm: Algorithm,
}

fn record(value: f64, kind: EstimatorKind, n: Option<usize>, kernel: &Kernel, algorithm: Algorithm) -> Result<EstimateRecord> {
    if !value.is_finite() {
        return Err(Error::Numeric(format!("{kind:?} estimate for kernel {} is not finite", kernel.name)));
    }
    Ok(EstimateRecord { value, estimator_kind: kind, n, kernel: kernel.name.clone(), algorithm })
}

fn check_sample(sample: &[f64], min: usize) -> Result<()> {
    if sample.len() < min {
        return Err(invalid(format!("need at least {min} observations, got {}", sample.len())));
    }
    ensure_finite(sample, "sample")
}

/// `ΣΣ_{i,j} g(X_i, X_j)` over all pairs, or over `i ≠ j`.
pub fn double_sum(kernel: &Kernel, sample: &[f64], off_diagonal: bool) -> f64 {
    let n = sample.len();
    block_sum(n, |i, acc| {
        let xi = sample[i];
        let mut row = Neumaier::new();
        for (j, &xj) in sample.iter().enumerate() {
            if !(off_diagonal && i == j) {
                row.add(kernel.eval(xi, xj));
            }
        }
        acc.merge(row);
    })
}

/// `Σ_i g(X_i, X_i)`.
pub fn diagonal_sum(kernel: &Kernel, sample: &[f64]) -> f64 {
    match kernel.repr {
        KernelRepr::Gini | KernelRepr::Variance => 0.0,
        _ => sample.iter().map(|&x| kernel.eval(x, x)).collect::<Neumaier>().total(),
    }
}

/// `ΣΣ |X_i − X_j| = 2 Σ_k (2k − n + 1) X_(k)` over the sorted sample.
pub fn gini_pair_sum(sample: &[f64]) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    2.0 * s.iter().enumerate().map(|(k, &x)| (2.0 * k as f64 - n + 1.0) * x).collect::<Neumaier>().total()
}

/// `Σ (X_i − X̄)²` with a compensated two-pass mean.
pub fn centred_square_sum(sample: &[f64]) -> f64 {
    let n = sample.len() as f64;
    let mean0 = crate::summation::sum(sample) / n;
    // second pass corrects the mean for rounding in the first
    let mean = mean0 + sample.iter().map(|x| x - mean0).collect::<Neumaier>().total() / n;
    sample.iter().map(|x| (x - mean) * (x - mean)).collect::<Neumaier>().total()
}

/// Fast path for the kernel, if any: the full pair sum and the algorithm.
fn fast_pair_sum(kernel: &Kernel, sample: &[f64]) -> Option<(f64, Algorithm)> {
    match kernel.repr {
        KernelRepr::Gini => Some((gini_pair_sum(sample), Algorithm::FastSorted)),
        // ΣΣ ½(X_i − X_j)² = n Σ (X_i − X̄)²
        KernelRepr::Variance => Some((sample.len() as f64 * centred_square_sum(sample), Algorithm::MomentForm)),
        _ => None,
    }
}

/// `U(F̂_n) = n⁻² ΣΣ g(X_i, X_j)`.
pub fn v_statistic_edf(kernel: &Kernel, sample: &[f64]) -> Result<EstimateRecord> {
    check_sample(sample, 1)?;
    let n = sample.len();
    let (full, alg) = fast_pair_sum(kernel, sample).unwrap_or_else(|| (double_sum(kernel, sample, false), Algorithm::GenericQuadratic));
    record(full / (n as f64 * n as f64), EstimatorKind::VPluginEdf, Some(n), kernel, alg)
}

/// The definitional `O(n²)` V-statistic, bypassing fast paths.
pub fn v_statistic_generic(kernel: &Kernel, sample: &[f64]) -> Result<EstimateRecord> {
    check_sample(sample, 1)?;
    let n = sample.len();
    let v = double_sum(kernel, sample, false) / (n as f64 * n as f64);
    record(v, EstimatorKind::VPluginEdf, Some(n), kernel, Algorithm::GenericQuadratic)
}

/// `U_n = (n(n−1))⁻¹ Σ_{i≠j} g(X_i, X_j)`.
pub fn u_statistic(kernel: &Kernel, sample: &[f64]) -> Result<EstimateRecord> {
    check_sample(sample, 2)?;
    let n = sample.len();
    let nn = n as f64 * (n as f64 - 1.0);
    let (off, alg) = match fast_pair_sum(kernel, sample) {
        // both built-in kernels vanish on the diagonal
        Some(p) => p,
        None => (double_sum(kernel, sample, true), Algorithm::GenericQuadratic),
    };
    record(off / nn, EstimatorKind::UStatistic, Some(n), kernel, alg)
}

/// The definitional off-diagonal U-statistic.
pub fn u_statistic_generic(kernel: &Kernel, sample: &[f64]) -> Result<EstimateRecord> {
    check_sample(sample, 2)?;
    let n = sample.len();
    let v = double_sum(kernel, sample, true) / (n as f64 * (n as f64 - 1.0));
    record(v, EstimatorKind::UStatistic, Some(n), kernel, Algorithm::GenericQuadratic)
}

/// Terms of `√n(U_n − U(F̂_n)) = S₁ − S₂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UvGap {
    pub n: usize,
    pub s1: f64,
    pub s2: f64,
    /// `√n(U_n − U(F̂_n))` from the two estimators.
    pub gap: f64,
    /// `gap − (S₁ − S₂)`.
    pub residual: f64,
}

/// Tolerance of the internal identity check in [`uv_gap`], relative to the
/// size of `S₁` and `S₂`.
pub const UV_IDENTITY_TOL: f64 = 1e-10;

pub fn uv_gap(kernel: &Kernel, sample: &[f64]) -> Result<UvGap> {
    check_sample(sample, 2)?;
    let n = sample.len();
    let nf = n as f64;
    let v = v_statistic_edf(kernel, sample)?.value;
    let u = u_statistic(kernel, sample)?.value;
    let diag = diagonal_sum(kernel, sample);
    let root = nf.sqrt();
    let s1 = root / (nf - 1.0) * v;
    let s2 = root / (nf * (nf - 1.0)) * diag;
    let gap = root * (u - v);
    let residual = gap - (s1 - s2);
    let scale = 1.0 + s1.abs() + s2.abs() + root * (u.abs() + v.abs());
    if residual.abs() > UV_IDENTITY_TOL * scale {
        return Err(Error::Numeric(format!("U/V identity violated: residual {residual:e} at n = {n}")));
    }
    Ok(UvGap { n, s1, s2, gap, residual })
}

/// Input of the general plug-in `U(F_n) = ∫∫ g dF_n dF_n`.
#[derive(Debug, Clone, Copy)]
pub enum PluginInput<'a> {
    Measure(&'a SignedMeasure),
    Model(&'a DistributionModel),
    Smoothed(&'a SmoothedCdf),
}

pub fn v_statistic_plugin(kernel: &Kernel, input: PluginInput<'_>) -> Result<EstimateRecord> {
    match input {
        PluginInput::Model(f) => {
            let v = functional_value(kernel, f)?;
            record(v, EstimatorKind::VPluginGeneric, None, kernel, Algorithm::ProductQuadrature)
        }
        PluginInput::Smoothed(s) => v_statistic_smoothed(kernel, s),
        PluginInput::Measure(m) => plugin_measure(kernel, m),
    }
}

/// Mass below which a negative part counts as zero.
const MASS_TOL: f64 = 1e-12;

fn plugin_measure(kernel: &Kernel, m: &SignedMeasure) -> Result<EstimateRecord> {
    let neg = m.negative.total_mass();
    if neg > MASS_TOL {
        return Err(Error::Precondition(format!("F_n must be nonnegative, its negative part has mass {neg}")));
    }
    let p = &m.positive;
    let total = p.total_mass();
    if total > 1.0 + MASS_TOL {
        return Err(Error::Precondition(format!("F_n must have total mass at most 1, got {total}")));
    }
    let lp = kernel.lambda_prime;
    for (t, side) in [(p.tail_left(), "−∞"), (p.tail_right(), "+∞")] {
        let g = t.growth();
        if g > f64::NEG_INFINITY && g + lp >= -1.0 {
            return Err(Error::Precondition(format!("∫ φ_{{λ′}} dF_n diverges towards {side} (λ′ = {lp})")));
        }
    }
    let atoms = p.atoms();
    let aa = block_sum(atoms.len(), |i, acc| {
        let (xi, mi) = atoms[i];
        for &(xj, mj) in &atoms {
            acc.add(mi * mj * kernel.eval(xi, xj));
        }
    });
    let has_density = p.density_segments().iter().any(|q| q.start != 0.0 || q.mid != 0.0 || q.end != 0.0)
        || p.tail_left().growth() > f64::NEG_INFINITY
        || p.tail_right().growth() > f64::NEG_INFINITY;
    if !has_density {
        return record(aa, EstimatorKind::VPluginGeneric, None, kernel, Algorithm::GenericQuadratic);
    }
    // cut the density grid at the atoms so cross terms see their kinks at breaks
    let xs: Vec<f64> = atoms.iter().map(|a| a.0).collect();
    let mut grid = merge_grids(p.breaks(), &xs);
    extend_tails(&mut grid, p.tail_left(), p.tail_right(), lp);
    let rule = ProductRule::new(&grid, 8);
    let dens = |x: f64| p.density_at(x);
    let dd = rule.integrate_pairs(&|x, y| kernel.eval(x, y), &[&dens], &[(0, 0)])[0];
    let mut cross = Neumaier::new();
    for (&x, &w) in rule.x.iter().zip(&rule.w) {
        let d = dens(x);
        if d == 0.0 {
            continue;
        }
        for &(a, ma) in &atoms {
            cross.add(w * d * ma * (kernel.eval(a, x) + kernel.eval(x, a)));
        }
    }
    record(aa + dd + cross.total(), EstimatorKind::VPluginGeneric, None, kernel, Algorithm::ProductQuadrature)
}

/// Appends geometric breaks beyond the edges until the neglected part of
/// `∫ φ_{λ′}·tail` is below `1e-15` of the part it continues.
fn extend_tails(grid: &mut Vec<f64>, left: &Tail, right: &Tail, lp: f64) {
    for (t, is_left) in [(left, true), (right, false)] {
        let g = t.growth();
        if g == f64::NEG_INFINITY {
            continue;
        }
        let edge = if is_left { grid[0] } else { *grid.last().unwrap() };
        // remaining mass decays like r^{g + lp + 1}
        let decay = g + lp + 1.0;
        let mut r = 1.0 + edge.abs();
        let mut pts = Vec::new();
        while r.powf(decay) > 1e-15 * (1.0 + edge.abs()).powf(decay) && pts.len() < 400 {
            r *= 1.25;
            pts.push(if is_left { -(r - 1.0) } else { r - 1.0 });
        }
        *grid = merge_grids(grid, &pts);
    }
}

/// `U(P_ε F̂_n)`. Exact at `ε = 0`, where it is the EDF statistic.
pub fn v_statistic_smoothed(kernel: &Kernel, s: &SmoothedCdf) -> Result<EstimateRecord> {
    let sample = s.base.sorted();
    let n = sample.len();
    if s.epsilon == 0.0 {
        let mut r = v_statistic_edf(kernel, sample)?;
        r.estimator_kind = EstimatorKind::VPluginSmoothed;
        return Ok(r);
    }
    let nf = n as f64;
    // X_i + sZ − (X_j + sZ') ~ N(X_i − X_j, τ²)
    let tau = s.scale() * std::f64::consts::SQRT_2;
    match kernel.repr {
        KernelRepr::Gini => {
            let base = gini_pair_sum(sample);
            let diag = nf * tau * (2.0 / std::f64::consts::PI).sqrt();
            let close = block_sum(n, |i, acc| {
                let xi = sample[i];
                for &xj in &sample[i + 1..] {
                    let r = (xj - xi) / tau;
                    if r > GINI_CUTOFF {
                        break;
                    }
                    acc.add(2.0 * tau * excess_abs(r));
                }
            });
            record((base + diag + close) / (nf * nf), EstimatorKind::VPluginSmoothed, Some(n), kernel, Algorithm::ClosedFormPairs)
        }
        KernelRepr::Variance => {
            let v = centred_square_sum(sample) / nf + 0.5 * tau * tau;
            record(v, EstimatorKind::VPluginSmoothed, Some(n), kernel, Algorithm::ClosedFormPairs)
        }
        _ => {
            let (z, w) = gauss_hermite(HERMITE_ORDER);
            let sc = s.scale();
            let total = block_sum(n, |i, acc| {
                let xi = sample[i];
                for &xj in sample {
                    let mut pair = Neumaier::new();
                    for (za, wa) in z.iter().zip(&w) {
                        for (zb, wb) in z.iter().zip(&w) {
                            pair.add(wa * wb * kernel.eval(xi + sc * za, xj + sc * zb));
                        }
                    }
                    acc.merge(pair);
                }
            });
            record(total / (nf * nf), EstimatorKind::VPluginSmoothed, Some(n), kernel, Algorithm::HermitePairs)
        }
    }
}

/// Pairs further apart than this many `τ` add less than `1e-19 τ`.
const GINI_CUTOFF: f64 = 9.0;
const HERMITE_ORDER: usize = 16;

/// `(E|Y| − |μ|)/τ` for `Y ~ N(μ, τ²)` and `r = |μ|/τ`: `2(φ(r) − r Φ̄(r))`.
fn excess_abs(r: f64) -> f64 {
    2.0 * (norm_pdf(r) - r * norm_cdf(-r))
}

/// `√n(F̂_n − F)` on the projection grid and the sample points, with zero
/// tails.
pub fn empirical_process_on(grid: &[f64], f: &DistributionModel, sample: &[f64]) -> Result<GridFunction> {
    let edf = EmpiricalCdf::new(sample)?;
    let root = (edf.n() as f64).sqrt();
    let xs = merge_grids(grid, &edf.jumps().0);
    let mut values: Vec<f64> = xs.iter().map(|&x| root * (edf.eval(x) - f.cdf(x))).collect();
    let mut left: Vec<f64> = xs.iter().map(|&x| root * (edf.eval_left(x) - f.cdf(x))).collect();
    // beyond the outer quantiles F and F̂_n agree to rounding
    left[0] = 0.0;
    let last = values.len() - 1;
    values[last] = 0.0;
    GridFunction::new(xs, values, left, Tail::ZERO, Tail::ZERO)
}

/// The linear part `−Σ_i ∫ √n(F̂_n − F) dg_{i,F}`.
pub fn hoeffding_linear_part(kernel: &Kernel, f: &DistributionModel, sample: &[f64]) -> Result<f64> {
    hoeffding_linear_part_with(&project(kernel, f)?, f, sample)
}

pub fn hoeffding_linear_part_with(p: &Projection, f: &DistributionModel, sample: &[f64]) -> Result<f64> {
    let process = empirical_process_on(p.g1.grid(), f, sample)?;
    let a = stieltjes(&process, &p.dg1, false)?;
    let b = stieltjes(&process, &p.dg2, false)?;
    Ok(-(a + b))
}

/// `√n(n⁻¹ Σ W(X_i) − E W)` with `W = g_{1,F} + g_{2,F}` and `E W = 2U(F)`,
/// the same linear part by direct summation.
pub fn linear_part_direct(p: &Projection, u_f: f64, sample: &[f64]) -> f64 {
    let n = sample.len() as f64;
    let mean = sample.iter().map(|&x| p.g1.eval(x) + p.g2.eval(x)).collect::<Neumaier>().total() / n;
    n.sqrt() * (mean - 2.0 * u_f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bv::{Measure, Quadratic};
    use crate::kernels::{gini_kernel, variance_kernel};

    fn lcg(n: usize, seed: u64) -> Vec<f64> {
        let mut s = seed;
        (0..n)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (s >> 11) as f64 / (1u64 << 53) as f64
            })
            .collect()
    }

    #[test]
    fn hand_sums() {
        let g = gini_kernel();
        let v = variance_kernel();
        assert_eq!(v_statistic_edf(&g, &[0.0, 1.0]).unwrap().value, 0.5);
        assert_eq!(v_statistic_edf(&v, &[0.0, 2.0]).unwrap().value, 1.0);
        assert_eq!(u_statistic(&g, &[0.0, 1.0]).unwrap().value, 1.0);
        assert!(u_statistic(&g, &[0.0]).is_err());
        assert!(v_statistic_edf(&g, &[]).is_err());
        let gap = uv_gap(&g, &[0.0, 1.0]).unwrap();
        assert!((gap.s1 - 2f64.sqrt() * 0.5).abs() < 1e-15);
        assert_eq!(gap.s2, 0.0);
        assert!((gap.gap - 2f64.sqrt() * 0.5).abs() < 1e-15);
    }

    #[test]
    fn unbiased_variance() {
        let x = lcg(50, 3);
        let m = x.iter().sum::<f64>() / 50.0;
        let s2 = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / 49.0;
        assert!((u_statistic(&variance_kernel(), &x).unwrap().value - s2).abs() < 1e-15);
    }

    #[test]
    fn fast_paths_match_definitions() {
        for seed in 0..5 {
            let x: Vec<f64> = lcg(300, seed).iter().map(|u| 10.0 * u - 3.0).collect();
            for k in [gini_kernel(), variance_kernel()] {
                let fast = v_statistic_edf(&k, &x).unwrap();
                let slow = v_statistic_generic(&k, &x).unwrap();
                assert_ne!(fast.algorithm, Algorithm::GenericQuadratic);
                assert!((fast.value - slow.value).abs() <= 1e-12 * slow.value.abs());
                let fu = u_statistic(&k, &x).unwrap().value;
                let su = u_statistic_generic(&k, &x).unwrap().value;
                assert!((fu - su).abs() <= 1e-12 * su.abs());
            }
        }
    }

    #[test]
    fn custom_kernel_with_diagonal() {
        let k = Kernel::custom("prod", true, 1.0, |x, y| x * y).unwrap();
        let x = [1.0, 2.0, 4.0];
        let gap = uv_gap(&k, &x).unwrap();
        assert!(gap.s2 > 0.0);
        // U_n of x·y is ((Σx)² − Σx²)/(n(n−1))
        assert!((u_statistic(&k, &x).unwrap().value - (49.0 - 21.0) / 6.0).abs() < 1e-14);
    }

    #[test]
    fn plugin_agrees_with_edf() {
        let x = lcg(200, 9);
        let edf = EmpiricalCdf::new(&x).unwrap();
        for k in [gini_kernel(), variance_kernel()] {
            let a = v_statistic_edf(&k, &x).unwrap().value;
            let b = v_statistic_plugin(&k, PluginInput::Measure(&edf.to_measure())).unwrap().value;
            assert!((a - b).abs() < 1e-10 * a);
        }
    }

    #[test]
    fn plugin_on_densities() {
        let u = SignedMeasure::from_positive(Measure::from_density(vec![0.0, 0.25, 0.5, 1.0], |_| 1.0).unwrap());
        let v = v_statistic_plugin(&gini_kernel(), PluginInput::Measure(&u)).unwrap().value;
        assert!((v - 1.0 / 3.0).abs() < 1e-14);
        // half atom at 0.5 plus half uniform: ¼·⅓ + 2·½·½·¼ = 1/12 + 1/8
        let half = Measure::new(vec![0.0, 0.5, 1.0], vec![0.0, 0.5, 0.0], vec![Quadratic::constant(0.5); 2], Tail::ZERO, Tail::ZERO).unwrap();
        let v = v_statistic_plugin(&gini_kernel(), PluginInput::Measure(&SignedMeasure::from_positive(half))).unwrap().value;
        assert!((v - (1.0 / 12.0 + 1.0 / 8.0)).abs() < 1e-14, "{v}");
        let pm = SignedMeasure::from_positive(Measure::atomic(vec![0.0], vec![1.0]).unwrap());
        assert_eq!(v_statistic_plugin(&gini_kernel(), PluginInput::Measure(&pm)).unwrap().value, 0.0);
        let n = DistributionModel::standard_normal();
        assert!((v_statistic_plugin(&variance_kernel(), PluginInput::Model(&n)).unwrap().value - 1.0).abs() < 1e-12);
        let neg = pm.negate();
        assert!(matches!(v_statistic_plugin(&gini_kernel(), PluginInput::Measure(&neg)), Err(Error::Precondition(_))));
    }

    #[test]
    fn smoothed_closed_forms_match_hermite() {
        let x: Vec<f64> = lcg(40, 5);
        let s = SmoothedCdf::new(EmpiricalCdf::new(&x).unwrap(), 0.01).unwrap();
        for k in [gini_kernel(), variance_kernel()] {
            let closed = v_statistic_smoothed(&k, &s).unwrap().value;
            let name = k.name.clone();
            let black = Kernel::custom(name, true, k.lambda_prime, move |a, b| k.eval(a, b)).unwrap();
            let gh = v_statistic_smoothed(&black, &s).unwrap();
            assert_eq!(gh.algorithm, Algorithm::HermitePairs);
            // |·| has a kink, so Gauss–Hermite converges slowly there
            assert!((closed - gh.value).abs() < 2e-3 * closed, "{closed} {}", gh.value);
        }
        let s0 = SmoothedCdf::new(EmpiricalCdf::new(&x).unwrap(), 0.0).unwrap();
        assert_eq!(
            v_statistic_smoothed(&gini_kernel(), &s0).unwrap().value,
            v_statistic_edf(&gini_kernel(), &x).unwrap().value
        );
    }

    #[test]
    fn smoothed_variance_adds_twice_epsilon() {
        let x = [0.0, 2.0];
        let s = SmoothedCdf::new(EmpiricalCdf::new(&x).unwrap(), 0.3).unwrap();
        assert!((v_statistic_smoothed(&variance_kernel(), &s).unwrap().value - 1.6).abs() < 1e-14);
    }

    #[test]
    fn linear_part_forms_agree() {
        let f = DistributionModel::uniform();
        let k = gini_kernel();
        let p = crate::kernels::project_with(&k, &f, 801).unwrap();
        let x = lcg(500, 11);
        let a = hoeffding_linear_part_with(&p, &f, &x).unwrap();
        // W = 2 g₁ with g₁(x) = x² − x + ½ exactly
        let w: f64 = x.iter().map(|v| 2.0 * (v * v - v + 0.5)).sum::<f64>() / 500.0;
        let b = 500f64.sqrt() * (w - 2.0 / 3.0);
        assert!((a - b).abs() < 1e-11, "{a} {b}");
        // interpolating g₁ between grid nodes costs O(h²)
        assert!((linear_part_direct(&p, 1.0 / 3.0, &x) - b).abs() < 1e-3);
    }
}
