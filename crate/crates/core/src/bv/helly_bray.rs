use serde::{Deserialize, Serialize};

use super::grid::GridFunction;
use super::jordan::measure_of;
use super::norm::{weighted_norm, WeightedNorm};
use super::stieltjes::stieltjes;
use crate::error::{Error, Result};

/// Convergence of `∫ψ df_n` to `∫ψ df` along a sequence of distribution-like
/// functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HellyBrayReport {
    pub reference: f64,
    pub integrals: Vec<f64>,
    pub gaps: Vec<f64>,
    /// `‖f_n − f‖_λ` for each element of the sequence.
    pub distances: Vec<f64>,
    /// Mean gap over the second half of the sequence is below the first half.
    pub decreasing: bool,
}

/// Checks the hypotheses of the weighted Helly–Bray lemma and reports the
/// integral gaps.
pub fn helly_bray_check(
    psi: &GridFunction,
    f: &GridFunction,
    f_seq: &[GridFunction],
    lambda: f64,
    lambda_prime: f64,
) -> Result<HellyBrayReport> {
    let pre = |msg: String| Error::Precondition(msg);
    if !(lambda > lambda_prime && lambda_prime >= 0.0) {
        return Err(pre(format!("need λ > λ′ ≥ 0, got λ = {lambda}, λ′ = {lambda_prime}")));
    }
    let psi_norm = weighted_norm(psi, &WeightedNorm::new(-lambda_prime));
    if psi_norm.divergent {
        return Err(pre(format!("‖ψ‖_{{−{lambda_prime}}} is infinite")));
    }
    let check = |g: &GridFunction, name: &str| -> Result<_> {
        let dg = measure_of(g).map_err(|_| pre(format!("{name} is not nondecreasing")))?;
        let mass = dg.positive.total_mass();
        if mass > 1.0 + 1e-9 {
            return Err(pre(format!("{name} has variation {mass} > 1")));
        }
        for (t, side) in [(dg.positive.tail_left(), "−∞"), (dg.positive.tail_right(), "+∞")] {
            let gr = t.growth();
            if gr > f64::NEG_INFINITY && gr + lambda_prime >= -1.0 {
                return Err(pre(format!("∫φ_{lambda_prime} d{name} diverges towards {side}")));
            }
        }
        Ok(dg)
    };
    let df = check(f, "f")?;
    let reference = stieltjes(psi, &df, false)?;
    let w = WeightedNorm::new(lambda);
    let mut integrals = Vec::with_capacity(f_seq.len());
    let mut distances = Vec::with_capacity(f_seq.len());
    for (i, fi) in f_seq.iter().enumerate() {
        let d = check(fi, &format!("f_{}", i + 1))?;
        integrals.push(stieltjes(psi, &d, false)?);
        distances.push(weighted_norm(&fi.sub(f), &w).value);
    }
    let gaps: Vec<f64> = integrals.iter().map(|v| (v - reference).abs()).collect();
    let half = gaps.len() / 2;
    let decreasing = if gaps.len() < 2 {
        true
    } else {
        let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
        mean(&gaps[gaps.len() - half..]) <= mean(&gaps[..half])
    };
    Ok(HellyBrayReport { reference, integrals, gaps, distances, decreasing })
}
