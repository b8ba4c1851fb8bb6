use serde::{Deserialize, Serialize};

use super::model::{DistributionModel, TailFamily};
use crate::datagen::{generate, DependentProcess};
use crate::error::{invalid, Result};

/// Calibration sample size of [`gamma_spot_check`].
pub const CALIBRATION_DRAWS: usize = 100_000;
/// Upper order statistics used by the Hill estimate.
pub const HILL_FRACTION: f64 = 0.01;

/// Hill estimate of the tail index of `|X|` from the `k` largest values.
pub fn hill_estimate(sample: &[f64], k: usize) -> Result<f64> {
    let mut a: Vec<f64> = sample.iter().map(|x| x.abs()).collect();
    if k == 0 || k >= a.len() {
        return Err(invalid(format!("Hill estimate needs 0 < k < n, got k = {k}, n = {}", a.len())));
    }
    a.sort_by(|x, y| y.total_cmp(x));
    let base = a[k];
    if !(base > 0.0) {
        return Err(invalid("Hill estimate needs positive order statistics"));
    }
    let mean = a[..k].iter().map(|x| (x / base).ln()).sum::<f64>() / k as f64;
    Ok(1.0 / mean)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaCheck {
    pub declared: f64,
    pub estimate: f64,
    /// Set when the estimate contradicts the declaration. Never an error.
    pub warning: Option<String>,
}

/// Compares the declared moment exponent `γ` with a Hill estimate on a
/// calibration sample. Power tails warn beyond 30% relative deviation;
/// lighter tails warn when the estimate looks like a power tail below 2.
pub fn gamma_spot_check(f: &DistributionModel, seed: u64) -> Result<GammaCheck> {
    let declared = f.gamma_moment();
    let sample = generate(&DependentProcess::iid(f.clone()), CALIBRATION_DRAWS, seed)?;
    let k = (HILL_FRACTION * CALIBRATION_DRAWS as f64) as usize;
    let estimate = match f.tail_family() {
        TailFamily::Bounded => f64::INFINITY,
        _ => hill_estimate(&sample, k)?,
    };
    let warning = match f.tail_family() {
        TailFamily::Power { .. } if ((estimate - declared) / declared).abs() > 0.3 => Some(format!(
            "declared γ = {declared} for {} but the Hill estimate on {CALIBRATION_DRAWS} draws is {estimate:.3}",
            f.label()
        )),
        TailFamily::Exponential | TailFamily::Gaussian if estimate < 2.0 => Some(format!(
            "{} declares all moments but the Hill estimate on {CALIBRATION_DRAWS} draws is {estimate:.3}",
            f.label()
        )),
        _ => None,
    };
    Ok(GammaCheck { declared, estimate, warning })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LipschitzStatus {
    Verified,
    Unverified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzCheck {
    pub bound: Option<f64>,
    pub status: LipschitzStatus,
}

/// Lipschitz continuity of `F`: the declared density bound, confirmed on
/// a dense quantile grid. Models without a density are "unverified".
pub fn lipschitz_check(f: &DistributionModel) -> LipschitzCheck {
    let Some(bound) = f.lipschitz_bound() else {
        return LipschitzCheck { bound: None, status: LipschitzStatus::Unverified };
    };
    let (a, _) = f.support();
    let mut probes: Vec<f64> = (1..4096).map(|k| f.quantile(k as f64 / 4096.0)).collect();
    if a.is_finite() {
        probes.push(a);
    }
    let ok = probes.iter().all(|&x| f.pdf(x).is_some_and(|d| d <= bound * (1.0 + 1e-9)));
    LipschitzCheck { bound: Some(bound), status: if ok { LipschitzStatus::Verified } else { LipschitzStatus::Unverified } }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hill_recovers_pareto_index() {
        let f = DistributionModel::Pareto { scale: 1.0, shape: 2.5 };
        let c = gamma_spot_check(&f, 5).unwrap();
        assert!((c.estimate - 2.5).abs() < 0.25, "{}", c.estimate);
        assert!(c.warning.is_none());
    }

    #[test]
    fn light_tails_do_not_warn() {
        for f in [DistributionModel::standard_normal(), DistributionModel::Exponential { rate: 1.0 }, DistributionModel::uniform()] {
            assert!(gamma_spot_check(&f, 1).unwrap().warning.is_none());
        }
    }

    #[test]
    fn hill_on_student_t() {
        let sample = generate(&DependentProcess::iid(DistributionModel::StudentT { dof: 2.0, location: 0.0, scale: 1.0 }), 100_000, 2).unwrap();
        let est = hill_estimate(&sample, 1000).unwrap();
        assert!((est - 2.0).abs() < 0.4, "{est}");
    }

    #[test]
    fn lipschitz() {
        assert_eq!(lipschitz_check(&DistributionModel::standard_normal()).status, LipschitzStatus::Verified);
        let pm = lipschitz_check(&DistributionModel::PointMass { at: 0.0 });
        assert_eq!(pm.status, LipschitzStatus::Unverified);
        assert!(pm.bound.is_none());
    }
}
