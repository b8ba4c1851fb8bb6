use serde::{Deserialize, Serialize};

use crate::datagen::{MixingKind, MixingProfile};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub statement: String,
    pub holds: bool,
}

/// The two thresholds on `θ` for quadratic kernels under α-mixing: the
/// classical `(3γ−1)/(2γ−8)` and `γ/(γ−4)` from the weighted approach.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateComparison {
    pub classical: f64,
    pub weighted: f64,
    /// `true` when the weighted threshold is the smaller (weaker) one.
    pub weighted_smaller: bool,
    /// Above this `γ` the classical threshold drops below `1+√2`, so the
    /// weighted conditions are weaker only for smaller `γ`.
    pub gamma_limit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub profile: MixingProfile,
    pub gamma: f64,
    pub lambda_prime: f64,
    pub conditions: Vec<Condition>,
    /// Open interval of admissible weight exponents `λ`; `None` when empty.
    pub interval: Option<(f64, f64)>,
    pub admissible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison: Option<RateComparison>,
}

fn cond(statement: String, holds: bool) -> Condition {
    Condition { statement, holds }
}

pub fn rate_comparison(gamma: f64) -> RateComparison {
    let classical = (3.0 * gamma - 1.0) / (2.0 * gamma - 8.0);
    let weighted = gamma / (gamma - 4.0);
    let r2 = 2f64.sqrt();
    RateComparison { classical, weighted, weighted_smaller: weighted < classical, gamma_limit: (7.0 + 8.0 * r2) / (2.0 * r2 - 1.0) }
}

/// Which rate and moment inequalities hold for the profile, and the open
/// interval of weight exponents `λ` they leave. Geometric rates stand for
/// every polynomial exponent, so rate conditions hold and the interval is
/// the supremum over exponents.
pub fn admissibility(profile: &MixingProfile, gamma: f64, lambda_prime: f64) -> AdmissibilityReport {
    let lp = lambda_prime;
    let mut conditions = vec![cond("profile parameters positive".into(), profile.validate().is_ok())];
    let theta = profile.theta;
    let upper = match profile.kind {
        MixingKind::None => {
            conditions.push(cond(format!("γ = {gamma} > 2λ′ = {}", 2.0 * lp), gamma > 2.0 * lp));
            gamma / 2.0
        }
        MixingKind::Alpha => {
            let min_theta = 1.0 + 2f64.sqrt();
            match theta {
                Some(t) => {
                    conditions.push(cond(format!("θ = {t} > 1+√2"), t > min_theta));
                    let need = 2.0 * t * lp / (t - 1.0);
                    conditions.push(cond(format!("γ = {gamma} > 2θλ′/(θ−1) = {need}"), gamma > need));
                    gamma * (t - 1.0) / (2.0 * t)
                }
                None => {
                    conditions.push(cond("geometric α-mixing rate".into(), true));
                    conditions.push(cond(format!("γ = {gamma} > 2λ′ = {}", 2.0 * lp), gamma > 2.0 * lp));
                    gamma / 2.0
                }
            }
        }
        MixingKind::Beta => {
            // κ must exceed 1 and θ/(θ−1); without a given κ take its infimum
            let kappa_min = match theta {
                Some(t) if t > 1.0 => t / (t - 1.0),
                Some(_) => f64::INFINITY,
                None => 1.0,
            };
            match profile.kappa {
                Some(k) => {
                    conditions.push(cond(format!("κ = {k} > 1"), k > 1.0));
                    if let Some(t) = theta {
                        conditions.push(cond(format!("θ = {t} > κ/(κ−1) = {}", k / (k - 1.0)), k > 1.0 && t > k / (k - 1.0)));
                    }
                    conditions.push(cond(format!("γ = {gamma} > 2λ′κ = {}", 2.0 * lp * k), gamma > 2.0 * lp * k));
                    gamma / (2.0 * k)
                }
                None => {
                    let ok = gamma / (2.0 * kappa_min) > lp;
                    conditions.push(cond(
                        format!("some κ > {kappa_min} has γ > 2λ′κ, i.e. κ < γ/(2λ′) = {}", gamma / (2.0 * lp)),
                        ok,
                    ));
                    gamma / (2.0 * kappa_min)
                }
            }
        }
        MixingKind::Rho => {
            conditions.push(cond("Σ ρ(2ⁿ) < ∞".into(), true));
            let eps = profile.epsilon.unwrap_or(0.0);
            let need = lp * (2.0 + eps);
            let text = if profile.epsilon.is_some() { format!("γ = {gamma} > λ′(2+ε) = {need}") } else { format!("γ = {gamma} > λ′(2+ε) = {need} for small ε > 0") };
            conditions.push(cond(text, gamma > need));
            gamma / (2.0 + eps)
        }
        MixingKind::Associated => {
            let min_nu = (3.0 + 33f64.sqrt()) / 2.0;
            match theta {
                Some(nu) => {
                    conditions.push(cond(format!("ν = {nu} ≥ (3+√33)/2"), nu >= min_nu));
                    let need = 2.0 * lp * nu / (nu - 3.0);
                    conditions.push(cond(format!("γ = {gamma} > 2λ′ν/(ν−3) = {need}"), gamma > need));
                    gamma * (nu - 3.0) / (2.0 * nu)
                }
                None => {
                    conditions.push(cond("geometric covariance decay".into(), true));
                    conditions.push(cond(format!("γ = {gamma} > 2λ′ = {}", 2.0 * lp), gamma > 2.0 * lp));
                    gamma / 2.0
                }
            }
        }
    };
    let all = conditions.iter().all(|c| c.holds);
    let admissible = all && upper > lp && lp >= 0.0;
    let comparison = (profile.kind == MixingKind::Alpha && gamma > 4.0).then(|| rate_comparison(gamma));
    AdmissibilityReport {
        profile: *profile,
        gamma,
        lambda_prime: lp,
        conditions,
        interval: admissible.then_some((lp, upper)),
        admissible,
        comparison,
    }
}
