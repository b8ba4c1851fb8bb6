//! Strictly stationary sequences with a declared marginal, built from a
//! stationary Gaussian latent sequence through the quantile transform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::empirical::DistributionModel;
use crate::error::{invalid, Result};

/// Latent dynamics of a [`DependentProcess`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProcessKind {
    Iid,
    /// `Z_{i+1} = φ Z_i + √(1−φ²) η_i`.
    GaussianCopulaAr1 { phi: f64 },
    /// Standardized ARMA(1,1): `Y_t = φ Y_{t−1} + e_t + θ e_{t−1}`.
    GaussianCopulaArma { phi: f64, theta: f64 },
    /// AR(1) latent with `φ ≥ 0`, hence an associated sequence.
    AssociatedGaussian { phi: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependentProcess {
    #[serde(flatten)]
    pub kind: ProcessKind,
    pub marginal: DistributionModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MixingKind {
    Alpha,
    Beta,
    Rho,
    Associated,
    /// Independent data.
    None,
}

/// Decay profile of a dependence coefficient. `theta == None` is a
/// geometric rate, which dominates every polynomial one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixingProfile {
    pub kind: MixingKind,
    /// Polynomial exponent `θ` (for association: `ν`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    /// `κ` of the β-mixing condition; optimized over when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    /// `ε` of the ρ-mixing condition; taken to 0+ when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

impl MixingProfile {
    pub fn geometric(kind: MixingKind) -> Self {
        Self { kind, theta: None, kappa: None, epsilon: None }
    }

    pub fn polynomial(kind: MixingKind, theta: f64) -> Self {
        Self { kind, theta: Some(theta), kappa: None, epsilon: None }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("theta", self.theta), ("kappa", self.kappa), ("epsilon", self.epsilon)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(invalid(format!("mixing parameter {name} must be positive, got {v}")));
                }
            }
        }
        Ok(())
    }
}

impl DependentProcess {
    pub fn iid(marginal: DistributionModel) -> Self {
        Self { kind: ProcessKind::Iid, marginal }
    }

    pub fn ar1(phi: f64, marginal: DistributionModel) -> Self {
        Self { kind: ProcessKind::GaussianCopulaAr1 { phi }, marginal }
    }

    pub fn validate(&self) -> Result<()> {
        self.marginal.validate()?;
        let check = |name: &str, v: f64| {
            if v.is_finite() && v.abs() < 1.0 {
                Ok(())
            } else {
                Err(invalid(format!("{name} must lie in (−1, 1), got {v}")))
            }
        };
        match self.kind {
            ProcessKind::Iid => Ok(()),
            ProcessKind::GaussianCopulaAr1 { phi } => check("phi", phi),
            ProcessKind::GaussianCopulaArma { phi, theta } => {
                check("phi", phi)?;
                check("theta", theta)
            }
            ProcessKind::AssociatedGaussian { phi } => {
                check("phi", phi)?;
                if phi < 0.0 {
                    return Err(invalid(format!("an associated latent AR(1) needs phi ≥ 0, got {phi}")));
                }
                Ok(())
            }
        }
    }

    /// Latent autocorrelation at lag `h ≥ 1`.
    pub fn latent_correlation(&self, h: usize) -> f64 {
        let h = h as i32;
        match self.kind {
            ProcessKind::Iid => 0.0,
            ProcessKind::GaussianCopulaAr1 { phi } | ProcessKind::AssociatedGaussian { phi } => phi.powi(h),
            ProcessKind::GaussianCopulaArma { phi, theta } => {
                let r1 = (1.0 + phi * theta) * (phi + theta) / (1.0 + 2.0 * phi * theta + theta * theta);
                r1 * phi.powi(h - 1)
            }
        }
    }

    pub fn is_independent(&self) -> bool {
        match self.kind {
            ProcessKind::Iid => true,
            ProcessKind::GaussianCopulaAr1 { phi } | ProcessKind::AssociatedGaussian { phi } => phi == 0.0,
            ProcessKind::GaussianCopulaArma { phi, theta } => phi == 0.0 && theta == 0.0,
        }
    }

    pub fn label(&self) -> String {
        let m = self.marginal.label();
        match self.kind {
            ProcessKind::Iid => format!("iid {m}"),
            ProcessKind::GaussianCopulaAr1 { phi } => format!("gaussian-copula AR(1) phi={phi} {m}"),
            ProcessKind::GaussianCopulaArma { phi, theta } => format!("gaussian-copula ARMA(1,1) phi={phi} theta={theta} {m}"),
            ProcessKind::AssociatedGaussian { phi } => format!("associated gaussian AR(1) phi={phi} {m}"),
        }
    }
}

/// Generator for replicate `stream` of the given seed.
pub fn replicate_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stationary latent standard-normal sequence of length `n`.
pub fn latent_path(process: &DependentProcess, n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut z = Vec::with_capacity(n);
    let mut normal = || -> f64 { rng.sample(StandardNormal) };
    match process.kind {
        ProcessKind::Iid => z.extend((0..n).map(|_| normal())),
        ProcessKind::GaussianCopulaAr1 { phi } | ProcessKind::AssociatedGaussian { phi } => {
            let innov = (1.0 - phi * phi).sqrt();
            let mut cur = normal();
            for _ in 0..n {
                z.push(cur);
                cur = phi * cur + innov * normal();
            }
        }
        ProcessKind::GaussianCopulaArma { phi, theta } => {
            let var = (1.0 + 2.0 * phi * theta + theta * theta) / (1.0 - phi * phi);
            let sd = var.sqrt();
            // (Y_1, e_1) from the stationary law: Cov(Y, e) = 1
            let mut e = normal();
            let mut y = e + ((phi + theta).powi(2) / (1.0 - phi * phi)).sqrt() * normal();
            for _ in 0..n {
                z.push(y / sd);
                let e_next = normal();
                y = phi * y + e_next + theta * e;
                e = e_next;
            }
        }
    }
    z
}

/// `n` observations of the process; deterministic in `(process, n, seed)`,
/// and a prefix of every longer draw with the same seed.
pub fn generate(process: &DependentProcess, n: usize, seed: u64) -> Result<Vec<f64>> {
    generate_replicate(process, n, seed, 0)
}

pub fn generate_replicate(process: &DependentProcess, n: usize, seed: u64, replicate: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(invalid("cannot generate an empty sample"));
    }
    process.validate()?;
    let mut rng = replicate_rng(seed, replicate);
    Ok(latent_path(process, n, &mut rng).into_iter().map(|z| process.marginal.from_standard_normal(z)).collect())
}

/// Dependence profiles the generator guarantees. The Gaussian AR and ARMA
/// latents are geometrically α-, β- and ρ-mixing; with nonnegative latent
/// autocorrelations they are also associated.
pub fn declared_profile(process: &DependentProcess) -> Vec<MixingProfile> {
    use MixingKind::*;
    let mut out = Vec::new();
    if process.is_independent() {
        out.push(MixingProfile::geometric(None));
    }
    out.extend([Alpha, Beta, Rho].map(MixingProfile::geometric));
    let associated = match process.kind {
        ProcessKind::Iid => true,
        ProcessKind::GaussianCopulaAr1 { phi } | ProcessKind::AssociatedGaussian { phi } => phi >= 0.0,
        ProcessKind::GaussianCopulaArma { phi, .. } => phi >= 0.0 && process.latent_correlation(1) >= 0.0,
    };
    if associated {
        out.push(MixingProfile::geometric(Associated));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::empirical::EmpiricalCdf;

    fn lag_corr(x: &[f64], h: usize) -> f64 {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        let v = x.iter().map(|a| (a - m).powi(2)).sum::<f64>();
        x.windows(h + 1).map(|w| (w[0] - m) * (w[h] - m)).sum::<f64>() / v
    }

    #[test]
    fn reproducible_and_prefix() {
        let p = DependentProcess::ar1(0.5, DistributionModel::standard_normal());
        let a = generate(&p, 100, 7).unwrap();
        let b = generate(&p, 300, 7).unwrap();
        assert_eq!(a, b[..100]);
        assert_ne!(generate_replicate(&p, 100, 7, 1).unwrap(), a);
    }

    #[test]
    fn ar1_autocorrelation() {
        let p = DependentProcess::ar1(0.5, DistributionModel::standard_normal());
        let x = generate(&p, 100_000, 1).unwrap();
        for h in 1..4 {
            assert!((lag_corr(&x, h) - 0.5f64.powi(h as i32)).abs() < 0.015);
        }
        let iid = generate(&DependentProcess::ar1(0.0, DistributionModel::uniform()), 100_000, 2).unwrap();
        assert!(lag_corr(&iid, 1).abs() < 3.0 / 100_000f64.sqrt());
    }

    #[test]
    fn arma_marginal_and_correlation() {
        let p = DependentProcess { kind: ProcessKind::GaussianCopulaArma { phi: 0.6, theta: 0.3 }, marginal: DistributionModel::standard_normal() };
        let x = generate(&p, 100_000, 3).unwrap();
        let v = x.iter().map(|a| a * a).sum::<f64>() / x.len() as f64;
        assert!((v - 1.0).abs() < 0.03);
        assert!((lag_corr(&x, 1) - p.latent_correlation(1)).abs() < 0.015);
        assert!((lag_corr(&x, 2) - p.latent_correlation(2)).abs() < 0.015);
    }

    #[test]
    fn marginal_is_declared() {
        let f = DistributionModel::Exponential { rate: 2.0 };
        let x = generate(&DependentProcess::ar1(0.3, f.clone()), 100_000, 4).unwrap();
        assert!(EmpiricalCdf::new(&x).unwrap().kolmogorov_distance(&f) < 0.006);
    }

    #[test]
    fn profiles() {
        let p = DependentProcess::ar1(-0.4, DistributionModel::uniform());
        let kinds: Vec<MixingKind> = declared_profile(&p).iter().map(|m| m.kind).collect();
        assert!(!kinds.contains(&MixingKind::Associated));
        let iid = declared_profile(&DependentProcess::iid(DistributionModel::uniform()));
        assert_eq!(iid[0].kind, MixingKind::None);
        assert!(DependentProcess::ar1(1.0, DistributionModel::uniform()).validate().is_err());
        assert!(MixingProfile::polynomial(MixingKind::Alpha, -1.0).validate().is_err());
    }

    #[test]
    fn process_from_toml() {
        let p: DependentProcess = toml::from_str("kind = \"gaussian-copula-ar1\"\nphi = 0.5\n[marginal]\nname = \"normal\"\n").unwrap();
        assert_eq!(p.kind, ProcessKind::GaussianCopulaAr1 { phi: 0.5 });
    }
}
