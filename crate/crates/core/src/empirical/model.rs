use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, StudentsT};

use crate::error::{invalid, Result};
use crate::special::{norm_cdf, norm_pdf, norm_quantile};

fn one() -> f64 {
    1.0
}

/// Parametric marginal distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DistributionModel {
    Uniform {
        #[serde(default)]
        a: f64,
        #[serde(default = "one")]
        b: f64,
    },
    Normal {
        #[serde(default)]
        mean: f64,
        #[serde(default = "one")]
        sd: f64,
    },
    Exponential {
        #[serde(default = "one")]
        rate: f64,
    },
    /// Pareto type I: `P(X > x) = (scale / x)^shape` for `x ≥ scale`.
    Pareto {
        #[serde(default = "one")]
        scale: f64,
        shape: f64,
    },
    StudentT {
        dof: f64,
        #[serde(default)]
        location: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    Cauchy {
        #[serde(default)]
        location: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    PointMass {
        #[serde(default)]
        at: f64,
    },
}

/// Shape of the distribution tails.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TailFamily {
    Bounded,
    Exponential,
    Gaussian,
    /// `P(|X| > x) ≍ x^{−index}`.
    Power { index: f64 },
}

impl DistributionModel {
    pub fn uniform() -> Self {
        Self::Uniform { a: 0.0, b: 1.0 }
    }
    pub fn standard_normal() -> Self {
        Self::Normal { mean: 0.0, sd: 1.0 }
    }

    /// Rejects non-finite or out-of-range parameters.
    pub fn validate(&self) -> Result<()> {
        use DistributionModel::*;
        let ok = match *self {
            Uniform { a, b } => a.is_finite() && b.is_finite() && a < b,
            Normal { mean, sd } => mean.is_finite() && sd.is_finite() && sd > 0.0,
            Exponential { rate } => rate.is_finite() && rate > 0.0,
            Pareto { scale, shape } => scale > 0.0 && scale.is_finite() && shape > 0.0 && shape.is_finite(),
            StudentT { dof, location, scale } => dof > 0.0 && dof.is_finite() && location.is_finite() && scale > 0.0 && scale.is_finite(),
            Cauchy { location, scale } => location.is_finite() && scale > 0.0 && scale.is_finite(),
            PointMass { at } => at.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("invalid distribution parameters: {self:?}")))
        }
    }

    pub fn label(&self) -> String {
        use DistributionModel::*;
        match *self {
            Uniform { a, b } => format!("uniform({a}, {b})"),
            Normal { mean, sd } => format!("normal({mean}, {sd})"),
            Exponential { rate } => format!("exponential({rate})"),
            Pareto { scale, shape } => format!("pareto({scale}, {shape})"),
            StudentT { dof, location, scale } => format!("student-t({dof}, {location}, {scale})"),
            Cauchy { location, scale } => format!("cauchy({location}, {scale})"),
            PointMass { at } => format!("point-mass({at})"),
        }
    }

    fn student(dof: f64) -> StudentsT {
        StudentsT::new(0.0, 1.0, dof).expect("validated degrees of freedom")
    }

    /// Distribution function `F(x) = P(X ≤ x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        use DistributionModel::*;
        match *self {
            Uniform { a, b } => ((x - a) / (b - a)).clamp(0.0, 1.0),
            Normal { mean, sd } => norm_cdf((x - mean) / sd),
            Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            Pareto { scale, shape } => {
                if x <= scale {
                    0.0
                } else {
                    -(shape * (scale / x).ln()).exp_m1()
                }
            }
            StudentT { dof, location, scale } => {
                let t = (x - location) / scale;
                if t > 0.0 {
                    1.0 - Self::student(dof).cdf(-t)
                } else {
                    Self::student(dof).cdf(t)
                }
            }
            Cauchy { location, scale } => {
                let t = (x - location) / scale;
                if t > 0.0 {
                    1.0 - (1.0 / t).atan() / PI
                } else {
                    0.5 + t.atan() / PI
                }
            }
            PointMass { at } => {
                if x >= at {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Survival function `1 − F(x)`, accurate in the right tail.
    pub fn sf(&self, x: f64) -> f64 {
        use DistributionModel::*;
        match *self {
            Uniform { .. } | PointMass { .. } => 1.0 - self.cdf(x),
            Normal { mean, sd } => norm_cdf(-(x - mean) / sd),
            Exponential { rate } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-rate * x).exp()
                }
            }
            Pareto { scale, shape } => {
                if x <= scale {
                    1.0
                } else {
                    (scale / x).powf(shape)
                }
            }
            StudentT { dof, location, scale } => {
                let t = (x - location) / scale;
                if t > 0.0 {
                    Self::student(dof).cdf(-t)
                } else {
                    1.0 - Self::student(dof).cdf(t)
                }
            }
            Cauchy { location, scale } => {
                let t = (x - location) / scale;
                if t > 0.0 {
                    (1.0 / t).atan() / PI
                } else {
                    0.5 - t.atan() / PI
                }
            }
        }
    }

    /// Density; `None` for distributions without one.
    pub fn pdf(&self, x: f64) -> Option<f64> {
        use DistributionModel::*;
        Some(match *self {
            Uniform { a, b } => {
                if x >= a && x <= b {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
            Normal { mean, sd } => norm_pdf((x - mean) / sd) / sd,
            Exponential { rate } => {
                if x < 0.0 {
                    0.0
                } else {
                    rate * (-rate * x).exp()
                }
            }
            Pareto { scale, shape } => {
                if x < scale {
                    0.0
                } else {
                    shape / x * (scale / x).powf(shape)
                }
            }
            StudentT { dof, location, scale } => Self::student(dof).pdf((x - location) / scale) / scale,
            Cauchy { location, scale } => {
                let t = (x - location) / scale;
                1.0 / (PI * scale * (1.0 + t * t))
            }
            PointMass { .. } => return None,
        })
    }

    /// Generalised inverse `inf{x : F(x) ≥ u}`.
    pub fn quantile(&self, u: f64) -> f64 {
        if u > 0.5 {
            return self.upper_quantile(1.0 - u);
        }
        use DistributionModel::*;
        match *self {
            Uniform { a, b } => a + u * (b - a),
            Normal { mean, sd } => mean + sd * norm_quantile(u),
            Exponential { rate } => -(-u).ln_1p() / rate,
            Pareto { scale, shape } => scale * (-(-u).ln_1p() / shape).exp(),
            StudentT { dof, location, scale } => {
                if u <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    location + scale * Self::student(dof).inverse_cdf(u)
                }
            }
            Cauchy { location, scale } => {
                if u <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    location - scale / (PI * u).tan()
                }
            }
            PointMass { at } => at,
        }
    }

    /// `x` with `P(X > x) = p`, accurate for small `p`.
    pub fn upper_quantile(&self, p: f64) -> f64 {
        use DistributionModel::*;
        if p >= 0.5 {
            return self.quantile(1.0 - p);
        }
        match *self {
            Uniform { a, b } => b - p * (b - a),
            Normal { mean, sd } => mean - sd * norm_quantile(p),
            Exponential { rate } => {
                if p <= 0.0 {
                    f64::INFINITY
                } else {
                    -p.ln() / rate
                }
            }
            Pareto { scale, shape } => {
                if p <= 0.0 {
                    f64::INFINITY
                } else {
                    scale * p.powf(-1.0 / shape)
                }
            }
            StudentT { dof, location, scale } => {
                if p <= 0.0 {
                    f64::INFINITY
                } else {
                    location - scale * Self::student(dof).inverse_cdf(p)
                }
            }
            Cauchy { location, scale } => {
                if p <= 0.0 {
                    f64::INFINITY
                } else {
                    location + scale / (PI * p).tan()
                }
            }
            PointMass { at } => at,
        }
    }

    /// `F^{-1}(Φ(z))`, evaluated through the tail that is small.
    pub fn from_standard_normal(&self, z: f64) -> f64 {
        if let DistributionModel::Normal { mean, sd } = *self {
            return mean + sd * z;
        }
        if z > 0.0 {
            self.upper_quantile(norm_cdf(-z))
        } else {
            self.quantile(norm_cdf(z))
        }
    }

    pub fn mean(&self) -> Option<f64> {
        use DistributionModel::*;
        match *self {
            Uniform { a, b } => Some(0.5 * (a + b)),
            Normal { mean, .. } => Some(mean),
            Exponential { rate } => Some(1.0 / rate),
            Pareto { scale, shape } => (shape > 1.0).then(|| shape * scale / (shape - 1.0)),
            StudentT { dof, location, .. } => (dof > 1.0).then_some(location),
            Cauchy { .. } => None,
            PointMass { at } => Some(at),
        }
    }

    pub fn variance(&self) -> Option<f64> {
        use DistributionModel::*;
        match *self {
            Uniform { a, b } => Some((b - a).powi(2) / 12.0),
            Normal { sd, .. } => Some(sd * sd),
            Exponential { rate } => Some(1.0 / (rate * rate)),
            Pareto { scale, shape } => {
                (shape > 2.0).then(|| scale * scale * shape / ((shape - 1.0).powi(2) * (shape - 2.0)))
            }
            StudentT { dof, scale, .. } => (dof > 2.0).then(|| scale * scale * dof / (dof - 2.0)),
            Cauchy { .. } => None,
            PointMass { .. } => Some(0.0),
        }
    }

    /// Supremum `γ` of the exponents `p` with `E|X|^p < ∞` (exclusive for
    /// power tails, `+∞` for lighter tails).
    pub fn gamma_moment(&self) -> f64 {
        match self.tail_family() {
            TailFamily::Power { index } => index,
            _ => f64::INFINITY,
        }
    }

    pub fn tail_family(&self) -> TailFamily {
        use DistributionModel::*;
        match *self {
            Uniform { .. } | PointMass { .. } => TailFamily::Bounded,
            Normal { .. } => TailFamily::Gaussian,
            Exponential { .. } => TailFamily::Exponential,
            Pareto { shape, .. } => TailFamily::Power { index: shape },
            StudentT { dof, .. } => TailFamily::Power { index: dof },
            Cauchy { .. } => TailFamily::Power { index: 1.0 },
        }
    }

    /// `∫φ_p dF < ∞` for the weight `(1+|x|)^p`.
    pub fn has_weighted_moment(&self, p: f64) -> bool {
        p <= 0.0 || p < self.gamma_moment()
    }

    /// Closed support interval (ends may be infinite).
    pub fn support(&self) -> (f64, f64) {
        use DistributionModel::*;
        match *self {
            Uniform { a, b } => (a, b),
            Exponential { .. } => (0.0, f64::INFINITY),
            Pareto { scale, .. } => (scale, f64::INFINITY),
            PointMass { at } => (at, at),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn is_continuous(&self) -> bool {
        !matches!(self, DistributionModel::PointMass { .. })
    }

    /// Lipschitz constant of `F`, i.e. the supremum of the density.
    pub fn lipschitz_bound(&self) -> Option<f64> {
        use DistributionModel::*;
        match *self {
            Uniform { a, b } => Some(1.0 / (b - a)),
            Normal { sd, .. } => Some(norm_pdf(0.0) / sd),
            Exponential { rate } => Some(rate),
            Pareto { scale, shape } => Some(shape / scale),
            StudentT { dof, scale, .. } => Some(Self::student(dof).pdf(0.0) / scale),
            Cauchy { scale, .. } => Some(1.0 / (PI * scale)),
            PointMass { .. } => None,
        }
    }

    /// Decay exponent of `F(x)` as `x → −∞` (`left`) or of `1 − F(x)` as
    /// `x → +∞`: the power index for regularly varying tails, `None` for
    /// lighter or bounded tails.
    pub fn tail_exponent(&self, left: bool) -> Option<f64> {
        use DistributionModel::*;
        match *self {
            Pareto { shape, .. } if !left => Some(shape),
            StudentT { dof, .. } => Some(dof),
            Cauchy { .. } => Some(1.0),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn models() -> Vec<DistributionModel> {
        vec![
            DistributionModel::uniform(),
            DistributionModel::standard_normal(),
            DistributionModel::Normal { mean: 1.5, sd: 2.0 },
            DistributionModel::Exponential { rate: 2.0 },
            DistributionModel::Pareto { scale: 1.0, shape: 2.5 },
            DistributionModel::StudentT { dof: 5.0, location: 0.0, scale: 1.0 },
            DistributionModel::Cauchy { location: 0.0, scale: 1.0 },
        ]
    }

    #[test]
    fn quantile_inverts_cdf() {
        for m in models() {
            for &u in &[1e-12, 1e-6, 0.01, 0.3, 0.5, 0.8, 0.999, 1.0 - 1e-9] {
                let x = m.quantile(u);
                let back = if u > 0.5 { 1.0 - m.sf(x) } else { m.cdf(x) };
                let tol = 1e-9 * u.min(1.0 - u).max(1e-300) + 1e-15;
                assert!((back - u).abs() < tol.max(1e-12 * u), "{m:?} u={u}: {back}");
            }
        }
    }

    #[test]
    fn upper_quantile_in_far_tail() {
        for m in models() {
            let x = m.upper_quantile(1e-14);
            // a bounded support cannot resolve 1e-14 below its endpoint
            let tol = if m.tail_family() == TailFamily::Bounded { 1e-2 } else { 1e-6 };
            assert!(((m.sf(x) - 1e-14) / 1e-14).abs() < tol, "{m:?}");
        }
    }

    #[test]
    fn moments_and_tails_consistent() {
        assert_eq!(DistributionModel::Pareto { scale: 1.0, shape: 1.5 }.gamma_moment(), 1.5);
        assert!(DistributionModel::Pareto { scale: 1.0, shape: 1.5 }.has_weighted_moment(1.0));
        assert!(!DistributionModel::Cauchy { location: 0.0, scale: 1.0 }.has_weighted_moment(1.0));
        assert!(DistributionModel::standard_normal().has_weighted_moment(40.0));
        assert_eq!(DistributionModel::Exponential { rate: 1.0 }.mean(), Some(1.0));
    }

    #[test]
    fn density_integrates_to_cdf_increment() {
        let rule = crate::special::gauss_legendre(20);
        for m in models() {
            let (a, b) = (m.quantile(0.2), m.quantile(0.7));
            let mass = rule.integrate(a, b, |x| m.pdf(x).unwrap());
            assert!((mass - 0.5).abs() < 1e-8, "{m:?}: {mass}");
        }
    }

    #[test]
    fn config_names() {
        let m: DistributionModel = toml::from_str("name = 'student-t'\ndof = 3.0").unwrap();
        assert_eq!(m, DistributionModel::StudentT { dof: 3.0, location: 0.0, scale: 1.0 });
        let u: DistributionModel = toml::from_str("name = 'uniform'").unwrap();
        assert_eq!(u, DistributionModel::uniform());
    }
}
