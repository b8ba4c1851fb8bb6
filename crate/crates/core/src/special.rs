//! Special functions: the standard normal distribution, the bivariate normal
//! distribution function, Gauss–Legendre rules, and the Kolmogorov
//! distribution.

use std::f64::consts::{PI, SQRT_2};
use std::sync::OnceLock;

use libm::erfc;
use statrs::function::erf::erfc_inv;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal distribution function, accurate in both tails.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Standard normal quantile function.
pub fn norm_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let mut x = -SQRT_2 * erfc_inv(2.0 * p);
    // polish with Newton steps on the tail that is small
    for _ in 0..2 {
        let (err, dens) = if x < 0.0 {
            (norm_cdf(x) - p, norm_pdf(x))
        } else {
            ((1.0 - p) - norm_cdf(-x), norm_pdf(x))
        };
        if dens == 0.0 {
            break;
        }
        x -= err / dens;
    }
    x
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Computes the `n`-point rule by Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, z);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                let pn = if n == 1 { z } else { p1 };
                let pnm1 = if n == 1 { 1.0 } else { p0 };
                dp = n as f64 * (z * pn - pnm1) / (z * z - 1.0);
                if n == 1 {
                    dp = 1.0;
                }
                let dz = pn / dp;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let w = if n == 1 { 2.0 } else { 2.0 / ((1.0 - z * z) * dp * dp) };
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }
}

/// Shared rule with `n` points, cached for the common sizes.
pub fn gauss_legendre(n: usize) -> &'static GaussLegendre {
    static RULES: OnceLock<Vec<GaussLegendre>> = OnceLock::new();
    let rules = RULES.get_or_init(|| (1..=32).map(GaussLegendre::new).collect());
    assert!((1..=32).contains(&n), "cached Gauss-Legendre rules cover 1..=32 points");
    &rules[n - 1]
}

/// Nodes and weights with `E h(Z) ≈ Σ w_k h(z_k)` for `Z ~ N(0, 1)`
/// (Golub–Welsch on the probabilists' Hermite recurrence).
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut jacobi = nalgebra::DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = (k as f64).sqrt();
        jacobi[(k - 1, k)] = b;
        jacobi[(k, k - 1)] = b;
    }
    let eig = nalgebra::SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> =
        (0..n).map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2))).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// `P(X > h, Y > k)` for a standard bivariate normal pair with correlation `r`.
///
/// Genz's BVND algorithm (Drezner–Wesolowsky with Gauss–Legendre
/// quadrature, plus an asymptotic expansion for `|r| ≥ 0.925`); absolute
/// error below `1e-14`.
pub fn bvn_upper(h: f64, k: f64, r: f64) -> f64 {
    let rule = if r.abs() < 0.3 {
        gauss_legendre(6)
    } else if r.abs() < 0.75 {
        gauss_legendre(12)
    } else {
        gauss_legendre(20)
    };
    let mut k = k;
    let mut hk = h * k;
    let mut bvn = 0.0;
    if r.abs() < 0.925 {
        let hs = 0.5 * (h * h + k * k);
        let asr = r.asin();
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let sn = (asr * (x + 1.0) * 0.5).sin();
            bvn += w * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
        }
        // full symmetric rule == Genz's half-rule loop over both signs
        bvn = bvn * asr / (4.0 * PI) + norm_cdf(-h) * norm_cdf(-k);
        return bvn;
    }
    if r < 0.0 {
        k = -k;
        hk = -hk;
    }
    if r.abs() < 1.0 {
        let as_ = (1.0 - r) * (1.0 + r);
        let mut a = as_.sqrt();
        let bs = (h - k) * (h - k);
        let c = (4.0 - hk) / 8.0;
        let d = (12.0 - hk) / 16.0;
        bvn = a
            * (-(bs / as_ + hk) / 2.0).exp()
            * (1.0 - c * (bs - as_) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as_ * as_ / 5.0);
        if hk > -160.0 {
            let b = bs.sqrt();
            bvn -= (-hk / 2.0).exp()
                * (2.0 * PI).sqrt()
                * norm_cdf(-b / a)
                * b
                * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
        }
        a /= 2.0;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let xs = (a * (x + 1.0)).powi(2);
            let rs = (1.0 - xs).sqrt();
            let asr = -(bs / xs + hk) / 2.0;
            if asr > -100.0 {
                bvn += a
                    * w
                    * asr.exp()
                    * ((-hk * (1.0 - rs) / (2.0 * (1.0 + rs))).exp() / rs
                        - (1.0 + c * xs * (1.0 + d * xs)));
            }
        }
        bvn = -bvn / (2.0 * PI);
    }
    if r > 0.0 {
        bvn + norm_cdf(-h.max(k))
    } else {
        let mut out = -bvn;
        if k > h {
            if h < 0.0 {
                out += norm_cdf(k) - norm_cdf(h);
            } else {
                out += norm_cdf(-h) - norm_cdf(-k);
            }
        }
        out
    }
}

/// `P(X ≤ a, Y ≤ b)` for a standard bivariate normal pair with correlation `rho`.
pub fn bvn_cdf(a: f64, b: f64, rho: f64) -> f64 {
    if a == f64::NEG_INFINITY || b == f64::NEG_INFINITY {
        return 0.0;
    }
    if a == f64::INFINITY {
        return norm_cdf(b);
    }
    if b == f64::INFINITY {
        return norm_cdf(a);
    }
    if rho == 0.0 {
        return norm_cdf(a) * norm_cdf(b);
    }
    bvn_upper(-a, -b, rho).clamp(0.0, 1.0)
}

/// Limiting distribution function of `√n · sup|F̂_n − F|`.
pub fn kolmogorov_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < 1.0 {
        // Jacobi theta form converges quickly for small x
        let c = (2.0 * PI).sqrt() / x;
        let mut s = 0.0;
        for k in 1..=20 {
            let t = (2 * k - 1) as f64;
            s += (-t * t * PI * PI / (8.0 * x * x)).exp();
        }
        (c * s).min(1.0)
    } else {
        let mut s = 0.0;
        for k in 1..=100 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * x * x).exp();
            s += if k % 2 == 1 { term } else { -term };
            if term < 1e-18 {
                break;
            }
        }
        1.0 - 2.0 * s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_moments() {
        let (z, w) = gauss_hermite(20);
        let m = |p: i32| z.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum::<f64>();
        assert!((m(0) - 1.0).abs() < 1e-13);
        assert!((m(2) - 1.0).abs() < 1e-12);
        assert!((m(4) - 3.0).abs() < 1e-11);
        assert!(m(3).abs() < 1e-12);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in 1..=12 {
            let rule = GaussLegendre::new(n);
            for deg in 0..(2 * n) {
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                let got: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * x.powi(deg as i32)).sum();
                assert!((got - exact).abs() < 1e-13, "n={n} deg={deg}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn normal_quantile_inverts_cdf() {
        for &p in &[1e-15, 1e-7, 0.01, 0.3, 0.5, 0.77, 0.999, 1.0 - 1e-9] {
            let x = norm_quantile(p);
            assert!((norm_cdf(x) - p).abs() < 1e-14 * p.max(1e-3), "p={p}");
        }
    }

    #[test]
    fn orthant_probability_matches_arcsine_law() {
        for &rho in &[-0.99, -0.8, -0.5, -0.1, 0.0, 0.2, 0.5, 0.8, 0.93, 0.999] {
            let exact = 0.25 + f64::asin(rho) / (2.0 * PI);
            assert!((bvn_cdf(0.0, 0.0, rho) - exact).abs() < 1e-14, "rho={rho}");
        }
    }

    /// Plackett's identity: dΦ₂/dρ equals the bivariate density, so
    /// Φ₂(a,b;ρ) = Φ(a)Φ(b) + ∫₀^ρ φ₂(a,b;r) dr.
    fn plackett(a: f64, b: f64, rho: f64) -> f64 {
        let rule = GaussLegendre::new(32);
        let mut acc = 0.0;
        let panels = 200;
        for p in 0..panels {
            let lo = rho * p as f64 / panels as f64;
            let hi = rho * (p + 1) as f64 / panels as f64;
            acc += rule.integrate(lo, hi, |r| {
                let q = (a * a - 2.0 * r * a * b + b * b) / (1.0 - r * r);
                (-q / 2.0).exp() / (2.0 * PI * (1.0 - r * r).sqrt())
            });
        }
        norm_cdf(a) * norm_cdf(b) + acc
    }

    #[test]
    fn bivariate_cdf_matches_plackett_integral() {
        let pts = [(-1.3, 0.4), (0.0, 2.1), (1.7, 1.2), (-2.5, -0.3), (0.8, -1.9)];
        for &rho in &[-0.95, -0.6, -0.2, 0.1, 0.45, 0.8, 0.95] {
            for &(a, b) in &pts {
                let got = bvn_cdf(a, b, rho);
                let want = plackett(a, b, rho);
                assert!((got - want).abs() < 1e-12, "a={a} b={b} rho={rho}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn kolmogorov_branches_agree() {
        // the two series overlap around x = 1
        let left = {
            let x: f64 = 1.0;
            let c = (2.0 * PI).sqrt() / x;
            c * (1..=20).map(|k| { let t = (2 * k - 1) as f64; (-t * t * PI * PI / (8.0 * x * x)).exp() }).sum::<f64>()
        };
        assert!((left - kolmogorov_cdf(1.0)).abs() < 1e-12);
        assert!((kolmogorov_cdf(0.8276) - 0.5).abs() < 2e-4);
        assert!((kolmogorov_cdf(1.3581) - 0.95).abs() < 2e-4);
    }
}
