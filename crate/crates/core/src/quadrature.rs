//! Quadrature grids adapted to a distribution and product rules for double
//! integrals whose integrand has a kink on the diagonal.

use rayon::prelude::*;

use crate::empirical::DistributionModel;
use crate::special::gauss_legendre;
use crate::summation::Neumaier;

/// Lower quantile level of the dense part of the projection grid.
pub const INNER_QUANTILE: f64 = 1e-7;
/// Quantile level where grids stop.
pub const OUTER_QUANTILE: f64 = 1e-15;
/// Default number of dense grid points.
pub const DEFAULT_POINTS: usize = 4001;

fn logit(u: f64) -> f64 {
    (u / (1.0 - u)).ln()
}

/// Quantile at logit level `t`, evaluated through the smaller tail.
fn quantile_at_logit(f: &DistributionModel, t: f64) -> f64 {
    if t > 0.0 {
        f.upper_quantile(1.0 / (1.0 + t.exp()))
    } else {
        f.quantile(1.0 / (1.0 + (-t).exp()))
    }
}

fn finish(mut xs: Vec<f64>) -> Vec<f64> {
    xs.retain(|x| x.is_finite());
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

/// Projection grid: `points` logit-spaced quantiles over
/// `(INNER_QUANTILE, 1 − INNER_QUANTILE)`, a coarser logit extension out to
/// `OUTER_QUANTILE` on both sides, and the finite support endpoints.
pub fn model_grid(f: &DistributionModel, points: usize) -> Vec<f64> {
    if let DistributionModel::PointMass { at } = *f {
        return (-8..=8).map(|k| at + f64::from(k) * 0.25).collect();
    }
    let t_in = -logit(INNER_QUANTILE);
    let t_out = -logit(OUTER_QUANTILE);
    let mut xs: Vec<f64> = (0..points)
        .map(|k| {
            let t = -t_in + 2.0 * t_in * k as f64 / (points - 1).max(1) as f64;
            quantile_at_logit(f, t)
        })
        .collect();
    let step = 0.25;
    let mut t = t_in + step;
    while t <= t_out + 1e-9 {
        xs.push(quantile_at_logit(f, t));
        xs.push(quantile_at_logit(f, -t));
        t += step;
    }
    let (a, b) = f.support();
    xs.push(a);
    xs.push(b);
    finish(xs)
}

/// `segments + 1` logit-spaced quantiles over `(level, 1 − level)` plus the
/// finite support endpoints.
pub fn logit_grid(f: &DistributionModel, segments: usize, level: f64) -> Vec<f64> {
    if let DistributionModel::PointMass { at } = *f {
        return vec![at - 1.0, at, at + 1.0];
    }
    let t_out = -logit(level);
    let mut xs: Vec<f64> = (0..=segments)
        .map(|k| quantile_at_logit(f, -t_out + 2.0 * t_out * k as f64 / segments as f64))
        .collect();
    let (a, b) = f.support();
    xs.push(a);
    xs.push(b);
    finish(xs)
}

/// Nodes and weights with `∫ h dF ≈ Σ w_k h(x_k)`, Gauss–Legendre of the
/// given order on each grid segment (point masses become one node).
#[derive(Debug, Clone)]
pub struct Nodes {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
}

impl Nodes {
    pub fn for_model(f: &DistributionModel, grid: &[f64], order: usize) -> Nodes {
        if let DistributionModel::PointMass { at } = *f {
            return Nodes { x: vec![at], w: vec![1.0] };
        }
        let rule = gauss_legendre(order);
        let mut x = Vec::with_capacity(grid.len() * order);
        let mut w = Vec::with_capacity(grid.len() * order);
        for s in grid.windows(2) {
            let (a, b) = (s[0], s[1]);
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            for (t, wt) in rule.nodes.iter().zip(&rule.weights) {
                let xi = mid + half * t;
                let d = f.pdf(xi).unwrap_or(0.0);
                if d > 0.0 {
                    x.push(xi);
                    w.push(wt * half * d);
                }
            }
        }
        Nodes { x, w }
    }

    pub fn integrate(&self, h: impl Fn(f64) -> f64) -> f64 {
        self.x.iter().zip(&self.w).map(|(&x, &w)| w * h(x)).collect::<Neumaier>().total()
    }
}

/// Tensor Gauss–Legendre on the off-diagonal cells of `grid × grid` and
/// Duffy-collapsed rules on the two triangles of each diagonal cell, so
/// integrands that are smooth on either side of `x = y` converge quickly.
#[derive(Debug, Clone)]
pub struct ProductRule {
    /// Abscissae of the tensor nodes.
    pub x: Vec<f64>,
    /// Gauss–Legendre weight times half segment length.
    pub w: Vec<f64>,
    pub(crate) seg: Vec<usize>,
    /// `(x, y, weight)` triangle nodes of the diagonal cells.
    pub tri: Vec<(f64, f64, f64)>,
    pub segments: usize,
    pub order: usize,
}

impl ProductRule {
    pub fn new(grid: &[f64], order: usize) -> Self {
        let rule = gauss_legendre(order);
        let mut x = Vec::new();
        let mut w = Vec::new();
        let mut seg = Vec::new();
        let mut tri = Vec::new();
        for (s, c) in grid.windows(2).enumerate() {
            let (a, b) = (c[0], c[1]);
            let h = b - a;
            for (t, wt) in rule.nodes.iter().zip(&rule.weights) {
                x.push(a + 0.5 * h * (1.0 + t));
                w.push(0.5 * h * wt);
                seg.push(s);
            }
            for (p, wp) in rule.nodes.iter().zip(&rule.weights) {
                let sp = 0.5 * (1.0 + p);
                for (q, wq) in rule.nodes.iter().zip(&rule.weights) {
                    let tq = 0.5 * (1.0 + q);
                    // {a ≤ x ≤ y ≤ b}: y = a + h s, x = a + h s t, Jacobian h² s
                    let wgt = 0.25 * wp * wq * h * h * sp;
                    let (lo, hi) = (a + h * sp * tq, a + h * sp);
                    tri.push((lo, hi, wgt));
                    tri.push((hi, lo, wgt));
                }
            }
        }
        Self { x, w, seg, tri, segments: grid.len().saturating_sub(1), order }
    }

    /// `∫∫ k(x, y) d_i(x) d_j(y) dx dy` for every requested pair `(i, j)` of
    /// densities, sharing the kernel evaluations.
    pub fn integrate_pairs(
        &self,
        k: &(dyn Fn(f64, f64) -> f64 + Sync),
        densities: &[&(dyn Fn(f64) -> f64 + Sync)],
        pairs: &[(usize, usize)],
    ) -> Vec<f64> {
        let n = self.x.len();
        let u: Vec<Vec<f64>> = densities
            .iter()
            .map(|d| self.x.iter().zip(&self.w).map(|(&x, &w)| w * d(x)).collect())
            .collect();
        // off-diagonal cells, row by row in fixed order
        let rows: Vec<Vec<Neumaier>> = (0..n)
            .into_par_iter()
            .map(|a| {
                let mut acc = vec![Neumaier::new(); pairs.len()];
                let xa = self.x[a];
                let mut kv = Vec::with_capacity(n);
                for b in 0..n {
                    kv.push(if self.seg[a] == self.seg[b] { 0.0 } else { k(xa, self.x[b]) });
                }
                for (p, &(i, j)) in pairs.iter().enumerate() {
                    let ua = u[i][a];
                    if ua == 0.0 {
                        continue;
                    }
                    let mut s = Neumaier::new();
                    for b in 0..n {
                        s.add(kv[b] * u[j][b]);
                    }
                    acc[p].add(ua * s.total());
                }
                acc
            })
            .collect();
        let mut out = vec![Neumaier::new(); pairs.len()];
        for r in rows {
            for (o, v) in out.iter_mut().zip(r) {
                o.merge(v);
            }
        }
        for &(x, y, wgt) in &self.tri {
            let kv = k(x, y);
            for (p, &(i, j)) in pairs.iter().enumerate() {
                out[p].add(wgt * kv * densities[i](x) * densities[j](y));
            }
        }
        out.iter().map(|s| s.total()).collect()
    }
}
