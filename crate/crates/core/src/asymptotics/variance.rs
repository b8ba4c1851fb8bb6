use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::covariance::{CovPoint, CovarianceModel};
use crate::bv::SignedMeasure;
use crate::empirical::DistributionModel;
use crate::error::{Error, Result};
use crate::kernels::{Kernel, Projection};
use crate::quadrature::{logit_grid, ProductRule, OUTER_QUANTILE};
use crate::special::gauss_legendre;
use crate::summation::Neumaier;

/// Grid of the variance quadrature: `segments` logit-spaced cells with a
/// Gauss–Legendre rule of `order` per cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub segments: usize,
    pub order: usize,
}

impl Resolution {
    pub const BRIDGE: Resolution = Resolution { segments: 200, order: 8 };
    /// Coarser default for long-run covariances, whose lag terms are smooth
    /// but expensive.
    pub const LONG_RUN: Resolution = Resolution { segments: 96, order: 6 };

    pub fn default_for(cov: &CovarianceModel) -> Resolution {
        if cov.lags() == 0 {
            Self::BRIDGE
        } else {
            Self::LONG_RUN
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub sigma2: f64,
    /// `components[i][j] = ∫∫ Γ dg_{i+1} dg_{j+1}`.
    pub components: [[f64; 2]; 2],
    pub resolution: Resolution,
    pub kind: String,
}

/// Integrability of `∫∫ Γ dg_i dg_j` in both tails: with `1 − F` decaying
/// like `x^{−γ}` and `|dg_i|` growing like `x^{e_i}`, the tail part is
/// finite iff `(e_i + 1) + (e_j + 1) < γ`.
fn tail_check(p: &Projection, f: &DistributionModel) -> Result<()> {
    let growth = |m: &SignedMeasure, left: bool| {
        let side = |t: &crate::bv::Tail| t.growth();
        if left {
            side(m.positive.tail_left()).max(side(m.negative.tail_left()))
        } else {
            side(m.positive.tail_right()).max(side(m.negative.tail_right()))
        }
    };
    let dgs = [&p.dg1, &p.dg2];
    for left in [true, false] {
        let Some(gamma) = f.tail_exponent(left) else { continue };
        for i in 0..2 {
            for j in 0..2 {
                let (ei, ej) = (growth(dgs[i], left), growth(dgs[j], left));
                if ei == f64::NEG_INFINITY || ej == f64::NEG_INFINITY {
                    continue;
                }
                if ei + ej + 2.0 >= gamma {
                    return Err(Error::Divergence(format!(
                        "∫∫Γ dg_{} dg_{} diverges in the {} tail: |dg| grows like |x|^{} and |x|^{} but the tail of {} decays like |x|^-{}",
                        i + 1,
                        j + 1,
                        if left { "left" } else { "right" },
                        ei,
                        ej,
                        f.label(),
                        gamma
                    )));
                }
            }
        }
    }
    Ok(())
}

/// `σ² = Σ_{i,j} ∫∫ Γ dg_i dg_j` by product quadrature on a logit grid.
///
/// The bridge part has a kink on the diagonal and uses the Duffy rule on
/// diagonal cells; the lag part is smooth and uses the tensor rule
/// everywhere. Mass beyond the outer quantile levels is ignored.
pub fn asymptotic_variance(p: &Projection, cov: &CovarianceModel, res: Option<Resolution>) -> Result<VarianceReport> {
    let res = res.unwrap_or_else(|| Resolution::default_for(cov));
    tail_check(p, &cov.f)?;
    let f = &cov.f;
    if let DistributionModel::PointMass { .. } = f {
        return Ok(VarianceReport { sigma2: 0.0, components: [[0.0; 2]; 2], resolution: res, kind: cov.label() });
    }
    let mut grid = logit_grid(f, res.segments, OUTER_QUANTILE);
    // atoms of dg become grid points so densities stay smooth inside cells
    let atoms: [Vec<(f64, f64)>; 2] = [p.dg1.atoms(), p.dg2.atoms()];
    let (lo, hi) = (grid[0], *grid.last().unwrap());
    for a in atoms.iter().flatten() {
        if a.0 > lo && a.0 < hi {
            grid.push(a.0);
        }
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let rule = ProductRule::new(&grid, res.order);
    let pts: Vec<CovPoint> = rule.x.iter().map(|&x| cov.point(x)).collect();
    let dens: [Vec<f64>; 2] = [
        rule.x.iter().zip(&rule.w).map(|(&x, &w)| w * p.dg1.density_at(x)).collect(),
        rule.x.iter().zip(&rule.w).map(|(&x, &w)| w * p.dg2.density_at(x)).collect(),
    ];
    let pairs = [(0, 0), (0, 1), (1, 0), (1, 1)];
    let n = pts.len();
    let lag = cov.lag_gram_points(&pts);

    // tensor part: bridge off the diagonal cells, lag part everywhere
    let rows: Vec<[f64; 4]> = (0..n)
        .into_par_iter()
        .map(|a| {
            let mut out = [0.0; 4];
            let kv: Vec<f64> = (0..n)
                .map(|b| {
                    let br = if rule.seg[a] == rule.seg[b] { 0.0 } else { CovarianceModel::bridge(&pts[a], &pts[b]) };
                    br + lag[(a, b)]
                })
                .collect();
            for (k, &(i, j)) in pairs.iter().enumerate() {
                let ua = dens[i][a];
                if ua != 0.0 {
                    out[k] = ua * kv.iter().zip(&dens[j]).map(|(g, u)| g * u).collect::<Neumaier>().total();
                }
            }
            out
        })
        .collect();
    let mut comp = [Neumaier::new(), Neumaier::new(), Neumaier::new(), Neumaier::new()];
    for r in &rows {
        for k in 0..4 {
            comp[k].add(r[k]);
        }
    }
    // Duffy triangles of the diagonal cells, bridge only
    let dg = [&p.dg1, &p.dg2];
    for &(x, y, w) in &rule.tri {
        let g = CovarianceModel::bridge(&cov.point(x), &cov.point(y));
        if g == 0.0 {
            continue;
        }
        for (k, &(i, j)) in pairs.iter().enumerate() {
            comp[k].add(w * g * dg[i].density_at(x) * dg[j].density_at(y));
        }
    }
    // atoms of dg against atoms and densities
    let gl = gauss_legendre(res.order);
    for (k, &(i, j)) in pairs.iter().enumerate() {
        for &(a, ma) in &atoms[i] {
            let pa = cov.point(a);
            for &(b, mb) in &atoms[j] {
                comp[k].add(ma * mb * cov.eval_points(&pa, &cov.point(b)));
            }
            comp[k].add(ma * atom_against_density(cov, &pa, &grid, dg[j], gl));
        }
        for &(b, mb) in &atoms[j] {
            let pb = cov.point(b);
            comp[k].add(mb * atom_against_density(cov, &pb, &grid, dg[i], gl));
        }
    }
    let c: Vec<f64> = comp.iter().map(|s| s.total()).collect();
    let components = [[c[0], c[1]], [c[2], c[3]]];
    let sigma2 = c.iter().sum::<f64>();
    if !sigma2.is_finite() {
        return Err(Error::Numeric(format!("σ² evaluated to {sigma2}")));
    }
    Ok(VarianceReport { sigma2, components, resolution: res, kind: cov.label() })
}

/// `∫ Γ(a, y) dg(y)` over the densities of `dg`; `a` is a grid point, so
/// every cell is smooth.
fn atom_against_density(
    cov: &CovarianceModel,
    pa: &CovPoint,
    grid: &[f64],
    dg: &SignedMeasure,
    gl: &crate::special::GaussLegendre,
) -> f64 {
    let mut s = Neumaier::new();
    for c in grid.windows(2) {
        s.add(gl.integrate(c[0], c[1], |y| cov.eval_points(pa, &cov.point(y)) * dg.density_at(y)));
    }
    s.total()
}

impl CovarianceModel {
    pub(crate) fn eval_points(&self, p: &CovPoint, q: &CovPoint) -> f64 {
        self.eval(p.x, q.x)
    }
}

/// `Var(g₁(X) + g₂(X))` for i.i.d. `X ~ F`, computed without the
/// projection grids: `g_i` is integrated directly at each outer node with
/// the cell containing it split at the kink.
pub fn hoeffding_variance(kernel: &Kernel, f: &DistributionModel) -> Result<f64> {
    crate::kernels::functional_value(kernel, f)?;
    if let DistributionModel::PointMass { .. } = f {
        return Ok(0.0);
    }
    let grid = logit_grid(f, 240, OUTER_QUANTILE);
    let gl = gauss_legendre(8);
    let pdf = |x: f64| f.pdf(x).unwrap_or(0.0);
    let mut outer = Vec::new();
    for c in grid.windows(2) {
        let (mid, half) = (0.5 * (c[0] + c[1]), 0.5 * (c[1] - c[0]));
        for (t, w) in gl.nodes.iter().zip(&gl.weights) {
            let x = mid + half * t;
            outer.push((x, w * half * pdf(x)));
        }
    }
    let section = |y: f64| -> f64 {
        let mut s = Neumaier::new();
        for c in grid.windows(2) {
            let h = |x: f64| (kernel.eval(y, x) + kernel.eval(x, y)) * pdf(x);
            if y > c[0] && y < c[1] {
                s.add(gl.integrate(c[0], y, h));
                s.add(gl.integrate(y, c[1], h));
            } else {
                s.add(gl.integrate(c[0], c[1], h));
            }
        }
        s.total()
    };
    let w: Vec<f64> = outer.par_iter().map(|&(x, _)| section(x)).collect();
    let mean = outer.iter().zip(&w).map(|(o, v)| o.1 * v).collect::<Neumaier>().total();
    let second = outer.iter().zip(&w).map(|(o, v)| o.1 * (v - mean) * (v - mean)).collect::<Neumaier>().total();
    Ok(second)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotics::{brownian_bridge_cov, longrun_cov, LagWindow};
    use crate::datagen::DependentProcess;
    use crate::kernels::{gini_kernel, project, variance_kernel};

    fn bridge_sigma2(k: &Kernel, f: &DistributionModel) -> VarianceReport {
        asymptotic_variance(&project(k, f).unwrap(), &brownian_bridge_cov(f), None).unwrap()
    }

    #[test]
    fn gini_uniform() {
        let f = DistributionModel::uniform();
        let r = bridge_sigma2(&gini_kernel(), &f);
        assert!((r.sigma2 - 1.0 / 45.0).abs() < 1e-6 / 45.0, "{}", r.sigma2);
        let c = r.components;
        assert!((c[0][0] - c[1][1]).abs() < 1e-15 && (c[0][1] - c[1][0]).abs() < 1e-15);
        assert!((hoeffding_variance(&gini_kernel(), &f).unwrap() - 1.0 / 45.0).abs() < 1e-12);
    }

    #[test]
    fn variance_normal() {
        let f = DistributionModel::standard_normal();
        let r = bridge_sigma2(&variance_kernel(), &f);
        assert!((r.sigma2 - 2.0).abs() < 2e-6, "{}", r.sigma2);
        assert!((hoeffding_variance(&variance_kernel(), &f).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn gini_exponential() {
        let f = DistributionModel::Exponential { rate: 1.0 };
        let r = bridge_sigma2(&gini_kernel(), &f);
        let h = hoeffding_variance(&gini_kernel(), &f).unwrap();
        assert!((h - 4.0 / 3.0).abs() < 1e-9, "{h}");
        assert!((r.sigma2 - h).abs() < 1e-6 * h, "{} vs {h}", r.sigma2);
    }

    #[test]
    fn ar1_variance_kernel() {
        // Σ_h Cov(X₀², X_h²) = 2(1 + 2Σ φ^{2h}) = 10/3
        let p = DependentProcess::ar1(0.5, DistributionModel::standard_normal());
        let cov = longrun_cov(&p, Some(50), LagWindow::Rectangular).unwrap();
        let r = asymptotic_variance(&project(&variance_kernel(), &p.marginal).unwrap(), &cov, None).unwrap();
        assert!((r.sigma2 - 10.0 / 3.0).abs() < 1e-3, "{}", r.sigma2);
    }

    #[test]
    fn heavy_tail_divergence_is_named() {
        let f = DistributionModel::StudentT { dof: 3.0, location: 0.0, scale: 1.0 };
        let p = project(&gini_kernel(), &f).unwrap();
        assert!(asymptotic_variance(&p, &brownian_bridge_cov(&f), None).is_ok());
        let f = DistributionModel::StudentT { dof: 1.8, location: 0.0, scale: 1.0 };
        let p = project(&gini_kernel(), &f).unwrap();
        match asymptotic_variance(&p, &brownian_bridge_cov(&f), None) {
            Err(Error::Divergence(m)) => assert!(m.contains("dg_1 dg_1") && m.contains("left"), "{m}"),
            other => panic!("{other:?}"),
        }
    }
}
