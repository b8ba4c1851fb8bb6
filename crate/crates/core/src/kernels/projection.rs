use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::Kernel;
use crate::bv::{signed_measure_of, GridFunction, Quadratic, SignedMeasure, Tail};
use crate::empirical::DistributionModel;
use crate::error::{Error, Result};
use crate::quadrature::{logit_grid, model_grid, Nodes, ProductRule, DEFAULT_POINTS, OUTER_QUANTILE};
use crate::summation::Neumaier;

/// Gauss–Legendre order per grid segment for the section integrals.
const SECTION_ORDER: usize = 4;

/// Projections `g_{i,F}`, their measures `dg_{i,F}` and the absolute
/// projections `ḡ_{i,F}` of a kernel under a distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub g1: GridFunction,
    pub g2: GridFunction,
    pub dg1: SignedMeasure,
    pub dg2: SignedMeasure,
    pub gbar1: GridFunction,
    pub gbar2: GridFunction,
}

pub fn project(kernel: &Kernel, f: &DistributionModel) -> Result<Projection> {
    project_with(kernel, f, DEFAULT_POINTS)
}

fn moment_precondition(kernel: &Kernel, f: &DistributionModel) -> Result<()> {
    f.validate()?;
    if !f.has_weighted_moment(kernel.lambda_prime) {
        return Err(Error::Hypothesis(format!(
            "section integrals of kernel {} need a finite moment of order λ′ = {}, but {} only has moments below γ = {}",
            kernel.name,
            kernel.lambda_prime,
            f.label(),
            f.gamma_moment()
        )));
    }
    Ok(())
}

/// Projections on a grid with `points` dense quantile nodes.
pub fn project_with(kernel: &Kernel, f: &DistributionModel, points: usize) -> Result<Projection> {
    moment_precondition(kernel, f)?;
    let grid = model_grid(f, points);
    let nodes = Nodes::for_model(f, &grid, SECTION_ORDER);
    let section = |x: f64, first: bool, abs: bool| {
        let mut s = Neumaier::new();
        for (&y, &w) in nodes.x.iter().zip(&nodes.w) {
            let v = if first { kernel.eval(x, y) } else { kernel.eval(y, x) };
            s.add(w * if abs { v.abs() } else { v });
        }
        s.total()
    };
    let eval_all = |first: bool, abs: bool| -> Vec<f64> { grid.par_iter().map(|&x| section(x, first, abs)).collect() };

    let g1v = eval_all(true, false);
    let gb1v = eval_all(true, true);
    let (g2v, gb2v) = if kernel.symmetric { (g1v.clone(), gb1v.clone()) } else { (eval_all(false, false), eval_all(false, true)) };

    let lp = kernel.lambda_prime;
    let (dg1, g1) = build(kernel, f, &grid, &nodes, &g1v, true, lp)?;
    let (dg2, g2) = if kernel.symmetric { (dg1.clone(), g1.clone()) } else { build(kernel, f, &grid, &nodes, &g2v, false, lp)? };
    let gbar1 = GridFunction::continuous(grid.clone(), gb1v.clone(), growth_tail(&grid, &gb1v, lp, true), growth_tail(&grid, &gb1v, lp, false))?;
    let gbar2 = if kernel.symmetric {
        gbar1.clone()
    } else {
        GridFunction::continuous(grid.clone(), gb2v.clone(), growth_tail(&grid, &gb2v, lp, true), growth_tail(&grid, &gb2v, lp, false))?
    };
    Ok(Projection { g1, g2, dg1, dg2, gbar1, gbar2 })
}

/// `offset + coef (1+|x|)^λ′` through the edge value with zero offset, or a
/// constant when the tail would straddle the origin.
fn growth_tail(grid: &[f64], v: &[f64], lp: f64, left: bool) -> Tail {
    let (x, val) = if left { (grid[0], v[0]) } else { (*grid.last().unwrap(), *v.last().unwrap()) };
    if lp == 0.0 || (left && x > 0.0) || (!left && x < 0.0) {
        Tail::constant(val)
    } else {
        Tail::matching(x, val, 0.0, lp)
    }
}

/// `dg_i` and `g_i` from the projection values. With a closed-form section
/// derivative the node densities come from `∫ ∂_i g dF`; segment masses are
/// always the increments of `g_i`, so `dg_i` is the measure of `g_i`.
fn build(
    kernel: &Kernel,
    f: &DistributionModel,
    grid: &[f64],
    nodes: &Nodes,
    gv: &[f64],
    first: bool,
    lp: f64,
) -> Result<(SignedMeasure, GridFunction)> {
    let n = grid.len();
    if !kernel.has_closed_form_derivative() {
        let plain = GridFunction::continuous(grid.to_vec(), gv.to_vec(), Tail::constant(gv[0]), Tail::constant(gv[n - 1]))?;
        let slope = |i: usize, j: usize| (gv[j] - gv[i]) / (grid[j] - grid[i]);
        let (tl, tr) = if n >= 2 {
            (slope_tail(grid[0], gv[0], slope(0, 1), lp, true), slope_tail(grid[n - 1], gv[n - 1], slope(n - 2, n - 1), lp, false))
        } else {
            (Tail::constant(gv[0]), Tail::constant(gv[0]))
        };
        let g = GridFunction::continuous(grid.to_vec(), gv.to_vec(), tl, tr).unwrap_or(plain);
        return Ok((signed_measure_of(&g)?, g));
    }
    // one-sided limits matter only when F has atoms on the grid
    let delta = |x: f64| if f.is_continuous() { 0.0 } else { 1e-9 * (1.0 + x.abs()) };
    let density = |x: f64| -> f64 {
        let mut s = Neumaier::new();
        for (&y, &w) in nodes.x.iter().zip(&nodes.w) {
            let d = if first { kernel.d1(x, y) } else { kernel.d2(y, x) };
            s.add(w * d.unwrap_or(0.0));
        }
        s.total()
    };
    let right: Vec<f64> = grid.par_iter().map(|&x| density(x + delta(x))).collect();
    let left: Vec<f64> = if f.is_continuous() { right.clone() } else { grid.par_iter().map(|&x| density(x - delta(x))).collect() };
    let segs: Vec<Quadratic> = (0..n - 1)
        .map(|i| Quadratic::with_mean(right[i], left[i + 1], (gv[i + 1] - gv[i]) / (grid[i + 1] - grid[i])))
        .collect();
    let tl = slope_tail(grid[0], gv[0], left[0], lp, true);
    let tr = slope_tail(grid[n - 1], gv[n - 1], right[n - 1], lp, false);
    let g = GridFunction::continuous(grid.to_vec(), gv.to_vec(), tl, tr)?;
    let mu = SignedMeasure::from_signed(grid.to_vec(), vec![0.0; n], segs, tl.derivative(false), tr.derivative(true))?;
    Ok((mu, g))
}

/// Tail of growth `λ′` through `(x, value)` whose derivative at `x` is
/// `slope`.
fn slope_tail(x: f64, value: f64, slope: f64, lp: f64, left: bool) -> Tail {
    if lp == 0.0 || slope == 0.0 || (left && x > 0.0) || (!left && x < 0.0) {
        return Tail::constant(value);
    }
    // d/dx [c (1+|x|)^λ′] = ± c λ′ (1+|x|)^{λ′−1}
    let r = 1.0 + x.abs();
    let sign = if left { -1.0 } else { 1.0 };
    let coef = sign * slope / (lp * r.powf(lp - 1.0));
    Tail { offset: value - coef * r.powf(lp), coef, exponent: lp }
}

/// `U(F) = ∫∫ g dF dF` by a product rule that is exact across the diagonal.
pub fn functional_value(kernel: &Kernel, f: &DistributionModel) -> Result<f64> {
    moment_precondition(kernel, f)?;
    if let DistributionModel::PointMass { at } = *f {
        return Ok(kernel.eval(at, at));
    }
    let rule = ProductRule::new(&logit_grid(f, 240, OUTER_QUANTILE), 8);
    let pdf = |x: f64| f.pdf(x).unwrap_or(0.0);
    let v = rule.integrate_pairs(&|x, y| kernel.eval(x, y), &[&pdf], &[(0, 0)])[0];
    if !v.is_finite() {
        return Err(Error::Numeric(format!("U(F) is not finite for kernel {} under {}", kernel.name, f.label())));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bv::measure_of;
    use crate::kernels::{gini_kernel, variance_kernel};

    #[test]
    fn gini_uniform_projection_is_quadratic() {
        let f = DistributionModel::uniform();
        let p = project_with(&gini_kernel(), &f, 401).unwrap();
        for &x in p.g1.grid() {
            assert!((p.g1.eval(x) - (x * x - x + 0.5)).abs() < 1e-13, "{x}");
            assert!((p.dg1.density_at(x) - (2.0 * x - 1.0)).abs() < 1e-13);
        }
        // beyond the support g1(x) = E|x − U|
        assert!((p.g1.eval(-2.0) - 2.5).abs() < 1e-12);
        assert!((p.g1.eval(3.0) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn variance_normal_projection() {
        let f = DistributionModel::standard_normal();
        let k = variance_kernel();
        let p = project_with(&k, &f, 801).unwrap();
        for &x in p.g1.grid().iter().step_by(7) {
            assert!((p.g1.eval(x) - 0.5 * (x * x + 1.0)).abs() < 1e-12 * (1.0 + x * x));
            assert!((p.dg1.density_at(x) - x).abs() < 1e-12);
        }
        assert!((functional_value(&k, &f).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn functional_values_match_closed_forms() {
        let g = gini_kernel();
        assert!((functional_value(&g, &DistributionModel::uniform()).unwrap() - 1.0 / 3.0).abs() < 1e-13);
        let e = DistributionModel::Exponential { rate: 2.0 };
        assert!((functional_value(&g, &e).unwrap() - 0.5).abs() < 1e-10);
        let pm = DistributionModel::PointMass { at: 1.0 };
        assert_eq!(functional_value(&g, &pm).unwrap(), 0.0);
    }

    #[test]
    fn point_mass_projection_has_zero_variance_structure() {
        let f = DistributionModel::PointMass { at: 0.5 };
        let p = project(&gini_kernel(), &f).unwrap();
        assert!((p.g1.eval(1.0) - 0.5).abs() < 1e-15);
        assert!((p.dg1.density_at(0.75) - 1.0).abs() < 1e-12);
        assert!((p.dg1.density_at(0.25) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn moment_precondition_names_exponents() {
        let c = DistributionModel::Cauchy { location: 0.0, scale: 1.0 };
        match project(&variance_kernel(), &c) {
            Err(Error::Hypothesis(m)) => assert!(m.contains("γ = 1") && m.contains("λ′ = 2"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn custom_kernel_falls_back_to_jordan() {
        let k = Kernel::custom("abs-sum", true, 1.0, |x, y| (x + y).abs()).unwrap();
        let f = DistributionModel::uniform();
        let p = project_with(&k, &f, 201).unwrap();
        // on [0, 1] the projection is x + 1/2
        assert!((p.g1.eval(0.3) - 0.8).abs() < 1e-12);
        let m = measure_of(&p.g1).unwrap();
        assert!((m.mass(0.0, 1.0) - p.dg1.mass(0.0, 1.0)).abs() < 1e-12);
    }
}
