use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::kernel::Kernel;
use super::projection::{functional_value, project, Projection};
use crate::bv::{stieltjes, weighted_norm, GridFunction, SignedMeasure, Tail, WeightedNorm};
use crate::empirical::DistributionModel;
use crate::error::Result;
use crate::quadrature::{model_grid, Nodes};

/// Log-log slope below which a lattice supremum counts as bounded.
pub const GROWTH_SLOPE_TOL: f64 = 0.05;

/// One verified condition with its numeric evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionEntry {
    pub id: String,
    pub condition: String,
    pub passed: bool,
    pub evidence: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub kernel: String,
    pub distribution: String,
    pub lambda: f64,
    pub lambda_prime: f64,
    pub passed: bool,
    pub entries: Vec<AssumptionEntry>,
}

impl AssumptionReport {
    pub fn entry(&self, id: &str) -> Option<&AssumptionEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn failures(&self) -> Vec<&AssumptionEntry> {
        self.entries.iter().filter(|e| !e.passed).collect()
    }
}

fn entry(id: &str, condition: &str, passed: bool, evidence: &[(&str, f64)]) -> AssumptionEntry {
    AssumptionEntry {
        id: id.into(),
        condition: condition.into(),
        passed,
        evidence: evidence.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        note: None,
    }
}

/// Symmetric geometric lattice `0, ±10^{k/4}` for `k = −8..=4·decades`.
pub fn growth_lattice(decades: i32) -> Vec<f64> {
    let mut xs = vec![0.0];
    for k in -8..=4 * decades {
        let r = 10f64.powf(f64::from(k) / 4.0);
        xs.push(r);
        xs.push(-r);
    }
    xs.sort_by(f64::total_cmp);
    xs
}

/// Least-squares slope of `log y` against `log r` over the given points.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().filter(|(r, y)| *r > 0.0 && *y > 0.0).map(|(r, y)| (r.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return if points.iter().all(|p| p.1 == 0.0) { f64::NEG_INFINITY } else { f64::NAN };
    }
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Running supremum of `value(x)` over `|x| ≤ r` for the outer lattice radii.
fn running_sup(lattice: &[f64], value: impl Fn(f64) -> f64, from: f64) -> (f64, Vec<(f64, f64)>) {
    let mut radii: Vec<f64> = lattice.iter().filter(|&&x| x > 0.0).copied().collect();
    radii.sort_by(f64::total_cmp);
    let mut sup = 0.0f64;
    let mut curve = Vec::new();
    let mut idx = 0;
    let mut by_abs: Vec<f64> = lattice.to_vec();
    by_abs.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    for r in radii {
        while idx < by_abs.len() && by_abs[idx].abs() <= r {
            sup = sup.max(value(by_abs[idx]).abs());
            idx += 1;
        }
        if r >= from {
            curve.push((r, sup));
        }
    }
    (sup, curve)
}

/// Running supremum of `value(x₁, x₂)` over the boxes `|x₁|, |x₂| ≤ r`.
fn box_sup(lattice: &[f64], value: impl Fn(f64, f64) -> f64, from: f64) -> (f64, Vec<(f64, f64)>) {
    let mut by_abs: Vec<f64> = lattice.to_vec();
    by_abs.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    let mut sup = 0.0f64;
    let mut curve = Vec::new();
    for k in 0..by_abs.len() {
        let p = by_abs[k];
        for &q in &by_abs[..=k] {
            sup = sup.max(value(p, q)).max(value(q, p));
        }
        let r = p.abs();
        let next = by_abs.get(k + 1).map_or(f64::INFINITY, |x| x.abs());
        if r >= from && next > r {
            curve.push((r, sup));
        }
    }
    (sup, curve)
}

/// `∫_a^b (1+|x|)^{−λ} dx` for `0 ≤ a ≤ b` or `a ≤ b ≤ 0`.
fn weight_integral(a: f64, b: f64, lambda: f64) -> f64 {
    let (p, q) = if b <= 0.0 { (-b, -a) } else { (a, b) };
    let (p, q) = (1.0 + p, 1.0 + q);
    if (lambda - 1.0).abs() < 1e-12 {
        (q / p).ln()
    } else {
        (q.powf(1.0 - lambda) - p.powf(1.0 - lambda)) / (1.0 - lambda)
    }
}

/// `∫ φ_{−λ} |dg_{x₂}|` for the piecewise-linear section on `lattice ∪ {x₂}`,
/// split into the contributions per lattice decade.
fn section_variation(kernel: &Kernel, x2: f64, lattice: &[f64], lambda: f64) -> (f64, Vec<(f64, f64)>) {
    let mut xs = lattice.to_vec();
    xs.push(x2);
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let vals: Vec<f64> = xs.iter().map(|&x| kernel.eval(x, x2)).collect();
    let mut total = 0.0;
    let mut decades: BTreeMap<i64, f64> = BTreeMap::new();
    for i in 0..xs.len() - 1 {
        let (a, b) = (xs[i], xs[i + 1]);
        let slope = (vals[i + 1] - vals[i]) / (b - a);
        let part = if a < 0.0 && b > 0.0 {
            weight_integral(a, 0.0, lambda) + weight_integral(0.0, b, lambda)
        } else {
            weight_integral(a, b, lambda)
        };
        let v = slope.abs() * part;
        total += v;
        let r = a.abs().max(b.abs());
        if r >= 1.0 {
            *decades.entry(r.log10().ceil() as i64).or_default() += v;
        }
    }
    (total, decades.into_iter().map(|(k, v)| (10f64.powi(k as i32), v)).collect())
}

/// Sampled weight `φ_{−λ}` with exact power tails where allowed.
fn weight_function(grid: &[f64], lambda: f64) -> Result<GridFunction> {
    let w = WeightedNorm::new(-lambda);
    let vals: Vec<f64> = grid.iter().map(|&x| w.weight(x)).collect();
    let (x0, xl) = (grid[0], *grid.last().unwrap());
    let tl = if x0 <= 0.0 { Tail::power(1.0, -lambda) } else { Tail::constant(vals[0]) };
    let tr = if xl >= 0.0 { Tail::power(1.0, -lambda) } else { Tail::constant(*vals.last().unwrap()) };
    GridFunction::continuous(grid.to_vec(), vals, tl, tr)
}

fn weighted_variation(mu: &SignedMeasure, grid: &[f64], lambda: f64) -> Result<f64> {
    let abs = SignedMeasure::from_positive(mu.abs()?);
    stieltjes(&weight_function(grid, lambda)?, &abs, false)
}

/// Numerical check of the kernel growth, section, projection and moment
/// conditions for `F` and the exponents `λ > λ′ ≥ 0`. Failures are report
/// entries, never errors.
pub fn check_assumptions(kernel: &Kernel, f: &DistributionModel, lambda: f64, lambda_prime: f64) -> AssumptionReport {
    let mut entries = Vec::new();
    let pre_ok = lambda.is_finite() && lambda_prime >= 0.0 && lambda > lambda_prime;
    entries.push(entry("pre", "λ > λ′ ≥ 0", pre_ok, &[("lambda", lambda), ("lambda_prime", lambda_prime)]));
    if lambda_prime < kernel.lambda_prime {
        let mut e = entry(
            "declared",
            "λ′ not below the kernel's declared growth exponent",
            false,
            &[("declared", kernel.lambda_prime), ("lambda_prime", lambda_prime)],
        );
        e.note = Some("the lattice checks below decide whether the smaller exponent still works".into());
        entries.push(e);
    }

    let lattice = growth_lattice(10);
    let phi = |x: f64, p: f64| (1.0 + x.abs()).powf(-p);

    // (a) growth bound sup |g| φ_{−λ′} φ_{−λ′} over growing boxes
    let scaled = |x1: f64, x2: f64| (kernel.eval(x1, x2) * phi(x1, lambda_prime) * phi(x2, lambda_prime)).abs();
    let (sup, curve) = box_sup(&lattice, scaled, 1e6);
    let slope = log_log_slope(&curve);
    let bounded = sup.is_finite() && !(slope >= GROWTH_SLOPE_TOL);
    entries.push(entry(
        "a-growth",
        "sup |g(x₁,x₂)| φ_{−λ′}(x₁) φ_{−λ′}(x₂) bounded on the lattice",
        bounded,
        &[("sup", sup), ("loglog_slope", slope)],
    ));

    // (a) sections: x₂ ↦ [∫ φ_{−λ} |dg_{x₂}|] φ_{−λ′}(x₂)
    let mut worst_decay = f64::NEG_INFINITY;
    let mut section_vals = Vec::with_capacity(lattice.len());
    for &x2 in &lattice {
        let (tv, decades) = section_variation(kernel, x2, &lattice, lambda);
        let outer: Vec<(f64, f64)> = decades.into_iter().filter(|(r, _)| *r > 1e5 * (1.0 + x2.abs())).collect();
        if outer.len() >= 3 {
            worst_decay = worst_decay.max(log_log_slope(&outer));
        }
        section_vals.push((x2, tv * phi(x2, lambda_prime)));
    }
    let (sec_sup, sec_curve) = running_sup(&lattice, |x| section_vals.iter().find(|p| p.0 == x).map_or(0.0, |p| p.1), 1e6);
    let sec_slope = log_log_slope(&sec_curve);
    let sections_ok = sec_sup.is_finite() && !(worst_decay >= -1e-3) && !(sec_slope >= GROWTH_SLOPE_TOL);
    entries.push(entry(
        "a-sections",
        "∫ φ_{−λ} |dg_{x₂}| finite and bounded in ‖·‖_{−λ′}",
        sections_ok,
        &[("sup", sec_sup), ("loglog_slope", sec_slope), ("decade_decay_slope", worst_decay)],
    ));

    // (b) projections
    match project(kernel, f) {
        Ok(p) => entries.extend(projection_entries(kernel, f, &p, &lattice, lambda, lambda_prime)),
        Err(e) => {
            let mut en = entry("b-projection", "projections g_{i,F} exist", false, &[]);
            en.note = Some(e.to_string());
            entries.push(en);
        }
    }

    // (c) F continuous, double integral exists, ∫ φ_{λ′} dF < ∞
    let gamma = f.gamma_moment();
    entries.push(entry("c-continuity", "F is continuous", f.is_continuous(), &[]));
    let moment = f.has_weighted_moment(lambda_prime);
    entries.push(entry("c-moment", "∫ φ_{λ′} dF < ∞", moment, &[("gamma", gamma), ("lambda_prime", lambda_prime)]));
    let dbl = if f.has_weighted_moment(kernel.lambda_prime) {
        functional_value(kernel, f).ok().filter(|v| v.is_finite())
    } else {
        None
    };
    let mut e = entry("c-double-integral", "∫∫ g dF dF exists", dbl.is_some() && moment, &[("value", dbl.unwrap_or(f64::NAN))]);
    if dbl.is_none() {
        e.note = Some(format!("needs moments of order {} but γ = {gamma}", kernel.lambda_prime));
    }
    entries.push(e);

    // i.i.d. empirical process in 𝔻_λ needs a moment of order γ > 2λ
    entries.push(entry(
        "e-iid",
        "finite γ-moment with γ > 2λ (i.i.d. weighted empirical process)",
        gamma > 2.0 * lambda,
        &[("gamma", gamma), ("two_lambda", 2.0 * lambda)],
    ));

    let passed = entries.iter().all(|e| e.passed);
    AssumptionReport { kernel: kernel.name.clone(), distribution: f.label(), lambda, lambda_prime, passed, entries }
}

fn projection_entries(
    kernel: &Kernel,
    f: &DistributionModel,
    p: &Projection,
    lattice: &[f64],
    lambda: f64,
    lambda_prime: f64,
) -> Vec<AssumptionEntry> {
    let nodes = Nodes::for_model(f, &model_grid(f, 801), 4);
    let mut out = Vec::new();
    for (i, dg, gbar) in [(1, &p.dg1, &p.gbar1), (2, &p.dg2, &p.gbar2)] {
        let v = weighted_variation(dg, p.g1.grid(), lambda);
        let mut e = entry(
            &format!("b-variation-{i}"),
            &format!("∫ φ_{{−λ}} |dg_{{{i},F}}| < ∞"),
            matches!(v, Ok(x) if x.is_finite()),
            &[("value", v.as_ref().copied().unwrap_or(f64::INFINITY))],
        );
        if let Err(err) = v {
            e.note = Some(err.to_string());
        }
        out.push(e);
        let nv = weighted_norm(gbar, &WeightedNorm::new(-lambda_prime));
        // ḡ evaluated directly far outside the projection grid
        let far = |x: f64| nodes.integrate(|y| if i == 1 { kernel.eval(x, y) } else { kernel.eval(y, x) }.abs());
        let (_, curve) = running_sup(lattice, |x| far(x) * WeightedNorm::new(-lambda_prime).weight(x), 1e6);
        let slope = log_log_slope(&curve);
        out.push(entry(
            &format!("b-gbar-{i}"),
            &format!("ḡ_{{{i},F}} ∈ 𝔻_{{−λ′}}"),
            !nv.divergent && !(slope >= GROWTH_SLOPE_TOL),
            &[("norm", nv.value), ("loglog_slope", slope)],
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{gini_kernel, variance_kernel};

    #[test]
    fn gini_uniform_passes() {
        let r = check_assumptions(&gini_kernel(), &DistributionModel::uniform(), 1.5, 1.0);
        assert!(r.passed, "{:#?}", r.failures());
    }

    #[test]
    fn variance_normal_passes() {
        let r = check_assumptions(&variance_kernel(), &DistributionModel::standard_normal(), 2.5, 2.0);
        assert!(r.passed, "{:#?}", r.failures());
    }

    #[test]
    fn variance_cauchy_fails_moment() {
        let c = DistributionModel::Cauchy { location: 0.0, scale: 1.0 };
        let r = check_assumptions(&variance_kernel(), &c, 2.5, 2.0);
        assert!(!r.entry("c-moment").unwrap().passed);
        assert!(!r.entry("c-double-integral").unwrap().passed);
        assert!(!r.passed);
    }

    #[test]
    fn gini_pareto_fails_only_empirical_process_moment() {
        let f = DistributionModel::Pareto { scale: 1.0, shape: 1.5 };
        let r = check_assumptions(&gini_kernel(), &f, 1.2, 1.0);
        assert!(r.entry("c-moment").unwrap().passed);
        assert!(!r.entry("e-iid").unwrap().passed);
    }

    #[test]
    fn section_check_detects_too_small_lambda() {
        // Gini sections have |dg_{x₂}| = dx, so λ = 1 is not integrable
        let r = check_assumptions(&gini_kernel(), &DistributionModel::uniform(), 1.0, 0.5);
        assert!(!r.entry("pre").unwrap().passed || !r.entry("a-sections").unwrap().passed);
        let r = check_assumptions(&gini_kernel(), &DistributionModel::uniform(), 0.9, 0.5);
        assert!(!r.entry("a-sections").unwrap().passed);
        assert!(!r.entry("a-growth").unwrap().passed);
    }

    #[test]
    fn growth_detects_fast_kernels() {
        let k = Kernel::custom("cubic", true, 1.0, |x, y| (x - y).powi(3)).unwrap();
        let r = check_assumptions(&k, &DistributionModel::uniform(), 1.5, 1.0);
        assert!(!r.entry("a-growth").unwrap().passed);
    }

    #[test]
    fn slope_fit() {
        let pts: Vec<(f64, f64)> = (1..10).map(|k| (10f64.powi(k), 3.0 * 10f64.powi(2 * k))).collect();
        assert!((log_log_slope(&pts) - 2.0).abs() < 1e-12);
    }
}
