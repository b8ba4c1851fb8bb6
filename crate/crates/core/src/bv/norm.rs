use serde::{Deserialize, Serialize};

use super::grid::GridFunction;
use super::tail::Tail;

/// The weight `φ_λ(x) = (1+|x|)^λ` and its sup-norm `‖ψ‖_λ = ‖ψ φ_λ‖_∞`.
///
/// Negative exponents give the norms of the dual spaces `𝔻_{−λ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedNorm {
    pub lambda: f64,
}

/// Result of a weighted sup-norm. `divergent` is set when the tail product
/// grows without bound; `value` is then `+∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormValue {
    pub value: f64,
    pub divergent: bool,
}

impl WeightedNorm {
    pub fn new(lambda: f64) -> Self {
        Self { lambda }
    }

    #[inline]
    pub fn weight(&self, x: f64) -> f64 {
        (1.0 + x.abs()).powf(self.lambda)
    }

    pub fn norm(&self, psi: &GridFunction) -> NormValue {
        weighted_norm(psi, self)
    }
}

/// Supremum of `|ψ(x)|(1+|x|)^λ` over grid values, left limits and the tails.
pub fn weighted_norm(psi: &GridFunction, w: &WeightedNorm) -> NormValue {
    let mut best = 0.0f64;
    for ((&x, &v), &l) in psi.grid().iter().zip(psi.values()).zip(psi.left_limits()) {
        let wx = w.weight(x);
        best = best.max(v.abs() * wx).max(l.abs() * wx);
    }
    let (x0, xl) = psi.span();
    for (t, edge) in [(psi.tail_left(), x0), (psi.tail_right(), xl)] {
        match tail_sup(t, edge, w.lambda) {
            Some(s) => best = best.max(s),
            None => return NormValue { value: f64::INFINITY, divergent: true },
        }
    }
    NormValue { value: best, divergent: false }
}

/// Sup of `|t(x)|(1+|x|)^λ` for `|x| ≥ |edge|`, or `None` if unbounded.
fn tail_sup(t: &Tail, edge: f64, lambda: f64) -> Option<f64> {
    let g = t.growth();
    if g == f64::NEG_INFINITY {
        return Some(0.0);
    }
    if g + lambda > 0.0 {
        return None;
    }
    let r0 = 1.0 + edge.abs();
    let mut best = 0.0f64;
    // geometric sweep out to 1e15 plus the limit
    for k in 0..=300 {
        let r = r0 * 10f64.powf(15.0 * k as f64 / 300.0);
        let x = r - 1.0;
        best = best.max(t.value(x).abs() * r.powf(lambda));
    }
    if g + lambda == 0.0 {
        let lim = if t.is_constant() { t.offset.abs() } else if t.exponent > 0.0 || t.offset == 0.0 { t.coef.abs() } else { t.offset.abs() };
        best = best.max(lim);
    }
    Some(best)
}
