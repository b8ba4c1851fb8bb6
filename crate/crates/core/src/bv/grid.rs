use serde::{Deserialize, Serialize};

use super::tail::Tail;
use crate::error::{ensure_finite, invalid, Result};

/// Relative tolerance used when validating tail/edge consistency.
const EDGE_TOL: f64 = 1e-9;

/// A càdlàg function on the real line, stored on a finite grid.
///
/// On each open segment `(x_i, x_{i+1})` the function is linear, running
/// from `values[i]` to `left_limits[i+1]`. The jump at `x_i` is
/// `values[i] - left_limits[i]`. Left of the first node and right of the last
/// node the function follows its tail descriptors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    grid: Vec<f64>,
    values: Vec<f64>,
    left_limits: Vec<f64>,
    tail_left: Tail,
    tail_right: Tail,
}

impl GridFunction {
    pub fn new(
        grid: Vec<f64>,
        values: Vec<f64>,
        left_limits: Vec<f64>,
        tail_left: Tail,
        tail_right: Tail,
    ) -> Result<Self> {
        if grid.is_empty() {
            return Err(invalid("grid function needs at least one node"));
        }
        if values.len() != grid.len() || left_limits.len() != grid.len() {
            return Err(invalid(format!(
                "grid has {} nodes but {} values and {} left limits",
                grid.len(),
                values.len(),
                left_limits.len()
            )));
        }
        ensure_finite(&grid, "grid")?;
        ensure_finite(&values, "values")?;
        ensure_finite(&left_limits, "left limits")?;
        if let Some(i) = grid.windows(2).position(|w| w[0] >= w[1]) {
            return Err(invalid(format!("grid not strictly increasing at index {}", i + 1)));
        }
        let x0 = grid[0];
        let xl = *grid.last().unwrap();
        // power tails are in |x|, so they must not straddle the origin
        if !tail_left.is_constant() && x0 > 0.0 {
            return Err(invalid("a non-constant left tail needs the first node at or left of 0"));
        }
        if !tail_right.is_constant() && xl < 0.0 {
            return Err(invalid("a non-constant right tail needs the last node at or right of 0"));
        }
        let l0 = left_limits[0];
        let t0 = tail_left.value(x0);
        if (l0 - t0).abs() > EDGE_TOL * (1.0 + l0.abs().max(t0.abs())) {
            return Err(invalid(format!("left tail gives {t0} at the first node but the left limit is {l0}")));
        }
        let vl = *values.last().unwrap();
        let tl = tail_right.value(xl);
        if (vl - tl).abs() > EDGE_TOL * (1.0 + vl.abs().max(tl.abs())) {
            return Err(invalid(format!("right tail gives {tl} at the last node but the value is {vl}")));
        }
        Ok(Self { grid, values, left_limits, tail_left, tail_right })
    }

    /// Continuous piecewise-linear interpolant of `values` with tails.
    pub fn continuous(grid: Vec<f64>, values: Vec<f64>, tail_left: Tail, tail_right: Tail) -> Result<Self> {
        let left_limits = values.clone();
        Self::new(grid, values, left_limits, tail_left, tail_right)
    }

    /// Samples a continuous function on `grid`, with constant tails equal to
    /// the edge values.
    pub fn sample(grid: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
        let tl = Tail::constant(values[0]);
        let tr = Tail::constant(*values.last().unwrap());
        Self::continuous(grid, values, tl, tr)
    }

    /// Step function with values `levels[i]` on `[x_i, x_{i+1})`, `before`
    /// left of the first node, and constant tails.
    pub fn step(grid: Vec<f64>, levels: Vec<f64>, before: f64) -> Result<Self> {
        if levels.len() != grid.len() {
            return Err(invalid("step function needs one level per node"));
        }
        let mut left = Vec::with_capacity(levels.len());
        left.push(before);
        left.extend_from_slice(&levels[..levels.len() - 1]);
        let last = *levels.last().unwrap();
        Self::new(grid, levels, left, Tail::constant(before), Tail::constant(last))
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn left_limits(&self) -> &[f64] {
        &self.left_limits
    }
    pub fn tail_left(&self) -> &Tail {
        &self.tail_left
    }
    pub fn tail_right(&self) -> &Tail {
        &self.tail_right
    }
    pub fn len(&self) -> usize {
        self.grid.len()
    }
    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }
    pub fn span(&self) -> (f64, f64) {
        (self.grid[0], *self.grid.last().unwrap())
    }

    /// Jump `ψ(x_i) − ψ(x_i−)` at node `i`.
    pub fn jump(&self, i: usize) -> f64 {
        self.values[i] - self.left_limits[i]
    }

    /// Index `i` of the segment `[x_i, x_{i+1})` containing `x`, or `None`
    /// outside `[x_0, x_last)`.
    fn segment(&self, x: f64) -> Option<usize> {
        let n = self.grid.len();
        if n < 2 || x < self.grid[0] || x >= self.grid[n - 1] {
            return None;
        }
        Some(self.grid.partition_point(|&g| g <= x) - 1)
    }

    #[inline]
    fn interpolate(&self, i: usize, x: f64) -> f64 {
        let (x0, x1) = (self.grid[i], self.grid[i + 1]);
        let (y0, y1) = (self.values[i], self.left_limits[i + 1]);
        let t = (x - x0) / (x1 - x0);
        y0 + t * (y1 - y0)
    }

    /// Right-continuous value `ψ(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.grid.len();
        if x < self.grid[0] {
            return self.tail_left.value(x);
        }
        if x >= self.grid[n - 1] {
            return if x == self.grid[n - 1] { self.values[n - 1] } else { self.tail_right.value(x) };
        }
        let i = self.segment(x).unwrap();
        if x == self.grid[i] {
            self.values[i]
        } else {
            self.interpolate(i, x)
        }
    }

    /// Left limit `ψ(x−)`.
    pub fn eval_left(&self, x: f64) -> f64 {
        let n = self.grid.len();
        if x <= self.grid[0] {
            return if x == self.grid[0] { self.left_limits[0] } else { self.tail_left.value(x) };
        }
        if x > self.grid[n - 1] {
            return self.tail_right.value(x);
        }
        let i = self.grid.partition_point(|&g| g < x);
        if self.grid[i] == x {
            return self.left_limits[i];
        }
        self.interpolate(i - 1, x)
    }

    /// `true` when every jump and every segment increment is `≥ −tol`, and
    /// the tails are nondecreasing.
    pub fn is_nondecreasing(&self, tol: f64) -> bool {
        let n = self.grid.len();
        let jumps_ok = (0..n).all(|i| self.jump(i) >= -tol);
        let segs_ok = (0..n - 1).all(|i| self.left_limits[i + 1] - self.values[i] >= -tol);
        let right_ok = self.tail_right.derivative(true).coef >= 0.0;
        let left_ok = self.tail_left.derivative(false).coef >= 0.0;
        jumps_ok && segs_ok && right_ok && left_ok
    }

    /// `a·self + b·other` on the union of both grids.
    pub fn linear_combination(&self, a: f64, other: &GridFunction, b: f64) -> GridFunction {
        let grid = merge_grids(&self.grid, &other.grid);
        let values: Vec<f64> = grid.iter().map(|&x| a * self.eval(x) + b * other.eval(x)).collect();
        let mut left: Vec<f64> =
            grid.iter().map(|&x| a * self.eval_left(x) + b * other.eval_left(x)).collect();
        let x0 = grid[0];
        let xl = *grid.last().unwrap();
        let tl = combine_tails(&self.tail_left, a, &other.tail_left, b, x0, left[0]);
        let tr = combine_tails(&self.tail_right, a, &other.tail_right, b, xl, *values.last().unwrap());
        left[0] = tl.value(x0);
        GridFunction { grid, values, left_limits: left, tail_left: tl, tail_right: tr }
    }

    /// `self − other`.
    pub fn sub(&self, other: &GridFunction) -> GridFunction {
        self.linear_combination(1.0, other, -1.0)
    }

    /// Multiplies values, left limits and tails by `s`.
    pub fn scale(&self, s: f64) -> GridFunction {
        GridFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * s).collect(),
            left_limits: self.left_limits.iter().map(|v| v * s).collect(),
            tail_left: self.tail_left.scale(s),
            tail_right: self.tail_right.scale(s),
        }
    }
}

/// Tail of `a·ta + b·tb`, pinned to `edge_value` at `edge`. Exact when the
/// two tails share an exponent; otherwise the faster-growing shape is kept.
fn combine_tails(ta: &Tail, a: f64, tb: &Tail, b: f64, edge: f64, edge_value: f64) -> Tail {
    let (sa, sb) = (ta.scale(a), tb.scale(b));
    let mut t = match sa.add(&sb) {
        Some(t) => t,
        None => {
            let dom = if sa.growth() >= sb.growth() { sa } else { sb };
            Tail::matching(edge, edge_value, dom.offset, dom.exponent)
        }
    };
    // absorb rounding so the edge stays continuous; the offset is the limit
    // at infinity and must stay exact, or a decaying tail turns constant
    if t.is_constant() {
        let exact = t.value(edge);
        if (exact - edge_value).abs() > 1e-12 * (1.0 + edge_value.abs()) {
            t.offset = edge_value;
        } else {
            t.offset = exact;
        }
        t.coef = 0.0;
    } else {
        t.coef = (edge_value - t.offset) / (1.0 + edge.abs()).powf(t.exponent);
    }
    t
}

/// Sorted union of two strictly increasing grids.
pub fn merge_grids(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = if j >= b.len() || (i < a.len() && a[i] <= b[j]) {
            let v = a[i];
            i += 1;
            if j < b.len() && b[j] == v {
                j += 1;
            }
            v
        } else {
            let v = b[j];
            j += 1;
            v
        };
        if out.last() != Some(&next) {
            out.push(next);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_respects_cadlag_convention() {
        let f = GridFunction::new(
            vec![0.0, 1.0, 2.0],
            vec![0.0, 2.0, 3.0],
            vec![0.0, 1.0, 3.0],
            Tail::constant(0.0),
            Tail::constant(3.0),
        )
        .unwrap();
        assert_eq!(f.eval(0.5), 0.5);
        assert_eq!(f.eval(1.0), 2.0);
        assert_eq!(f.eval_left(1.0), 1.0);
        assert_eq!(f.eval(1.5), 2.5);
        assert_eq!(f.eval(10.0), 3.0);
        assert_eq!(f.eval(-1.0), 0.0);
        assert_eq!(f.jump(1), 1.0);
        assert!(f.is_nondecreasing(0.0));
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridFunction::sample(vec![0.0, 0.0], |x| x).is_err());
        assert!(GridFunction::sample(vec![0.0, f64::NAN], |x| x).is_err());
        assert!(GridFunction::new(vec![0.0], vec![1.0], vec![0.5], Tail::constant(0.0), Tail::constant(1.0)).is_err());
    }

    #[test]
    fn merge_deduplicates() {
        assert_eq!(merge_grids(&[0.0, 1.0, 3.0], &[1.0, 2.0, 4.0]), vec![0.0, 1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn combine_on_union_grid() {
        let a = GridFunction::sample(vec![0.0, 2.0], |x| x).unwrap();
        let b = GridFunction::step(vec![1.0], vec![1.0], 0.0).unwrap();
        let d = a.sub(&b);
        assert_eq!(d.grid(), &[0.0, 1.0, 2.0]);
        assert_eq!(d.eval(1.0), 0.0);
        assert_eq!(d.eval_left(1.0), 1.0);
        assert_eq!(d.eval(5.0), 1.0);
    }
}
