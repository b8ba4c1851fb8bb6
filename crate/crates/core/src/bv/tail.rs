use serde::{Deserialize, Serialize};

/// Behaviour of a grid function (or a measure's density) beyond its grid:
/// `offset + coef · (1 + |x|)^exponent`.
///
/// `coef == 0` gives a constant tail. Negative exponents describe decay
/// towards `offset`, positive exponents polynomial growth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tail {
    pub offset: f64,
    pub coef: f64,
    pub exponent: f64,
}

impl Tail {
    pub const ZERO: Tail = Tail { offset: 0.0, coef: 0.0, exponent: 0.0 };

    pub fn constant(value: f64) -> Self {
        Tail { offset: value, coef: 0.0, exponent: 0.0 }
    }

    pub fn power(coef: f64, exponent: f64) -> Self {
        Tail { offset: 0.0, coef, exponent }
    }

    /// Tail approaching `limit` like `(1+|x|)^exponent`, continuous with
    /// `edge_value` at `edge`.
    pub fn matching(edge: f64, edge_value: f64, limit: f64, exponent: f64) -> Self {
        if exponent == 0.0 {
            return Tail::constant(edge_value);
        }
        let coef = (edge_value - limit) / (1.0 + edge.abs()).powf(exponent);
        Tail { offset: limit, coef, exponent }
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        if self.coef == 0.0 {
            self.offset
        } else {
            self.offset + self.coef * (1.0 + x.abs()).powf(self.exponent)
        }
    }

    /// Exponent `e` with `|tail(x)| ≍ (1+|x|)^e`; `-∞` for the zero tail.
    pub fn growth(&self) -> f64 {
        let from_coef = if self.coef != 0.0 { self.exponent } else { f64::NEG_INFINITY };
        let from_offset = if self.offset != 0.0 { 0.0 } else { f64::NEG_INFINITY };
        from_coef.max(from_offset)
    }

    pub fn is_constant(&self) -> bool {
        self.coef == 0.0 || self.exponent == 0.0
    }

    /// Density of the induced measure `d(tail)/dx` on the given side.
    /// `right == true` for `x → +∞`.
    pub fn derivative(&self, right: bool) -> Tail {
        if self.is_constant() {
            return Tail::ZERO;
        }
        let c = self.coef * self.exponent;
        Tail::power(if right { c } else { -c }, self.exponent - 1.0)
    }

    /// `|tail|`, valid when the tail keeps one sign (densities, `offset == 0`).
    pub fn abs(&self) -> Tail {
        Tail { offset: self.offset.abs(), coef: self.coef.abs(), exponent: self.exponent }
    }

    /// Multiplies by a scalar.
    pub fn scale(&self, s: f64) -> Tail {
        Tail { offset: self.offset * s, coef: self.coef * s, exponent: self.exponent }
    }

    /// `self(x) + other(x)` when both share an exponent (or one is constant).
    pub fn add(&self, other: &Tail) -> Option<Tail> {
        if self.coef == 0.0 {
            return Some(Tail { offset: self.offset + other.offset, ..*other });
        }
        if other.coef == 0.0 || other.exponent == self.exponent {
            return Some(Tail {
                offset: self.offset + other.offset,
                coef: self.coef + other.coef,
                exponent: self.exponent,
            });
        }
        None
    }
}

/// `∫_{a}^{∞} (1+x)^e dx` for `a ≥ 0`, or `None` when it diverges.
pub(crate) fn power_tail_integral(a: f64, e: f64) -> Option<f64> {
    debug_assert!(a >= 0.0);
    if e >= -1.0 {
        None
    } else {
        Some((1.0 + a).powf(e + 1.0) / (-(e + 1.0)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matching_is_continuous_at_edge() {
        let t = Tail::matching(3.0, 0.25, 1.0, -2.0);
        assert!((t.value(3.0) - 0.25).abs() < 1e-15);
        assert!((t.value(1e8) - 1.0).abs() < 1e-10);
        assert_eq!(t.growth(), 0.0);
        assert_eq!(Tail::ZERO.growth(), f64::NEG_INFINITY);
    }

    #[test]
    fn derivative_signs() {
        // (1+|x|)^2 increases to the right, decreases to the left
        let t = Tail::power(1.0, 2.0);
        assert!(t.derivative(true).value(5.0) > 0.0);
        assert!(t.derivative(false).value(-5.0) < 0.0);
        assert!((t.derivative(true).value(5.0) - 12.0).abs() < 1e-12);
    }
}
