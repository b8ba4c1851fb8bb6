use serde::{Deserialize, Serialize};

use super::grid::merge_grids;
use super::tail::Tail;
use crate::error::{ensure_finite, invalid, Error, Result};

const SIGN_TOL: f64 = 1e-12;

/// Quadratic density on one segment, given by its values at the start, the
/// midpoint and the end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Quadratic {
    pub start: f64,
    pub mid: f64,
    pub end: f64,
}

impl Quadratic {
    pub fn constant(c: f64) -> Self {
        Quadratic { start: c, mid: c, end: c }
    }

    pub fn linear(start: f64, end: f64) -> Self {
        Quadratic { start, mid: 0.5 * (start + end), end }
    }

    /// Quadratic with the given endpoint values and segment mean.
    pub fn with_mean(start: f64, end: f64, mean: f64) -> Self {
        Quadratic { start, mid: (6.0 * mean - start - end) / 4.0, end }
    }

    /// Value at relative position `t ∈ [0, 1]`.
    #[inline]
    pub fn at(&self, t: f64) -> f64 {
        self.start * (1.0 - t) * (1.0 - 2.0 * t) + 4.0 * self.mid * t * (1.0 - t) + self.end * t * (2.0 * t - 1.0)
    }

    /// Mean over `[0, 1]` (Simpson is exact).
    #[inline]
    pub fn mean(&self) -> f64 {
        (self.start + 4.0 * self.mid + self.end) / 6.0
    }

    /// The same polynomial restricted to `[t0, t1]`, re-parametrised to `[0, 1]`.
    pub fn restrict(&self, t0: f64, t1: f64) -> Quadratic {
        Quadratic { start: self.at(t0), mid: self.at(0.5 * (t0 + t1)), end: self.at(t1) }
    }

    fn scale(&self, s: f64) -> Quadratic {
        Quadratic { start: self.start * s, mid: self.mid * s, end: self.end * s }
    }

    fn add(&self, o: &Quadratic) -> Quadratic {
        Quadratic { start: self.start + o.start, mid: self.mid + o.mid, end: self.end + o.end }
    }

    /// Roots strictly inside `(0, 1)`, ascending.
    fn interior_roots(&self) -> Vec<f64> {
        // q(t) = a t² + b t + c
        let c = self.start;
        let a = 2.0 * self.start - 4.0 * self.mid + 2.0 * self.end;
        let b = -3.0 * self.start + 4.0 * self.mid - self.end;
        let scale = self.start.abs().max(self.mid.abs()).max(self.end.abs());
        if scale == 0.0 {
            return Vec::new();
        }
        let mut roots = Vec::new();
        if a.abs() <= 1e-14 * scale {
            if b != 0.0 {
                roots.push(-c / b);
            }
        } else {
            let disc = b * b - 4.0 * a * c;
            if disc > 0.0 {
                let sq = disc.sqrt();
                // numerically stable pair
                let qv = -0.5 * (b + b.signum() * sq);
                roots.push(qv / a);
                if qv != 0.0 {
                    roots.push(c / qv);
                }
            }
        }
        roots.retain(|&t| t > 1e-13 && t < 1.0 - 1e-13);
        roots.sort_by(f64::total_cmp);
        roots.dedup();
        roots
    }
}

/// A nonnegative Radon measure on the real line: point masses at `breaks`,
/// a quadratic density on each segment between consecutive breaks, and
/// density tails beyond the outermost breaks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measure {
    breaks: Vec<f64>,
    atoms: Vec<f64>,
    density: Vec<Quadratic>,
    tail_left: Tail,
    tail_right: Tail,
}

impl Measure {
    pub fn new(
        breaks: Vec<f64>,
        atoms: Vec<f64>,
        density: Vec<Quadratic>,
        tail_left: Tail,
        tail_right: Tail,
    ) -> Result<Self> {
        ensure_finite(&breaks, "measure breaks")?;
        ensure_finite(&atoms, "atom masses")?;
        if atoms.len() != breaks.len() || density.len() + 1 != breaks.len().max(1) {
            return Err(invalid(format!(
                "measure with {} breaks needs as many atoms and one fewer segments (got {} and {})",
                breaks.len(),
                atoms.len(),
                density.len()
            )));
        }
        if let Some(i) = breaks.windows(2).position(|w| w[0] >= w[1]) {
            return Err(invalid(format!("measure breaks not strictly increasing at index {}", i + 1)));
        }
        if breaks.is_empty() && (tail_left != Tail::ZERO || tail_right != Tail::ZERO) {
            return Err(invalid("a measure without breaks must have zero tails"));
        }
        let scale = atoms
            .iter()
            .map(|m| m.abs())
            .chain(density.iter().map(|q| q.start.abs().max(q.mid.abs()).max(q.end.abs())))
            .fold(0.0, f64::max);
        let tol = SIGN_TOL * (1.0 + scale);
        if let Some(i) = atoms.iter().position(|&m| m < -tol) {
            return Err(invalid(format!("negative atom mass {} at break {}", atoms[i], breaks[i])));
        }
        for (i, q) in density.iter().enumerate() {
            if !(q.start.is_finite() && q.mid.is_finite() && q.end.is_finite()) {
                return Err(invalid(format!("non-finite density on segment {i}")));
            }
            if q.start < -tol || q.mid < -tol || q.end < -tol {
                return Err(invalid(format!("negative density on segment starting at {}", breaks[i])));
            }
        }
        if let (Some(&x0), Some(&xl)) = (breaks.first(), breaks.last()) {
            if !tail_left.is_constant() && x0 > 0.0 || !tail_right.is_constant() && xl < 0.0 {
                return Err(invalid("non-constant density tails must not straddle the origin"));
            }
            if tail_sign(&tail_left, x0) < 0 || tail_sign(&tail_right, xl) < 0 {
                return Err(invalid("density tails of a positive measure must be nonnegative"));
            }
        }
        Ok(Self { breaks, atoms, density, tail_left, tail_right })
    }

    pub fn zero() -> Self {
        Self { breaks: Vec::new(), atoms: Vec::new(), density: Vec::new(), tail_left: Tail::ZERO, tail_right: Tail::ZERO }
    }

    /// Purely atomic measure. Locations must be strictly increasing.
    pub fn atomic(locations: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        let segs = locations.len().saturating_sub(1);
        Self::new(locations, masses, vec![Quadratic::default(); segs], Tail::ZERO, Tail::ZERO)
    }

    /// Absolutely continuous measure with the given density on `[a, b]`,
    /// sampled per segment of `breaks` (start, midpoint, end).
    pub fn from_density(breaks: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let density = breaks
            .windows(2)
            .map(|w| Quadratic { start: f(w[0]), mid: f(0.5 * (w[0] + w[1])), end: f(w[1]) })
            .collect();
        let atoms = vec![0.0; breaks.len()];
        Self::new(breaks, atoms, density, Tail::ZERO, Tail::ZERO)
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }
    pub fn atom_masses(&self) -> &[f64] {
        &self.atoms
    }
    pub fn density_segments(&self) -> &[Quadratic] {
        &self.density
    }
    pub fn tail_left(&self) -> &Tail {
        &self.tail_left
    }
    pub fn tail_right(&self) -> &Tail {
        &self.tail_right
    }
    pub fn is_zero(&self) -> bool {
        self.atoms.iter().all(|&m| m == 0.0)
            && self.density.iter().all(|q| q.start == 0.0 && q.mid == 0.0 && q.end == 0.0)
            && self.tail_left.growth() == f64::NEG_INFINITY
            && self.tail_right.growth() == f64::NEG_INFINITY
    }

    /// Nonzero atoms as `(location, mass)`.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        self.breaks.iter().zip(&self.atoms).filter(|(_, &m)| m != 0.0).map(|(&x, &m)| (x, m)).collect()
    }

    /// Smallest interval outside of which the measure vanishes.
    pub fn support_bounds(&self) -> (f64, f64) {
        if self.breaks.is_empty() {
            return (0.0, 0.0);
        }
        let lo = if self.tail_left.growth() > f64::NEG_INFINITY { f64::NEG_INFINITY } else { self.breaks[0] };
        let hi = if self.tail_right.growth() > f64::NEG_INFINITY { f64::INFINITY } else { *self.breaks.last().unwrap() };
        (lo, hi)
    }

    /// Density at `x` (right-continuous between breaks).
    pub fn density_at(&self, x: f64) -> f64 {
        let n = self.breaks.len();
        if n == 0 {
            return 0.0;
        }
        if x < self.breaks[0] {
            return self.tail_left.value(x);
        }
        if x >= self.breaks[n - 1] {
            return if n == 1 || x > self.breaks[n - 1] { self.tail_right.value(x) } else { self.density[n - 2].end };
        }
        let i = self.breaks.partition_point(|&b| b <= x) - 1;
        let (a, b) = (self.breaks[i], self.breaks[i + 1]);
        self.density[i].at((x - a) / (b - a))
    }

    /// Mass of the half-open interval `(a, b]`. Either end may be infinite.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        if !(a < b) || self.breaks.is_empty() {
            return 0.0;
        }
        let n = self.breaks.len();
        let (x0, xl) = (self.breaks[0], self.breaks[n - 1]);
        let mut total = 0.0;
        // atoms with a < x ≤ b
        let lo = self.breaks.partition_point(|&x| x <= a);
        let hi = self.breaks.partition_point(|&x| x <= b);
        for m in &self.atoms[lo..hi] {
            total += m;
        }
        // density inside the grid span
        let (p, q) = (a.max(x0), b.min(xl));
        if p < q {
            let first = self.breaks.partition_point(|&x| x <= p).saturating_sub(1);
            for i in first..n - 1 {
                let (s, e) = (self.breaks[i], self.breaks[i + 1]);
                if s >= q {
                    break;
                }
                let (u, v) = (p.max(s), q.min(e));
                if u < v {
                    let h = e - s;
                    let part = self.density[i].restrict((u - s) / h, (v - s) / h);
                    total += part.mean() * (v - u);
                }
            }
        }
        if a < x0 {
            total += tail_integral(&self.tail_left, a, b.min(x0));
        }
        if b > xl {
            total += tail_integral(&self.tail_right, a.max(xl), b);
        }
        total
    }

    pub fn total_mass(&self) -> f64 {
        self.mass(f64::NEG_INFINITY, f64::INFINITY)
    }

    /// Density mass of segment `i`.
    pub fn segment_mass(&self, i: usize) -> f64 {
        self.density[i].mean() * (self.breaks[i + 1] - self.breaks[i])
    }

    pub fn scale(&self, s: f64) -> Measure {
        assert!(s >= 0.0, "positive measures scale by nonnegative factors");
        Measure {
            breaks: self.breaks.clone(),
            atoms: self.atoms.iter().map(|m| m * s).collect(),
            density: self.density.iter().map(|q| q.scale(s)).collect(),
            tail_left: self.tail_left.scale(s),
            tail_right: self.tail_right.scale(s),
        }
    }

    /// The same measure described on a finer set of breaks.
    pub fn refine(&self, breaks: &[f64]) -> Measure {
        if self.breaks.is_empty() {
            let segs = breaks.len().saturating_sub(1);
            return Measure {
                breaks: breaks.to_vec(),
                atoms: vec![0.0; breaks.len()],
                density: vec![Quadratic::default(); segs],
                tail_left: Tail::ZERO,
                tail_right: Tail::ZERO,
            };
        }
        let grid = merge_grids(&self.breaks, breaks);
        let atoms = grid
            .iter()
            .map(|&x| match self.breaks.binary_search_by(|b| b.total_cmp(&x)) {
                Ok(i) => self.atoms[i],
                Err(_) => 0.0,
            })
            .collect();
        let density = grid.windows(2).map(|w| self.piece(w[0], w[1])).collect();
        Measure { breaks: grid, atoms, density, tail_left: self.tail_left, tail_right: self.tail_right }
    }

    /// Density on `[u, v]` as a quadratic; `[u, v]` must not contain a break
    /// in its interior.
    fn piece(&self, u: f64, v: f64) -> Quadratic {
        let n = self.breaks.len();
        let mid = 0.5 * (u + v);
        if v <= self.breaks[0] {
            return Quadratic { start: self.tail_left.value(u), mid: self.tail_left.value(mid), end: self.tail_left.value(v) };
        }
        if u >= self.breaks[n - 1] {
            return Quadratic { start: self.tail_right.value(u), mid: self.tail_right.value(mid), end: self.tail_right.value(v) };
        }
        let i = self.breaks.partition_point(|&b| b <= mid) - 1;
        let (s, e) = (self.breaks[i], self.breaks[i + 1]);
        self.density[i].restrict((u - s) / (e - s), (v - s) / (e - s))
    }

    /// Sum of two positive measures. Fails when their tails have
    /// incompatible shapes.
    pub fn add(&self, other: &Measure) -> Result<Measure> {
        if self.breaks.is_empty() {
            return Ok(other.clone());
        }
        if other.breaks.is_empty() {
            return Ok(self.clone());
        }
        let grid = merge_grids(&self.breaks, &other.breaks);
        let a = self.refine(&grid);
        let b = other.refine(&grid);
        let tl = a.tail_left.add(&b.tail_left).ok_or_else(|| invalid("left density tails have different exponents"))?;
        let tr = a.tail_right.add(&b.tail_right).ok_or_else(|| invalid("right density tails have different exponents"))?;
        Ok(Measure {
            breaks: grid,
            atoms: a.atoms.iter().zip(&b.atoms).map(|(x, y)| x + y).collect(),
            density: a.density.iter().zip(&b.density).map(|(x, y)| x.add(y)).collect(),
            tail_left: tl,
            tail_right: tr,
        })
    }
}

/// +1, 0 or −1 for the sign a density tail keeps; `-1` also when it changes sign.
fn tail_sign(t: &Tail, edge: f64) -> i32 {
    let at_edge = t.value(edge);
    let at_inf = if t.is_constant() {
        at_edge
    } else if t.exponent < 0.0 {
        t.offset
    } else {
        t.coef
    };
    let tol = SIGN_TOL * (1.0 + at_edge.abs());
    if at_edge < -tol || at_inf < -tol {
        -1
    } else if at_edge.abs() <= tol && at_inf.abs() <= tol {
        0
    } else {
        1
    }
}

/// `∫_p^q tail(x) dx` on one side of the origin (`p < q`, ends may be infinite).
pub(crate) fn tail_integral(t: &Tail, p: f64, q: f64) -> f64 {
    if !(p < q) {
        return 0.0;
    }
    let mut total = 0.0;
    if t.offset != 0.0 {
        total += t.offset * (q - p);
    }
    if !t.is_constant() {
        // substitute r = |x|; the interval maps to [r0, r1]
        let (r0, r1) = if q <= 0.0 { (-q, -p) } else { (p, q) };
        let e1 = t.exponent + 1.0;
        let integral = if e1 == 0.0 {
            ((1.0 + r1) / (1.0 + r0)).ln()
        } else {
            ((1.0 + r1).powf(e1) - (1.0 + r0).powf(e1)) / e1
        };
        total += t.coef * integral;
    } else if t.coef != 0.0 {
        total += t.coef * (q - p);
    }
    total
}

/// A signed measure stored as its positive and negative parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignedMeasure {
    pub positive: Measure,
    pub negative: Measure,
}

impl SignedMeasure {
    pub fn zero() -> Self {
        Self { positive: Measure::zero(), negative: Measure::zero() }
    }

    pub fn from_positive(m: Measure) -> Self {
        Self { positive: m, negative: Measure::zero() }
    }

    pub fn from_parts(positive: Measure, negative: Measure) -> Self {
        Self { positive, negative }
    }

    /// Splits signed atoms, signed quadratic densities and signed tails into
    /// positive and negative parts. Segments are cut at density roots.
    pub fn from_signed(
        breaks: Vec<f64>,
        atoms: Vec<f64>,
        density: Vec<Quadratic>,
        tail_left: Tail,
        tail_right: Tail,
    ) -> Result<Self> {
        if breaks.is_empty() {
            return Ok(Self::zero());
        }
        if atoms.len() != breaks.len() || density.len() + 1 != breaks.len() {
            return Err(invalid("signed measure needs one atom per break and one segment per gap"));
        }
        let (x0, xl) = (breaks[0], *breaks.last().unwrap());
        let mut grid = Vec::with_capacity(breaks.len());
        let mut pos_atoms = Vec::with_capacity(breaks.len());
        let mut neg_atoms = Vec::with_capacity(breaks.len());
        let mut pos_seg = Vec::with_capacity(density.len());
        let mut neg_seg = Vec::with_capacity(density.len());
        for i in 0..breaks.len() {
            grid.push(breaks[i]);
            pos_atoms.push(atoms[i].max(0.0));
            neg_atoms.push((-atoms[i]).max(0.0));
            if i + 1 == breaks.len() {
                break;
            }
            let q = density[i];
            let (a, b) = (breaks[i], breaks[i + 1]);
            let mut cuts = vec![0.0];
            cuts.extend(q.interior_roots());
            cuts.push(1.0);
            for (k, w) in cuts.windows(2).enumerate() {
                if k > 0 {
                    let x = a + w[0] * (b - a);
                    if x <= *grid.last().unwrap() || x >= b {
                        continue;
                    }
                    grid.push(x);
                    pos_atoms.push(0.0);
                    neg_atoms.push(0.0);
                }
                let part = q.restrict(w[0], w[1]);
                if part.mean() >= 0.0 {
                    pos_seg.push(clip(part));
                    neg_seg.push(Quadratic::default());
                } else {
                    pos_seg.push(Quadratic::default());
                    neg_seg.push(clip(part.scale(-1.0)));
                }
            }
        }
        let (pl, nl) = split_tail(&tail_left, x0)?;
        let (pr, nr) = split_tail(&tail_right, xl)?;
        Ok(Self {
            positive: Measure::new(grid.clone(), pos_atoms, pos_seg, pl, pr)?,
            negative: Measure::new(grid, neg_atoms, neg_seg, nl, nr)?,
        })
    }

    /// Mass of `(a, b]`.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        self.positive.mass(a, b) - self.negative.mass(a, b)
    }

    /// Total variation `|μ|((a, b])`.
    pub fn variation(&self, a: f64, b: f64) -> f64 {
        self.positive.mass(a, b) + self.negative.mass(a, b)
    }

    pub fn density_at(&self, x: f64) -> f64 {
        self.positive.density_at(x) - self.negative.density_at(x)
    }

    /// Signed atoms, merged by location.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = self.positive.atoms();
        for (x, m) in self.negative.atoms() {
            match out.iter_mut().find(|(y, _)| *y == x) {
                Some(e) => e.1 -= m,
                None => out.push((x, -m)),
            }
        }
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        out.retain(|&(_, m)| m != 0.0);
        out
    }

    pub fn support_bounds(&self) -> (f64, f64) {
        let (a, b) = self.positive.support_bounds();
        let (c, d) = self.negative.support_bounds();
        match (self.positive.breaks.is_empty(), self.negative.breaks.is_empty()) {
            (true, true) => (0.0, 0.0),
            (true, false) => (c, d),
            (false, true) => (a, b),
            (false, false) => (a.min(c), b.max(d)),
        }
    }

    /// `|μ| = μ⁺ + μ⁻`.
    pub fn abs(&self) -> Result<Measure> {
        self.positive.add(&self.negative)
    }

    pub fn negate(&self) -> SignedMeasure {
        SignedMeasure { positive: self.negative.clone(), negative: self.positive.clone() }
    }

    pub fn scale(&self, s: f64) -> SignedMeasure {
        if s >= 0.0 {
            SignedMeasure { positive: self.positive.scale(s), negative: self.negative.scale(s) }
        } else {
            self.negate().scale(-s)
        }
    }

    /// `μ + ν`, keeping positive and negative parts separately (not a
    /// minimal decomposition).
    pub fn add(&self, other: &SignedMeasure) -> Result<SignedMeasure> {
        Ok(SignedMeasure {
            positive: self.positive.add(&other.positive)?,
            negative: self.negative.add(&other.negative)?,
        })
    }
}

fn clip(q: Quadratic) -> Quadratic {
    Quadratic { start: q.start.max(0.0), mid: q.mid.max(0.0), end: q.end.max(0.0) }
}

fn split_tail(t: &Tail, edge: f64) -> Result<(Tail, Tail)> {
    match tail_sign(t, edge) {
        0 => Ok((Tail::ZERO, Tail::ZERO)),
        1 => Ok((*t, Tail::ZERO)),
        _ => {
            let neg = t.scale(-1.0);
            if tail_sign(&neg, edge) < 0 {
                Err(Error::InvalidInput(format!("density tail {t:?} changes sign beyond {edge}")))
            } else {
                Ok((Tail::ZERO, neg))
            }
        }
    }
}
