use super::grid::{merge_grids, GridFunction};
use super::jordan::signed_measure_of;
use super::measure::{Measure, Quadratic, SignedMeasure};
use super::tail::{power_tail_integral, Tail};
use crate::error::{Error, Result};
use crate::special::gauss_legendre;

/// `∫ ψ dμ` over the open line, or `∫ ψ(x−) dμ(x)` when `use_left_limits`.
///
/// Between breaks the integrand is a linear function times a quadratic
/// density and is integrated exactly; segments where either factor follows
/// a power tail use Gauss–Legendre in `log(1+|x|)`, and the outermost tails
/// use closed forms. A tail product that is not integrable is reported as
/// [`Error::Divergence`].
pub fn stieltjes(psi: &GridFunction, mu: &SignedMeasure, use_left_limits: bool) -> Result<f64> {
    let p = integrate(psi, &mu.positive, use_left_limits)?;
    let n = integrate(psi, &mu.negative, use_left_limits)?;
    Ok(p - n)
}

fn integrate(psi: &GridFunction, m: &Measure, left: bool) -> Result<f64> {
    let breaks = m.breaks();
    if breaks.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for (&x, &a) in breaks.iter().zip(m.atom_masses()) {
        if a != 0.0 {
            total += a * if left { psi.eval_left(x) } else { psi.eval(x) };
        }
    }
    let (p0, pl) = psi.span();
    let (m0, ml) = (breaks[0], *breaks.last().unwrap());
    let grid = merge_grids(psi.grid(), breaks);
    let segs = m.density_segments();
    let mut seg = 0usize;
    for w in grid.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mid = 0.5 * (a + b);
        let inside_m = a >= m0 && b <= ml;
        if inside_m {
            while breaks[seg + 1] <= a {
                seg += 1;
            }
        }
        let psi_poly = (a >= p0 && b <= pl)
            || (b <= p0 && psi.tail_left().is_constant())
            || (a >= pl && psi.tail_right().is_constant());
        let m_poly = inside_m
            || (b <= m0 && m.tail_left().is_constant())
            || (a >= ml && m.tail_right().is_constant());
        if psi_poly && m_poly {
            let q = if inside_m {
                let (s, e) = (breaks[seg], breaks[seg + 1]);
                segs[seg].restrict((a - s) / (e - s), (b - s) / (e - s))
            } else {
                Quadratic::constant(m.density_at(mid))
            };
            let (fa, fm, fb) = (psi.eval(a), psi.eval(mid), psi.eval_left(b));
            total += (b - a) / 6.0 * (fa * q.start + 4.0 * fm * q.mid + fb * q.end);
        } else {
            let dens = |x: f64| {
                if inside_m {
                    let (s, e) = (breaks[seg], breaks[seg + 1]);
                    segs[seg].at((x - s) / (e - s))
                } else {
                    m.density_at(x)
                }
            };
            total += log_gauss(a, b, &|x| psi.eval(x) * dens(x));
        }
    }
    let hi = pl.max(ml);
    let lo = p0.min(m0);
    total += outer_tail(psi.tail_right(), m.tail_right(), hi, "+∞")?;
    total += outer_tail(psi.tail_left(), m.tail_left(), lo, "−∞")?;
    Ok(total)
}

/// Gauss–Legendre on `[a, b]` (one side of the origin) in the variable
/// `s = ln(1 + |x|)`, which keeps power-law integrands well resolved.
fn log_gauss(a: f64, b: f64, f: &dyn Fn(f64) -> f64) -> f64 {
    let rule = gauss_legendre(20);
    if a < 0.0 && b > 0.0 {
        return log_gauss(a, 0.0, f) + log_gauss(0.0, b, f);
    }
    let sign = if b <= 0.0 { -1.0 } else { 1.0 };
    let (r0, r1) = if sign < 0.0 { (-b, -a) } else { (a, b) };
    let (s0, s1) = ((1.0 + r0).ln(), (1.0 + r1).ln());
    rule.integrate(s0, s1, |s| {
        let w = s.exp();
        w * f(sign * (w - 1.0))
    })
}

/// Splits a tail into `(constant, coefficient, exponent)` with a
/// non-constant power part only when `exponent != 0`.
fn canonical(t: &Tail) -> (f64, f64, f64) {
    if t.is_constant() {
        (t.offset + if t.exponent == 0.0 { t.coef } else { 0.0 }, 0.0, 0.0)
    } else {
        (t.offset, t.coef, t.exponent)
    }
}

/// `∫` of `f_tail · density_tail` beyond `edge` (towards `side`).
fn outer_tail(ft: &Tail, dt: &Tail, edge: f64, side: &str) -> Result<f64> {
    let (o2, c2, e2) = canonical(dt);
    if o2 == 0.0 && c2 == 0.0 {
        return Ok(0.0);
    }
    let (o1, c1, e1) = canonical(ft);
    let a = edge.abs();
    let mut total = 0.0;
    for (coef, e) in [(o1 * o2, 0.0), (o1 * c2, e2), (c1 * o2, e1), (c1 * c2, e1 + e2)] {
        if coef == 0.0 {
            continue;
        }
        match power_tail_integral(a, e) {
            Some(v) => total += coef * v,
            None => {
                return Err(Error::Divergence(format!(
                    "integrand tail grows like (1+|x|)^{e} towards {side}"
                )))
            }
        }
    }
    Ok(total)
}

/// Both sides of the integration-by-parts formula
/// `∫u dv = c₊ − c₋ − ∫v(x−) du(x)`, with `c± = lim u(x)v(x)` at `±∞`.
pub fn integration_by_parts(u: &GridFunction, v: &GridFunction) -> Result<(f64, f64)> {
    let du = signed_measure_of(u)?;
    let dv = signed_measure_of(v)?;
    check_absolute(v, &du, "∫|v(x−)| |du|(x)")?;
    check_absolute(u, &dv, "∫|u(x)| |dv|(x)")?;
    let c_plus = product_limit(u.tail_right(), v.tail_right(), "+∞")?;
    let c_minus = product_limit(u.tail_left(), v.tail_left(), "−∞")?;
    let lhs = stieltjes(u, &dv, false)?;
    let rhs = c_plus - c_minus - stieltjes(v, &du, true)?;
    Ok((lhs, rhs))
}

fn measure_tail_growth(mu: &SignedMeasure, right: bool) -> f64 {
    let pick = |m: &Measure| if right { m.tail_right().growth() } else { m.tail_left().growth() };
    pick(&mu.positive).max(pick(&mu.negative))
}

fn check_absolute(f: &GridFunction, mu: &SignedMeasure, name: &str) -> Result<()> {
    for (right, side) in [(true, "+∞"), (false, "−∞")] {
        let gm = measure_tail_growth(mu, right);
        let gf = if right { f.tail_right().growth() } else { f.tail_left().growth() };
        if gm > f64::NEG_INFINITY && gf > f64::NEG_INFINITY && gm + gf >= -1.0 {
            return Err(Error::Precondition(format!("{name} diverges towards {side}")));
        }
    }
    Ok(())
}

fn product_limit(a: &Tail, b: &Tail, side: &str) -> Result<f64> {
    let (ga, gb) = (a.growth(), b.growth());
    if ga == f64::NEG_INFINITY || gb == f64::NEG_INFINITY || ga + gb < 0.0 {
        return Ok(0.0);
    }
    let limit = |t: &Tail, g: f64| if g < 0.0 { 0.0 } else { canonical(t).0 };
    if ga <= 0.0 && gb <= 0.0 {
        return Ok(limit(a, ga) * limit(b, gb));
    }
    let (oa, ca, _) = canonical(a);
    let (ob, cb, _) = canonical(b);
    if ga + gb == 0.0 && oa == 0.0 && ob == 0.0 {
        return Ok(ca * cb);
    }
    Err(Error::Precondition(format!("u(x)v(x) has no finite limit towards {side}")))
}
