use super::grid::GridFunction;
use super::measure::{Measure, Quadratic, SignedMeasure};
use super::tail::Tail;
use crate::error::{invalid, Result};

/// Jordan decomposition `ψ = ψ(c) + ψ⁺ − ψ⁻` centred at `c`.
///
/// `ψ⁺` accumulates the positive and `ψ⁻` the negative variation, segment
/// by segment and jump by jump; both vanish at `c`.
pub fn jordan_decompose(psi: &GridFunction, c: f64) -> Result<(GridFunction, GridFunction)> {
    let (lo, hi) = psi.span();
    if !c.is_finite() || c < lo || c > hi {
        return Err(invalid(format!("centre {c} outside the grid span [{lo}, {hi}]")));
    }
    let n = psi.len();
    let v = psi.values();
    let l = psi.left_limits();
    let mut pv = vec![0.0; n];
    let mut pl = vec![0.0; n];
    let mut mv = vec![0.0; n];
    let mut ml = vec![0.0; n];
    for i in 0..n {
        if i > 0 {
            let d = l[i] - v[i - 1];
            pl[i] = pv[i - 1] + d.max(0.0);
            ml[i] = mv[i - 1] + (-d).max(0.0);
        }
        let j = v[i] - l[i];
        pv[i] = pl[i] + j.max(0.0);
        mv[i] = ml[i] + (-j).max(0.0);
    }

    // monotone tails go entirely into one of the two parts
    let tl = *psi.tail_left();
    let tr = *psi.tail_right();
    let left_up = tl.derivative(false).coef >= 0.0;
    let right_up = tr.derivative(true).coef >= 0.0;
    let shift = |t: &Tail, s: f64, base: f64, at: f64| {
        let mut u = t.scale(s);
        u.offset += base - u.value(at);
        u
    };
    let (x0, xl) = psi.span();
    let (p_tl, m_tl) = if tl.is_constant() {
        (Tail::constant(0.0), Tail::constant(0.0))
    } else if left_up {
        (shift(&tl, 1.0, 0.0, x0), Tail::constant(0.0))
    } else {
        (Tail::constant(0.0), shift(&tl, -1.0, 0.0, x0))
    };
    let (p_tr, m_tr) = if tr.is_constant() {
        (Tail::constant(pv[n - 1]), Tail::constant(mv[n - 1]))
    } else if right_up {
        (shift(&tr, 1.0, pv[n - 1], xl), Tail::constant(mv[n - 1]))
    } else {
        (Tail::constant(pv[n - 1]), shift(&tr, -1.0, mv[n - 1], xl))
    };

    let grid = psi.grid().to_vec();
    let plus = GridFunction::new(grid.clone(), pv, pl, p_tl, p_tr)?;
    let minus = GridFunction::new(grid, mv, ml, m_tl, m_tr)?;
    let (pc, mc) = (plus.eval(c), minus.eval(c));
    Ok((recentre(&plus, pc)?, recentre(&minus, mc)?))
}

fn recentre(f: &GridFunction, by: f64) -> Result<GridFunction> {
    let shift = |t: &Tail| Tail { offset: t.offset - by, ..*t };
    GridFunction::new(
        f.grid().to_vec(),
        f.values().iter().map(|x| x - by).collect(),
        f.left_limits().iter().map(|x| x - by).collect(),
        shift(f.tail_left()),
        shift(f.tail_right()),
    )
}

/// Measure `dψ` of a nondecreasing grid function: atoms at the jumps,
/// segment slopes as densities, tail derivatives beyond the grid.
pub fn measure_of(psi: &GridFunction) -> Result<SignedMeasure> {
    let scale = psi.values().iter().chain(psi.left_limits()).fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-12 * (1.0 + scale);
    if !psi.is_nondecreasing(tol) {
        return Err(invalid("measure_of needs a nondecreasing function"));
    }
    Ok(SignedMeasure::from_positive(positive_measure(psi)?))
}

fn positive_measure(psi: &GridFunction) -> Result<Measure> {
    let n = psi.len();
    let g = psi.grid();
    let atoms: Vec<f64> = (0..n).map(|i| psi.jump(i).max(0.0)).collect();
    let density: Vec<Quadratic> = (0..n - 1)
        .map(|i| {
            let slope = (psi.left_limits()[i + 1] - psi.values()[i]) / (g[i + 1] - g[i]);
            Quadratic::constant(slope.max(0.0))
        })
        .collect();
    let clamp = |t: Tail| if t.coef < 0.0 { Tail::ZERO } else { t };
    Measure::new(
        g.to_vec(),
        atoms,
        density,
        clamp(psi.tail_left().derivative(false)),
        clamp(psi.tail_right().derivative(true)),
    )
}

/// The signed measure `dψ = dψ⁺ − dψ⁻` in its minimal decomposition.
pub fn signed_measure_of(psi: &GridFunction) -> Result<SignedMeasure> {
    let (plus, minus) = jordan_decompose(psi, psi.span().0)?;
    Ok(SignedMeasure::from_parts(positive_measure(&plus)?, positive_measure(&minus)?))
}

/// Total variation measure `|dψ| = dψ⁺ + dψ⁻`.
pub fn abs_measure(psi: &GridFunction) -> Result<SignedMeasure> {
    Ok(SignedMeasure::from_positive(signed_measure_of(psi)?.abs()?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abs_shift(x2: f64) -> GridFunction {
        let grid: Vec<f64> = (0..=40).map(|i| -2.0 + 0.1 * i as f64).collect();
        let values: Vec<f64> = grid.iter().map(|&x| f64::abs(x - x2)).collect();
        let (a, b) = (values[0], *values.last().unwrap());
        GridFunction::continuous(grid, values, Tail::constant(a), Tail::constant(b)).unwrap()
    }

    #[test]
    fn identity_has_no_negative_variation() {
        let f = GridFunction::sample(vec![-1.0, -0.5, 0.0, 0.5, 1.0], |x| x).unwrap();
        let (p, m) = jordan_decompose(&f, 0.0).unwrap();
        for &x in f.grid() {
            assert_eq!(p.eval(x), x);
            assert_eq!(m.eval(x), 0.0);
        }
    }

    #[test]
    fn absolute_value_section() {
        let x2 = 0.3;
        let f = abs_shift(x2);
        let (p, m) = jordan_decompose(&f, x2).unwrap();
        for &x in f.grid() {
            let want_p = if x > x2 { x - x2 } else { 0.0 };
            let want_m = if x <= x2 { x - x2 } else { 0.0 };
            assert!((p.eval(x) - want_p).abs() < 1e-12);
            // ψ⁻ is nondecreasing and vanishes at c, so it equals x − x₂ on the left
            assert!((m.eval(x) - want_m).abs() < 1e-12, "x={x}");
        }
        let dp = measure_of(&p).unwrap();
        assert!((dp.density_at(1.0) - 1.0).abs() < 1e-12);
        assert!(dp.density_at(0.0).abs() < 1e-12);
    }

    #[test]
    fn step_measure_is_one_atom() {
        let f = GridFunction::step(vec![0.0], vec![1.0], 0.0).unwrap();
        let m = measure_of(&f).unwrap();
        assert_eq!(m.atoms(), vec![(0.0, 1.0)]);
    }

    #[test]
    fn power_tails_are_carried() {
        // ψ(x) = x on [−1, 1] with linear tails
        let f = GridFunction::new(
            vec![-1.0, 0.0, 1.0],
            vec![-1.0, 0.0, 1.0],
            vec![-1.0, 0.0, 1.0],
            Tail { offset: 1.0, coef: -1.0, exponent: 1.0 },
            Tail { offset: -1.0, coef: 1.0, exponent: 1.0 },
        )
        .unwrap();
        let (p, m) = jordan_decompose(&f, 0.0).unwrap();
        assert!((p.eval(-5.0) + 5.0).abs() < 1e-12);
        assert!((p.eval(7.0) - 7.0).abs() < 1e-12);
        assert_eq!(m.eval(-5.0), 0.0);
        let dm = measure_of(&p).unwrap();
        assert!((dm.mass(-3.0, 4.0) - 7.0).abs() < 1e-12);
    }
}
