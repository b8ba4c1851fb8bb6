use proptest::prelude::*;

use uvstat::bv::{integration_by_parts, jordan_decompose, stieltjes, weighted_norm, GridFunction, SignedMeasure, Tail, WeightedNorm};
use uvstat::datagen::{generate, DependentProcess, ProcessKind};
use uvstat::empirical::{DistributionModel, EmpiricalCdf};
use uvstat::kernels::{gini_kernel, variance_kernel};
use uvstat::vstat::{u_statistic, u_statistic_generic, uv_gap, v_statistic_edf, v_statistic_generic};

fn bv_function() -> impl Strategy<Value = GridFunction> {
    bv_function_with(1.0, None)
}

/// Grid function with random nodes, jumps and tails decaying towards
/// limits of size at most `limits`, like `(1+|x|)^{-decay}` when given.
fn bv_function_with(limits: f64, decay: Option<f64>) -> impl Strategy<Value = GridFunction> {
    (
        prop::collection::vec((-4.0f64..4.0, -2.0f64..2.0, prop::option::weighted(0.3, -2.0f64..2.0)), 2..25),
        (-1.0f64..1.0, 0.5f64..3.0),
        (-1.0f64..1.0, 0.5f64..3.0),
    )
        .prop_map(move |(mut nodes, (ll, le), (rl, re))| {
            let (ll, rl) = (ll * limits, rl * limits);
            let (le, re) = decay.map_or((le, re), |d| (d, d));
            nodes.push((-0.25, 0.0, None));
            nodes.push((0.25, 0.0, None));
            nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
            nodes.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-6);
            let grid: Vec<f64> = nodes.iter().map(|n| n.0).collect();
            let values: Vec<f64> = nodes.iter().map(|n| n.1).collect();
            let left: Vec<f64> = nodes.iter().map(|n| n.2.unwrap_or(n.1)).collect();
            let k = grid.len() - 1;
            let tl = Tail::matching(grid[0], left[0], ll, -le);
            let tr = Tail::matching(grid[k], values[k], rl, -re);
            GridFunction::new(grid, values, left, tl, tr).unwrap()
        })
}

fn sample(max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-50.0f64..50.0, 2..max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn parts_formula_holds(u in bv_function(), v in bv_function()) {
        let (lhs, rhs) = integration_by_parts(&u, &v).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
    }

    #[test]
    fn jordan_parts_reconstruct(psi in bv_function(), t in 0.0f64..1.0) {
        let (lo, hi) = psi.span();
        let c = lo + t * (hi - lo);
        let (p, m) = jordan_decompose(&psi, c).unwrap();
        prop_assert!(p.is_nondecreasing(1e-12) && m.is_nondecreasing(1e-12));
        let base = psi.eval(c);
        for &x in psi.grid() {
            prop_assert!((base + p.eval(x) - m.eval(x) - psi.eval(x)).abs() < 1e-12);
            prop_assert!((base + p.eval_left(x) - m.eval_left(x) - psi.eval_left(x)).abs() < 1e-12);
        }
    }

    #[test]
    // atoms inside [-1/4, 1/4], where every generated function has nodes:
    // sums of tails with different exponents are only approximated
    fn stieltjes_is_linear_in_the_integrand(
        a in bv_function(),
        b in bv_function(),
        s in -3.0f64..3.0,
        pts in prop::collection::vec(-0.25f64..0.25, 1..30),
    ) {
        let mu = EmpiricalCdf::new(&pts).unwrap().to_measure();
        let combined = a.linear_combination(s, &b, 1.0);
        let lhs = stieltjes(&combined, &mu, false).unwrap();
        let rhs = s * stieltjes(&a, &mu, false).unwrap() + stieltjes(&b, &mu, false).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn weighted_norm_is_a_norm(a in bv_function_with(0.0, Some(1.5)), b in bv_function_with(0.0, Some(1.5)), s in -5.0f64..5.0, lambda in -2.0f64..0.5) {
        let w = WeightedNorm::new(lambda);
        let (na, nb) = (weighted_norm(&a, &w), weighted_norm(&b, &w));
        prop_assume!(!na.divergent && !nb.divergent);
        let (na, nb) = (na.value, nb.value);
        let scaled = weighted_norm(&a.scale(s), &w).value;
        prop_assert!((scaled - s.abs() * na).abs() <= 1e-12 * (1.0 + scaled));
        let sum = weighted_norm(&a.linear_combination(1.0, &b, 1.0), &w).value;
        prop_assert!(sum <= na + nb + 1e-12 * (1.0 + na + nb));
    }

    #[test]
    fn edf_is_a_probability_measure(pts in sample(60)) {
        let m: SignedMeasure = EmpiricalCdf::new(&pts).unwrap().to_measure();
        prop_assert!((m.positive.total_mass() - 1.0).abs() < 1e-14);
        prop_assert_eq!(m.negative.total_mass(), 0.0);
    }

    #[test]
    fn fast_paths_equal_definitions(pts in sample(300)) {
        for k in [gini_kernel(), variance_kernel()] {
            let (fast, slow) = (v_statistic_edf(&k, &pts).unwrap().value, v_statistic_generic(&k, &pts).unwrap().value);
            prop_assert!((fast - slow).abs() <= 1e-10 * slow.abs().max(1e-300));
            let (fast, slow) = (u_statistic(&k, &pts).unwrap().value, u_statistic_generic(&k, &pts).unwrap().value);
            prop_assert!((fast - slow).abs() <= 1e-10 * slow.abs().max(1e-300));
        }
    }

    #[test]
    fn estimators_ignore_sample_order(mut pts in sample(200), seed in any::<u64>()) {
        let k = gini_kernel();
        let before = (v_statistic_edf(&k, &pts).unwrap().value, u_statistic(&k, &pts).unwrap().value);
        let n = pts.len();
        let mut state = seed;
        for i in (1..n).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            pts.swap(i, (state >> 33) as usize % (i + 1));
        }
        let after = (v_statistic_edf(&k, &pts).unwrap().value, u_statistic(&k, &pts).unwrap().value);
        prop_assert!((before.0 - after.0).abs() <= 1e-12 * before.0.abs());
        prop_assert!((before.1 - after.1).abs() <= 1e-12 * before.1.abs());
    }

    #[test]
    fn uv_identity(pts in sample(400)) {
        for k in [gini_kernel(), variance_kernel()] {
            let g = uv_gap(&k, &pts).unwrap();
            prop_assert!(g.residual.abs() < 1e-10 * (1.0 + g.s1.abs() + g.s2.abs()));
        }
    }

    #[test]
    fn generated_paths_are_prefixes(phi in -0.9f64..0.9, n in 1usize..200, extra in 1usize..100, seed in any::<u64>()) {
        let p = DependentProcess { kind: ProcessKind::GaussianCopulaAr1 { phi }, marginal: DistributionModel::Exponential { rate: 2.0 } };
        let short = generate(&p, n, seed).unwrap();
        let long = generate(&p, n + extra, seed).unwrap();
        prop_assert_eq!(&long[..n], &short[..]);
        prop_assert!(short.iter().all(|&x| x >= 0.0));
    }
}

/// Two-sample KS statistic.
fn ks2(a: &[f64], b: &[f64]) -> f64 {
    let (ea, eb) = (EmpiricalCdf::new(a).unwrap(), EmpiricalCdf::new(b).unwrap());
    a.iter().chain(b).map(|&x| (ea.eval(x) - eb.eval(x)).abs()).fold(0.0, f64::max)
}

#[test]
fn windows_of_a_path_share_their_pair_law() {
    let p = DependentProcess { kind: ProcessKind::GaussianCopulaAr1 { phi: 0.5 }, marginal: DistributionModel::standard_normal() };
    let x = generate(&p, 40_001, 17).unwrap();
    let half = x.len() / 2;
    let (first, second) = (&x[..half], &x[half..]);
    let lead = |w: &[f64]| w[..w.len() - 1].to_vec();
    let lag = |w: &[f64]| w[1..].to_vec();
    // products catch differences in the joint law, not just the marginals
    let prod = |w: &[f64]| w.windows(2).map(|p| p[0] * p[1]).collect::<Vec<_>>();
    // the critical value at level 1e-3 for two samples of 2e4 is about 0.0195;
    // dependence inflates it, so allow twice that
    for (a, b) in [(lead(first), lead(second)), (lag(first), lag(second)), (prod(first), prod(second))] {
        let d = ks2(&a, &b);
        assert!(d < 0.04, "{d}");
    }
}
