//! End-to-end acceptance checks. Each check prints one PASS or FAIL line
//! with its measured values and runtime; the process fails if any check
//! misses its tolerance or time budget.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use uvstat::asymptotics::{admissibility, asymptotic_variance, brownian_bridge_cov, hoeffding_variance, rate_comparison, sample_limit};
use uvstat::bv::{integration_by_parts, jordan_decompose, measure_of, GridFunction, SignedMeasure, Tail};
use uvstat::datagen::{MixingKind, MixingProfile};
use uvstat::empirical::DistributionModel;
use uvstat::harness::stats::variance;
use uvstat::harness::{csv, run_clt_experiment, run_smoothed_experiment, run_uv_equivalence, to_json, CltRun, ExperimentConfig};
use uvstat::kernels::{gini_kernel, project, variance_kernel, Kernel};
use uvstat::vstat::{u_statistic, u_statistic_generic, v_statistic_edf, v_statistic_generic, Algorithm};
use uvstat::Error;

type Outcome = Result<String, String>;
type Check<'a> = (&'static str, u64, Box<dyn Fn() -> Outcome + 'a>);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fail(e: Error) -> String {
    format!("error: {e}")
}

fn uniform() -> DistributionModel {
    DistributionModel::uniform()
}

fn normal() -> DistributionModel {
    DistributionModel::standard_normal()
}

fn exponential() -> DistributionModel {
    DistributionModel::Exponential { rate: 1.0 }
}

fn pairs() -> [(&'static str, Kernel, DistributionModel); 3] {
    [("gini/uniform", gini_kernel(), uniform()), ("gini/exponential", gini_kernel(), exponential()), ("variance/normal", variance_kernel(), normal())]
}

/// Random grid function on `[-a, b]` with jumps, kinks and power tails.
/// `growth` puts a polynomially growing tail on the right.
fn random_bv(rng: &mut ChaCha8Rng, growth: Option<f64>) -> GridFunction {
    let m = rng.random_range(3..30);
    let mut grid: Vec<f64> = (0..m).map(|_| rng.random_range(-4.0..4.0)).collect();
    grid.push(-rng.random_range(0.5..4.0));
    grid.push(rng.random_range(0.5..4.0));
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
    let n = grid.len();
    let values: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let left_limits: Vec<f64> =
        values.iter().map(|&v| if rng.random_bool(0.3) { rng.random_range(-2.0..2.0) } else { v }).collect();
    let left = Tail::matching(grid[0], left_limits[0], rng.random_range(-1.0..1.0), -rng.random_range(0.5..3.0));
    let right = match growth {
        Some(e) => Tail::matching(grid[n - 1], values[n - 1], 0.0, e),
        None => Tail::matching(grid[n - 1], values[n - 1], rng.random_range(-1.0..1.0), -rng.random_range(0.5..3.0)),
    };
    GridFunction::new(grid, values, left_limits, left, right).unwrap()
}

fn integration_by_parts_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut tested, mut skipped, mut worst) = (0, 0, 0.0f64);
    while tested < 1000 {
        let (u, v) = if rng.random_bool(0.5) {
            (random_bv(&mut rng, None), random_bv(&mut rng, None))
        } else {
            // u grows like (1+x)^e, v decays faster than (1+x)^{-e}
            let e = rng.random_range(0.1..1.0);
            let decay = -e - rng.random_range(0.2..2.0);
            (random_bv(&mut rng, Some(e)), random_bv(&mut rng, Some(decay)))
        };
        match integration_by_parts(&u, &v) {
            Ok((lhs, rhs)) => {
                worst = worst.max((lhs - rhs).abs());
                tested += 1;
            }
            Err(Error::Precondition(_)) => skipped += 1,
            Err(e) => return Err(fail(e)),
        }
    }
    check(worst < 1e-10, format!("{tested} pairs ({skipped} rejected by preconditions), max |lhs - rhs| = {worst:.2e}"))
}

fn intervals(psi: &GridFunction, rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
    let g = psi.grid();
    let mut out: Vec<(f64, f64)> = g.windows(2).map(|w| (w[0], w[1])).collect();
    let (lo, hi) = psi.span();
    out.push((lo - 10.0, lo));
    out.push((hi, hi + 10.0));
    for _ in 0..20 {
        let a = rng.random_range(lo - 3.0..hi + 3.0);
        let b = rng.random_range(lo - 3.0..hi + 3.0);
        out.push((a.min(b), a.max(b)));
    }
    out
}

fn jordan_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst = 0.0f64;
    let mass = |m: &SignedMeasure, (a, b): (f64, f64)| m.mass(a, b);
    for _ in 0..200 {
        let psi = random_bv(&mut rng, None);
        let (lo, hi) = psi.span();
        let ivs = intervals(&psi, &mut rng);
        let mut reference: Option<Vec<(f64, f64)>> = None;
        for _ in 0..5 {
            let c = rng.random_range(lo..=hi);
            let (p, m) = jordan_decompose(&psi, c).map_err(fail)?;
            let (dp, dm) = (measure_of(&p).map_err(fail)?, measure_of(&m).map_err(fail)?);
            let masses: Vec<(f64, f64)> = ivs.iter().map(|&iv| (mass(&dp, iv), mass(&dm, iv))).collect();
            match &reference {
                None => reference = Some(masses),
                Some(r) => {
                    for (a, b) in r.iter().zip(&masses) {
                        worst = worst.max((a.0 - b.0).abs() / (1.0 + a.0.abs())).max((a.1 - b.1).abs() / (1.0 + a.1.abs()));
                    }
                }
            }
        }
    }
    check(worst < 1e-12, format!("200 functions x 5 centres, max interval discrepancy = {worst:.2e}"))
}

fn projection_closed_forms() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, kernel, f) in [
        ("gini/uniform", gini_kernel(), uniform()),
        ("gini/normal", gini_kernel(), normal()),
        ("variance/uniform", variance_kernel(), uniform()),
        ("variance/normal", variance_kernel(), normal()),
    ] {
        let p = project(&kernel, &f).map_err(fail)?;
        let mean = f.mean().unwrap();
        let want = |x: f64| if kernel.name == "gini" { 2.0 * f.cdf(x) - 1.0 } else { x - mean };
        let err = p
            .g1
            .grid()
            .iter()
            .map(|&x| (p.dg1.density_at(x) - want(x)).abs().max((p.dg2.density_at(x) - want(x)).abs()))
            .fold(0.0, f64::max);
        ok &= err < 1e-8;
        lines.push(format!("{name} {err:.1e}"));
    }
    check(ok, format!("sup density error: {}", lines.join(", ")))
}

fn variance_consistency() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, kernel, f) in pairs() {
        let p = project(&kernel, &f).map_err(fail)?;
        let quad = asymptotic_variance(&p, &brownian_bridge_cov(&f), None).map_err(fail)?.sigma2;
        let oracle = hoeffding_variance(&kernel, &f).map_err(fail)?;
        let rel = (quad - oracle).abs() / oracle.abs();
        ok &= rel < 1e-6;
        if name == "variance/normal" {
            ok &= (quad - 2.0).abs() < 2e-6 && (oracle - 2.0).abs() < 2e-6;
        }
        lines.push(format!("{name} 2D {quad:.9} vs 1D {oracle:.9} (rel {rel:.1e})"));
    }
    check(ok, lines.join("; "))
}

fn limit_sampler() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, kernel, f) in pairs() {
        let p = project(&kernel, &f).map_err(fail)?;
        let cov = brownian_bridge_cov(&f);
        let sigma2 = asymptotic_variance(&p, &cov, None).map_err(fail)?.sigma2;
        let draws = sample_limit(&p, &cov, None, 303, 100_000).map_err(fail)?;
        let rel = variance(&draws) / sigma2 - 1.0;
        ok &= rel.abs() < 0.02;
        lines.push(format!("{name} {:+.2}%", 100.0 * rel));
    }
    check(ok, format!("draw variance vs sigma^2: {}", lines.join(", ")))
}

fn config(kernel: &str, marginal: &str, lambda: f64, n: &[usize], r: usize, extra: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml(&format!(
        "n = {n:?}\nreplications = {r}\nlambda = {lambda}\nseed = 20240601\n{extra}\n[kernel]\nname = \"{kernel}\"\n\n[marginal]\nname = \"{marginal}\"\n"
    ))
    .unwrap()
}

fn clt_bands(run: &CltRun, ratio_band: f64, ks_max: f64) -> (bool, String) {
    let s = &run.report.per_n[0];
    let ok = (s.variance_ratio - 1.0).abs() <= ratio_band && s.ks_distance < ks_max;
    (ok, format!("n = {} R = {}: variance ratio {:.4}, KS {:.4}", s.n, s.replications, s.variance_ratio, s.ks_distance))
}

fn clt_iid(configs: &[(&str, &ExperimentConfig)]) -> Outcome {
    let mut ok = true;
    let mut lines = Vec::new();
    for (name, cfg) in configs {
        let run = run_clt_experiment(cfg).map_err(fail)?;
        let (pass, detail) = clt_bands(&run, 0.10, 0.025);
        ok &= pass;
        lines.push(format!("{name} {detail}"));
    }
    check(ok, lines.join("; "))
}

fn clt_dependent() -> Outcome {
    let extra = "[process]\nkind = \"gaussian-copula-ar1\"\nphi = 0.5\n\n[gamma]\nmode = \"analytic\"\nlags = 50\nwindow = \"rectangular\"\n";
    let run = run_clt_experiment(&config("variance", "normal", 2.5, &[5000], 3000, extra)).map_err(fail)?;
    let (ok, detail) = clt_bands(&run, 0.15, 0.04);
    check(ok, format!("{detail}, sigma^2 = {:.6}", run.report.variance.sigma2))
}

fn uv_equivalence() -> Outcome {
    let (report, _) = run_uv_equivalence(&config("gini", "uniform", 1.5, &[500, 1000, 2000, 4000, 8000], 400, "")).map_err(fail)?;
    let residual = report.per_n.iter().map(|s| s.max_identity_residual).fold(0.0, f64::max);
    let ok = (report.decay_slope + 0.5).abs() <= 0.1 && residual < 1e-10;
    check(ok, format!("decay slope {:.4}, max identity residual {residual:.1e}", report.decay_slope))
}

fn linear_part() -> Outcome {
    let run = run_clt_experiment(&config("gini", "uniform", 1.5, &[2000], 500, "")).map_err(fail)?;
    let c = run.report.per_n[0].linear_part_correlation;
    check(c > 0.99, format!("correlation {c:.5}"))
}

fn smoothed(reference: &ExperimentConfig) -> Outcome {
    let schedule = |rule: &str| format!("[estimator]\nkind = \"smoothed\"\nepsilon = {rule}\n");
    let base = |extra: &str| {
        let mut c = config("gini", "uniform", 1.5, &reference.n, reference.replications, &schedule(extra));
        c.seed = reference.seed;
        c
    };
    let run = run_smoothed_experiment(&base("{ rule = \"power\", scale = 1.0, exponent = -2.0 }")).map_err(fail)?;
    let (ok, detail) = clt_bands(&run, 0.10, 0.025);
    let gap = run.report.per_n[0].smoothing_gap.map(|q| q.max).unwrap_or(f64::NAN);
    let zero = run_smoothed_experiment(&base("{ rule = \"fixed\", value = 0.0 }")).map_err(fail)?;
    let plain = run_clt_experiment(reference).map_err(fail)?;
    let identical = to_json(&zero.report).map_err(fail)? == to_json(&plain.report).map_err(fail)? && csv(&zero.rows) == csv(&plain.rows);
    check(ok && gap < 1e-3 && identical, format!("{detail}, max sqrt(n) smoothing gap {gap:.1e}, zero bandwidth identical: {identical}"))
}

fn admissibility_arithmetic() -> Outcome {
    let mut worst_margin = f64::INFINITY;
    let mut points = 0;
    let mut g = 4.0;
    while g < 50.0 {
        g += 0.01;
        let c = rate_comparison(g);
        let direct = (3.0 * g - 1.0) / (2.0 * g - 8.0) - g / (g - 4.0);
        worst_margin = worst_margin.min(direct.min(c.classical - c.weighted));
        points += 1;
    }
    let beta = MixingProfile::geometric(MixingKind::Beta);
    let at = admissibility(&beta, 4.0, 2.0);
    let above = admissibility(&beta, 4.0 + 1e-9, 2.0);
    let ok = worst_margin > 0.0 && !at.admissible && above.admissible;
    check(
        ok,
        format!(
            "{points} grid points, min margin {worst_margin:.3e}; beta gamma = 4 admissible: {}, gamma = 4 + 1e-9 admissible: {}",
            at.admissible, above.admissible
        ),
    )
}

fn fast_paths() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst = 0.0f64;
    let (gini, var) = (gini_kernel(), variance_kernel());
    for i in 0..100 {
        let n = if i < 5 { 2000 } else { rng.random_range(2..=2000) };
        let f = [uniform(), normal(), exponential()][i % 3].clone();
        let sample: Vec<f64> = (0..n).map(|_| f.quantile(rng.random_range(1e-9..1.0 - 1e-9))).collect();
        for k in [&gini, &var] {
            let fast = v_statistic_edf(k, &sample).map_err(fail)?;
            let fast_u = u_statistic(k, &sample).map_err(fail)?;
            if !matches!(fast.algorithm, Algorithm::FastSorted | Algorithm::MomentForm) {
                return Err(format!("kernel {} did not take a fast path", k.name));
            }
            let slow = v_statistic_generic(k, &sample).map_err(fail)?.value;
            let slow_u = u_statistic_generic(k, &sample).map_err(fail)?.value;
            worst = worst.max((fast.value - slow).abs() / slow.abs()).max((fast_u.value - slow_u).abs() / slow_u.abs());
        }
    }
    check(worst < 1e-10, format!("100 samples, max relative difference {worst:.1e}"))
}

fn main() {
    let gini_iid = config("gini", "uniform", 1.5, &[2000], 5000, "");
    let variance_iid = config("variance", "normal", 2.5, &[2000], 5000, "");
    let checks: Vec<Check> = vec![
        ("integration by parts", 10, Box::new(integration_by_parts_identity)),
        ("jordan centre invariance", 10, Box::new(jordan_invariance)),
        ("projection closed forms", 5, Box::new(projection_closed_forms)),
        ("asymptotic variance, iid", 30, Box::new(variance_consistency)),
        ("limit functional sampler", 60, Box::new(limit_sampler)),
        // five minutes for each of the two experiments
        ("clt iid", 600, Box::new(|| clt_iid(&[("gini/uniform", &gini_iid), ("variance/normal", &variance_iid)]))),
        ("clt dependent ar1(0.5)", 600, Box::new(clt_dependent)),
        ("u/v equivalence", 120, Box::new(uv_equivalence)),
        ("hoeffding linear part", 60, Box::new(linear_part)),
        ("smoothed plug-in", 300, Box::new(|| smoothed(&gini_iid))),
        ("admissibility arithmetic", 1, Box::new(admissibility_arithmetic)),
        ("fast-path equivalence", 30, Box::new(fast_paths)),
    ];
    let mut failed = 0;
    for (name, budget, run) in &checks {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(*budget);
        let (ok, detail) = match outcome {
            Ok(d) => (in_time, d),
            Err(d) => (false, d),
        };
        let timing = format!("{:.1}s of {budget}s{}", elapsed.as_secs_f64(), if in_time { "" } else { ", over budget" });
        println!("{} {name}: {detail} [{timing}]", if ok { "PASS" } else { "FAIL" });
        failed += usize::from(!ok);
    }
    println!("acceptance: {} of {} checks passed", checks.len() - failed, checks.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
