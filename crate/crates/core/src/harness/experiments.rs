use rayon::prelude::*;

use super::config::{EstimatorSpec, ExperimentConfig, GammaSource};
use super::report::*;
use super::stats::{correlation, ks_normal, log_log_slope, mean, quantiles, variance, KOLMOGOROV_MEDIAN};
use crate::asymptotics::{
    admissibility, asymptotic_variance, brownian_bridge_cov, longrun_cov, longrun_cov_from_path, AdmissibilityReport,
    CovarianceModel, VarianceReport,
};
use crate::datagen::{declared_profile, generate_replicate, MixingKind};
use crate::empirical::{
    bandwidth_admissible, gamma_spot_check, lipschitz_check, weighted_empirical_process, EmpiricalCdf, LipschitzStatus,
    SmoothedCdf, BANDWIDTH_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::kernels::{check_assumptions, project, AssumptionReport, Kernel, Projection};
use crate::vstat::{hoeffding_linear_part_with, u_statistic, uv_gap, v_statistic_edf, v_statistic_plugin, v_statistic_smoothed, PluginInput};

/// Stream of the calibration path in path-estimated covariance mode.
const CALIBRATION_STREAM: u64 = u64::MAX;
/// Replicates further than this many `σ` from the mean are flagged.
const OUTLIER_SIGMAS: f64 = 6.0;

/// Product of a CLT-type experiment: the summary and the replicate rows.
#[derive(Debug, Clone)]
pub struct CltRun {
    pub report: ExperimentReport,
    pub rows: Vec<Row>,
}

struct Context {
    kernel: Kernel,
    proj: Projection,
    u_f: f64,
    sigma2: VarianceReport,
    assumptions: AssumptionReport,
    admissibility: Vec<AdmissibilityReport>,
}

fn hypothesis_failures(report: &AssumptionReport) -> Option<String> {
    let f = report.failures();
    (!f.is_empty()).then(|| {
        let names: Vec<String> = f.iter().map(|e| format!("{} ({})", e.id, e.condition)).collect();
        format!("kernel {} under {}: {}", report.kernel, report.distribution, names.join("; "))
    })
}

/// Admissibility of every declared dependence regime; a dependent process
/// needs at least one admissible regime.
fn admissibility_reports(cfg: &ExperimentConfig, lambda_prime: f64) -> Result<Vec<AdmissibilityReport>> {
    let process = cfg.process();
    let gamma = cfg.marginal.gamma_moment();
    let reports: Vec<AdmissibilityReport> = declared_profile(&process).iter().map(|p| admissibility(p, gamma, lambda_prime)).collect();
    if !process.is_independent() && !reports.iter().any(|r| r.admissible && r.profile.kind != MixingKind::None) {
        return Err(Error::Hypothesis(format!(
            "no declared dependence regime of {} is admissible for γ = {gamma}, λ′ = {lambda_prime}",
            process.label()
        )));
    }
    Ok(reports)
}

fn covariance(cfg: &ExperimentConfig) -> Result<CovarianceModel> {
    let process = cfg.process();
    if process.is_independent() {
        return Ok(brownian_bridge_cov(&cfg.marginal));
    }
    let window = cfg.gamma.window();
    match cfg.gamma.mode {
        GammaSource::Analytic => longrun_cov(&process, cfg.gamma.lags, window),
        GammaSource::PathEstimated => {
            let path = generate_replicate(&process, cfg.gamma.path_length, cfg.seed, CALIBRATION_STREAM)?;
            longrun_cov_from_path(&cfg.marginal, path, cfg.gamma.lags, window)
        }
    }
}

/// Every hypothesis check, then `U(F)`, the projections and `σ²`.
fn prepare(cfg: &ExperimentConfig) -> Result<Context> {
    let kernel = cfg.kernel()?;
    let lp = kernel.lambda_prime;
    let assumptions = check_assumptions(&kernel, &cfg.marginal, cfg.lambda, lp);
    if let Some(msg) = hypothesis_failures(&assumptions) {
        return Err(Error::Hypothesis(msg));
    }
    let admissibility = admissibility_reports(cfg, lp)?;
    let proj = project(&kernel, &cfg.marginal)?;
    let u_f = v_statistic_plugin(&kernel, PluginInput::Model(&cfg.marginal))?.value;
    let sigma2 = asymptotic_variance(&proj, &covariance(cfg)?, None)?;
    if !(sigma2.sigma2 > 0.0) {
        return Err(Error::Numeric(format!("σ² = {} leaves nothing to standardize by", sigma2.sigma2)));
    }
    Ok(Context { kernel, proj, u_f, sigma2, assumptions, admissibility })
}

struct Replicate {
    root_n_error: f64,
    weighted_norm: f64,
    uv_gap: f64,
    linear_part: f64,
    smoothing_gap: Option<f64>,
}

fn replicate(cfg: &ExperimentConfig, ctx: &Context, n_index: usize, n: usize, r: usize) -> Result<Replicate> {
    let sample = generate_replicate(&cfg.process(), n, cfg.seed, stream(n_index, r))?;
    let root = (n as f64).sqrt();
    let (estimate, smoothing_gap) = match cfg.estimator {
        EstimatorSpec::Edf => (v_statistic_edf(&ctx.kernel, &sample)?.value, None),
        EstimatorSpec::UStatistic => (u_statistic(&ctx.kernel, &sample)?.value, None),
        EstimatorSpec::Smoothed { epsilon } => {
            let edf = EmpiricalCdf::new(&sample)?;
            let s = v_statistic_smoothed(&ctx.kernel, &SmoothedCdf::new(edf, epsilon.at(n))?)?.value;
            let v = v_statistic_edf(&ctx.kernel, &sample)?.value;
            (s, Some(root * (s - v).abs()))
        }
    };
    let (_, norm) = weighted_empirical_process(&sample, &cfg.marginal, cfg.lambda)?;
    Ok(Replicate {
        root_n_error: root * (estimate - ctx.u_f),
        weighted_norm: norm.value,
        uv_gap: uv_gap(&ctx.kernel, &sample)?.gap.abs(),
        linear_part: hoeffding_linear_part_with(&ctx.proj, &cfg.marginal, &sample)?,
        smoothing_gap,
    })
}

fn estimator_label(e: &EstimatorSpec) -> String {
    match e {
        EstimatorSpec::Edf => "v-plugin-edf".into(),
        EstimatorSpec::UStatistic => "u-statistic".into(),
        EstimatorSpec::Smoothed { .. } => "v-plugin-smoothed".into(),
    }
}

fn run_clt_inner(cfg: &ExperimentConfig, extra: Option<(crate::empirical::LipschitzCheck, crate::empirical::GammaCheck)>) -> Result<CltRun> {
    let ctx = prepare(cfg)?;
    let sigma = ctx.sigma2.sigma2.sqrt();
    let mut per_n = Vec::new();
    let mut rows = Vec::new();
    for (k, &n) in cfg.n.iter().enumerate() {
        let reps: Vec<Replicate> =
            (0..cfg.replications).into_par_iter().map(|r| replicate(cfg, &ctx, k, n, r)).collect::<Result<_>>()?;
        let vals: Vec<f64> = reps.iter().map(|r| r.root_n_error).collect();
        let lin: Vec<f64> = reps.iter().map(|r| r.linear_part).collect();
        let (m, v) = (mean(&vals), variance(&vals));
        let centred: Vec<f64> = vals.iter().map(|x| (x - m) / sigma).collect();
        let uncentred: Vec<f64> = vals.iter().map(|x| x / sigma).collect();
        let selfn: Vec<f64> = vals.iter().map(|x| (x - m) / v.sqrt()).collect();
        let outliers = centred.iter().enumerate().filter(|(_, z)| z.abs() > OUTLIER_SIGMAS).map(|(i, _)| i).collect();
        let smoothing: Option<Vec<f64>> = reps.iter().map(|r| r.smoothing_gap).collect();
        let bandwidth = match cfg.estimator {
            EstimatorSpec::Smoothed { epsilon } => {
                Some(bandwidth_admissible(n, epsilon.at(n), cfg.marginal.gamma_moment(), cfg.lambda, BANDWIDTH_THRESHOLD)?)
            }
            _ => None,
        };
        per_n.push(CltSummary {
            n,
            replications: cfg.replications,
            mean: m,
            variance: v,
            sigma2: ctx.sigma2.sigma2,
            variance_ratio: v / ctx.sigma2.sigma2,
            ks_distance: ks_normal(&centred),
            ks_distance_uncentred: ks_normal(&uncentred),
            ks_self_normalized: ks_normal(&selfn),
            weighted_norm: quantiles(&reps.iter().map(|r| r.weighted_norm).collect::<Vec<_>>()),
            uv_gap: quantiles(&reps.iter().map(|r| r.uv_gap).collect::<Vec<_>>()),
            linear_part_correlation: correlation(&vals, &lin),
            smoothing_gap: smoothing.as_deref().map(quantiles),
            bandwidth,
            outliers,
        });
        for (i, r) in reps.iter().enumerate() {
            let row = |statistic, value| Row { replicate: i, n, statistic, value };
            rows.push(row("root_n_error", r.root_n_error));
            rows.push(row("linear_part", r.linear_part));
            rows.push(row("uv_gap", r.uv_gap));
            rows.push(row("weighted_norm", r.weighted_norm));
            if let Some(g) = r.smoothing_gap {
                rows.push(row("smoothing_gap", g));
            }
        }
    }
    let mut warnings = Vec::new();
    let (lipschitz, gamma_check) = match extra {
        Some((l, g)) => {
            if l.status == LipschitzStatus::Unverified {
                warnings.push(format!("Lipschitz continuity of {} is unverified", cfg.marginal.label()));
            }
            warnings.extend(g.warning.clone());
            (Some(l), Some(g))
        }
        None => (None, None),
    };
    let report = ExperimentReport {
        experiment: "clt".into(),
        kernel: ctx.kernel.name.clone(),
        process: cfg.process().label(),
        estimator: estimator_label(&cfg.estimator),
        lambda: cfg.lambda,
        lambda_prime: ctx.kernel.lambda_prime,
        u_f: ctx.u_f,
        variance: ctx.sigma2,
        assumptions: ctx.assumptions,
        admissibility: ctx.admissibility,
        lipschitz,
        gamma_check,
        per_n,
        warnings,
        provenance: Provenance::of(cfg),
    };
    Ok(CltRun { report, rows })
}

/// Replicates `√n(U(F_n) − U(F))` and compares them with `N(0, σ²)`.
pub fn run_clt_experiment(cfg: &ExperimentConfig) -> Result<CltRun> {
    let cfg = cfg.normalized();
    cfg.validate()?;
    run_clt_inner(&cfg, None)
}

/// The CLT experiment with the heat-smoothed plug-in. The bandwidth
/// schedule is checked for every `n` before any simulation; a zero
/// schedule is the plain EDF experiment.
pub fn run_smoothed_experiment(cfg: &ExperimentConfig) -> Result<CltRun> {
    let cfg = cfg.normalized();
    cfg.validate()?;
    let EstimatorSpec::Smoothed { epsilon } = cfg.estimator else {
        return run_clt_inner(&cfg, None);
    };
    let gamma = cfg.marginal.gamma_moment();
    for &n in &cfg.n {
        let c = bandwidth_admissible(n, epsilon.at(n), gamma, cfg.lambda, BANDWIDTH_THRESHOLD)?;
        if !c.passed {
            return Err(Error::Hypothesis(format!(
                "bandwidth ε = {} at n = {n} gives √n·ε^((γ−λ)/(2γ)) = {:.4} above the threshold {BANDWIDTH_THRESHOLD}",
                c.epsilon, c.value
            )));
        }
    }
    let lipschitz = lipschitz_check(&cfg.marginal);
    let gamma_check = gamma_spot_check(&cfg.marginal, cfg.seed)?;
    run_clt_inner(&cfg, Some((lipschitz, gamma_check)))
}

/// Replicates `√n(U_n − U(F̂_n)) = S₁ − S₂` over the `n` schedule.
pub fn run_uv_equivalence(cfg: &ExperimentConfig) -> Result<(UvReport, Vec<Row>)> {
    cfg.validate()?;
    let kernel = cfg.kernel()?;
    let process = cfg.process();
    let mut per_n = Vec::new();
    let mut rows = Vec::new();
    for (k, &n) in cfg.n.iter().enumerate() {
        let reps: Vec<(crate::vstat::UvGap, f64, f64)> = (0..cfg.replications)
            .into_par_iter()
            .map(|r| {
                let sample = generate_replicate(&process, n, cfg.seed, stream(k, r))?;
                let g = uv_gap(&kernel, &sample)?;
                Ok((g, u_statistic(&kernel, &sample)?.value, v_statistic_edf(&kernel, &sample)?.value))
            })
            .collect::<Result<_>>()?;
        let abs: Vec<f64> = reps.iter().map(|r| r.0.gap.abs()).collect();
        let s1: Vec<f64> = reps.iter().map(|r| r.0.s1).collect();
        let s2: Vec<f64> = reps.iter().map(|r| r.0.s2).collect();
        let u: Vec<f64> = reps.iter().map(|r| r.1).collect();
        let v: Vec<f64> = reps.iter().map(|r| r.2).collect();
        per_n.push(UvSummary {
            n,
            abs_gap: quantiles(&abs),
            median_s1: quantiles(&s1).q50,
            median_s2: quantiles(&s2).q50,
            max_identity_residual: reps.iter().map(|r| r.0.residual.abs()).fold(0.0, f64::max),
            uv_correlation: correlation(&u, &v),
        });
        for (i, r) in reps.iter().enumerate() {
            rows.push(Row { replicate: i, n, statistic: "uv_gap", value: r.0.gap });
            rows.push(Row { replicate: i, n, statistic: "s1", value: r.0.s1 });
            rows.push(Row { replicate: i, n, statistic: "s2", value: r.0.s2 });
        }
    }
    let ns: Vec<f64> = per_n.iter().map(|s| s.n as f64).collect();
    let med: Vec<f64> = per_n.iter().map(|s| s.abs_gap.q50).collect();
    let decay_slope = if ns.len() >= 2 { log_log_slope(&ns, &med) } else { f64::NAN };
    let report = UvReport {
        experiment: "uv-gap".into(),
        kernel: kernel.name.clone(),
        process: process.label(),
        per_n,
        decay_slope,
        provenance: Provenance::of(cfg),
    };
    Ok((report, rows))
}

/// Replicates `‖√n(F̂_n − F)‖_λ` and reports how its quantiles move with
/// `n`. A diagnostic: no hypothesis check stops it.
pub fn run_weighted_process_experiment(cfg: &ExperimentConfig) -> Result<(WepReport, Vec<Row>)> {
    cfg.validate()?;
    let process = cfg.process();
    let mut per_n = Vec::new();
    let mut rows = Vec::new();
    for (k, &n) in cfg.n.iter().enumerate() {
        let norms: Vec<(f64, bool)> = (0..cfg.replications)
            .into_par_iter()
            .map(|r| {
                let sample = generate_replicate(&process, n, cfg.seed, stream(k, r))?;
                let (_, norm) = weighted_empirical_process(&sample, &cfg.marginal, cfg.lambda)?;
                Ok((norm.value, norm.divergent))
            })
            .collect::<Result<_>>()?;
        let values: Vec<f64> = norms.iter().map(|v| v.0).collect();
        per_n.push(WepSummary { n, norm: quantiles(&values), divergent_norms: norms.iter().filter(|v| v.1).count() });
        rows.extend(values.iter().enumerate().map(|(i, &value)| Row { replicate: i, n, statistic: "weighted_norm", value }));
    }
    let ns: Vec<f64> = per_n.iter().map(|s| s.n as f64).collect();
    let slope = |q: &dyn Fn(&WepSummary) -> f64| {
        if ns.len() >= 2 {
            log_log_slope(&ns, &per_n.iter().map(q).collect::<Vec<_>>())
        } else {
            f64::NAN
        }
    };
    let gamma = cfg.marginal.gamma_moment();
    let report = WepReport {
        experiment: "wep".into(),
        process: process.label(),
        lambda: cfg.lambda,
        gamma,
        divergence_regime: gamma < 2.0 * cfg.lambda,
        median_slope: slope(&|s| s.norm.q50),
        q90_slope: slope(&|s| s.norm.q90),
        per_n,
        kolmogorov_median: (cfg.lambda == 0.0).then_some(KOLMOGOROV_MEDIAN),
        provenance: Provenance::of(cfg),
    };
    Ok((report, rows))
}
