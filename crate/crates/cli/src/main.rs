use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use uvstat::asymptotics::{asymptotic_variance, brownian_bridge_cov, sample_limit, PATH_POINTS};
use uvstat::bv::columnar::{write_grid_function, write_signed_measure};
use uvstat::datagen::{generate, DependentProcess, ProcessKind};
use uvstat::empirical::{read_sample, DistributionModel, EmpiricalCdf, SmoothedCdf};
use uvstat::harness::{
    csv, init_workers_from_env, run_clt_experiment, run_smoothed_experiment, run_uv_equivalence, run_weighted_process_experiment,
    stats, to_json, write_file, ExperimentConfig, Row,
};
use uvstat::kernels::{check_assumptions, project, Kernel, TabulatedKernel};
use uvstat::vstat::{u_statistic, v_statistic_edf, v_statistic_plugin, v_statistic_smoothed, PluginInput};
use uvstat::{Error, Result};

#[derive(Parser)]
#[command(name = "uvstat", version, about = "U- and V-statistics with unbounded kernels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate U(F) from a sample file.
    Estimate(EstimateArgs),
    /// Asymptotic variance of the plug-in estimator under i.i.d. sampling.
    Variance(ModelArgs),
    /// Write a sample from a stationary process, one value per line.
    Simulate(SimulateArgs),
    /// Check the kernel growth and moment hypotheses.
    VerifyAssumptions(AssumptionArgs),
    /// Monte Carlo check of the central limit theorem.
    Clt(ConfigArgs),
    /// Monte Carlo study of the gap between U- and V-statistics.
    UvGap(ConfigArgs),
    /// Monte Carlo study of the weighted empirical process norm.
    Wep(ConfigArgs),
    /// The CLT experiment with the heat-smoothed plug-in.
    Smoothed(ConfigArgs),
    /// Draws from the Gaussian limit of the plug-in estimator.
    LimitSample(LimitArgs),
    /// Projections of the kernel and their measures, in columnar form.
    Project(ProjectArgs),
}

#[derive(Args)]
struct KernelArgs {
    /// Built-in kernel: gini or variance.
    #[arg(long, default_value = "gini", conflicts_with = "kernel_table")]
    kernel: String,
    /// Tabulated kernel file with `x1 x2 value` rows.
    #[arg(long)]
    kernel_table: Option<PathBuf>,
    /// Growth exponent of the kernel; required for tabulated kernels.
    #[arg(long)]
    lambda_prime: Option<f64>,
}

impl KernelArgs {
    fn build(&self) -> Result<Kernel> {
        let mut k = match &self.kernel_table {
            Some(path) => {
                let lp = self.lambda_prime.ok_or_else(|| Error::Config("--kernel-table needs --lambda-prime".into()))?;
                let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "tabulated".into());
                Kernel::tabulated(name, TabulatedKernel::read(path)?, lp)?
            }
            None => Kernel::by_name(&self.kernel)?,
        };
        if let Some(lp) = self.lambda_prime {
            k.lambda_prime = lp;
        }
        Ok(k)
    }
}

#[derive(Args)]
struct ModelArgs {
    #[command(flatten)]
    kernel: KernelArgs,
    /// Distribution as NAME[:key=value,...], e.g. pareto:shape=2.5.
    #[arg(long, default_value = "uniform")]
    marginal: String,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    kernel: KernelArgs,
    /// Sample file, one value per line.
    #[arg(long)]
    sample: PathBuf,
    /// edf, u-statistic or smoothed.
    #[arg(long, default_value = "edf")]
    estimator: String,
    /// Bandwidth of the smoothed estimator.
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value = "uniform")]
    marginal: String,
    /// Process as KIND[:key=value,...]: iid, gaussian-copula-ar1:phi=0.5, ...
    #[arg(long, default_value = "iid")]
    process: String,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AssumptionArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Weight exponent of the norm.
    #[arg(long)]
    lambda: f64,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Report path, overriding the configuration.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Replicate CSV path, overriding the configuration.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct LimitArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 10_000)]
    draws: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Grid points of the discretized Gaussian path.
    #[arg(long, default_value_t = PATH_POINTS)]
    points: usize,
    /// CSV of the draws.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct ProjectArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Which projection: 1 or 2.
    #[arg(long, default_value_t = 1)]
    component: u8,
    /// Write the measure instead of the function.
    #[arg(long)]
    measure: bool,
}

/// `NAME[:k=v,...]` as a TOML table tagged by `tag`.
fn tagged<T: serde::de::DeserializeOwned>(spec: &str, tag: &str) -> Result<T> {
    let (name, params) = spec.split_once(':').unwrap_or((spec, ""));
    let mut text = format!("{tag} = {:?}\n", name.trim());
    for kv in params.split(',').filter(|s| !s.trim().is_empty()) {
        let (k, v) = kv.split_once('=').ok_or_else(|| Error::Config(format!("expected key=value in {spec:?}, got {kv:?}")))?;
        let v = v.trim();
        if v.parse::<f64>().is_err() {
            return Err(Error::Config(format!("parameter {} of {spec:?} is not a number: {v:?}", k.trim())));
        }
        // TOML needs a digit on both sides of the point
        let v = if v.contains(['.', 'e', 'E', 'i', 'n']) || v.starts_with('-') { v.to_string() } else { format!("{v}.0") };
        text.push_str(&format!("{} = {v}\n", k.trim()));
    }
    toml::from_str(&text).map_err(|e| Error::Config(format!("{spec:?}: {}", e.message())))
}

fn marginal(spec: &str) -> Result<DistributionModel> {
    let f: DistributionModel = tagged(spec, "name")?;
    f.validate().map_err(|e| Error::Config(e.to_string()))?;
    Ok(f)
}

fn emit(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => write_file(p, text),
        None => match std::io::stdout().lock().write_all(text.as_bytes()) {
            // a closed pipe (`uvstat ... | head`) is not an error
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
            _ => Ok(()),
        },
    }
}

fn json<T: Serialize>(value: &T) -> Result<()> {
    emit(&to_json(value)?, None)
}

#[derive(Serialize)]
struct VarianceOutput {
    kernel: String,
    distribution: String,
    u_f: f64,
    sigma2: f64,
    variance: uvstat::asymptotics::VarianceReport,
}

#[derive(Serialize)]
struct LimitOutput {
    kernel: String,
    distribution: String,
    draws: usize,
    seed: u64,
    sigma2: f64,
    mean: f64,
    variance: f64,
    quantiles: stats::Quantiles,
}

fn run_experiment(args: &ConfigArgs, kind: &str) -> Result<()> {
    let cfg = ExperimentConfig::read(&args.config)?;
    let start = Instant::now();
    let (report, rows): (String, Vec<Row>) = match kind {
        "clt" => run_clt_experiment(&cfg).and_then(|r| Ok((to_json(&r.report)?, r.rows)))?,
        "smoothed" => run_smoothed_experiment(&cfg).and_then(|r| Ok((to_json(&r.report)?, r.rows)))?,
        "uv-gap" => run_uv_equivalence(&cfg).and_then(|(r, rows)| Ok((to_json(&r)?, rows)))?,
        _ => run_weighted_process_experiment(&cfg).and_then(|(r, rows)| Ok((to_json(&r)?, rows)))?,
    };
    // runtime stays out of the report so that reruns compare byte for byte
    eprintln!("{kind}: {} replicate values in {:.2}s", rows.len(), start.elapsed().as_secs_f64());
    let report_path = args.report.clone().or_else(|| cfg.output.report.as_deref().map(|p| cfg.resolve(p)));
    emit(&report, report_path.as_deref())?;
    if let Some(p) = args.csv.clone().or_else(|| cfg.output.csv.as_deref().map(|p| cfg.resolve(p))) {
        write_file(&p, &csv(&rows))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    init_workers_from_env()?;
    match cli.command {
        Command::Estimate(a) => {
            let kernel = a.kernel.build()?;
            let text = std::fs::read_to_string(&a.sample).map_err(|e| Error::Config(format!("cannot read {}: {e}", a.sample.display())))?;
            let sample = read_sample(&text)?;
            let record = match a.estimator.as_str() {
                "edf" => v_statistic_edf(&kernel, &sample)?,
                "u-statistic" | "u" => u_statistic(&kernel, &sample)?,
                "smoothed" => v_statistic_smoothed(&kernel, &SmoothedCdf::new(EmpiricalCdf::new(&sample)?, a.epsilon)?)?,
                other => return Err(Error::Config(format!("unknown estimator {other:?} (edf, u-statistic, smoothed)"))),
            };
            json(&record)
        }
        Command::Variance(a) => {
            let kernel = a.kernel.build()?;
            let f = marginal(&a.marginal)?;
            let p = project(&kernel, &f)?;
            let variance = asymptotic_variance(&p, &brownian_bridge_cov(&f), None)?;
            let u_f = v_statistic_plugin(&kernel, PluginInput::Model(&f))?.value;
            json(&VarianceOutput { kernel: kernel.name.clone(), distribution: f.label(), u_f, sigma2: variance.sigma2, variance })
        }
        Command::Simulate(a) => {
            let kind: ProcessKind = tagged(&a.process, "kind")?;
            let process = DependentProcess { kind, marginal: marginal(&a.marginal)? };
            process.validate().map_err(|e| Error::Config(e.to_string()))?;
            let sample = generate(&process, a.n, a.seed)?;
            let mut text = String::with_capacity(24 * sample.len());
            for x in &sample {
                text.push_str(&format!("{x:e}\n"));
            }
            emit(&text, a.out.as_deref())
        }
        Command::VerifyAssumptions(a) => {
            let kernel = a.model.kernel.build()?;
            let f = marginal(&a.model.marginal)?;
            let report = check_assumptions(&kernel, &f, a.lambda, kernel.lambda_prime);
            json(&report)?;
            let failures = report.failures();
            if failures.is_empty() {
                Ok(())
            } else {
                let ids: Vec<&str> = failures.iter().map(|e| e.id.as_str()).collect();
                Err(Error::Hypothesis(format!("failed: {}", ids.join(", "))))
            }
        }
        Command::Clt(a) => run_experiment(&a, "clt"),
        Command::UvGap(a) => run_experiment(&a, "uv-gap"),
        Command::Wep(a) => run_experiment(&a, "wep"),
        Command::Smoothed(a) => run_experiment(&a, "smoothed"),
        Command::LimitSample(a) => {
            let kernel = a.model.kernel.build()?;
            let f = marginal(&a.model.marginal)?;
            let p = project(&kernel, &f)?;
            let cov = brownian_bridge_cov(&f);
            let sigma2 = asymptotic_variance(&p, &cov, None)?.sigma2;
            let draws = sample_limit(&p, &cov, Some(a.points), a.seed, a.draws)?;
            if let Some(path) = &a.csv {
                let rows: Vec<Row> = draws.iter().enumerate().map(|(i, &value)| Row { replicate: i, n: 0, statistic: "limit_draw", value }).collect();
                write_file(path, &csv(&rows))?;
            }
            json(&LimitOutput {
                kernel: kernel.name.clone(),
                distribution: f.label(),
                draws: a.draws,
                seed: a.seed,
                sigma2,
                mean: stats::mean(&draws),
                variance: stats::variance(&draws),
                quantiles: stats::quantiles(&draws),
            })
        }
        Command::Project(a) => {
            let kernel = a.model.kernel.build()?;
            let f = marginal(&a.model.marginal)?;
            let p = project(&kernel, &f)?;
            let text = match (a.component, a.measure) {
                (1, false) => write_grid_function(&p.g1),
                (2, false) => write_grid_function(&p.g2),
                (1, true) => write_signed_measure(&p.dg1),
                (2, true) => write_signed_measure(&p.dg2),
                (c, _) => return Err(Error::Config(format!("--component must be 1 or 2, got {c}"))),
            };
            emit(&text, None)
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidInput(_) => 2,
        Error::Hypothesis(_) | Error::Precondition(_) | Error::Divergence(_) => 3,
        Error::Numeric(_) => 4,
        Error::Io(_) => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("uvstat: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
