//! Command-line front end: configure a run, execute the adaptive surrogate
//! build on a registered benchmark or an external evaluator subprocess, and
//! emit a results CSV plus the surrogate bundle JSON.
//!
//! Exit codes: 0 success, 2 configuration error, 3 model evaluation failure.

mod external;

use clap::{Args, Parser, Subcommand};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use scamr::bench::{analytic_mean_f14, normalized_l2, relative_mean_error, rmse, BenchmarkCase};
use scamr::driver::{run_scamr_with_log, RunLog, ScamrConfig, ScamrSurrogate};
use scamr::{Element, Model, ScamrError};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "scamr", about = "Adaptive stochastic collocation surrogates", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a surrogate for a benchmark case or external evaluator and
    /// validate it against exact values.
    Run(RunArgs),
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    /// Benchmark case id: f1..f14 or elliptic-n<dim>.
    #[arg(long, conflicts_with = "external")]
    case: Option<String>,

    /// External evaluator command; speaks one line of space-separated
    /// coordinates on stdin per request and answers one value per line.
    #[arg(long)]
    external: Option<String>,

    /// Input dimension (required for --external and f14).
    #[arg(long)]
    dim: Option<usize>,

    /// Domain bounds for --external as "lo:hi" per dimension (repeatable) or
    /// a single "lo:hi" applied to every dimension. Defaults to 0:1.
    #[arg(long)]
    bounds: Vec<String>,

    /// JSON config file; flags override file entries.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Tolerance of the smoothness/residual checks.
    #[arg(long)]
    eps1: Option<f64>,

    /// Tolerance of the pairwise interaction check (defaults to eps1).
    #[arg(long)]
    eps2: Option<f64>,

    /// Maximum refinement sweeps per subproblem.
    #[arg(long)]
    max_iter: Option<u32>,

    /// Open-volume stopping fraction.
    #[arg(long)]
    v_min: Option<f64>,

    /// Validation sample count.
    #[arg(long)]
    validate: Option<usize>,

    /// Seed for validation sampling.
    #[arg(long)]
    seed: Option<u64>,

    /// Grid cells per axis for the elliptic cases.
    #[arg(long)]
    elliptic_resolution: Option<usize>,

    /// Results CSV path (header: case,dim,eps1,eps2,evaluations,rmse,
    /// normalized_l2,relative_mean_error,wall_seconds).
    #[arg(long)]
    out_csv: Option<PathBuf>,

    /// Surrogate bundle JSON path.
    #[arg(long)]
    out_surrogate: Option<PathBuf>,

    /// Run log path (one line per criterion decision).
    #[arg(long)]
    out_log: Option<PathBuf>,

    /// Omit wall-clock seconds from the CSV so repeat runs are byte-identical.
    #[arg(long)]
    no_timing: bool,

    /// External evaluator response timeout in seconds.
    #[arg(long, default_value_t = 30)]
    timeout_secs: u64,
}

#[derive(Debug, Default, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    case: Option<String>,
    external: Option<String>,
    dim: Option<usize>,
    bounds: Option<Vec<String>>,
    eps1: Option<f64>,
    eps2: Option<f64>,
    max_iter: Option<u32>,
    v_min: Option<f64>,
    validate: Option<usize>,
    seed: Option<u64>,
    elliptic_resolution: Option<usize>,
}

/// Fully resolved run configuration.
struct RunConfig {
    case: Option<BenchmarkCase>,
    external: Option<(String, u64)>,
    dim: usize,
    bounds: Vec<(f64, f64)>,
    scamr: ScamrConfig,
    validate: usize,
    out_csv: Option<PathBuf>,
    out_surrogate: Option<PathBuf>,
    out_log: Option<PathBuf>,
    no_timing: bool,
    case_label: String,
}

fn parse_bounds(specs: &[String], dim: usize) -> Result<Vec<(f64, f64)>, String> {
    let parse_one = |s: &str| -> Result<(f64, f64), String> {
        let (lo, hi) = s
            .split_once(':')
            .ok_or_else(|| format!("bounds must be lo:hi, got {s:?}"))?;
        let lo: f64 = lo.trim().parse().map_err(|_| format!("bad bound in {s:?}"))?;
        let hi: f64 = hi.trim().parse().map_err(|_| format!("bad bound in {s:?}"))?;
        if !(lo < hi) {
            return Err(format!("empty interval in bounds {s:?}"));
        }
        Ok((lo, hi))
    };
    match specs.len() {
        0 => Ok(vec![(0.0, 1.0); dim]),
        1 => Ok(vec![parse_one(&specs[0])?; dim]),
        k if k == dim => specs.iter().map(|s| parse_one(s)).collect(),
        k => Err(format!("got {k} bounds for {dim} dimensions")),
    }
}

fn resolve(args: &RunArgs) -> Result<RunConfig, String> {
    let file: FileConfig = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
            serde_json::from_str(&text)
                .map_err(|e| format!("bad config {}: {e}", path.display()))?
        }
        None => FileConfig::default(),
    };

    let case_id = args.case.clone().or(file.case);
    let external = args.external.clone().or(file.external);
    let dim_opt = args.dim.or(file.dim);
    let eps1 = args.eps1.or(file.eps1).unwrap_or(1e-3);
    let eps2 = args.eps2.or(file.eps2).unwrap_or(eps1);
    let scamr = ScamrConfig {
        epsilon1: eps1,
        epsilon2: eps2,
        max_iterations: args.max_iter.or(file.max_iter).unwrap_or(12),
        min_volume_fraction: args.v_min.or(file.v_min).unwrap_or(1e-6),
        rng_seed: args.seed.or(file.seed).unwrap_or(0),
    };
    let validate = args.validate.or(file.validate).unwrap_or(100_000);
    if validate < 1 {
        return Err("validate must be ≥ 1".to_string());
    }

    match (case_id, external) {
        (Some(id), None) => {
            let case = BenchmarkCase::by_id(
                &id,
                dim_opt,
                args.elliptic_resolution.or(file.elliptic_resolution),
            )
            .map_err(|e| e.to_string())?;
            let dim = case.dim();
            let bounds = case.domain().to_vec();
            Ok(RunConfig {
                case_label: case.id().to_string(),
                case: Some(case),
                external: None,
                dim,
                bounds,
                scamr,
                validate,
                out_csv: args.out_csv.clone(),
                out_surrogate: args.out_surrogate.clone(),
                out_log: args.out_log.clone(),
                no_timing: args.no_timing,
            })
        }
        (None, Some(cmd)) => {
            let dim = dim_opt.ok_or_else(|| "missing field: dim (required for --external)".to_string())?;
            if dim == 0 {
                return Err("dim must be ≥ 1".to_string());
            }
            let bound_specs = if args.bounds.is_empty() {
                file.bounds.unwrap_or_default()
            } else {
                args.bounds.clone()
            };
            let bounds = parse_bounds(&bound_specs, dim)?;
            Ok(RunConfig {
                case_label: "external".to_string(),
                case: None,
                external: Some((cmd, args.timeout_secs)),
                dim,
                bounds,
                scamr,
                validate,
                out_csv: args.out_csv.clone(),
                out_surrogate: args.out_surrogate.clone(),
                out_log: args.out_log.clone(),
                no_timing: args.no_timing,
            })
        }
        (Some(_), Some(_)) => Err("use either --case or --external, not both".to_string()),
        (None, None) => Err("missing field: case (or --external)".to_string()),
    }
}

struct Metrics {
    rmse: Option<f64>,
    normalized_l2: Option<f64>,
    relative_mean_error: Option<f64>,
}

fn validate_surrogate(
    surrogate: &ScamrSurrogate,
    model: &dyn Model,
    config: &RunConfig,
) -> Result<Metrics, ScamrError> {
    let mut rng = ChaCha8Rng::seed_from_u64(surrogate.config.rng_seed);
    let mut exact = Vec::with_capacity(config.validate);
    let mut approx = Vec::with_capacity(config.validate);
    let mut x = vec![0.0; config.dim];
    for _ in 0..config.validate {
        for (v, &(lo, hi)) in x.iter_mut().zip(config.bounds.iter()) {
            *v = rng.gen_range(lo..hi);
        }
        exact.push(model.eval(&x)?);
        approx.push(surrogate.extract_value(&x)?);
    }
    let rmse_v = rmse(&exact, &approx)?;
    let l2 = normalized_l2(&exact, &approx).ok();
    let rel_mean = if config.case_label == "f14" {
        let exact_mean = analytic_mean_f14(config.dim);
        Some(relative_mean_error(exact_mean, surrogate.estimate_mean())?)
    } else {
        None
    };
    Ok(Metrics {
        rmse: Some(rmse_v),
        normalized_l2: l2,
        relative_mean_error: rel_mean,
    })
}

fn csv_field(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6e}")).unwrap_or_default()
}

/// Wraps any model with a served-request counter so failures can report how
/// much of the run completed.
struct CountingModel<'a> {
    inner: &'a dyn Model,
    count: std::sync::atomic::AtomicUsize,
}

impl Model for CountingModel<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn eval(&self, x: &[f64]) -> Result<f64, ScamrError> {
        let v = self.inner.eval(x)?;
        self.count.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        Ok(v)
    }
}

fn run(args: &RunArgs) -> Result<(), (u8, String)> {
    let config = resolve(args).map_err(|e| (2u8, e))?;

    let external_model;
    let inner_model: &dyn Model = match (&config.case, &config.external) {
        (Some(case), None) => case,
        (None, Some((cmd, timeout))) => {
            external_model = external::ExternalEvaluator::spawn(cmd, config.dim, *timeout)
                .map_err(|e| (3u8, e.to_string()))?;
            &external_model
        }
        _ => unreachable!("resolve() guarantees exactly one model source"),
    };
    let counting = CountingModel {
        inner: inner_model,
        count: std::sync::atomic::AtomicUsize::new(0),
    };
    let model: &dyn Model = &counting;

    let domain = Element::root(config.bounds.clone()).map_err(|e| (2, e.to_string()))?;
    let started = std::time::Instant::now();
    let mut log = RunLog::new();
    let surrogate = run_scamr_with_log(model, &domain, &config.scamr, &mut log).map_err(|e| {
        let code = match e {
            ScamrError::InvalidConfig(_) => 2u8,
            _ => 3u8,
        };
        (
            code,
            format!(
                "{e} ({} evaluations completed)",
                counting.count.load(std::sync::atomic::Ordering::Relaxed)
            ),
        )
    })?;

    let metrics = validate_surrogate(&surrogate, model, &config).map_err(|e| (3u8, e.to_string()))?;
    let wall = started.elapsed().as_secs_f64();

    let header = "case,dim,eps1,eps2,evaluations,rmse,normalized_l2,relative_mean_error,wall_seconds";
    let row = format!(
        "{},{},{:e},{:e},{},{},{},{},{}",
        config.case_label,
        config.dim,
        config.scamr.epsilon1,
        config.scamr.epsilon2,
        surrogate.evaluation_count(),
        csv_field(metrics.rmse),
        csv_field(metrics.normalized_l2),
        csv_field(metrics.relative_mean_error),
        if config.no_timing {
            String::new()
        } else {
            format!("{wall:.3}")
        }
    );
    println!("{header}");
    println!("{row}");

    if let Some(path) = &config.out_csv {
        let mut f = std::fs::File::create(path).map_err(|e| (2, format!("cannot write {}: {e}", path.display())))?;
        writeln!(f, "{header}").and_then(|_| writeln!(f, "{row}")).map_err(|e| (2, e.to_string()))?;
    }
    if let Some(path) = &config.out_surrogate {
        std::fs::write(path, surrogate.to_json())
            .map_err(|e| (2, format!("cannot write {}: {e}", path.display())))?;
    }
    if let Some(path) = &config.out_log {
        let mut f = std::fs::File::create(path).map_err(|e| (2, format!("cannot write {}: {e}", path.display())))?;
        for record in &log {
            writeln!(f, "{record}").map_err(|e| (2, e.to_string()))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Run(args) => match run(args) {
            Ok(()) => ExitCode::SUCCESS,
            Err((code, message)) => {
                eprintln!("error: {message}");
                ExitCode::from(code)
            }
        },
    }
}
