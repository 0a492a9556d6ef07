//! Command-line surface. Every subcommand also accepts `--config file.json`,
//! a JSON object whose keys are flag names (`m_grid` or `m-grid`) and whose
//! values are scalars, arrays (joined with commas) or booleans (switches).
//! Flags given on the command line win over the file.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use tuckreg_core::bounds::{
    dof_comparison_table, log_cover_core, log_cover_factor, log_cover_g, sample_complexity, BoundInputs,
};
use tuckreg_core::measure::rip_probe;
use tuckreg_core::metrics::{classify_metrics, normalized_error};
use tuckreg_core::model::{degrees_of_freedom, gen_model};
use tuckreg_core::solver::fit;
use tuckreg_core::{DenseTensor, Init, LinearMap, LinearMapSpec, Method, SensingDistribution, SolverConfig};

use crate::bundle::{self, MANIFEST};
use crate::error::{Error, Result};
use crate::sweep::{self, SweepConfig, DEFAULT_LAMBDA};
use crate::{tnsr, MonotonicClock};

#[derive(Debug, Parser)]
#[command(name = "tuckreg", version, about = "Sparse low-Tucker-rank tensor regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate synthetic models and datasets.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Fit a dataset with one method.
    Fit(FitArgs),
    /// Run the synthetic (method, m, sigma) grid and write per-trial CSV rows.
    Sweep(SweepArgs),
    /// Score estimates.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Covering-number and sample-complexity calculators.
    Bound(BoundArgs),
    /// Monte-Carlo estimate of the restricted isometry constant of a map.
    RipProbe(RipArgs),
}

#[derive(Debug, Subcommand)]
enum GenCommand {
    /// Draw a structured model and write it as a bundle directory.
    Model(GenModelArgs),
    /// Draw measurements of a model bundle and write a dataset directory.
    Data(GenDataArgs),
}

#[derive(Debug, Subcommand)]
enum EvalCommand {
    /// Normalized estimation error ||truth - estimate||_F / ||truth||_F.
    Error(EvalErrorArgs),
    /// Specificity, sensitivity and their harmonic mean.
    Classify(ClassifyArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Distribution {
    Gaussian,
    Rademacher,
    Uniform,
}

impl From<Distribution> for SensingDistribution {
    fn from(d: Distribution) -> Self {
        match d {
            Distribution::Gaussian => Self::Gaussian,
            Distribution::Rademacher => Self::Rademacher,
            Distribution::Uniform => Self::Uniform,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Tpgd,
    #[value(alias = "pgd-tucker")]
    PgdTucker,
    Lasso,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Tpgd => Self::Tpgd,
            MethodArg::PgdTucker => Self::PgdTucker,
            MethodArg::Lasso => Self::Lasso,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum InitArg {
    Zero,
    Spectral,
}

impl From<InitArg> for Init {
    fn from(i: InitArg) -> Self {
        match i {
            InitArg::Zero => Self::Zero,
            InitArg::Spectral => Self::Spectral,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct ConfigArg {
    /// JSON file supplying any of this command's flags.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Structure {
    #[arg(long, value_delimiter = ',', required = true)]
    dims: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    rank: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    sparsity: Vec<usize>,
}

#[derive(Debug, Args)]
struct GenModelArgs {
    #[command(flatten)]
    structure: Structure,
    /// Lower bound on the magnitude of nonzero factor entries.
    #[arg(long, default_value_t = 0.5)]
    a: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Debug, Args)]
struct GenDataArgs {
    /// Model bundle directory.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    m: usize,
    /// Seed of the measurement map.
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value = "gaussian")]
    distribution: Distribution,
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    /// Seed of the noise draw (defaults to --seed; the streams are distinct).
    #[arg(long)]
    noise_seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Dataset directory.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "tpgd")]
    method: MethodArg,
    #[arg(long, value_delimiter = ',')]
    rank: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    sparsity: Vec<usize>,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    lambda: f64,
    #[arg(long, value_enum, default_value = "zero")]
    init: InitArg,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Start from the published configuration instead of the desk preset.
    #[arg(long)]
    paper_scale: bool,
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    rank: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    sparsity: Option<Vec<usize>>,
    #[arg(long)]
    a: Option<f64>,
    /// Base seed from which every trial seed is derived.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    m_grid: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    sigma_grid: Option<Vec<f64>>,
    #[arg(long, value_enum, value_delimiter = ',')]
    methods: Option<Vec<MethodArg>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, value_enum)]
    distribution: Option<Distribution>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Write zeros in the timing columns so reruns are byte-identical.
    #[arg(long)]
    no_timing: bool,
    /// Step size of the projected methods.
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// l1 weight of the lasso baseline.
    #[arg(long)]
    lambda: Option<f64>,
    /// Per-trial CSV output.
    #[arg(long)]
    out: PathBuf,
    /// Per-cell percentile CSV (printed to stdout when omitted).
    #[arg(long)]
    summary: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Debug, Args)]
struct EvalErrorArgs {
    /// TNSR file or model bundle directory.
    #[arg(long)]
    truth: PathBuf,
    /// TNSR file, fit output directory or model bundle directory.
    #[arg(long)]
    estimate: PathBuf,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Debug, Args)]
struct ClassifyArgs {
    /// Text file of real responses separated by whitespace or commas.
    #[arg(long)]
    predictions: PathBuf,
    /// Text file of 0/1 labels separated by whitespace or commas.
    #[arg(long)]
    labels: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Debug, Args)]
struct BoundArgs {
    #[command(flatten)]
    structure: Structure,
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    /// Target restricted isometry constant.
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
    /// Failure probability.
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    /// Covering radius.
    #[arg(long, default_value_t = 0.5)]
    cover_eps: f64,
    /// Unspecified theory constant of the structural term.
    #[arg(long, default_value_t = 1.0)]
    k1: f64,
    /// Unspecified theory constant of the confidence term.
    #[arg(long, default_value_t = 1.0)]
    k2: f64,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Debug, Args)]
struct RipArgs {
    #[command(flatten)]
    structure: Structure,
    #[arg(long)]
    m: usize,
    /// Seed of the measurement map.
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value = "gaussian")]
    distribution: Distribution,
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    /// Number of random structured tensors to probe.
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// Seed of the probe tensors (defaults to --seed).
    #[arg(long)]
    probe_seed: Option<u64>,
    #[command(flatten)]
    config: ConfigArg,
}

/// Appends `--key value` tokens from the `--config` file for every key not
/// already given on the command line.
fn expand_config(args: Vec<OsString>) -> std::result::Result<Vec<OsString>, String> {
    let strs: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut path = None;
    for (i, a) in strs.iter().enumerate() {
        if a == "--config" {
            path = strs.get(i + 1).cloned();
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else {
        return Ok(args);
    };
    let text = fs::read_to_string(&path).map_err(|e| format!("{path}: {e}"))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| format!("{path}: {e}"))?;
    let Value::Object(map) = value else {
        return Err(format!("{path}: config must be a JSON object"));
    };
    let mut out = args;
    for (key, v) in map {
        let flag = format!("--{}", key.replace('_', "-"));
        if flag == "--config" || strs.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}="))) {
            continue;
        }
        let scalar = |v: &Value| -> std::result::Result<String, String> {
            match v {
                Value::String(s) => Ok(s.clone()),
                Value::Number(n) => Ok(n.to_string()),
                Value::Bool(b) => Ok(b.to_string()),
                _ => Err(format!("{path}: unsupported value for {key}")),
            }
        };
        match &v {
            Value::Bool(true) => out.push(flag.into()),
            Value::Bool(false) | Value::Null => {}
            Value::Array(items) => {
                let joined = items.iter().map(scalar).collect::<std::result::Result<Vec<_>, _>>()?;
                out.push(flag.into());
                out.push(joined.join(",").into());
            }
            other => {
                out.push(flag.into());
                out.push(scalar(other)?.into());
            }
        }
    }
    Ok(out)
}

/// Parses `args` (including the program name) and runs the command. Returns
/// the process exit code: 0 on success, 2 on usage errors, 1 on runtime
/// failures.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args = match expand_config(args.into_iter().map(Into::into).collect()) {
        Ok(a) => a,
        Err(msg) => {
            let _ = writeln!(stderr, "error: {msg}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
                2
            } else {
                let _ = write!(stdout, "{}", e.render());
                0
            };
            return code;
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            if e.is_usage() {
                2
            } else {
                1
            }
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Gen(GenCommand::Model(a)) => gen_model_cmd(a, out),
        Command::Gen(GenCommand::Data(a)) => gen_data_cmd(a, out),
        Command::Fit(a) => fit_cmd(a, out),
        Command::Sweep(a) => sweep_cmd(a, out),
        Command::Eval(EvalCommand::Error(a)) => eval_error_cmd(a, out),
        Command::Eval(EvalCommand::Classify(a)) => classify_cmd(a, out),
        Command::Bound(a) => bound_cmd(a, out),
        Command::RipProbe(a) => rip_cmd(a, out),
    }
}

fn emit<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("serialisable output");
    writeln!(out, "{text}").map_err(|e| Error::io("<stdout>", e))
}

fn gen_model_cmd(a: GenModelArgs, out: &mut dyn Write) -> Result<()> {
    let s = &a.structure;
    let model = gen_model(&s.dims, &s.rank, &s.sparsity, a.a, a.seed)?;
    bundle::write_model(&a.out, &model, Some(a.a), Some(a.seed))?;
    emit(
        out,
        &json!({
            "out": a.out,
            "dims": s.dims,
            "rank": s.rank,
            "sparsity": s.sparsity,
            "degrees_of_freedom": degrees_of_freedom(&s.rank, &s.sparsity, &s.dims)?,
        }),
    )
}

fn gen_data_cmd(a: GenDataArgs, out: &mut dyn Write) -> Result<()> {
    let noise_seed = a.noise_seed.unwrap_or(a.seed);
    bundle::generate_dataset(&a.model, a.m, a.seed, a.distribution.into(), a.sigma, noise_seed, &a.out)?;
    emit(out, &json!({ "out": a.out, "m": a.m, "sigma": a.sigma }))
}

/// Sensing maps up to this many entries are materialised for fitting.
const FIT_MATERIALIZE_LIMIT: usize = 1 << 24;

fn fit_cmd(a: FitArgs, out: &mut dyn Write) -> Result<()> {
    let (data, _) = bundle::read_dataset(&a.data)?;
    let method: Method = a.method.into();
    let mut cfg = SolverConfig::new(method, a.rank.clone(), a.sparsity.clone());
    if method == Method::PgdTucker {
        cfg.sparsity = Vec::new();
    }
    if method != Method::Lasso && a.rank.is_empty() {
        return Err(Error::Config(format!("--rank is required for {}", method.name())));
    }
    if method == Method::Tpgd && a.sparsity.is_empty() {
        return Err(Error::Config("--sparsity is required for tpgd".into()));
    }
    cfg.mu = a.mu;
    cfg.max_iters = a.max_iters;
    cfg.tol = a.tol;
    cfg.lambda = a.lambda;
    cfg.init = a.init.into();
    cfg.validate(data.map.dims())?;

    let spec = &data.map;
    let clock = MonotonicClock::new();
    let report = if spec.m().saturating_mul(spec.dims().iter().product()) <= FIT_MATERIALIZE_LIMIT {
        fit(&spec.materialize(), &data.y, &cfg, &clock)?
    } else {
        fit(spec, &data.y, &cfg, &clock)?
    };
    let err = match &data.truth {
        Some(t) => Some(normalized_error(&t.compose(), &report.estimate)?),
        None => None,
    };
    bundle::write_fit(&a.out, &report, err)?;
    emit(
        out,
        &json!({
            "out": a.out,
            "method": method.name(),
            "iters_run": report.iters_run,
            "stop_reason": report.stop_reason.name(),
            "final_residual": report.residuals.last(),
            "normalized_error": err,
            "wall_time_s": report.wall_time_total,
        }),
    )
}

fn sweep_cmd(a: SweepArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg = if a.paper_scale {
        SweepConfig::paper_scale()
    } else {
        SweepConfig::desk()
    };
    if let Some(v) = a.dims {
        cfg.dims = v;
    }
    if let Some(v) = a.rank {
        cfg.rank = v;
    }
    if let Some(v) = a.sparsity {
        cfg.sparsity = v;
    }
    if let Some(v) = a.a {
        cfg.a = v;
    }
    if let Some(v) = a.seed {
        cfg.base_seed = v;
    }
    if let Some(v) = a.m_grid {
        cfg.m_grid = v;
    }
    if let Some(v) = a.sigma_grid {
        cfg.sigma_grid = v;
    }
    if let Some(v) = a.methods {
        cfg.methods = v.into_iter().map(Method::from).collect();
    }
    if let Some(v) = a.trials {
        cfg.trials = v;
    }
    if let Some(v) = a.distribution {
        cfg.distribution = v.into();
    }
    if let Some(v) = a.threads {
        cfg.threads = v;
    }
    cfg.record_timing = !a.no_timing;
    for o in [&mut cfg.tpgd, &mut cfg.pgd_tucker, &mut cfg.lasso] {
        o.mu = a.mu.or(o.mu);
        o.max_iters = a.max_iters.or(o.max_iters);
        o.tol = a.tol.or(o.tol);
    }
    cfg.lasso.lambda = a.lambda.or(cfg.lasso.lambda);

    let rows = sweep::run_sweep(&cfg)?;
    let file = fs::File::create(&a.out).map_err(|e| Error::io(&a.out, e))?;
    sweep::write_csv(&rows, std::io::BufWriter::new(file))?;
    let cells = sweep::summarize(&rows)?;
    match &a.summary {
        Some(p) => {
            let file = fs::File::create(p).map_err(|e| Error::io(p, e))?;
            sweep::write_summary_csv(&cells, std::io::BufWriter::new(file))
        }
        None => sweep::write_summary_csv(&cells, out),
    }
}

/// A TNSR file, or a directory holding `estimate.tnsr` or a model bundle.
fn load_tensor(path: &Path) -> Result<DenseTensor> {
    if path.is_dir() {
        let est = path.join("estimate.tnsr");
        if est.is_file() {
            return tnsr::read(&est);
        }
        if path.join(MANIFEST).is_file() {
            return Ok(bundle::read_model(path)?.0.compose());
        }
        return Err(Error::format(path, "directory holds neither estimate.tnsr nor a model bundle"));
    }
    tnsr::read(path)
}

fn eval_error_cmd(a: EvalErrorArgs, out: &mut dyn Write) -> Result<()> {
    let truth = load_tensor(&a.truth)?;
    let est = load_tensor(&a.estimate)?;
    emit(out, &json!({ "normalized_error": normalized_error(&truth, &est)? }))
}

fn read_numbers(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::format(path, format!("not a number: {t:?}")))
        })
        .collect()
}

fn classify_cmd(a: ClassifyArgs, out: &mut dyn Write) -> Result<()> {
    let preds = read_numbers(&a.predictions)?;
    let labels = read_numbers(&a.labels)?
        .into_iter()
        .map(|x| match x {
            0.0 => Ok(0u8),
            1.0 => Ok(1u8),
            other => Err(Error::Config(format!("label {other} is not 0 or 1"))),
        })
        .collect::<Result<Vec<_>>>()?;
    let m = classify_metrics(&preds, &labels, a.threshold)?;
    emit(out, &m)
}

fn bound_cmd(a: BoundArgs, out: &mut dyn Write) -> Result<()> {
    let s = a.structure;
    let inputs = BoundInputs {
        tau: a.tau,
        epsilon_cover: a.cover_eps,
        delta: a.delta,
        failure_prob: a.eps,
        k1: a.k1,
        k2: a.k2,
        ..BoundInputs::new(s.dims, s.rank, s.sparsity)
    };
    inputs.validate()?;
    let core = log_cover_core(&inputs.rank, inputs.tau, inputs.epsilon_cover)?;
    let factors = (0..inputs.order())
        .map(|k| log_cover_factor(inputs.dims[k], inputs.rank[k], inputs.sparsity[k], inputs.epsilon_cover))
        .collect::<tuckreg_core::Result<Vec<_>>>()?;
    let g = log_cover_g(&inputs)?;
    let m = sample_complexity(&inputs)?;
    let dof = dof_comparison_table(&inputs)?;
    let io = |e| Error::io("<stdout>", e);
    match a.format {
        Format::Json => emit(
            out,
            &json!({
                "inputs": inputs,
                "log_cover_core": core,
                "log_cover_factor": factors,
                "log_cover_g": g,
                "sample_complexity": m,
                "dof_comparison": dof,
                "note": "k1 and k2 are unspecified theory constants; defaults are 1",
            }),
        ),
        Format::Csv => {
            writeln!(
                out,
                "log_cover_core,log_cover_factor_sum,log_cover_g,sample_complexity,structured_dof,tucker_dof,vector_sparsity_dof,k1,k2"
            )
            .map_err(io)?;
            writeln!(
                out,
                "{core},{},{g},{m},{},{},{},{},{}",
                factors.iter().sum::<f64>(),
                dof.structured_dof,
                dof.tucker_dof,
                dof.vector_sparsity_dof,
                inputs.k1,
                inputs.k2
            )
            .map_err(io)
        }
    }
}

fn rip_cmd(a: RipArgs, out: &mut dyn Write) -> Result<()> {
    let s = a.structure;
    let spec = LinearMapSpec::new(a.m, s.dims.clone(), a.seed, a.distribution.into())?;
    let est = rip_probe(&spec, &s.rank, &s.sparsity, a.tau, a.samples, a.probe_seed.unwrap_or(a.seed))?;
    let lo = est.samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = est.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    emit(
        out,
        &json!({
            "delta_hat": est.delta_hat,
            "samples": est.samples.len(),
            "min_ratio": lo,
            "max_ratio": hi,
        }),
    )
}
