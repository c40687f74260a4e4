//! `sbsse` command-line harness: trace simulation, density fits, one-step
//! predictions, link-adaptation sweeps and the AMISE comparison curve.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use sbsse_core::channel::{simulate, NetworkConfig, TraceBundle};
use sbsse_core::density::amise::{amise_curves, AmiseConfig};
use sbsse_core::error::Error;
use sbsse_core::eval::{
    complexity_totals, run_sweep, score_window, write_results_csv, ComplexityParams, FittedPredictor, SweepConfig,
};
use sbsse_core::predict::{LognormalModel, Method, MqPredictor, PredictorConfig};

/// Default output directory when `--output-dir` is not given.
const OUTPUT_DIR_ENV: &str = "SBSSE_OUTPUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "sbsse", version, about = "Interference prediction and link adaptation experiments")]
struct Cli {
    /// JSON config with optional `network`, `methods`, `sweep` and `amise` sections.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,

    #[arg(short, long, global = true, env = OUTPUT_DIR_ENV, default_value = ".")]
    output_dir: PathBuf,

    /// Overrides the seed of the network and AMISE sections.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate an interference trace (trace.csv).
    Simulate,
    /// Fit one predictor on the start of a trace (model.json, density.csv).
    Fit(FitArgs),
    /// One-step-ahead predictions over the test window (predictions.csv).
    Predict(PredictArgs),
    /// Evaluate every method, epsilon and training length (results.csv).
    Sweep {
        #[arg(long)]
        trace: PathBuf,
    },
    /// AMISE of KDE and SBSSE against the bandwidth (amise.csv).
    Amise,
    /// Closed-form operation counts of every method (complexity.csv).
    Complexity(ComplexityArgs),
}

#[derive(clap::Args, Debug)]
struct FitArgs {
    #[arg(long)]
    trace: PathBuf,
    /// Method name or label of an entry in `methods`.
    #[arg(long)]
    method: String,
    #[arg(long)]
    training_len: Option<usize>,
}

#[derive(clap::Args, Debug)]
struct PredictArgs {
    #[arg(long)]
    trace: PathBuf,
    #[arg(long)]
    method: String,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    training_len: Option<usize>,
}

#[derive(clap::Args, Debug)]
struct ComplexityArgs {
    /// Grid nodes per dimension.
    #[arg(long, default_value_t = 256)]
    mu: u64,
    #[arg(long, default_value_t = 0.1)]
    eta0: f64,
    #[arg(long, default_value_t = 1e-14)]
    eta: f64,
    /// Comma-separated subset sizes.
    #[arg(long, value_delimiter = ',', default_value = "500,500")]
    subset_sizes: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    n_it: usize,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RunConfig {
    network: NetworkConfig,
    methods: Vec<PredictorConfig>,
    sweep: SweepConfig,
    amise: AmiseConfig,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    MissingInput(String),
    Numerical(String),
    Other(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::MissingInput(_) => 3,
            Failure::Numerical(_) => 4,
            Failure::Other(_) => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "config error: {m}"),
            Failure::MissingInput(m) => write!(f, "missing input: {m}"),
            Failure::Numerical(m) => write!(f, "numerical failure: {m}"),
            Failure::Other(m) => write!(f, "{m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Config(_) | Error::Domain(_) | Error::Json(_) => Failure::Config(msg),
            Error::SeriesTooShort { .. } | Error::InvalidPower { .. } | Error::Csv(_) => Failure::MissingInput(msg),
            Error::Io(_) => Failure::Other(msg),
            _ => Failure::Numerical(msg),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn load_config(path: Option<&Path>, seed: Option<u64>) -> CliResult<RunConfig> {
    let mut cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Failure::MissingInput(format!("config {}: {e}", p.display())))?;
            serde_json::from_str::<RunConfig>(&text).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(s) = seed {
        cfg.network.seed = s;
        cfg.amise.seed = s;
    }
    if cfg.methods.is_empty() {
        cfg.methods = Method::ALL.iter().map(|&m| PredictorConfig { method: m, ..Default::default() }).collect();
    }
    cfg.network.validate()?;
    for m in &cfg.methods {
        m.validate()?;
    }
    Ok(cfg)
}

fn open_input(path: &Path) -> CliResult<File> {
    File::open(path).map_err(|e| Failure::MissingInput(format!("{}: {e}", path.display())))
}

fn read_trace(path: &Path, net: &NetworkConfig) -> CliResult<TraceBundle> {
    let f = open_input(path)?;
    TraceBundle::read_csv(BufReader::new(f), net.noise_power_w())
        .map_err(|e| Failure::MissingInput(format!("{}: {e}", path.display())))
}

/// Writes `name` inside `dir` through a temporary file and a rename.
fn write_atomic(dir: &Path, name: &str, fill: impl FnOnce(&mut dyn Write) -> CliResult<()>) -> CliResult<PathBuf> {
    let io = |e: std::io::Error| Failure::Other(format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        fill(&mut w)?;
        w.flush().map_err(io)?;
    }
    let path = dir.join(name);
    tmp.persist(&path).map_err(|e| io(e.error))?;
    Ok(path)
}

/// Sidecar `<name>.meta.json` with the resolved config of the run.
fn write_meta(dir: &Path, name: &str, command: &str, cfg: &RunConfig, extra: serde_json::Value) -> CliResult<()> {
    let meta = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "output": name,
        "config": cfg,
        "inputs": extra,
    });
    write_atomic(dir, &format!("{name}.meta.json"), |w| {
        serde_json::to_writer_pretty(&mut *w, &meta).map_err(|e| Failure::Other(e.to_string()))?;
        writeln!(w).map_err(|e| Failure::Other(e.to_string()))
    })?;
    Ok(())
}

fn find_method(cfg: &RunConfig, name: &str) -> CliResult<PredictorConfig> {
    if let Some(m) = cfg.methods.iter().find(|m| m.label() == name) {
        return Ok(m.clone());
    }
    let method: Method = name.parse()?;
    Ok(cfg.methods.iter().find(|m| m.method == method).cloned().unwrap_or_else(|| PredictorConfig {
        method,
        ..Default::default()
    }))
}

fn csv_err(e: impl std::fmt::Display) -> Failure {
    Failure::Other(e.to_string())
}

fn cmd_simulate(cli: &Cli, cfg: &RunConfig) -> CliResult<()> {
    let trace = simulate(&cfg.network)?;
    let path = write_atomic(&cli.output_dir, "trace.csv", |w| Ok(trace.write_csv(w)?))?;
    write_meta(&cli.output_dir, "trace.csv", "simulate", cfg, json!({ "seed": cfg.network.seed }))?;
    log::info!("wrote {} TTIs to {}", trace.len(), path.display());
    Ok(())
}

fn cmd_fit(cli: &Cli, cfg: &RunConfig, args: &FitArgs) -> CliResult<()> {
    let trace = read_trace(&args.trace, &cfg.network)?;
    let mut pc = find_method(cfg, &args.method)?;
    if let Some(l) = args.training_len {
        pc.training_len = l;
    }
    pc.validate()?;
    let training = trace.ipv.slice(0, pc.training_len.min(trace.len()))?;
    if training.len() < pc.training_len {
        return Err(Error::SeriesTooShort { needed: pc.training_len, got: trace.len() }.into());
    }
    let summary = match pc.method {
        m if m.is_mq() => {
            let p = MqPredictor::fit(&training, &pc)?;
            let ops = complexity_totals(m, &ComplexityParams::from_fit(p.info()))?;
            if let Some(joint) = p.joint() {
                write_atomic(&cli.output_dir, "density.csv", |w| Ok(joint.write_csv(w)?))?;
            }
            json!({ "method": pc.label(), "fit": p.info(), "op_count": ops })
        }
        Method::Lognormal => json!({ "method": pc.label(), "fit": LognormalModel::fit(&training)? }),
        m => return Err(Failure::Config(format!("method: {m} has no fitted model"))),
    };
    write_atomic(&cli.output_dir, "model.json", |w| {
        serde_json::to_writer_pretty(&mut *w, &summary).map_err(csv_err)?;
        writeln!(w).map_err(csv_err)
    })?;
    write_meta(&cli.output_dir, "model.json", "fit", cfg, json!({ "trace": args.trace }))
}

fn cmd_predict(cli: &Cli, cfg: &RunConfig, args: &PredictArgs) -> CliResult<()> {
    let trace = read_trace(&args.trace, &cfg.network)?;
    let mut pc = find_method(cfg, &args.method)?;
    if let Some(l) = args.training_len {
        pc.training_len = l;
    }
    if let Some(e) = args.epsilon {
        pc.epsilon = e;
    }
    pc.validate()?;
    let start = pc.training_len;
    let n = trace.len().saturating_sub(start);
    if n < 2 {
        return Err(Error::SeriesTooShort { needed: start + 2, got: trace.len() }.into());
    }
    let fitted = FittedPredictor::fit(&trace, &pc, start)?;
    let pred = fitted.predict_window(&trace, n, pc.epsilon)?;
    let score = score_window(&trace, start, &pred, pc.epsilon, cfg.sweep.blocklength)?;
    let actual = trace.ipv.values();
    let t0 = trace.ipv.tti_start();
    write_atomic(&cli.output_dir, "predictions.csv", |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["tti", "actual_ipv", "predicted_ipv", "predicted_sinr", "violated"]).map_err(csv_err)?;
        for k in 0..n {
            let t = start + k;
            out.write_record([
                (t0 + t as i64).to_string(),
                actual[t].to_string(),
                pred.ipv[k].to_string(),
                pred.sinr[k].to_string(),
                u8::from(pred.ipv[k] < actual[t]).to_string(),
            ])
            .map_err(csv_err)?;
        }
        out.flush().map_err(csv_err)
    })?;
    write_meta(
        &cli.output_dir,
        "predictions.csv",
        "predict",
        cfg,
        json!({ "trace": args.trace, "method": pc, "theta": score.theta, "avg_se": score.avg_se }),
    )?;
    println!("{} eps={} L={}: theta={:.3e} avg_se={:.4}", pc.label(), pc.epsilon, start, score.theta, score.avg_se);
    Ok(())
}

fn cmd_sweep(cli: &Cli, cfg: &RunConfig, trace_path: &Path) -> CliResult<()> {
    let trace = read_trace(trace_path, &cfg.network)?;
    let records = run_sweep(&trace, &cfg.methods, &cfg.sweep, cfg.network.seed)?;
    write_atomic(&cli.output_dir, "results.csv", |w| Ok(write_results_csv(&records, w)?))?;
    write_meta(&cli.output_dir, "results.csv", "sweep", cfg, json!({ "trace": trace_path }))?;
    log::info!("wrote {} sweep records", records.len());
    Ok(())
}

fn cmd_amise(cli: &Cli, cfg: &RunConfig) -> CliResult<()> {
    let rows = amise_curves(&cfg.amise)?;
    write_atomic(&cli.output_dir, "amise.csv", |w| {
        let mut out = csv::Writer::from_writer(w);
        for r in &rows {
            out.serialize(r).map_err(csv_err)?;
        }
        out.flush().map_err(csv_err)
    })?;
    write_meta(&cli.output_dir, "amise.csv", "amise", cfg, json!({ "seed": cfg.amise.seed }))
}

fn cmd_complexity(cli: &Cli, cfg: &RunConfig, args: &ComplexityArgs) -> CliResult<()> {
    let params = ComplexityParams {
        mu: args.mu,
        eta0: args.eta0,
        eta: args.eta,
        subset_sizes: args.subset_sizes.clone(),
        n_it: args.n_it,
    };
    let rows = Method::ALL
        .iter()
        .map(|&m| Ok((m, complexity_totals(m, &params)?)))
        .collect::<CliResult<Vec<_>>>()?;
    write_atomic(&cli.output_dir, "complexity.csv", |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["method", "mu", "eta0", "eta", "subsets", "n_it", "samples", "op_count"]).map_err(csv_err)?;
        let total: usize = params.subset_sizes.iter().sum();
        for (m, ops) in &rows {
            out.write_record([
                m.as_str().to_string(),
                params.mu.to_string(),
                params.eta0.to_string(),
                params.eta.to_string(),
                params.subset_sizes.len().to_string(),
                params.n_it.to_string(),
                total.to_string(),
                ops.to_string(),
            ])
            .map_err(csv_err)?;
        }
        out.flush().map_err(csv_err)
    })?;
    write_meta(&cli.output_dir, "complexity.csv", "complexity", cfg, json!({ "params": format!("{params:?}") }))
}

fn run(cli: &Cli) -> CliResult<()> {
    let cfg = load_config(cli.config.as_deref(), cli.seed)?;
    match &cli.command {
        Command::Simulate => cmd_simulate(cli, &cfg),
        Command::Fit(a) => cmd_fit(cli, &cfg, a),
        Command::Predict(a) => cmd_predict(cli, &cfg, a),
        Command::Sweep { trace } => cmd_sweep(cli, &cfg, trace),
        Command::Amise => cmd_amise(cli, &cfg),
        Command::Complexity(a) => cmd_complexity(cli, &cfg, a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sbsse: {e}");
            ExitCode::from(e.code())
        }
    }
}
