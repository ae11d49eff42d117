//! `graphpool`: generate graphs, pool them and run the comparison experiments.
//!
//! Every command prints its fully resolved command line as a `# runspec:`
//! first line. Runs that fail inside a sweep are reported in the output and
//! do not change the exit status; invalid configuration exits with 1.

mod runspec;
mod source;

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use graphpool::eval::{
    loss_curve_svg, run_sweep, spectra_svg, spectral_signal, storage_probe, structure_stats, write_reports_csv,
    write_storage_csv, ExperimentKind, ExperimentReport, Job, RunConfig, RunStatus, SweepOptions,
};
use graphpool::graph::{
    build_erdos_renyi, build_grid2d, build_ring, build_sensor, save_graph, write_graph, Graph, GraphError,
};
use graphpool::pooling::pool;
use graphpool::registry::{build_operator, OpArgs, OPERATOR_IDS};
use graphpool::trainable::{
    gradient_check, train, write_loss_curve, Objective, ReconTarget, SpectralLoss, TrainConfig,
};

use runspec::RunSpec;
use source::{graph_label, resolve_graph, DEFAULT_ER_P};

#[derive(Parser)]
#[command(name = "graphpool", version, about = "Graph pooling operators and their evaluation")]
struct Cli {
    /// Seed for generators, operator initialisation and randomised choices.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated graph in the text format.
    Gen(GenArgs),
    /// Pool one graph with one operator and print a summary.
    Pool(PoolArgs),
    /// Run an experiment sweep.
    Eval {
        #[command(subcommand)]
        kind: EvalKind,
    },
    /// Train a trainable operator and write its loss curve.
    Train(TrainArgs),
    /// Compare analytic and finite-difference gradients.
    Gradcheck(GradcheckArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Generator {
    Grid2d,
    Ring,
    Sensor,
    Er,
}

#[derive(Args)]
struct GenArgs {
    generator: Generator,
    #[arg(long, default_value_t = 8)]
    rows: usize,
    #[arg(long, default_value_t = 8)]
    cols: usize,
    /// Node count for ring, sensor and er.
    #[arg(long, default_value_t = 64)]
    n: usize,
    /// Edge probability for er.
    #[arg(long, default_value_t = DEFAULT_ER_P)]
    p: f64,
    /// Output file; standard output when absent.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OperatorArgs {
    /// Operator id.
    #[arg(long)]
    op: String,
    /// Operator hyperparameter `key=value`; repeatable.
    #[arg(long = "op-arg")]
    op_args: Vec<String>,
    /// Shorthand for `--op-arg k=K`.
    #[arg(long)]
    k: Option<usize>,
}

impl OperatorArgs {
    fn items(&self) -> Vec<String> {
        let mut items = self.op_args.clone();
        if let Some(k) = self.k {
            items.push(format!("k={k}"));
        }
        items
    }

    fn record(&self, spec: &mut RunSpec) {
        spec.flag("op", &self.op);
        for a in self.items() {
            spec.flag("op-arg", a);
        }
    }
}

#[derive(Args)]
struct PoolArgs {
    #[command(flatten)]
    operator: OperatorArgs,
    /// Graph file or generator name.
    graph: String,
    /// Where to write the pooled graph.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum EvalKind {
    /// Reconstruct node coordinates through pooling and lifting.
    Ae(SweepArgs),
    /// Compare Laplacian quadratic forms and spectra.
    Spectral(SweepArgs),
    /// Count stored selection values on Erdős–Rényi graphs.
    Storage(StorageArgs),
}

#[derive(Args, Clone)]
struct TrainOverrides {
    /// Maximum training epochs.
    #[arg(long)]
    epochs: Option<usize>,
    /// Adam learning rate.
    #[arg(long)]
    lr: Option<f64>,
    /// Epochs without improvement before stopping.
    #[arg(long)]
    patience: Option<usize>,
    /// Weight of the auxiliary MinCut / DiffPool losses.
    #[arg(long)]
    aux_weight: Option<f64>,
}

impl TrainOverrides {
    fn apply(&self, mut cfg: TrainConfig, seed: u64) -> TrainConfig {
        cfg.seed = seed;
        cfg.max_epochs = self.epochs.unwrap_or(cfg.max_epochs);
        cfg.learning_rate = self.lr.unwrap_or(cfg.learning_rate);
        cfg.patience = self.patience.unwrap_or(cfg.patience);
        cfg.aux_weight = self.aux_weight.unwrap_or(cfg.aux_weight);
        cfg
    }

    fn record(cfg: &TrainConfig, spec: &mut RunSpec) {
        spec.flag("epochs", cfg.max_epochs)
            .flag("lr", cfg.learning_rate)
            .flag("patience", cfg.patience)
            .flag("aux-weight", cfg.aux_weight);
    }
}

#[derive(Args)]
struct SweepArgs {
    /// Graph files or generator names, comma separated or repeated.
    #[arg(long = "graph", value_delimiter = ',', required = true)]
    graphs: Vec<String>,
    /// Operator ids; all eight when absent.
    #[arg(long = "ops", alias = "op", value_delimiter = ',')]
    ops: Vec<String>,
    /// `key=value` for every operator or `op:key=value` for one; repeatable.
    #[arg(long = "op-arg")]
    op_args: Vec<String>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Per-run limit in seconds; slower runs are marked failed.
    #[arg(long, default_value_t = 600)]
    timeout: u64,
    #[command(flatten)]
    train: TrainOverrides,
    /// Output directory for the CSV and SVG plots; CSV goes to standard
    /// output when absent.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StorageArgs {
    /// Operator ids, comma separated.
    #[arg(long = "ops", alias = "op", value_delimiter = ',', required = true)]
    ops: Vec<String>,
    /// Erdős–Rényi node counts, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1000,2000,4000,8000")]
    sizes: Vec<usize>,
    /// Edge probability.
    #[arg(long, default_value_t = DEFAULT_ER_P)]
    p: f64,
    /// `key=value` for every operator or `op:key=value` for one; repeatable.
    #[arg(long = "op-arg")]
    op_args: Vec<String>,
    /// Output directory for `storage.csv`; standard output when absent.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Loss {
    Spectral,
    Ae,
}

impl Loss {
    fn kind(self) -> ExperimentKind {
        match self {
            Loss::Spectral => ExperimentKind::Spectral,
            Loss::Ae => ExperimentKind::Autoencoder,
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    operator: OperatorArgs,
    #[arg(long, value_enum, default_value = "spectral")]
    loss: Loss,
    #[command(flatten)]
    train: TrainOverrides,
    graph: String,
    /// Output directory for `loss.csv` and `loss.svg`; the curve goes to
    /// standard output when absent.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GradcheckArgs {
    #[command(flatten)]
    operator: OperatorArgs,
    #[arg(long, value_enum, default_value = "spectral")]
    loss: Loss,
    #[arg(long, default_value_t = 1.0)]
    aux_weight: f64,
    /// Parameters to probe, drawn at random.
    #[arg(long, default_value_t = 200)]
    samples: usize,
    /// Largest acceptable relative error; exceeding it exits with status 2.
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    graph: String,
}

/// Signal and objective an operator is trained on.
fn objective_for(g: &Graph, kind: ExperimentKind) -> Result<(Graph, Objective)> {
    Ok(match kind {
        ExperimentKind::Spectral => {
            let signal = spectral_signal(g)?;
            (g.with_features(signal.clone())?, Objective::Spectral(SpectralLoss::new(g, &signal)))
        }
        ExperimentKind::Autoencoder => {
            let x = g.coords().unwrap_or(g.features()).clone();
            (g.with_features(x.clone())?, Objective::Reconstruction(ReconTarget::new(g, &x)))
        }
    })
}

fn cmd_gen(seed: u64, a: &GenArgs) -> Result<()> {
    let (name, g) = match a.generator {
        Generator::Grid2d => ("grid2d", build_grid2d(a.rows, a.cols)?),
        Generator::Ring => ("ring", build_ring(a.n)?),
        Generator::Sensor => ("sensor", build_sensor(a.n, seed)?),
        Generator::Er => ("er", build_erdos_renyi(a.n, a.p, seed)?),
    };
    let mut spec = RunSpec::new(seed, &["gen", name]);
    match a.generator {
        Generator::Grid2d => spec.flag("rows", a.rows).flag("cols", a.cols),
        Generator::Ring | Generator::Sensor => spec.flag("n", a.n),
        Generator::Er => spec.flag("n", a.n).flag("p", a.p),
    };
    spec.flag_opt("out", a.out.as_ref().map(|p| p.display()));
    println!("{spec}");
    match &a.out {
        Some(p) => {
            save_graph(&g, p)?;
            println!("wrote {} (N={}, |E|={})", p.display(), g.n(), g.num_edges());
        }
        None => write_graph(&g, io::stdout().lock())?,
    }
    Ok(())
}

fn cmd_pool(seed: u64, a: &PoolArgs) -> Result<()> {
    let mut spec = RunSpec::new(seed, &["pool"]);
    a.operator.record(&mut spec);
    spec.flag_opt("out", a.out.as_ref().map(|p| p.display())).positional(&a.graph);
    println!("{spec}");
    let g = resolve_graph(&a.graph, seed)?;
    let args = OpArgs::parse(&a.operator.items())?;
    let op = build_operator(&a.operator.op, &g, &args, seed)?;
    let pooled = pool(&g, op.as_pooling())?;
    let stats = structure_stats(&pooled.a_pooled);
    let pooled_graph = pooled.to_graph()?;
    println!(
        "op={} n={} k={} edges={} density={:.6} median_weight={} storage={}",
        pooled.operator_id,
        g.n(),
        pooled.k(),
        pooled_graph.num_edges(),
        stats.edge_density,
        stats.median_weight.map_or("-".to_string(), |m| format!("{m:.6}")),
        pooled.sel.storage_count()
    );
    if let Some(p) = &a.out {
        save_graph(&pooled_graph, p)?;
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn file_stem_safe(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

fn write_plots(dir: &Path, reports: &[ExperimentReport]) -> Result<()> {
    let plots = dir.join("plots");
    fs::create_dir_all(&plots)?;
    for r in reports.iter().filter(|r| r.is_ok()) {
        let stem = format!("{}_{}_{}", r.experiment, file_stem_safe(&r.graph_name), r.operator_id);
        if !r.eig_before.is_empty() {
            let title = format!("{} on {}", r.operator_id, r.graph_name);
            fs::write(plots.join(format!("{stem}_spectra.svg")), spectra_svg(&r.eig_before, &r.eig_after, &title))?;
        }
        if !r.loss_curve.is_empty() {
            let title = format!("{} {} loss on {}", r.operator_id, r.experiment, r.graph_name);
            fs::write(plots.join(format!("{stem}_loss.svg")), loss_curve_svg(&r.loss_curve, &title))?;
        }
    }
    Ok(())
}

fn cmd_sweep(seed: u64, kind: ExperimentKind, a: &SweepArgs) -> Result<()> {
    let ops: Vec<String> =
        if a.ops.is_empty() { OPERATOR_IDS.iter().map(|s| s.to_string()).collect() } else { a.ops.clone() };
    if a.workers == 0 {
        bail!("--workers must be at least 1");
    }
    let train_cfg = a.train.apply(kind.train_config(), seed);
    train_cfg.validate()?;
    let mut spec = RunSpec::new(seed, &["eval", kind.name()]);
    spec.flag("graph", a.graphs.join(",")).flag("ops", ops.join(","));
    for item in &a.op_args {
        spec.flag("op-arg", item);
    }
    spec.flag("workers", a.workers).flag("timeout", a.timeout);
    TrainOverrides::record(&train_cfg, &mut spec);
    spec.flag_opt("out", a.out.as_ref().map(|p| p.display()));
    println!("{spec}");

    let mut jobs = Vec::new();
    for gspec in &a.graphs {
        let g = Arc::new(resolve_graph(gspec, seed)?);
        for op in &ops {
            let op_args = OpArgs::parse_for(&a.op_args, op)?;
            // Unknown ids and keys are configuration errors, not failed runs.
            build_operator(op, &g, &op_args, seed)?;
            jobs.push(Job {
                graph_name: graph_label(gspec),
                graph: g.clone(),
                operator_id: op.clone(),
                experiment: kind,
                config: RunConfig { op_args, train: train_cfg },
            });
        }
    }
    let reports = run_sweep(&jobs, &SweepOptions { workers: a.workers, timeout: Duration::from_secs(a.timeout) });
    match &a.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let path = dir.join(format!("{}.csv", kind.name()));
            write_reports_csv(&reports, io::BufWriter::new(fs::File::create(&path)?))?;
            write_plots(dir, &reports)?;
            for r in &reports {
                println!("{}", summary_line(r));
            }
            println!("wrote {}", path.display());
        }
        None => write_reports_csv(&reports, io::stdout().lock())?,
    }
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("-".to_string(), |v| format!("{v:.4e}"))
}

fn summary_line(r: &ExperimentReport) -> String {
    let status = match &r.status {
        RunStatus::Ok => "ok".to_string(),
        RunStatus::Failed(m) => format!("FAILED ({m})"),
    };
    match r.experiment {
        ExperimentKind::Autoencoder => format!(
            "{} {}: {status} k={} mse={} gamma={} mse<=gamma={}",
            r.graph_name,
            r.operator_id,
            r.k.map_or("-".into(), |k| k.to_string()),
            fmt_opt(r.mse),
            fmt_opt(r.gamma),
            r.mse_below_gamma().map_or("-".into(), |b| b.to_string())
        ),
        ExperimentKind::Spectral => format!(
            "{} {}: {status} k={} quad_loss={} density={} median_weight={}",
            r.graph_name,
            r.operator_id,
            r.k.map_or("-".into(), |k| k.to_string()),
            fmt_opt(r.quad_loss),
            fmt_opt(r.edge_density),
            fmt_opt(r.median_weight)
        ),
    }
}

fn cmd_storage(seed: u64, a: &StorageArgs) -> Result<()> {
    let mut spec = RunSpec::new(seed, &["eval", "storage"]);
    spec.flag("ops", a.ops.join(","))
        .flag("sizes", a.sizes.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(","))
        .flag("p", a.p);
    for item in &a.op_args {
        spec.flag("op-arg", item);
    }
    spec.flag_opt("out", a.out.as_ref().map(|p| p.display()));
    println!("{spec}");
    if a.sizes.is_empty() {
        bail!("--sizes needs at least one value");
    }
    let probe_graph = build_erdos_renyi(a.sizes[0].min(16), a.p, seed)?;
    let mut per_op = Vec::new();
    for op in &a.ops {
        let args = OpArgs::parse_for(&a.op_args, op)?;
        build_operator(op, &probe_graph, &args, seed)?;
        per_op.push((op, args));
    }
    let mut tables = Vec::new();
    for (op, args) in per_op {
        let t = storage_probe(op, &a.sizes, a.p, seed, &args)?;
        match t.slope {
            Some(s) => eprintln!("{op}: log-log slope {s:.3}"),
            None => eprintln!("{op}: single size, no slope"),
        }
        tables.push(t);
    }
    match &a.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let path = dir.join("storage.csv");
            write_storage_csv(&tables, io::BufWriter::new(fs::File::create(&path)?))?;
            for t in &tables {
                println!("{} slope={}", t.operator_id, t.slope.map_or("-".into(), |s| format!("{s:.3}")));
            }
            println!("wrote {}", path.display());
        }
        None => write_storage_csv(&tables, io::stdout().lock())?,
    }
    Ok(())
}

fn cmd_train(seed: u64, a: &TrainArgs) -> Result<()> {
    let kind = a.loss.kind();
    let cfg = a.train.apply(kind.train_config(), seed);
    let mut spec = RunSpec::new(seed, &["train"]);
    a.operator.record(&mut spec);
    spec.flag("loss", kind.name());
    TrainOverrides::record(&cfg, &mut spec);
    spec.flag_opt("out", a.out.as_ref().map(|p| p.display())).positional(&a.graph);
    println!("{spec}");
    let g = resolve_graph(&a.graph, seed)?;
    let (gx, objective) = objective_for(&g, kind)?;
    let args = OpArgs::parse(&a.operator.items())?;
    let mut op = build_operator(&a.operator.op, &gx, &args, seed)?;
    let Some(t) = op.trainable_mut() else {
        bail!("operator '{}' has no trainable parameters", a.operator.op);
    };
    let outcome = train(t, &gx, &objective, &cfg)?;
    println!(
        "op={} epochs={} best_loss={:.6e} best_epoch={} stopped_early={}",
        a.operator.op,
        outcome.curve.len(),
        outcome.best_loss,
        outcome.best_epoch,
        outcome.stopped_early
    );
    match &a.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            write_loss_curve(&outcome.curve, io::BufWriter::new(fs::File::create(dir.join("loss.csv"))?))?;
            let title = format!("{} {} loss", a.operator.op, kind.name());
            fs::write(dir.join("loss.svg"), loss_curve_svg(&outcome.curve, &title))?;
            println!("wrote {}", dir.join("loss.csv").display());
        }
        None => write_loss_curve(&outcome.curve, io::stdout().lock())?,
    }
    Ok(())
}

/// Returns whether the check passed.
fn cmd_gradcheck(seed: u64, a: &GradcheckArgs) -> Result<bool> {
    let kind = a.loss.kind();
    let mut spec = RunSpec::new(seed, &["gradcheck"]);
    a.operator.record(&mut spec);
    spec.flag("loss", kind.name())
        .flag("aux-weight", a.aux_weight)
        .flag("samples", a.samples)
        .flag("tol", a.tol)
        .positional(&a.graph);
    println!("{spec}");
    let g = resolve_graph(&a.graph, seed)?;
    let (gx, objective) = objective_for(&g, kind)?;
    let args = OpArgs::parse(&a.operator.items())?;
    let mut op = build_operator(&a.operator.op, &gx, &args, seed)?;
    let Some(t) = op.trainable_mut() else {
        bail!("operator '{}' has no trainable parameters", a.operator.op);
    };
    let report = gradient_check(t, &gx, &objective, a.aux_weight, a.samples, seed)?;
    let pass = report.max_rel_error <= a.tol;
    println!(
        "op={} checked={} max_rel_error={:.3e} {}",
        a.operator.op,
        report.checked,
        report.max_rel_error,
        if pass { "PASS" } else { "FAIL" }
    );
    if let Some((name, r, c, an, num)) = report.worst {
        println!("worst {name}[{r},{c}] analytic={an:.6e} numeric={num:.6e}");
    }
    Ok(pass)
}

fn run(cli: &Cli) -> Result<ExitCode> {
    let seed = cli.seed;
    match &cli.command {
        Command::Gen(a) => cmd_gen(seed, a)?,
        Command::Pool(a) => cmd_pool(seed, a)?,
        Command::Eval { kind: EvalKind::Ae(a) } => cmd_sweep(seed, ExperimentKind::Autoencoder, a)?,
        Command::Eval { kind: EvalKind::Spectral(a) } => cmd_sweep(seed, ExperimentKind::Spectral, a)?,
        Command::Eval { kind: EvalKind::Storage(a) } => cmd_storage(seed, a)?,
        Command::Train(a) => cmd_train(seed, a)?,
        Command::Gradcheck(a) => {
            if !cmd_gradcheck(seed, a)? {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// A closed standard output (`graphpool gen ring | head`) is not an error.
fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        let io = c
            .downcast_ref::<io::Error>()
            .or_else(|| match c.downcast_ref::<GraphError>() {
                Some(GraphError::Io(io)) => Some(io),
                _ => None,
            })
            .or_else(|| match c.downcast_ref::<csv::Error>().map(|e| e.kind()) {
                Some(csv::ErrorKind::Io(io)) => Some(io),
                _ => None,
            });
        io.is_some_and(|io| io.kind() == io::ErrorKind::BrokenPipe)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
    match run(&cli) {
        Ok(code) => code,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
