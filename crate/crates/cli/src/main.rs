use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use hypergiant::components::connected_components;
use hypergiant::exploration::{
    decompose, explore_graph, explore_stream, Backend, ExplorationConfig, Selection, Stop,
};
use hypergiant::montecarlo::{
    self, write_clt_csv, write_coupling_csv, write_martingale_csv, write_tail_csv,
    ExperimentReport, ExperimentSpec, Mode,
};
use hypergiant::sampler::sample_hypergraph;
use hypergiant::theory::numeric_c;
use hypergiant::{Error, Hypergraph, ModelParams, RngStream, TheoryConstants};

const THREADS_ENV: &str = "HYPERGIANT_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "hypergiant",
    version,
    about = "Giant component of random d-uniform hypergraphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Limiting constants as JSON.
    Theory {
        #[arg(long)]
        d: u32,
        #[arg(long)]
        lambda: f64,
        /// Also report the finite-N variance sum.
        #[arg(long = "N")]
        n: Option<u64>,
    },
    /// Sample G^d(N, p) and write it in HGR v1.
    Sample {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Component sizes of an HGR file.
    Components {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One exploration run: summary JSON and optional trace CSV.
    Explore {
        #[arg(long, value_enum)]
        backend: BackendArg,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 1)]
        k: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Keep exploring up to this step instead of stopping at the first zero.
        #[arg(long)]
        horizon: Option<u64>,
        #[arg(long, value_enum, default_value_t = SelectionArg::MinIndex)]
        selection: SelectionArg,
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replicated experiments.
    Mc {
        #[command(subcommand)]
        kind: McKind,
    },
}

#[derive(Subcommand, Debug)]
enum McKind {
    Clt(McArgs),
    Tail(McArgs),
    Martingale(McArgs),
    Coupling(McArgs),
}

#[derive(Args, Debug, Clone, Copy)]
struct ModelArgs {
    #[arg(long)]
    d: u32,
    #[arg(long)]
    lambda: f64,
    #[arg(long = "N")]
    n: u64,
}

impl ModelArgs {
    fn params(&self) -> hypergiant::Result<ModelParams> {
        ModelParams::new(self.d, self.lambda, self.n)
    }
}

#[derive(Args, Debug)]
struct McArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 1000)]
    reps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; overrides HYPERGIANT_THREADS. 0 uses all cores.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum, default_value_t = ModeArg::Proxy)]
    mode: ModeArg,
    #[arg(long, default_value_t = 0.6)]
    alpha: f64,
    /// Deviation levels, comma separated or repeated.
    #[arg(long, value_delimiter = ',')]
    y: Vec<f64>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    zeta: f64,
    #[arg(long, default_value_t = 0.35)]
    gamma: f64,
    #[arg(long, default_value_t = 0.45)]
    xi: f64,
    /// Output format on the main output.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report JSON destination.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum BackendArg {
    Graph,
    Stream,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum SelectionArg {
    MinIndex,
    Fifo,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum ModeArg {
    Exact,
    Proxy,
}

/// A failure with its exit code: 1 for bad input, 2 for runtime trouble.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(flag: &str, reason: impl std::fmt::Display) -> Self {
        Self {
            code: 1,
            message: format!("{flag}: {reason}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match &e {
            Error::InvalidParameter { name, reason } => match flag_of(name) {
                Some(flag) => Failure::usage(&flag, reason),
                None => Failure {
                    code: 1,
                    message: e.to_string(),
                },
            },
            Error::Format { .. } => Failure::usage("--in", &e),
            Error::Solver(_) | Error::Io(_) => Failure {
                code: 2,
                message: e.to_string(),
            },
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure {
            code: 2,
            message: e.to_string(),
        }
    }
}

fn flag_of(name: &str) -> Option<String> {
    match name {
        "n" | "N" => Some("--N".into()),
        "d" | "lambda" | "k" | "alpha" | "gamma" | "xi" | "zeta" | "reps" | "y" | "threads"
        | "horizon" => Some(format!("--{name}")),
        _ => None,
    }
}

type Outcome = Result<(), Failure>;

fn create(path: &Path, flag: &str) -> Result<Box<dyn Write>, Failure> {
    File::create(path)
        .map(|f| Box::new(BufWriter::new(f)) as Box<dyn Write>)
        .map_err(|e| Failure::usage(flag, format!("cannot create {}: {e}", path.display())))
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    match path {
        Some(p) => create(p, "--out"),
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    }
}

fn write_json<W: Write>(mut out: W, value: &impl serde::Serialize) -> Outcome {
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| Failure {
        code: 2,
        message: e.to_string(),
    })?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn theory(d: u32, lambda: f64, n: Option<u64>) -> Outcome {
    let consts = TheoryConstants::compute(d, lambda)?;
    let params = n.map(|n| ModelParams::new(d, lambda, n)).transpose()?;
    let mut value = serde_json::to_value(consts).expect("constants serialize");
    if let Some(params) = params {
        let obj = value.as_object_mut().expect("object");
        obj.insert("N".into(), Value::from(params.n));
        obj.insert("numeric_c".into(), Value::from(numeric_c(&params)?));
    }
    write_json(io::stdout().lock(), &value)
}

fn sample(model: ModelArgs, seed: u64, out: Option<&Path>) -> Outcome {
    let params = model.params()?;
    let out = sink(out)?;
    let h = sample_hypergraph(&params, &mut RngStream::new(seed, 0))?;
    h.write_hgr(out)?;
    Ok(())
}

fn components(input: &Path, format: Format, out: Option<&Path>) -> Outcome {
    let file = File::open(input)
        .map_err(|e| Failure::usage("--in", format!("cannot read {}: {e}", input.display())))?;
    let h = Hypergraph::read_hgr(BufReader::new(file))?;
    let out = sink(out)?;
    let summary = connected_components(&h);
    match format {
        Format::Csv => summary.write_histogram_csv(out)?,
        Format::Json => write_json(out, &summary)?,
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn explore(
    backend: BackendArg,
    model: ModelArgs,
    k: u32,
    seed: u64,
    horizon: Option<u64>,
    selection: SelectionArg,
    trace: Option<&Path>,
    out: Option<&Path>,
) -> Outcome {
    let params = model.params()?;
    let backend = match backend {
        BackendArg::Graph => Backend::Graph,
        BackendArg::Stream => Backend::Stream,
    };
    let selection = match selection {
        SelectionArg::MinIndex => Selection::MinIndex,
        SelectionArg::Fifo => Selection::Fifo,
    };
    let stop = horizon.map_or(Stop::HitZero, Stop::RunToHorizon);
    let cfg = ExplorationConfig::new(k, backend)
        .with_stop(stop)
        .with_selection(selection);
    let trace_out = trace.map(|p| create(p, "--trace")).transpose()?;
    let out = sink(out)?;
    let mut rng = RngStream::new(seed, 0);
    let tr = match backend {
        Backend::Graph => explore_graph(&sample_hypergraph(&params, &mut rng)?, &cfg)?,
        Backend::Stream => explore_stream(&params, &cfg, &mut rng)?,
    };
    let tr = decompose(&tr, &params)?;
    if let Some(w) = trace_out {
        tr.write_csv(w)?;
    }
    write_json(out, &tr.summary())
}

fn resolve_threads(flag: Option<usize>) -> Result<usize, Failure> {
    if let Some(t) = flag {
        return Ok(t);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| {
            Failure::usage(THREADS_ENV, format!("expected a thread count, got {v:?}"))
        }),
        Err(_) => Ok(0),
    }
}

fn mc(kind: McKind) -> Outcome {
    let (name, args) = match &kind {
        McKind::Clt(a) => ("clt", a),
        McKind::Tail(a) => ("tail", a),
        McKind::Martingale(a) => ("martingale", a),
        McKind::Coupling(a) => ("coupling", a),
    };
    let mut spec = ExperimentSpec::new(args.model.params()?, args.reps);
    spec.alpha = args.alpha;
    spec.y_grid = args.y.clone();
    spec.zeta = args.zeta;
    spec.gamma_exp = args.gamma;
    spec.xi_exp = args.xi;
    spec.mode = match args.mode {
        ModeArg::Exact => Mode::Exact,
        ModeArg::Proxy => Mode::Proxy,
    };
    spec.master_seed = args.seed;
    spec.threads = resolve_threads(args.threads)?;
    spec.validate()?;
    if name == "tail" && spec.y_grid.is_empty() {
        return Err(Failure::usage(
            "--y",
            "the tail experiment needs at least one level",
        ));
    }
    let report_out = args
        .report
        .as_deref()
        .map(|p| create(p, "--report"))
        .transpose()?;
    let out = sink(args.out.as_deref())?;

    let report: ExperimentReport = match name {
        "clt" => montecarlo::clt_report(&spec)?,
        "tail" => montecarlo::tail_report(&spec)?,
        "martingale" => montecarlo::martingale_report(&spec)?,
        _ => montecarlo::coupling_report(&spec)?,
    };
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    eprintln!(
        "{name}: N={} reps={} seed={} in {:.2}s",
        spec.params.n, spec.reps, spec.master_seed, report.provenance.wall_time_s
    );
    if let Some(w) = report_out {
        write_json(w, &report)?;
    }
    match args.format {
        Format::Json => write_json(out, &report),
        Format::Csv => {
            match name {
                "clt" => write_clt_csv(&report.clt, out)?,
                "tail" => write_tail_csv(&report.tail, out)?,
                "martingale" => write_martingale_csv(&report.martingale, out)?,
                _ => write_coupling_csv(&report.coupling, out)?,
            }
            Ok(())
        }
    }
}

fn dispatch(cli: Cli) -> Outcome {
    match cli.command {
        Command::Theory { d, lambda, n } => theory(d, lambda, n),
        Command::Sample { model, seed, out } => sample(model, seed, out.as_deref()),
        Command::Components { input, format, out } => components(&input, format, out.as_deref()),
        Command::Explore {
            backend,
            model,
            k,
            seed,
            horizon,
            selection,
            trace,
            out,
        } => explore(
            backend,
            model,
            k,
            seed,
            horizon,
            selection,
            trace.as_deref(),
            out.as_deref(),
        ),
        Command::Mc { kind } => mc(kind),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
