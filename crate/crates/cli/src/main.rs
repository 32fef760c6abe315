use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use attractor_core::engine::checkpoint::read_checkpoint;
use attractor_core::metrics::{align, labels_for_graph, load_communities, load_labels, MetricReport};
use attractor_core::partition::partition_stats;
use attractor_core::{
    extract_communities, load_edge_list, run_from, ConfigError, EngineState, Graph, GraphError, Mode,
    PartitionScheme, PipelineError, RunConfig, RunHooks, SimilarityForm,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "attractor", version, about = "Distance-dynamics community detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect communities in an edge list.
    Run(RunArgs),
    /// Score a communities file against labels or graph structure.
    Eval(EvalArgs),
    /// Show how the graph splits into partition subgraphs.
    PartitionStats(StatsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Sequential,
    Windowed,
    Partitioned,
}

#[derive(Clone, Copy, ValueEnum)]
enum SimilarityArg {
    Closed,
    Open,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "partitioned")]
    mode: ModeArg,
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    #[arg(long, default_value_t = 15)]
    window: usize,
    #[arg(long, default_value_t = 0.5)]
    tau: f64,
    #[arg(long, default_value_t = 10_000)]
    gamma: usize,
    #[arg(long, default_value_t = 20)]
    partitions: u32,
    /// Defaults to the number of available cores.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value_t = 30)]
    reducers: usize,
    #[arg(long, default_value_t = 1000)]
    max_iters: u64,
    #[arg(long, value_enum, default_value = "closed")]
    similarity: SimilarityArg,
    #[arg(long, default_value = ".")]
    output_dir: PathBuf,
    /// `vertex label` file; adds Purity, NMI and ARI to the report.
    #[arg(long)]
    ground_truth: Option<PathBuf>,
    /// Resumed from if present, rewritten after every iteration.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// One community per line.
    #[arg(long)]
    communities: PathBuf,
    #[arg(long, required_unless_present = "input")]
    ground_truth: Option<PathBuf>,
    /// Edge list for modularity and normalized cut.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 20)]
    partitions: u32,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(format!("configuration error: {e}"))
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Config(c) => c.into(),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

fn runtime(context: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Runtime(format!("{}: {e}", context.display()))
}

fn load_graph(path: &Path) -> Result<Graph, CliError> {
    let file = File::open(path).map_err(runtime(path))?;
    let (g, _) = load_edge_list(BufReader::new(file))
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    Ok(g)
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), CliError> {
    let file = File::create(path).map_err(runtime(path))?;
    let mut out = BufWriter::new(file);
    f(&mut out).and_then(|_| out.flush()).map_err(runtime(path))
}

fn to_json(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json values serialize");
    s.push('\n');
    s
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let defaults = RunConfig::default();
    let workers = args.workers.unwrap_or(defaults.workers);
    let config = RunConfig {
        mode: match args.mode {
            ModeArg::Sequential => Mode::Sequential,
            ModeArg::Windowed => Mode::Windowed,
            ModeArg::Partitioned => Mode::Partitioned,
        },
        lambda: args.lambda,
        similarity: match args.similarity {
            SimilarityArg::Closed => SimilarityForm::Closed,
            SimilarityArg::Open => SimilarityForm::Open,
        },
        window: args.window,
        tau: args.tau,
        gamma: args.gamma,
        partitions: args.partitions,
        reducers: args.reducers.min(workers),
        workers,
        max_iters: args.max_iters,
        seed: 0,
    };
    config.validate()?;

    let g = load_graph(&args.input)?;
    let truth = match &args.ground_truth {
        Some(path) => {
            let file = File::open(path).map_err(runtime(path))?;
            let labels = load_labels(BufReader::new(file)).map_err(|e| CliError::Runtime(e.to_string()))?;
            Some(labels_for_graph(&g, &labels).map_err(|missing| {
                CliError::Runtime(format!("ground truth lacks vertices {missing:?}"))
            })?)
        }
        None => None,
    };

    let state = match &args.checkpoint {
        Some(path) if path.exists() => {
            let file = File::open(path).map_err(runtime(path))?;
            read_checkpoint(BufReader::new(file), &g).map_err(PipelineError::from)?
        }
        _ => EngineState::initial(&g, &config.policy()),
    };
    let hooks = RunHooks {
        observer: None,
        checkpoint: args.checkpoint.clone(),
    };
    let outcome = run_from(&g, &config, state, hooks)?;

    fs::create_dir_all(&args.output_dir).map_err(runtime(&args.output_dir))?;
    let mut report = json!({
        "input": args.input.file_name().map(|f| f.to_string_lossy().into_owned()),
        "vertices": g.vertex_count(),
        "edges": g.edge_count(),
        "config": {
            "mode": config.mode,
            "lambda": config.lambda,
            "similarity": config.similarity,
            "window": config.window,
            "tau": config.tau,
            "gamma": config.gamma,
            "partitions": config.partitions,
            "max_iters": config.max_iters,
        },
        "iterations": {
            "total": outcome.iterations,
            "mapreduce": outcome.mr_iterations,
            "fallback": outcome.fallback_iterations,
        },
        "converged": outcome.converged,
        "emissions": outcome.emissions,
        "communities": Value::Null,
    });

    if outcome.converged {
        let partition = extract_communities(&g, &outcome.distances).map_err(|e| CliError::Runtime(e.to_string()))?;
        write_file(&args.output_dir.join("communities.txt"), |out| partition.write_communities(&g, out))?;
        write_file(&args.output_dir.join("assignment.txt"), |out| partition.write_assignment(&g, out))?;
        report["communities"] = json!(partition.len());
        let mut metrics = MetricReport::structural(&g, &partition.assignment).map_err(|e| CliError::Runtime(e.to_string()))?;
        if let Some(truth) = &truth {
            let labelled = MetricReport::labelled(&partition.assignment, truth).map_err(|e| CliError::Runtime(e.to_string()))?;
            metrics = labelled.merge(metrics);
        }
        report["metrics"] = serde_json::to_value(&metrics).expect("metrics serialize");
        print!("{metrics}");
    } else {
        eprintln!("warning: {} edges did not converge within {} iterations", live_count(&outcome.distances), config.max_iters);
    }
    println!("iterations={}", outcome.iterations);

    let seconds = |d: std::time::Duration| d.as_secs_f64();
    let timings = json!({
        "workers": config.workers,
        "reducers": config.reducers,
        "star_graphs_s": seconds(outcome.timings.star_graphs),
        "interactions_s": seconds(outcome.timings.interactions),
        "update_s": seconds(outcome.timings.update),
        "fallback_s": seconds(outcome.timings.fallback),
        "total_s": seconds(outcome.timings.total),
    });
    let report_path = args.output_dir.join("report.json");
    fs::write(&report_path, to_json(&report)).map_err(runtime(&report_path))?;
    let timings_path = args.output_dir.join("timings.json");
    fs::write(&timings_path, to_json(&timings)).map_err(runtime(&timings_path))?;
    Ok(())
}

fn live_count(distances: &[f64]) -> usize {
    distances.iter().filter(|&&d| d > 0.0 && d < 1.0).count()
}

fn cmd_eval(args: EvalArgs) -> Result<(), CliError> {
    let file = File::open(&args.communities).map_err(runtime(&args.communities))?;
    let pred = load_communities(BufReader::new(file)).map_err(|e| CliError::Runtime(e.to_string()))?;
    let mut report = MetricReport::default();

    if let Some(path) = &args.ground_truth {
        let file = File::open(path).map_err(runtime(path))?;
        let truth = load_labels(BufReader::new(file)).map_err(|e| CliError::Runtime(e.to_string()))?;
        let (p, t) = align(&pred, &truth).map_err(|(only_pred, only_truth)| {
            CliError::Runtime(format!(
                "vertex sets differ: missing from ground truth {only_pred:?}, missing from communities {only_truth:?}"
            ))
        })?;
        report = MetricReport::labelled(&p, &t).map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    if let Some(path) = &args.input {
        let g = load_graph(path)?;
        let labels = labels_for_graph(&g, &pred)
            .map_err(|missing| CliError::Runtime(format!("communities file lacks vertices {missing:?}")))?;
        let structural = MetricReport::structural(&g, &labels).map_err(|e| CliError::Runtime(e.to_string()))?;
        report = if args.ground_truth.is_some() { report.merge(structural) } else { structural };
    }
    if args.json {
        print!("{}", to_json(&serde_json::to_value(&report).expect("metrics serialize")));
    } else {
        print!("{report}");
    }
    Ok(())
}

fn cmd_partition_stats(args: StatsArgs) -> Result<(), CliError> {
    let scheme = PartitionScheme::modulo(args.partitions)?;
    let file = File::open(&args.input).map_err(runtime(&args.input))?;
    let g = match load_edge_list(BufReader::new(file)) {
        Ok((g, _)) => g,
        Err(GraphError::Empty) => Graph::from_edges(0, &[]),
        Err(e) => return Err(CliError::Runtime(e.to_string())),
    };
    let stats = partition_stats(&g, &scheme);
    print!("{}", to_json(&serde_json::to_value(&stats).expect("stats serialize")));
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Eval(args) => cmd_eval(args),
        Command::PartitionStats(args) => cmd_partition_stats(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
