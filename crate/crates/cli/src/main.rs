//! `kronmom`: feature counting, expected moments, fitting, sampling and
//! batch experiments for stochastic Kronecker graphs.
//!
//! Worker threads come from `KRONMOM_THREADS` (default 1). Exit status is 0
//! on success, 1 for bad input or arguments, 2 for internal failures.

use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use kronmom::estimator::fit_leading_with_step;
use kronmom::report::write_table;
use kronmom::{
    choose_r, count_features, dominance_exponent, expected_features, fit_best, fit_direct,
    fit_grid, fit_partial, load_edge_list, read_observed, run_experiment, ExperimentConfig,
    FeatureCounts, FeatureSet, FitMethod, FitOptions, FitResult, GeneratorJob, KroneckerParams,
    ObjectiveSpec, TableRow,
};

const THREADS_VAR: &str = "KRONMOM_THREADS";
const GENERATE_WARN_POWER: u32 = 15;

#[derive(Parser)]
#[command(
    name = "kronmom",
    version,
    about = "Method-of-moments tools for stochastic Kronecker graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Count edges, hairpins, tripins and triangles of an edge list.
    Features {
        path: PathBuf,
        /// Treat lines as directed arcs and merge reciprocal pairs.
        #[arg(long)]
        directed: bool,
    },
    /// Closed-form expected feature counts.
    Expected(ParamArgs),
    /// Fit (a, b, c) to an edge list or a counts JSON file.
    Fit(FitArgs),
    /// Sample a graph by flipping every coin.
    Generate {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a TOML experiment config and write CSV tables.
    Experiment {
        config: PathBuf,
        /// Overrides the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ParamArgs {
    #[arg(long)]
    a: f64,
    #[arg(long)]
    b: f64,
    #[arg(long)]
    c: f64,
    #[arg(long)]
    r: u32,
}

impl ParamArgs {
    fn params(&self) -> Result<KroneckerParams, Failure> {
        KroneckerParams::as_given(self.a, self.b, self.c, self.r).map_err(user)
    }
}

#[derive(Args)]
struct FitArgs {
    /// Edge list, or a JSON file as printed by `kronmom features`.
    input: PathBuf,
    #[arg(long, default_value = "dsq-f2")]
    objective: String,
    #[arg(long, default_value = "best")]
    method: FitMethod,
    /// `all`, or a comma-separated subset such as `edges,hairpins,tripins`.
    #[arg(long, default_value = "all")]
    features: FeatureSet,
    /// Kronecker power; defaults to ceil(log2(vertices)).
    #[arg(long)]
    r: Option<u32>,
    #[arg(long, default_value_t = FitOptions::default().starts)]
    starts: usize,
    #[arg(long, default_value_t = FitOptions::default().grid_points)]
    grid_points: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the table rows (source and fit) as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    directed: bool,
}

enum Failure {
    User(anyhow::Error),
    Internal(anyhow::Error),
}

fn user(e: impl Into<anyhow::Error>) -> Failure {
    Failure::User(e.into())
}

fn internal(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Internal(e.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = std::panic::catch_unwind(|| setup_threads().and_then(|()| run(cli)));
    match outcome {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(Failure::User(e))) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Ok(Err(Failure::Internal(e))) => {
            eprintln!("internal error: {e:#}");
            ExitCode::from(2)
        }
        Err(_) => ExitCode::from(2),
    }
}

fn setup_threads() -> Result<(), Failure> {
    let threads = match std::env::var(THREADS_VAR) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| {
                user(anyhow!(
                    "{THREADS_VAR} must be a positive integer, got {v:?}"
                ))
            })?,
        Err(_) => 1,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(internal)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Features { path, directed } => cmd_features(&path, directed),
        Command::Expected(args) => cmd_expected(&args),
        Command::Fit(args) => cmd_fit(&args),
        Command::Generate { params, seed, out } => cmd_generate(&params, seed, out.as_deref()),
        Command::Experiment { config, out } => cmd_experiment(&config, out),
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(internal)?;
    let mut stdout = io::stdout().lock();
    writeln!(stdout, "{text}").map_err(internal)
}

fn cmd_features(path: &Path, directed: bool) -> Result<(), Failure> {
    let (graph, report) = load_edge_list(path, directed).map_err(user)?;
    eprintln!(
        "read {} pairs: {} loops dropped, {} duplicates dropped, {} reciprocal pairs merged",
        report.pairs_read,
        report.loops_dropped,
        report.duplicates_dropped,
        report.reciprocal_merged
    );
    let counts = count_features(&graph).map_err(user)?;
    print_json(&counts)
}

#[derive(Serialize)]
struct ExpectedOutput {
    a: f64,
    b: f64,
    c: f64,
    r: u32,
    vertices: u64,
    edges: f64,
    hairpins: f64,
    tripins: f64,
    triangles: f64,
    alpha: f64,
}

fn cmd_expected(args: &ParamArgs) -> Result<(), Failure> {
    let p = args.params()?;
    let e = expected_features(&p);
    print_json(&ExpectedOutput {
        a: p.a(),
        b: p.b(),
        c: p.c(),
        r: p.r(),
        vertices: p.num_vertices(),
        edges: e.edges,
        hairpins: e.hairpins,
        tripins: e.tripins,
        triangles: e.triangles,
        alpha: dominance_exponent(&p).alpha,
    })
}

#[derive(Serialize)]
struct FitOutput<'a> {
    input: &'a Path,
    observed: FeatureCounts,
    #[serde(flatten)]
    fit: FitResult,
}

fn cmd_fit(args: &FitArgs) -> Result<(), Failure> {
    let spec = args
        .objective
        .parse::<ObjectiveSpec>()
        .and_then(|s| s.with_features(args.features))
        .map_err(user)?;
    let observed = read_observed(&args.input, args.directed).map_err(user)?;
    let counts = observed.counts;
    let r = args.r.unwrap_or_else(|| choose_r(counts.vertices));
    let options = FitOptions {
        starts: args.starts,
        grid_points: args.grid_points,
        seed: args.seed,
        ..FitOptions::default()
    };
    let fit = match args.method {
        FitMethod::Direct => fit_direct(&counts, r, &spec, options.starts, options.seed),
        FitMethod::Grid => fit_grid(&counts, r, &spec, options.grid_points),
        FitMethod::Leading => fit_leading_with_step(&counts, r, &spec, options.leading_step),
        FitMethod::Best if spec.features.len() == 3 => fit_partial(&counts, r, &spec, &options),
        FitMethod::Best => fit_best(&counts, r, &spec, &options),
    }
    .map_err(user)?;
    for w in &fit.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(path) = &args.csv {
        let rows = [TableRow::source(&counts), TableRow::from_fit(&fit)];
        let file = std::fs::File::create(path)
            .with_context(|| format!("creating {}", path.display()))
            .map_err(user)?;
        write_table(&rows, io::BufWriter::new(file)).map_err(internal)?;
    }
    print_json(&FitOutput {
        input: &args.input,
        observed: counts,
        fit,
    })
}

fn cmd_generate(args: &ParamArgs, seed: u64, out: Option<&Path>) -> Result<(), Failure> {
    let params = args.params()?;
    if params.r() > GENERATE_WARN_POWER {
        eprintln!(
            "warning: r = {} sweeps {} cells; this may take a long time",
            params.r(),
            params.num_vertices() as u128 * (params.num_vertices() as u128 - 1) / 2
        );
    }
    let job = GeneratorJob::new(params, seed);
    let edges = match out {
        Some(path) => job.write_to_path(path),
        None => job.write_edge_list(io::BufWriter::new(io::stdout().lock())),
    };
    let edges = edges.map_err(|e| match e {
        kronmom::GenerateError::PowerTooLarge { .. } => user(e),
        other => internal(other),
    })?;
    eprintln!("wrote {edges} edges on {} vertices", params.num_vertices());
    Ok(())
}

fn cmd_experiment(path: &Path, out: Option<PathBuf>) -> Result<(), Failure> {
    let mut config = ExperimentConfig::from_path(path).map_err(user)?;
    if let Some(out) = out {
        config.output = out;
    }
    let report = run_experiment(&config).map_err(user)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let files = report.write_to(&config.output).map_err(internal)?;
    for f in files {
        println!("{}", f.display());
    }
    Ok(())
}
