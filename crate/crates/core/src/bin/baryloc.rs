//! Command-line driver: generate test networks, localize a network
//! document, or sweep a benchmark grid.
//!
//! Exit codes: 0 success, 1 input error, 2 numerical failure (singular or
//! divergent solve), 3 nothing localizable (the network had unknowns but
//! pruning removed them all). `BARYLOC_THREADS` caps worker parallelism.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use baryloc::benchmark::{self, ExperimentConfig};
use baryloc::document::{self, NetworkDocument, ResultDocument};
use baryloc::generate::{self, AnchorPolicy};
use baryloc::network::{SensorNetwork, SubsetCap};
use baryloc::pipeline::{self, LocalizeOptions, PipelineError, SolverChoice};
use baryloc::solver::{self, PathMode, SolveStatus, SolverError};

const EXIT_INPUT: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_NOTHING_LOCALIZABLE: u8 = 3;

#[derive(Parser)]
#[command(name = "baryloc", version, about = "Range-only network localization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic network and write it as a network document.
    Generate(GenerateArgs),
    /// Localize the unknown nodes of a network document.
    Localize(LocalizeArgs),
    /// Sweep sizes and subset caps over random networks, write a CSV report.
    Benchmark(BenchmarkArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    /// Regular grid, all nodes unknown until anchors are picked.
    Lattice,
    /// Grid with Gaussian jitter on every coordinate.
    PerturbedLattice,
    /// Isotropic Gaussian point cloud.
    Gaussian,
}

#[derive(Args)]
struct GenerateArgs {
    /// Point layout.
    #[arg(long, value_enum)]
    kind: Kind,
    /// Ambient dimension.
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Nodes per axis (lattice kinds).
    #[arg(long)]
    side: Option<usize>,
    /// Grid spacing (lattice kinds).
    #[arg(long, default_value_t = 1.0)]
    spacing: f64,
    /// Jitter standard deviation (perturbed-lattice).
    #[arg(long, default_value_t = 0.1)]
    noise_std: f64,
    /// Node count (gaussian).
    #[arg(long)]
    count: Option<usize>,
    /// Cloud standard deviation per axis (gaussian).
    #[arg(long, default_value_t = 1.0)]
    scale_std: f64,
    /// Sensing range shared by every node.
    #[arg(long)]
    range: f64,
    /// How many nodes become anchors.
    #[arg(long)]
    anchors: usize,
    /// Anchor selection policy: uniform-random or hull-mixed.
    #[arg(long, default_value = "uniform-random")]
    anchor_policy: AnchorPolicy,
    /// Master seed; every random choice derives from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path for the network document.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverKind {
    Direct,
    Iterative,
}

#[derive(Clone, Copy, ValueEnum)]
enum PathModeArg {
    Vertex,
    Edge,
}

#[derive(Args)]
struct LocalizeArgs {
    /// Network document to localize.
    #[arg(long = "in")]
    input: PathBuf,
    /// Per-branch cap on simplex sets, or "unlimited".
    #[arg(long, default_value = "unlimited")]
    cap: SubsetCap,
    #[arg(long, value_enum, default_value_t = SolverKind::Direct)]
    solver: SolverKind,
    /// Iteration budget (iterative solver).
    #[arg(long, default_value_t = solver::DEFAULT_MAX_ITERS)]
    max_iters: usize,
    /// Update-norm convergence tolerance (iterative solver).
    #[arg(long, default_value_t = solver::DEFAULT_ITER_TOL)]
    tol: f64,
    /// Report whether each unknown has this many disjoint paths to anchors;
    /// without a value the requirement defaults to dimension + 1.
    #[arg(long, num_args = 0..=1)]
    diagnostics: Option<Option<usize>>,
    /// Path notion for --diagnostics.
    #[arg(long, value_enum, default_value_t = PathModeArg::Vertex)]
    path_mode: PathModeArg,
    /// Output path for the result document.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Ambient dimension.
    #[arg(long, default_value_t = 3)]
    dim: usize,
    /// Node counts to sweep.
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    /// Networks drawn per size.
    #[arg(long, default_value_t = 20)]
    trials: usize,
    /// Anchor selections per network.
    #[arg(long, default_value_t = 3)]
    anchor_sets: usize,
    /// Subset caps to sweep, integers or "unlimited".
    #[arg(long, value_delimiter = ',', default_value = "unlimited")]
    caps: Vec<SubsetCap>,
    /// How many nodes become anchors.
    #[arg(long, default_value_t = 5)]
    anchors: usize,
    /// Anchor selection policy: uniform-random or hull-mixed.
    #[arg(long, default_value = "uniform-random")]
    anchor_policy: AnchorPolicy,
    /// Cloud standard deviation per axis.
    #[arg(long, default_value_t = 5.0)]
    scale_std: f64,
    /// Sensing range shared by every node.
    #[arg(long, default_value_t = 5.0)]
    range: f64,
    /// Master seed; every random choice derives from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path for the CSV report.
    #[arg(long)]
    out: PathBuf,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    fn numerical(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_NUMERICAL,
            message: message.into(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_INPUT,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(message) = configure_threads() {
        eprintln!("error: {message}");
        return ExitCode::from(EXIT_INPUT);
    }
    let outcome = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Localize(args) => cmd_localize(args),
        Command::Benchmark(args) => cmd_benchmark(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}

/// Honor BARYLOC_THREADS by sizing the global worker pool before any
/// parallel work runs.
fn configure_threads() -> Result<(), String> {
    let value = match std::env::var("BARYLOC_THREADS") {
        Ok(v) => v,
        Err(std::env::VarError::NotPresent) => return Ok(()),
        Err(e) => return Err(format!("BARYLOC_THREADS: {e}")),
    };
    let threads: usize = value
        .trim()
        .parse()
        .map_err(|_| format!("BARYLOC_THREADS must be a positive integer, got {value:?}"))?;
    if threads == 0 {
        return Err("BARYLOC_THREADS must be a positive integer, got \"0\"".into());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

fn require_positive(name: &str, value: f64) -> Result<(), Failure> {
    if !(value.is_finite() && value > 0.0) {
        return Err(Failure::input(format!(
            "--{name} must be positive and finite, got {value}"
        )));
    }
    Ok(())
}

fn cmd_generate(args: GenerateArgs) -> Result<(), Failure> {
    require_positive("range", args.range)?;
    let net = match args.kind {
        Kind::Lattice | Kind::PerturbedLattice => {
            if args.count.is_some() {
                return Err(Failure::input("--count only applies to --kind gaussian"));
            }
            let side = args
                .side
                .ok_or_else(|| Failure::input("--side is required for lattice kinds"))?;
            if side < 2 {
                return Err(Failure::input(format!("--side must be at least 2, got {side}")));
            }
            require_positive("spacing", args.spacing)?;
            let result = if matches!(args.kind, Kind::Lattice) {
                generate::gen_lattice(args.dim, side, args.spacing, args.range)
            } else {
                if !(args.noise_std.is_finite() && args.noise_std >= 0.0) {
                    return Err(Failure::input(format!(
                        "--noise-std must be non-negative and finite, got {}",
                        args.noise_std
                    )));
                }
                generate::gen_perturbed_lattice(
                    args.dim,
                    side,
                    args.spacing,
                    args.noise_std,
                    args.range,
                    generate::derive_seed(args.seed, &[1]),
                )
            };
            result.map_err(|e| Failure::input(e.to_string()))?
        }
        Kind::Gaussian => {
            if args.side.is_some() {
                return Err(Failure::input("--side only applies to lattice kinds"));
            }
            let count = args
                .count
                .ok_or_else(|| Failure::input("--count is required for --kind gaussian"))?;
            if count < args.dim + 2 {
                return Err(Failure::input(format!(
                    "--count must be at least dimension + 2 = {}, got {count}",
                    args.dim + 2
                )));
            }
            require_positive("scale-std", args.scale_std)?;
            generate::gen_gaussian(
                args.dim,
                count,
                args.scale_std,
                args.range,
                generate::derive_seed(args.seed, &[1]),
            )
            .map_err(|e| Failure::input(e.to_string()))?
        }
    };
    let net = generate::select_anchors(
        &net,
        args.anchors,
        args.anchor_policy,
        generate::derive_seed(args.seed, &[2]),
    )
    .map_err(|e| Failure::input(e.to_string()))?;
    NetworkDocument::from_network(&net)
        .save(&args.out)
        .map_err(|e| Failure::input(e.to_string()))?;
    println!(
        "wrote {} nodes ({} anchors), {} edges to {}",
        net.node_count(),
        net.anchor_ids().len(),
        net.edge_count(),
        args.out.display()
    );
    Ok(())
}

fn status_word(status: SolveStatus) -> &'static str {
    match status {
        SolveStatus::Solved => "solved",
        SolveStatus::Singular => "singular",
        SolveStatus::Diverged => "diverged",
    }
}

fn cmd_localize(args: LocalizeArgs) -> Result<(), Failure> {
    let net: SensorNetwork = NetworkDocument::load(&args.input)
        .and_then(|doc| doc.to_network())
        .map_err(|e| Failure::input(format!("{}: {e}", args.input.display())))?;

    let opts = LocalizeOptions {
        cap: args.cap,
        solver: match args.solver {
            SolverKind::Direct => SolverChoice::Direct,
            SolverKind::Iterative => SolverChoice::Iterative {
                max_iters: args.max_iters,
                tol: args.tol,
            },
        },
        diagnostic_paths: args
            .diagnostics
            .map(|k| k.unwrap_or(net.dimension() + 1)),
        path_mode: match args.path_mode {
            PathModeArg::Vertex => PathMode::VertexDisjoint,
            PathModeArg::Edge => PathMode::EdgeDisjoint,
        },
    };

    let out = pipeline::localize(&net, &opts).map_err(|e| match &e {
        PipelineError::Network(_) => Failure::input(e.to_string()),
        PipelineError::Solver(SolverError::TooFewAnchors { .. }) => {
            Failure::input(e.to_string())
        }
        _ => Failure::numerical(e.to_string()),
    })?;

    ResultDocument::from_output(net.dimension(), &out)
        .save(&args.out)
        .map_err(|e| Failure::input(e.to_string()))?;

    let unknowns = net.unknown_ids().len();
    println!(
        "status {}: localized {} of {} unknowns ({} pruned), rcond {:.3e}, wrote {}",
        status_word(out.result.status),
        out.result.positions.len(),
        unknowns,
        out.pruned.len(),
        out.result.rcond,
        args.out.display()
    );

    if unknowns > 0 && out.retained_unknowns.is_empty() {
        return Err(Failure {
            code: EXIT_NOTHING_LOCALIZABLE,
            message: "pruning removed every unknown node".into(),
        });
    }
    match out.result.status {
        SolveStatus::Solved => Ok(()),
        status => Err(Failure::numerical(format!(
            "solve finished with status {}",
            status_word(status)
        ))),
    }
}

fn cmd_benchmark(args: BenchmarkArgs) -> Result<(), Failure> {
    let cfg = ExperimentConfig {
        dimension: args.dim,
        sizes: args.sizes,
        networks_per_size: args.trials,
        anchor_sets_per_network: args.anchor_sets,
        anchor_count: args.anchors,
        anchor_policy: args.anchor_policy,
        caps: args.caps,
        scale_std: args.scale_std,
        range: args.range,
        seed: args.seed,
    };
    let reports = benchmark::run_batch(&cfg).map_err(|e| Failure::input(e.to_string()))?;
    let cells = benchmark::summarize(&reports);
    document::save_summaries_csv(&args.out, &cells)
        .map_err(|e| Failure::input(e.to_string()))?;
    for c in &cells {
        println!(
            "size {:>5}  cap {:>9}  localized {}/{} ({:.0}%)",
            c.size,
            c.cap.to_string(),
            c.localized_trials,
            c.trials,
            100.0 * c.localized_fraction
        );
    }
    println!("wrote {}", args.out.display());
    Ok(())
}
