use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use dsssp::formats::{graph_to_text, parse_graph, read_graph, read_trace, trace_to_text};
use dsssp::run::{check_report, run, Algo, RunOptions, VerifyMode};
use dsssp::workload::{full_trace, GraphSpec};
use dsssp::{CliError, CliResult};

#[derive(Parser, Debug)]
#[command(name = "dsssp", version, about = "Decremental approximate SSSP experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Family {
    Random,
    GridBidirected,
    DagLayered,
    /// Read the graph from `--input` and only generate a trace.
    File,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a graph file and a full deletion trace for it.
    Generate {
        #[arg(long, value_enum)]
        family: Family,
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[arg(long, default_value_t = 0.1)]
        density: f64,
        /// Maximum edge weight.
        #[arg(long = "max-weight", default_value_t = 1)]
        max_weight: u64,
        /// Grid side length.
        #[arg(long, default_value_t = 8)]
        side: usize,
        #[arg(long, default_value_t = 4)]
        layers: usize,
        #[arg(long, default_value_t = 4)]
        width: usize,
        /// Every k-th update raises a weight instead of deleting an edge.
        #[arg(long = "increase-every")]
        increase_every: Option<usize>,
        /// Source graph for `--family file`.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        trace: PathBuf,
    },
    /// Replay a trace and report estimates against Dijkstra.
    Run {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, value_enum, default_value_t = Algo::Auto)]
        algo: Algo,
        #[arg(long, default_value_t = 0.5)]
        epsilon: f64,
        /// Depth for `es` and `dag`; defaults to W·n.
        #[arg(long)]
        delta: Option<u64>,
        #[arg(long, default_value_t = 2.0)]
        c: f64,
        /// Copies per bundle; defaults to ⌈40c ln n⌉.
        #[arg(long)]
        bundle: Option<usize>,
        #[arg(long)]
        gamma: Option<u32>,
        /// Separator success parameter of the hierarchy's orders.
        #[arg(long)]
        zeta: Option<f64>,
        /// `none`, `full` or `sampled:K`.
        #[arg(long, default_value = "full")]
        verify: VerifyMode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, default_value_t = 0)]
        root: usize,
        /// Report path; `.json` writes the JSON report, anything else CSV. Defaults to
        /// CSV on stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Generate {
            family,
            n,
            density,
            max_weight,
            side,
            layers,
            width,
            increase_every,
            input,
            seed,
            graph,
            trace,
        } => {
            let (n, edges) = match family {
                Family::Random => GraphSpec::Random { n, density, max_weight }.generate(seed)?,
                Family::GridBidirected => GraphSpec::Grid { side, max_weight }.generate(seed)?,
                Family::DagLayered => GraphSpec::DagLayered { layers, width, density, max_weight }.generate(seed)?,
                Family::File => {
                    let path = input.ok_or_else(|| CliError::Spec("--family file needs --input".into()))?;
                    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
                    parse_graph(&path.display().to_string(), &text)?
                }
            };
            dsssp_core::DecrementalGraph::new(n, &edges)?;
            write(&graph, &graph_to_text(n, &edges))?;
            write(&trace, &trace_to_text(&full_trace(&edges, increase_every, seed)))
        }
        Command::Run {
            graph,
            trace,
            algo,
            epsilon,
            delta,
            c,
            bundle,
            gamma,
            zeta,
            verify,
            seed,
            workers,
            root,
            out,
        } => {
            let g = read_graph(&graph)?;
            let events = read_trace(&trace)?;
            let opts = RunOptions { algo, epsilon, delta, c, bundle, gamma, zeta, verify, seed, workers, root };
            let report = run(g, &events, &opts)?;
            let s = &report.summary;
            eprintln!(
                "{}: n={} m={} stages={} checked={} ok={} out-of-range={} lower={} upper={} build={:.1}ms updates={:.1}ms",
                s.algo,
                s.n,
                s.m,
                s.stages,
                s.checked,
                s.ok,
                s.out_of_range,
                s.lower_violations,
                s.upper_violations,
                s.build_ms,
                s.update_ms
            );
            match out {
                Some(p) if p.extension().is_some_and(|e| e == "json") => write(&p, &report.to_json())?,
                Some(p) => write(&p, &report.to_csv())?,
                None => print!("{}", report.to_csv()),
            }
            check_report(&report, verify)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
