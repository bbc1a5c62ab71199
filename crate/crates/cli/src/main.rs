use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use gj_cli::{
    cmd_bench, cmd_join, cmd_stats, exit, exit_code, Baseline, BenchOptions, JoinOptions, Mode,
    Source,
};

/// Graphical join: summarize n-way equi-joins of CSV tables without
/// materializing them.
///
/// Exit codes: 0 success, 1 other failure, 2 usage, 3 i/o, 4 malformed
/// input (csv, query syntax, unknown column or variable), 5 disconnected
/// join graph, 6 frequency overflow, 7 instance too large for a baseline,
/// 8 inconsistent or corrupt summary.
#[derive(Parser)]
#[command(name = "gj", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Summarize a join, optionally storing, loading or expanding it.
    Join {
        query: PathBuf,
        #[arg(long, value_enum, default_value = "summarize")]
        mode: ModeArg,
        /// Output directory: the summary goes to <out>/gfjs, the flat result
        /// to <out>/result.csv.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Directory caching learned potentials between runs.
        #[arg(long)]
        cache: Option<PathBuf>,
        /// Input CSVs have no header row; columns are named col0, col1, ...
        #[arg(long)]
        no_header: bool,
        /// Merge adjacent equal runs before storing.
        #[arg(long)]
        coalesce: bool,
        /// Also write the report as key: value lines to this file.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Time GJ against the baselines on a query or fixture.
    Bench {
        /// Query file; omit when using --fixture.
        #[arg(required_unless_present = "fixture", conflicts_with = "fixture")]
        query: Option<PathBuf>,
        /// chain3, triangle, empty, redundancy, or random-<shape> with shape
        /// one of chain<k>, star<k>, tree<k>, triangle, cycle4.
        #[arg(long)]
        fixture: Option<String>,
        /// Seed for random fixtures.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "baseline", value_enum)]
        baselines: Vec<BaselineArg>,
        #[arg(long, default_value_t = 1)]
        repeats: usize,
        #[arg(long)]
        no_header: bool,
        /// Keep fixtures and outputs here instead of a temporary directory.
        #[arg(long)]
        workdir: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Show the join graph, elimination plan and edge cover.
    Stats {
        query: PathBuf,
        #[arg(long)]
        no_header: bool,
        /// Also build the summary and check its size against the bound.
        #[arg(long)]
        run: bool,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Summarize,
    Materialize,
    Store,
    LoadDesummarize,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineArg {
    Brute,
    Hash,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Join {
            query,
            mode,
            out,
            cache,
            no_header,
            coalesce,
            report,
        } => {
            let mode = match mode {
                ModeArg::Summarize => Mode::Summarize,
                ModeArg::Materialize => Mode::Materialize,
                ModeArg::Store => Mode::Store,
                ModeArg::LoadDesummarize => Mode::LoadDesummarize,
            };
            let opts = JoinOptions {
                mode,
                out,
                cache,
                header: !no_header,
                coalesce,
            };
            let r = cmd_join(&query, &opts)?;
            print!("{}", r.to_text());
            if let Some(path) = report {
                r.write_kv(&path)?;
            }
        }
        Command::Bench {
            query,
            fixture,
            seed,
            baselines,
            repeats,
            no_header,
            workdir,
            report,
        } => {
            let source = match (query, fixture) {
                (Some(q), _) => Source::Query(q),
                (None, Some(f)) => Source::Fixture(f),
                (None, None) => unreachable!("clap requires one of them"),
            };
            let opts = BenchOptions {
                source,
                baselines: baselines
                    .into_iter()
                    .map(|b| match b {
                        BaselineArg::Brute => Baseline::Brute,
                        BaselineArg::Hash => Baseline::Hash,
                    })
                    .collect(),
                repeats,
                seed,
                header: !no_header,
                workdir,
            };
            let r = cmd_bench(&opts)?;
            print!("{}", r.to_text());
            if let Some(path) = report {
                r.write_kv(&path)?;
            }
        }
        Command::Stats {
            query,
            no_header,
            run,
            report,
        } => {
            let r = cmd_stats(&query, !no_header, run)?;
            print!("{}", r.to_text());
            if let Some(path) = report {
                r.write_kv(&path)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::from(exit::OK),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
