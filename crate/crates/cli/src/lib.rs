//! Command implementations behind the `gj` binary: `join`, `stats` and
//! `bench`. Each returns a report; printing and exit codes live in `main`.

pub mod bench;
pub mod report;

use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{anyhow, bail, Context};

use gj_core::cache::FactorCache;
use gj_core::gfjs::{coalesce, desummarize, distinct_rows, load, store, CsvSink, Gfjs};
use gj_core::graph::{fractional_edge_cover, plan_elimination, Structure};
use gj_core::pipeline::{
    learn, learn_cached, projection_ids, summarize_learned, Catalog, Learned, Summary,
};
use gj_core::query::{build_join_graph, load_query, JoinQuery, VarId};
use gj_core::Error;

pub use bench::{cmd_bench, Baseline, BenchOptions, BenchReport, Source};
pub use report::{PlanStats, RunReport};

/// Subdirectory of `--out` holding the stored summary.
pub const GFJS_DIR: &str = "gfjs";
/// File under `--out` receiving the flat result.
pub const RESULT_FILE: &str = "result.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Build the summary in memory only.
    Summarize,
    /// Build the summary and expand it straight into the result CSV.
    Materialize,
    /// Build the summary and write it to disk.
    Store,
    /// Read a stored summary and expand it into the result CSV.
    LoadDesummarize,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Summarize => "summarize",
            Mode::Materialize => "materialize",
            Mode::Store => "store",
            Mode::LoadDesummarize => "load-desummarize",
        }
    }
}

#[derive(Debug, Clone)]
pub struct JoinOptions {
    pub mode: Mode,
    pub out: Option<PathBuf>,
    pub cache: Option<PathBuf>,
    pub header: bool,
    pub coalesce: bool,
}

impl JoinOptions {
    pub fn new(mode: Mode) -> Self {
        JoinOptions {
            mode,
            out: None,
            cache: None,
            header: true,
            coalesce: false,
        }
    }

    pub fn out(mut self, dir: impl Into<PathBuf>) -> Self {
        self.out = Some(dir.into());
        self
    }
}

/// A command line that is well formed but asks for something impossible,
/// such as `store` without an output directory.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    /// Anything not covered below.
    pub const OTHER: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const IO: u8 = 3;
    /// Malformed CSV, query syntax, or a query that does not match its
    /// tables.
    pub const MALFORMED_INPUT: u8 = 4;
    pub const DISCONNECTED: u8 = 5;
    pub const OVERFLOW: u8 = 6;
    pub const ORACLE_TOO_LARGE: u8 = 7;
    /// Stored or computed summary fails its consistency checks.
    pub const INCONSISTENT_SUMMARY: u8 = 8;
}

pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return exit::USAGE;
        }
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Io { .. } => exit::IO,
                Error::MalformedCsv { .. }
                | Error::TooManyColumns { .. }
                | Error::IndexOutOfRange { .. }
                | Error::Syntax { .. }
                | Error::UnknownVariable(_)
                | Error::DuplicateAlias(_)
                | Error::UnknownColumn { .. }
                | Error::MissingRelation(_) => exit::MALFORMED_INPUT,
                Error::DisconnectedGraph { .. } | Error::NotConnected => exit::DISCONNECTED,
                Error::FrequencyOverflow => exit::OVERFLOW,
                Error::TooLargeForOracle { .. } => exit::ORACLE_TOO_LARGE,
                Error::InconsistentSummary(_) | Error::Format(_) => exit::INCONSISTENT_SUMMARY,
                Error::InvalidPlan(_) => exit::OTHER,
            };
        }
        if cause.is::<std::io::Error>() {
            return exit::IO;
        }
    }
    exit::OTHER
}

fn out_dir(opts: &JoinOptions) -> anyhow::Result<&Path> {
    opts.out.as_deref().ok_or_else(|| {
        anyhow!(UsageError(format!(
            "mode `{}` needs --out <dir>",
            opts.mode.name()
        )))
    })
}

/// Learns the query's potentials, through the cache when one is given.
/// Returns the potentials, table sizes and cache hits.
fn learn_query(
    query: &JoinQuery,
    cache: Option<&Path>,
    header: bool,
) -> anyhow::Result<(Learned, Vec<u64>, Option<usize>)> {
    match cache {
        Some(dir) => {
            let c = learn_cached(query, &FactorCache::new(dir), header)?;
            Ok((c.learned, c.table_sizes, Some(c.hits)))
        }
        None => {
            let catalog = Catalog::load(query, header)?;
            let sizes = query
                .tables
                .iter()
                .map(|t| catalog.get(&t.path).map(|r| r.row_count()))
                .collect::<Result<Vec<u64>, _>>()?;
            Ok((learn(query, &catalog)?, sizes, None))
        }
    }
}

/// Learns, plans, infers and generates, recording phase timings.
pub fn summarize_query(
    query: &JoinQuery,
    cache: Option<&Path>,
    header: bool,
    report: &mut RunReport,
) -> anyhow::Result<Summary> {
    let started = Instant::now();
    let (learned, sizes, hits) =
        learn_query(query, cache, header).context("learning potentials")?;
    let learn_time = started.elapsed();
    let summary = summarize_learned(query, learned, &sizes, learn_time).context("summarizing")?;
    let t = summary.timings;
    report.push_phase("learn", t.learn);
    report.push_phase("plan", t.plan);
    report.push_phase("potential_join", t.potential_join);
    report.push_phase("generator_build", t.generator_build);
    report.push_phase("gfjs_generate", t.gfjs_generate);
    report.cache_hits = hits;
    report.plan = Some(PlanStats::of(&summary));
    Ok(summary)
}

/// Checks that the number of distinct result tuples respects the edge-cover
/// bound over distinct input tuples.
fn check_bound(gfjs: &Gfjs, bound: f64, report: &mut RunReport) -> anyhow::Result<()> {
    let distinct = distinct_rows(gfjs)?;
    report.distinct_rows = Some(distinct);
    report.set_bound = Some(bound);
    if distinct as f64 > bound * (1.0 + 1e-9) {
        return Err(Error::InconsistentSummary(format!(
            "{distinct} distinct result tuples exceed the bound {bound:.3}"
        ))
        .into());
    }
    Ok(())
}

fn output_order(query: &JoinQuery, gfjs: &Gfjs) -> anyhow::Result<Vec<VarId>> {
    query
        .projection
        .iter()
        .map(|n| {
            gfjs.domain()
                .var_id(n)
                .ok_or_else(|| Error::Format(format!("summary has no column `{n}`")).into())
        })
        .collect()
}

/// Streams `gfjs` to `path` as CSV in the query's projection order.
/// Returns rows and bytes written.
fn write_result(
    gfjs: &Gfjs,
    query: &JoinQuery,
    path: &Path,
    header: bool,
) -> anyhow::Result<(u64, u64)> {
    let order = output_order(query, gfjs)?;
    let file = File::create(path).map_err(|e| Error::Io {
        path: path.to_owned(),
        source: e,
    })?;
    let mut sink = CsvSink::new(
        BufWriter::new(file),
        gfjs.domain(),
        &gfjs.columns(),
        &order,
        header,
    )?;
    let rows = desummarize(gfjs, &mut sink)?;
    let bytes = sink.bytes_written();
    sink.into_inner().flush().map_err(|e| Error::Io {
        path: path.to_owned(),
        source: e,
    })?;
    Ok((rows, bytes))
}

fn dir_bytes(dir: &Path) -> anyhow::Result<u64> {
    let mut n = 0;
    for entry in fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        n += entry?.metadata()?.len();
    }
    Ok(n)
}

pub fn cmd_join(query_path: &Path, opts: &JoinOptions) -> anyhow::Result<RunReport> {
    let query = load_query(query_path).context("reading query")?;
    let mut report = RunReport {
        command: format!("join {}", opts.mode.name()),
        query: query_path.display().to_string(),
        ..RunReport::default()
    };

    if opts.mode == Mode::LoadDesummarize {
        let out = out_dir(opts)?;
        let started = Instant::now();
        let gfjs = load(out.join(GFJS_DIR)).context("loading summary")?;
        report.push_phase("load", started.elapsed());
        report.gfjs_bytes = Some(dir_bytes(&out.join(GFJS_DIR))?);
        let started = Instant::now();
        let (rows, bytes) = write_result(&gfjs, &query, &out.join(RESULT_FILE), opts.header)
            .context("desummarizing")?;
        report.push_phase("desummarize", started.elapsed());
        report.join_size = Some(rows);
        report.flat_bytes = Some(bytes);
        report.runs_per_group = gfjs.run_counts();
        return Ok(report);
    }

    let out = match opts.mode {
        Mode::Summarize => None,
        _ => Some(out_dir(opts)?),
    };
    let summary = summarize_query(&query, opts.cache.as_deref(), opts.header, &mut report)?;
    let gfjs = if opts.coalesce {
        coalesce(&summary.gfjs)?
    } else {
        summary.gfjs.clone()
    };
    report.join_size = Some(gfjs.join_size());
    report.runs_per_group = gfjs.run_counts();
    check_bound(&gfjs, summary.set_bound, &mut report)?;

    match (opts.mode, out) {
        (Mode::Store, Some(out)) => {
            let started = Instant::now();
            let bytes = store(&gfjs, out.join(GFJS_DIR)).context("storing summary")?;
            report.push_phase("store", started.elapsed());
            report.gfjs_bytes = Some(bytes);
        }
        (Mode::Materialize, Some(out)) => {
            fs::create_dir_all(out).map_err(|e| Error::Io {
                path: out.to_owned(),
                source: e,
            })?;
            let started = Instant::now();
            let (rows, bytes) = write_result(&gfjs, &query, &out.join(RESULT_FILE), opts.header)
                .context("desummarizing")?;
            report.push_phase("desummarize", started.elapsed());
            if rows != gfjs.join_size() {
                bail!(Error::InconsistentSummary(format!(
                    "wrote {rows} rows, summary holds {}",
                    gfjs.join_size()
                )));
            }
            report.flat_bytes = Some(bytes);
        }
        _ => {}
    }
    Ok(report)
}

/// Planning report: hypergraph, elimination plan, fill-ins, maxcliques and
/// the edge cover. With `run_join` the summary is also built and its size
/// checked against the bound.
pub fn cmd_stats(query_path: &Path, header: bool, run_join: bool) -> anyhow::Result<RunReport> {
    let query = load_query(query_path).context("reading query")?;
    let mut report = RunReport {
        command: "stats".into(),
        query: query_path.display().to_string(),
        ..RunReport::default()
    };
    let graph = build_join_graph(&query)?;
    let started = Instant::now();
    let catalog = Catalog::load(&query, header).context("loading tables")?;
    let sizes = query
        .tables
        .iter()
        .map(|t| catalog.get(&t.path).map(|r| r.row_count()))
        .collect::<Result<Vec<u64>, _>>()?;
    report.push_phase("load_tables", started.elapsed());

    let started = Instant::now();
    let (projection, root) = projection_ids(&query, &graph)?;
    let plan = plan_elimination(&graph, &projection, root)?;
    let cover = fractional_edge_cover(&graph, &sizes);
    report.push_phase("plan", started.elapsed());
    report.plan = Some(PlanStats::from_plan(
        &plan,
        &cover,
        sizes.iter().copied().max().unwrap_or(0),
    ));

    let name = |v: VarId| graph.name(v).to_owned();
    let names =
        |vs: &[VarId]| -> String { vs.iter().map(|&v| name(v)).collect::<Vec<_>>().join(",") };
    let d = &mut report.details;
    d.push(format!("variables: {}", graph.variables().join(",")));
    for (t, e) in query.tables.iter().zip(graph.hyperedges()) {
        d.push(format!("hyperedge {}: {{{}}}", t.alias, names(e)));
    }
    d.push(format!("projection: {}", names(&projection)));
    if !plan.early_order.is_empty() {
        d.push(format!("early elimination: {}", names(&plan.early_order)));
    }
    for (i, node) in plan.nodes.iter().enumerate() {
        let parent = node.parent.map_or("-".to_owned(), |p| p.to_string());
        d.push(format!(
            "node {i}: vars {{{}}} separator {{{}}} parent {parent}",
            names(&node.vars),
            names(&node.separator)
        ));
    }
    let order: Vec<String> = plan
        .order_vars()
        .iter()
        .map(|vs| format!("{{{}}}", names(vs)))
        .collect();
    d.push(format!(
        "elimination order: {}",
        if order.is_empty() {
            "none".into()
        } else {
            order.join(" ")
        }
    ));
    let fills: Vec<String> = plan
        .fill_ins
        .iter()
        .map(|&(a, b)| format!("{}-{}", name(a), name(b)))
        .collect();
    d.push(format!(
        "fill-ins: {}",
        if fills.is_empty() {
            "none".into()
        } else {
            fills.join(" ")
        }
    ));
    if let Structure::JunctionTree(jt) = &plan.structure {
        for (i, n) in jt.nodes.iter().enumerate() {
            d.push(format!("maxclique {i}: {{{}}}", names(&n.vars)));
        }
    }
    let weights: Vec<String> = query
        .tables
        .iter()
        .zip(&cover.weights)
        .map(|(t, w)| format!("{}={w}", t.alias))
        .collect();
    d.push(format!("edge cover: {}", weights.join(" ")));

    if run_join {
        let started = Instant::now();
        let learned = learn(&query, &catalog)?;
        let summary = summarize_learned(&query, learned, &sizes, started.elapsed())?;
        let t = summary.timings;
        report.push_phase("learn", t.learn);
        report.push_phase("potential_join", t.potential_join);
        report.push_phase("generator_build", t.generator_build);
        report.push_phase("gfjs_generate", t.gfjs_generate);
        if let Some(p) = report.plan.as_mut() {
            p.max_potential = Some(summary.generator.stats().max_potential);
        }
        report.join_size = Some(summary.gfjs.join_size());
        report.runs_per_group = summary.gfjs.run_counts();
        check_bound(&summary.gfjs, summary.set_bound, &mut report)?;
    }
    Ok(report)
}

/// Median of a non-empty sample.
pub fn median(mut xs: Vec<Duration>) -> Duration {
    xs.sort_unstable();
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2
    }
}
