use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{anyhow, Context};
use rand::rngs::StdRng;
use rand::SeedableRng;

use gj_core::fixtures::{self, random_instance, Instance, RandomParams, Shape};
use gj_core::oracle::{brute_force_join, hash_join_plan};
use gj_core::pipeline::Catalog;
use gj_core::query::load_query;

use crate::report::{aligned, millis, write_kv};
use crate::{cmd_join, median, JoinOptions, Mode, PlanStats, UsageError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Baseline {
    /// Nested-loop evaluation.
    Brute,
    /// Left-deep binary hash joins.
    Hash,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Source {
    Query(PathBuf),
    /// A named fixture, or `random-<shape>` drawn with the bench seed.
    /// Shapes: `chain<k>`, `star<k>`, `tree<k>`, `triangle`, `cycle4`.
    Fixture(String),
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub source: Source,
    pub baselines: Vec<Baseline>,
    pub repeats: usize,
    pub seed: u64,
    pub header: bool,
    /// Where fixtures and outputs are written; a temporary directory when
    /// `None`.
    pub workdir: Option<PathBuf>,
}

impl BenchOptions {
    pub fn new(source: Source) -> Self {
        BenchOptions {
            source,
            baselines: Vec::new(),
            repeats: 1,
            seed: 0,
            header: true,
            workdir: None,
        }
    }
}

/// One benchmarked method.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodResult {
    pub name: String,
    pub median: Duration,
    /// Result rows the method produced.
    pub rows: u64,
    pub uir: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub source: String,
    pub repeats: usize,
    pub join_size: u64,
    pub methods: Vec<MethodResult>,
    /// Median GJ phase timings from the summarize+store runs.
    pub phases: Vec<(String, Duration)>,
    pub plan: Option<PlanStats>,
    pub gfjs_bytes: u64,
    pub flat_bytes: u64,
    pub runs_per_group: Vec<usize>,
    /// Every method reported the same number of rows.
    pub agree: bool,
}

pub const SUMMARIZE_STORE: &str = "gj summarize+store";
pub const MATERIALIZE: &str = "gj materialize";
pub const LOAD_DESUMMARIZE: &str = "gj load+desummarize";

impl BenchReport {
    pub fn method(&self, name: &str) -> Option<&MethodResult> {
        self.methods.iter().find(|m| m.name == name)
    }

    /// Stored summary size over flat result size.
    pub fn compression_ratio(&self) -> f64 {
        if self.flat_bytes == 0 {
            0.0
        } else {
            self.gfjs_bytes as f64 / self.flat_bytes as f64
        }
    }

    pub fn entries(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("source".to_owned(), self.source.clone()),
            ("repeats".to_owned(), self.repeats.to_string()),
            ("join_size".to_owned(), self.join_size.to_string()),
        ];
        for m in &self.methods {
            let key = m.name.replace([' ', '+'], "_");
            out.push((format!("{key}_ms"), millis(m.median)));
            out.push((format!("{key}_rows"), m.rows.to_string()));
            if let Some(u) = m.uir {
                out.push((format!("{key}_uir"), u.to_string()));
            }
        }
        for (name, d) in &self.phases {
            out.push((format!("{name}_ms"), millis(*d)));
        }
        if let Some(p) = &self.plan {
            out.push(("structure".into(), p.structure.into()));
            out.push(("N".into(), p.largest_table.to_string()));
            if let Some(m) = p.max_potential {
                out.push(("M".into(), m.to_string()));
            }
            out.push(("rho".into(), p.rho_exact.clone()));
            out.push(("agm_bound".into(), format!("{:.3}", p.agm_bound)));
        }
        let runs: Vec<String> = self.runs_per_group.iter().map(|n| n.to_string()).collect();
        out.push(("runs_per_group".into(), runs.join(",")));
        out.push(("gfjs_bytes".into(), self.gfjs_bytes.to_string()));
        out.push(("flat_bytes".into(), self.flat_bytes.to_string()));
        out.push((
            "compression_ratio".into(),
            format!("{:.6}", self.compression_ratio()),
        ));
        out.push(("agree".into(), self.agree.to_string()));
        out
    }

    pub fn to_text(&self) -> String {
        let width = self
            .methods
            .iter()
            .map(|m| m.name.len())
            .max()
            .unwrap_or(6)
            .max(6);
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<width$}  {:>12}  {:>12}  {:>10}",
            "method", "median_ms", "rows", "uir"
        );
        for m in &self.methods {
            let uir = m.uir.map_or("-".to_owned(), |u| u.to_string());
            let _ = writeln!(
                s,
                "{:<width$}  {:>12}  {:>12}  {:>10}",
                m.name,
                millis(m.median),
                m.rows,
                uir
            );
        }
        s.push('\n');
        s.push_str(&aligned(&self.entries()));
        s
    }

    pub fn write_kv(&self, path: &Path) -> anyhow::Result<()> {
        write_kv(path, &self.entries())
    }
}

fn parse_shape(shape_name: &str) -> Option<Shape> {
    let count = |prefix: &str| {
        shape_name
            .strip_prefix(prefix)
            .and_then(|k| k.parse::<usize>().ok())
            .filter(|&k| k >= 1)
    };
    match shape_name {
        "triangle" => Some(Shape::Triangle),
        "cycle4" => Some(Shape::FourCycle),
        _ => count("chain")
            .map(Shape::Chain)
            .or_else(|| count("star").map(Shape::Star))
            .or_else(|| count("tree").map(Shape::BinaryTree)),
    }
}

fn fixture(name: &str, seed: u64) -> anyhow::Result<Instance> {
    if let Some(shape_name) = name.strip_prefix("random-") {
        let shape = parse_shape(shape_name)
            .ok_or_else(|| anyhow!(UsageError(format!("unknown random shape `{shape_name}`"))))?;
        let params = RandomParams {
            inject_uir: true,
            duplicate_rows: true,
            ..RandomParams::default()
        };
        return Ok(random_instance(
            shape,
            params,
            &mut StdRng::seed_from_u64(seed),
        ));
    }
    fixtures::by_name(name).ok_or_else(|| {
        anyhow!(UsageError(format!(
            "unknown fixture `{name}`; known: {}, random-<shape>",
            fixtures::NAMES.join(", ")
        )))
    })
}

fn time<T>(f: impl FnOnce() -> anyhow::Result<T>) -> anyhow::Result<(T, Duration)> {
    let started = Instant::now();
    let out = f()?;
    Ok((out, started.elapsed()))
}

/// Runs GJ in every mode plus the requested baselines `repeats` times and
/// reports medians.
pub fn cmd_bench(opts: &BenchOptions) -> anyhow::Result<BenchReport> {
    if opts.repeats == 0 {
        return Err(anyhow!(UsageError("--repeats must be at least 1".into())));
    }
    let scratch;
    let workdir = match &opts.workdir {
        Some(d) => d.clone(),
        None => {
            scratch = tempfile::tempdir().context("creating a scratch directory")?;
            scratch.path().to_owned()
        }
    };
    let (query_path, label, header) = match &opts.source {
        Source::Query(p) => (p.clone(), p.display().to_string(), opts.header),
        Source::Fixture(name) => {
            let inst = fixture(name, opts.seed)?;
            let path = inst
                .write_to(&workdir.join("instance"))
                .context("writing fixture")?;
            (path, format!("{name} (seed {})", opts.seed), true)
        }
    };

    let mut samples: Vec<Vec<Duration>> = vec![Vec::new(); 3 + opts.baselines.len()];
    let mut phase_samples: Vec<(String, Vec<Duration>)> = Vec::new();
    let mut rows = vec![0u64; samples.len()];
    let mut uir = vec![None; samples.len()];
    let mut stored = None;
    let mut flat_bytes = 0;

    for rep in 0..opts.repeats {
        let dir = workdir.join(format!("run{rep}"));
        let join = |mode: Mode, sub: &str| {
            let mut o = JoinOptions::new(mode).out(dir.join(sub));
            o.header = header;
            time(|| cmd_join(&query_path, &o))
        };

        let (report, t) = join(Mode::Store, "gj")?;
        samples[0].push(t);
        rows[0] = report.join_size.unwrap_or(0);
        for (name, d) in &report.phases {
            match phase_samples.iter_mut().find(|(n, _)| n == name) {
                Some((_, v)) => v.push(*d),
                None => phase_samples.push((name.clone(), vec![*d])),
            }
        }

        let (flat, t) = join(Mode::Materialize, "flat")?;
        samples[1].push(t);
        rows[1] = flat.join_size.unwrap_or(0);
        flat_bytes = flat.flat_bytes.unwrap_or(0);

        let (loaded, t) = join(Mode::LoadDesummarize, "gj")?;
        samples[2].push(t);
        rows[2] = loaded.join_size.unwrap_or(0);

        for (i, b) in opts.baselines.iter().enumerate() {
            let slot = 3 + i;
            let ((n, u), t) = time(|| {
                let query = load_query(&query_path)?;
                let catalog = Catalog::load(&query, header)?;
                Ok(match b {
                    Baseline::Brute => (brute_force_join(&query, &catalog)?.total(), None),
                    Baseline::Hash => {
                        let (bag, stats) = hash_join_plan(&query, &catalog, None)?;
                        (bag.total(), Some(stats.uir))
                    }
                })
            })
            .with_context(|| format!("{b:?} baseline"))?;
            samples[slot].push(t);
            rows[slot] = n;
            uir[slot] = u;
        }
        stored = Some(report);
    }

    let stored = stored.expect("at least one repeat ran");
    let mut names = vec![
        SUMMARIZE_STORE.to_owned(),
        MATERIALIZE.to_owned(),
        LOAD_DESUMMARIZE.to_owned(),
    ];
    names.extend(opts.baselines.iter().map(|b| {
        match b {
            Baseline::Brute => "brute force",
            Baseline::Hash => "hash join",
        }
        .to_owned()
    }));
    let methods: Vec<MethodResult> = names
        .into_iter()
        .zip(samples)
        .zip(rows.iter().zip(&uir))
        .map(|((name, s), (&rows, &uir))| MethodResult {
            name,
            median: median(s),
            rows,
            uir,
        })
        .collect();
    let join_size = stored.join_size.unwrap_or(0);
    Ok(BenchReport {
        source: label,
        repeats: opts.repeats,
        join_size,
        agree: methods.iter().all(|m| m.rows == join_size),
        methods,
        phases: phase_samples
            .into_iter()
            .map(|(n, v)| (n, median(v)))
            .collect(),
        plan: stored.plan.clone(),
        gfjs_bytes: stored.gfjs_bytes.unwrap_or(0),
        flat_bytes,
        runs_per_group: stored.runs_per_group.clone(),
    })
}
