use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Duration;

use anyhow::Context;

use gj_core::graph::{EdgeCover, EliminationPlan, Structure};
use gj_core::pipeline::Summary;

/// Planning figures for one query.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanStats {
    /// `tree` or `junction-tree`.
    pub structure: &'static str,
    /// N: rows of the largest table.
    pub largest_table: u64,
    /// M: entries of the largest potential built during inference.
    pub max_potential: Option<usize>,
    pub largest_maxclique: usize,
    pub fill_ins: usize,
    /// Exact ρ as a fraction, e.g. `3/2`.
    pub rho_exact: String,
    pub rho: f64,
    pub agm_bound: f64,
}

impl PlanStats {
    pub fn of(summary: &Summary) -> Self {
        let mut stats = Self::from_plan(&summary.plan, &summary.cover, summary.largest_table);
        stats.max_potential = Some(summary.generator.stats().max_potential);
        stats
    }

    pub fn from_plan(plan: &EliminationPlan, cover: &EdgeCover, largest_table: u64) -> Self {
        PlanStats {
            structure: structure_name(&plan.structure),
            largest_table,
            max_potential: None,
            largest_maxclique: plan.nodes.iter().map(|n| n.bag().len()).max().unwrap_or(0),
            fill_ins: plan.fill_ins.len(),
            rho_exact: cover.rho.to_string(),
            rho: cover.rho_f64(),
            agm_bound: cover.bound,
        }
    }
}

pub(crate) fn structure_name(s: &Structure) -> &'static str {
    match s {
        Structure::Tree => "tree",
        Structure::JunctionTree(_) => "junction-tree",
    }
}

/// Everything one `join` or `stats` run measured. Fields a mode does not
/// produce stay `None` or empty.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunReport {
    pub command: String,
    pub query: String,
    /// Phase name and wall-clock time, in execution order.
    pub phases: Vec<(String, Duration)>,
    pub plan: Option<PlanStats>,
    /// |Q|.
    pub join_size: Option<u64>,
    pub distinct_rows: Option<u64>,
    /// Edge-cover bound over distinct input tuples, checked against
    /// `distinct_rows`.
    pub set_bound: Option<f64>,
    pub gfjs_bytes: Option<u64>,
    pub flat_bytes: Option<u64>,
    pub runs_per_group: Vec<usize>,
    pub cache_hits: Option<usize>,
    pub uir: Option<u64>,
    /// Free-form lines printed after the figures.
    pub details: Vec<String>,
}

impl RunReport {
    pub fn phase(&self, name: &str) -> Option<Duration> {
        self.phases.iter().find(|(n, _)| n == name).map(|(_, d)| *d)
    }

    pub fn push_phase(&mut self, name: &str, d: Duration) {
        self.phases.push((name.to_owned(), d));
    }

    /// Key/value pairs in display order.
    pub fn entries(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("command".to_owned(), self.command.clone()),
            ("query".to_owned(), self.query.clone()),
        ];
        for (name, d) in &self.phases {
            out.push((format!("{name}_ms"), millis(*d)));
        }
        if let Some(p) = &self.plan {
            out.push(("structure".into(), p.structure.into()));
            out.push(("N".into(), p.largest_table.to_string()));
            if let Some(m) = p.max_potential {
                out.push(("M".into(), m.to_string()));
            }
            out.push(("largest_maxclique".into(), p.largest_maxclique.to_string()));
            out.push(("fill_ins".into(), p.fill_ins.to_string()));
            out.push(("rho".into(), p.rho_exact.clone()));
            out.push(("agm_bound".into(), format!("{:.3}", p.agm_bound)));
        }
        let runs: Vec<String> = self.runs_per_group.iter().map(|n| n.to_string()).collect();
        let optional = [
            ("join_size", self.join_size.map(|n| n.to_string())),
            ("distinct_rows", self.distinct_rows.map(|n| n.to_string())),
            ("distinct_bound", self.set_bound.map(|b| format!("{b:.3}"))),
            ("gfjs_bytes", self.gfjs_bytes.map(|n| n.to_string())),
            ("flat_bytes", self.flat_bytes.map(|n| n.to_string())),
            ("runs_per_group", (!runs.is_empty()).then(|| runs.join(","))),
            ("cache_hits", self.cache_hits.map(|n| n.to_string())),
            ("uir", self.uir.map(|n| n.to_string())),
        ];
        out.extend(
            optional
                .into_iter()
                .filter_map(|(k, v)| v.map(|v| (k.to_owned(), v))),
        );
        out
    }

    pub fn to_text(&self) -> String {
        let mut s = aligned(&self.entries());
        for line in &self.details {
            s.push_str(line);
            s.push('\n');
        }
        s
    }

    pub fn write_kv(&self, path: &Path) -> anyhow::Result<()> {
        write_kv(path, &self.entries())
    }
}

pub fn millis(d: Duration) -> String {
    format!("{:.3}", d.as_secs_f64() * 1000.0)
}

pub(crate) fn aligned(entries: &[(String, String)]) -> String {
    let width = entries.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut s = String::new();
    for (k, v) in entries {
        let _ = writeln!(s, "{k:<width$}  {v}");
    }
    s
}

pub(crate) fn write_kv(path: &Path, entries: &[(String, String)]) -> anyhow::Result<()> {
    let mut s = String::new();
    for (k, v) in entries {
        let _ = writeln!(s, "{k}: {v}");
    }
    fs::write(path, s).with_context(|| format!("writing report {}", path.display()))
}
