//! The run-length-encoded join summary and its on-disk form.
//!
//! A [`Gfjs`] holds one [`RunGroup`] per band of the generator, root first.
//! Each run is a value tuple over the group's variables and a frequency; the
//! frequencies of every group add up to the join size.

mod desummarize;
mod generate;
mod store;

use std::sync::Arc;

pub use desummarize::{desummarize, CountSink, CsvSink, RowSink, VecSink};
pub use generate::{generate_gfjs, generate_gfjs_traced, GenerationStats};
pub use store::{load, store, FORMAT_VERSION, MANIFEST};

use crate::domain::Domain;
use crate::error::{add_freq, Error, Result};
use crate::query::VarId;

/// Runs for one column group, stored flat: run `i` has values
/// `values[i * arity..(i + 1) * arity]` and frequency `freqs[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunGroup {
    vars: Vec<VarId>,
    values: Vec<u32>,
    freqs: Vec<u64>,
}

impl RunGroup {
    pub fn new(vars: Vec<VarId>) -> Self {
        RunGroup {
            vars,
            values: Vec::new(),
            freqs: Vec::new(),
        }
    }

    pub fn vars(&self) -> &[VarId] {
        &self.vars
    }

    pub fn arity(&self) -> usize {
        self.vars.len()
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    /// Appends a run. Zero frequencies are a caller bug.
    pub fn push(&mut self, values: &[u32], freq: u64) {
        assert_eq!(values.len(), self.vars.len(), "run arity");
        assert!(freq >= 1, "runs have frequency at least 1");
        self.values.extend_from_slice(values);
        self.freqs.push(freq);
    }

    pub fn run(&self, i: usize) -> (&[u32], u64) {
        let k = self.vars.len();
        (&self.values[i * k..(i + 1) * k], self.freqs[i])
    }

    pub fn runs(&self) -> impl Iterator<Item = (&[u32], u64)> + '_ {
        (0..self.len()).map(move |i| self.run(i))
    }

    pub fn freqs(&self) -> &[u64] {
        &self.freqs
    }

    pub fn total(&self) -> Result<u64> {
        self.freqs.iter().try_fold(0u64, |acc, &f| add_freq(acc, f))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gfjs {
    domain: Arc<Domain>,
    groups: Vec<RunGroup>,
    join_size: u64,
}

impl Gfjs {
    /// Checks that every group sums to the same total and adopts it as the
    /// join size.
    pub fn new(domain: Arc<Domain>, groups: Vec<RunGroup>) -> Result<Self> {
        let mut join_size = None;
        for (i, g) in groups.iter().enumerate() {
            let total = g.total()?;
            match join_size {
                None => join_size = Some(total),
                Some(n) if n != total => {
                    return Err(Error::InconsistentSummary(format!(
                        "group {i} sums to {total}, group 0 to {n}"
                    )))
                }
                Some(_) => {}
            }
        }
        Ok(Gfjs {
            domain,
            groups,
            join_size: join_size.unwrap_or(0),
        })
    }

    /// Builds a summary from decoded values, for tests and hand-written
    /// examples. Each group is `(variables, runs)`.
    #[allow(clippy::type_complexity)]
    pub fn from_decoded(groups: &[(&[&str], Vec<(Vec<&str>, u64)>)]) -> Result<Self> {
        let names: Vec<String> = groups
            .iter()
            .flat_map(|(vars, _)| vars.iter().map(|v| v.to_string()))
            .collect();
        let mut builder = Domain::builder(names.clone());
        let mut base = 0;
        for (vars, runs) in groups {
            for (k, _) in vars.iter().enumerate() {
                builder.add(base + k, runs.iter().map(|(vals, _)| vals[k]));
            }
            base += vars.len();
        }
        let domain = Arc::new(builder.build());
        let mut out = Vec::with_capacity(groups.len());
        let mut base = 0;
        for (vars, runs) in groups {
            let ids: Vec<VarId> = (base..base + vars.len()).collect();
            let mut group = RunGroup::new(ids.clone());
            for (vals, freq) in runs {
                if *freq == 0 {
                    return Err(Error::Format("run frequency must be at least 1".into()));
                }
                let codes: Vec<u32> = ids
                    .iter()
                    .zip(vals)
                    .map(|(&v, s)| domain.encode(v, s).expect("value was added"))
                    .collect();
                group.push(&codes, *freq);
            }
            base += vars.len();
            out.push(group);
        }
        Gfjs::new(domain, out)
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn groups(&self) -> &[RunGroup] {
        &self.groups
    }

    pub fn join_size(&self) -> u64 {
        self.join_size
    }

    /// Output columns in group order.
    pub fn columns(&self) -> Vec<VarId> {
        self.groups
            .iter()
            .flat_map(|g| g.vars.iter().copied())
            .collect()
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns()
            .into_iter()
            .map(|v| self.domain.name(v).to_owned())
            .collect()
    }

    pub fn run_counts(&self) -> Vec<usize> {
        self.groups.iter().map(RunGroup::len).collect()
    }

    pub fn total_runs(&self) -> usize {
        self.groups.iter().map(RunGroup::len).sum()
    }

    /// Decoded runs of group `i`.
    pub fn decoded(&self, i: usize) -> Vec<(Vec<&str>, u64)> {
        let g = &self.groups[i];
        g.runs()
            .map(|(vals, f)| {
                let decoded = g
                    .vars
                    .iter()
                    .zip(vals)
                    .map(|(&v, &c)| self.domain.decode(v, c))
                    .collect();
                (decoded, f)
            })
            .collect()
    }
}

/// Join size, after checking every group agrees with the root group.
pub fn join_size(gfjs: &Gfjs) -> Result<u64> {
    let mut root = None;
    for (i, g) in gfjs.groups.iter().enumerate() {
        let total = g.total()?;
        match root {
            None => root = Some(total),
            Some(n) if n != total => {
                return Err(Error::InconsistentSummary(format!(
                    "group {i} sums to {total}, root group to {n}"
                )))
            }
            Some(_) => {}
        }
    }
    Ok(root.unwrap_or(0))
}

/// Number of distinct rows. Rows come out of generation sorted, so equal
/// rows are adjacent and only changes between expanded blocks are counted.
pub fn distinct_rows(gfjs: &Gfjs) -> Result<u64> {
    struct Changes {
        last: Option<Vec<u32>>,
        count: u64,
    }
    impl RowSink for Changes {
        fn push(&mut self, row: &[u32], _repeat: u64) -> Result<()> {
            if self.last.as_deref() != Some(row) {
                self.count += 1;
                self.last = Some(row.to_vec());
            }
            Ok(())
        }
    }
    let mut sink = Changes {
        last: None,
        count: 0,
    };
    desummarize(gfjs, &mut sink)?;
    Ok(sink.count)
}

/// Merges adjacent runs with identical value tuples in every group.
pub fn coalesce(gfjs: &Gfjs) -> Result<Gfjs> {
    let mut groups = Vec::with_capacity(gfjs.groups.len());
    for g in &gfjs.groups {
        let mut out = RunGroup::new(g.vars.clone());
        for (vals, f) in g.runs() {
            let k = out.arity();
            let n = out.len();
            if n > 0 && &out.values[(n - 1) * k..n * k] == vals {
                out.freqs[n - 1] = add_freq(out.freqs[n - 1], f)?;
            } else {
                out.push(vals, f);
            }
        }
        groups.push(out);
    }
    Ok(Gfjs {
        domain: Arc::clone(&gfjs.domain),
        groups,
        join_size: gfjs.join_size,
    })
}
