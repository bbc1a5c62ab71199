//! Cross-checks a summary against the independent oracles.

use crate::domain::Domain;
use crate::error::{add_freq, Result};
use crate::fixtures::Instance;
use crate::gfjs::{coalesce, desummarize, join_size, Gfjs, RowSink};
use crate::oracle::{brute_force_join, gfjs_oracle, hash_join_plan, TupleMultiset};
use crate::pipeline::{summarize, Summary};

/// Outcome of every check; `None` where a check does not apply.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verification {
    pub join_size: u64,
    pub oracle_size: u64,
    /// Desummarized bag equals the brute-force bag.
    pub multiset_equal: bool,
    /// Desummarized rows equal the sorted brute-force rows, in order.
    /// Compared as runs of equal rows so large joins stay cheap.
    pub sorted_equal: bool,
    /// Coalesced summary equals the sort-and-encode reference run for run.
    pub coalesce_matches_oracle: bool,
    /// Every group sums to the root marginal's total.
    pub totals_consistent: bool,
    pub frequencies_positive: bool,
    /// Distinct result tuples within the edge-cover bound over distinct
    /// input tuples.
    pub within_agm_bound: bool,
    /// Generation visited exactly one generator row per emitted run.
    pub no_wasted_work: bool,
    pub hash_join_agrees: bool,
    /// Largest potential, and largest table.
    pub max_potential: usize,
    pub largest_table: u64,
}

impl Verification {
    pub fn all_pass(&self) -> bool {
        self.multiset_equal
            && self.sorted_equal
            && self.coalesce_matches_oracle
            && self.totals_consistent
            && self.frequencies_positive
            && self.within_agm_bound
            && self.no_wasted_work
            && self.hash_join_agrees
    }
}

/// Summarizes `instance` and compares it with both baselines.
pub fn verify(instance: &Instance) -> Result<(Summary, Verification)> {
    let summary = summarize(&instance.query, &instance.catalog)?;
    let v = verify_summary(instance, &summary)?;
    Ok((summary, v))
}

pub fn verify_summary(instance: &Instance, summary: &Summary) -> Result<Verification> {
    let gfjs = &summary.gfjs;
    let brute = brute_force_join(&instance.query, &instance.catalog)?;
    let (hashed, _) = hash_join_plan(&instance.query, &instance.catalog, None)?;

    let ours = TupleMultiset::from_gfjs(gfjs)?;
    let columns = gfjs.column_names();
    let brute_in_band_order = brute.reordered(&columns)?;

    let rows = emitted_runs(gfjs)?;

    let root_total = summary.generator.join_size()?;
    let totals_consistent = match join_size(gfjs) {
        Ok(n) => {
            n == root_total
                && gfjs
                    .groups()
                    .iter()
                    .all(|g| g.total().ok() == Some(root_total))
        }
        Err(_) => false,
    };

    Ok(Verification {
        join_size: gfjs.join_size(),
        oracle_size: brute.total(),
        multiset_equal: ours.reordered(brute.columns())? == brute,
        sorted_equal: rows == brute_in_band_order.sorted_counts(),
        coalesce_matches_oracle: coalesce_matches(gfjs, &brute)?,
        totals_consistent,
        frequencies_positive: gfjs
            .groups()
            .iter()
            .all(|g| g.freqs().iter().all(|&f| f >= 1)),
        within_agm_bound: rows.len() as f64 <= summary.set_bound * (1.0 + 1e-9),
        no_wasted_work: summary.generation.rows_visited == summary.generation.runs_emitted
            && summary.generation.dead_ends == 0,
        hash_join_agrees: hashed == brute,
        max_potential: summary.generator.stats().max_potential,
        largest_table: summary.largest_table,
    })
}

/// Desummarized rows in emission order, decoded, with adjacent equal rows
/// merged into one entry.
fn emitted_runs(gfjs: &Gfjs) -> Result<Vec<(Vec<String>, u64)>> {
    struct Runs<'a> {
        domain: &'a Domain,
        columns: Vec<usize>,
        last: Option<Vec<u32>>,
        out: Vec<(Vec<String>, u64)>,
    }
    impl RowSink for Runs<'_> {
        fn push(&mut self, row: &[u32], repeat: u64) -> Result<()> {
            if self.last.as_deref() == Some(row) {
                let last = self.out.last_mut().expect("a row was pushed");
                last.1 = add_freq(last.1, repeat)?;
                return Ok(());
            }
            let decoded = self
                .columns
                .iter()
                .zip(row)
                .map(|(&v, &c)| self.domain.decode(v, c).to_owned())
                .collect();
            self.out.push((decoded, repeat));
            self.last = Some(row.to_vec());
            Ok(())
        }
    }
    let mut sink = Runs {
        domain: gfjs.domain(),
        columns: gfjs.columns(),
        last: None,
        out: Vec::new(),
    };
    desummarize(gfjs, &mut sink)?;
    Ok(sink.out)
}

fn coalesce_matches(gfjs: &Gfjs, flat: &TupleMultiset) -> Result<bool> {
    let groups: Vec<Vec<String>> = gfjs
        .groups()
        .iter()
        .map(|g| {
            g.vars()
                .iter()
                .map(|&v| gfjs.domain().name(v).to_owned())
                .collect()
        })
        .collect();
    let reference = gfjs_oracle(flat, &groups)?;
    let ours = coalesce(gfjs)?;
    Ok((0..groups.len()).all(|i| ours.decoded(i) == reference.decoded(i)))
}
