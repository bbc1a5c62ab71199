use std::sync::Arc;

use super::{Gfjs, RunGroup};
use crate::domain::Domain;
use crate::error::{mul_freq, Result};
use crate::factor::CondEntry;
use crate::inference::Generator;

/// Counters from one generation pass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GenerationStats {
    /// Generator rows (root entries and Cartesian-product rows) visited.
    pub rows_visited: u64,
    pub runs_emitted: u64,
    /// Parent keys for which some conditional had no children.
    pub dead_ends: u64,
}

pub fn generate_gfjs(generator: &Generator, domain: Arc<Domain>) -> Result<Gfjs> {
    generate_gfjs_traced(generator, domain).map(|(g, _)| g)
}

/// Walks the generator depth-first: every root entry becomes a root run,
/// and under it every combination of the next band's child lists becomes a
/// run whose frequency is the accumulated bucket product times the row's
/// fac product.
pub fn generate_gfjs_traced(
    generator: &Generator,
    domain: Arc<Domain>,
) -> Result<(Gfjs, GenerationStats)> {
    let mut groups = vec![RunGroup::new(generator.root_scope().to_vec())];
    for b in 0..generator.bands().len() {
        groups.push(RunGroup::new(generator.band_scope(b)));
    }
    let mut walk = Walk {
        generator,
        groups,
        keys: vec![0; domain.len()],
        stats: GenerationStats::default(),
        row: Vec::new(),
    };

    for (tuple, freq) in generator.root().sorted_entries() {
        walk.stats.rows_visited += 1;
        walk.groups[0].push(tuple, freq);
        walk.stats.runs_emitted += 1;
        for (&v, &c) in generator.root_scope().iter().zip(tuple.iter()) {
            walk.keys[v] = c;
        }
        if !generator.bands().is_empty() {
            walk.band(0, generator.root_bucket(tuple))?;
        }
    }

    let stats = walk.stats;
    Ok((Gfjs::new(domain, walk.groups)?, stats))
}

struct Walk<'a> {
    generator: &'a Generator,
    groups: Vec<RunGroup>,
    /// Current value of every variable on the path from the root.
    keys: Vec<u32>,
    stats: GenerationStats,
    row: Vec<u32>,
}

impl Walk<'_> {
    fn band(&mut self, band: usize, p_bucket: u64) -> Result<()> {
        let generator = self.generator;
        let psis = &generator.bands()[band];
        let mut lists: Vec<&[CondEntry]> = Vec::with_capacity(psis.len());
        let mut parent = Vec::new();
        for psi in psis {
            parent.clear();
            parent.extend(psi.parent_scope().iter().map(|&v| self.keys[v]));
            let list = psi.get(&parent);
            if list.is_empty() {
                self.stats.dead_ends += 1;
                return Ok(());
            }
            lists.push(list);
        }

        // Odometer over the child lists, last list fastest, so rows come out
        // in ascending order of the concatenated child tuples.
        let mut idx = vec![0usize; lists.len()];
        loop {
            self.stats.rows_visited += 1;
            let mut bucket = p_bucket;
            let mut fac = 1u64;
            self.row.clear();
            for (k, psi) in psis.iter().enumerate() {
                let entry = &lists[k][idx[k]];
                bucket = mul_freq(bucket, entry.bucket)?;
                fac = mul_freq(fac, entry.fac)?;
                self.row.extend_from_slice(&entry.child);
                for (&v, &c) in psi.child_scope().iter().zip(&entry.child) {
                    self.keys[v] = c;
                }
            }
            let freq = mul_freq(bucket, fac)?;
            self.groups[band + 1].push(&self.row, freq);
            self.stats.runs_emitted += 1;
            if band + 1 < generator.bands().len() {
                self.band(band + 1, bucket)?;
            }

            let mut k = lists.len();
            loop {
                if k == 0 {
                    return Ok(());
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < lists[k].len() {
                    break;
                }
                idx[k] = 0;
            }
        }
    }
}
