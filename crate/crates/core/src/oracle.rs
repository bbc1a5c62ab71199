//! Independent join evaluators used to check the summary and as benchmark
//! baselines. They work on raw strings and share nothing with the inference
//! path beyond CSV loading.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::Arc;

use crate::domain::Domain;
use crate::error::{add_freq, mul_freq, Error, Result};
use crate::gfjs::{desummarize, Gfjs, RowSink, RunGroup};
use crate::pipeline::Catalog;
use crate::query::{build_join_graph, JoinQuery};

/// Distinct rows of an intermediate result with their multiplicities.
type CountedRows<'a> = Vec<(Vec<&'a str>, u64)>;

/// Most combinations of distinct tuples the oracles will enumerate.
pub const ORACLE_LIMIT: u64 = 10_000_000;

/// Bag of tuples over named columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TupleMultiset {
    columns: Vec<String>,
    counts: BTreeMap<Vec<String>, u64>,
}

impl TupleMultiset {
    pub fn new(columns: Vec<String>) -> Self {
        TupleMultiset {
            columns,
            counts: BTreeMap::new(),
        }
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn add(&mut self, tuple: Vec<String>, n: u64) -> Result<()> {
        assert_eq!(tuple.len(), self.columns.len());
        if n == 0 {
            return Ok(());
        }
        let slot = self.counts.entry(tuple).or_insert(0);
        *slot = add_freq(*slot, n)?;
        Ok(())
    }

    pub fn get(&self, tuple: &[String]) -> u64 {
        self.counts.get(tuple).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &BTreeMap<Vec<String>, u64> {
        &self.counts
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Same bag with columns rearranged to `order`; columns left out are
    /// projected away.
    pub fn reordered(&self, order: &[String]) -> Result<TupleMultiset> {
        let pos = self.positions(order)?;
        let mut out = TupleMultiset::new(order.to_vec());
        for (t, &n) in &self.counts {
            out.add(pos.iter().map(|&i| t[i].clone()).collect(), n)?;
        }
        Ok(out)
    }

    /// Bag projection onto `columns`.
    pub fn project(&self, columns: &[String]) -> Result<TupleMultiset> {
        self.reordered(columns)
    }

    fn positions(&self, order: &[String]) -> Result<Vec<usize>> {
        order
            .iter()
            .map(|c| {
                self.columns
                    .iter()
                    .position(|x| x == c)
                    .ok_or_else(|| Error::UnknownVariable(c.clone()))
            })
            .collect()
    }

    /// Distinct tuples with multiplicities, in lexicographic order.
    pub fn sorted_counts(&self) -> Vec<(Vec<String>, u64)> {
        self.counts.iter().map(|(t, &n)| (t.clone(), n)).collect()
    }

    /// Expands a summary into a bag over its own column names.
    pub fn from_gfjs(gfjs: &Gfjs) -> Result<TupleMultiset> {
        struct Collect<'a> {
            domain: &'a Domain,
            columns: Vec<usize>,
            bag: TupleMultiset,
        }
        impl RowSink for Collect<'_> {
            fn push(&mut self, row: &[u32], repeat: u64) -> Result<()> {
                let tuple = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(&v, &c)| self.domain.decode(v, c).to_owned())
                    .collect();
                self.bag.add(tuple, repeat)
            }
        }
        let mut sink = Collect {
            domain: gfjs.domain(),
            columns: gfjs.columns(),
            bag: TupleMultiset::new(gfjs.column_names()),
        };
        desummarize(gfjs, &mut sink)?;
        Ok(sink.bag)
    }
}

/// One table reference reduced to its bound columns: each distinct tuple
/// of those columns with the number of rows carrying it.
struct BoundTable {
    /// Variable slot of each bound column, in binding order.
    vars: Vec<usize>,
    rows: Vec<(Vec<String>, u64)>,
}

fn bind_tables(
    query: &JoinQuery,
    catalog: &Catalog,
    variables: &[String],
) -> Result<Vec<BoundTable>> {
    let mut out = Vec::with_capacity(query.tables.len());
    for t in &query.tables {
        let rel = catalog.get(&t.path)?;
        let mut cols = Vec::with_capacity(t.bindings.len());
        let mut vars = Vec::with_capacity(t.bindings.len());
        for b in &t.bindings {
            cols.push(
                rel.column_index(&b.column)
                    .ok_or_else(|| Error::UnknownColumn {
                        relation: rel.name().to_owned(),
                        column: b.column.clone(),
                    })?,
            );
            vars.push(
                variables
                    .iter()
                    .position(|v| v == &b.variable)
                    .ok_or_else(|| Error::UnknownVariable(b.variable.clone()))?,
            );
        }
        let mut counts: BTreeMap<Vec<String>, u64> = BTreeMap::new();
        for i in 0..rel.row_count() {
            let row = rel.decode_row(i)?;
            *counts
                .entry(cols.iter().map(|&c| row[c].to_owned()).collect())
                .or_insert(0) += 1;
        }
        out.push(BoundTable {
            vars,
            rows: counts.into_iter().collect(),
        });
    }
    Ok(out)
}

/// Nested-loop evaluation of every equality constraint, projected as a bag.
/// Duplicate rows are folded into multiplicities first, so the loop visits
/// each combination of distinct tuples once. Gives up with
/// [`Error::TooLargeForOracle`] after [`ORACLE_LIMIT`] combinations.
pub fn brute_force_join(query: &JoinQuery, catalog: &Catalog) -> Result<TupleMultiset> {
    build_join_graph(query)?;
    let variables = query.variables();
    let tables = bind_tables(query, catalog, &variables)?;
    let projection: Vec<usize> = query
        .projection
        .iter()
        .map(|p| {
            variables
                .iter()
                .position(|v| v == p)
                .ok_or_else(|| Error::UnknownVariable(p.clone()))
        })
        .collect::<Result<_>>()?;

    let mut bag = TupleMultiset::new(query.projection.clone());
    let mut assignment: Vec<Option<&str>> = vec![None; variables.len()];
    let mut visited = 0u64;
    nested_loop(
        &tables,
        0,
        1,
        &mut assignment,
        &projection,
        &mut bag,
        &mut visited,
    )?;
    Ok(bag)
}

fn nested_loop<'a>(
    tables: &'a [BoundTable],
    depth: usize,
    multiplicity: u64,
    assignment: &mut Vec<Option<&'a str>>,
    projection: &[usize],
    bag: &mut TupleMultiset,
    visited: &mut u64,
) -> Result<()> {
    if depth == tables.len() {
        *visited += 1;
        if *visited > ORACLE_LIMIT {
            return Err(Error::TooLargeForOracle {
                estimate: *visited as f64,
                limit: ORACLE_LIMIT,
            });
        }
        let tuple = projection
            .iter()
            .map(|&v| assignment[v].expect("every variable is bound").to_owned())
            .collect();
        return bag.add(tuple, multiplicity);
    }
    let table = &tables[depth];
    'rows: for (row, n) in &table.rows {
        let mut newly = Vec::new();
        for (value, &var) in row.iter().zip(&table.vars) {
            match assignment[var] {
                Some(bound) if bound != value => {
                    for &v in &newly {
                        assignment[v] = None;
                    }
                    continue 'rows;
                }
                Some(_) => {}
                None => {
                    assignment[var] = Some(value.as_str());
                    newly.push(var);
                }
            }
        }
        nested_loop(
            tables,
            depth + 1,
            mul_freq(multiplicity, *n)?,
            assignment,
            projection,
            bag,
            visited,
        )?;
        for &v in &newly {
            assignment[v] = None;
        }
    }
    Ok(())
}

/// Counters from a binary join plan.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HashJoinStats {
    /// Table references in the order they were joined.
    pub order: Vec<usize>,
    /// Size of each intermediate result (after joining 2, 3, ..., n-1
    /// tables).
    pub intermediate_sizes: Vec<u64>,
    /// Intermediate tuples of each step that extend to no final tuple.
    pub uir_per_step: Vec<u64>,
    pub uir: u64,
}

/// Left-deep default: start with the first table and repeatedly add the
/// lowest-numbered table sharing a variable with those already joined.
pub fn default_join_order(query: &JoinQuery) -> Vec<usize> {
    let n = query.tables.len();
    if n == 0 {
        return Vec::new();
    }
    let vars = |i: usize| -> HashSet<&str> {
        query.tables[i]
            .bindings
            .iter()
            .map(|b| b.variable.as_str())
            .collect()
    };
    let mut order = vec![0];
    let mut seen: HashSet<&str> = vars(0);
    while order.len() < n {
        let next = (0..n)
            .filter(|i| !order.contains(i))
            .find(|&i| vars(i).iter().any(|v| seen.contains(v)))
            .unwrap_or_else(|| {
                (0..n)
                    .find(|i| !order.contains(i))
                    .expect("a table is left")
            });
        seen.extend(vars(next));
        order.push(next);
    }
    order
}

/// Pairwise build/probe joins in `order` (default: [`default_join_order`]).
pub fn hash_join_plan(
    query: &JoinQuery,
    catalog: &Catalog,
    order: Option<&[usize]>,
) -> Result<(TupleMultiset, HashJoinStats)> {
    let order: Vec<usize> = match order {
        Some(o) => o.to_vec(),
        None => default_join_order(query),
    };
    let mut check = order.clone();
    check.sort_unstable();
    if check != (0..query.tables.len()).collect::<Vec<_>>() {
        return Err(Error::InvalidPlan(
            "join order must list every table once".into(),
        ));
    }
    let variables = query.variables();
    let tables = bind_tables(query, catalog, &variables)?;

    // Current result: variable slots it binds, and its distinct rows with
    // multiplicities. Sizes and UIR counts below are bag counts.
    let mut slots: Vec<usize> = Vec::new();
    let mut rows: CountedRows = vec![(Vec::new(), 1)];
    let mut steps: Vec<(Vec<usize>, CountedRows)> = Vec::new();

    for (step, &ti) in order.iter().enumerate() {
        let table = &tables[ti];
        // The query grammar binds each variable at most once per table.
        let shared: Vec<(usize, usize)> = table
            .vars
            .iter()
            .enumerate()
            .filter_map(|(c, v)| slots.iter().position(|s| s == v).map(|p| (p, c)))
            .collect();
        let fresh: Vec<(usize, usize)> = table
            .vars
            .iter()
            .enumerate()
            .filter(|(_, v)| !slots.contains(v))
            .map(|(c, &v)| (v, c))
            .collect();

        let mut build: HashMap<Vec<&str>, Vec<&(Vec<String>, u64)>> = HashMap::new();
        for row in &table.rows {
            let key: Vec<&str> = shared.iter().map(|&(_, c)| row.0[c].as_str()).collect();
            build.entry(key).or_default().push(row);
        }

        let mut next: Vec<(Vec<&str>, u64)> = Vec::new();
        for (left, n) in &rows {
            let key: Vec<&str> = shared.iter().map(|&(p, _)| left[p]).collect();
            if let Some(matches) = build.get(&key) {
                for (right, m) in matches {
                    let mut joined = left.clone();
                    joined.extend(fresh.iter().map(|&(_, c)| right[c].as_str()));
                    next.push((joined, mul_freq(*n, *m)?));
                }
            }
            if next.len() as u64 > ORACLE_LIMIT {
                return Err(Error::TooLargeForOracle {
                    estimate: next.len() as f64,
                    limit: ORACLE_LIMIT,
                });
            }
        }
        slots.extend(fresh.iter().map(|&(v, _)| v));
        rows = next;
        if step >= 1 && step + 1 < order.len() {
            steps.push((slots.clone(), rows.clone()));
        }
    }

    let mut stats = HashJoinStats {
        order: order.clone(),
        ..HashJoinStats::default()
    };
    for (step_slots, step_rows) in &steps {
        let positions: Vec<usize> = step_slots
            .iter()
            .map(|v| {
                slots
                    .iter()
                    .position(|s| s == v)
                    .expect("final result binds every variable")
            })
            .collect();
        let survivors: HashSet<Vec<&str>> = rows
            .iter()
            .map(|(r, _)| positions.iter().map(|&p| r[p]).collect())
            .collect();
        let mut size = 0u64;
        let mut dead = 0u64;
        for (r, n) in step_rows {
            size = add_freq(size, *n)?;
            if !survivors.contains(r) {
                dead = add_freq(dead, *n)?;
            }
        }
        stats.intermediate_sizes.push(size);
        stats.uir_per_step.push(dead);
        stats.uir = add_freq(stats.uir, dead)?;
    }

    let projection: Vec<usize> = query
        .projection
        .iter()
        .map(|p| {
            let var = variables
                .iter()
                .position(|v| v == p)
                .ok_or_else(|| Error::UnknownVariable(p.clone()))?;
            Ok(slots
                .iter()
                .position(|&s| s == var)
                .expect("final result binds every variable"))
        })
        .collect::<Result<_>>()?;
    let mut bag = TupleMultiset::new(query.projection.clone());
    for (r, n) in &rows {
        bag.add(projection.iter().map(|&p| r[p].to_owned()).collect(), *n)?;
    }
    Ok((bag, stats))
}

/// Reference summary: sort the flat result by the concatenated group
/// columns, then run-length encode each group with adjacent runs merged.
/// `groups` lists the column names of each group.
pub fn gfjs_oracle(flat: &TupleMultiset, groups: &[Vec<String>]) -> Result<Gfjs> {
    let order: Vec<String> = groups.iter().flatten().cloned().collect();
    let bag = flat.reordered(&order)?;

    let mut builder = Domain::builder(order.clone());
    for (i, _) in order.iter().enumerate() {
        builder.add(i, bag.counts().keys().map(|t| t[i].as_str()));
    }
    let domain = Arc::new(builder.build());

    let mut out = Vec::with_capacity(groups.len());
    let mut base = 0;
    for g in groups {
        let ids: Vec<usize> = (base..base + g.len()).collect();
        let mut group = RunGroup::new(ids.clone());
        let mut current: Option<(Vec<u32>, u64)> = None;
        // BTreeMap iteration is the lexicographic sort of the flat rows.
        for (t, &n) in bag.counts() {
            let codes: Vec<u32> = ids
                .iter()
                .map(|&v| domain.encode(v, &t[v]).expect("value was added"))
                .collect();
            current = match current {
                Some((c, f)) if c == codes => Some((c, add_freq(f, n)?)),
                Some((c, f)) => {
                    group.push(&c, f);
                    Some((codes, n))
                }
                None => Some((codes, n)),
            };
        }
        if let Some((c, f)) = current {
            group.push(&c, f);
        }
        base += g.len();
        out.push(group);
    }
    Gfjs::new(domain, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bag(columns: &[&str], rows: &[(&[&str], u64)]) -> TupleMultiset {
        let mut b = TupleMultiset::new(columns.iter().map(|s| s.to_string()).collect());
        for (t, n) in rows {
            b.add(t.iter().map(|s| s.to_string()).collect(), *n)
                .unwrap();
        }
        b
    }

    #[test]
    fn oracle_merges_adjacent_runs() {
        let flat = bag(
            &["A", "B"],
            &[(&["a1", "b1"], 2), (&["a1", "b2"], 1), (&["a2", "b1"], 3)],
        );
        let g = gfjs_oracle(&flat, &[vec!["A".into()], vec!["B".into()]]).unwrap();
        assert_eq!(g.decoded(0), [(vec!["a1"], 3), (vec!["a2"], 3)]);
        assert_eq!(
            g.decoded(1),
            [(vec!["b1"], 2), (vec!["b2"], 1), (vec!["b1"], 3)]
        );
    }

    #[test]
    fn single_row_is_one_run_per_column() {
        let flat = bag(&["A", "B"], &[(&["x", "y"], 1)]);
        let g = gfjs_oracle(&flat, &[vec!["A".into()], vec!["B".into()]]).unwrap();
        assert_eq!(g.run_counts(), [1, 1]);
        assert_eq!(g.join_size(), 1);
    }

    #[test]
    fn reference_summary_listing_reproduces_its_summary() {
        let flat = bag(
            &["A", "B", "C", "D"],
            &[
                (&["a3", "b3", "c2", "d2"], 8),
                (&["a3", "b4", "c3", "d3"], 16),
                (&["a3", "b4", "c4", "d4"], 8),
            ],
        );
        let groups: Vec<Vec<String>> = ["A", "B", "C", "D"]
            .iter()
            .map(|c| vec![c.to_string()])
            .collect();
        let g = gfjs_oracle(&flat, &groups).unwrap();
        assert_eq!(g.decoded(0), [(vec!["a3"], 32)]);
        assert_eq!(g.decoded(1), [(vec!["b3"], 8), (vec!["b4"], 24)]);
        assert_eq!(
            g.decoded(2),
            [(vec!["c2"], 8), (vec!["c3"], 16), (vec!["c4"], 8)]
        );
        assert_eq!(
            g.decoded(3),
            [(vec!["d2"], 8), (vec!["d3"], 16), (vec!["d4"], 8)]
        );
    }

    #[test]
    fn projection_is_a_bag() {
        let flat = bag(&["A", "B"], &[(&["a", "1"], 2), (&["a", "2"], 3)]);
        let p = flat.project(&["A".to_string()]).unwrap();
        assert_eq!(p.get(&["a".to_string()]), 5);
    }
}
