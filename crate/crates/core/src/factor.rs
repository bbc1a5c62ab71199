//! Frequency potentials.
//!
//! A [`Factor`] maps value-code tuples over its scope to exact occurrence
//! counts. Entries with frequency zero are never stored, so every operation
//! here only ever walks combinations that actually occur. All arithmetic is
//! checked; overflow is reported as [`Error::FrequencyOverflow`].

use std::collections::HashMap;

use crate::domain::Domain;
use crate::error::{add_freq, mul_freq, Error, Result};
use crate::query::{Binding, VarId};
use crate::relation::Relation;

pub type Tuple = Vec<u32>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factor {
    /// Sorted ascending.
    scope: Vec<VarId>,
    entries: HashMap<Tuple, u64>,
}

impl Factor {
    pub fn empty(mut scope: Vec<VarId>) -> Self {
        scope.sort_unstable();
        scope.dedup();
        Factor {
            scope,
            entries: HashMap::new(),
        }
    }

    /// The scalar factor 1: empty scope, one entry.
    pub fn unit() -> Self {
        Factor {
            scope: Vec::new(),
            entries: HashMap::from([(Vec::new(), 1)]),
        }
    }

    /// Builds a factor from `(tuple, freq)` pairs laid out in `scope` order.
    /// Repeated tuples are summed and zero frequencies dropped.
    pub fn from_entries<I>(scope: Vec<VarId>, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Tuple, u64)>,
    {
        let mut order: Vec<usize> = (0..scope.len()).collect();
        order.sort_by_key(|&i| scope[i]);
        let sorted_scope: Vec<VarId> = order.iter().map(|&i| scope[i]).collect();
        if sorted_scope.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidPlan("factor scope repeats a variable".into()));
        }
        let mut map: HashMap<Tuple, u64> = HashMap::new();
        for (tuple, freq) in entries {
            assert_eq!(tuple.len(), scope.len(), "tuple arity must match scope");
            if freq == 0 {
                continue;
            }
            let key: Tuple = order.iter().map(|&i| tuple[i]).collect();
            let slot = map.entry(key).or_insert(0);
            *slot = add_freq(*slot, freq)?;
        }
        Ok(Factor {
            scope: sorted_scope,
            entries: map,
        })
    }

    pub fn scope(&self) -> &[VarId] {
        &self.scope
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains_var(&self, var: VarId) -> bool {
        self.scope.binary_search(&var).is_ok()
    }

    pub fn get(&self, tuple: &[u32]) -> Option<u64> {
        self.entries.get(tuple).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Tuple, u64)> + '_ {
        self.entries.iter().map(|(t, &f)| (t, f))
    }

    /// Entries in ascending code-tuple order.
    pub fn sorted_entries(&self) -> Vec<(&Tuple, u64)> {
        let mut v: Vec<(&Tuple, u64)> = self.iter().collect();
        v.sort_unstable_by(|a, b| a.0.cmp(b.0));
        v
    }

    pub fn total(&self) -> Result<u64> {
        self.entries
            .values()
            .try_fold(0u64, |acc, &f| add_freq(acc, f))
    }

    /// Distinct values of `var` present in this factor, ascending.
    pub fn projection(&self, var: VarId) -> Vec<u32> {
        let Ok(pos) = self.scope.binary_search(&var) else {
            return Vec::new();
        };
        let mut values: Vec<u32> = self.entries.keys().map(|t| t[pos]).collect();
        values.sort_unstable();
        values.dedup();
        values
    }

    fn positions(&self, vars: &[VarId]) -> Vec<usize> {
        vars.iter()
            .map(|v| self.scope.binary_search(v).expect("variable in scope"))
            .collect()
    }
}

/// Natural join of two factors that keeps both input frequencies.
/// Returns the sorted union scope and `(tuple, freq_a, freq_b)` rows.
pub(crate) fn join_entries(a: &Factor, b: &Factor) -> (Vec<VarId>, Vec<(Tuple, u64, u64)>) {
    let mut scope: Vec<VarId> = a.scope.iter().chain(&b.scope).copied().collect();
    scope.sort_unstable();
    scope.dedup();
    let shared: Vec<VarId> = a
        .scope
        .iter()
        .filter(|v| b.contains_var(**v))
        .copied()
        .collect();
    let a_shared = a.positions(&shared);
    let b_shared = b.positions(&shared);

    // For each output column: Ok(i) = take from a, Err(i) = take from b.
    let sources: Vec<std::result::Result<usize, usize>> = scope
        .iter()
        .map(|v| match a.scope.binary_search(v) {
            Ok(i) => Ok(i),
            Err(_) => Err(b.scope.binary_search(v).expect("union variable")),
        })
        .collect();

    let mut index: HashMap<Tuple, Vec<(&Tuple, u64)>> = HashMap::new();
    for (t, f) in b.iter() {
        let key: Tuple = b_shared.iter().map(|&p| t[p]).collect();
        index.entry(key).or_default().push((t, f));
    }

    let mut out = Vec::new();
    let mut key = Vec::with_capacity(shared.len());
    for (ta, fa) in a.iter() {
        key.clear();
        key.extend(a_shared.iter().map(|&p| ta[p]));
        if let Some(matches) = index.get(&key) {
            for &(tb, fb) in matches {
                let tuple: Tuple = sources
                    .iter()
                    .map(|s| match *s {
                        Ok(i) => ta[i],
                        Err(i) => tb[i],
                    })
                    .collect();
                out.push((tuple, fa, fb));
            }
        }
    }
    (scope, out)
}

fn multiply(a: &Factor, b: &Factor) -> Result<Factor> {
    let (scope, rows) = join_entries(a, b);
    let mut entries = HashMap::with_capacity(rows.len());
    for (t, fa, fb) in rows {
        entries.insert(t, mul_freq(fa, fb)?);
    }
    Ok(Factor { scope, entries })
}

/// Product of potentials: every combination agreeing on shared variables,
/// with multiplied frequencies. The product of an empty list is the unit.
pub fn product(factors: &[Factor]) -> Result<Factor> {
    let Some((first, rest)) = factors.split_first() else {
        return Ok(Factor::unit());
    };
    rest.iter()
        .try_fold(first.clone(), |acc, f| multiply(&acc, f))
}

/// Sums `vars` out of `factor`. Summing out the whole scope yields a scalar
/// factor (empty scope) holding the total.
pub fn sum_out(factor: &Factor, vars: &[VarId]) -> Result<Factor> {
    let keep: Vec<usize> = (0..factor.scope.len())
        .filter(|&i| !vars.contains(&factor.scope[i]))
        .collect();
    let scope: Vec<VarId> = keep.iter().map(|&i| factor.scope[i]).collect();
    let mut entries: HashMap<Tuple, u64> = HashMap::new();
    for (t, f) in factor.iter() {
        let key: Tuple = keep.iter().map(|&i| t[i]).collect();
        let slot = entries.entry(key).or_insert(0);
        *slot = add_freq(*slot, f)?;
    }
    Ok(Factor { scope, entries })
}

/// Keeps entries agreeing with `assignment` and drops the assigned
/// variables from the scope.
pub fn select(factor: &Factor, assignment: &[(VarId, u32)]) -> Factor {
    let fixed: Vec<(usize, u32)> = assignment
        .iter()
        .filter_map(|&(v, c)| factor.scope.binary_search(&v).ok().map(|p| (p, c)))
        .collect();
    let keep: Vec<usize> = (0..factor.scope.len())
        .filter(|i| !fixed.iter().any(|(p, _)| p == i))
        .collect();
    let scope: Vec<VarId> = keep.iter().map(|&i| factor.scope[i]).collect();
    let entries = factor
        .iter()
        .filter(|(t, _)| fixed.iter().all(|&(p, c)| t[p] == c))
        .map(|(t, f)| (keep.iter().map(|&i| t[i]).collect(), f))
        .collect();
    Factor { scope, entries }
}

/// Values of `var` present in every factor, ascending.
pub fn shared_values(factors: &[&Factor], var: VarId) -> Vec<u32> {
    let mut iter = factors.iter();
    let Some(first) = iter.next() else {
        return Vec::new();
    };
    let mut acc = first.projection(var);
    for f in iter {
        let other = f.projection(var);
        acc.retain(|v| other.binary_search(v).is_ok());
    }
    acc
}

/// Counts the bound columns of `relation` in one pass, re-encoding values
/// into the join-wide `domain`.
pub fn learn_factor(relation: &Relation, bindings: &[Binding], domain: &Domain) -> Result<Factor> {
    let mut columns = Vec::with_capacity(bindings.len());
    let mut scope = Vec::with_capacity(bindings.len());
    let mut remaps: Vec<Vec<u32>> = Vec::with_capacity(bindings.len());
    for b in bindings {
        let col = relation
            .column_index(&b.column)
            .ok_or_else(|| Error::UnknownColumn {
                relation: relation.name().to_owned(),
                column: b.column.clone(),
            })?;
        let var = domain
            .var_id(&b.variable)
            .ok_or_else(|| Error::UnknownVariable(b.variable.clone()))?;
        let remap = relation.dictionaries()[col]
            .entries()
            .iter()
            .map(|value| {
                domain.encode(var, value).ok_or_else(|| {
                    Error::InvalidPlan(format!(
                        "value `{value}` of {} missing from the join domain",
                        b.variable
                    ))
                })
            })
            .collect::<Result<Vec<u32>>>()?;
        columns.push(col);
        scope.push(var);
        remaps.push(remap);
    }

    let mut counts: HashMap<Tuple, u64> = HashMap::new();
    let mut key = Vec::with_capacity(columns.len());
    for row in relation.rows() {
        key.clear();
        key.extend(
            columns
                .iter()
                .zip(&remaps)
                .map(|(&c, remap)| remap[row[c] as usize]),
        );
        if let Some(slot) = counts.get_mut(key.as_slice()) {
            *slot = add_freq(*slot, 1)?;
        } else {
            counts.insert(key.clone(), 1);
        }
    }
    Factor::from_entries(scope, counts)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CondEntry {
    pub child: Tuple,
    /// Frequency of this (parent, child) combination in the local potential.
    pub bucket: u64,
    /// Product of the child-message frequencies at `child`.
    pub fac: u64,
}

/// `ψ(child | parent)`: for every parent tuple, the surviving child tuples in
/// ascending order with their `bucket` and `fac` values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionalFactor {
    parent_scope: Vec<VarId>,
    child_scope: Vec<VarId>,
    entries: HashMap<Tuple, Vec<CondEntry>>,
}

impl ConditionalFactor {
    pub fn parent_scope(&self) -> &[VarId] {
        &self.parent_scope
    }

    pub fn child_scope(&self) -> &[VarId] {
        &self.child_scope
    }

    /// Child rows for a parent tuple (laid out in `parent_scope` order).
    pub fn get(&self, parent: &[u32]) -> &[CondEntry] {
        self.entries.get(parent).map_or(&[], Vec::as_slice)
    }

    pub fn parents(&self) -> impl Iterator<Item = (&Tuple, &[CondEntry])> + '_ {
        self.entries.iter().map(|(p, c)| (p, c.as_slice()))
    }

    pub fn parent_count(&self) -> usize {
        self.entries.len()
    }

    /// Total number of (parent, child) rows.
    pub fn len(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The message this conditional sends upward: for each parent tuple,
    /// the sum of `bucket * fac` over its children.
    pub fn message(&self) -> Result<Factor> {
        let mut rows = Vec::with_capacity(self.entries.len());
        for (p, children) in &self.entries {
            let mut total = 0u64;
            for c in children {
                total = add_freq(total, mul_freq(c.bucket, c.fac)?)?;
            }
            rows.push((p.clone(), total));
        }
        Factor::from_entries(self.parent_scope.clone(), rows)
    }
}

/// Conditions the product `local × messages` on `parents`.
///
/// Only combinations present in the local potential and in every message
/// survive. `bucket` is the local frequency and `fac` the product of the
/// message frequencies (1 when there are no messages). Parent variables
/// absent from every input are dropped from the parent scope.
pub fn conditionalize(
    local: &Factor,
    messages: &[Factor],
    parents: &[VarId],
) -> Result<ConditionalFactor> {
    let incoming = product(messages)?;
    let (scope, rows) = join_entries(local, &incoming);
    let parent_pos: Vec<usize> = (0..scope.len())
        .filter(|&i| parents.contains(&scope[i]))
        .collect();
    let child_pos: Vec<usize> = (0..scope.len())
        .filter(|&i| !parents.contains(&scope[i]))
        .collect();

    let mut entries: HashMap<Tuple, Vec<CondEntry>> = HashMap::new();
    for (t, bucket, fac) in rows {
        let parent: Tuple = parent_pos.iter().map(|&i| t[i]).collect();
        let child: Tuple = child_pos.iter().map(|&i| t[i]).collect();
        entries
            .entry(parent)
            .or_default()
            .push(CondEntry { child, bucket, fac });
    }
    for list in entries.values_mut() {
        list.sort_unstable_by(|a, b| a.child.cmp(&b.child));
    }
    Ok(ConditionalFactor {
        parent_scope: parent_pos.iter().map(|&i| scope[i]).collect(),
        child_scope: child_pos.iter().map(|&i| scope[i]).collect(),
        entries,
    })
}
