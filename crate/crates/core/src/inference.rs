//! Building the summary generator by variable elimination.
//!
//! [`potential_join`] joins the potentials inside one maxclique
//! variable-at-a-time, descending only into values shared by every potential
//! that mentions the current variable. [`build_generator`] then runs the
//! elimination plan: non-projected variables are summed out first without
//! leaving a trace, and each remaining elimination unit records a
//! conditional `ψ(unit | separator)` before passing its message upward.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use crate::error::{mul_freq, Error, Result};
use crate::factor::{
    conditionalize, product, select, shared_values, sum_out, ConditionalFactor, Factor, Tuple,
};
use crate::graph::{EliminationPlan, Structure};
use crate::query::VarId;

/// Joint potential over a maxclique. Variables of `order` that no factor
/// mentions are skipped.
pub fn potential_join(order: &[VarId], factors: &[Factor]) -> Result<Factor> {
    potential_join_traced(order, factors, &mut |_, _| {})
}

/// [`potential_join`] reporting every `(variable, value)` it descends into.
pub fn potential_join_traced(
    order: &[VarId],
    factors: &[Factor],
    on_descend: &mut dyn FnMut(VarId, u32),
) -> Result<Factor> {
    let covered: Vec<VarId> = order
        .iter()
        .copied()
        .filter(|v| factors.iter().any(|f| f.contains_var(*v)))
        .collect();
    for f in factors {
        assert!(
            f.scope().iter().all(|v| covered.contains(v)),
            "order must cover every factor variable"
        );
    }
    let mut out: HashMap<Tuple, u64> = HashMap::new();
    let mut assignment = Vec::with_capacity(covered.len());
    let start: Vec<Factor> = factors.to_vec();
    descend(0, &covered, start, &mut assignment, &mut out, on_descend)?;
    Factor::from_entries(covered, out)
}

fn descend(
    depth: usize,
    order: &[VarId],
    factors: Vec<Factor>,
    assignment: &mut Vec<u32>,
    out: &mut HashMap<Tuple, u64>,
    on_descend: &mut dyn FnMut(VarId, u32),
) -> Result<()> {
    if depth == order.len() {
        // Bucket product: each factor is now a scalar.
        let mut freq = 1u64;
        for f in &factors {
            freq = mul_freq(freq, f.get(&[]).unwrap_or(0))?;
        }
        if freq > 0 {
            out.insert(assignment.clone(), freq);
        }
        return Ok(());
    }
    let var = order[depth];
    let (including, excluding): (Vec<Factor>, Vec<Factor>) =
        factors.into_iter().partition(|f| f.contains_var(var));
    let refs: Vec<&Factor> = including.iter().collect();
    for value in shared_values(&refs, var) {
        on_descend(var, value);
        let mut next: Vec<Factor> = including
            .iter()
            .map(|f| select(f, &[(var, value)]))
            .collect();
        next.extend(excluding.iter().cloned());
        assignment.push(value);
        descend(depth + 1, order, next, assignment, out, on_descend)?;
        assignment.pop();
    }
    Ok(())
}

/// Output of [`build_generator`]: the root marginal plus conditional factors
/// grouped into bands by depth.
#[derive(Debug, Clone)]
pub struct Generator {
    root_scope: Vec<VarId>,
    root: Factor,
    root_local: Factor,
    bands: Vec<Vec<ConditionalFactor>>,
    parents: Vec<(Vec<VarId>, Vec<VarId>)>,
    stats: InferenceStats,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InferenceStats {
    /// Largest potential handled (input, induced, local or product).
    pub max_potential: usize,
    /// Potentials induced by early projection.
    pub induced: usize,
    pub potential_join_time: Duration,
}

impl Generator {
    pub fn root_scope(&self) -> &[VarId] {
        &self.root_scope
    }

    /// `ψ₀`, the marginal of the root variables over the join.
    pub fn root(&self) -> &Factor {
        &self.root
    }

    /// Frequency of the root tuple in the root's own potentials, before
    /// child messages are multiplied in. 1 when no table sits at the root.
    pub fn root_bucket(&self, root_tuple: &[u32]) -> u64 {
        let key: Vec<u32> = self
            .root_local
            .scope()
            .iter()
            .map(|v| {
                root_tuple[self
                    .root_scope
                    .binary_search(v)
                    .expect("local scope within root")]
            })
            .collect();
        self.root_local.get(&key).unwrap_or(0)
    }

    /// `bands()[i]` holds the conditionals at depth `i + 1`.
    pub fn bands(&self) -> &[Vec<ConditionalFactor>] {
        &self.bands
    }

    /// Output variables of band `i`, in conditional order.
    pub fn band_scope(&self, band: usize) -> Vec<VarId> {
        self.bands[band]
            .iter()
            .flat_map(|psi| psi.child_scope().iter().copied())
            .collect()
    }

    /// `(variables, conditioned-on)` for every eliminated unit.
    pub fn parents(&self) -> &[(Vec<VarId>, Vec<VarId>)] {
        &self.parents
    }

    pub fn stats(&self) -> &InferenceStats {
        &self.stats
    }

    /// Sum of the root marginal: the join size.
    pub fn join_size(&self) -> Result<u64> {
        self.root.total()
    }

    /// All output columns, root first.
    pub fn columns(&self) -> Vec<VarId> {
        let mut cols = self.root_scope.clone();
        for b in 0..self.bands.len() {
            cols.extend(self.band_scope(b));
        }
        cols
    }
}

/// Runs the elimination plan over the learned potentials.
///
/// An empty root marginal is a valid result: the join is empty.
pub fn build_generator(plan: &EliminationPlan, factors: Vec<Factor>) -> Result<Generator> {
    let mut stats = InferenceStats {
        max_potential: factors.iter().map(Factor::len).max().unwrap_or(0),
        ..InferenceStats::default()
    };

    // Early projection: delete non-projected variables, keeping only the
    // potential they induce on their neighbours.
    let mut pool = factors;
    for &var in &plan.early_order {
        let (with, without): (Vec<Factor>, Vec<Factor>) =
            pool.into_iter().partition(|f| f.contains_var(var));
        let joint = product(&with)?;
        let induced = sum_out(&joint, &[var])?;
        stats.max_potential = stats.max_potential.max(joint.len());
        stats.induced += 1;
        pool = without;
        pool.push(induced);
    }

    // Each remaining potential goes to the shallowest node whose bag holds
    // its scope. Nodes are numbered breadth-first, so that is the first one.
    let bags: Vec<Vec<VarId>> = plan.nodes.iter().map(|n| n.bag()).collect();
    let mut assigned: Vec<Vec<Factor>> = vec![Vec::new(); plan.nodes.len()];
    for f in pool {
        let node = bags
            .iter()
            .position(|bag| f.scope().iter().all(|v| bag.binary_search(v).is_ok()))
            .ok_or_else(|| {
                Error::InvalidPlan(format!("no elimination unit covers scope {:?}", f.scope()))
            })?;
        assigned[node].push(f);
    }

    let junction = matches!(plan.structure, Structure::JunctionTree(_));
    let mut locals: Vec<Factor> = Vec::with_capacity(plan.nodes.len());
    for (node, factors) in assigned.into_iter().enumerate() {
        let local = match factors.len() {
            0 => Factor::unit(),
            1 => factors.into_iter().next().expect("one factor"),
            _ if junction => {
                let started = Instant::now();
                let joint = potential_join(&bags[node], &factors)?;
                stats.potential_join_time += started.elapsed();
                joint
            }
            _ => product(&factors)?,
        };
        stats.max_potential = stats.max_potential.max(local.len());
        locals.push(local);
    }

    let mut messages: Vec<Option<Factor>> = vec![None; plan.nodes.len()];
    let mut conditionals: Vec<Option<ConditionalFactor>> = vec![None; plan.nodes.len()];
    for &node in &plan.order {
        let node_plan = &plan.nodes[node];
        let incoming: Vec<Factor> = node_plan
            .children
            .iter()
            .map(|&c| messages[c].take().expect("children are eliminated first"))
            .collect();
        let psi = conditionalize(&locals[node], &incoming, &node_plan.separator)?;

        let mut parts = Vec::with_capacity(incoming.len() + 1);
        parts.push(locals[node].clone());
        parts.extend(incoming);
        let joint = product(&parts)?;
        stats.max_potential = stats.max_potential.max(joint.len());
        messages[node] = Some(sum_out(&joint, &node_plan.vars)?);
        conditionals[node] = Some(psi);
    }

    let root_local = locals[0].clone();
    let mut root_parts = vec![locals[0].clone()];
    for &c in &plan.nodes[0].children {
        root_parts.push(messages[c].take().expect("root children are eliminated"));
    }
    let root = product(&root_parts)?;
    stats.max_potential = stats.max_potential.max(root.len());

    let depth = plan.max_depth();
    let mut bands: Vec<Vec<ConditionalFactor>> = vec![Vec::new(); depth];
    let mut parents = Vec::new();
    for (node, psi) in conditionals.into_iter().enumerate() {
        if let Some(psi) = psi {
            parents.push((plan.nodes[node].vars.clone(), psi.parent_scope().to_vec()));
            bands[plan.nodes[node].depth - 1].push(psi);
        }
    }

    Ok(Generator {
        root_scope: root.scope().to_vec(),
        root,
        root_local,
        bands,
        parents,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::product;

    fn f(scope: &[VarId], rows: &[(&[u32], u64)]) -> Factor {
        Factor::from_entries(scope.to_vec(), rows.iter().map(|(t, n)| (t.to_vec(), *n))).unwrap()
    }

    #[test]
    fn joins_triangle_potentials() {
        let ab = f(&[0, 1], &[(&[1, 1], 5)]);
        let bc = f(&[1, 2], &[(&[1, 1], 10)]);
        let ca = f(&[0, 2], &[(&[1, 1], 20)]);
        let joint = potential_join(&[0, 1, 2], &[ab, bc, ca]).unwrap();
        assert_eq!(joint.sorted_entries(), [(&vec![1, 1, 1], 1000)]);
    }

    #[test]
    fn never_descends_into_unshared_values() {
        let ab = f(&[0, 1], &[(&[1, 1], 5)]);
        let bc = f(&[1, 2], &[(&[1, 1], 10), (&[2, 1], 7)]);
        let ca = f(&[0, 2], &[(&[1, 1], 20)]);
        let mut seen = Vec::new();
        let joint = potential_join_traced(&[0, 1, 2], &[ab, bc, ca], &mut |v, x| seen.push((v, x)))
            .unwrap();
        assert_eq!(joint.sorted_entries(), [(&vec![1, 1, 1], 1000)]);
        assert!(!seen.contains(&(1, 2)));
    }

    #[test]
    fn single_covering_factor_is_unchanged() {
        let abc = f(&[0, 1, 2], &[(&[0, 1, 2], 3), (&[2, 1, 0], 4)]);
        assert_eq!(
            potential_join(&[2, 0, 1], std::slice::from_ref(&abc)).unwrap(),
            abc
        );
    }

    #[test]
    fn matches_product_on_overlapping_factors() {
        let ab = f(&[0, 1], &[(&[0, 0], 2), (&[0, 1], 3), (&[1, 1], 1)]);
        let bc = f(&[1, 2], &[(&[0, 0], 4), (&[1, 0], 1), (&[1, 1], 6)]);
        let a = f(&[0], &[(&[0], 5), (&[1], 7)]);
        let joint = potential_join(&[1, 0, 2], &[ab.clone(), bc.clone(), a.clone()]).unwrap();
        assert_eq!(joint, product(&[ab, bc, a]).unwrap());
    }
}
