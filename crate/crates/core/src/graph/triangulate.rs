use std::collections::BTreeSet;

use crate::query::{JoinGraph, VarId};

/// Output of a min-fill elimination pass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triangulation {
    /// Eliminated variables, in elimination order.
    pub order: Vec<VarId>,
    /// Fill-in edges `(u, v)` with `u < v`, in the order they were added.
    pub fill_ins: Vec<(VarId, VarId)>,
    /// Elimination cliques not contained in another elimination clique,
    /// in emission order. Each clique is sorted.
    pub maxcliques: Vec<Vec<VarId>>,
    /// Adjacency among the variables left after the pass (frozen ones),
    /// including fill-ins. Eliminated variables have empty sets.
    pub(crate) residual: Vec<BTreeSet<VarId>>,
}

/// Greedy min-fill elimination over every variable not in `frozen`.
///
/// Ties go to the smallest variable id (= lexicographically smallest name).
pub fn min_fill_in(graph: &JoinGraph, frozen: &BTreeSet<VarId>) -> Triangulation {
    let alive = vec![true; graph.len()];
    triangulate(graph.adjacency().to_vec(), alive, frozen)
}

pub(crate) fn triangulate(
    mut adjacency: Vec<BTreeSet<VarId>>,
    mut alive: Vec<bool>,
    frozen: &BTreeSet<VarId>,
) -> Triangulation {
    let mut order = Vec::new();
    let mut fill_ins = Vec::new();
    let mut cliques: Vec<Vec<VarId>> = Vec::new();

    loop {
        let pick = (0..adjacency.len())
            .filter(|v| alive[*v] && !frozen.contains(v))
            .min_by_key(|&v| (fill_count(&adjacency, v), v));
        let Some(v) = pick else { break };

        let nbrs: Vec<VarId> = adjacency[v].iter().copied().collect();
        for (i, &a) in nbrs.iter().enumerate() {
            for &b in &nbrs[i + 1..] {
                if adjacency[a].insert(b) {
                    adjacency[b].insert(a);
                    fill_ins.push((a.min(b), a.max(b)));
                }
            }
        }
        let mut clique = nbrs.clone();
        clique.push(v);
        clique.sort_unstable();
        cliques.push(clique);

        for &a in &nbrs {
            adjacency[a].remove(&v);
        }
        adjacency[v].clear();
        alive[v] = false;
        order.push(v);
    }

    Triangulation {
        order,
        fill_ins,
        maxcliques: maximal_only(cliques),
        residual: adjacency,
    }
}

fn fill_count(adjacency: &[BTreeSet<VarId>], v: VarId) -> usize {
    let nbrs: Vec<VarId> = adjacency[v].iter().copied().collect();
    let mut missing = 0;
    for (i, &a) in nbrs.iter().enumerate() {
        missing += nbrs[i + 1..]
            .iter()
            .filter(|b| !adjacency[a].contains(b))
            .count();
    }
    missing
}

fn is_subset(small: &[VarId], big: &[VarId]) -> bool {
    small.iter().all(|v| big.binary_search(v).is_ok())
}

fn maximal_only(cliques: Vec<Vec<VarId>>) -> Vec<Vec<VarId>> {
    let mut out: Vec<Vec<VarId>> = Vec::new();
    for (i, c) in cliques.iter().enumerate() {
        let dominated = cliques
            .iter()
            .enumerate()
            .any(|(j, d)| j != i && is_subset(c, d) && (d.len() > c.len() || j < i));
        if !dominated {
            out.push(c.clone());
        }
    }
    out
}
