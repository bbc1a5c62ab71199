use std::collections::{BTreeSet, VecDeque};

use super::junction_tree::{build_junction_tree, JunctionTree};
use super::triangulate::{min_fill_in, triangulate};
use crate::error::{Error, Result};
use crate::query::{JoinGraph, VarId};

/// One unit of elimination: a single variable on tree queries, or the part
/// of a maxclique not shared with its parent on junction trees.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanNode {
    /// Variables eliminated together at this node (sorted).
    pub vars: Vec<VarId>,
    /// Variables this node is conditioned on (sorted). Empty for the root.
    pub separator: Vec<VarId>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub depth: usize,
}

impl PlanNode {
    /// `vars ∪ separator`, sorted.
    pub fn bag(&self) -> Vec<VarId> {
        let set: BTreeSet<VarId> = self.vars.iter().chain(&self.separator).copied().collect();
        set.into_iter().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Structure {
    /// The graph left after early projection is a tree.
    Tree,
    /// It had cycles and was triangulated into this junction tree.
    JunctionTree(JunctionTree),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EliminationPlan {
    /// Non-projected variables, deleted before anything else.
    pub early_order: Vec<VarId>,
    /// Rooted elimination tree; node 0 is the root.
    pub nodes: Vec<PlanNode>,
    /// Non-root node indices, leaves to root.
    pub order: Vec<usize>,
    pub fill_ins: Vec<(VarId, VarId)>,
    pub structure: Structure,
}

impl EliminationPlan {
    pub fn root(&self) -> &[VarId] {
        &self.nodes[0].vars
    }

    /// The elimination order as variable sets.
    pub fn order_vars(&self) -> Vec<Vec<VarId>> {
        self.order
            .iter()
            .map(|&n| self.nodes[n].vars.clone())
            .collect()
    }

    /// The variable set `var` is conditioned on, or `None` for root and
    /// early-deleted variables.
    pub fn parent_of(&self, var: VarId) -> Option<&[VarId]> {
        self.nodes
            .iter()
            .skip(1)
            .find(|n| n.vars.contains(&var))
            .map(|n| n.separator.as_slice())
    }

    pub fn is_tree(&self) -> bool {
        matches!(self.structure, Structure::Tree)
    }

    pub fn max_depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    /// Replaces the leaves-to-root order. Every node must follow all of its
    /// children.
    pub fn with_order(mut self, order: Vec<usize>) -> Result<Self> {
        let mut done = vec![false; self.nodes.len()];
        if order.len() != self.nodes.len() - 1 {
            return Err(Error::InvalidPlan(
                "order must list every non-root node once".into(),
            ));
        }
        for &n in &order {
            if n == 0 || n >= self.nodes.len() || done[n] {
                return Err(Error::InvalidPlan(format!("bad node {n} in order")));
            }
            if self.nodes[n].children.iter().any(|&c| !done[c]) {
                return Err(Error::InvalidPlan(format!(
                    "node {n} eliminated before its children"
                )));
            }
            done[n] = true;
        }
        self.order = order;
        Ok(self)
    }
}

/// Early projection first: non-projected variables are ordered by min-fill on
/// the full graph. The projected variables that remain are then rooted at
/// `root_hint` (default: first projected variable) and ordered leaves to
/// root; when they no longer form a tree they are triangulated into a
/// junction tree whose maxcliques become the elimination units.
pub fn plan_elimination(
    graph: &JoinGraph,
    projection: &[VarId],
    root_hint: Option<VarId>,
) -> Result<EliminationPlan> {
    let projected: BTreeSet<VarId> = projection.iter().copied().collect();
    let root_var = root_hint
        .or_else(|| projection.first().copied())
        .ok_or_else(|| Error::InvalidPlan("projection is empty".into()))?;
    if !projected.contains(&root_var) {
        return Err(Error::InvalidPlan(format!(
            "root `{}` is not projected",
            graph.name(root_var)
        )));
    }

    let early = min_fill_in(graph, &projected);
    let mut fill_ins = early.fill_ins.clone();
    let residual = early.residual;
    let edge_count: usize = projected.iter().map(|&v| residual[v].len()).sum::<usize>() / 2;

    let (nodes, structure) = if edge_count + 1 == projected.len() {
        (tree_nodes(&residual, root_var), Structure::Tree)
    } else {
        let alive: Vec<bool> = (0..graph.len()).map(|v| projected.contains(&v)).collect();
        let tri = triangulate(residual, alive, &BTreeSet::new());
        fill_ins.extend(tri.fill_ins.iter().copied());
        let jt = build_junction_tree(&tri.maxcliques)?;
        let root_node = jt
            .nodes
            .iter()
            .position(|n| n.vars.contains(&root_var))
            .expect("every projected variable lies in a maxclique");
        let jt = jt.rerooted(root_node);
        (junction_nodes(&jt), Structure::JunctionTree(jt))
    };

    let order = leaves_to_root(&nodes);
    Ok(EliminationPlan {
        early_order: early.order,
        nodes,
        order,
        fill_ins,
        structure,
    })
}

fn tree_nodes(adjacency: &[BTreeSet<VarId>], root: VarId) -> Vec<PlanNode> {
    let mut nodes = vec![PlanNode {
        vars: vec![root],
        separator: Vec::new(),
        parent: None,
        children: Vec::new(),
        depth: 0,
    }];
    let mut node_of = vec![usize::MAX; adjacency.len()];
    node_of[root] = 0;
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        for &v in &adjacency[u] {
            if node_of[v] == usize::MAX {
                let parent = node_of[u];
                let idx = nodes.len();
                node_of[v] = idx;
                nodes.push(PlanNode {
                    vars: vec![v],
                    separator: vec![u],
                    parent: Some(parent),
                    children: Vec::new(),
                    depth: nodes[parent].depth + 1,
                });
                nodes[parent].children.push(idx);
                queue.push_back(v);
            }
        }
    }
    nodes
}

fn junction_nodes(jt: &JunctionTree) -> Vec<PlanNode> {
    let mut nodes: Vec<PlanNode> = Vec::with_capacity(jt.len());
    for (i, n) in jt.nodes.iter().enumerate() {
        let separator = jt.separator(i);
        let vars: Vec<VarId> = n
            .vars
            .iter()
            .filter(|v| !separator.contains(v))
            .copied()
            .collect();
        let depth = n.parent.map_or(0, |p| nodes[p].depth + 1);
        nodes.push(PlanNode {
            vars,
            separator,
            parent: n.parent,
            children: Vec::new(),
            depth,
        });
        if let Some(p) = n.parent {
            nodes[p].children.push(i);
        }
    }
    nodes
}

// Nodes are numbered breadth-first, so reversing that order puts every
// node after its descendants.
fn leaves_to_root(nodes: &[PlanNode]) -> Vec<usize> {
    (1..nodes.len()).rev().collect()
}
