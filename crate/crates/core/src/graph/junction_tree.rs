use std::collections::{BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::query::VarId;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JtNode {
    /// Sorted maxclique variables.
    pub vars: Vec<VarId>,
    pub parent: Option<usize>,
    /// Indices of the hyperedges absorbed into this maxclique.
    pub absorbed: Vec<usize>,
}

/// A tree of maxcliques. `nodes` is stored in root-first traversal order,
/// which is the order [`check_rip`] inspects.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JunctionTree {
    pub nodes: Vec<JtNode>,
    /// `(parent, child, separator)` for each tree edge.
    pub edges: Vec<(usize, usize, Vec<VarId>)>,
}

fn intersect(a: &[VarId], b: &[VarId]) -> Vec<VarId> {
    a.iter()
        .filter(|v| b.binary_search(v).is_ok())
        .copied()
        .collect()
}

impl JunctionTree {
    /// Wraps an ordered clique sequence without tree edges; useful for
    /// checking candidate orders.
    pub fn from_ordered_cliques(cliques: Vec<Vec<VarId>>) -> Self {
        let nodes = cliques
            .into_iter()
            .map(|mut vars| {
                vars.sort_unstable();
                vars.dedup();
                JtNode {
                    vars,
                    parent: None,
                    absorbed: Vec::new(),
                }
            })
            .collect();
        JunctionTree {
            nodes,
            edges: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn separator(&self, node: usize) -> Vec<VarId> {
        match self.nodes[node].parent {
            Some(p) => intersect(&self.nodes[node].vars, &self.nodes[p].vars),
            None => Vec::new(),
        }
    }

    pub fn largest_clique(&self) -> usize {
        self.nodes.iter().map(|n| n.vars.len()).max().unwrap_or(0)
    }

    /// Same tree rooted at `root`, nodes renumbered in root-first order.
    pub fn rerooted(&self, root: usize) -> JunctionTree {
        let adjacency = self.undirected();
        let cliques: Vec<Vec<VarId>> = self.nodes.iter().map(|n| n.vars.clone()).collect();
        let mut tree = traverse(&cliques, &adjacency, root);
        for (new, old) in bfs_order(&adjacency, root).into_iter().enumerate() {
            tree.nodes[new].absorbed = self.nodes[old].absorbed.clone();
        }
        tree
    }

    fn undirected(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            if let Some(p) = n.parent {
                adj[i].push(p);
                adj[p].push(i);
            }
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        adj
    }

    /// Assigns every hyperedge to the first node (in node order) that
    /// contains it.
    pub fn absorb(&mut self, hyperedges: &[Vec<VarId>]) -> Result<()> {
        for n in &mut self.nodes {
            n.absorbed.clear();
        }
        for (e, vars) in hyperedges.iter().enumerate() {
            let node = self
                .nodes
                .iter_mut()
                .find(|n| vars.iter().all(|v| n.vars.binary_search(v).is_ok()))
                .ok_or_else(|| {
                    Error::InvalidPlan(format!("hyperedge {e} is not covered by any maxclique"))
                })?;
            node.absorbed.push(e);
        }
        Ok(())
    }
}

/// Maximum-weight spanning tree over the maxclique intersection graph,
/// weights being separator sizes. The first clique becomes the root.
pub fn build_junction_tree(maxcliques: &[Vec<VarId>]) -> Result<JunctionTree> {
    let cliques: Vec<Vec<VarId>> = maxcliques
        .iter()
        .map(|c| {
            let set: BTreeSet<VarId> = c.iter().copied().collect();
            set.into_iter().collect()
        })
        .collect();
    let n = cliques.len();
    if n == 0 {
        return Ok(JunctionTree {
            nodes: Vec::new(),
            edges: Vec::new(),
        });
    }

    let mut candidates: Vec<(usize, usize, usize)> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let w = intersect(&cliques[i], &cliques[j]).len();
            if w > 0 {
                candidates.push((w, i, j));
            }
        }
    }
    // Heaviest first; ties by the lexicographically smallest sorted pair.
    let pair_key = |i: usize, j: usize| {
        let (a, b) = (&cliques[i], &cliques[j]);
        if a <= b {
            (a.clone(), b.clone())
        } else {
            (b.clone(), a.clone())
        }
    };
    candidates.sort_by(|x, y| {
        y.0.cmp(&x.0)
            .then_with(|| pair_key(x.1, x.2).cmp(&pair_key(y.1, y.2)))
    });

    let mut dsu: Vec<usize> = (0..n).collect();
    fn find(dsu: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while dsu[r] != r {
            r = dsu[r];
        }
        let mut c = x;
        while dsu[c] != r {
            let next = dsu[c];
            dsu[c] = r;
            c = next;
        }
        r
    }
    let mut adjacency = vec![Vec::new(); n];
    let mut used = 0;
    for (_, i, j) in candidates {
        let (ri, rj) = (find(&mut dsu, i), find(&mut dsu, j));
        if ri != rj {
            dsu[ri] = rj;
            adjacency[i].push(j);
            adjacency[j].push(i);
            used += 1;
        }
    }
    if used != n - 1 {
        return Err(Error::NotConnected);
    }
    for a in &mut adjacency {
        a.sort_unstable();
    }
    Ok(traverse(&cliques, &adjacency, 0))
}

fn bfs_order(adjacency: &[Vec<usize>], root: usize) -> Vec<usize> {
    let mut seen = vec![false; adjacency.len()];
    let mut order = Vec::with_capacity(adjacency.len());
    let mut queue = VecDeque::from([root]);
    seen[root] = true;
    while let Some(u) = queue.pop_front() {
        order.push(u);
        for &v in &adjacency[u] {
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    order
}

fn traverse(cliques: &[Vec<VarId>], adjacency: &[Vec<usize>], root: usize) -> JunctionTree {
    let order = bfs_order(adjacency, root);
    let mut position = vec![0; cliques.len()];
    for (new, &old) in order.iter().enumerate() {
        position[old] = new;
    }
    let mut nodes: Vec<JtNode> = order
        .iter()
        .map(|&old| JtNode {
            vars: cliques[old].clone(),
            parent: None,
            absorbed: Vec::new(),
        })
        .collect();
    let mut edges = Vec::new();
    for (new, &old) in order.iter().enumerate() {
        for &nb in &adjacency[old] {
            let p = position[nb];
            if p < new && nodes[new].parent.is_none() {
                nodes[new].parent = Some(p);
                edges.push((p, new, intersect(&cliques[old], &cliques[nb])));
            }
        }
    }
    JunctionTree { nodes, edges }
}

/// Running intersection check on the node order: every node's intersection
/// with the union of its predecessors must equal its intersection with a
/// single predecessor.
pub fn check_rip(jt: &JunctionTree) -> bool {
    let mut history: BTreeSet<VarId> = BTreeSet::new();
    for (i, node) in jt.nodes.iter().enumerate() {
        if i > 0 {
            let with_history: Vec<VarId> = node
                .vars
                .iter()
                .filter(|v| history.contains(v))
                .copied()
                .collect();
            let ok = jt.nodes[..i]
                .iter()
                .any(|prev| intersect(&node.vars, &prev.vars) == with_history);
            if !ok {
                return false;
            }
        }
        history.extend(node.vars.iter().copied());
    }
    true
}
