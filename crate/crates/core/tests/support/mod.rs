//! Test oracles shared by the property suites and the acceptance run.
#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::rngs::StdRng;
use rand::Rng;

use gj_core::graph::{build_junction_tree, check_rip, fractional_edge_cover, min_fill_in};
use gj_core::query::JoinGraph;

pub fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("v{i}")).collect()
}

pub fn graph(n: usize, edges: &[(usize, usize)]) -> JoinGraph {
    let names = names(n);
    let hyper: Vec<Vec<String>> = edges
        .iter()
        .map(|&(a, b)| vec![names[a].clone(), names[b].clone()])
        .collect();
    JoinGraph::from_hyperedges(&names, &hyper)
}

/// A random spanning tree on 2..=8 vertices plus up to `n` extra edges.
pub fn random_connected(rng: &mut StdRng) -> (usize, Vec<(usize, usize)>) {
    let n = rng.gen_range(2..=8);
    let mut edges = BTreeSet::new();
    for v in 1..n {
        let u = rng.gen_range(0..v);
        edges.insert((u, v));
    }
    let extra = rng.gen_range(0..=n);
    for _ in 0..extra {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b {
            edges.insert((a.min(b), a.max(b)));
        }
    }
    (n, edges.into_iter().collect())
}

fn is_clique(adj: &[BTreeSet<usize>], set: &[usize]) -> bool {
    set.iter()
        .enumerate()
        .all(|(i, &a)| set[i + 1..].iter().all(|b| adj[a].contains(b)))
}

fn is_maximal_clique(adj: &[BTreeSet<usize>], set: &[usize]) -> bool {
    is_clique(adj, set)
        && (0..adj.len()).filter(|v| !set.contains(v)).all(|v| {
            let mut s = set.to_vec();
            s.push(v);
            !is_clique(adj, &s)
        })
}

/// Triangulates the graph, then checks by subset brute force that the
/// returned maxcliques are exactly the maximal cliques of the triangulated
/// graph, that they absorb every edge, that the junction tree over them has
/// the running intersection property, and that a second min-fill pass on
/// the (chordal) triangulated graph adds no edge.
pub fn check_junction_tree(n: usize, edges: &[(usize, usize)]) -> Result<(), String> {
    let g = graph(n, edges);
    let tri = min_fill_in(&g, &BTreeSet::new());
    if tri.order.len() != n {
        return Err(format!("eliminated {} of {n} variables", tri.order.len()));
    }
    let mut adj: Vec<BTreeSet<usize>> = g.adjacency().to_vec();
    for &(a, b) in &tri.fill_ins {
        adj[a].insert(b);
        adj[b].insert(a);
    }

    for c in &tri.maxcliques {
        if !is_maximal_clique(&adj, c) {
            return Err(format!("{c:?} is not a maximal clique"));
        }
    }
    let mut maximal = Vec::new();
    for mask in 1u32..(1 << n) {
        let set: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        if is_maximal_clique(&adj, &set) {
            maximal.push(set);
        }
    }
    let mut got = tri.maxcliques.clone();
    got.sort();
    maximal.sort();
    if got != maximal {
        return Err(format!("maxcliques {got:?}, brute force {maximal:?}"));
    }
    for &(a, b) in edges {
        if !tri
            .maxcliques
            .iter()
            .any(|c| c.contains(&a) && c.contains(&b))
        {
            return Err(format!("edge ({a},{b}) not absorbed"));
        }
    }

    let jt = build_junction_tree(&tri.maxcliques).map_err(|e| e.to_string())?;
    if jt.len() != tri.maxcliques.len() || jt.edges.len() + 1 != jt.len() {
        return Err(format!("junction tree shape: {jt:?}"));
    }
    if !check_rip(&jt) {
        return Err(format!("running intersection fails: {jt:?}"));
    }

    let filled: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| adj[a].iter().filter(move |&&b| a < b).map(move |&b| (a, b)))
        .collect();
    let again = min_fill_in(&graph(n, &filled), &BTreeSet::new());
    if !again.fill_ins.is_empty() {
        return Err(format!("chordal input got fill-ins {:?}", again.fill_ins));
    }
    Ok(())
}

/// Minimum of the covering LP by enumerating its vertices: every choice of
/// `m` linearly independent tight constraints among the `n` cover rows and
/// the `m` nonnegativity rows. Returns the optimum and every optimal vertex.
pub fn lp_vertex_optimum(n: usize, hyperedges: &[Vec<usize>]) -> (f64, Vec<Vec<f64>>) {
    let m = hyperedges.len();
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for v in 0..n {
        rows.push((
            (0..m)
                .map(|e| if hyperedges[e].contains(&v) { 1.0 } else { 0.0 })
                .collect(),
            1.0,
        ));
    }
    for e in 0..m {
        rows.push((
            (0..m).map(|j| if j == e { 1.0 } else { 0.0 }).collect(),
            0.0,
        ));
    }
    let feasible = |x: &[f64]| {
        x.iter().all(|&w| w >= -1e-9)
            && (0..n).all(|v| {
                (0..m)
                    .filter(|&e| hyperedges[e].contains(&v))
                    .map(|e| x[e])
                    .sum::<f64>()
                    >= 1.0 - 1e-9
            })
    };

    let mut best = f64::INFINITY;
    let mut argmins: Vec<Vec<f64>> = Vec::new();
    let total = rows.len();
    let mut pick: Vec<usize> = (0..m).collect();
    loop {
        if let Some(x) = solve(&pick.iter().map(|&i| rows[i].clone()).collect::<Vec<_>>()) {
            if feasible(&x) {
                let value: f64 = x.iter().sum();
                if value < best - 1e-9 {
                    best = value;
                    argmins.clear();
                }
                if (value - best).abs() <= 1e-9 && !argmins.iter().any(|y| close(y, &x)) {
                    argmins.push(x);
                }
            }
        }
        // Next combination of `m` out of `total`.
        let mut i = m;
        loop {
            if i == 0 {
                return (best, argmins);
            }
            i -= 1;
            if pick[i] < total - m + i {
                break;
            }
        }
        pick[i] += 1;
        for j in i + 1..m {
            pick[j] = pick[j - 1] + 1;
        }
    }
}

pub fn close(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-9)
}

/// Gaussian elimination with partial pivoting; `None` when singular.
#[allow(clippy::needless_range_loop)]
fn solve(system: &[(Vec<f64>, f64)]) -> Option<Vec<f64>> {
    let m = system.len();
    let mut a: Vec<Vec<f64>> = system
        .iter()
        .map(|(row, b)| {
            let mut r = row.clone();
            r.push(*b);
            r
        })
        .collect();
    for col in 0..m {
        let p = (col..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[p][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, p);
        for r in 0..m {
            if r != col {
                let k = a[r][col] / a[col][col];
                for c in col..=m {
                    a[r][c] -= k * a[col][c];
                }
            }
        }
    }
    Some((0..m).map(|i| a[i][m] / a[i][i]).collect())
}

/// `(rho, weights)` as computed by the library, with all tables of size 10.
pub fn cover_of(n: usize, hyperedges: &[Vec<usize>]) -> (f64, Vec<f64>) {
    let names = names(n);
    let hyper: Vec<Vec<String>> = hyperedges
        .iter()
        .map(|e| e.iter().map(|&v| names[v].clone()).collect())
        .collect();
    let g = JoinGraph::from_hyperedges(&names, &hyper);
    let cover = fractional_edge_cover(&g, &vec![10; hyperedges.len()]);
    (cover.rho_f64(), cover.weights_f64())
}
