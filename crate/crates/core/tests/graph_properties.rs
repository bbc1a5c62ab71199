mod support;

use std::collections::BTreeSet;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use gj_core::graph::min_fill_in;
use support::{check_junction_tree, close, cover_of, graph, lp_vertex_optimum, random_connected};

#[test]
fn junction_trees_of_random_graphs() {
    let mut rng = StdRng::seed_from_u64(21);
    for round in 0..100 {
        let (n, edges) = random_connected(&mut rng);
        if let Err(e) = check_junction_tree(n, &edges) {
            panic!("round {round} ({n} vertices, {edges:?}): {e}");
        }
    }
}

#[test]
fn four_cycle_needs_one_chord() {
    let tri = min_fill_in(
        &graph(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]),
        &BTreeSet::new(),
    );
    assert_eq!(tri.fill_ins.len(), 1);
    assert_eq!(tri.maxcliques.len(), 2);
    assert!(tri.maxcliques.iter().all(|c| c.len() == 3));
}

#[test]
fn triangle_cover_is_half_everywhere() {
    let edges = vec![vec![0, 1], vec![1, 2], vec![0, 2]];
    let (rho, w) = cover_of(3, &edges);
    assert!((rho - 1.5).abs() <= 1e-9);
    assert!(close(&w, &[0.5, 0.5, 0.5]));
    let (best, argmins) = lp_vertex_optimum(3, &edges);
    assert!((best - 1.5).abs() <= 1e-9);
    assert_eq!(argmins.len(), 1);
}

#[test]
fn chain3_cover_takes_both_ends() {
    let edges = vec![vec![0, 1], vec![1, 2], vec![2, 3]];
    let (rho, w) = cover_of(4, &edges);
    let (best, argmins) = lp_vertex_optimum(4, &edges);
    assert!((best - 2.0).abs() <= 1e-9);
    assert_eq!(argmins, [vec![1.0, 0.0, 1.0]]);
    assert!((rho - best).abs() <= 1e-9);
    assert!(close(&w, &argmins[0]));
}

#[test]
fn single_table_cover_is_one() {
    let (rho, w) = cover_of(2, &[vec![0, 1]]);
    assert!((rho - 1.0).abs() <= 1e-9);
    assert!(close(&w, &[1.0]));
}

#[test]
fn random_covers_reach_the_lp_optimum() {
    let mut rng = StdRng::seed_from_u64(22);
    for round in 0..60 {
        let n = rng.gen_range(2..=5);
        let m = rng.gen_range(1..=5);
        let mut hyperedges: Vec<Vec<usize>> = (0..m)
            .map(|_| {
                let mut e: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.45)).collect();
                if e.is_empty() {
                    e.push(rng.gen_range(0..n));
                }
                e
            })
            .collect();
        // Every variable needs a covering edge.
        for v in 0..n {
            if !hyperedges.iter().any(|e| e.contains(&v)) {
                hyperedges.push(vec![v]);
            }
        }
        let (rho, w) = cover_of(n, &hyperedges);
        let (best, _) = lp_vertex_optimum(n, &hyperedges);
        assert!(
            (rho - best).abs() <= 1e-9,
            "round {round}: {rho} vs {best} on {hyperedges:?}"
        );
        assert!((w.iter().sum::<f64>() - rho).abs() <= 1e-9);
        for v in 0..n {
            let covered: f64 = (0..hyperedges.len())
                .filter(|&e| hyperedges[e].contains(&v))
                .map(|e| w[e])
                .sum();
            assert!(
                covered >= 1.0 - 1e-9,
                "round {round}: variable {v} under-covered"
            );
        }
    }
}
