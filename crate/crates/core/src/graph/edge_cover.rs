//! Fractional edge cover of the join hypergraph and the size bound it
//! implies.
//!
//! The cover LP (minimize the total weight such that every variable is
//! covered by weight at least one) is solved through its dual, a fractional
//! vertex packing, with an exact rational tableau simplex. The packing's
//! origin is feasible so no phase-one is needed, and Bland's rule rules out
//! cycling. Optimal cover weights are read from the slack columns of the
//! final objective row.
//!
//! The `[0, 1]` upper bound on each weight is never binding at an optimum: a
//! single hyperedge with weight one already covers all of its variables.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::query::JoinGraph;

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeCover {
    /// One weight per hyperedge, in hyperedge order.
    pub weights: Vec<BigRational>,
    /// Sum of the weights.
    pub rho: BigRational,
    /// Product of `table_size ^ weight` over hyperedges.
    pub bound: f64,
}

impl EdgeCover {
    pub fn weights_f64(&self) -> Vec<f64> {
        self.weights.iter().map(ratio_to_f64).collect()
    }

    pub fn rho_f64(&self) -> f64 {
        ratio_to_f64(&self.rho)
    }
}

pub fn ratio_to_f64(r: &BigRational) -> f64 {
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}

/// `table_sizes[i]` is the row count of the table behind hyperedge `i`.
pub fn fractional_edge_cover(graph: &JoinGraph, table_sizes: &[u64]) -> EdgeCover {
    assert_eq!(
        table_sizes.len(),
        graph.hyperedges().len(),
        "one size per hyperedge"
    );
    let weights = solve_cover(graph.len(), graph.hyperedges());
    let rho = weights.iter().fold(BigRational::zero(), |acc, w| acc + w);
    let bound = agm_bound(&weights, table_sizes);
    EdgeCover {
        weights,
        rho,
        bound,
    }
}

pub fn agm_bound(weights: &[BigRational], table_sizes: &[u64]) -> f64 {
    let mut log_sum = 0.0;
    for (w, &size) in weights.iter().zip(table_sizes) {
        if w.is_zero() {
            continue;
        }
        if size == 0 {
            return 0.0;
        }
        log_sum += ratio_to_f64(w) * (size as f64).ln();
    }
    log_sum.exp()
}

fn solve_cover(num_vars: usize, hyperedges: &[Vec<usize>]) -> Vec<BigRational> {
    let m = hyperedges.len();
    let n = num_vars;
    let zero = BigRational::zero();
    let one = BigRational::one();

    // Packing: max sum(y_v) s.t. sum_{v in e} y_v <= 1 for every e.
    // Columns: y_0..y_{n-1}, slack_0..slack_{m-1}, rhs.
    let width = n + m + 1;
    let mut rows: Vec<Vec<BigRational>> = hyperedges
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let mut row = vec![zero.clone(); width];
            for &v in e {
                row[v] = one.clone();
            }
            row[n + i] = one.clone();
            row[width - 1] = one.clone();
            row
        })
        .collect();
    let mut objective = vec![zero.clone(); width];
    for c in objective.iter_mut().take(n) {
        *c = -one.clone();
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    // Bland: entering column = lowest index with a negative reduced cost.
    while let Some(col) = (0..n + m).find(|&j| objective[j].is_negative()) {
        let mut leave: Option<(usize, BigRational)> = None;
        for (i, row) in rows.iter().enumerate() {
            if row[col].is_positive() {
                let ratio = &row[width - 1] / &row[col];
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && basis[i] < basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        // Every variable lies in some hyperedge, so the packing is bounded.
        let (pivot_row, _) = leave.expect("vertex packing LP is bounded");
        let pivot = rows[pivot_row][col].clone();
        for x in rows[pivot_row].iter_mut() {
            *x = &*x / &pivot;
        }
        let pr = rows[pivot_row].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != pivot_row && !row[col].is_zero() {
                let f = row[col].clone();
                for (x, p) in row.iter_mut().zip(&pr) {
                    *x = &*x - &f * p;
                }
            }
        }
        let f = objective[col].clone();
        for (x, p) in objective.iter_mut().zip(&pr) {
            *x = &*x - &f * p;
        }
        basis[pivot_row] = col;
    }

    (0..m).map(|i| objective[n + i].clone()).collect()
}

pub fn rational(numer: i64, denom: i64) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cover(names: &[&str], edges: &[&[&str]], sizes: &[u64]) -> EdgeCover {
        let edges: Vec<Vec<&str>> = edges.iter().map(|e| e.to_vec()).collect();
        fractional_edge_cover(&JoinGraph::from_hyperedges(names, &edges), sizes)
    }

    #[test]
    fn triangle_is_three_halves() {
        let c = cover(
            &["A1", "A2", "A3"],
            &[&["A1", "A2"], &["A2", "A3"], &["A3", "A1"]],
            &[100, 100, 100],
        );
        assert_eq!(c.weights, vec![rational(1, 2); 3]);
        assert_eq!(c.rho, rational(3, 2));
        assert!((c.bound - 1000.0).abs() < 1e-6);
    }

    #[test]
    fn chain_uses_the_ends() {
        let c = cover(
            &["A", "B", "C", "D"],
            &[&["A", "B"], &["B", "C"], &["C", "D"]],
            &[4, 6, 4],
        );
        assert_eq!(
            c.weights,
            vec![rational(1, 1), rational(0, 1), rational(1, 1)]
        );
        assert_eq!(c.rho, rational(2, 1));
        assert!((c.bound - 16.0).abs() < 1e-9);
    }

    #[test]
    fn single_table() {
        let c = cover(&["A", "B"], &[&["A", "B"]], &[7]);
        assert_eq!(c.rho, rational(1, 1));
        assert!((c.bound - 7.0).abs() < 1e-9);
    }

    #[test]
    fn empty_table_bounds_to_zero() {
        let c = cover(&["A", "B"], &[&["A", "B"]], &[0]);
        assert_eq!(c.bound, 0.0);
    }
}
