//! Elimination ordering, triangulation, junction trees, and the fractional
//! edge cover of the join hypergraph.

mod edge_cover;
mod junction_tree;
mod plan;
mod triangulate;

pub use edge_cover::{agm_bound, fractional_edge_cover, ratio_to_f64, rational, EdgeCover};
pub use junction_tree::{build_junction_tree, check_rip, JtNode, JunctionTree};
pub use plan::{plan_elimination, EliminationPlan, PlanNode, Structure};
pub use triangulate::{min_fill_in, Triangulation};
