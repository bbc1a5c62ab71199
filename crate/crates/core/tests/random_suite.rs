use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use gj_core::fixtures::{random_instance, random_projection, Instance, RandomParams, Shape};
use gj_core::gfjs::generate_gfjs;
use gj_core::graph::plan_elimination;
use gj_core::inference::build_generator;
use gj_core::oracle::{brute_force_join, TupleMultiset};
use gj_core::pipeline::{learn, projection_ids, summarize};
use gj_core::query::build_join_graph;
use gj_core::verify::verify;

fn shapes() -> Vec<Shape> {
    vec![
        Shape::Chain(1),
        Shape::Chain(2),
        Shape::Chain(3),
        Shape::Chain(5),
        Shape::Star(3),
        Shape::Star(4),
        Shape::BinaryTree(4),
        Shape::BinaryTree(6),
    ]
}

fn params(i: usize) -> RandomParams {
    RandomParams {
        inject_uir: i.is_multiple_of(2),
        duplicate_rows: i % 3 != 1,
        ..RandomParams::default()
    }
}

#[test]
fn tree_instances_match_every_oracle() {
    let mut rng = StdRng::seed_from_u64(11);
    for i in 0..60 {
        let shape = shapes()[i % shapes().len()];
        let inst = random_instance(shape, params(i), &mut rng);
        let (summary, v) = verify(&inst).unwrap();
        assert!(v.all_pass(), "instance {i} ({shape:?}): {v:?}");
        assert_eq!(v.join_size, v.oracle_size);
        assert!(
            v.max_potential as u64 <= v.largest_table,
            "instance {i}: {v:?}"
        );
        assert!(summary.plan.is_tree());
    }
}

#[test]
fn cyclic_instances_match_every_oracle() {
    let mut rng = StdRng::seed_from_u64(12);
    for i in 0..20 {
        let shape = if i % 2 == 0 {
            Shape::Triangle
        } else {
            Shape::FourCycle
        };
        let p = RandomParams {
            max_rows: 30,
            ..params(i)
        };
        let inst = random_instance(shape, p, &mut rng);
        let (summary, v) = verify(&inst).unwrap();
        assert!(v.all_pass(), "instance {i} ({shape:?}): {v:?}");
        assert!(!summary.plan.is_tree());
    }
}

#[test]
fn any_root_gives_the_same_bag() {
    let mut rng = StdRng::seed_from_u64(13);
    for i in 0..20 {
        let inst = random_instance(Shape::BinaryTree(5), params(i), &mut rng);
        let root = format!("V{}", rng.gen_range(0..6));
        let rooted = Instance {
            query: inst.query.clone(),
            catalog: inst.catalog.clone(),
        }
        .with_root(&root);
        let (_, v) = verify(&rooted).unwrap();
        assert!(v.all_pass(), "root {root}: {v:?}");
    }
}

#[test]
fn elimination_order_does_not_change_the_root_marginal() {
    let mut rng = StdRng::seed_from_u64(14);
    for i in 0..20 {
        let inst = random_instance(Shape::Star(4), params(i), &mut rng).with_root("V1");
        let graph = build_join_graph(&inst.query).unwrap();
        let (projection, root) = projection_ids(&inst.query, &graph).unwrap();
        let plan = plan_elimination(&graph, &projection, root).unwrap();
        let learned = learn(&inst.query, &inst.catalog).unwrap();
        let base = build_generator(&plan, learned.factors.clone()).unwrap();
        let base_bag =
            TupleMultiset::from_gfjs(&generate_gfjs(&base, learned.domain.clone()).unwrap())
                .unwrap();

        // Leaves first in a different valid order: children of the root's
        // child in reverse.
        let mut order = plan.order.clone();
        let leaves: Vec<usize> = order
            .iter()
            .copied()
            .filter(|&n| plan.nodes[n].children.is_empty())
            .collect();
        let inner: Vec<usize> = order
            .iter()
            .copied()
            .filter(|&n| !plan.nodes[n].children.is_empty())
            .collect();
        order = leaves.into_iter().rev().chain(inner).collect();
        let reordered = plan.clone().with_order(order).unwrap();
        let other = build_generator(&reordered, learned.factors).unwrap();
        assert_eq!(other.root(), base.root());
        let bag = TupleMultiset::from_gfjs(&generate_gfjs(&other, learned.domain.clone()).unwrap())
            .unwrap();
        assert_eq!(bag, base_bag);
    }
}

#[test]
fn early_projection_keeps_bag_semantics() {
    let mut rng = StdRng::seed_from_u64(15);
    for i in 0..30 {
        let shape = shapes()[i % shapes().len()];
        let inst = random_instance(shape, params(i), &mut rng);
        let projection = random_projection(&inst, &mut rng);
        let full = brute_force_join(&inst.query, &inst.catalog).unwrap();
        let refs: Vec<&str> = projection.iter().map(String::as_str).collect();
        let projected = inst.with_projection(&refs);
        let summary = summarize(&projected.query, &projected.catalog).unwrap();
        let ours = TupleMultiset::from_gfjs(&summary.gfjs)
            .unwrap()
            .reordered(&projection)
            .unwrap();
        assert_eq!(
            ours,
            full.project(&projection).unwrap(),
            "instance {i}: {projection:?}"
        );
    }
}
