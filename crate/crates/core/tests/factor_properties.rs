use std::collections::BTreeMap;

use proptest::prelude::*;

use gj_core::factor::{conditionalize, product, sum_out, Factor};
use gj_core::inference::potential_join;

type Assignment = BTreeMap<usize, u32>;
type Naive = BTreeMap<Assignment, u64>;

fn naive(f: &Factor) -> Naive {
    f.iter()
        .map(|(t, n)| {
            (
                f.scope().iter().copied().zip(t.iter().copied()).collect(),
                n,
            )
        })
        .collect()
}

fn naive_product(a: &Naive, b: &Naive) -> Naive {
    let mut out = Naive::new();
    for (ta, na) in a {
        for (tb, nb) in b {
            if ta.iter().all(|(v, x)| tb.get(v).is_none_or(|y| y == x)) {
                let mut t = ta.clone();
                t.extend(tb.iter().map(|(&v, &x)| (v, x)));
                *out.entry(t).or_insert(0) += na * nb;
            }
        }
    }
    out
}

fn naive_sum_out(a: &Naive, vars: &[usize]) -> Naive {
    let mut out = Naive::new();
    for (t, n) in a {
        let kept: Assignment = t
            .iter()
            .filter(|(v, _)| !vars.contains(v))
            .map(|(&v, &x)| (v, x))
            .collect();
        *out.entry(kept).or_insert(0) += n;
    }
    out
}

fn unit() -> Naive {
    Naive::from([(Assignment::new(), 1)])
}

fn factor(max_vars: usize) -> impl Strategy<Value = Factor> {
    proptest::sample::subsequence((0..max_vars).collect::<Vec<_>>(), 1..=3).prop_flat_map(|scope| {
        let k = scope.len();
        proptest::collection::vec((proptest::collection::vec(0u32..3, k), 1u64..5), 0..12)
            .prop_map(move |rows| Factor::from_entries(scope.clone(), rows).unwrap())
    })
}

proptest! {
    #[test]
    fn product_matches_pairwise_join(a in factor(4), b in factor(4)) {
        let p = product(&[a.clone(), b.clone()]).unwrap();
        let expected = naive_product(&naive(&a), &naive(&b));
        prop_assert_eq!(naive(&p), expected);
    }

    #[test]
    fn sum_out_conserves_mass(a in factor(4), drop in proptest::sample::subsequence(vec![0usize, 1, 2, 3], 0..=4)) {
        let s = sum_out(&a, &drop).unwrap();
        prop_assert_eq!(s.total().unwrap(), a.total().unwrap());
        prop_assert_eq!(naive(&s), naive_sum_out(&naive(&a), &drop));
    }

    #[test]
    fn potential_join_matches_nested_loop(fs in proptest::collection::vec(factor(5), 1..4), seed in any::<u64>()) {
        let mut order: Vec<usize> = fs.iter().flat_map(|f| f.scope().to_vec()).collect();
        order.sort_unstable();
        order.dedup();
        // Any variable order gives the same joint potential.
        let k = order.len();
        order.rotate_left((seed as usize) % k);
        let expected = fs.iter().fold(unit(), |acc, f| naive_product(&acc, &naive(f)));
        prop_assume!(expected.len() <= 1000);
        let joint = potential_join(&order, &fs).unwrap();
        prop_assert_eq!(naive(&joint), expected);
    }

    #[test]
    fn conditional_rows_sum_to_the_message(
        local in factor(4),
        messages in proptest::collection::vec(factor(4), 0..3),
        pick in any::<u64>(),
    ) {
        // Parents: a nonempty prefix of the local scope chosen by `pick`.
        let scope = local.scope().to_vec();
        let parents: Vec<usize> = scope[..1 + (pick as usize) % scope.len()].to_vec();
        let cond = conditionalize(&local, &messages, &parents).unwrap();

        let mut all = vec![local.clone()];
        all.extend(messages.iter().cloned());
        let joint = all.iter().fold(unit(), |acc, f| naive_product(&acc, &naive(f)));
        let children: Vec<usize> = joint
            .keys()
            .flat_map(|t| t.keys().copied())
            .filter(|v| !parents.contains(v))
            .collect();
        let expected = naive_sum_out(&joint, &children);

        prop_assert_eq!(naive(&cond.message().unwrap()), expected);
        for (_, rows) in cond.parents() {
            prop_assert!(rows.iter().all(|r| r.bucket >= 1 && r.fac >= 1));
            prop_assert!(rows.windows(2).all(|w| w[0].child < w[1].child));
        }
    }
}
