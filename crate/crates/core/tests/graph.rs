use std::collections::BTreeSet;

use mdag_core::graph::{Digraph, VertexId};
use proptest::prelude::*;

fn names(n: usize) -> Vec<VertexId> {
    (0..n).map(|i| VertexId::new(format!("V{i}"))).collect()
}

/// Random ADMG on `V0..V{n-1}`: directed edges follow index order.
fn admg(max: usize, p_dir: f64, p_bi: f64) -> impl Strategy<Value = Digraph> {
    (2..=max).prop_flat_map(move |n| {
        let pairs = n * (n - 1) / 2;
        (
            Just(n),
            proptest::collection::vec(proptest::bool::weighted(p_dir), pairs),
            proptest::collection::vec(proptest::bool::weighted(p_bi), pairs),
        )
            .prop_map(|(n, dir, bi)| {
                let vs = names(n);
                let mut d = Vec::new();
                let mut b = Vec::new();
                let mut k = 0;
                for i in 0..n {
                    for j in i + 1..n {
                        if dir[k] {
                            d.push((vs[i].clone(), vs[j].clone()));
                        }
                        if bi[k] {
                            b.push((vs[i].clone(), vs[j].clone()));
                        }
                        k += 1;
                    }
                }
                Digraph::new(vs, d, b).expect("index order is acyclic")
            })
    })
}

fn subsets(pool: &[VertexId]) -> impl Iterator<Item = Vec<VertexId>> + '_ {
    (0u32..1 << pool.len()).map(move |mask| {
        (0..pool.len())
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| pool[i].clone())
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reachability_agrees_with_moralization(g in admg(7, 0.35, 0.0)) {
        let vs: Vec<VertexId> = g.vertices().cloned().collect();
        for (i, x) in vs.iter().enumerate() {
            for y in &vs[i + 1..] {
                let rest: Vec<VertexId> = vs.iter().filter(|v| *v != x && *v != y).cloned().collect();
                for z in subsets(&rest) {
                    let a = g.d_separated([x], [y], &z).unwrap();
                    let b = g.d_separated_moral([x], [y], &z).unwrap();
                    prop_assert_eq!(a, b, "{} vs {} given {:?}", x, y, z);
                }
            }
        }
    }

    #[test]
    fn open_trail_is_a_real_path(g in admg(7, 0.35, 0.15)) {
        let vs: Vec<VertexId> = g.vertices().cloned().collect();
        for (i, x) in vs.iter().enumerate() {
            for y in &vs[i + 1..] {
                let rest: Vec<VertexId> = vs.iter().filter(|v| *v != x && *v != y).cloned().collect();
                for z in subsets(&rest).step_by(3) {
                    let trail = g.d_connecting_trail([x], [y], &z).unwrap();
                    prop_assert_eq!(trail.is_none(), g.d_separated([x], [y], &z).unwrap());
                    if let Some(t) = trail {
                        prop_assert_eq!(t.first(), Some(x));
                        prop_assert_eq!(t.last(), Some(y));
                        for w in t.windows(2) {
                            prop_assert!(g.adjacent(w[0].as_str(), w[1].as_str()));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn projection_preserves_separation(g in admg(7, 0.4, 0.1), hide_mask in 0u32..128) {
        let vs: Vec<VertexId> = g.vertices().cloned().collect();
        let hide: Vec<VertexId> = vs.iter().enumerate()
            .filter(|(i, _)| hide_mask & (1 << i) != 0)
            .map(|(_, v)| v.clone())
            .collect();
        prop_assume!(hide.len() + 2 <= vs.len());
        let p = g.latent_project(&hide).unwrap();
        let keep: Vec<VertexId> = p.vertices().cloned().collect();
        for (i, x) in keep.iter().enumerate() {
            for y in &keep[i + 1..] {
                let rest: Vec<VertexId> = keep.iter().filter(|v| *v != x && *v != y).cloned().collect();
                for z in subsets(&rest) {
                    prop_assert_eq!(
                        g.d_separated([x], [y], &z).unwrap(),
                        p.d_separated([x], [y], &z).unwrap(),
                        "{} vs {} given {:?} hiding {:?}", x, y, z, hide
                    );
                }
            }
        }
    }

    #[test]
    fn districts_partition(g in admg(8, 0.3, 0.25)) {
        let ds = g.districts();
        let mut seen = BTreeSet::new();
        for d in &ds {
            for v in d {
                prop_assert!(seen.insert(v.clone()), "{} in two districts", v);
                prop_assert_eq!(&g.district(v.as_str()).unwrap(), d);
            }
        }
        prop_assert_eq!(seen.len(), g.len());
    }

    #[test]
    fn pillow_of_a_dag_is_the_parent_set(g in admg(8, 0.35, 0.0)) {
        let order = g.topological_order();
        prop_assert!(order.is_valid_for(&g));
        for v in g.vertices() {
            prop_assert_eq!(g.markov_pillow(v.as_str(), &order).unwrap(), g.parents(v.as_str()).unwrap());
        }
    }

    #[test]
    fn pillow_separates_from_other_predecessors(g in admg(7, 0.35, 0.2)) {
        // Ordered local Markov property: v is m-separated from the rest of
        // its past given its pillow.
        let order = g.topological_order();
        let seq = order.as_slice();
        for (i, v) in seq.iter().enumerate() {
            let mp = g.markov_pillow(v.as_str(), &order).unwrap();
            let rest: Vec<VertexId> = seq[..i].iter().filter(|u| !mp.contains(*u)).cloned().collect();
            if rest.is_empty() {
                continue;
            }
            let prefix: BTreeSet<VertexId> = seq[..=i].iter().cloned().collect();
            let sub = g.induced(&prefix).unwrap();
            prop_assert!(sub.d_separated([v], &rest, &mp).unwrap(), "{} given {:?}", v, mp);
        }
    }
}

#[test]
fn projection_of_hidden_fork_is_bidirected() {
    let g = Digraph::dag(["U", "A", "B"], [("U".into(), "A".into()), ("U".into(), "B".into())]).unwrap();
    let p = g.latent_project(&[VertexId::new("U")]).unwrap();
    assert!(p.has_bidirected("A", "B"));
    assert_eq!(p.districts().len(), 1);
}
