use proptest::prelude::*;
use timt_core::grid::GridSpec;
use timt_core::merge_tree::{
    bottleneck_distance, branch_decomposition, hypervolume_per_pair, persistence_diagram,
    persistence_pairs, MergeTree, Metric, PersistenceDiagram,
};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn field(max: [usize; 3], levels: i32) -> impl Strategy<Value = (GridSpec, Vec<f64>)> {
    (1..=max[0], 1..=max[1], 1..=max[2]).prop_flat_map(move |(x, y, z)| {
        proptest::collection::vec(0..levels, x * y * z).prop_map(move |v| {
            (
                GridSpec::with_dims(x, y, z).unwrap(),
                v.into_iter().map(f64::from).collect(),
            )
        })
    })
}

fn metric() -> impl Strategy<Value = Metric> {
    prop_oneof![Just(Metric::Persistence), Just(Metric::Hypervolume)]
}

/// Minimum cost over all partial matchings; unmatched points go to the diagonal.
fn brute_bottleneck(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    fn go(i: usize, a: &[(f64, f64)], b: &[(f64, f64)], used: &mut Vec<bool>, acc: f64) -> f64 {
        if i == a.len() {
            let rest = b
                .iter()
                .zip(used.iter())
                .filter(|(_, u)| !**u)
                .map(|(q, _)| (q.1 - q.0) / 2.0)
                .fold(0.0, f64::max);
            return acc.max(rest);
        }
        let p = a[i];
        let mut best = go(i + 1, a, b, used, acc.max((p.1 - p.0) / 2.0));
        for j in 0..b.len() {
            if !used[j] {
                used[j] = true;
                let c = (p.0 - b[j].0).abs().max((p.1 - b[j].1).abs());
                best = best.min(go(i + 1, a, b, used, acc.max(c)));
                used[j] = false;
            }
        }
        best
    }
    go(0, a, b, &mut vec![false; b.len()], 0.0)
}

fn diagram_points(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    proptest::collection::vec((0i32..20, 0i32..10), 0..=n).prop_map(|v| {
        v.into_iter()
            .map(|(b, p)| (f64::from(b) * 0.5, f64::from(b) * 0.5 + f64::from(p) * 0.25))
            .collect()
    })
}

proptest! {
    #![proptest_config(config(200))]

    #[test]
    fn simplify_is_monotone((grid, values) in field([6, 6, 2], 8), m in metric(), a in 0.0f64..6.0, b in 0.0f64..6.0) {
        let (t1, t2) = if a <= b { (a, b) } else { (b, a) };
        let t = MergeTree::from_values(grid, values).unwrap();
        let direct = t.simplify(m, t2).unwrap();
        let staged = t.simplify(m, t1).unwrap().simplify(m, t2).unwrap();
        prop_assert_eq!(direct, staged);
    }

    #[test]
    fn simplify_keeps_partition_and_threshold((grid, values) in field([6, 6, 2], 8), m in metric(), thr in 0.0f64..8.0) {
        let n = values.len();
        let t = MergeTree::from_values(grid, values.clone()).unwrap();
        let s = t.simplify(m, thr).unwrap();
        let mut seen = vec![0; n];
        for arc in s.arcs() {
            for (k, &v) in arc.members.iter().enumerate() {
                seen[v] += 1;
                prop_assert!(s.node(arc.lower).value <= values[v] && values[v] <= s.node(arc.upper).value);
                if k > 0 {
                    let u = arc.members[k - 1];
                    prop_assert!((values[u], u) < (values[v], v));
                }
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
        prop_assert_eq!(s.node(0).vertex, t.node(0).vertex);
        let pairing = persistence_pairs(&s);
        let metrics = match m {
            Metric::Persistence => pairing.pairs.iter().map(|p| p.persistence).collect(),
            Metric::Hypervolume => hypervolume_per_pair(&s, &pairing),
        };
        let elder = s.elders();
        for (p, value) in pairing.pairs.iter().zip(metrics).skip(1) {
            // the global minimum's branch is exempt; leaf pairs must clear the threshold
            let is_leaf_pair = s.node(p.min).up.map(|a| s.arc(a).upper) == Some(p.partner)
                && elder[p.partner] != p.min;
            if m == Metric::Persistence || is_leaf_pair {
                prop_assert!(value >= thr, "pair {:?} metric {} < {}", p, value, thr);
            }
        }
        let bd = branch_decomposition(&s);
        for b in &bd.branches {
            if let Some(parent) = b.parent {
                prop_assert!(bd.branches[parent].persistence >= b.persistence);
            }
        }
    }

    #[test]
    fn persistence_sum_invariant_under_mirroring(dims in (1usize..6, 1usize..6, 1usize..4), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let (nx, ny, nz) = dims;
        let n = nx * ny * nz;
        let mut values: Vec<f64> = (0..n).map(|i| i as f64).collect();
        values.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let grid = GridSpec::with_dims(nx, ny, nz).unwrap();
        let mirrored: Vec<f64> = (0..n)
            .map(|i| {
                let [x, y, z] = grid.coords(i);
                values[grid.index(nx - 1 - x, y, z)]
            })
            .collect();
        let a = persistence_pairs(&MergeTree::from_values(grid, values).unwrap());
        let b = persistence_pairs(&MergeTree::from_values(grid, mirrored).unwrap());
        prop_assert_eq!(a.total_persistence(), b.total_persistence());
    }

    #[test]
    fn bottleneck_matches_enumeration(a in diagram_points(4), b in diagram_points(4)) {
        let da = PersistenceDiagram::new(a.clone(), None);
        let db = PersistenceDiagram::new(b.clone(), None);
        let exact = bottleneck_distance(&da, &db).unwrap();
        prop_assert_eq!(exact, brute_bottleneck(&a, &b));
        prop_assert_eq!(exact, bottleneck_distance(&db, &da).unwrap());
    }

    #[test]
    fn diagram_stability((grid, values) in field([5, 5, 2], 10), noise in proptest::collection::vec(-1.5f64..1.5, 50)) {
        let other: Vec<f64> = values.iter().enumerate().map(|(i, v)| v + noise[i % noise.len()]).collect();
        let sup = values.iter().zip(&other).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let d1 = persistence_diagram(&MergeTree::from_values(grid, values).unwrap());
        let d2 = persistence_diagram(&MergeTree::from_values(grid, other).unwrap());
        prop_assert!(bottleneck_distance(&d1, &d2).unwrap() <= sup + 1e-9);
    }
}

#[test]
fn simplify_examples() {
    let grid = GridSpec::with_dims(4, 1, 1).unwrap();
    let t = MergeTree::from_values(grid, vec![0.0, 2.0, 1.0, 3.0]).unwrap();
    let s = t.simplify(Metric::Persistence, f64::INFINITY).unwrap();
    assert_eq!(s.leaf_count(), 1);
    assert_eq!(s.arcs().len(), 1);
    assert_eq!(s.arcs()[0].members.len(), 4);
}
