use proptest::prelude::*;
use timt_core::grid::{Connectivity, GridSpec};
use timt_core::merge_tree::{compute_merge_tree, persistence_pairs, Metric};
use timt_core::queries::{run_query, segment_crowns, segment_subtrees, QueryMethod, QuerySpec, BACKGROUND};
use timt_core::scalar::{Meaning, ScalarField};

#[path = "support/oracles.rs"]
mod oracles;
use oracles::{check_common, components, crown_oracle, segment_sets};

fn field(max: [usize; 3], levels: i32) -> impl Strategy<Value = ScalarField> {
    (1..=max[0], 1..=max[1], 1..=max[2], any::<bool>()).prop_flat_map(move |(x, y, z, dense)| {
        proptest::collection::vec(0..levels, x * y * z).prop_map(move |v| {
            let conn = match (z == 1, dense) {
                (true, false) => Connectivity::Edge4,
                (true, true) => Connectivity::Vertex8,
                (false, false) => Connectivity::Face6,
                (false, true) => Connectivity::Vertex26,
            };
            let grid = GridSpec::with_dims(x, y, z).unwrap().with_connectivity(conn).unwrap();
            ScalarField::new(grid, v.into_iter().map(f64::from).collect(), Meaning::Distance).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 150, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn all_methods_respect_invariants(f in field([6, 6, 3], 6), thr in 0.0f64..4.0, m in prop_oneof![Just(Metric::Persistence), Just(Metric::Hypervolume)], cut in -1.0f64..7.0, delta in 0.1f64..4.0) {
        let t = compute_merge_tree(&f).unwrap();
        for spec in [
            QuerySpec::branch_decomposition(m, thr),
            QuerySpec::leaf_arcs(m, thr),
            QuerySpec::subtrees(cut).simplified(m, thr),
            QuerySpec::crown(delta),
        ] {
            let s = run_query(&f, &t, &spec).unwrap();
            check_common(&f, &s)?;
            if spec.method == QueryMethod::BranchDecomposition {
                prop_assert_eq!(s.background_count(), 0);
                let survivors = persistence_pairs(&t.simplify(m, thr).unwrap()).len();
                prop_assert_eq!(s.len(), survivors);
            }
        }
    }

    #[test]
    fn subtrees_equal_sublevel_components(f in field([6, 6, 3], 6), cut in -1.0f64..7.0) {
        let t = compute_merge_tree(&f).unwrap();
        let s = segment_subtrees(&t, &QuerySpec::subtrees(cut)).unwrap();
        let keep: Vec<bool> = f.values().iter().map(|&h| h < cut).collect();
        prop_assert_eq!(segment_sets(&s), components(f.grid(), &keep));
    }

    #[test]
    fn crowns_equal_flood_fill_oracle(f in field([6, 6, 3], 6), delta in 0.1f64..4.0) {
        let t = compute_merge_tree(&f).unwrap();
        let s = segment_crowns(&f, &t, &QuerySpec::crown(delta)).unwrap();
        prop_assert_eq!(segment_sets(&s), crown_oracle(&f, &t, delta));
    }

    #[test]
    fn extremes_give_one_segment(f in field([5, 5, 2], 6)) {
        let t = compute_merge_tree(&f).unwrap();
        let all: Vec<i32> = vec![0; f.len()];
        let bd = run_query(&f, &t, &QuerySpec::branch_decomposition(Metric::Persistence, f64::INFINITY)).unwrap();
        prop_assert_eq!(&bd.labels, &all);
        let st = run_query(&f, &t, &QuerySpec::subtrees(1e9)).unwrap();
        prop_assert_eq!(&st.labels, &all);
        let (lo, hi) = f.min_max();
        let cr = run_query(&f, &t, &QuerySpec::crown(hi - lo + 1.0)).unwrap();
        prop_assert_eq!(&cr.labels, &all);
    }
}

#[test]
fn crown_count_equals_qualifying_minima_when_disjoint() {
    // three wells separated by high ridges
    let values = vec![0.0, 9.0, 1.0, 9.0, 2.0, 9.0];
    let g = GridSpec::with_dims(6, 1, 1).unwrap();
    let f = ScalarField::new(g, values, Meaning::Distance).unwrap();
    let t = compute_merge_tree(&f).unwrap();
    let s = segment_crowns(&f, &t, &QuerySpec::crown(0.5)).unwrap();
    assert_eq!(s.len(), 3);
    assert_eq!(s.labels, vec![0, BACKGROUND, 1, BACKGROUND, 2, BACKGROUND]);
}
