use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use timt_core::grid::GridSpec;
use timt_core::merge_tree::{bottleneck_distance, compute_merge_tree, persistence_diagram};
use timt_core::scalar::{Meaning, ScalarField};
use timt_core::stability::{sup_norm_diff, verify_stability_chain};
use timt_core::traits::{TraitExpr, TraitNode, TraitPrimitive};

#[path = "support/oracles.rs"]
mod oracles;
use oracles::smooth_multifield;

fn point(c: [f64; 3]) -> TraitExpr {
    TraitExpr::leaf(TraitPrimitive::point(&["u", "v", "w"], &c))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn point_chain_holds_and_is_symmetric(seed in any::<u64>(), p in prop::array::uniform3(-2.0f64..2.0), q in prop::array::uniform3(-2.0f64..2.0)) {
        let mf = smooth_multifield(seed, [8, 7, 4]);
        let (a, b) = (point(p), point(q));
        let r = verify_stability_chain(&a, &b, &mf, 1e-9, 0.1).unwrap();
        let d_a = p.iter().zip(&q).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        prop_assert_eq!(r.d_h, d_a);
        prop_assert!(r.hausdorff_step.is_none());
        prop_assert!(r.sup_diff <= d_a + 1e-9);
        prop_assert!(r.d_b <= r.sup_diff + 1e-9);
        prop_assert!(r.chain_ok);
        prop_assert_eq!(r.chain_ok, r.bottleneck_ok && r.hausdorff_ok);
        let s = verify_stability_chain(&b, &a, &mf, 1e-9, 0.1).unwrap();
        prop_assert_eq!((r.d_h, r.sup_diff, r.chain_ok), (s.d_h, s.sup_diff, s.chain_ok));
        prop_assert!((r.d_b - s.d_b).abs() <= 1e-12);
    }

    #[test]
    fn extended_traits_pass_with_sampling_slack(seed in any::<u64>(), lo in prop::array::uniform3(-1.5f64..0.5), w in prop::array::uniform3(0.1f64..1.0), shift in prop::array::uniform3(-0.5f64..0.5)) {
        let mf = smooth_multifield(seed, [6, 6, 3]);
        let iv: Vec<(f64, f64)> = (0..3).map(|k| (lo[k], lo[k] + w[k])).collect();
        let moved: Vec<(f64, f64)> = (0..3).map(|k| (lo[k] + shift[k], lo[k] + w[k] + shift[k])).collect();
        let a = TraitExpr::leaf(TraitPrimitive::boxed(&["u", "v", "w"], &iv));
        let b = TraitExpr::leaf(TraitPrimitive::boxed(&["u", "v", "w"], &moved));
        let step = 0.1;
        let r = verify_stability_chain(&a, &b, &mf, 1e-9, step).unwrap();
        prop_assert_eq!(r.hausdorff_step, Some(step));
        prop_assert_eq!(r.tolerances.sampling_slack, step);
        prop_assert!(r.chain_ok, "{:?}", r);
    }

    #[test]
    fn sup_norm_matches_elementwise_loop(v in prop::collection::vec((-9.0f64..9.0, -9.0f64..9.0), 1..40), c in -3.0f64..3.0) {
        let n = v.len();
        let g = GridSpec::with_dims(n, 1, 1).unwrap();
        let h1 = ScalarField::new(g, v.iter().map(|p| p.0).collect(), Meaning::Generic).unwrap();
        let h2 = ScalarField::new(g, v.iter().map(|p| p.1).collect(), Meaning::Generic).unwrap();
        let mut oracle = 0.0f64;
        for (a, b) in &v {
            if (a - b).abs() > oracle {
                oracle = (a - b).abs();
            }
        }
        prop_assert_eq!(sup_norm_diff(&h1, &h2).unwrap(), oracle);
        let shifted = ScalarField::new(g, v.iter().map(|p| p.0 + c).collect(), Meaning::Generic).unwrap();
        prop_assert!((sup_norm_diff(&h1, &shifted).unwrap() - c.abs()).abs() <= 1e-12);
    }

    #[test]
    fn diagram_distance_bounded_by_field_difference(seed in any::<u64>(), eps in 0.0f64..0.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = GridSpec::with_dims(6, 5, 2).unwrap();
        let base: Vec<f64> = (0..g.len()).map(|_| rng.random_range(0.0..4.0)).collect();
        let pert: Vec<f64> = base.iter().map(|v| v + rng.random_range(-eps..=eps)).collect();
        let h1 = ScalarField::new(g, base, Meaning::Generic).unwrap();
        let h2 = ScalarField::new(g, pert, Meaning::Generic).unwrap();
        let d1 = persistence_diagram(&compute_merge_tree(&h1).unwrap());
        let d2 = persistence_diagram(&compute_merge_tree(&h2).unwrap());
        prop_assert!(bottleneck_distance(&d1, &d2).unwrap() <= sup_norm_diff(&h1, &h2).unwrap() + 1e-9);
    }
}

#[test]
fn combined_point_traits_keep_the_chain() {
    let mf = smooth_multifield(3, [8, 8, 3]);
    let pair = |a: [f64; 3], b: [f64; 3]| {
        TraitExpr::new(TraitNode::or(vec![
            TraitNode::leaf(TraitPrimitive::point(&["u", "v", "w"], &a)),
            TraitNode::leaf(TraitPrimitive::point(&["u", "v", "w"], &b)),
        ]))
    };
    let t1 = pair([0.0, 0.0, 0.0], [1.0, 1.0, 1.0]);
    let t2 = pair([0.2, 0.0, 0.0], [1.0, 0.7, 1.0]);
    let r = verify_stability_chain(&t1, &t2, &mf, 1e-9, 0.1).unwrap();
    assert!((r.d_h - 0.3).abs() < 1e-12);
    assert!(r.hausdorff_step.is_none());
    assert!(r.chain_ok);
}
