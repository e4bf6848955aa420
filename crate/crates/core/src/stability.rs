//! Checks the inequality chain `d_B <= sup|h1 - h2| <= d_H` for two traits.
//!
//! `d_B` is the bottleneck distance between the persistence diagrams of the
//! two merge trees, `sup|h1 - h2|` is taken over grid vertices and `d_H` is
//! the Hausdorff distance between the traits in attribute space.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::MultiField;
use crate::merge_tree::{bottleneck_distance, compute_merge_tree, persistence_diagram, MergeTreeError};
use crate::scalar::ScalarField;
use crate::traits::{hausdorff_distance, induced_distance_field, TraitError, TraitExpr};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StabilityError {
    #[error("fields live on different grids")]
    GridMismatch,
    #[error(transparent)]
    Trait(#[from] TraitError),
    #[error(transparent)]
    Tree(#[from] MergeTreeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub tol: f64,
    /// Extra slack granted to `sup_diff <= d_H` when `d_H` was sampled.
    pub sampling_slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub d_h: f64,
    /// Sampling step of `d_h`; absent when it is exact.
    pub hausdorff_step: Option<f64>,
    pub sup_diff: f64,
    pub d_b: f64,
    pub bottleneck_ok: bool,
    pub hausdorff_ok: bool,
    pub chain_ok: bool,
    pub tolerances: Tolerances,
}

/// Largest absolute vertex-wise difference.
pub fn sup_norm_diff(h1: &ScalarField, h2: &ScalarField) -> Result<f64, StabilityError> {
    if h1.grid() != h2.grid() {
        return Err(StabilityError::GridMismatch);
    }
    Ok(h1
        .values()
        .iter()
        .zip(h2.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Evaluates both traits, builds their merge trees and checks the chain at
/// `tol`. `step` is the Hausdorff sampling step for extended traits.
pub fn verify_stability_chain(
    t1: &TraitExpr,
    t2: &TraitExpr,
    mf: &MultiField,
    tol: f64,
    step: f64,
) -> Result<StabilityReport, StabilityError> {
    let h1 = induced_distance_field(t1, mf)?;
    let h2 = induced_distance_field(t2, mf)?;
    let hd = hausdorff_distance(t1, t2, step)?;
    let sup_diff = sup_norm_diff(&h1, &h2)?;
    let d1 = persistence_diagram(&compute_merge_tree(&h1)?);
    let d2 = persistence_diagram(&compute_merge_tree(&h2)?);
    let d_b = bottleneck_distance(&d1, &d2)?;
    let tolerances = Tolerances {
        tol,
        sampling_slack: hd.step.unwrap_or(0.0),
    };
    let bottleneck_ok = d_b <= sup_diff + tol;
    let hausdorff_ok = sup_diff <= hd.value + tol + tolerances.sampling_slack;
    Ok(StabilityReport {
        d_h: hd.value,
        hausdorff_step: hd.step,
        sup_diff,
        d_b,
        bottleneck_ok,
        hausdorff_ok,
        chain_ok: bottleneck_ok && hausdorff_ok,
        tolerances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Channel;
    use crate::grid::GridSpec;
    use crate::scalar::Meaning;
    use crate::traits::TraitPrimitive;

    fn grid_mf() -> MultiField {
        let g = GridSpec::with_dims(4, 3, 1).unwrap();
        let x: Vec<f64> = (0..12).map(|i| (i % 4) as f64).collect();
        let y: Vec<f64> = (0..12).map(|i| ((i * 7) % 5) as f64 * 0.5).collect();
        MultiField::new(g, vec![Channel::raw("x", x), Channel::raw("y", y)]).unwrap()
    }

    #[test]
    fn sup_norm_of_shift() {
        let g = GridSpec::with_dims(3, 1, 1).unwrap();
        let a = ScalarField::new(g, vec![1.0, 2.0, 3.0], Meaning::Generic).unwrap();
        let b = ScalarField::new(g, vec![1.5, 2.5, 3.5], Meaning::Generic).unwrap();
        assert_eq!(sup_norm_diff(&a, &a).unwrap(), 0.0);
        assert_eq!(sup_norm_diff(&a, &b).unwrap(), 0.5);
        let c = ScalarField::new(GridSpec::with_dims(1, 3, 1).unwrap(), vec![0.0; 3], Meaning::Generic)
            .unwrap();
        assert_eq!(sup_norm_diff(&a, &c), Err(StabilityError::GridMismatch));
    }

    #[test]
    fn identical_traits() {
        let t = TraitExpr::leaf(TraitPrimitive::point(&["x", "y"], &[1.0, 1.0]));
        let r = verify_stability_chain(&t, &t, &grid_mf(), 1e-9, 0.1).unwrap();
        assert_eq!((r.d_h, r.sup_diff, r.d_b), (0.0, 0.0, 0.0));
        assert!(r.chain_ok);
        assert_eq!(r.hausdorff_step, None);
    }

    #[test]
    fn points_five_apart() {
        let a = TraitExpr::leaf(TraitPrimitive::point(&["x", "y"], &[0.0, 0.0]));
        let b = TraitExpr::leaf(TraitPrimitive::point(&["x", "y"], &[3.0, 4.0]));
        let r = verify_stability_chain(&a, &b, &grid_mf(), 1e-9, 0.1).unwrap();
        assert_eq!(r.d_h, 5.0);
        assert!(r.sup_diff <= 5.0 + 1e-9);
        assert!(r.chain_ok);
        let s = verify_stability_chain(&b, &a, &grid_mf(), 1e-9, 0.1).unwrap();
        assert_eq!((r.d_h, r.sup_diff, r.d_b), (s.d_h, s.sup_diff, s.d_b));
    }

    #[test]
    fn sampled_traits_get_slack() {
        let a = TraitExpr::leaf(TraitPrimitive::segment(&["x", "y"], &[0.0, 0.0], &[2.0, 0.0]));
        let b = TraitExpr::leaf(TraitPrimitive::segment(&["x", "y"], &[0.0, 1.0], &[2.0, 1.0]));
        let r = verify_stability_chain(&a, &b, &grid_mf(), 1e-9, 0.05).unwrap();
        assert_eq!(r.hausdorff_step, Some(0.05));
        assert_eq!(r.tolerances.sampling_slack, 0.05);
        assert!(r.chain_ok);
    }
}
