//! Derives eigenvalue and anisotropy channels from a synthetic stress field,
//! then segments the region of strongest linear anisotropy.

use timt_core::field::{derive_channel, Channel, DerivedKind, MultiField};
use timt_core::grid::GridSpec;
use timt_core::merge_tree::{compute_merge_tree, Metric};
use timt_core::queries::{run_query, segmentation_report, QuerySpec};
use timt_core::tensor::{max_shear, sym3_eigenvalues, westin_measures, Sym3Tensor};
use timt_core::traits::{induced_distance_field, TraitExpr, TraitPrimitive};

const COMPONENTS: [&str; 6] = ["xx", "yy", "zz", "xy", "xz", "yz"];

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let e = sym3_eigenvalues(&Sym3Tensor::diagonal(3.0, 2.0, 1.0))?;
    let w = westin_measures(&e)?;
    println!(
        "diag(3,2,1): c_l={:.4} c_p={:.4} c_s={:.4} shear={}",
        w.c_l,
        w.c_p,
        w.c_s,
        max_shear(&e)
    );

    // isotropic pressure plus a uniaxial load whose strength peaks in the middle
    let grid = GridSpec::with_dims(24, 24, 8)?;
    let mut comps: Vec<Vec<f64>> = (0..6).map(|_| Vec::with_capacity(grid.len())).collect();
    for i in 0..grid.len() {
        let [x, y, z] = grid.coords(i).map(|c| c as f64);
        let r2 = (x - 11.5).powi(2) + (y - 11.5).powi(2) + (z - 3.5).powi(2);
        let load = 4.0 * (-r2 / 30.0).exp();
        let twist = 0.3 * (x / 5.0).sin();
        let t = [1.0 + load, 1.0, 1.0, twist, 0.1, 0.0];
        for (c, v) in comps.iter_mut().zip(t) {
            c.push(v);
        }
    }
    let channels = COMPONENTS
        .iter()
        .zip(comps)
        .map(|(n, v)| Channel::raw(*n, v))
        .collect();
    let mut mf = MultiField::new(grid, channels)?;
    for kind in [DerivedKind::Eig1, DerivedKind::CL, DerivedKind::CP, DerivedKind::CS, DerivedKind::MaxShear] {
        mf = derive_channel(&mf, kind, &COMPONENTS)?;
        let (lo, hi) = mf.channel(kind.as_str())?.range();
        println!("{:>10}: [{lo:.4}, {hi:.4}]", kind.as_str());
    }

    let trait_expr = TraitExpr::leaf(TraitPrimitive::boxed(&["c_l"], &[(0.5, 1.0)]));
    let h = induced_distance_field(&trait_expr, &mf)?;
    let inside = h.values().iter().filter(|v| **v == 0.0).count();
    println!("vertices with c_l >= 0.5: {inside}");

    let tree = compute_merge_tree(&h)?;
    let seg = run_query(&h, &tree, &QuerySpec::branch_decomposition(Metric::Persistence, 0.05))?;
    for row in segmentation_report(&seg) {
        println!("segment {}: min {:.4}, {} vertices", row.id, row.min_value, row.size);
    }
    Ok(())
}
