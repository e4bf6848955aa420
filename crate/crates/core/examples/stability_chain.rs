//! Moves a point trait step by step and reports the chain
//! `d_B <= sup|h1 - h2| <= d_H` for every step.

use timt_core::field::{Channel, MultiField};
use timt_core::grid::GridSpec;
use timt_core::stability::verify_stability_chain;
use timt_core::traits::{TraitExpr, TraitPrimitive};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = GridSpec::with_dims(16, 16, 16)?;
    let wave = |fx: f64, fy: f64, fz: f64, phase: f64| -> Vec<f64> {
        (0..grid.len())
            .map(|i| {
                let [x, y, z] = grid.coords(i).map(|c| c as f64);
                (fx * x + fy * y + fz * z + phase).sin()
            })
            .collect()
    };
    let mf = MultiField::new(
        grid,
        vec![
            Channel::raw("u", wave(0.3, 0.1, 0.2, 0.0)),
            Channel::raw("v", wave(-0.2, 0.35, 0.1, 1.0)),
        ],
    )?;
    let at = |u: f64, v: f64| TraitExpr::leaf(TraitPrimitive::point(&["u", "v"], &[u, v]));
    let base = at(0.2, -0.1);
    println!("{:>6} {:>10} {:>10} {:>10} ok", "shift", "d_B", "sup", "d_H");
    for k in 0..6 {
        let shift = 0.05 * k as f64;
        let r = verify_stability_chain(&base, &at(0.2 + shift, -0.1 + shift), &mf, 1e-9, 0.05)?;
        println!("{shift:>6.2} {:>10.5} {:>10.5} {:>10.5} {}", r.d_b, r.sup_diff, r.d_h, r.chain_ok);
    }

    let band = TraitExpr::leaf(TraitPrimitive::segment(&["u", "v"], &[-0.5, 0.0], &[0.5, 0.0]));
    let moved = TraitExpr::leaf(TraitPrimitive::segment(&["u", "v"], &[-0.5, 0.1], &[0.5, 0.1]));
    let r = verify_stability_chain(&band, &moved, &mf, 1e-9, 0.01)?;
    println!("{}", serde_json::to_string_pretty(&r)?);
    Ok(())
}
