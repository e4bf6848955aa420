//! Composes box and polygon traits over two channels and compares the two
//! boolean conventions on the resulting zero level sets.

use timt_core::field::{Channel, MultiField};
use timt_core::grid::GridSpec;
use timt_core::traits::{evaluate, Semantics, TraitExpr, TraitNode, TraitPrimitive};

fn zero_count(expr: &TraitExpr, mf: &MultiField) -> Result<usize, Box<dyn std::error::Error>> {
    let eval = evaluate(expr, mf)?;
    if !eval.capped.is_empty() {
        println!("  open box sides capped on {:?}", eval.capped);
    }
    Ok(eval.field.values().iter().filter(|v| **v == 0.0).count())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = GridSpec::with_dims(32, 32, 1)?;
    let coord = |axis: usize| -> Vec<f64> {
        (0..grid.len())
            .map(|i| grid.coords(i)[axis] as f64 / 31.0)
            .collect()
    };
    let mf = MultiField::new(
        grid,
        vec![Channel::raw("temperature", coord(0)), Channel::raw("pressure", coord(1))],
    )?;

    let warm = TraitNode::leaf(TraitPrimitive::boxed(&["temperature"], &[(0.5, f64::INFINITY)]));
    let triangle = TraitNode::leaf(TraitPrimitive::polygon(
        "temperature",
        "pressure",
        &[[0.2, 0.2], [0.9, 0.3], [0.4, 0.9]],
    ));
    let low_pressure = TraitNode::leaf(TraitPrimitive::boxed(&["pressure"], &[(0.0, 0.4)]));

    for (name, node) in [
        ("warm", warm.clone()),
        ("triangle", triangle.clone()),
        ("warm AND triangle", TraitNode::and(vec![warm.clone(), triangle.clone()])),
        ("warm OR triangle", TraitNode::or(vec![warm.clone(), triangle.clone()])),
        ("NOT low_pressure", TraitNode::not(low_pressure.clone())),
        ("warm x triangle (L2)", TraitNode::product_l2(vec![warm, triangle])),
    ] {
        for sem in [Semantics::Csg, Semantics::PaperLiteral] {
            let expr = TraitExpr::new(node.clone()).with_semantics(sem);
            println!("{name:>22} [{:>13}]: {} zero vertices", sem.as_str(), zero_count(&expr, &mf)?);
        }
    }

    let doc = serde_json::to_string_pretty(&TraitExpr::new(TraitNode::and(vec![low_pressure])))?;
    println!("trait document:\n{doc}");
    Ok(())
}
