//! Builds the merge tree of a field with several basins, simplifies it and
//! runs the four segmentation queries.

use timt_core::grid::GridSpec;
use timt_core::merge_tree::{
    branch_decomposition, compute_merge_tree, hypervolume_per_pair, persistence_pairs, Metric,
};
use timt_core::queries::{run_query, segmentation_report, QuerySpec, BACKGROUND};
use timt_core::scalar::{Meaning, ScalarField};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = GridSpec::with_dims(40, 30, 1)?;
    let wells = [(8.0, 8.0, 0.0, 5.0), (30.0, 10.0, 0.6, 4.0), (20.0, 22.0, 0.3, 6.0), (33.0, 25.0, 1.1, 2.0)];
    let values = (0..grid.len())
        .map(|i| {
            let [x, y, _] = grid.coords(i).map(|c| c as f64);
            wells
                .iter()
                .map(|&(cx, cy, depth, width)| {
                    depth + 2.0 * (1.0 - (-((x - cx).powi(2) + (y - cy).powi(2)) / (2.0 * width * width)).exp())
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let h = ScalarField::new(grid, values, Meaning::Distance)?;
    let tree = compute_merge_tree(&h)?;
    println!(
        "{} nodes, {} arcs, {} leaves, {} saddles",
        tree.nodes().len(),
        tree.arcs().len(),
        tree.leaf_count(),
        tree.saddle_count()
    );

    let pairs = persistence_pairs(&tree);
    let hv = hypervolume_per_pair(&tree, &pairs);
    for (p, v) in pairs.pairs.iter().zip(&hv) {
        let (a, b) = (tree.node(p.min), tree.node(p.partner));
        println!(
            "pair min@{} ({:.3}) -> {}@{} ({:.3}): persistence {:.3}, hypervolume {v:.1}",
            a.vertex, a.value, if p.partner == tree.root() { "root" } else { "saddle" }, b.vertex, b.value, p.persistence
        );
    }
    let bd = branch_decomposition(&tree);
    println!("branch decomposition: {} branches", bd.len());

    let simple = tree.simplify(Metric::Persistence, 1.0)?;
    println!("after persistence 1.0: {} leaves", simple.leaf_count());

    for spec in [
        QuerySpec::branch_decomposition(Metric::Hypervolume, 50.0),
        QuerySpec::leaf_arcs(Metric::Persistence, 0.2),
        QuerySpec::subtrees(1.0),
        QuerySpec::crown(0.4),
    ] {
        let seg = run_query(&h, &tree, &spec)?;
        let bg = seg.labels.iter().filter(|&&l| l == BACKGROUND).count();
        println!("{}: {} segments, {bg} background vertices", spec.method.as_str(), seg.len());
        for row in segmentation_report(&seg) {
            println!("  #{} min {:.3} size {} metric {:.3}", row.id, row.min_value, row.size, row.metric);
        }
    }
    Ok(())
}
