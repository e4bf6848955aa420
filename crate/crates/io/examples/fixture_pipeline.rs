//! Generates the crossing-stripes fixture, evaluates a point trait near the
//! stripe A profile, builds its merge tree and extracts crown segments. Every
//! artifact is written under the system temp directory in the same formats
//! the `timt` command line uses.

use timt_core::field::FieldError;
use timt_core::merge_tree::Metric;
use timt_core::queries::{QuerySpec, Simplification};
use timt_core::traits::{TraitExpr, TraitPrimitive};
use timt_io::dataset::{save_dataset, save_field, Dtype};
use timt_io::fixtures::{generate_fixture, FixtureKind, FixtureParams};
use timt_io::pipeline::{evaluate_trait, segment_field};
use timt_io::segmentation_io::save_segmentation;
use timt_io::trait_doc::{save_trait, TraitDocument};
use timt_io::tree_export::{build_tree, export_tree, field_hash, save_tree, Direction};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::temp_dir().join("timt-fixture-pipeline");
    let params = FixtureParams { dims: Some([48, 48, 1]), directions: Some(8), ..Default::default() };
    let mf = generate_fixture(FixtureKind::CrossingStripes2d, &params, 0)?;
    save_dataset(&mf, &out.join("stripes.json"), Dtype::F64, None)?;

    // the profile of a vertex in the middle of stripe A, away from the crossing
    let [nx, ny, _] = mf.grid().dims;
    let labels = &mf.channel("label")?.values;
    let probe = (0..mf.len())
        .filter(|&v| labels[v] == 1.0)
        .min_by_key(|&v| (v % nx).abs_diff(nx / 5) + (v / nx).abs_diff(ny / 2))
        .ok_or("stripe A is empty")?;
    let channels: Vec<String> = (0..8).map(|k| format!("dwi{k:02}")).collect();
    let names: Vec<&str> = channels.iter().map(String::as_str).collect();
    let coords = names.iter().map(|c| Ok(mf.channel(c)?.values[probe])).collect::<Result<Vec<f64>, FieldError>>()?;
    let doc = TraitDocument::new(TraitExpr::leaf(TraitPrimitive::point(&names, &coords)));
    save_trait(&doc, &out.join("stripe_a.trait.json"))?;

    let ev = evaluate_trait(&doc, &mf)?;
    save_field(&ev.field, "h", &out.join("h.json"))?;
    let (lo, hi) = ev.field.values().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    println!("trait field over {} vertices spans [{lo:.3}, {hi:.3}]", ev.field.len());

    let simp = Simplification { metric: Metric::Persistence, threshold: 0.05 * (hi - lo) };
    let tree = build_tree(&ev.field, Direction::Sublevel, simp)?;
    let export = export_tree(&tree, &ev.field, Direction::Sublevel, simp);
    save_tree(&export, &out.join("tree.json"))?;
    println!("merge tree: {} nodes, {} arcs, {} persistence pairs", export.nodes.len(), export.arcs.len(), export.pairs.len());

    let delta = 0.2 * (hi - lo);
    let seg = segment_field(&ev.field, Direction::Sublevel, &QuerySpec::crown(delta))?;
    save_segmentation(&seg, Direction::Sublevel, field_hash(&ev.field), &out.join("crown.json"))?;
    let (mut hit, mut total) = (0, 0);
    for (v, &l) in seg.labels.iter().enumerate() {
        if l >= 0 {
            total += 1;
            hit += usize::from(labels[v] == 1.0);
        }
    }
    for s in &seg.segments {
        println!("segment {}: {} vertices, minimum {:.4} at vertex {}", s.id, s.size, s.min_value, s.min_vertex);
    }
    println!("{hit} of {total} segmented vertices lie in stripe A");
    println!("artifacts written to {}", out.display());
    Ok(())
}
