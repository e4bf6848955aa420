//! Learns a small dictionary on the crossing-stripes phantom, ranks its atoms
//! as point traits and labels every vertex by the nearest atom crown. The
//! resulting labels are compared with the phantom's ground-truth classes.

use std::collections::BTreeMap;

use timt_core::KsvdConfig;
use timt_io::dictionary_io::StoredDictionary;
use timt_io::fixtures::{generate_fixture, FixtureKind, FixtureParams};
use timt_io::pipeline::{atom_crown_labels, dictionary_suggestions, learn_dictionary};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = FixtureParams { dims: Some([48, 48, 1]), directions: Some(8), ..Default::default() };
    let mf = generate_fixture(FixtureKind::CrossingStripes2d, &params, 0)?;
    let select: Vec<String> = (0..8).map(|k| format!("dwi{k:02}")).collect();

    let cfg = KsvdConfig { k: 3, t0: 1, iterations: 20, seed: 0 };
    let dictionary = learn_dictionary(&mf, &select, &[], &cfg)?;
    let stored = StoredDictionary::in_memory(dictionary, &select, &[]);

    for s in dictionary_suggestions(&stored, &mf)? {
        println!("atom {} used with total weight {:.2}", s.atom, s.score);
    }

    let assigned = atom_crown_labels(&stored, &mf, 0.2)?;
    let truth = &mf.channel("label")?.values;
    let mut table: BTreeMap<(i64, Option<usize>), usize> = BTreeMap::new();
    for (v, a) in assigned.iter().enumerate() {
        *table.entry((truth[v] as i64, *a)).or_default() += 1;
    }
    println!("class  atom   vertices");
    for ((class, atom), count) in table {
        let atom = atom.map_or("-".to_string(), |a| a.to_string());
        println!("{class:>5}  {atom:>4}  {count:>9}");
    }
    Ok(())
}
