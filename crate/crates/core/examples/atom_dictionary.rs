//! Learns a dictionary on a planted mixture, inspects atom similarity and
//! turns the most used atoms into point traits.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use timt_core::dictionary::{
    atom_similarity_matrix, cluster_atoms, ksvd_learn, suggest_atom_traits, KsvdConfig,
};
use timt_core::field::{Channel, MultiField};
use timt_core::grid::GridSpec;
use timt_core::traits::{induced_distance_field, similarity_field};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let m = 5;
    let grid = GridSpec::with_dims(20, 20, 1)?;
    let n = grid.len();
    let mut rng = ChaCha8Rng::seed_from_u64(11);

    // three planted directions, each vertex mixes at most two of them
    let planted = DMatrix::from_fn(m, 3, |_, _| rng.random_range(-1.0..1.0));
    let mut f = DMatrix::zeros(m, n);
    for j in 0..n {
        let a = rng.random_range(0..3);
        let b = (a + 1 + rng.random_range(0..2)) % 3;
        let col = planted.column(a) * rng.random_range(0.5..2.0)
            + planted.column(b) * rng.random_range(0.0..0.3);
        f.set_column(j, &col);
    }
    let channels = (0..m)
        .map(|c| Channel::raw(format!("ch{c}"), f.row(c).iter().copied().collect()))
        .collect();
    let mf = MultiField::new(grid, channels)?;

    let cfg = KsvdConfig {
        k: 6,
        t0: 2,
        iterations: 30,
        seed: 5,
    };
    let (dict, codes) = ksvd_learn(&mf.attribute_matrix(), &cfg)?;
    println!(
        "K-SVD: {} iterations, final RMSE {:.3e}, {} reseeded atoms",
        dict.meta.iterations,
        dict.meta.final_rmse,
        dict.meta.reseeded.len()
    );

    let s = atom_similarity_matrix(&dict);
    println!("atom similarity:\n{s:.3}");
    for c in cluster_atoms(&s, 0.9)? {
        println!("cluster {:?}, representative {}", c.members, c.representative);
    }

    for sug in suggest_atom_traits(&dict, &codes, &mf)?.iter().take(3) {
        let h = induced_distance_field(&sug.trait_expr, &mf)?;
        let (lo, _) = h.min_max();
        let sim = similarity_field(&dict.atom(sug.atom), &mf)?;
        let (_, best) = sim.field.min_max();
        println!(
            "atom {} score {:.2}: closest vertex distance {lo:.3}, best cosine {best:.4}",
            sug.atom, sug.score
        );
    }
    Ok(())
}
