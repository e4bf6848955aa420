use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::omp::omp;
use super::{Dictionary, DictionaryError, SparseCodes, TrainingMeta};

/// Early stop when RMSE improves by less than this over [`EARLY_STOP_WINDOW`] iterations.
pub const EARLY_STOP_TOL: f64 = 1e-7;
pub const EARLY_STOP_WINDOW: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsvdConfig {
    pub k: usize,
    pub t0: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl KsvdConfig {
    /// Twice the signal dimension.
    pub fn default_k(m: usize) -> usize {
        2 * m
    }
}

/// Alternates OMP coding of all columns with rank-1 atom updates.
///
/// A column keeps its previous code whenever the fresh OMP code reconstructs
/// it worse, so the objective never increases. The returned codes come from a
/// final coding pass against the returned atoms.
pub fn ksvd_learn(
    f: &DMatrix<f64>,
    cfg: &KsvdConfig,
) -> Result<(Dictionary, SparseCodes), DictionaryError> {
    let (m, n) = f.shape();
    let k = cfg.k;
    if k == 0 {
        return Err(DictionaryError::NoAtoms);
    }
    if cfg.t0 == 0 || cfg.t0 > k {
        return Err(DictionaryError::BadSparsity { t0: cfg.t0, k });
    }
    if n < k {
        return Err(DictionaryError::TooFewColumns { k, n });
    }
    if f.iter().any(|v| !v.is_finite()) {
        return Err(DictionaryError::NonFinite("data matrix"));
    }
    if m == 0 || f.norm() == 0.0 {
        return Err(DictionaryError::Degenerate);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut d = init_atoms(f, k, &mut rng);
    let mut c = DMatrix::<f64>::zeros(k, n);
    let mut meta = TrainingMeta {
        t0: cfg.t0,
        seed: cfg.seed,
        ..TrainingMeta::default()
    };

    for iter in 0..cfg.iterations {
        code_columns(f, &d, &mut c, cfg.t0);
        let mut residual = f - &d * &c;
        meta.rmse_history.push(rmse(&residual));
        meta.iterations = iter + 1;
        let h = &meta.rmse_history;
        if h.len() > EARLY_STOP_WINDOW
            && h[h.len() - 1 - EARLY_STOP_WINDOW] - h[h.len() - 1] < EARLY_STOP_TOL
        {
            break;
        }
        let mut taken: Vec<usize> = Vec::new();
        for atom in 0..k {
            let users: Vec<usize> = (0..n).filter(|&j| c[(atom, j)] != 0.0).collect();
            if users.is_empty() {
                let worst = worst_column(&residual, &taken);
                taken.push(worst);
                let col = f.column(worst);
                let norm = col.norm();
                if norm > 0.0 {
                    d.set_column(atom, &(col / norm));
                    meta.reseeded.push((iter, atom));
                }
                continue;
            }
            update_atom(f, &mut d, &mut c, &mut residual, atom, &users);
        }
        canonicalize_signs(&mut d, &mut c);
    }

    canonicalize_signs(&mut d, &mut c);
    code_columns(f, &d, &mut c, cfg.t0);
    meta.final_rmse = rmse(&(f - &d * &c));
    let dict = Dictionary::new(d)?.with_meta(meta);
    Ok((dict, SparseCodes::from_dense(&c)))
}

fn rmse(residual: &DMatrix<f64>) -> f64 {
    (residual.norm_squared() / residual.len().max(1) as f64).sqrt()
}

/// K distinct nonzero data columns, normalized. Missing atoms are filled with
/// random unit vectors when there are fewer than K nonzero columns.
fn init_atoms(f: &DMatrix<f64>, k: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let m = f.nrows();
    let nonzero: Vec<usize> = (0..f.ncols()).filter(|&j| f.column(j).norm() > 0.0).collect();
    let take = k.min(nonzero.len());
    let picks = sample(rng, nonzero.len(), take);
    let mut d = DMatrix::zeros(m, k);
    for (atom, p) in picks.iter().enumerate() {
        let col = f.column(nonzero[p]);
        d.set_column(atom, &(col / col.norm()));
    }
    for atom in take..k {
        let v = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
        let norm = v.norm();
        let v = if norm > 0.0 { v / norm } else { DVector::from_element(m, 1.0 / (m as f64).sqrt()) };
        d.set_column(atom, &v);
    }
    d
}

fn code_columns(f: &DMatrix<f64>, d: &DMatrix<f64>, c: &mut DMatrix<f64>, t0: usize) {
    let k = d.ncols();
    let fresh: Vec<Option<DVector<f64>>> = (0..f.ncols())
        .into_par_iter()
        .map(|j| {
            let signal = f.column(j).into_owned();
            let new = omp(d, &signal, t0).code.to_dense(k);
            let old = c.column(j);
            if old.iter().all(|&v| v == 0.0) {
                return Some(new);
            }
            let new_err = (&signal - d * &new).norm_squared();
            let old_err = (&signal - d * old).norm_squared();
            (new_err <= old_err).then_some(new)
        })
        .collect();
    for (j, col) in fresh.into_iter().enumerate() {
        if let Some(col) = col {
            c.set_column(j, &col);
        }
    }
}

fn worst_column(residual: &DMatrix<f64>, taken: &[usize]) -> usize {
    let mut best = 0;
    let mut best_err = f64::NEG_INFINITY;
    for (j, col) in residual.column_iter().enumerate() {
        let e = col.norm_squared();
        if e > best_err && !taken.contains(&j) {
            best = j;
            best_err = e;
        }
    }
    best
}

/// Rank-1 update of `atom` on the columns that use it. The leading left
/// singular vector comes from the eigen decomposition of `E E^T`.
fn update_atom(
    f: &DMatrix<f64>,
    d: &mut DMatrix<f64>,
    c: &mut DMatrix<f64>,
    residual: &mut DMatrix<f64>,
    atom: usize,
    users: &[usize],
) {
    let m = f.nrows();
    let dk = d.column(atom).into_owned();
    let mut e = DMatrix::zeros(m, users.len());
    for (col, &j) in users.iter().enumerate() {
        e.set_column(col, &(residual.column(j) + &dk * c[(atom, j)]));
    }
    let gram = &e * e.transpose();
    let eig = SymmetricEigen::new(gram);
    let top = eig.eigenvalues.imax();
    if !(eig.eigenvalues[top] > 0.0) {
        return;
    }
    let u = eig.eigenvectors.column(top).into_owned();
    let u = &u / u.norm();
    let coeffs = e.tr_mul(&u);
    d.set_column(atom, &u);
    for (col, &j) in users.iter().enumerate() {
        c[(atom, j)] = coeffs[col];
        residual.set_column(j, &(e.column(col) - &u * coeffs[col]));
    }
}

/// Flips each atom so its largest-magnitude entry is positive, together with
/// its code row.
pub(crate) fn canonicalize_signs(d: &mut DMatrix<f64>, c: &mut DMatrix<f64>) {
    for atom in 0..d.ncols() {
        let col = d.column(atom);
        let mut lead = 0;
        for i in 1..col.len() {
            if col[i].abs() > col[lead].abs() {
                lead = i;
            }
        }
        if col[lead] < 0.0 {
            d.column_mut(atom).neg_mut();
            c.row_mut(atom).neg_mut();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_data() {
        let u = DVector::from_vec(vec![1.0, -3.0, 2.0]);
        let v = DVector::from_vec(vec![0.5, 1.0, -3.0, 2.0, 0.25]);
        let f = &u * v.transpose();
        let cfg = KsvdConfig { k: 1, t0: 1, iterations: 5, seed: 3 };
        let (d, codes) = ksvd_learn(&f, &cfg).unwrap();
        let atom = d.atom(0);
        let un = u.norm();
        let cos: f64 = atom.iter().zip(u.iter()).map(|(a, b)| a * b / un).sum();
        assert!((cos.abs() - 1.0).abs() < 1e-12);
        assert!(d.meta.final_rmse <= 1e-10);
        assert_eq!(codes.len(), 5);
        // the largest-magnitude entry of u is -3, so the canonical atom is -u
        assert!(atom[1] > 0.0);
    }

    #[test]
    fn argument_errors() {
        let f = DMatrix::from_element(2, 3, 1.0);
        let cfg = KsvdConfig { k: 4, t0: 1, iterations: 1, seed: 0 };
        assert!(matches!(ksvd_learn(&f, &cfg), Err(DictionaryError::TooFewColumns { .. })));
        let cfg = KsvdConfig { k: 2, t0: 3, iterations: 1, seed: 0 };
        assert!(matches!(ksvd_learn(&f, &cfg), Err(DictionaryError::BadSparsity { .. })));
        let cfg = KsvdConfig { k: 2, t0: 1, iterations: 1, seed: 0 };
        assert_eq!(
            ksvd_learn(&DMatrix::zeros(2, 3), &cfg).unwrap_err(),
            DictionaryError::Degenerate
        );
    }

    #[test]
    fn canonical_signs() {
        let mut d = DMatrix::from_row_slice(2, 2, &[0.6, -0.8, -0.8, 0.6]);
        let mut c = DMatrix::from_row_slice(2, 1, &[1.0, 2.0]);
        canonicalize_signs(&mut d, &mut c);
        assert_eq!(d, DMatrix::from_row_slice(2, 2, &[-0.6, 0.8, 0.8, -0.6]));
        assert_eq!(c, DMatrix::from_row_slice(2, 1, &[-1.0, -2.0]));
    }
}
