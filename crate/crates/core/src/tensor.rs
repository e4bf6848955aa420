//! Symmetric 3x3 tensors: closed-form eigenvalues and anisotropy measures.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("tensor has a non-finite component")]
    NonFinite,
    #[error("eigenvalue triple is not sorted descending or not finite")]
    InvalidTriple,
    #[error("trace {trace} is below the degeneracy guard")]
    DegenerateTrace { trace: f64 },
}

/// A symmetric tensor stored by its six independent components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sym3Tensor {
    pub xx: f64,
    pub yy: f64,
    pub zz: f64,
    pub xy: f64,
    pub xz: f64,
    pub yz: f64,
}

impl Sym3Tensor {
    pub fn new(xx: f64, yy: f64, zz: f64, xy: f64, xz: f64, yz: f64) -> Self {
        Sym3Tensor {
            xx,
            yy,
            zz,
            xy,
            xz,
            yz,
        }
    }

    pub fn diagonal(a: f64, b: f64, c: f64) -> Self {
        Self::new(a, b, c, 0.0, 0.0, 0.0)
    }

    pub fn to_matrix(&self) -> [[f64; 3]; 3] {
        [
            [self.xx, self.xy, self.xz],
            [self.xy, self.yy, self.yz],
            [self.xz, self.yz, self.zz],
        ]
    }

    pub fn from_matrix(m: &[[f64; 3]; 3]) -> Self {
        Self::new(m[0][0], m[1][1], m[2][2], m[0][1], m[0][2], m[1][2])
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy + self.zz
    }

    pub fn frobenius_norm(&self) -> f64 {
        (self.xx * self.xx
            + self.yy * self.yy
            + self.zz * self.zz
            + 2.0 * (self.xy * self.xy + self.xz * self.xz + self.yz * self.yz))
            .sqrt()
    }

    pub fn determinant(&self) -> f64 {
        self.xx * (self.yy * self.zz - self.yz * self.yz)
            - self.xy * (self.xy * self.zz - self.yz * self.xz)
            + self.xz * (self.xy * self.yz - self.yy * self.xz)
    }

    /// `det(A - shift * I)`.
    pub fn shifted_determinant(&self, shift: f64) -> f64 {
        let mut s = *self;
        s.xx -= shift;
        s.yy -= shift;
        s.zz -= shift;
        s.determinant()
    }

    fn is_finite(&self) -> bool {
        [self.xx, self.yy, self.zz, self.xy, self.xz, self.yz]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// Eigenvalues sorted descending: `l1 >= l2 >= l3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenTriple {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
}

impl EigenTriple {
    pub fn new(l1: f64, l2: f64, l3: f64) -> Result<Self, TensorError> {
        let e = EigenTriple { l1, l2, l3 };
        if !(l1.is_finite() && l2.is_finite() && l3.is_finite()) || l1 < l2 || l2 < l3 {
            return Err(TensorError::InvalidTriple);
        }
        Ok(e)
    }

    pub fn sum(&self) -> f64 {
        self.l1 + self.l2 + self.l3
    }

    fn max_abs(&self) -> f64 {
        self.l1.abs().max(self.l2.abs()).max(self.l3.abs())
    }
}

/// Westin linear, planar and spherical anisotropy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Westin {
    pub c_l: f64,
    pub c_p: f64,
    pub c_s: f64,
}

/// Relative trace magnitude below which the Westin measures are reported degenerate.
pub const TRACE_GUARD: f64 = 1e-12;

/// Eigenvalues of a symmetric 3x3 tensor via the trigonometric solution of
/// the characteristic cubic.
pub fn sym3_eigenvalues(t: &Sym3Tensor) -> Result<EigenTriple, TensorError> {
    if !t.is_finite() {
        return Err(TensorError::NonFinite);
    }
    let off = t.xy * t.xy + t.xz * t.xz + t.yz * t.yz;
    let (l1, l2, l3) = if off == 0.0 {
        let mut d = [t.xx, t.yy, t.zz];
        d.sort_by(|a, b| b.total_cmp(a));
        (d[0], d[1], d[2])
    } else {
        let q = t.trace() / 3.0;
        let (a, b, c) = (t.xx - q, t.yy - q, t.zz - q);
        let p2 = a * a + b * b + c * c + 2.0 * off;
        let p = (p2 / 6.0).sqrt();
        // B = (A - qI) / p, r = det(B) / 2
        let shifted = Sym3Tensor::new(a / p, b / p, c / p, t.xy / p, t.xz / p, t.yz / p);
        let r = (shifted.determinant() / 2.0).clamp(-1.0, 1.0);
        let phi = r.acos() / 3.0;
        let e1 = q + 2.0 * p * phi.cos();
        let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::FRAC_PI_3).cos();
        let e2 = 3.0 * q - e1 - e3;
        let mut d = [e1, e2, e3];
        d.sort_by(|a, b| b.total_cmp(a));
        (d[0], d[1], d[2])
    };
    EigenTriple::new(l1, l2, l3)
}

pub fn westin_measures(e: &EigenTriple) -> Result<Westin, TensorError> {
    let trace = e.sum();
    if trace.abs() < TRACE_GUARD * e.max_abs().max(1.0) {
        return Err(TensorError::DegenerateTrace { trace });
    }
    Ok(Westin {
        c_l: (e.l1 - e.l2) / trace,
        c_p: 2.0 * (e.l2 - e.l3) / trace,
        c_s: 3.0 * e.l3 / trace,
    })
}

pub fn max_shear(e: &EigenTriple) -> f64 {
    e.l1 - e.l3
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_and_isotropic() {
        let e = sym3_eigenvalues(&Sym3Tensor::diagonal(1.0, 3.0, 2.0)).unwrap();
        assert_eq!((e.l1, e.l2, e.l3), (3.0, 2.0, 1.0));
        let e = sym3_eigenvalues(&Sym3Tensor::diagonal(3.0, 3.0, 3.0)).unwrap();
        assert_eq!((e.l1, e.l2, e.l3), (3.0, 3.0, 3.0));
    }

    #[test]
    fn westin_examples() {
        let w = westin_measures(&EigenTriple::new(3.0, 2.0, 1.0).unwrap()).unwrap();
        assert!((w.c_l - 1.0 / 6.0).abs() < 1e-15);
        assert!((w.c_p - 1.0 / 3.0).abs() < 1e-15);
        assert!((w.c_s - 0.5).abs() < 1e-15);
        let w = westin_measures(&EigenTriple::new(1.0, 1.0, 1.0).unwrap()).unwrap();
        assert_eq!((w.c_l, w.c_p, w.c_s), (0.0, 0.0, 1.0));
        let w = westin_measures(&EigenTriple::new(1.0, 0.0, 0.0).unwrap()).unwrap();
        assert_eq!((w.c_l, w.c_p, w.c_s), (1.0, 0.0, 0.0));
    }

    #[test]
    fn westin_guard_rejects_zero_trace() {
        let e = EigenTriple::new(1.0, 0.0, -1.0).unwrap();
        assert!(matches!(
            westin_measures(&e),
            Err(TensorError::DegenerateTrace { .. })
        ));
        let e = EigenTriple::new(0.0, 0.0, 0.0).unwrap();
        assert!(westin_measures(&e).is_err());
    }

    #[test]
    fn shear_examples() {
        assert_eq!(max_shear(&EigenTriple::new(3.0, 2.0, 1.0).unwrap()), 2.0);
        assert_eq!(max_shear(&EigenTriple::new(1.0, 1.0, 1.0).unwrap()), 0.0);
    }

    #[test]
    fn non_finite_rejected() {
        let t = Sym3Tensor::new(f64::NAN, 0.0, 0.0, 0.0, 0.0, 0.0);
        assert_eq!(sym3_eigenvalues(&t), Err(TensorError::NonFinite));
        assert!(EigenTriple::new(1.0, 2.0, 0.0).is_err());
    }
}
