//! Seeded synthetic data sets.
//!
//! * `crossing_stripes_2d`: diffusion-weighted-like signals on a 2D grid.
//!   A horizontal stripe A and a vertical stripe B cross over an isotropic
//!   background. Every vertex carries one signal per gradient direction
//!   (`dwi00`, `dwi01`, ...) and the ground-truth class in `label`
//!   (0 background, 1 stripe A, 2 stripe B). The crossing belongs to A and
//!   mixes the A and B profiles 0.7 / 0.3.
//! * `two_blob_3d`: `potential` is minus the sum of two Gaussians centred on
//!   vertices, so under face connectivity it has exactly two minima.
//!   `density` and `temperature` are smooth companions with noise.
//! * `tensor_block`: symmetric stress tensors from two point loads above the
//!   block, scaled so the largest Frobenius norm is one and shifted by
//!   `1.5 I`, which keeps every tensor positive definite.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use timt_core::field::{Channel, MultiField};
use timt_core::GridSpec;

use crate::error::IoError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixtureKind {
    CrossingStripes2d,
    TwoBlob3d,
    TensorBlock,
}

impl FixtureKind {
    pub const ALL: [FixtureKind; 3] = [
        FixtureKind::CrossingStripes2d,
        FixtureKind::TwoBlob3d,
        FixtureKind::TensorBlock,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FixtureKind::CrossingStripes2d => "crossing_stripes_2d",
            FixtureKind::TwoBlob3d => "two_blob_3d",
            FixtureKind::TensorBlock => "tensor_block",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }

    pub fn default_dims(self) -> [usize; 3] {
        match self {
            FixtureKind::CrossingStripes2d => [64, 64, 1],
            FixtureKind::TwoBlob3d => [32, 24, 16],
            FixtureKind::TensorBlock => [16, 16, 16],
        }
    }
}

/// Optional overrides; `None` picks the default for the fixture kind.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureParams {
    #[serde(default)]
    pub dims: Option<[usize; 3]>,
    /// Standard deviation of additive Gaussian noise.
    #[serde(default)]
    pub noise: Option<f64>,
    /// Gradient directions of `crossing_stripes_2d`.
    #[serde(default)]
    pub directions: Option<usize>,
    /// Gaussian width of `two_blob_3d`, in vertices.
    #[serde(default)]
    pub sigma: Option<f64>,
}

/// Ground-truth classes of `crossing_stripes_2d`.
pub const CLASS_BACKGROUND: f64 = 0.0;
pub const CLASS_A: f64 = 1.0;
pub const CLASS_B: f64 = 2.0;

pub fn generate_fixture(kind: FixtureKind, params: &FixtureParams, seed: u64) -> Result<MultiField, IoError> {
    let dims = params.dims.unwrap_or(kind.default_dims());
    let grid = GridSpec::with_dims(dims[0], dims[1], dims[2])?;
    if let Some(n) = params.noise {
        if !(n >= 0.0 && n.is_finite()) {
            return Err(IoError::Fixture(format!("noise must be finite and non-negative, got {n}")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        FixtureKind::CrossingStripes2d => crossing_stripes(grid, params, &mut rng),
        FixtureKind::TwoBlob3d => two_blob(grid, params, &mut rng),
        FixtureKind::TensorBlock => tensor_block(grid, params, &mut rng),
    }
}

/// Near-uniform unit vectors on the upper hemisphere (Fibonacci lattice).
fn gradient_directions(n: usize) -> Vec<[f64; 3]> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let z = 1.0 - (k as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * k as f64;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

/// Signal of a cylindrically symmetric diffusion tensor along `axis`.
fn fiber_profile(dirs: &[[f64; 3]], axis: [f64; 3]) -> Vec<f64> {
    let (b, along, across) = (1000.0, 1.7e-3, 0.2e-3);
    dirs.iter()
        .map(|g| {
            let c = g[0] * axis[0] + g[1] * axis[1] + g[2] * axis[2];
            (-b * (across + (along - across) * c * c)).exp()
        })
        .collect()
}

fn crossing_stripes(grid: GridSpec, params: &FixtureParams, rng: &mut ChaCha8Rng) -> Result<MultiField, IoError> {
    let [nx, ny, nz] = grid.dims;
    if nz != 1 {
        return Err(IoError::Fixture("crossing_stripes_2d needs nz = 1".into()));
    }
    if nx < 8 || ny < 8 {
        return Err(IoError::Fixture("crossing_stripes_2d needs at least 8x8 vertices".into()));
    }
    let m = params.directions.unwrap_or(60);
    if !(6..=1000).contains(&m) {
        return Err(IoError::Fixture(format!("directions must lie in 6..=1000, got {m}")));
    }
    let noise = Normal::new(0.0, params.noise.unwrap_or(0.01)).expect("validated noise");
    let dirs = gradient_directions(m);
    let a = fiber_profile(&dirs, [1.0, 0.0, 0.0]);
    let b = fiber_profile(&dirs, [0.0, 1.0, 0.0]);
    let iso = vec![(-1000.0f64 * 0.7e-3).exp(); m];
    // stripes are 3/16 of the extent wide, centred
    let band = |n: usize| {
        let w = (3 * n).div_ceil(16);
        let lo = (n - w) / 2;
        lo..lo + w
    };
    let (a_rows, b_cols) = (band(ny), band(nx));
    let n = grid.len();
    let mut channels: Vec<Vec<f64>> = vec![Vec::with_capacity(n); m];
    let mut label = Vec::with_capacity(n);
    for i in 0..n {
        let [x, y, _] = grid.coords(i);
        let (in_a, in_b) = (a_rows.contains(&y), b_cols.contains(&x));
        let (class, profile): (f64, Vec<f64>) = match (in_a, in_b) {
            (true, true) => (CLASS_A, a.iter().zip(&b).map(|(p, q)| 0.7 * p + 0.3 * q).collect()),
            (true, false) => (CLASS_A, a.clone()),
            (false, true) => (CLASS_B, b.clone()),
            (false, false) => (CLASS_BACKGROUND, iso.clone()),
        };
        let scale = rng.random_range(0.8..1.2);
        for (ch, p) in channels.iter_mut().zip(&profile) {
            ch.push(scale * p + noise.sample(rng));
        }
        label.push(class);
    }
    let mut out: Vec<Channel> = channels
        .into_iter()
        .enumerate()
        .map(|(k, v)| Channel::raw(format!("dwi{k:02}"), v))
        .collect();
    out.push(Channel::raw("label", label));
    Ok(MultiField::new(grid, out)?)
}

fn two_blob(grid: GridSpec, params: &FixtureParams, rng: &mut ChaCha8Rng) -> Result<MultiField, IoError> {
    let [nx, ny, nz] = grid.dims;
    if nx < 8 || ny < 4 || nz < 1 {
        return Err(IoError::Fixture("two_blob_3d needs at least 8x4x1 vertices".into()));
    }
    let sigma = params.sigma.unwrap_or(nx as f64 / 8.0);
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(IoError::Fixture(format!("sigma must be positive, got {sigma}")));
    }
    let c1 = [nx * 2 / 7, ny / 2, nz / 2];
    let c2 = [nx - 1 - nx * 2 / 7, ny / 2, nz / 2];
    let gap = (c2[0] - c1[0]) as f64;
    if gap <= 2.0 * sigma {
        return Err(IoError::Fixture(format!(
            "blobs {gap} vertices apart merge into one at sigma {sigma}"
        )));
    }
    let amp = [rng.random_range(0.9..1.1), rng.random_range(0.9..1.1)];
    let noise = Normal::new(0.0, params.noise.unwrap_or(0.01)).expect("validated noise");
    let gauss = |p: [usize; 3], c: [usize; 3]| {
        let d2: f64 = (0..3).map(|k| (p[k] as f64 - c[k] as f64).powi(2)).sum();
        (-d2 / (2.0 * sigma * sigma)).exp()
    };
    let n = grid.len();
    let (mut potential, mut density, mut temperature) =
        (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for i in 0..n {
        let p = grid.coords(i);
        let (g1, g2) = (gauss(p, c1), gauss(p, c2));
        potential.push(-(amp[0] * g1 + amp[1] * g2));
        density.push(g1 + 0.5 * g2 + noise.sample(rng));
        temperature.push(p[2] as f64 / nz as f64 + 0.2 * g2 + noise.sample(rng));
    }
    Ok(MultiField::new(
        grid,
        vec![
            Channel::raw("potential", potential),
            Channel::raw("density", density),
            Channel::raw("temperature", temperature),
        ],
    )?)
}

/// Stress of a point force `f` in an infinite elastic medium at offset `r`.
fn point_load_stress(r: [f64; 3], f: [f64; 3], poisson: f64) -> [[f64; 3]; 3] {
    let len = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
    let u = r.map(|v| v / len);
    let fu = f[0] * u[0] + f[1] * u[1] + f[2] * u[2];
    let c = -1.0 / (8.0 * PI * (1.0 - poisson) * len * len);
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let delta = if i == j { 1.0 } else { 0.0 };
            c * ((1.0 - 2.0 * poisson) * (f[i] * u[j] + f[j] * u[i] - delta * fu) + 3.0 * u[i] * u[j] * fu)
        })
    })
}

fn tensor_block(grid: GridSpec, params: &FixtureParams, rng: &mut ChaCha8Rng) -> Result<MultiField, IoError> {
    let [nx, ny, nz] = grid.dims;
    if nx < 2 || ny < 2 || nz < 2 {
        return Err(IoError::Fixture("tensor_block needs at least 2x2x2 vertices".into()));
    }
    let jitter = |rng: &mut ChaCha8Rng| rng.random_range(-0.25..0.25);
    let loads = [
        ([nx as f64 / 3.0 + jitter(rng), ny as f64 / 2.0 + jitter(rng), -1.5], [0.0, 0.0, 1.0]),
        ([2.0 * nx as f64 / 3.0 + jitter(rng), ny as f64 / 2.0 + jitter(rng), -1.5], [0.0, 0.0, 1.0]),
    ];
    let n = grid.len();
    let mut tensors = Vec::with_capacity(n);
    let mut largest = 0.0f64;
    for i in 0..n {
        let p = grid.coords(i).map(|v| v as f64);
        let mut s = [[0.0; 3]; 3];
        for (src, force) in &loads {
            let r = [p[0] - src[0], p[1] - src[1], p[2] - src[2]];
            let t = point_load_stress(r, *force, 0.3);
            for a in 0..3 {
                for b in 0..3 {
                    s[a][b] += t[a][b];
                }
            }
        }
        let frob = s.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
        largest = largest.max(frob);
        tensors.push(s);
    }
    let noise = Normal::new(0.0, params.noise.unwrap_or(0.0)).expect("validated noise");
    let names = ["xx", "yy", "zz", "xy", "xz", "yz"];
    let slots = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];
    let mut channels: Vec<Vec<f64>> = (0..6).map(|_| Vec::with_capacity(n)).collect();
    for s in &tensors {
        for (k, &(a, b)) in slots.iter().enumerate() {
            let shift = if a == b { 1.5 } else { 0.0 };
            channels[k].push(s[a][b] / largest + shift + noise.sample(rng));
        }
    }
    Ok(MultiField::new(
        grid,
        channels.into_iter().zip(names).map(|(v, name)| Channel::raw(name, v)).collect(),
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_data() {
        for kind in FixtureKind::ALL {
            let p = FixtureParams {
                dims: Some(if kind == FixtureKind::CrossingStripes2d { [16, 16, 1] } else { [10, 8, 6] }),
                ..FixtureParams::default()
            };
            let a = generate_fixture(kind, &p, 4).unwrap();
            assert_eq!(a, generate_fixture(kind, &p, 4).unwrap());
            if kind != FixtureKind::TensorBlock {
                assert_ne!(a, generate_fixture(kind, &p, 5).unwrap());
            }
        }
    }

    #[test]
    fn invalid_parameters() {
        let bad_nz = FixtureParams { dims: Some([16, 16, 2]), ..FixtureParams::default() };
        assert!(generate_fixture(FixtureKind::CrossingStripes2d, &bad_nz, 0).is_err());
        let bad_noise = FixtureParams { noise: Some(-1.0), ..FixtureParams::default() };
        assert!(generate_fixture(FixtureKind::TwoBlob3d, &bad_noise, 0).is_err());
        let wide = FixtureParams { sigma: Some(20.0), ..FixtureParams::default() };
        assert!(generate_fixture(FixtureKind::TwoBlob3d, &wide, 0).is_err());
    }

    #[test]
    fn kelvin_kernel_is_symmetric_with_known_trace() {
        let s = point_load_stress([0.3, -0.7, 1.1], [0.0, 0.0, 1.0], 0.3);
        for (a, row) in s.iter().enumerate() {
            for (b, &v) in row.iter().enumerate() {
                assert!((v - s[b][a]).abs() < 1e-15);
            }
        }
        // trace of the Kelvin stress is -(1+nu)/(4 pi (1-nu)) (f.r)/|r|^3
        let r = [0.3f64, -0.7, 1.1];
        let len = (r.iter().map(|v| v * v).sum::<f64>()).sqrt();
        let expected = -(1.3) / (4.0 * PI * 0.7) * r[2] / len.powi(3);
        assert!((s[0][0] + s[1][1] + s[2][2] - expected).abs() < 1e-12);
    }
}
