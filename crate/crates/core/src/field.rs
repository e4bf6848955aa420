//! Multi-field data on a structured grid and attribute-space assembly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{GridError, GridSpec};
use crate::tensor::{max_shear, sym3_eigenvalues, westin_measures, Sym3Tensor};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("unknown channel `{0}`")]
    UnknownChannel(String),
    #[error("duplicate channel name `{0}`")]
    DuplicateChannel(String),
    #[error("channel `{name}` has {got} values, grid has {expected} vertices")]
    LengthMismatch {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("channel `{name}` has a non-finite value at vertex {index}")]
    NonFinite { name: String, index: usize },
    #[error("channel `{0}` is degenerate (zero spread) under the requested scaling")]
    DegenerateChannel(String),
    #[error("{kind:?} expects {expected} input channels, got {got}")]
    Arity {
        kind: DerivedKind,
        expected: usize,
        got: usize,
    },
    #[error("{kind:?} is undefined at {} vertices (first: {:?})", .vertices.len(), .vertices.first())]
    Undefined {
        kind: DerivedKind,
        vertices: Vec<usize>,
    },
    #[error("selection must name at least one channel")]
    EmptySelection,
    #[error("multi-field needs at least one channel")]
    NoChannels,
}

/// Per-channel rescaling applied while assembling an attribute space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scaling {
    None,
    MinMax,
    ZScore,
}

impl Scaling {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "none" => Some(Scaling::None),
            "minmax" => Some(Scaling::MinMax),
            "zscore" => Some(Scaling::ZScore),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivedKind {
    Eig1,
    Eig2,
    Eig3,
    CL,
    CP,
    CS,
    MaxShear,
    VecMagnitude,
}

impl DerivedKind {
    pub const ALL: [DerivedKind; 8] = [
        DerivedKind::Eig1,
        DerivedKind::Eig2,
        DerivedKind::Eig3,
        DerivedKind::CL,
        DerivedKind::CP,
        DerivedKind::CS,
        DerivedKind::MaxShear,
        DerivedKind::VecMagnitude,
    ];

    /// Default output channel name.
    pub fn as_str(self) -> &'static str {
        match self {
            DerivedKind::Eig1 => "eig1",
            DerivedKind::Eig2 => "eig2",
            DerivedKind::Eig3 => "eig3",
            DerivedKind::CL => "c_l",
            DerivedKind::CP => "c_p",
            DerivedKind::CS => "c_s",
            DerivedKind::MaxShear => "max_shear",
            DerivedKind::VecMagnitude => "vec_magnitude",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }

    pub fn arity(self) -> usize {
        match self {
            DerivedKind::VecMagnitude => 3,
            _ => 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "snake_case")]
pub enum Provenance {
    Raw,
    Derived { kind: DerivedKind },
    Normalized { method: Scaling },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub name: String,
    pub unit: Option<String>,
    pub values: Vec<f64>,
    pub provenance: Provenance,
}

impl Channel {
    pub fn raw(name: impl Into<String>, values: Vec<f64>) -> Self {
        Channel {
            name: name.into(),
            unit: None,
            values,
            provenance: Provenance::Raw,
        }
    }

    pub fn range(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

/// A grid carrying `M` named scalar channels of `N` finite values each.
///
/// Column `i` of the attribute matrix is the attribute vector `f(x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiField {
    grid: GridSpec,
    channels: Vec<Channel>,
}

impl MultiField {
    pub fn new(grid: GridSpec, channels: Vec<Channel>) -> Result<Self, FieldError> {
        grid.validate()?;
        if channels.is_empty() {
            return Err(FieldError::NoChannels);
        }
        let n = grid.len();
        for (k, ch) in channels.iter().enumerate() {
            if channels[..k].iter().any(|c| c.name == ch.name) {
                return Err(FieldError::DuplicateChannel(ch.name.clone()));
            }
            if ch.values.len() != n {
                return Err(FieldError::LengthMismatch {
                    name: ch.name.clone(),
                    expected: n,
                    got: ch.values.len(),
                });
            }
            if let Some(index) = ch.values.iter().position(|v| !v.is_finite()) {
                return Err(FieldError::NonFinite {
                    name: ch.name.clone(),
                    index,
                });
            }
        }
        Ok(MultiField { grid, channels })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.channels.len()
    }

    pub fn channel_names(&self) -> Vec<&str> {
        self.channels.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn channel_index(&self, name: &str) -> Option<usize> {
        self.channels.iter().position(|c| c.name == name)
    }

    pub fn channel(&self, name: &str) -> Result<&Channel, FieldError> {
        self.channel_index(name)
            .map(|i| &self.channels[i])
            .ok_or_else(|| FieldError::UnknownChannel(name.to_string()))
    }

    pub fn resolve(&self, names: &[impl AsRef<str>]) -> Result<Vec<usize>, FieldError> {
        names
            .iter()
            .map(|n| {
                self.channel_index(n.as_ref())
                    .ok_or_else(|| FieldError::UnknownChannel(n.as_ref().to_string()))
            })
            .collect()
    }

    /// The full attribute vector at vertex `i`.
    pub fn attribute_vector(&self, i: usize) -> Vec<f64> {
        self.channels.iter().map(|c| c.values[i]).collect()
    }

    /// Writes the values of the given channels at vertex `i` into `out`.
    #[inline]
    pub fn gather(&self, channels: &[usize], i: usize, out: &mut [f64]) {
        for (slot, &c) in out.iter_mut().zip(channels) {
            *slot = self.channels[c].values[i];
        }
    }

    /// `M x N` attribute matrix, column `i` is `f(x_i)`.
    pub fn attribute_matrix(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.dimension(), self.len(), |r, c| {
            self.channels[r].values[c]
        })
    }

    pub fn with_connectivity(
        mut self,
        connectivity: crate::grid::Connectivity,
    ) -> Result<Self, FieldError> {
        self.grid = self.grid.with_connectivity(connectivity)?;
        Ok(self)
    }

    pub fn push_channel(&mut self, channel: Channel) -> Result<(), FieldError> {
        let mut channels = std::mem::take(&mut self.channels);
        channels.push(channel);
        match MultiField::new(self.grid, channels) {
            Ok(mf) => {
                *self = mf;
                Ok(())
            }
            Err(e) => Err(e),
        }
    }

    pub fn into_channels(self) -> Vec<Channel> {
        self.channels
    }
}

/// Selects channels in the given order and rescales each one.
///
/// `scaling` is either empty (no rescaling), a single entry applied to every
/// channel, or one entry per selected channel.
pub fn assemble_attribute_space(
    mf: &MultiField,
    selection: &[impl AsRef<str>],
    scaling: &[Scaling],
) -> Result<MultiField, FieldError> {
    if selection.is_empty() {
        return Err(FieldError::EmptySelection);
    }
    let indices = mf.resolve(selection)?;
    let mut channels = Vec::with_capacity(indices.len());
    for (k, &ci) in indices.iter().enumerate() {
        let src = &mf.channels[ci];
        let method = match scaling.len() {
            0 => Scaling::None,
            1 => scaling[0],
            _ => *scaling.get(k).unwrap_or(&Scaling::None),
        };
        let mut ch = src.clone();
        match method {
            Scaling::None => {}
            Scaling::MinMax => {
                let (lo, hi) = src.range();
                if hi <= lo {
                    return Err(FieldError::DegenerateChannel(src.name.clone()));
                }
                let span = hi - lo;
                ch.values = src.values.iter().map(|v| (v - lo) / span).collect();
                ch.provenance = Provenance::Normalized { method };
            }
            Scaling::ZScore => {
                let n = src.values.len();
                if n < 2 {
                    return Err(FieldError::DegenerateChannel(src.name.clone()));
                }
                let mean = src.values.iter().sum::<f64>() / n as f64;
                let var = src.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
                    / (n as f64 - 1.0);
                let sd = var.sqrt();
                if !(sd > 0.0) {
                    return Err(FieldError::DegenerateChannel(src.name.clone()));
                }
                ch.values = src.values.iter().map(|v| (v - mean) / sd).collect();
                ch.provenance = Provenance::Normalized { method };
            }
        }
        channels.push(ch);
    }
    MultiField::new(mf.grid, channels)
}

fn tensor_at(mf: &MultiField, idx: &[usize], i: usize) -> Sym3Tensor {
    let v = |k: usize| mf.channels[idx[k]].values[i];
    Sym3Tensor::new(v(0), v(1), v(2), v(3), v(4), v(5))
}

/// Evaluates one derived quantity at a vertex.
fn derive_at(mf: &MultiField, kind: DerivedKind, idx: &[usize], i: usize) -> Option<f64> {
    if kind == DerivedKind::VecMagnitude {
        let v = |k: usize| mf.channels[idx[k]].values[i];
        return Some((v(0) * v(0) + v(1) * v(1) + v(2) * v(2)).sqrt());
    }
    let e = sym3_eigenvalues(&tensor_at(mf, idx, i)).ok()?;
    let w = || westin_measures(&e).ok();
    match kind {
        DerivedKind::Eig1 => Some(e.l1),
        DerivedKind::Eig2 => Some(e.l2),
        DerivedKind::Eig3 => Some(e.l3),
        DerivedKind::CL => w().map(|w| w.c_l),
        DerivedKind::CP => w().map(|w| w.c_p),
        DerivedKind::CS => w().map(|w| w.c_s),
        DerivedKind::MaxShear => Some(max_shear(&e)),
        DerivedKind::VecMagnitude => unreachable!(),
    }
}

/// Appends a derived channel named after `kind`.
///
/// Tensor kinds take the six components in the order `xx, yy, zz, xy, xz, yz`;
/// `vec_magnitude` takes three vector components.
pub fn derive_channel(
    mf: &MultiField,
    kind: DerivedKind,
    inputs: &[impl AsRef<str>],
) -> Result<MultiField, FieldError> {
    derive_channel_named(mf, kind, inputs, kind.as_str())
}

pub fn derive_channel_named(
    mf: &MultiField,
    kind: DerivedKind,
    inputs: &[impl AsRef<str>],
    name: &str,
) -> Result<MultiField, FieldError> {
    if inputs.len() != kind.arity() {
        return Err(FieldError::Arity {
            kind,
            expected: kind.arity(),
            got: inputs.len(),
        });
    }
    let idx = mf.resolve(inputs)?;
    let computed: Vec<Option<f64>> = (0..mf.len())
        .into_par_iter()
        .map(|i| derive_at(mf, kind, &idx, i))
        .collect();
    let bad: Vec<usize> = computed
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.is_none().then_some(i))
        .collect();
    if !bad.is_empty() {
        return Err(FieldError::Undefined {
            kind,
            vertices: bad,
        });
    }
    let mut out = mf.clone();
    out.push_channel(Channel {
        name: name.to_string(),
        unit: None,
        values: computed.into_iter().map(Option::unwrap).collect(),
        provenance: Provenance::Derived { kind },
    })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(values: Vec<f64>) -> MultiField {
        let grid = GridSpec::with_dims(values.len(), 1, 1).unwrap();
        MultiField::new(grid, vec![Channel::raw("v", values)]).unwrap()
    }

    #[test]
    fn minmax_maps_endpoints() {
        let mf = line(vec![0.0, 5.0, 10.0]);
        let out = assemble_attribute_space(&mf, &["v"], &[Scaling::MinMax]).unwrap();
        assert_eq!(out.channels()[0].values, vec![0.0, 0.5, 1.0]);
        assert_eq!(
            out.channels()[0].provenance,
            Provenance::Normalized {
                method: Scaling::MinMax
            }
        );
    }

    #[test]
    fn no_scaling_is_bit_identical() {
        let vals = vec![0.1, -3.25, 7.0e-300, 1e300];
        let mf = line(vals.clone());
        let out = assemble_attribute_space(&mf, &["v"], &[Scaling::None]).unwrap();
        let a: Vec<u64> = out.channels()[0].values.iter().map(|v| v.to_bits()).collect();
        let b: Vec<u64> = vals.iter().map(|v| v.to_bits()).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn zscore_has_unit_sample_sd() {
        let mf = line(vec![1.0, 2.0, 3.0]);
        let out = assemble_attribute_space(&mf, &["v"], &[Scaling::ZScore]).unwrap();
        let v = &out.channels()[0].values;
        let mean = v.iter().sum::<f64>() / 3.0;
        let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 2.0).sqrt();
        assert!(mean.abs() < 1e-15);
        assert!((sd - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zscore_rejects_constant_channel() {
        let mf = line(vec![4.0; 5]);
        let err = assemble_attribute_space(&mf, &["v"], &[Scaling::ZScore]).unwrap_err();
        assert_eq!(err, FieldError::DegenerateChannel("v".into()));
    }

    #[test]
    fn unknown_channel_is_reported() {
        let mf = line(vec![1.0, 2.0]);
        let err = assemble_attribute_space(&mf, &["w"], &[]).unwrap_err();
        assert_eq!(err, FieldError::UnknownChannel("w".into()));
    }

    #[test]
    fn constructor_validates_channels() {
        let grid = GridSpec::with_dims(2, 1, 1).unwrap();
        assert!(matches!(
            MultiField::new(grid, vec![Channel::raw("a", vec![1.0])]),
            Err(FieldError::LengthMismatch { .. })
        ));
        assert!(matches!(
            MultiField::new(grid, vec![Channel::raw("a", vec![1.0, f64::NAN])]),
            Err(FieldError::NonFinite { index: 1, .. })
        ));
        assert!(matches!(
            MultiField::new(
                grid,
                vec![Channel::raw("a", vec![1.0; 2]), Channel::raw("a", vec![2.0; 2])]
            ),
            Err(FieldError::DuplicateChannel(_))
        ));
    }

    fn tensor_field(t: Sym3Tensor, n: usize) -> MultiField {
        let grid = GridSpec::with_dims(n, 1, 1).unwrap();
        let comps = [
            ("xx", t.xx),
            ("yy", t.yy),
            ("zz", t.zz),
            ("xy", t.xy),
            ("xz", t.xz),
            ("yz", t.yz),
        ];
        MultiField::new(
            grid,
            comps
                .iter()
                .map(|(n2, v)| Channel::raw(*n2, vec![*v; n]))
                .collect(),
        )
        .unwrap()
    }

    const T6: [&str; 6] = ["xx", "yy", "zz", "xy", "xz", "yz"];

    #[test]
    fn constant_tensor_gives_constant_westin() {
        let mf = tensor_field(Sym3Tensor::diagonal(3.0, 2.0, 1.0), 4);
        let out = derive_channel(&mf, DerivedKind::CL, &T6).unwrap();
        let ch = out.channel("c_l").unwrap();
        assert!(ch.values.iter().all(|v| (v - 1.0 / 6.0).abs() < 1e-15));
        assert_eq!(
            ch.provenance,
            Provenance::Derived {
                kind: DerivedKind::CL
            }
        );
    }

    #[test]
    fn vector_magnitude() {
        let grid = GridSpec::with_dims(3, 1, 1).unwrap();
        let mf = MultiField::new(
            grid,
            vec![
                Channel::raw("u", vec![3.0; 3]),
                Channel::raw("v", vec![4.0; 3]),
                Channel::raw("w", vec![0.0; 3]),
            ],
        )
        .unwrap();
        let out = derive_channel(&mf, DerivedKind::VecMagnitude, &["u", "v", "w"]).unwrap();
        assert_eq!(out.channel("vec_magnitude").unwrap().values, vec![5.0; 3]);
    }

    #[test]
    fn derive_reports_arity_and_degenerate_vertices() {
        let mf = tensor_field(Sym3Tensor::diagonal(1.0, 0.0, -1.0), 3);
        assert!(matches!(
            derive_channel(&mf, DerivedKind::CL, &["xx", "yy"]),
            Err(FieldError::Arity { .. })
        ));
        match derive_channel(&mf, DerivedKind::CS, &T6) {
            Err(FieldError::Undefined { vertices, .. }) => assert_eq!(vertices, vec![0, 1, 2]),
            other => panic!("unexpected {other:?}"),
        }
        // eigenvalues stay defined at zero trace
        assert!(derive_channel(&mf, DerivedKind::Eig1, &T6).is_ok());
    }
}
