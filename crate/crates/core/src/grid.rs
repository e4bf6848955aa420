//! Structured grids and their vertex neighborhood graphs.
//!
//! Vertices are stored x-fastest: `index = x + nx * (y + ny * z)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid dimension {axis} must be positive")]
    EmptyAxis { axis: usize },
    #[error("grid spacing on axis {axis} must be positive and finite, got {value}")]
    BadSpacing { axis: usize, value: f64 },
    #[error("connectivity {0:?} requires a 2D grid (nz = 1)")]
    PlanarConnectivityOn3d(Connectivity),
}

/// Vertex adjacency used by every topological computation on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Connectivity {
    /// 3D face neighbors.
    Face6,
    /// 3D face, edge and corner neighbors.
    Vertex26,
    /// 2D edge neighbors.
    Edge4,
    /// 2D edge and corner neighbors.
    Vertex8,
}

impl Connectivity {
    pub fn as_str(self) -> &'static str {
        match self {
            Connectivity::Face6 => "face6",
            Connectivity::Vertex26 => "vertex26",
            Connectivity::Edge4 => "edge4",
            Connectivity::Vertex8 => "vertex8",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "face6" => Some(Connectivity::Face6),
            "vertex26" => Some(Connectivity::Vertex26),
            "edge4" => Some(Connectivity::Edge4),
            "vertex8" => Some(Connectivity::Vertex8),
            _ => None,
        }
    }

    /// The minimal connectivity for a grid of the given depth.
    pub fn default_for(nz: usize) -> Self {
        if nz == 1 {
            Connectivity::Edge4
        } else {
            Connectivity::Face6
        }
    }

    fn offsets(self) -> &'static [[i64; 3]] {
        match self {
            Connectivity::Face6 => &FACE6,
            Connectivity::Edge4 => &EDGE4,
            Connectivity::Vertex8 => &VERTEX8,
            Connectivity::Vertex26 => &VERTEX26,
        }
    }
}

const FACE6: [[i64; 3]; 6] = [
    [-1, 0, 0],
    [1, 0, 0],
    [0, -1, 0],
    [0, 1, 0],
    [0, 0, -1],
    [0, 0, 1],
];

const EDGE4: [[i64; 3]; 4] = [[-1, 0, 0], [1, 0, 0], [0, -1, 0], [0, 1, 0]];

const VERTEX8: [[i64; 3]; 8] = [
    [-1, -1, 0],
    [0, -1, 0],
    [1, -1, 0],
    [-1, 0, 0],
    [1, 0, 0],
    [-1, 1, 0],
    [0, 1, 0],
    [1, 1, 0],
];

const VERTEX26: [[i64; 3]; 26] = {
    let mut out = [[0i64; 3]; 26];
    let mut n = 0;
    let mut dz = -1;
    while dz <= 1 {
        let mut dy = -1;
        while dy <= 1 {
            let mut dx = -1;
            while dx <= 1 {
                if !(dx == 0 && dy == 0 && dz == 0) {
                    out[n] = [dx, dy, dz];
                    n += 1;
                }
                dx += 1;
            }
            dy += 1;
        }
        dz += 1;
    }
    out
};

/// Vertex counts, cell sizes and neighborhood of a structured grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub connectivity: Connectivity,
}

impl GridSpec {
    pub fn new(
        dims: [usize; 3],
        spacing: [f64; 3],
        connectivity: Connectivity,
    ) -> Result<Self, GridError> {
        let grid = GridSpec {
            dims,
            spacing,
            connectivity,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Unit spacing and the default connectivity for the grid depth.
    pub fn with_dims(nx: usize, ny: usize, nz: usize) -> Result<Self, GridError> {
        Self::new([nx, ny, nz], [1.0; 3], Connectivity::default_for(nz))
    }

    pub fn validate(&self) -> Result<(), GridError> {
        for axis in 0..3 {
            if self.dims[axis] == 0 {
                return Err(GridError::EmptyAxis { axis });
            }
            let h = self.spacing[axis];
            if !(h.is_finite() && h > 0.0) {
                return Err(GridError::BadSpacing { axis, value: h });
            }
        }
        if matches!(self.connectivity, Connectivity::Edge4 | Connectivity::Vertex8)
            && self.dims[2] != 1
        {
            return Err(GridError::PlanarConnectivityOn3d(self.connectivity));
        }
        Ok(())
    }

    pub fn with_connectivity(mut self, connectivity: Connectivity) -> Result<Self, GridError> {
        self.connectivity = connectivity;
        self.validate()?;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    pub fn coords(&self, index: usize) -> [usize; 3] {
        let nx = self.dims[0];
        let ny = self.dims[1];
        [index % nx, (index / nx) % ny, index / (nx * ny)]
    }

    /// Calls `f` for every neighbor of `index` under the grid connectivity.
    #[inline]
    pub fn for_each_neighbor(&self, index: usize, mut f: impl FnMut(usize)) {
        let [x, y, z] = self.coords(index);
        let (x, y, z) = (x as i64, y as i64, z as i64);
        let [nx, ny, nz] = self.dims.map(|d| d as i64);
        for d in self.connectivity.offsets() {
            let (a, b, c) = (x + d[0], y + d[1], z + d[2]);
            if a >= 0 && a < nx && b >= 0 && b < ny && c >= 0 && c < nz {
                f((a + nx * (b + ny * c)) as usize);
            }
        }
    }

    pub fn neighbors(&self, index: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(26);
        self.for_each_neighbor(index, |n| out.push(n));
        out
    }

    /// Vertex indices of the slice `index` orthogonal to `axis`, in row-major
    /// order (the lower of the two remaining axes varies fastest).
    pub fn slice_indices(&self, axis: usize, index: usize) -> Option<(Vec<usize>, [usize; 2])> {
        if axis > 2 || index >= self.dims[axis] {
            return None;
        }
        let (u, v) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let (nu, nv) = (self.dims[u], self.dims[v]);
        let mut out = Vec::with_capacity(nu * nv);
        for j in 0..nv {
            for i in 0..nu {
                let mut c = [0usize; 3];
                c[axis] = index;
                c[u] = i;
                c[v] = j;
                out.push(self.index(c[0], c[1], c[2]));
            }
        }
        Some((out, [nv, nu]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neighbor_counts_interior_and_corner() {
        let g = GridSpec::new([4, 4, 4], [1.0; 3], Connectivity::Face6).unwrap();
        assert_eq!(g.neighbors(g.index(1, 1, 1)).len(), 6);
        assert_eq!(g.neighbors(0).len(), 3);
        let g = g.with_connectivity(Connectivity::Vertex26).unwrap();
        assert_eq!(g.neighbors(g.index(1, 1, 1)).len(), 26);
        assert_eq!(g.neighbors(0).len(), 7);
        let p = GridSpec::new([3, 3, 1], [1.0; 3], Connectivity::Vertex8).unwrap();
        assert_eq!(p.neighbors(4).len(), 8);
    }

    #[test]
    fn neighbor_relation_is_symmetric() {
        for conn in [Connectivity::Face6, Connectivity::Vertex26] {
            let g = GridSpec::new([3, 4, 5], [1.0; 3], conn).unwrap();
            for v in 0..g.len() {
                for n in g.neighbors(v) {
                    assert!(g.neighbors(n).contains(&v));
                }
            }
        }
    }

    #[test]
    fn rejects_invalid_grids() {
        assert!(GridSpec::new([0, 1, 1], [1.0; 3], Connectivity::Face6).is_err());
        assert!(GridSpec::new([2, 2, 2], [1.0, 0.0, 1.0], Connectivity::Face6).is_err());
        assert!(GridSpec::new([2, 2, 2], [1.0; 3], Connectivity::Edge4).is_err());
    }

    #[test]
    fn z_slice_is_x_fastest() {
        let g = GridSpec::with_dims(3, 2, 2).unwrap();
        let (idx, shape) = g.slice_indices(2, 1).unwrap();
        assert_eq!(shape, [2, 3]);
        assert_eq!(idx, vec![6, 7, 8, 9, 10, 11]);
    }
}
