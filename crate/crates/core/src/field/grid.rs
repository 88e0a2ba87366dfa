use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Aabb, Vec3};

/// Regular node lattice: node `(i, j, k)` sits at `origin + (i, j, k) * spacing`
/// and has linear index `i + nx * (j + ny * k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub origin: Vec3,
    pub spacing: Vec3,
    pub dims: [usize; 3],
}

impl Lattice {
    pub fn new(origin: Vec3, spacing: Vec3, dims: [usize; 3]) -> Result<Self> {
        if (0..3).any(|a| !(spacing[a] > 0.0) || !spacing[a].is_finite()) {
            return Err(Error::Config(format!("lattice spacing must be positive, got {spacing:?}")));
        }
        if dims.contains(&0) {
            return Err(Error::Config(format!("lattice dims must be nonzero, got {dims:?}")));
        }
        Ok(Self { origin, spacing, dims })
    }

    /// Isotropic lattice whose node range covers `bbox` grown by `margin`.
    pub fn covering(bbox: &Aabb, spacing: f64, margin: f64) -> Result<Self> {
        if bbox.is_empty() {
            return Err(Error::Config("cannot build a lattice over an empty box".into()));
        }
        let b = bbox.padded(margin);
        let ext = b.extent();
        let dims = [0, 1, 2].map(|a| (ext[a] / spacing - 1e-9).ceil().max(1.0) as usize + 1);
        Self::new(b.min, Vec3::repeat(spacing), dims)
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn coords(&self, n: usize) -> [usize; 3] {
        let i = n % self.dims[0];
        let r = n / self.dims[0];
        [i, r % self.dims[1], r / self.dims[1]]
    }

    #[inline]
    pub fn position(&self, n: usize) -> Vec3 {
        let c = self.coords(n);
        self.origin + Vec3::new(c[0] as f64, c[1] as f64, c[2] as f64).component_mul(&self.spacing)
    }

    /// Continuous index coordinates of a world point.
    #[inline]
    pub fn to_index(&self, p: &Vec3) -> Vec3 {
        (p - self.origin).component_div(&self.spacing)
    }

    pub fn max_corner(&self) -> Vec3 {
        self.origin
            + Vec3::new(
                (self.dims[0] - 1) as f64,
                (self.dims[1] - 1) as f64,
                (self.dims[2] - 1) as f64,
            )
            .component_mul(&self.spacing)
    }

    pub fn bounds(&self) -> Aabb {
        Aabb {
            min: self.origin,
            max: self.max_corner(),
        }
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing.min()
    }
}

/// Sparse lattice of control velocities (mm) interpolated by cubic b-splines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlGrid {
    pub lattice: Lattice,
    pub velocities: Vec<Vec3>,
}

impl ControlGrid {
    pub fn zeros(lattice: Lattice) -> Result<Self> {
        if lattice.dims.iter().any(|&d| d < 4) {
            return Err(Error::Config(format!(
                "control grid needs at least 4 nodes per axis, got {:?}",
                lattice.dims
            )));
        }
        Ok(Self {
            velocities: vec![Vec3::zeros(); lattice.len()],
            lattice,
        })
    }

    /// Grid whose b-spline support covers `bbox` with one spacing of margin
    /// on every side.
    pub fn covering(bbox: &Aabb, spacing: f64) -> Result<Self> {
        if bbox.is_empty() || !(spacing > 0.0) {
            return Err(Error::Config("control grid needs a nonempty box and positive spacing".into()));
        }
        let ext = bbox.extent();
        let dims = [0, 1, 2].map(|a| (ext[a] / spacing - 1e-9).ceil().max(1.0) as usize + 3);
        let lattice = Lattice::new(bbox.min - Vec3::repeat(spacing), Vec3::repeat(spacing), dims)?;
        Self::zeros(lattice)
    }

    pub fn from_velocities(lattice: Lattice, velocities: Vec<Vec3>) -> Result<Self> {
        let mut g = Self::zeros(lattice)?;
        if velocities.len() != g.velocities.len() {
            return Err(Error::Config(format!(
                "expected {} control velocities, got {}",
                g.velocities.len(),
                velocities.len()
            )));
        }
        g.velocities = velocities;
        Ok(g)
    }

    /// Region where every point has a full 4x4x4 control support.
    pub fn support(&self) -> Aabb {
        let h = self.lattice.spacing;
        Aabb {
            min: self.lattice.origin + h,
            max: self.lattice.max_corner() - h,
        }
    }

    pub fn max_speed(&self) -> f64 {
        self.velocities.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Dense lattice of 3D vectors (velocities or displacements, mm).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseField {
    pub lattice: Lattice,
    pub vectors: Vec<Vec3>,
}

impl DenseField {
    pub fn zeros(lattice: Lattice) -> Self {
        Self {
            vectors: vec![Vec3::zeros(); lattice.len()],
            lattice,
        }
    }

    pub fn from_fn(lattice: Lattice, f: impl Fn(&Vec3) -> Vec3) -> Self {
        Self {
            vectors: (0..lattice.len()).map(|n| f(&lattice.position(n))).collect(),
            lattice,
        }
    }

    pub fn max_norm(&self) -> f64 {
        self.vectors.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Central-difference Jacobian determinant of `x -> x + u(x)` at every
    /// interior node, as `(node, det)`.
    pub fn jacobian_determinants(&self) -> Vec<(usize, f64)> {
        let l = &self.lattice;
        let [nx, ny, nz] = l.dims;
        let mut out = Vec::new();
        if nx < 3 || ny < 3 || nz < 3 {
            return out;
        }
        let strides = [1, nx, nx * ny];
        for k in 1..nz - 1 {
            for j in 1..ny - 1 {
                for i in 1..nx - 1 {
                    let n = l.index(i, j, k);
                    let mut jac = crate::geom::Mat3::identity();
                    for a in 0..3 {
                        let d = (self.vectors[n + strides[a]] - self.vectors[n - strides[a]])
                            / (2.0 * l.spacing[a]);
                        for r in 0..3 {
                            jac[(r, a)] += d[r];
                        }
                    }
                    out.push((n, jac.determinant()));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_roundtrip() {
        let l = Lattice::new(Vec3::new(1.0, 2.0, 3.0), Vec3::new(0.5, 1.0, 2.0), [4, 3, 5]).unwrap();
        for n in 0..l.len() {
            let [i, j, k] = l.coords(n);
            assert_eq!(l.index(i, j, k), n);
            let p = l.position(n);
            let t = l.to_index(&p);
            assert!((t - Vec3::new(i as f64, j as f64, k as f64)).norm() < 1e-12);
        }
    }

    #[test]
    fn covering_contains_box() {
        let b = Aabb {
            min: Vec3::new(-3.0, 0.0, 1.0),
            max: Vec3::new(7.3, 2.0, 1.0),
        };
        let l = Lattice::covering(&b, 1.25, 2.0).unwrap();
        assert!(l.origin.x <= -5.0 && l.max_corner().x >= 9.3);
        let g = ControlGrid::covering(&b, 4.0).unwrap();
        let s = g.support();
        assert!((0..3).all(|a| s.min[a] <= b.min[a] && s.max[a] >= b.max[a]));
        assert!(g.lattice.dims.iter().all(|&d| d >= 4));
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(Lattice::new(Vec3::zeros(), Vec3::new(1.0, 0.0, 1.0), [2, 2, 2]).is_err());
        let l = Lattice::new(Vec3::zeros(), Vec3::repeat(1.0), [3, 4, 4]).unwrap();
        assert!(ControlGrid::zeros(l).is_err());
    }

    #[test]
    fn identity_map_has_unit_jacobian() {
        let l = Lattice::new(Vec3::zeros(), Vec3::repeat(1.0), [4, 4, 4]).unwrap();
        let f = DenseField::zeros(l);
        let dets = f.jacobian_determinants();
        assert_eq!(dets.len(), 8);
        assert!(dets.iter().all(|&(_, d)| (d - 1.0).abs() < 1e-15));
    }
}
