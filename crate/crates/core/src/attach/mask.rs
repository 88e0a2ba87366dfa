use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec3;

/// Binary voxel occupancy; voxel `(i, j, k)` is centered at
/// `origin + (i, j, k) * spacing` and stored x-fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoxelMask {
    pub dims: [usize; 3],
    pub spacing: Vec3,
    pub origin: Vec3,
    pub values: Vec<bool>,
}

impl VoxelMask {
    pub fn new(dims: [usize; 3], spacing: Vec3, origin: Vec3, values: Vec<bool>) -> Result<Self> {
        let n: usize = dims.iter().product();
        if values.len() != n {
            return Err(Error::Config(format!("mask has {} values for dims {dims:?}", values.len())));
        }
        if (0..3).any(|a| !(spacing[a] > 0.0)) {
            return Err(Error::Config(format!("mask spacing must be positive, got {spacing:?}")));
        }
        Ok(Self {
            dims,
            spacing,
            origin,
            values,
        })
    }

    pub fn empty(dims: [usize; 3], spacing: Vec3, origin: Vec3) -> Self {
        Self {
            values: vec![false; dims.iter().product()],
            dims,
            spacing,
            origin,
        }
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> bool {
        self.values[self.index(i, j, k)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, v: bool) {
        let n = self.index(i, j, k);
        self.values[n] = v;
    }

    pub fn center(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.origin + Vec3::new(i as f64, j as f64, k as f64).component_mul(&self.spacing)
    }

    pub fn count(&self) -> usize {
        self.values.iter().filter(|&&v| v).count()
    }

    /// Marks every voxel whose center satisfies `inside`.
    pub fn fill(&mut self, inside: impl Fn(&Vec3) -> bool) {
        for k in 0..self.dims[2] {
            for j in 0..self.dims[1] {
                for i in 0..self.dims[0] {
                    if inside(&self.center(i, j, k)) {
                        self.set(i, j, k, true);
                    }
                }
            }
        }
    }
}
