use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::kinematics::{polar_rotation, RestShape};
use crate::error::{Error, Result};
use crate::geom::{Mat3, Vec3};
use crate::mesh::VolumetricMesh;

/// Regularizer weights. Defaults follow the published setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyWeights {
    pub lambda0: f64,
    pub lambda1_aniso: f64,
    pub lambda3_normal: f64,
    pub lambda4_laplacian: f64,
    pub lambda5_edge: f64,
}

impl Default for EnergyWeights {
    fn default() -> Self {
        Self {
            lambda0: 1.0,
            lambda1_aniso: 10.0,
            lambda3_normal: 10.0,
            lambda4_laplacian: 1.0,
            lambda5_edge: 0.01,
        }
    }
}

impl EnergyWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.lambda0,
            self.lambda1_aniso,
            self.lambda3_normal,
            self.lambda4_laplacian,
            self.lambda5_edge,
        ];
        if all.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::Config(format!("energy weights must be finite and >= 0: {self:?}")));
        }
        Ok(())
    }
}

/// Thickness stretch below which the anisotropic gradient is clamped.
const MIN_STRETCH: f64 = 1e-8;

/// Strain energy with the rest shape and thickness directions frozen.
#[derive(Debug, Clone)]
pub struct StrainEnergy {
    cells: Vec<RestShape>,
    dirs: Option<Vec<Vec3>>,
    lambda0: f64,
    lambda1: f64,
    n_vertices: usize,
}

impl StrainEnergy {
    /// `dirs = None` disables the anisotropic term.
    pub fn new(rest: &VolumetricMesh, dirs: Option<&[Vec3]>, weights: &EnergyWeights) -> Result<Self> {
        weights.validate()?;
        if let Some(d) = dirs {
            if d.len() != rest.cells.len() {
                return Err(Error::Config(format!(
                    "{} thickness directions for {} cells",
                    d.len(),
                    rest.cells.len()
                )));
            }
        }
        let cells = (0..rest.cells.len())
            .map(|c| RestShape::new(rest, c))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            cells,
            dirs: dirs.map(|d| d.to_vec()),
            lambda0: weights.lambda0,
            lambda1: weights.lambda1_aniso,
            n_vertices: rest.vertices.len(),
        })
    }

    fn cell_term(&self, c: usize, deformed: &[Vec3]) -> (f64, Mat3) {
        let f = self.cells[c].gradient(deformed);
        let (r, _) = polar_rotation(&f);
        let diff = f - r;
        let mut e = diff.norm_squared();
        let mut p = diff * 2.0;
        if let Some(dirs) = &self.dirs {
            let d = dirs[c];
            let fd = f * d;
            let s = fd.norm();
            e += self.lambda1 * (s - 1.0).powi(2);
            p += (fd * d.transpose()) * (2.0 * self.lambda1 * (s - 1.0) / s.max(MIN_STRETCH));
        }
        (e, p)
    }

    pub fn value(&self, deformed: &[Vec3]) -> f64 {
        let per: Vec<f64> = (0..self.cells.len())
            .into_par_iter()
            .map(|c| self.cell_term(c, deformed).0)
            .collect();
        self.lambda0 * per.iter().sum::<f64>() / self.cells.len() as f64
    }

    /// Energy and its gradient w.r.t. deformed vertex positions. Per-cell
    /// terms run in parallel; the reduction order is fixed.
    pub fn evaluate(&self, deformed: &[Vec3]) -> (f64, Vec<Vec3>) {
        assert_eq!(deformed.len(), self.n_vertices);
        let per: Vec<(f64, Mat3)> = (0..self.cells.len())
            .into_par_iter()
            .map(|c| self.cell_term(c, deformed))
            .collect();
        let scale = self.lambda0 / self.cells.len() as f64;
        let mut total = 0.0;
        let mut grad = vec![Vec3::zeros(); self.n_vertices];
        let mut buf = Vec::with_capacity(8);
        for (cell, (e, p)) in self.cells.iter().zip(&per) {
            total += e;
            buf.clear();
            cell.scatter(&(p * scale), &mut buf);
            for (n, g) in &buf {
                grad[*n] += g;
            }
        }
        (total * scale, grad)
    }
}

/// `lambda0/|C| * sum_c [ |F - R|^2 + lambda1 (|F d| - 1)^2 ]` and its gradient.
pub fn strain_energy(
    rest: &VolumetricMesh,
    deformed: &[Vec3],
    dirs: Option<&[Vec3]>,
    weights: &EnergyWeights,
) -> Result<(f64, Vec<Vec3>)> {
    Ok(StrainEnergy::new(rest, dirs, weights)?.evaluate(deformed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::rotation;
    use crate::mesh::thickness_directions;
    use crate::scene::primitives::{hex_block, slab};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rigid_motion_is_free() {
        let m = slab([3, 2, 2], Vec3::new(1.0, 1.5, 0.5));
        let d = thickness_directions(&m).unwrap();
        let q = rotation(&Vec3::new(1.0, -2.0, 0.5), 2.3);
        let moved: Vec<Vec3> = m.vertices.iter().map(|v| q * v + Vec3::new(3.0, -1.0, 7.0)).collect();
        let (e, g) = strain_energy(&m, &moved, Some(&d), &EnergyWeights::default()).unwrap();
        assert!(e <= 1e-12);
        assert!(g.iter().all(|v| v.norm() < 1e-6));
    }

    #[test]
    fn stretch_along_thickness() {
        let m = hex_block([1, 1, 1], Vec3::repeat(1.0), Vec3::zeros());
        let d = vec![Vec3::x()];
        let s = Mat3::from_diagonal(&Vec3::new(2.0, 1.0, 1.0));
        let moved: Vec<Vec3> = m.vertices.iter().map(|v| s * v).collect();
        let (e, _) = strain_energy(&m, &moved, Some(&d), &EnergyWeights::default()).unwrap();
        assert!((e - 11.0).abs() < 1e-12);
        let (iso, _) = strain_energy(&m, &moved, None, &EnergyWeights::default()).unwrap();
        assert!((iso - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = slab([2, 2, 2], Vec3::new(1.0, 1.2, 0.7));
        let d = thickness_directions(&m).unwrap();
        let model = StrainEnergy::new(&m, Some(&d), &EnergyWeights::default()).unwrap();
        let x: Vec<Vec3> = m
            .vertices
            .iter()
            .map(|v| v + Vec3::new(rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1)))
            .collect();
        let (_, g) = model.evaluate(&x);
        let h = 1e-5;
        let (mut num, mut den) = (0.0, 0.0);
        for n in 0..x.len() {
            for a in 0..3 {
                let mut xp = x.clone();
                xp[n][a] += h;
                let mut xm = x.clone();
                xm[n][a] -= h;
                let fd = (model.value(&xp) - model.value(&xm)) / (2.0 * h);
                num += (fd - g[n][a]).powi(2);
                den += fd * fd;
            }
        }
        assert!((num / den).sqrt() < 1e-5);
    }

    #[test]
    fn collapsed_thickness_stays_finite() {
        let m = hex_block([1, 1, 1], Vec3::repeat(1.0), Vec3::zeros());
        let flat: Vec<Vec3> = m.vertices.iter().map(|v| Vec3::new(v.x, v.y, 0.0)).collect();
        let (e, g) = strain_energy(&m, &flat, Some(&[Vec3::z()]), &EnergyWeights::default()).unwrap();
        assert!(e.is_finite() && g.iter().all(|v| v.iter().all(|c| c.is_finite())));
    }

    #[test]
    fn rejects_negative_weight() {
        let m = hex_block([1, 1, 1], Vec3::repeat(1.0), Vec3::zeros());
        let w = EnergyWeights {
            lambda0: -1.0,
            ..Default::default()
        };
        assert!(strain_energy(&m, &m.vertices, None, &w).is_err());
    }
}
