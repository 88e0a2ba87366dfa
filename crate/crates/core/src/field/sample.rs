use crate::field::grid::{DenseField, Lattice};
use crate::field::svf::Trilinear;
use crate::geom::Vec3;

/// Fixed trilinear stencils for a set of sample positions.
#[derive(Debug, Clone)]
pub struct Sampler {
    stencils: Vec<Trilinear>,
    lattice: Lattice,
}

impl Sampler {
    /// Positions outside the lattice are clamped to its border with a warning.
    pub fn new(lattice: &Lattice, positions: &[Vec3]) -> Self {
        let stencils: Vec<Trilinear> = positions
            .iter()
            .map(|p| Trilinear::at(lattice, &lattice.to_index(p)))
            .collect();
        let outside = stencils.iter().filter(|s| s.clamped.iter().any(|&c| c)).count();
        if outside > 0 {
            log::warn!("{outside} sample positions lie outside the field and were clamped");
        }
        Self {
            stencils,
            lattice: *lattice,
        }
    }

    pub fn len(&self) -> usize {
        self.stencils.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stencils.is_empty()
    }

    pub fn sample(&self, field: &[Vec3]) -> Vec<Vec3> {
        assert_eq!(field.len(), self.lattice.len());
        self.stencils.iter().map(|s| s.eval(field)).collect()
    }

    /// Scatters per-sample gradients back onto the field nodes.
    pub fn adjoint(&self, grad: &[Vec3]) -> Vec<Vec3> {
        let mut out = vec![Vec3::zeros(); self.lattice.len()];
        for (s, g) in self.stencils.iter().zip(grad) {
            for c in 0..8 {
                out[s.nodes[c]] += g * s.weights[c];
            }
        }
        out
    }
}

/// Trilinear interpolation of `field` at `positions`.
pub fn sample_displacements(field: &DenseField, positions: &[Vec3]) -> Vec<Vec3> {
    Sampler::new(&field.lattice, positions).sample(&field.vectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn field() -> DenseField {
        let l = Lattice::new(Vec3::new(1.0, -2.0, 0.5), Vec3::new(0.5, 1.0, 2.0), [4, 5, 3]).unwrap();
        DenseField::from_fn(l, |p| Vec3::new(p.x * p.y, p.z.sin(), p.x + 2.0 * p.z))
    }

    #[test]
    fn nodes_are_exact() {
        let f = field();
        let pos: Vec<Vec3> = (0..f.lattice.len()).map(|n| f.lattice.position(n)).collect();
        let s = sample_displacements(&f, &pos);
        for (a, b) in s.iter().zip(&f.vectors) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn edge_midpoint_is_average() {
        let f = field();
        let l = f.lattice;
        let (a, b) = (l.index(1, 2, 1), l.index(1, 3, 1));
        let mid = (l.position(a) + l.position(b)) * 0.5;
        let s = sample_displacements(&f, &[mid])[0];
        assert!((s - (f.vectors[a] + f.vectors[b]) * 0.5).norm() < 1e-12);
    }

    #[test]
    fn constant_field_everywhere() {
        let l = field().lattice;
        let t = Vec3::new(1.0, 2.0, 3.0);
        let f = DenseField::from_fn(l, |_| t);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pos: Vec<Vec3> = (0..100)
            .map(|_| Vec3::new(rng.gen_range(0.0..4.0), rng.gen_range(-4.0..4.0), rng.gen_range(-1.0..7.0)))
            .collect();
        for v in sample_displacements(&f, &pos) {
            assert!((v - t).norm() < 1e-12);
        }
    }
}
