use crate::field::{ControlGrid, Lattice};
use crate::geom::Vec3;

/// One second-difference stencil: `sum_k w_k v[n_k]`.
type Stencil = ([usize; 4], [f64; 4], f64);

fn stencils(l: &Lattice) -> Vec<Stencil> {
    let [nx, ny, nz] = l.dims;
    let dims = [nx, ny, nz];
    let strides = [1, nx, nx * ny];
    let mut out = Vec::new();
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let c = [i, j, k];
                let n = l.index(i, j, k);
                for a in 0..3 {
                    if c[a] >= 1 && c[a] + 1 < dims[a] {
                        let s = strides[a];
                        out.push(([n - s, n, n + s, n], [1.0, -2.0, 1.0, 0.0], 1.0));
                    }
                }
                for (a, b) in [(0, 1), (0, 2), (1, 2)] {
                    if c[a] + 1 < dims[a] && c[b] + 1 < dims[b] {
                        let (sa, sb) = (strides[a], strides[b]);
                        out.push(([n, n + sa, n + sb, n + sa + sb], [1.0, -1.0, -1.0, 1.0], 2.0));
                    }
                }
            }
        }
    }
    out
}

/// Thin-plate bending of the control velocity field: squared second
/// differences in index units, mixed terms doubled, divided by node count.
pub fn bending_energy(grid: &ControlGrid) -> (f64, Vec<Vec3>) {
    let v = &grid.velocities;
    let norm = 1.0 / v.len() as f64;
    let mut total = 0.0;
    let mut grad = vec![Vec3::zeros(); v.len()];
    for (nodes, w, mult) in stencils(&grid.lattice) {
        let mut d = Vec3::zeros();
        for t in 0..4 {
            d += v[nodes[t]] * w[t];
        }
        total += mult * d.norm_squared();
        let g = d * (2.0 * mult * norm);
        for t in 0..4 {
            grad[nodes[t]] += g * w[t];
        }
    }
    (total * norm, grad)
}
