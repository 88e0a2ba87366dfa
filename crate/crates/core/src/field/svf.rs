//! Exponential of a stationary velocity field by scaling and squaring.

use rayon::prelude::*;

use crate::field::grid::{DenseField, Lattice};
use crate::geom::{Mat3, Vec3};

/// Trilinear stencil at continuous index coordinates, clamped to the lattice.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Trilinear {
    pub nodes: [usize; 8],
    pub weights: [f64; 8],
    /// d weight / d index coordinate, per corner.
    pub dweights: [[f64; 3]; 8],
    /// Axis was clamped (coordinate outside the lattice).
    pub clamped: [bool; 3],
}

impl Trilinear {
    pub fn at(lattice: &Lattice, p: &Vec3) -> Self {
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        let mut f = [0.0f64; 3];
        let mut clamped = [false; 3];
        for a in 0..3 {
            let n = lattice.dims[a];
            let top = (n - 1) as f64;
            let mut t = p[a];
            if !(t >= 0.0) {
                clamped[a] = true;
                t = 0.0;
            } else if t > top {
                clamped[a] = true;
                t = top;
            }
            if n == 1 {
                continue;
            }
            let i = (t.floor() as usize).min(n - 2);
            lo[a] = i;
            hi[a] = i + 1;
            f[a] = t - i as f64;
        }
        let mut nodes = [0; 8];
        let mut weights = [0.0; 8];
        let mut dweights = [[0.0; 3]; 8];
        for c in 0..8 {
            let bits = [c & 1, (c >> 1) & 1, (c >> 2) & 1];
            let idx = [0, 1, 2].map(|a| if bits[a] == 1 { hi[a] } else { lo[a] });
            let w1 = [0, 1, 2].map(|a| if bits[a] == 1 { f[a] } else { 1.0 - f[a] });
            let dw1 = [0, 1, 2].map(|a| if bits[a] == 1 { 1.0 } else { -1.0 });
            nodes[c] = lattice.index(idx[0], idx[1], idx[2]);
            weights[c] = w1[0] * w1[1] * w1[2];
            dweights[c] = [
                dw1[0] * w1[1] * w1[2],
                w1[0] * dw1[1] * w1[2],
                w1[0] * w1[1] * dw1[2],
            ];
        }
        Self {
            nodes,
            weights,
            dweights,
            clamped,
        }
    }

    #[inline]
    pub fn eval(&self, field: &[Vec3]) -> Vec3 {
        let mut v = Vec3::zeros();
        for c in 0..8 {
            v += field[self.nodes[c]] * self.weights[c];
        }
        v
    }

    /// Column `a` holds the derivative of the interpolant w.r.t. index coordinate `a`.
    #[inline]
    pub fn jacobian(&self, field: &[Vec3]) -> Mat3 {
        let mut j = Mat3::zeros();
        for c in 0..8 {
            let v = field[self.nodes[c]];
            for a in 0..3 {
                let d = self.dweights[c][a];
                j[(0, a)] += v.x * d;
                j[(1, a)] += v.y * d;
                j[(2, a)] += v.z * d;
            }
        }
        j
    }
}

/// Intermediate fields kept for the reverse pass.
#[derive(Debug, Clone)]
pub struct SquaringTape {
    /// `u_0 .. u_steps`; the last entry is the result.
    pub stages: Vec<Vec<Vec3>>,
    /// Per-node clamp scale applied to the scaled velocity (1 when inactive).
    clamp_scale: Vec<f64>,
    steps: usize,
    clamp: Option<f64>,
}

impl SquaringTape {
    pub fn result(&self) -> &[Vec3] {
        self.stages.last().expect("tape has at least one stage")
    }

    pub fn into_result(mut self) -> Vec<Vec3> {
        self.stages.pop().expect("tape has at least one stage")
    }

    /// Number of nodes whose scaled velocity hit the clamp.
    pub fn clamped_nodes(&self) -> usize {
        self.clamp_scale.iter().filter(|&&s| s < 1.0).count()
    }
}

fn compose_once(lattice: &Lattice, u: &[Vec3]) -> Vec<Vec3> {
    let inv = lattice.spacing.map(|h| 1.0 / h);
    let mut out = vec![Vec3::zeros(); u.len()];
    out.par_iter_mut().enumerate().for_each(|(n, o)| {
        let c = lattice.coords(n);
        let p = Vec3::new(c[0] as f64, c[1] as f64, c[2] as f64) + u[n].component_mul(&inv);
        *o = u[n] + Trilinear::at(lattice, &p).eval(u);
    });
    out
}

/// Integrates `velocity` over unit time with `steps` squarings. With
/// `clamp = Some(c)`, each scaled velocity vector is limited to length `c`.
pub fn integrate(lattice: &Lattice, velocity: &[Vec3], steps: usize, clamp: Option<f64>) -> SquaringTape {
    assert_eq!(velocity.len(), lattice.len());
    let scale = 0.5f64.powi(steps as i32);
    let mut clamp_scale = vec![1.0; velocity.len()];
    let u0: Vec<Vec3> = velocity
        .iter()
        .zip(clamp_scale.iter_mut())
        .map(|(v, cs)| {
            let u = v * scale;
            if let Some(c) = clamp {
                let n = u.norm();
                if n > c {
                    *cs = c / n;
                    return u * *cs;
                }
            }
            u
        })
        .collect();
    let mut stages = Vec::with_capacity(steps + 1);
    stages.push(u0);
    for _ in 0..steps {
        let next = compose_once(lattice, stages.last().unwrap());
        stages.push(next);
    }
    SquaringTape {
        stages,
        clamp_scale,
        steps,
        clamp,
    }
}

/// Reverse pass of [`integrate`]: gradient w.r.t. the input velocity.
pub fn integrate_adjoint(lattice: &Lattice, velocity: &[Vec3], tape: &SquaringTape, grad_out: &[Vec3]) -> Vec<Vec3> {
    let inv = lattice.spacing.map(|h| 1.0 / h);
    let mut g = grad_out.to_vec();
    for k in (0..tape.steps).rev() {
        let u = &tape.stages[k];
        // position-dependent part is local to each node and runs in parallel
        let local: Vec<(Trilinear, Vec3)> = (0..u.len())
            .into_par_iter()
            .map(|n| {
                let c = lattice.coords(n);
                let p = Vec3::new(c[0] as f64, c[1] as f64, c[2] as f64) + u[n].component_mul(&inv);
                let st = Trilinear::at(lattice, &p);
                let mut d = st.jacobian(u).transpose() * g[n];
                for a in 0..3 {
                    d[a] = if st.clamped[a] { 0.0 } else { d[a] * inv[a] };
                }
                (st, g[n] + d)
            })
            .collect();
        let mut prev: Vec<Vec3> = local.iter().map(|(_, d)| *d).collect();
        // the trilinear scatter runs sequentially for a fixed summation order
        for (n, (st, _)) in local.iter().enumerate() {
            let gn = g[n];
            for c in 0..8 {
                prev[st.nodes[c]] += gn * st.weights[c];
            }
        }
        g = prev;
    }
    let scale = 0.5f64.powi(tape.steps as i32);
    g.iter()
        .zip(velocity)
        .zip(&tape.clamp_scale)
        .map(|((gn, v), &cs)| {
            if cs < 1.0 {
                let u = v * scale;
                let nrm = u.norm();
                let dir = u / nrm;
                let c = tape.clamp.expect("clamp scale set without a clamp");
                ((gn - dir * dir.dot(gn)) * (c / nrm)) * scale
            } else {
                gn * scale
            }
        })
        .collect()
}

/// Displacement field of `exp(velocity)`.
pub fn scaling_and_squaring(velocity: &DenseField, steps: usize) -> DenseField {
    DenseField {
        lattice: velocity.lattice,
        vectors: integrate(&velocity.lattice, &velocity.vectors, steps, None).into_result(),
    }
}
