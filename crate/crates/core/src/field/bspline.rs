//! Tensor-product cubic b-spline interpolation of control velocities.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::grid::{ControlGrid, DenseField, Lattice};
use crate::geom::Vec3;

/// Uniform cubic b-spline weights for local parameter `u` in `[0, 1]`.
#[inline]
pub fn cubic_weights(u: f64) -> [f64; 4] {
    let u2 = u * u;
    let u3 = u2 * u;
    let v = 1.0 - u;
    [
        v * v * v / 6.0,
        (3.0 * u3 - 6.0 * u2 + 4.0) / 6.0,
        (-3.0 * u3 + 3.0 * u2 + 3.0 * u + 1.0) / 6.0,
        u3 / 6.0,
    ]
}

/// Per-axis interpolation table from dense nodes to control nodes.
#[derive(Debug, Clone)]
pub(crate) struct AxisTable {
    start: Vec<usize>,
    weights: Vec<[f64; 4]>,
    /// For each control node along the axis: `(dense node, weight)`.
    transpose: Vec<Vec<(usize, f64)>>,
}

const SUPPORT_TOL: f64 = 1e-9;

impl AxisTable {
    fn new(dense: &Lattice, control: &Lattice, axis: usize) -> Result<Self> {
        let n_ctrl = control.dims[axis];
        let hi = (n_ctrl - 2) as f64;
        let mut start = Vec::with_capacity(dense.dims[axis]);
        let mut weights = Vec::with_capacity(dense.dims[axis]);
        let mut transpose = vec![Vec::new(); n_ctrl];
        for c in 0..dense.dims[axis] {
            let x = dense.origin[axis] + c as f64 * dense.spacing[axis];
            let t = (x - control.origin[axis]) / control.spacing[axis];
            if t < 1.0 - SUPPORT_TOL || t > hi + SUPPORT_TOL {
                return Err(Error::OutsideSupport(format!(
                    "axis {axis} coordinate {x:.6} mm maps to control index {t:.6}, needs [1, {hi}]"
                )));
            }
            let t = t.clamp(1.0, hi);
            let mut i = t.floor() as usize;
            if i > n_ctrl - 3 {
                i = n_ctrl - 3;
            }
            let w = cubic_weights(t - i as f64);
            let s = i - 1;
            for (m, &wm) in w.iter().enumerate() {
                transpose[s + m].push((c, wm));
            }
            start.push(s);
            weights.push(w);
        }
        Ok(Self {
            start,
            weights,
            transpose,
        })
    }
}

/// Precomputed separable densification from a control lattice to a dense one.
#[derive(Debug, Clone)]
pub struct Densifier {
    dense: Lattice,
    control: Lattice,
    tables: [AxisTable; 3],
}

fn stride(dims: &[usize; 3], axis: usize) -> usize {
    match axis {
        0 => 1,
        1 => dims[0],
        _ => dims[0] * dims[1],
    }
}

fn split(n: usize, dims: &[usize; 3]) -> [usize; 3] {
    let i = n % dims[0];
    let r = n / dims[0];
    [i, r % dims[1], r / dims[1]]
}

fn join(c: [usize; 3], dims: &[usize; 3]) -> usize {
    c[0] + dims[0] * (c[1] + dims[1] * c[2])
}

impl Densifier {
    pub fn new(control: &Lattice, dense: &Lattice) -> Result<Self> {
        if control.dims.iter().any(|&d| d < 4) {
            return Err(Error::Config("control grid needs at least 4 nodes per axis".into()));
        }
        Ok(Self {
            dense: *dense,
            control: *control,
            tables: [
                AxisTable::new(dense, control, 0)?,
                AxisTable::new(dense, control, 1)?,
                AxisTable::new(dense, control, 2)?,
            ],
        })
    }

    pub fn dense(&self) -> &Lattice {
        &self.dense
    }

    pub fn control(&self) -> &Lattice {
        &self.control
    }

    /// One interpolation pass along `axis`, input shape `in_dims`.
    fn pass(&self, input: &[Vec3], in_dims: [usize; 3], axis: usize) -> (Vec<Vec3>, [usize; 3]) {
        let table = &self.tables[axis];
        let mut out_dims = in_dims;
        out_dims[axis] = self.dense.dims[axis];
        let s = stride(&in_dims, axis);
        let len = out_dims.iter().product();
        let mut out = vec![Vec3::zeros(); len];
        out.par_iter_mut().enumerate().for_each(|(o, v)| {
            let mut c = split(o, &out_dims);
            let d = c[axis];
            c[axis] = table.start[d];
            let base = join(c, &in_dims);
            let w = &table.weights[d];
            *v = input[base] * w[0]
                + input[base + s] * w[1]
                + input[base + 2 * s] * w[2]
                + input[base + 3 * s] * w[3];
        });
        (out, out_dims)
    }

    /// Transpose of [`Self::pass`]: maps an output-shaped gradient back.
    fn pass_adjoint(&self, grad: &[Vec3], out_dims: [usize; 3], axis: usize) -> (Vec<Vec3>, [usize; 3]) {
        let table = &self.tables[axis];
        let mut in_dims = out_dims;
        in_dims[axis] = self.control.dims[axis];
        let len = in_dims.iter().product();
        let mut out = vec![Vec3::zeros(); len];
        out.par_iter_mut().enumerate().for_each(|(n, v)| {
            let mut c = split(n, &in_dims);
            let q = c[axis];
            let mut acc = Vec3::zeros();
            for &(d, w) in &table.transpose[q] {
                c[axis] = d;
                acc += grad[join(c, &out_dims)] * w;
            }
            *v = acc;
        });
        (out, in_dims)
    }

    /// Dense velocities from control velocities.
    pub fn apply(&self, velocities: &[Vec3]) -> Vec<Vec3> {
        assert_eq!(velocities.len(), self.control.len());
        let (a, da) = self.pass(velocities, self.control.dims, 0);
        let (b, db) = self.pass(&a, da, 1);
        self.pass(&b, db, 2).0
    }

    /// Gradient w.r.t. control velocities given a gradient on the dense field.
    pub fn adjoint(&self, grad_dense: &[Vec3]) -> Vec<Vec3> {
        assert_eq!(grad_dense.len(), self.dense.len());
        let (a, da) = self.pass_adjoint(grad_dense, self.dense.dims, 2);
        let (b, db) = self.pass_adjoint(&a, da, 1);
        self.pass_adjoint(&b, db, 0).0
    }
}

/// Interpolates the control velocities of `grid` onto `lattice`.
pub fn densify_bspline(grid: &ControlGrid, lattice: &Lattice) -> Result<DenseField> {
    let d = Densifier::new(&grid.lattice, lattice)?;
    Ok(DenseField {
        lattice: *lattice,
        vectors: d.apply(&grid.velocities),
    })
}
