use crate::error::{Error, Result};
use crate::geom::{Mat3, Vec3};
use crate::mesh::{CellKind, VolumetricMesh};

/// Natural coordinates of the hex corners in local node order.
const HEX_NATURAL: [[f64; 3]; 8] = [
    [-1.0, -1.0, -1.0],
    [1.0, -1.0, -1.0],
    [1.0, 1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
    [1.0, -1.0, 1.0],
    [1.0, 1.0, 1.0],
    [-1.0, 1.0, 1.0],
];

/// Per-cell deformation state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellKinematics {
    pub f: Mat3,
    pub r: Mat3,
    pub d: Option<Vec3>,
}

/// Rest-configuration shape vectors: `F = sum_a x_a b_a^T` over the cell nodes.
#[derive(Debug, Clone)]
pub struct RestShape {
    pub nodes: Vec<usize>,
    pub shape: Vec<Vec3>,
}

impl RestShape {
    pub fn new(mesh: &VolumetricMesh, cell: usize) -> Result<Self> {
        let c = &mesh.cells[cell];
        let x: Vec<Vec3> = c.nodes.iter().map(|&n| mesh.vertices[n]).collect();
        // reference gradients d N_a / d xi at the evaluation point
        let grads: Vec<Vec3> = match c.kind {
            CellKind::Hex => HEX_NATURAL
                .iter()
                .map(|p| Vec3::new(p[0], p[1], p[2]) / 8.0)
                .collect(),
            CellKind::Tet => vec![
                Vec3::new(-1.0, -1.0, -1.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
                Vec3::new(0.0, 0.0, 1.0),
            ],
        };
        let mut jac = Mat3::zeros();
        for (xa, ga) in x.iter().zip(&grads) {
            jac += xa * ga.transpose();
        }
        let scale = x
            .iter()
            .skip(1)
            .map(|p| (p - x[0]).norm())
            .fold(0.0, f64::max);
        let det = jac.determinant();
        if !(det.abs() > 1e-12 * scale.powi(3)) {
            return Err(Error::DegenerateCell(cell));
        }
        let inv_t = jac.try_inverse().ok_or(Error::DegenerateCell(cell))?.transpose();
        Ok(Self {
            nodes: c.nodes.clone(),
            shape: grads.iter().map(|g| inv_t * g).collect(),
        })
    }

    pub fn gradient(&self, deformed: &[Vec3]) -> Mat3 {
        let mut f = Mat3::zeros();
        for (&n, b) in self.nodes.iter().zip(&self.shape) {
            f += deformed[n] * b.transpose();
        }
        f
    }

    /// Accumulates `dE/dx_a = P b_a` for a stress-like `P = dE/dF`.
    pub fn scatter(&self, p: &Mat3, out: &mut Vec<(usize, Vec3)>) {
        for (&n, b) in self.nodes.iter().zip(&self.shape) {
            out.push((n, p * b));
        }
    }
}

/// Deformation gradient of `cell`: exact for tets, evaluated at the
/// centroid for hexes.
pub fn deformation_gradient(rest: &VolumetricMesh, deformed: &[Vec3], cell: usize) -> Result<Mat3> {
    Ok(RestShape::new(rest, cell)?.gradient(deformed))
}

/// Smallest singular value below which a gradient is reported singular.
pub const SINGULAR_TOL: f64 = 1e-10;

/// Rotation factor of the polar decomposition, reflection-corrected so the
/// determinant is +1. The flag is set when `f` is numerically singular.
pub fn polar_rotation(f: &Mat3) -> (Mat3, bool) {
    let svd = f.svd(true, true);
    let mut u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let sv = svd.singular_values;
    let imin = sv.imin();
    let singular = sv[imin] < SINGULAR_TOL;
    let mut r = u * v_t;
    if r.determinant() < 0.0 {
        u.column_mut(imin).neg_mut();
        r = u * v_t;
    }
    (r, singular)
}

impl CellKinematics {
    pub fn new(f: Mat3, d: Option<Vec3>) -> Self {
        let (r, singular) = polar_rotation(&f);
        if singular {
            log::warn!("numerically singular deformation gradient");
        }
        Self { f, r, d }
    }
}
