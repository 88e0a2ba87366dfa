use crate::error::Result;
use crate::field::bspline::Densifier;
use crate::field::grid::{ControlGrid, DenseField, Lattice};
use crate::field::sample::Sampler;
use crate::field::svf::{integrate, integrate_adjoint, SquaringTape};
use crate::geom::{Aabb, Vec3};
use crate::mesh::VolumetricMesh;

/// Default dense lattice spacing (mm).
pub const DEFAULT_DENSE_SPACING: f64 = 1.25;
/// Default lattice margin around the region of interest (mm).
pub const DEFAULT_MARGIN: f64 = 5.0;
pub const DEFAULT_STEPS: usize = 7;

/// Control velocities -> dense velocity -> exp -> per-vertex displacements,
/// with the matching reverse pass.
#[derive(Debug, Clone)]
pub struct DeformationModel {
    densifier: Densifier,
    sampler: Sampler,
    steps: usize,
    clamp: Option<f64>,
}

/// Forward-pass state needed by [`DeformationModel::backward`].
#[derive(Debug, Clone)]
pub struct Deformation {
    pub displacements: Vec<Vec3>,
    dense_velocity: Vec<Vec3>,
    tape: SquaringTape,
}

impl Deformation {
    pub fn dense_displacement(&self) -> &[Vec3] {
        self.tape.result()
    }

    pub fn clamped_nodes(&self) -> usize {
        self.tape.clamped_nodes()
    }
}

impl DeformationModel {
    /// `clamp` limits each scaled dense velocity vector (mm per squaring step).
    pub fn new(control: &Lattice, dense: &Lattice, rest: &[Vec3], steps: usize, clamp: Option<f64>) -> Result<Self> {
        Ok(Self {
            densifier: Densifier::new(control, dense)?,
            sampler: Sampler::new(dense, rest),
            steps,
            clamp,
        })
    }

    pub fn control(&self) -> &Lattice {
        self.densifier.control()
    }

    pub fn dense(&self) -> &Lattice {
        self.densifier.dense()
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn forward(&self, velocities: &[Vec3]) -> Deformation {
        let dense_velocity = self.densifier.apply(velocities);
        let tape = integrate(self.dense(), &dense_velocity, self.steps, self.clamp);
        let displacements = self.sampler.sample(tape.result());
        Deformation {
            displacements,
            dense_velocity,
            tape,
        }
    }

    /// Gradient w.r.t. control velocities from a gradient on the displacements.
    pub fn backward(&self, state: &Deformation, grad_disp: &[Vec3]) -> Vec<Vec3> {
        let g_field = self.sampler.adjoint(grad_disp);
        let g_vel = integrate_adjoint(self.dense(), &state.dense_velocity, &state.tape, &g_field);
        self.densifier.adjoint(&g_vel)
    }

    pub fn displacement_field(&self, state: &Deformation) -> DenseField {
        DenseField {
            lattice: *self.dense(),
            vectors: state.tape.result().to_vec(),
        }
    }
}

/// Dense lattice over `region`, shrunk where needed to stay inside the
/// support of `grid`.
pub fn lattice_within(grid: &ControlGrid, region: &Aabb, spacing: f64, margin: f64) -> Result<Lattice> {
    let s = grid.support();
    let room = (0..3)
        .map(|a| (region.min[a] - s.min[a]).min(s.max[a] - region.max[a]))
        .fold(f64::INFINITY, f64::min);
    let m = margin.min(room - spacing).max(0.0);
    let mut l = Lattice::covering(region, spacing, m)?;
    for a in 0..3 {
        while l.dims[a] > 1 && l.max_corner()[a] > s.max[a] + 1e-9 {
            l.dims[a] -= 1;
        }
    }
    Ok(l)
}

/// Deforms `mesh` by the exponential of the b-spline velocity `grid`.
/// Returns the deformed mesh and per-vertex displacements.
pub fn deform_mesh(mesh: &VolumetricMesh, grid: &ControlGrid, steps: usize) -> Result<(VolumetricMesh, Vec<Vec3>)> {
    let lattice = lattice_within(grid, &mesh.bounding_box(), DEFAULT_DENSE_SPACING, DEFAULT_MARGIN)?;
    deform_mesh_on(mesh, grid, &lattice, steps)
}

pub fn deform_mesh_on(
    mesh: &VolumetricMesh,
    grid: &ControlGrid,
    lattice: &Lattice,
    steps: usize,
) -> Result<(VolumetricMesh, Vec<Vec3>)> {
    let model = DeformationModel::new(&grid.lattice, lattice, &mesh.vertices, steps, None)?;
    let u = model.forward(&grid.velocities).displacements;
    let moved = mesh.vertices.iter().zip(&u).map(|(v, d)| v + d).collect();
    Ok((mesh.with_vertices(moved), u))
}
