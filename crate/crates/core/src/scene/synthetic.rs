//! Seeded scenes with a known smooth deformation of a hex template.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::attach::{ComponentSurface, VoxelMask};
use crate::error::{Error, Result};
use crate::geom::{rotation, Aabb, Mat3, Vec3};
use crate::mesh::{base_surface_points, LabeledPointCloud, VolumetricMesh};
use crate::metrics::scaled_jacobian;
use crate::scene::primitives::{sector_tube, slab, tube};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SceneKind {
    TubeBulge,
    Slab,
    CalcifiedTube,
}

impl SceneKind {
    pub const ALL: [SceneKind; 3] = [SceneKind::TubeBulge, SceneKind::Slab, SceneKind::CalcifiedTube];

    pub fn name(self) -> &'static str {
        match self {
            SceneKind::TubeBulge => "tube-bulge",
            SceneKind::Slab => "slab",
            SceneKind::CalcifiedTube => "calcified-tube",
        }
    }
}

impl fmt::Display for SceneKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SceneKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scene kind '{s}' (expected tube-bulge, slab or calcified-tube)")))
    }
}

/// Ground-truth description written next to the scene files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneManifest {
    pub kind: SceneKind,
    pub seed: u64,
    /// Rigid misalignment applied after the smooth deformation.
    pub rotation: Mat3,
    pub translation: Vec3,
    pub bulge_amplitude_mm: f64,
    /// Axial center (tubes) or in-plane center (slab) of the bump.
    pub bulge_center: Vec3,
    pub bulge_width_mm: f64,
    pub blob_centers: Vec<Vec3>,
    pub blob_radius_mm: f64,
    pub blob_offset_mm: f64,
    pub min_ground_truth_scaled_jacobian: f64,
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub manifest: SceneManifest,
    pub template: VolumetricMesh,
    pub ground_truth: VolumetricMesh,
    /// Base vertices of the ground truth per class.
    pub labels: LabeledPointCloud,
    pub mask: Option<VoxelMask>,
}

/// Shape knobs of the calcified-tube scene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalcifiedParams {
    pub blob_offset_mm: f64,
    pub blob_radius_mm: f64,
    pub mask_spacing_mm: f64,
}

impl Default for CalcifiedParams {
    fn default() -> Self {
        Self {
            blob_offset_mm: 1.0,
            blob_radius_mm: 1.5,
            mask_spacing_mm: 0.5,
        }
    }
}

pub fn generate(kind: SceneKind, seed: u64) -> Result<Scene> {
    match kind {
        SceneKind::TubeBulge => Ok(tube_bulge(seed)),
        SceneKind::Slab => Ok(slab_wave(seed)),
        SceneKind::CalcifiedTube => calcified_tube(seed, CalcifiedParams::default()),
    }
}

const TUBE_R_IN: f64 = 10.0;
const TUBE_R_OUT: f64 = 12.0;
const TUBE_LEN: f64 = 48.0;

struct Bump {
    amplitude: f64,
    z0: f64,
    theta0: f64,
    sigma: f64,
}

impl Bump {
    /// Radial push, equal through the wall so thickness is kept.
    fn apply(&self, p: &Vec3) -> Vec3 {
        let r = (p.x * p.x + p.y * p.y).sqrt();
        if r == 0.0 {
            return *p;
        }
        let theta = p.y.atan2(p.x);
        let axial = (-0.5 * ((p.z - self.z0) / self.sigma).powi(2)).exp();
        let angular = 0.5 + 0.5 * (theta - self.theta0).cos();
        let d = self.amplitude * axial * angular;
        Vec3::new(p.x / r, p.y / r, 0.0) * d + p
    }
}

fn random_rigid(rng: &mut ChaCha8Rng, max_deg: f64, max_mm: f64) -> (Mat3, Vec3) {
    let axis = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let axis = if axis.norm() > 1e-3 { axis } else { Vec3::z() };
    let angle = max_deg.to_radians() * rng.gen_range(0.5..1.0);
    let dir = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let t = if dir.norm() > 1e-3 { dir.normalize() * max_mm * rng.gen_range(0.5..1.0) } else { Vec3::zeros() };
    (rotation(&axis, angle), t)
}

fn min_sj(mesh: &VolumetricMesh) -> f64 {
    scaled_jacobian(mesh).into_iter().fold(f64::INFINITY, f64::min)
}

fn finish(
    kind: SceneKind,
    seed: u64,
    template: VolumetricMesh,
    deform: impl Fn(&Vec3) -> Vec3,
    (rot, trans): (Mat3, Vec3),
    bump: &Bump,
) -> Scene {
    let ground_truth = template.with_vertices(template.vertices.iter().map(|p| rot * deform(p) + trans).collect());
    let labels = base_surface_points(&ground_truth, None).expect("scene templates have base faces");
    Scene {
        manifest: SceneManifest {
            kind,
            seed,
            rotation: rot,
            translation: trans,
            bulge_amplitude_mm: bump.amplitude,
            bulge_center: Vec3::new(bump.theta0.cos(), bump.theta0.sin(), bump.z0),
            bulge_width_mm: bump.sigma,
            blob_centers: vec![],
            blob_radius_mm: 0.0,
            blob_offset_mm: 0.0,
            min_ground_truth_scaled_jacobian: min_sj(&ground_truth),
        },
        template,
        ground_truth,
        labels,
        mask: None,
    }
}

/// Two-class tube (lumen and outer wall) with a smooth radial bulge and a
/// small rigid misalignment.
pub fn tube_bulge(seed: u64) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let template = tube(24, 32, 2, TUBE_R_IN, TUBE_R_OUT, TUBE_LEN);
    let bump = Bump {
        amplitude: 2.0,
        z0: TUBE_LEN / 2.0 + rng.gen_range(-2.0..2.0),
        theta0: rng.gen_range(0.0..2.0 * PI),
        sigma: 8.0,
    };
    let rigid = random_rigid(&mut rng, 2.0, 0.8);
    finish(SceneKind::TubeBulge, seed, template, |p| bump.apply(p), rigid, &bump)
}

/// Single-class slab (bottom face) with a smooth out-of-plane bump.
pub fn slab_wave(seed: u64) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let template = slab([8, 8, 2], Vec3::new(2.0, 2.0, 1.0));
    let c = template.bounding_box().center();
    let bump = Bump {
        amplitude: rng.gen_range(0.8..1.2),
        z0: c.z,
        theta0: 0.0,
        sigma: 4.0,
    };
    let (cx, cy) = (c.x + rng.gen_range(-1.0..1.0), c.y + rng.gen_range(-1.0..1.0));
    let deform = |p: &Vec3| {
        let r2 = (p.x - cx).powi(2) + (p.y - cy).powi(2);
        p + Vec3::z() * bump.amplitude * (-0.5 * r2 / bump.sigma.powi(2)).exp()
    };
    let rigid = random_rigid(&mut rng, 1.0, 0.5);
    let mut scene = finish(SceneKind::Slab, seed, template, deform, rigid, &bump);
    scene.manifest.bulge_center = Vec3::new(cx, cy, c.z);
    scene
}

/// Three-sector tube (one class per sector's outer wall) with a mild bulge
/// and one spherical blob per sector just outside the deformed wall.
pub fn calcified_tube(seed: u64, params: CalcifiedParams) -> Result<Scene> {
    if !(params.blob_radius_mm > 0.0 && params.mask_spacing_mm > 0.0 && params.blob_offset_mm >= 0.0) {
        return Err(Error::Config(format!("invalid calcified-tube parameters {params:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = 32.0;
    let template = sector_tube(3, 16, 12, 2, TUBE_R_IN, TUBE_R_OUT, len);
    let bump = Bump {
        amplitude: 1.0,
        z0: len / 2.0 + rng.gen_range(-2.0..2.0),
        theta0: rng.gen_range(0.0..2.0 * PI),
        sigma: 8.0,
    };
    let mut scene = finish(SceneKind::CalcifiedTube, seed, template, |p| bump.apply(p), (Mat3::identity(), Vec3::zeros()), &bump);

    let mut centers = Vec::new();
    for c in 0..3 {
        let comp = ComponentSurface::new(&scene.ground_truth, c)?;
        let theta = 2.0 * PI * (c as f64 + rng.gen_range(0.3..0.7)) / 3.0;
        let z = len / 2.0 + rng.gen_range(-6.0..6.0);
        let want = Vec3::new(theta.cos(), theta.sin(), 0.0) * TUBE_R_OUT + Vec3::z() * z;
        // outer-wall vertex closest to the wanted spot
        let (k, _) = comp
            .surface
            .vertices
            .iter()
            .enumerate()
            .map(|(k, p)| (k, (p - want).norm()))
            .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        let p = comp.surface.vertices[k];
        centers.push(p + comp.normals[k] * (params.blob_offset_mm + params.blob_radius_mm));
    }
    let r = params.blob_radius_mm;
    let region = Aabb::from_points(&centers).padded(r + 2.0 * params.mask_spacing_mm);
    let h = params.mask_spacing_mm;
    let dims = [0, 1, 2].map(|a| (region.extent()[a] / h).ceil() as usize + 1);
    let mut mask = VoxelMask::empty(dims, Vec3::repeat(h), region.min);
    mask.fill(|q| centers.iter().any(|c| (q - c).norm() <= r));
    scene.manifest.blob_centers = centers;
    scene.manifest.blob_radius_mm = r;
    scene.manifest.blob_offset_mm = params.blob_offset_mm;
    scene.mask = Some(mask);
    Ok(scene)
}
