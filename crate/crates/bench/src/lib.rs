//! Fixtures shared by the kernel benchmarks.

use meshtune_core::field::{ControlGrid, Lattice};
use meshtune_core::mesh::VolumetricMesh;
use meshtune_core::pipeline::{build_lattices, TuneConfig};
use meshtune_core::scene::primitives::tube;
use meshtune_core::Vec3;

/// Two-layer tube comparable to the tube-bulge scene.
pub fn bench_tube() -> VolumetricMesh {
    tube(24, 32, 2, 10.0, 12.0, 48.0)
}

/// Control grid and dense lattice laid out as a default tune run would,
/// with smooth deterministic velocities.
pub fn tune_lattices(mesh: &VolumetricMesh) -> (ControlGrid, Lattice) {
    let cfg = TuneConfig::default();
    let (mut grid, dense) = build_lattices(&mesh.bounding_box(), &cfg, cfg.control_spacing_mm()).expect("nonempty mesh");
    let l = grid.lattice;
    let amp = 0.3 * l.min_spacing();
    for (n, v) in grid.velocities.iter_mut().enumerate() {
        let p = l.position(n);
        *v = Vec3::new((0.1 * p.y).sin(), (0.13 * p.z).cos(), (0.07 * p.x).sin()) * amp;
    }
    (grid, dense)
}
