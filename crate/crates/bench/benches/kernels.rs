use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use meshtune_bench::{bench_tube, tune_lattices};
use meshtune_core::energy::{EnergyWeights, StrainEnergy};
use meshtune_core::field::{integrate, DeformationModel, Densifier};
use meshtune_core::loss::{sided_chamfer_indexed, NearestNeighborIndex};
use meshtune_core::mesh::{base_surface_points, thickness_directions};
use meshtune_core::Vec3;

fn field_kernels(c: &mut Criterion) {
    let mesh = bench_tube();
    let (grid, dense) = tune_lattices(&mesh);
    let densifier = Densifier::new(&grid.lattice, &dense).unwrap();
    c.bench_function("densify_bspline", |b| b.iter(|| densifier.apply(black_box(&grid.velocities))));
    let v = densifier.apply(&grid.velocities);
    c.bench_function("scaling_and_squaring_7", |b| b.iter(|| integrate(&dense, black_box(&v), 7, Some(0.5))));
    let model = DeformationModel::new(&grid.lattice, &dense, &mesh.vertices, 7, Some(0.5)).unwrap();
    let ones = vec![Vec3::repeat(1.0); mesh.vertices.len()];
    c.bench_function("deform_forward_backward", |b| {
        b.iter(|| {
            let state = model.forward(black_box(&grid.velocities));
            model.backward(&state, &ones)
        })
    });
}

fn loss_kernels(c: &mut Criterion) {
    let mesh = bench_tube();
    let dirs = thickness_directions(&mesh).unwrap();
    let energy = StrainEnergy::new(&mesh, Some(&dirs), &EnergyWeights::default()).unwrap();
    let deformed: Vec<Vec3> = mesh.vertices.iter().map(|p| p * 1.02 + Vec3::new(0.0, 0.0, 0.01 * p.x)).collect();
    c.bench_function("strain_energy_eval", |b| b.iter(|| energy.evaluate(black_box(&deformed))));

    let pts = base_surface_points(&mesh, None).unwrap();
    let target: Vec<Vec3> = pts.classes[0].iter().map(|p| p * 1.01).collect();
    let index = NearestNeighborIndex::new(&target);
    c.bench_function("sided_chamfer", |b| b.iter(|| sided_chamfer_indexed(black_box(&pts.classes[0]), &index).unwrap()));
    c.bench_function("kd_tree_build", |b| b.iter(|| NearestNeighborIndex::new(black_box(&target))));
}

criterion_group!(benches, field_kernels, loss_kernels);
criterion_main!(benches);
