use meshtune_core::mesh::base_surface_points;
use meshtune_core::metrics::{chamfer_metric, scaled_jacobian};
use meshtune_core::pipeline::{coarse_init, initialize, optimize, tune, FitProblem, Regularizer, TuneConfig};
use meshtune_core::scene::primitives::slab;
use meshtune_core::scene::slab_wave;
use meshtune_core::Vec3;

fn small_cfg() -> TuneConfig {
    TuneConfig {
        dense_spacing_mm: 1.0,
        margin_mm: 2.0,
        control_spacing: 4,
        coarse_control_spacing: 6,
        coarse_iterations: 100,
        learning_rate: 0.01,
        iterations: 400,
        ..TuneConfig::default()
    }
}

#[test]
fn objective_settles_after_warmup_and_is_reproducible() {
    let scene = slab_wave(2);
    let cfg = small_cfg();
    let init = initialize(&scene.template, &scene.labels, &cfg).unwrap();
    let a = tune(&init.coarse.mesh, &scene.template, &scene.labels, None, &cfg).unwrap();
    let b = tune(&init.coarse.mesh, &scene.template, &scene.labels, None, &cfg).unwrap();
    assert_eq!(a.report, b.report);

    let totals: Vec<f64> = a.report.losses.iter().map(|l| l.total).collect();
    for i in 100..totals.len() - 100 {
        let peak = totals[i..=i + 100].iter().copied().fold(f64::MIN, f64::max);
        assert!(peak <= 1.05 * totals[i], "window at {i}: {peak} vs {}", totals[i]);
    }
    assert!(a.report.final_loss.total < totals[0]);
    assert!(a.report.metrics.cd_mm.unwrap() < a.report.initial_cd_mm);
    assert_eq!(a.report.folded_cells, 0);
}

#[test]
fn matched_targets_keep_parameters_near_zero() {
    let mesh = slab([4, 4, 2], Vec3::new(1.5, 1.5, 1.0));
    let targets = base_surface_points(&mesh, None).unwrap();
    let cfg = small_cfg();
    for reg in [Regularizer::Volumetric, Regularizer::FieldBending, Regularizer::Surface] {
        let c = TuneConfig { regularizer: reg, ..cfg.clone() };
        let mut problem = FitProblem::new(&mesh, &mesh, &targets, None, &c, c.control_spacing_mm()).unwrap();
        let out = optimize(&mut problem, 200, &c.adam(), c.refresh_interval).unwrap();
        let norm = out.grid.velocities.iter().map(|v| v.norm_squared()).sum::<f64>().sqrt() / problem.param_scale();
        assert!(norm <= 1e-3, "{reg:?}: parameter norm {norm}");
    }
}

#[test]
fn folded_target_leaves_residual_without_folding() {
    let mesh = slab([6, 4, 2], Vec3::new(1.5, 1.5, 1.0));
    let mid = 4.5;
    // the right half of the base folds back over the left half
    let targets = base_surface_points(&mesh, None)
        .unwrap()
        .map_points(|p| if p.x > mid { Vec3::new(2.0 * mid - p.x, p.y, p.z + 0.5) } else { *p });
    let cfg = TuneConfig { lambda_user: 10.0, coarse_iterations: 300, ..small_cfg() };
    let coarse = coarse_init(&mesh, &targets, &cfg).unwrap();
    let min_sj = scaled_jacobian(&coarse.mesh).into_iter().fold(f64::INFINITY, f64::min);
    assert!(min_sj > 0.0, "min scaled Jacobian {min_sj}");
    let residual = chamfer_metric(&base_surface_points(&coarse.mesh, None).unwrap(), &targets).unwrap();
    assert!(residual > 0.1, "residual {residual}");
}
