use std::path::Path;
use std::process::{Command, Output};

use meshtune_core::attach::VoxelMask;
use meshtune_core::geom::{Mat3, Vec3};
use meshtune_core::io;
use meshtune_core::mesh::base_surface_points;
use meshtune_core::scene::primitives::{hex_block, slab};
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_meshtune"))
        .args(args)
        .env("MESHTUNE_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Coarse lattice and few iterations keep each run well under a second.
fn fast_config(dir: &Path, iterations: usize) -> std::path::PathBuf {
    let c = dir.join("config.json");
    std::fs::write(
        &c,
        format!(r#"{{"dense_spacing_mm": 1.0, "margin_mm": 2.0, "control_spacing": 3, "coarse_control_spacing": 4, "coarse_iterations": 30, "iterations": {iterations}, "learning_rate": 0.01}}"#),
    )
    .unwrap();
    c
}

#[test]
fn gen_scene_is_byte_identical() {
    let d = tempfile::tempdir().unwrap();
    for run_dir in ["a", "b"] {
        let out = run(&["gen-scene", "--kind", "slab", "--seed", "0", "--out-dir", p(&d.path().join(run_dir))]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for f in ["template.mesh", "ground_truth.mesh", "labels.pts", "manifest.json"] {
        assert_eq!(std::fs::read(d.path().join("a").join(f)).unwrap(), std::fs::read(d.path().join("b").join(f)).unwrap(), "{f}");
    }
    let bad = run(&["gen-scene", "--kind", "torus", "--out-dir", p(d.path())]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn tune_fixed_point_and_missing_template() {
    let d = tempfile::tempdir().unwrap();
    let m = slab([3, 3, 2], Vec3::new(1.5, 1.5, 1.0));
    let mesh = d.path().join("m.mesh");
    let labels = d.path().join("l.pts");
    io::save_mesh(&mesh, &m).unwrap();
    io::save_points(&labels, &base_surface_points(&m, None).unwrap()).unwrap();
    let cfg = fast_config(d.path(), 30);
    let out_dir = d.path().join("out");
    let args = ["tune", "--snap-mesh", p(&mesh), "--template", p(&mesh), "--labels", p(&labels), "--config", p(&cfg), "--out-dir", p(&out_dir)];
    let out = run(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out_dir.join("report.json"));
    assert!(report["max_displacement_mm"].as_f64().unwrap() <= 1e-2);
    for f in ["tuned.mesh", "loss_trace.csv", "field.json", "timings.json"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let trace = std::fs::read_to_string(out_dir.join("loss_trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 31);

    let missing = run(&["tune", "--snap-mesh", p(&mesh), "--labels", p(&labels), "--out-dir", p(&out_dir)]);
    assert_eq!(missing.status.code(), Some(2));
    let bad_file = run(&["tune", "--snap-mesh", p(&labels), "--template", p(&mesh), "--labels", p(&labels), "--out-dir", p(&out_dir)]);
    assert_eq!(bad_file.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad_file.stderr).contains("line"));
}

#[test]
fn tune_improves_synthetic_scene_and_is_deterministic() {
    let d = tempfile::tempdir().unwrap();
    let scene_dir = d.path().join("scene");
    assert!(run(&["gen-scene", "--kind", "slab", "--seed", "1", "--out-dir", p(&scene_dir)]).status.success());
    let template = scene_dir.join("template.mesh");
    let labels = scene_dir.join("labels.pts");
    let cfg = fast_config(d.path(), 150);
    let mut reports = Vec::new();
    for k in 0..2 {
        let out_dir = d.path().join(format!("run{k}"));
        let out = run(&["tune", "--snap-mesh", p(&template), "--template", p(&template), "--labels", p(&labels), "--config", p(&cfg), "--lambda-user", "0.5", "--out-dir", p(&out_dir)]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        reports.push(std::fs::read(out_dir.join("report.json")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    let r: Value = serde_json::from_slice(&reports[0]).unwrap();
    assert!(r["metrics"]["cd_mm"].as_f64().unwrap() < r["initial_cd_mm"].as_f64().unwrap());
    assert_eq!(r["config"]["lambda_user"].as_f64(), Some(0.5));
    assert_eq!(r["folded_cells"].as_u64(), Some(0));
}

#[test]
fn non_finite_loss_aborts_with_exit_3() {
    let d = tempfile::tempdir().unwrap();
    let m = slab([3, 3, 2], Vec3::new(1.5, 1.5, 1.0));
    let mesh = d.path().join("m.mesh");
    let rest = d.path().join("rest.mesh");
    let labels = d.path().join("l.pts");
    io::save_mesh(&mesh, &m).unwrap();
    // a rest shape three times larger makes the strain term order one, which
    // overflows once scaled by lambda_user
    io::save_mesh(&rest, &m.with_vertices(m.vertices.iter().map(|v| v * 3.0).collect())).unwrap();
    io::save_points(&labels, &base_surface_points(&m, None).unwrap()).unwrap();
    let cfg = fast_config(d.path(), 5);
    let out = run(&["tune", "--snap-mesh", p(&mesh), "--template", p(&rest), "--labels", p(&labels), "--config", p(&cfg), "--lambda-user", "1e308", "--out-dir", p(&d.path().join("o"))]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn prealign_recovers_translation_and_affine() {
    let d = tempfile::tempdir().unwrap();
    let m = slab([4, 3, 2], Vec3::new(1.5, 2.0, 1.0));
    let mesh = d.path().join("m.mesh");
    io::save_mesh(&mesh, &m).unwrap();
    let cfg = fast_config(d.path(), 10);
    let a = Mat3::new(1.1, 0.02, 0.0, -0.03, 0.95, 0.01, 0.0, 0.02, 1.05);
    let cases: [(&str, Mat3, Vec3); 3] = [
        ("identity", Mat3::identity(), Vec3::zeros()),
        ("translated", Mat3::identity(), Vec3::new(1.0, -2.0, 0.5)),
        ("affine", a, Vec3::new(0.3, 0.1, -0.2)),
    ];
    for (name, mat, t) in cases {
        let labels = d.path().join(format!("{name}.pts"));
        io::save_points(&labels, &base_surface_points(&m, None).unwrap().map_points(|q| mat * q + t)).unwrap();
        let out_dir = d.path().join(name);
        let out = run(&["prealign", "--template", p(&mesh), "--labels", p(&labels), "--config", p(&cfg), "--out-dir", p(&out_dir)]);
        assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        let r = json(&out_dir.join("prealign.json"));
        assert!(r["chamfer_mm2"].as_f64().unwrap() <= 1e-2, "{name}");
        let tr: Vec<f64> = r["affine"]["translation"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
        if name != "affine" {
            assert!((Vec3::from_vec(tr) - t).norm() <= 1e-3, "{name}");
        }
        assert!(out_dir.join("snap.mesh").exists());
    }
}

#[test]
fn attach_filter_mask_and_empty_mask() {
    let d = tempfile::tempdir().unwrap();
    let scene_dir = d.path().join("scene");
    assert!(run(&["gen-scene", "--kind", "calcified-tube", "--seed", "0", "--out-dir", p(&scene_dir)]).status.success());
    let out_dir = d.path().join("attach");
    let out = run(&["attach-filter", "--mesh", p(&scene_dir.join("ground_truth.mesh")), "--mask", p(&scene_dir.join("mask.raw")), "--out-dir", p(&out_dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let pairs = json(&out_dir.join("pairing.json"));
    let pairs = pairs.as_array().unwrap();
    assert_eq!(pairs.len(), 3);
    let mut comps: Vec<u64> = pairs.iter().map(|q| q["component"].as_u64().unwrap()).collect();
    comps.sort_unstable();
    assert_eq!(comps, vec![0, 1, 2]);
    assert!(pairs.iter().all(|q| q["retained_vertices"].as_u64().unwrap() > 0));

    let empty = d.path().join("empty.raw");
    io::save_mask(&empty, &VoxelMask::empty([2, 2, 2], Vec3::repeat(1.0), Vec3::zeros())).unwrap();
    let out = run(&["attach-filter", "--mesh", p(&scene_dir.join("template.mesh")), "--mask", p(&empty), "--out-dir", p(&out_dir)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn metrics_identity_row_is_zero() {
    let d = tempfile::tempdir().unwrap();
    let m = slab([2, 2, 1], Vec3::repeat(1.0));
    let mesh = d.path().join("m.mesh");
    let labels = d.path().join("l.pts");
    io::save_mesh(&mesh, &m).unwrap();
    io::save_points(&labels, &base_surface_points(&m, None).unwrap()).unwrap();
    let js = d.path().join("r.json");
    let out = run(&["metrics", "--mesh", p(&mesh), "--labels", p(&labels), "--reference", p(&mesh), "--json", p(&js)]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.lines().nth(1).unwrap().contains("0.000"));
    let r = json(&js);
    assert_eq!(r["cd_mm"].as_f64(), Some(0.0));
    assert_eq!(r["hd_mm"].as_f64(), Some(0.0));
    assert_eq!(r["thickness_err_mm"].as_f64(), Some(0.0));
    assert_eq!(r["min_scaled_jacobian"].as_f64(), Some(1.0));
}

#[test]
fn export_inp_reparses() {
    let d = tempfile::tempdir().unwrap();
    let m = hex_block([1, 1, 1], Vec3::repeat(2.0), Vec3::zeros());
    let mesh = d.path().join("cube.mesh");
    io::save_mesh(&mesh, &m).unwrap();
    let inp = d.path().join("cube.inp");
    assert!(run(&["export-inp", "--mesh", p(&mesh), "--out", p(&inp)]).status.success());
    let back = io::load_inp(&inp).unwrap();
    assert_eq!(back.cells, m.cells);
    assert_eq!(back.vertices.len(), 8);
}
