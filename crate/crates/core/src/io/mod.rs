//! File formats: text meshes and pointclouds, OBJ surfaces, raw masks,
//! JSON documents and INP export.

mod lines;
pub mod inp;
pub mod obj;
pub mod text;
pub mod volume;

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::Result;
use crate::mesh::{LabeledPointCloud, SurfaceMesh, VolumetricMesh};
use crate::pipeline::TuneConfig;
use crate::scene::Scene;

pub use inp::{inp_from_str, mesh_to_inp, InpMesh};
pub use obj::{surface_from_obj, surface_to_obj};
pub use text::{mesh_from_str, mesh_to_string, points_from_str, points_to_string, trace_to_csv};
pub use volume::{load_mask, save_mask, MaskHeader};

pub fn load_mesh(path: &Path) -> Result<VolumetricMesh> {
    mesh_from_str(&std::fs::read_to_string(path)?)
}

pub fn save_mesh(path: &Path, mesh: &VolumetricMesh) -> Result<()> {
    Ok(std::fs::write(path, mesh_to_string(mesh))?)
}

pub fn load_points(path: &Path) -> Result<LabeledPointCloud> {
    points_from_str(&std::fs::read_to_string(path)?)
}

pub fn save_points(path: &Path, cloud: &LabeledPointCloud) -> Result<()> {
    Ok(std::fs::write(path, points_to_string(cloud))?)
}

pub fn load_obj(path: &Path) -> Result<SurfaceMesh> {
    surface_from_obj(&std::fs::read_to_string(path)?)
}

pub fn save_obj(path: &Path, surface: &SurfaceMesh) -> Result<()> {
    Ok(std::fs::write(path, surface_to_obj(surface))?)
}

pub fn save_inp(path: &Path, mesh: &VolumetricMesh) -> Result<()> {
    Ok(std::fs::write(path, mesh_to_inp(mesh))?)
}

pub fn load_inp(path: &Path) -> Result<InpMesh> {
    inp_from_str(&std::fs::read_to_string(path)?)
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// Pretty JSON with a trailing newline.
pub fn save_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    Ok(std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?)
}

/// Flat JSON object of [`TuneConfig`] fields; missing keys take defaults.
pub fn load_config(path: &Path) -> Result<TuneConfig> {
    let cfg: TuneConfig = load_json(path)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Paths written by [`save_scene`].
#[derive(Debug, Clone)]
pub struct SceneFiles {
    pub template: PathBuf,
    pub ground_truth: PathBuf,
    pub labels: PathBuf,
    pub mask: Option<PathBuf>,
    pub manifest: PathBuf,
}

pub fn save_scene(dir: &Path, scene: &Scene) -> Result<SceneFiles> {
    std::fs::create_dir_all(dir)?;
    let files = SceneFiles {
        template: dir.join("template.mesh"),
        ground_truth: dir.join("ground_truth.mesh"),
        labels: dir.join("labels.pts"),
        mask: scene.mask.as_ref().map(|_| dir.join("mask.raw")),
        manifest: dir.join("manifest.json"),
    };
    save_mesh(&files.template, &scene.template)?;
    save_mesh(&files.ground_truth, &scene.ground_truth)?;
    save_points(&files.labels, &scene.labels)?;
    if let (Some(m), Some(p)) = (&scene.mask, &files.mask) {
        save_mask(p, m)?;
    }
    save_json(&files.manifest, &scene.manifest)?;
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::scene::{generate, SceneKind};

    #[test]
    fn scene_files_are_byte_identical_across_runs() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        for kind in SceneKind::ALL {
            let fa = save_scene(&a.path().join(kind.name()), &generate(kind, 0).unwrap()).unwrap();
            let fb = save_scene(&b.path().join(kind.name()), &generate(kind, 0).unwrap()).unwrap();
            for (x, y) in [(&fa.template, &fb.template), (&fa.labels, &fb.labels), (&fa.manifest, &fb.manifest)] {
                assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
            }
            let m = load_mesh(&fa.ground_truth).unwrap();
            assert_eq!(m, generate(kind, 0).unwrap().ground_truth);
            if let Some(p) = &fa.mask {
                assert_eq!(&load_mask(p).unwrap(), generate(kind, 0).unwrap().mask.as_ref().unwrap());
            }
        }
    }

    #[test]
    fn config_file_overrides_and_rejects() {
        let d = tempfile::tempdir().unwrap();
        let p = d.path().join("c.json");
        std::fs::write(&p, r#"{"iterations": 5, "tau_cos": 0.9}"#).unwrap();
        let c = load_config(&p).unwrap();
        assert_eq!((c.iterations, c.tau_cos), (5, 0.9));
        std::fs::write(&p, r#"{"tau_cos": 3}"#).unwrap();
        assert!(matches!(load_config(&p), Err(Error::Config(_))));
        std::fs::write(&p, r#"{"unknown": 3}"#).unwrap();
        assert!(matches!(load_config(&p), Err(Error::Json(_))));
    }
}
