//! Binary masks: raw bytes (one per voxel, x fastest) plus a JSON sidecar.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::attach::VoxelMask;
use crate::error::{Error, Result};
use crate::geom::Vec3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskHeader {
    pub dims: [usize; 3],
    pub spacing_mm: [f64; 3],
    pub origin_mm: [f64; 3],
}

/// `<raw path>.json`
pub fn sidecar_path(raw: &Path) -> PathBuf {
    let mut s = raw.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn save_mask(raw: &Path, mask: &VoxelMask) -> Result<()> {
    let bytes: Vec<u8> = mask.values.iter().map(|&v| v as u8).collect();
    std::fs::write(raw, bytes)?;
    let header = MaskHeader {
        dims: mask.dims,
        spacing_mm: mask.spacing.into(),
        origin_mm: mask.origin.into(),
    };
    std::fs::write(sidecar_path(raw), serde_json::to_string_pretty(&header)? + "\n")?;
    Ok(())
}

/// Any nonzero byte is occupied.
pub fn mask_from_bytes(header: &MaskHeader, bytes: &[u8]) -> Result<VoxelMask> {
    let n: usize = header.dims.iter().product();
    if bytes.len() != n {
        return Err(Error::Config(format!(
            "mask has {} bytes but dims {:?} need {n}",
            bytes.len(),
            header.dims
        )));
    }
    VoxelMask::new(
        header.dims,
        Vec3::from(header.spacing_mm),
        Vec3::from(header.origin_mm),
        bytes.iter().map(|&b| b != 0).collect(),
    )
}

pub fn load_mask(raw: &Path) -> Result<VoxelMask> {
    let header: MaskHeader = serde_json::from_str(&std::fs::read_to_string(sidecar_path(raw))?)?;
    mask_from_bytes(&header, &std::fs::read(raw)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_size_check() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = VoxelMask::empty([3, 2, 4], Vec3::new(1.25, 0.5, 2.0), Vec3::new(-1.0, 0.1, 7.0));
        m.set(2, 1, 3, true);
        m.set(0, 0, 0, true);
        let p = dir.path().join("mask.raw");
        save_mask(&p, &m).unwrap();
        assert_eq!(std::fs::read(&p).unwrap().len(), 24);
        assert_eq!(load_mask(&p).unwrap(), m);
        std::fs::write(&p, [0u8; 23]).unwrap();
        assert!(matches!(load_mask(&p), Err(Error::Config(_))));
    }
}
