//! Spatial accuracy and element quality metrics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Mat3, Vec3};
use crate::loss::NearestNeighborIndex;
use crate::mesh::{stack_thickness, CellKind, LabeledPointCloud, VolumetricMesh};

/// Corner edge triples of an 8-node hex, right-handed for a positive cell.
const HEX_CORNERS: [[usize; 4]; 8] = [
    [0, 1, 3, 4],
    [1, 2, 0, 5],
    [2, 3, 1, 6],
    [3, 0, 2, 7],
    [4, 7, 5, 0],
    [5, 4, 6, 1],
    [6, 5, 7, 2],
    [7, 6, 4, 3],
];

/// Summary row for one mesh.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MeshReport {
    pub cd_mm: Option<f64>,
    pub hd_mm: Option<f64>,
    pub thickness_err_mm: Option<f64>,
    pub min_scaled_jacobian: f64,
    pub mean_scaled_jacobian: f64,
    pub mean_skew: Option<f64>,
    pub max_skew: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub runtime_sec: BTreeMap<String, f64>,
}

impl MeshReport {
    /// Element-quality part of the report; distance fields are filled by the
    /// caller when references are available.
    pub fn quality(mesh: &VolumetricMesh) -> Self {
        let sj = scaled_jacobian(mesh);
        let (min, mean) = min_mean(&sj);
        let (mean_skew, max_skew) = match skew(mesh) {
            Ok(s) => {
                let (_, mean) = min_mean(&s);
                let max = s.iter().copied().fold(0.0, f64::max);
                (Some(mean), Some(max))
            }
            Err(_) => (None, None),
        };
        Self {
            min_scaled_jacobian: min,
            mean_scaled_jacobian: mean,
            mean_skew,
            max_skew,
            ..Default::default()
        }
    }

    pub fn table_header() -> String {
        format!(
            "{:<16} {:>9} {:>9} {:>11} {:>9} {:>9} {:>9} {:>9}",
            "method", "CD(mm)", "HD(mm)", "Thick(mm)", "minJac", "|Jac|", "Skew", "RT(s)"
        )
    }

    pub fn table_row(&self, label: &str) -> String {
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3}"));
        let rt: f64 = self.runtime_sec.values().sum();
        format!(
            "{:<16} {:>9} {:>9} {:>11} {:>9.3} {:>9.3} {:>9} {:>9}",
            label,
            opt(self.cd_mm),
            opt(self.hd_mm),
            opt(self.thickness_err_mm),
            self.min_scaled_jacobian,
            self.mean_scaled_jacobian,
            opt(self.mean_skew),
            if self.runtime_sec.is_empty() {
                "-".to_string()
            } else {
                format!("{rt:.2}")
            }
        )
    }
}

fn min_mean(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    (min, v.iter().sum::<f64>() / v.len() as f64)
}

fn check_classes(x: &LabeledPointCloud, y: &LabeledPointCloud) -> Result<()> {
    if x.num_classes() != y.num_classes() {
        return Err(Error::ClassMismatch(x.num_classes(), y.num_classes()));
    }
    x.require_nonempty("metric input")?;
    y.require_nonempty("metric reference")
}

fn nearest_distances(from: &[Vec3], to: &[Vec3]) -> Vec<f64> {
    let idx = NearestNeighborIndex::new(to);
    from.iter().map(|p| idx.nearest(p).dist2.sqrt()).collect()
}

/// Class-averaged symmetric mean of Euclidean nearest-neighbor distances (mm).
pub fn chamfer_metric(x: &LabeledPointCloud, y: &LabeledPointCloud) -> Result<f64> {
    check_classes(x, y)?;
    let n = x.num_classes() as f64;
    Ok(x.classes
        .iter()
        .zip(&y.classes)
        .map(|(a, b)| {
            let ab = nearest_distances(a, b);
            let ba = nearest_distances(b, a);
            0.5 * (ab.iter().sum::<f64>() / ab.len() as f64 + ba.iter().sum::<f64>() / ba.len() as f64)
        })
        .sum::<f64>()
        / n)
}

/// Class-averaged symmetric Hausdorff distance (mm).
pub fn hausdorff_metric(x: &LabeledPointCloud, y: &LabeledPointCloud) -> Result<f64> {
    check_classes(x, y)?;
    let n = x.num_classes() as f64;
    Ok(x.classes
        .iter()
        .zip(&y.classes)
        .map(|(a, b)| {
            let ab = nearest_distances(a, b).into_iter().fold(0.0, f64::max);
            let ba = nearest_distances(b, a).into_iter().fold(0.0, f64::max);
            ab.max(ba)
        })
        .sum::<f64>()
        / n)
}

/// Mean absolute difference of per-base-face stack thickness.
pub fn thickness_error(mesh: &VolumetricMesh, reference: &VolumetricMesh) -> Result<f64> {
    mesh.check_same_connectivity(reference)?;
    let a = stack_thickness(mesh)?;
    let b = stack_thickness(reference)?;
    if a.is_empty() {
        return Err(Error::EmptyBaseClass(0));
    }
    Ok(a.iter().zip(&b).map(|(s, t)| (s - t).abs()).sum::<f64>() / a.len() as f64)
}

fn hex_scaled_jacobian(p: &[Vec3; 8]) -> f64 {
    let mut min = f64::INFINITY;
    for [c, a, b, d] in HEX_CORNERS {
        let e = [p[a] - p[c], p[b] - p[c], p[d] - p[c]];
        let lens = [e[0].norm(), e[1].norm(), e[2].norm()];
        if lens.contains(&0.0) {
            log::warn!("zero-length hex edge; scaled Jacobian set to 0");
            return 0.0;
        }
        let m = Mat3::from_columns(&[e[0] / lens[0], e[1] / lens[1], e[2] / lens[2]]);
        min = min.min(m.determinant());
    }
    min.clamp(-1.0, 1.0)
}

fn tet_scaled_jacobian(p: &[Vec3; 4]) -> f64 {
    let det = Mat3::from_columns(&[p[1] - p[0], p[2] - p[0], p[3] - p[0]]).determinant();
    let l = |a: usize, b: usize| (p[a] - p[b]).norm();
    let products = [
        l(0, 1) * l(0, 2) * l(0, 3),
        l(1, 0) * l(1, 2) * l(1, 3),
        l(2, 0) * l(2, 1) * l(2, 3),
        l(3, 0) * l(3, 1) * l(3, 2),
    ];
    let max = products.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        log::warn!("zero-length tet edge; scaled Jacobian set to 0");
        return 0.0;
    }
    (det * std::f64::consts::SQRT_2 / max).clamp(-1.0, 1.0)
}

/// Per-cell scaled Jacobian in [-1, 1]; 1 for a cube or regular tet.
pub fn scaled_jacobian(mesh: &VolumetricMesh) -> Vec<f64> {
    mesh.cells
        .iter()
        .map(|c| match c.kind {
            CellKind::Hex => {
                let p: [Vec3; 8] = std::array::from_fn(|k| mesh.vertices[c.nodes[k]]);
                hex_scaled_jacobian(&p)
            }
            CellKind::Tet => {
                let p: [Vec3; 4] = std::array::from_fn(|k| mesh.vertices[c.nodes[k]]);
                tet_scaled_jacobian(&p)
            }
        })
        .collect()
}

fn hex_skew(p: &[Vec3; 8]) -> Option<f64> {
    let axes = [
        (p[1] + p[2] + p[5] + p[6]) - (p[0] + p[3] + p[4] + p[7]),
        (p[2] + p[3] + p[6] + p[7]) - (p[0] + p[1] + p[4] + p[5]),
        (p[4] + p[5] + p[6] + p[7]) - (p[0] + p[1] + p[2] + p[3]),
    ];
    let mut unit = [Vec3::zeros(); 3];
    for k in 0..3 {
        let len = axes[k].norm();
        if len == 0.0 {
            return None;
        }
        unit[k] = axes[k] / len;
    }
    Some(
        [(0, 1), (0, 2), (1, 2)]
            .iter()
            .map(|&(a, b)| unit[a].dot(&unit[b]).abs())
            .fold(0.0, f64::max)
            .min(1.0),
    )
}

/// Per-cell skew in [0, 1] from the principal axes of each hexahedron.
/// Degenerate axes score 1.
pub fn skew(mesh: &VolumetricMesh) -> Result<Vec<f64>> {
    if !mesh.is_all_hex() {
        return Err(Error::InvalidMesh("skew is defined for hexahedra only".into()));
    }
    Ok(mesh
        .cells
        .iter()
        .enumerate()
        .map(|(ci, c)| {
            let p: [Vec3; 8] = std::array::from_fn(|k| mesh.vertices[c.nodes[k]]);
            hex_skew(&p).unwrap_or_else(|| {
                log::warn!("cell {ci} has a degenerate principal axis");
                1.0
            })
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::rotation;
    use crate::scene::primitives::{hex_block, slab};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cube() -> VolumetricMesh {
        hex_block([1, 1, 1], Vec3::repeat(1.0), Vec3::zeros())
    }

    #[test]
    fn unit_cube_quality() {
        let m = cube();
        assert!((scaled_jacobian(&m)[0] - 1.0).abs() < 1e-15);
        assert_eq!(skew(&m).unwrap()[0], 0.0);
    }

    #[test]
    fn every_corner_of_unit_cube_is_one() {
        let m = cube();
        let p: [Vec3; 8] = std::array::from_fn(|k| m.vertices[m.cells[0].nodes[k]]);
        for [c, a, b, d] in HEX_CORNERS {
            let det = Mat3::from_columns(&[p[a] - p[c], p[b] - p[c], p[d] - p[c]]).determinant();
            assert!((det - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn inverted_cube_is_negative() {
        let mut m = cube();
        m.vertices[6] = Vec3::new(-0.3, -0.3, -0.3);
        assert!(scaled_jacobian(&m)[0] < 0.0);
    }

    #[test]
    fn sheared_cube_matches_corner_dets() {
        let mut m = cube();
        for v in m.vertices.iter_mut() {
            v.x += 0.5 * v.z;
        }
        // independent closed form: corner frames have edges x, y and (0.5, 0, 1)
        // or its negation; each normalized det is 1 / sqrt(1.25)
        let expected = 1.0 / 1.25f64.sqrt();
        assert!((scaled_jacobian(&m)[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn sheared_45_degrees_skew() {
        let mut m = cube();
        for v in m.vertices.iter_mut() {
            v.x += v.z;
        }
        assert!((skew(&m).unwrap()[0] - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn regular_tet_scores_one() {
        let p = [
            Vec3::new(1.0, 1.0, 1.0),
            Vec3::new(1.0, -1.0, -1.0),
            Vec3::new(-1.0, 1.0, -1.0),
            Vec3::new(-1.0, -1.0, 1.0),
        ];
        let det = Mat3::from_columns(&[p[1] - p[0], p[2] - p[0], p[3] - p[0]]).determinant();
        let p = if det > 0.0 { p } else { [p[0], p[2], p[1], p[3]] };
        assert!((tet_scaled_jacobian(&p) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn skew_matches_direct_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let mut m = cube();
            for v in m.vertices.iter_mut() {
                *v += Vec3::new(rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2));
            }
            let p: Vec<Vec3> = m.cells[0].nodes.iter().map(|&n| m.vertices[n]).collect();
            let ax = |plus: [usize; 4], minus: [usize; 4]| {
                let mut s = Vec3::zeros();
                for k in 0..4 {
                    s += p[plus[k]] - p[minus[k]];
                }
                s.normalize()
            };
            let a = ax([1, 2, 5, 6], [0, 3, 4, 7]);
            let b = ax([3, 2, 7, 6], [0, 1, 4, 5]);
            let c = ax([4, 5, 6, 7], [0, 1, 2, 3]);
            let expected = a.dot(&b).abs().max(a.dot(&c).abs()).max(b.dot(&c).abs());
            assert!((skew(&m).unwrap()[0] - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn quality_is_rigid_and_scale_invariant() {
        let mut m = hex_block([2, 2, 2], Vec3::new(1.0, 1.3, 0.8), Vec3::zeros());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for v in m.vertices.iter_mut() {
            *v += Vec3::new(rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1));
        }
        let q = rotation(&Vec3::new(1.0, 0.3, -0.2), 2.1);
        let moved = m.with_vertices(m.vertices.iter().map(|v| q * v * 3.5 + Vec3::new(4.0, 5.0, 6.0)).collect());
        for (a, b) in scaled_jacobian(&m).iter().zip(scaled_jacobian(&moved)) {
            assert!((a - b).abs() < 1e-10);
        }
        for (a, b) in skew(&m).unwrap().iter().zip(skew(&moved).unwrap()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    fn cloud(points: &[[f64; 3]]) -> LabeledPointCloud {
        LabeledPointCloud::new(vec![points.iter().map(|p| Vec3::new(p[0], p[1], p[2])).collect()])
    }

    #[test]
    fn distance_metrics_basic_values() {
        let a = cloud(&[[0.0, 0.0, 0.0]]);
        let b = cloud(&[[1.0, 0.0, 0.0]]);
        assert_eq!(chamfer_metric(&a, &a).unwrap(), 0.0);
        assert_eq!(hausdorff_metric(&a, &a).unwrap(), 0.0);
        assert!((chamfer_metric(&a, &b).unwrap() - 1.0).abs() < 1e-15);

        let x = cloud(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]]);
        let y = cloud(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0], [2.0, 5.0, 0.0]]);
        assert!((hausdorff_metric(&x, &y).unwrap() - 5.0).abs() < 1e-15);
        assert!(chamfer_metric(&x, &y).unwrap() <= hausdorff_metric(&x, &y).unwrap());
    }

    #[test]
    fn hausdorff_matches_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut pts = |n: usize| -> Vec<Vec3> {
            (0..n)
                .map(|_| Vec3::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)))
                .collect()
        };
        let x = LabeledPointCloud::new(vec![pts(40), pts(15)]);
        let y = LabeledPointCloud::new(vec![pts(33), pts(20)]);
        let brute = |a: &[Vec3], b: &[Vec3]| {
            a.iter()
                .map(|p| b.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
                .fold(0.0, f64::max)
        };
        let expected = (0..2)
            .map(|c| brute(&x.classes[c], &y.classes[c]).max(brute(&y.classes[c], &x.classes[c])))
            .sum::<f64>()
            / 2.0;
        assert!((hausdorff_metric(&x, &y).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn empty_class_is_an_error() {
        let a = LabeledPointCloud::new(vec![vec![]]);
        let b = cloud(&[[0.0, 0.0, 0.0]]);
        assert!(chamfer_metric(&a, &b).is_err());
        assert!(hausdorff_metric(&b, &a).is_err());
    }

    #[test]
    fn thickness_error_of_inflated_slab() {
        let m = slab([2, 2, 2], Vec3::new(1.0, 1.0, 0.5));
        assert_eq!(thickness_error(&m, &m).unwrap(), 0.0);
        // uniform +0.5 mm wall: stretch z by (1.0 + 0.5) / 1.0
        let thick = m.with_vertices(m.vertices.iter().map(|v| Vec3::new(v.x, v.y, v.z * 1.5)).collect());
        assert!((thickness_error(&thick, &m).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn thickness_error_needs_same_connectivity() {
        let a = slab([2, 2, 2], Vec3::repeat(1.0));
        let b = slab([2, 2, 1], Vec3::repeat(1.0));
        assert!(matches!(thickness_error(&a, &b), Err(Error::ConnectivityMismatch(_))));
    }
}
