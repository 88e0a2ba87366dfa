//! Structured meshes used by the scene generator and tests.

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::geom::Vec3;
use crate::mesh::{BaseFace, Cell, SurfaceMesh, VolumetricMesh};

/// Axis-aligned block of `dims` hexahedra; no base faces.
pub fn hex_block(dims: [usize; 3], spacing: Vec3, origin: Vec3) -> VolumetricMesh {
    let [nx, ny, nz] = dims;
    let id = |i: usize, j: usize, k: usize| i + (nx + 1) * (j + (ny + 1) * k);
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push(
                    origin
                        + Vec3::new(
                            i as f64 * spacing.x,
                            j as f64 * spacing.y,
                            k as f64 * spacing.z,
                        ),
                );
            }
        }
    }
    let mut cells = Vec::with_capacity(nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                cells.push(Cell::hex(
                    0,
                    [
                        id(i, j, k),
                        id(i + 1, j, k),
                        id(i + 1, j + 1, k),
                        id(i, j + 1, k),
                        id(i, j, k + 1),
                        id(i + 1, j, k + 1),
                        id(i + 1, j + 1, k + 1),
                        id(i, j + 1, k + 1),
                    ],
                ));
            }
        }
    }
    VolumetricMesh {
        vertices,
        cells,
        base_faces: vec![],
        component_names: vec!["block".into()],
    }
}

/// Block at the origin whose bottom (z = 0) faces form base class 0.
pub fn slab(dims: [usize; 3], spacing: Vec3) -> VolumetricMesh {
    let mut m = hex_block(dims, spacing, Vec3::zeros());
    let per_layer = dims[0] * dims[1];
    m.base_faces = (0..per_layer)
        .map(|cell| BaseFace {
            class: 0,
            cell,
            face: 0,
        })
        .collect();
    m.component_names = vec!["slab".into()];
    m
}

struct TubeBuilder {
    vertices: Vec<Vec3>,
    cells: Vec<Cell>,
    base_faces: Vec<BaseFace>,
}

impl TubeBuilder {
    /// Adds a wall patch spanning `[theta0, theta1]`; `closed` wraps the
    /// angular direction. Returns the cell range of the patch.
    #[allow(clippy::too_many_arguments)]
    fn patch(
        &mut self,
        component: usize,
        n_axial: usize,
        n_theta: usize,
        n_radial: usize,
        r_inner: f64,
        r_outer: f64,
        length: f64,
        theta: (f64, f64),
        closed: bool,
    ) -> std::ops::Range<usize> {
        let base = self.vertices.len();
        let nt_nodes = if closed { n_theta } else { n_theta + 1 };
        let id = |a: usize, t: usize, r: usize| {
            base + r + (n_radial + 1) * ((t % nt_nodes) + nt_nodes * a)
        };
        for a in 0..=n_axial {
            for t in 0..nt_nodes {
                for r in 0..=n_radial {
                    let th = theta.0 + (theta.1 - theta.0) * t as f64 / n_theta as f64;
                    let rad = r_inner + (r_outer - r_inner) * r as f64 / n_radial as f64;
                    let z = length * a as f64 / n_axial as f64;
                    self.vertices
                        .push(Vec3::new(rad * th.cos(), rad * th.sin(), z));
                }
            }
        }
        let first = self.cells.len();
        for a in 0..n_axial {
            for t in 0..n_theta {
                for r in 0..n_radial {
                    // local axes: xi1 radial, xi2 angular, xi3 axial
                    self.cells.push(Cell::hex(
                        component,
                        [
                            id(a, t, r),
                            id(a, t, r + 1),
                            id(a, t + 1, r + 1),
                            id(a, t + 1, r),
                            id(a + 1, t, r),
                            id(a + 1, t, r + 1),
                            id(a + 1, t + 1, r + 1),
                            id(a + 1, t + 1, r),
                        ],
                    ));
                }
            }
        }
        first..self.cells.len()
    }
}

/// Closed circular tube along +z. Base class 0 is the inner (lumen) wall,
/// class 1 the outer wall.
pub fn tube(
    n_axial: usize,
    n_theta: usize,
    n_radial: usize,
    r_inner: f64,
    r_outer: f64,
    length: f64,
) -> VolumetricMesh {
    let mut b = TubeBuilder {
        vertices: vec![],
        cells: vec![],
        base_faces: vec![],
    };
    let cells = b.patch(
        0, n_axial, n_theta, n_radial, r_inner, r_outer, length, (0.0, 2.0 * PI), true,
    );
    for (k, cell) in cells.enumerate() {
        let r = k % n_radial;
        if r == 0 {
            b.base_faces.push(BaseFace { class: 0, cell, face: 5 });
        }
        if r == n_radial - 1 {
            b.base_faces.push(BaseFace { class: 1, cell, face: 3 });
        }
    }
    b.base_faces.sort_by_key(|f| (f.class, f.cell));
    VolumetricMesh::new(b.vertices, b.cells, b.base_faces, vec!["wall".into()])
        .expect("tube is valid by construction")
}

/// Tube split into `n_sectors` angular components with duplicated seam
/// vertices. Base class `s` is the outer wall of sector `s`.
pub fn sector_tube(
    n_sectors: usize,
    n_axial: usize,
    n_theta_per_sector: usize,
    n_radial: usize,
    r_inner: f64,
    r_outer: f64,
    length: f64,
) -> VolumetricMesh {
    let mut b = TubeBuilder {
        vertices: vec![],
        cells: vec![],
        base_faces: vec![],
    };
    let mut names = Vec::new();
    for s in 0..n_sectors {
        let t0 = 2.0 * PI * s as f64 / n_sectors as f64;
        let t1 = 2.0 * PI * (s + 1) as f64 / n_sectors as f64;
        let cells = b.patch(
            s,
            n_axial,
            n_theta_per_sector,
            n_radial,
            r_inner,
            r_outer,
            length,
            (t0, t1),
            false,
        );
        for (k, cell) in cells.enumerate() {
            if k % n_radial == n_radial - 1 {
                b.base_faces.push(BaseFace { class: s, cell, face: 3 });
            }
        }
        names.push(format!("sector{s}"));
    }
    VolumetricMesh::new(b.vertices, b.cells, b.base_faces, names)
        .expect("sector tube is valid by construction")
}

/// Unit-radius icosahedron refined `level` times by midpoint subdivision,
/// projected to `radius`. Faces are outward-oriented.
pub fn icosphere(level: usize, radius: f64) -> SurfaceMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut v: Vec<Vec3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut f: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, v: &mut Vec<Vec3>| {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                v.push(((v[a] + v[b]) * 0.5).normalize());
                v.len() - 1
            })
        };
        let mut next = Vec::with_capacity(f.len() * 4);
        for [a, b, c] in f {
            let ab = midpoint(a, b, &mut v);
            let bc = midpoint(b, c, &mut v);
            let ca = midpoint(c, a, &mut v);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        f = next;
    }
    SurfaceMesh {
        vertices: v.into_iter().map(|p| p * radius).collect(),
        faces: f,
        component: None,
        source_vertices: None,
    }
}
