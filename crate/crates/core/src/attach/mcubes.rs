//! Marching cubes on binary masks at level 0.5.
//!
//! The 256-case table is derived at first use from per-face rules: every
//! cube face contributes one segment per sign change pair, with diagonal
//! (ambiguous) faces separating the inside corners. Neighboring cubes share
//! faces, so the rule yields a closed, consistently oriented surface.

use std::collections::HashMap;
use std::sync::OnceLock;

use crate::attach::mask::VoxelMask;
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::mesh::SurfaceMesh;

/// Corner `c` of the unit cube sits at `(c & 1, (c >> 1) & 1, (c >> 2) & 1)`.
fn corner(c: usize) -> Vec3 {
    Vec3::new((c & 1) as f64, ((c >> 1) & 1) as f64, ((c >> 2) & 1) as f64)
}

/// The 12 cube edges as `(lower corner, axis)`.
fn edges() -> [(usize, usize); 12] {
    let mut out = [(0, 0); 12];
    let mut n = 0;
    for axis in 0..3 {
        for c in 0..8 {
            if c & (1 << axis) == 0 {
                out[n] = (c, axis);
                n += 1;
            }
        }
    }
    out
}

fn edge_between(a: usize, b: usize) -> usize {
    let lo = a.min(b);
    let axis = (a ^ b).trailing_zeros() as usize;
    edges().iter().position(|&e| e == (lo, axis)).expect("corners differ in one bit")
}

fn edge_midpoint(e: usize) -> Vec3 {
    let (c, axis) = edges()[e];
    let mut p = corner(c);
    p[axis] += 0.5;
    p
}

/// Triangles (as cube edge ids) for one inside-corner bit pattern.
fn triangulate_case(case: usize) -> Vec<[u8; 3]> {
    let inside = |c: usize| case >> c & 1 == 1;
    let mut next: HashMap<usize, usize> = HashMap::new();
    for axis in 0..3 {
        let (b, c) = ((axis + 1) % 3, (axis + 2) % 3);
        for side in 0..2 {
            let normal = {
                let mut n = Vec3::zeros();
                n[axis] = if side == 1 { 1.0 } else { -1.0 };
                n
            };
            let ring: Vec<usize> = [(0, 0), (1, 0), (1, 1), (0, 1)]
                .iter()
                .map(|&(u, v)| (side << axis) | (u << b) | (v << c))
                .collect();
            let crossing: Vec<usize> = (0..4).filter(|&i| inside(ring[i]) != inside(ring[(i + 1) % 4])).collect();
            let mut push = |e1: usize, e2: usize, out_dir: Vec3| {
                let d = out_dir.cross(&normal);
                let (s, t) = if (edge_midpoint(e2) - edge_midpoint(e1)).dot(&d) > 0.0 {
                    (e1, e2)
                } else {
                    (e2, e1)
                };
                next.insert(s, t);
            };
            match crossing.len() {
                0 => {}
                2 => {
                    let e1 = edge_between(ring[crossing[0]], ring[(crossing[0] + 1) % 4]);
                    let e2 = edge_between(ring[crossing[1]], ring[(crossing[1] + 1) % 4]);
                    let mean = |want: bool| {
                        let pts: Vec<Vec3> = ring.iter().filter(|&&q| inside(q) == want).map(|&q| corner(q)).collect();
                        pts.iter().sum::<Vec3>() / pts.len() as f64
                    };
                    push(e1, e2, mean(false) - mean(true));
                }
                4 => {
                    let center = ring.iter().map(|&q| corner(q)).sum::<Vec3>() / 4.0;
                    for i in 0..4 {
                        if inside(ring[i]) {
                            let e1 = edge_between(ring[(i + 3) % 4], ring[i]);
                            let e2 = edge_between(ring[i], ring[(i + 1) % 4]);
                            push(e1, e2, center - corner(ring[i]));
                        }
                    }
                }
                _ => unreachable!("odd number of sign changes on a face"),
            }
        }
    }
    let mut tris = Vec::new();
    let mut starts: Vec<usize> = next.keys().copied().collect();
    starts.sort_unstable();
    let mut used = [false; 12];
    for s in starts {
        if used[s] {
            continue;
        }
        let mut ring = vec![s];
        used[s] = true;
        let mut cur = next[&s];
        while cur != s {
            used[cur] = true;
            ring.push(cur);
            cur = next[&cur];
        }
        for i in 1..ring.len() - 1 {
            tris.push([ring[0] as u8, ring[i] as u8, ring[i + 1] as u8]);
        }
    }
    tris
}

fn case_table() -> &'static Vec<Vec<[u8; 3]>> {
    static TABLE: OnceLock<Vec<Vec<[u8; 3]>>> = OnceLock::new();
    TABLE.get_or_init(|| (0..256).map(triangulate_case).collect())
}

/// Closed triangle surface around the occupied voxels, in world coordinates.
/// The mask is treated as surrounded by empty voxels.
pub fn isosurface(mask: &VoxelMask) -> Result<SurfaceMesh> {
    if mask.count() == 0 {
        return Err(Error::EmptyMask);
    }
    let table = case_table();
    let cube_edges = edges();
    // padded node (p, q, r) is voxel (p - 1, q - 1, r - 1)
    let pd = [mask.dims[0] + 2, mask.dims[1] + 2, mask.dims[2] + 2];
    let occupied = |p: usize, q: usize, r: usize| -> bool {
        p >= 1 && q >= 1 && r >= 1 && p <= mask.dims[0] && q <= mask.dims[1] && r <= mask.dims[2] && mask.get(p - 1, q - 1, r - 1)
    };
    let mut vertex_of: HashMap<(usize, usize), usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for r in 0..pd[2] - 1 {
        for q in 0..pd[1] - 1 {
            for p in 0..pd[0] - 1 {
                let mut case = 0;
                for c in 0..8 {
                    if occupied(p + (c & 1), q + ((c >> 1) & 1), r + ((c >> 2) & 1)) {
                        case |= 1 << c;
                    }
                }
                if case == 0 || case == 255 {
                    continue;
                }
                for tri in &table[case] {
                    let mut ids = [0usize; 3];
                    for (slot, &e) in tri.iter().enumerate() {
                        let (c, axis) = cube_edges[e as usize];
                        let node = [p + (c & 1), q + ((c >> 1) & 1), r + ((c >> 2) & 1)];
                        let key = (node[0] + pd[0] * (node[1] + pd[1] * node[2]), axis);
                        ids[slot] = *vertex_of.entry(key).or_insert_with(|| {
                            let mut g = Vec3::new(node[0] as f64 - 1.0, node[1] as f64 - 1.0, node[2] as f64 - 1.0);
                            g[axis] += 0.5;
                            vertices.push(mask.origin + g.component_mul(&mask.spacing));
                            vertices.len() - 1
                        });
                    }
                    faces.push(ids);
                }
            }
        }
    }
    SurfaceMesh::new(vertices, faces)
}
