use crate::geom::Vec3;

/// Result of a nearest-neighbor query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub point: Vec3,
    pub dist2: f64,
}

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

const LEAF_SIZE: usize = 8;

/// Exact kd-tree over a point set. Ties in distance resolve to the lowest
/// point index.
#[derive(Debug, Clone)]
pub struct NearestNeighborIndex {
    points: Vec<Vec3>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl NearestNeighborIndex {
    pub fn new(points: &[Vec3]) -> Self {
        let mut idx = Self {
            points: points.to_vec(),
            order: (0..points.len()).collect(),
            nodes: Vec::new(),
        };
        if !points.is_empty() {
            idx.build(0, points.len());
        }
        idx
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let (mut lo, mut hi) = (Vec3::repeat(f64::INFINITY), Vec3::repeat(f64::NEG_INFINITY));
        for &i in &self.order[start..end] {
            lo = lo.inf(&self.points[i]);
            hi = hi.sup(&self.points[i]);
        }
        let axis = (hi - lo).imax();
        if hi[axis] == lo[axis] {
            // all points coincide
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let mid = start + (end - start) / 2;
        let pts = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            pts[a][axis]
                .partial_cmp(&pts[b][axis])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        let value = self.points[self.order[mid]][axis];
        self.nodes.push(Node::Leaf { start: 0, end: 0 });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }

    /// Exact nearest neighbor. Panics on an empty index.
    pub fn nearest(&self, q: &Vec3) -> Neighbor {
        assert!(!self.points.is_empty(), "nearest() on an empty index");
        let mut best = (f64::INFINITY, usize::MAX);
        self.search(0, q, &mut best);
        Neighbor {
            index: best.1,
            point: self.points[best.1],
            dist2: best.0,
        }
    }

    fn search(&self, node: usize, q: &Vec3, best: &mut (f64, usize)) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let d = (self.points[i] - q).norm_squared();
                    if d < best.0 || (d == best.0 && i < best.1) {
                        *best = (d, i);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, best);
                // equality keeps the far side in play so index ties resolve
                if diff * diff <= best.0 {
                    self.search(far, q, best);
                }
            }
        }
    }
}

/// Reference O(n) scan with the same tie rule.
pub fn brute_force_nearest(points: &[Vec3], q: &Vec3) -> Neighbor {
    let mut best = (f64::INFINITY, usize::MAX);
    for (i, p) in points.iter().enumerate() {
        let d = (p - q).norm_squared();
        if d < best.0 {
            best = (d, i);
        }
    }
    Neighbor {
        index: best.1,
        point: points[best.1],
        dist2: best.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matches_brute_force_on_random_queries() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let pts: Vec<Vec3> = (0..2000)
            .map(|_| Vec3::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0), rng.gen_range(-3.0..3.0)))
            .collect();
        let idx = NearestNeighborIndex::new(&pts);
        for _ in 0..1000 {
            let q = Vec3::new(rng.gen_range(-12.0..12.0), rng.gen_range(-12.0..12.0), rng.gen_range(-5.0..5.0));
            assert_eq!(idx.nearest(&q), brute_force_nearest(&pts, &q));
        }
    }

    #[test]
    fn ties_break_to_lowest_index() {
        // integer lattice with duplicates gives many exact ties
        let mut pts = Vec::new();
        for i in 0..6 {
            for j in 0..6 {
                for k in 0..3 {
                    pts.push(Vec3::new(i as f64, j as f64, k as f64));
                }
            }
        }
        let dup = pts.clone();
        pts.extend(dup);
        let idx = NearestNeighborIndex::new(&pts);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let q = Vec3::new(
                rng.gen_range(0..12) as f64 * 0.5,
                rng.gen_range(0..12) as f64 * 0.5,
                rng.gen_range(0..6) as f64 * 0.5,
            );
            assert_eq!(idx.nearest(&q), brute_force_nearest(&pts, &q));
        }
    }

    #[test]
    fn coincident_points() {
        let pts = vec![Vec3::new(1.0, 1.0, 1.0); 20];
        let idx = NearestNeighborIndex::new(&pts);
        let n = idx.nearest(&Vec3::zeros());
        assert_eq!(n.index, 0);
        assert!((n.dist2 - 3.0).abs() < 1e-15);
    }
}
