use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::loss::nn::NearestNeighborIndex;
use crate::mesh::LabeledPointCloud;

/// Value of a one-sided chamfer term with gradients w.r.t. both sets.
/// Nearest-neighbor assignments are frozen at evaluation time.
#[derive(Debug, Clone)]
pub struct SidedChamfer {
    pub value: f64,
    /// Gradient w.r.t. the source set `A`.
    pub grad_source: Vec<Vec3>,
    /// Gradient w.r.t. the target set `B` (nonzero only at nearest points).
    pub grad_target: Vec<Vec3>,
}

/// `(1/|A|) sum_a min_b |a - b|^2` against a prebuilt index over `B`.
pub fn sided_chamfer_indexed(a: &[Vec3], b: &NearestNeighborIndex) -> Result<SidedChamfer> {
    if a.is_empty() {
        return Err(Error::EmptyPointSet("chamfer source".into()));
    }
    if b.is_empty() {
        return Err(Error::EmptyPointSet("chamfer target".into()));
    }
    let inv = 1.0 / a.len() as f64;
    let mut value = 0.0;
    let mut grad_source = Vec::with_capacity(a.len());
    let mut grad_target = vec![Vec3::zeros(); b.len()];
    for p in a {
        let nn = b.nearest(p);
        value += nn.dist2;
        let g = (p - nn.point) * (2.0 * inv);
        grad_source.push(g);
        grad_target[nn.index] -= g;
    }
    Ok(SidedChamfer {
        value: value * inv,
        grad_source,
        grad_target,
    })
}

/// One-sided chamfer `L_sided(A, B)` in mm^2.
pub fn sided_chamfer(a: &[Vec3], b: &[Vec3]) -> Result<SidedChamfer> {
    if b.is_empty() {
        return Err(Error::EmptyPointSet("chamfer target".into()));
    }
    sided_chamfer_indexed(a, &NearestNeighborIndex::new(b))
}

/// Class-wise symmetric chamfer `1/(2N) sum_i [L(X_i, Y_i) + L(Y_i, X_i)]`
/// with its gradient w.r.t. every point of `x`.
pub fn classwise_chamfer(
    x: &LabeledPointCloud,
    y: &LabeledPointCloud,
) -> Result<(f64, Vec<Vec<Vec3>>)> {
    if x.num_classes() != y.num_classes() {
        return Err(Error::ClassMismatch(x.num_classes(), y.num_classes()));
    }
    x.require_nonempty("chamfer X")?;
    y.require_nonempty("chamfer Y")?;
    let scale = 1.0 / (2.0 * x.num_classes() as f64);
    let mut total = 0.0;
    let mut grads = Vec::with_capacity(x.num_classes());
    for (xi, yi) in x.classes.iter().zip(&y.classes) {
        let fwd = sided_chamfer(xi, yi)?;
        let bwd = sided_chamfer(yi, xi)?;
        total += fwd.value + bwd.value;
        grads.push(
            fwd.grad_source
                .iter()
                .zip(&bwd.grad_target)
                .map(|(a, b)| (a + b) * scale)
                .collect(),
        );
    }
    Ok((total * scale, grads))
}

/// Attachment pull `1/N sum_i L(Y_i, X_i)`: distances from attachment points
/// to mesh points, gradient w.r.t. the mesh points. Pairs with no attachment
/// points are skipped and do not count toward `N`.
pub fn attachment_pull_loss(pairs: &[(&[Vec3], &[Vec3])]) -> Result<(f64, Vec<Vec<Vec3>>)> {
    let active = pairs.iter().filter(|(_, y)| !y.is_empty()).count();
    if active == 0 {
        return Err(Error::EmptyAttachment);
    }
    let scale = 1.0 / active as f64;
    let mut total = 0.0;
    let mut grads = Vec::with_capacity(pairs.len());
    for (i, (x, y)) in pairs.iter().enumerate() {
        if y.is_empty() {
            log::warn!("attachment pair {i} has no points; skipped");
            grads.push(vec![Vec3::zeros(); x.len()]);
            continue;
        }
        let term = sided_chamfer(y, x)?;
        total += term.value;
        grads.push(term.grad_target.into_iter().map(|g| g * scale).collect());
    }
    Ok((total * scale, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec3> {
        (0..n)
            .map(|_| Vec3::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)))
            .collect()
    }

    fn brute_sided(a: &[Vec3], b: &[Vec3]) -> f64 {
        a.iter()
            .map(|p| b.iter().map(|q| (p - q).norm_squared()).fold(f64::INFINITY, f64::min))
            .sum::<f64>()
            / a.len() as f64
    }

    #[test]
    fn identical_sets_are_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let a = random_points(&mut rng, 30);
        assert_eq!(sided_chamfer(&a, &a).unwrap().value, 0.0);
        let pc = LabeledPointCloud::new(vec![a.clone(), a]);
        assert_eq!(classwise_chamfer(&pc, &pc).unwrap().0, 0.0);
    }

    #[test]
    fn single_pair_values() {
        let a = vec![Vec3::zeros()];
        let b = vec![Vec3::new(1.0, 0.0, 0.0)];
        assert_eq!(sided_chamfer(&a, &b).unwrap().value, 1.0);
        let x = LabeledPointCloud::new(vec![a]);
        let y = LabeledPointCloud::new(vec![b]);
        assert_eq!(classwise_chamfer(&x, &y).unwrap().0, 1.0);
    }

    #[test]
    fn two_classes_one_offset() {
        let p = vec![Vec3::zeros(), Vec3::new(0.0, 3.0, 0.0)];
        let q: Vec<Vec3> = p.iter().map(|v| v + Vec3::x()).collect();
        let x = LabeledPointCloud::new(vec![p.clone(), p.clone()]);
        let y = LabeledPointCloud::new(vec![p, q]);
        // class 0: 0, class 1: (1 + 1); averaged over 2N = 4
        assert!((classwise_chamfer(&x, &y).unwrap().0 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn matches_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_points(&mut rng, 50);
        let b = random_points(&mut rng, 70);
        let v = sided_chamfer(&a, &b).unwrap().value;
        assert!((v - brute_sided(&a, &b)).abs() <= 1e-12 * v.max(1.0));
    }

    #[test]
    fn class_mismatch_and_empty_errors() {
        let a = LabeledPointCloud::new(vec![vec![Vec3::zeros()]]);
        let b = LabeledPointCloud::new(vec![vec![Vec3::zeros()], vec![Vec3::zeros()]]);
        assert!(matches!(classwise_chamfer(&a, &b), Err(Error::ClassMismatch(1, 2))));
        let e = LabeledPointCloud::new(vec![vec![]]);
        assert!(classwise_chamfer(&a, &e).is_err());
        assert!(sided_chamfer(&[], &[Vec3::zeros()]).is_err());
    }

    #[test]
    fn pull_loss_values() {
        // dense flat mesh patch on z = 0
        let mut mesh = Vec::new();
        for i in -10..=10 {
            for j in -10..=10 {
                mesh.push(Vec3::new(i as f64 * 0.5, j as f64 * 0.5, 0.0));
            }
        }
        let on: Vec<Vec3> = mesh[..5].to_vec();
        let (v, _) = attachment_pull_loss(&[(&mesh, &on)]).unwrap();
        assert_eq!(v, 0.0);
        let off = vec![Vec3::new(0.0, 0.0, 2.0)];
        let (v, g) = attachment_pull_loss(&[(&mesh, &off)]).unwrap();
        assert!((v - 4.0).abs() < 1e-15);
        let nonzero: Vec<usize> = g[0].iter().enumerate().filter(|(_, v)| v.norm() > 0.0).map(|(i, _)| i).collect();
        assert_eq!(nonzero.len(), 1);
        assert_eq!(mesh[nonzero[0]], Vec3::zeros());
        // an empty pair is skipped
        let (v2, _) = attachment_pull_loss(&[(&mesh, &off), (&mesh, &[])]).unwrap();
        assert_eq!(v2, v);
        assert!(matches!(attachment_pull_loss(&[(&mesh, &[])]), Err(Error::EmptyAttachment)));
    }

    #[test]
    fn pull_loss_sphere_blob_matches_brute_force() {
        let sphere = crate::scene::primitives::icosphere(3, 5.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let blob: Vec<Vec3> = (0..40)
            .map(|_| {
                let d = Vec3::new(1.0, rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2)).normalize();
                d * 6.0
            })
            .collect();
        let (v, _) = attachment_pull_loss(&[(&sphere.vertices, &blob)]).unwrap();
        assert!((v - brute_sided(&blob, &sphere.vertices)).abs() < 1e-12);
    }
}
