//! Affine prealignment of a template's base surface to labeled targets.

use nalgebra::{Matrix3x4, Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{centroid, Mat3, Vec3};
use crate::loss::{classwise_chamfer, NearestNeighborIndex};
use crate::mesh::{base_vertex_ids, LabeledPointCloud, VolumetricMesh};
use crate::mesh::points::gather_points;
use crate::pipeline::adam::{adam_step, AdamConfig, OptimState};

/// Consecutive loss increases treated as divergence.
const DIVERGENCE_RUN: usize = 100;
/// Cap on frozen-correspondence refinement rounds.
const REFINE_ROUNDS: usize = 50;

/// `x -> matrix * x + translation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub matrix: Mat3,
    pub translation: Vec3,
}

impl Affine {
    pub fn identity() -> Self {
        Self {
            matrix: Mat3::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.matrix * p + self.translation
    }

    pub fn apply_mesh(&self, mesh: &VolumetricMesh) -> VolumetricMesh {
        mesh.with_vertices(mesh.vertices.iter().map(|p| self.apply(p)).collect())
    }
}

#[derive(Debug, Clone)]
pub struct PrealignResult {
    pub affine: Affine,
    pub mesh: VolumetricMesh,
    /// Squared classwise chamfer after alignment.
    pub loss: f64,
    /// Loss before each Adam step.
    pub trace: Vec<f64>,
}

/// Normalized parameterization: `y = c_t + s (A x_hat + tau)` with
/// `x_hat = (x - c_s) / s`, parameters `A - I` and `tau`.
struct Frame {
    c_s: Vec3,
    c_t: Vec3,
    s: f64,
}

impl Frame {
    fn affine(&self, p: &[f64]) -> Affine {
        let a = Mat3::identity() + Mat3::from_row_slice(&p[..9]);
        let tau = Vec3::new(p[9], p[10], p[11]);
        Affine {
            matrix: a,
            translation: self.c_t - a * self.c_s + tau * self.s,
        }
    }
}

fn loss_and_grad(frame: &Frame, p: &[f64], x: &LabeledPointCloud, y: &LabeledPointCloud) -> Result<(f64, Vec<f64>)> {
    let t = frame.affine(p);
    let moved = x.map_points(|q| t.apply(q));
    let (value, grads) = classwise_chamfer(&moved, y)?;
    let mut g = vec![0.0; 12];
    for (pts, gs) in x.classes.iter().zip(&grads) {
        for (q, gq) in pts.iter().zip(gs) {
            let xh = (q - frame.c_s) / frame.s;
            for j in 0..3 {
                for k in 0..3 {
                    g[3 * j + k] += gq[j] * xh[k] * frame.s;
                }
                g[9 + j] += gq[j] * frame.s;
            }
        }
    }
    Ok((value, g))
}

/// One weighted least-squares affine fit with correspondences frozen at
/// the current transform.
fn refine_once(t: &Affine, x: &LabeledPointCloud, y: &LabeledPointCloud, y_index: &[NearestNeighborIndex]) -> Option<Affine> {
    let n = x.num_classes() as f64;
    let mut m = Matrix4::<f64>::zeros();
    let mut b = Matrix3x4::<f64>::zeros();
    let mut add = |src: &Vec3, dst: &Vec3, w: f64| {
        let xt = Vector4::new(src.x, src.y, src.z, 1.0);
        m += xt * xt.transpose() * w;
        b += dst * xt.transpose() * w;
    };
    for ((xc, yc), yi) in x.classes.iter().zip(&y.classes).zip(y_index) {
        let moved: Vec<Vec3> = xc.iter().map(|q| t.apply(q)).collect();
        let w = 1.0 / (2.0 * n * xc.len() as f64);
        for (q, mq) in xc.iter().zip(&moved) {
            add(q, &yi.nearest(mq).point, w);
        }
        let xi = NearestNeighborIndex::new(&moved);
        let w = 1.0 / (2.0 * n * yc.len() as f64);
        for q in yc {
            add(&xc[xi.nearest(q).index], q, w);
        }
    }
    let sol = b * m.try_inverse()?;
    Some(Affine {
        matrix: sol.fixed_view::<3, 3>(0, 0).into_owned(),
        translation: sol.column(3).into_owned(),
    })
}

fn chamfer_under(t: &Affine, x: &LabeledPointCloud, y: &LabeledPointCloud) -> Result<f64> {
    Ok(classwise_chamfer(&x.map_points(|q| t.apply(q)), y)?.0)
}

/// Fits a 12-parameter affine map of the template's base vertices to the
/// targets: Adam on the classwise chamfer from a centroid match, then
/// frozen-correspondence least-squares rounds while the loss drops.
pub fn prealign_affine(
    template: &VolumetricMesh,
    targets: &LabeledPointCloud,
    iterations: usize,
    lr: f64,
) -> Result<PrealignResult> {
    targets.require_nonempty("prealign targets")?;
    let ids = base_vertex_ids(template)?;
    if ids.len() != targets.num_classes() {
        return Err(Error::ClassMismatch(ids.len(), targets.num_classes()));
    }
    let x = gather_points(&template.vertices, None, &ids);
    let xs: Vec<Vec3> = x.all_points().copied().collect();
    let ys: Vec<Vec3> = targets.all_points().copied().collect();
    let c_s = centroid(&xs);
    let s = (xs.iter().map(|p| (p - c_s).norm_squared()).sum::<f64>() / xs.len() as f64).sqrt().max(1e-12);
    let frame = Frame { c_s, c_t: centroid(&ys), s };

    let cfg = AdamConfig::with_lr(lr);
    let mut state = OptimState::new(vec![0.0; 12]);
    let mut trace = Vec::with_capacity(iterations);
    let (mut best, mut best_params) = (f64::INFINITY, state.params.clone());
    let mut rising = 0;
    for _ in 0..iterations {
        let (value, grad) = loss_and_grad(&frame, &state.params, &x, targets)?;
        if !value.is_finite() {
            return Err(Error::NonFinite("prealign loss".into()));
        }
        if trace.last().is_some_and(|&prev| value > prev) {
            rising += 1;
            if rising >= DIVERGENCE_RUN {
                return Err(Error::Diverged(format!("prealign loss rose {DIVERGENCE_RUN} times in a row")));
            }
        } else {
            rising = 0;
        }
        if value < best {
            best = value;
            best_params.clone_from(&state.params);
        }
        trace.push(value);
        adam_step(&mut state, &grad, &cfg)?;
    }
    let (last, _) = loss_and_grad(&frame, &state.params, &x, targets)?;
    if last < best {
        best = last;
        best_params = state.params;
    }

    let mut t = frame.affine(&best_params);
    let y_index: Vec<NearestNeighborIndex> = targets.classes.iter().map(|c| NearestNeighborIndex::new(c)).collect();
    for _ in 0..REFINE_ROUNDS {
        let Some(next) = refine_once(&t, &x, targets, &y_index) else { break };
        let value = chamfer_under(&next, &x, targets)?;
        if !(value < best) {
            break;
        }
        best = value;
        t = next;
    }
    let det = t.matrix.determinant();
    if !(det > 0.0) {
        return Err(Error::DegenerateResult(det));
    }
    Ok(PrealignResult {
        mesh: t.apply_mesh(template),
        affine: t,
        loss: best,
        trace,
    })
}
