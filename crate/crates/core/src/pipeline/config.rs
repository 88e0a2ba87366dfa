use serde::{Deserialize, Serialize};

use crate::attach::{DEFAULT_TAU_COS, DEFAULT_TAU_DIST};
use crate::energy::EnergyWeights;
use crate::error::{Error, Result};
use crate::field::{DEFAULT_DENSE_SPACING, DEFAULT_MARGIN, DEFAULT_STEPS};
use crate::pipeline::adam::AdamConfig;

/// Which regularizer accompanies the data terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Regularizer {
    /// Anisotropic as-rigid-as-possible strain on the volumetric mesh.
    #[default]
    Volumetric,
    /// Second-difference smoothness of the control velocities.
    FieldBending,
    /// Normal, Laplacian and edge terms on the base surface only.
    Surface,
}

/// Flat optimization settings; every field has a default and unknown keys
/// are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuneConfig {
    pub regularizer: Regularizer,
    /// Overall regularizer strength.
    pub lambda_user: f64,
    /// Weight of the pseudo-label chamfer.
    pub w1_d1: f64,
    /// Weight of the attachment pull.
    pub lambda2_d2: f64,
    pub lambda0: f64,
    pub lambda1_aniso: f64,
    pub lambda3_normal: f64,
    pub lambda4_laplacian: f64,
    pub lambda5_edge: f64,
    pub learning_rate: f64,
    pub iterations: usize,
    /// Control point spacing in dense lattice units.
    pub control_spacing: usize,
    pub coarse_control_spacing: usize,
    pub coarse_iterations: usize,
    pub dense_spacing_mm: f64,
    pub margin_mm: f64,
    pub squaring_steps: usize,
    /// Per-node cap on the scaled velocity as a fraction of the dense
    /// spacing; 0 disables it.
    pub velocity_clamp: f64,
    pub tau_cos: f64,
    pub tau_dist_mm: f64,
    /// Iterations between attachment re-pairings.
    pub refresh_interval: usize,
    pub prealign_iterations: usize,
    pub prealign_learning_rate: f64,
}

impl Default for TuneConfig {
    fn default() -> Self {
        let w = EnergyWeights::default();
        Self {
            regularizer: Regularizer::Volumetric,
            lambda_user: 1.0,
            w1_d1: 1.0,
            lambda2_d2: 1.0,
            lambda0: w.lambda0,
            lambda1_aniso: w.lambda1_aniso,
            lambda3_normal: w.lambda3_normal,
            lambda4_laplacian: w.lambda4_laplacian,
            lambda5_edge: w.lambda5_edge,
            learning_rate: 1e-3,
            iterations: 1000,
            control_spacing: 16,
            coarse_control_spacing: 32,
            coarse_iterations: 300,
            dense_spacing_mm: DEFAULT_DENSE_SPACING,
            margin_mm: DEFAULT_MARGIN,
            squaring_steps: DEFAULT_STEPS,
            velocity_clamp: 0.4,
            tau_cos: DEFAULT_TAU_COS,
            tau_dist_mm: DEFAULT_TAU_DIST,
            refresh_interval: 50,
            prealign_iterations: 300,
            prealign_learning_rate: 1e-2,
        }
    }
}

impl TuneConfig {
    pub fn energy_weights(&self) -> EnergyWeights {
        EnergyWeights {
            lambda0: self.lambda0,
            lambda1_aniso: self.lambda1_aniso,
            lambda3_normal: self.lambda3_normal,
            lambda4_laplacian: self.lambda4_laplacian,
            lambda5_edge: self.lambda5_edge,
        }
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig::with_lr(self.learning_rate)
    }

    pub fn control_spacing_mm(&self) -> f64 {
        self.control_spacing as f64 * self.dense_spacing_mm
    }

    pub fn coarse_spacing_mm(&self) -> f64 {
        self.coarse_control_spacing as f64 * self.dense_spacing_mm
    }

    pub fn clamp_mm(&self) -> Option<f64> {
        (self.velocity_clamp > 0.0).then_some(self.velocity_clamp * self.dense_spacing_mm)
    }

    pub fn validate(&self) -> Result<()> {
        self.energy_weights().validate()?;
        let nonneg = [
            ("lambda_user", self.lambda_user),
            ("w1_d1", self.w1_d1),
            ("lambda2_d2", self.lambda2_d2),
            ("velocity_clamp", self.velocity_clamp),
            ("margin_mm", self.margin_mm),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        let positive = [
            ("learning_rate", self.learning_rate),
            ("prealign_learning_rate", self.prealign_learning_rate),
            ("dense_spacing_mm", self.dense_spacing_mm),
            ("tau_dist_mm", self.tau_dist_mm),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        if !(-1.0..=1.0).contains(&self.tau_cos) {
            return Err(Error::Config(format!("tau_cos must lie in [-1, 1], got {}", self.tau_cos)));
        }
        if self.control_spacing == 0 || self.coarse_control_spacing == 0 {
            return Err(Error::Config("control spacing must be at least one lattice unit".into()));
        }
        if self.refresh_interval == 0 {
            return Err(Error::Config("refresh_interval must be >= 1".into()));
        }
        Ok(())
    }
}
