//! Experiment configuration: JSON schema, parsing and validation.
//!
//! One JSON document describes one experiment; validation collects every
//! violation before reporting so a bad file is fixed in one pass.

use nalgebra::DMatrix;
use phs_control::linalg::serde_matrix;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantConfig {
    /// Domain length L in meters.
    pub length: f64,
    /// Tension T in newtons (L1 profile).
    pub tension: f64,
    /// Lineic density rho in kg/m (L2 = 1/rho).
    pub density: f64,
    /// Internal dissipation coefficient R.
    pub dissipation: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretizationConfig {
    /// Element count.
    pub p: usize,
    /// Effort-mapping parameter; 1/2 is the centered scheme.
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Time step in seconds.
    pub dt: f64,
    /// Simulation horizon in seconds.
    pub t_final: f64,
}

fn default_gamma() -> f64 {
    0.5
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "lowercase", tag = "mode")]
pub enum ActuationConfig {
    /// One independent input per element (m = p).
    #[default]
    Full,
    /// `m` patches of k = p/m elements each.
    Patches { m: usize },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapingConfig {
    /// Damping-injection coefficient alpha (0 disables damping injection).
    pub alpha: f64,
    /// Uniform energy-shaping parameter: Q_m = diag(beta / L_ab).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Explicit target increment Q_m (row-major), alternative to beta.
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        with = "optional_matrix"
    )]
    pub qm: Option<DMatrix<f64>>,
}

mod optional_matrix {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        value: &Option<DMatrix<f64>>,
        ser: S,
    ) -> Result<S::Ok, S::Error> {
        match value {
            Some(m) => serde_matrix::serialize(m, ser),
            None => ser.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        de: D,
    ) -> Result<Option<DMatrix<f64>>, D::Error> {
        serde_matrix::deserialize(de).map(Some)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConditionConfig {
    /// Center of the Gaussian strain bump in meters.
    pub mu: f64,
    /// Variance of the bump in square meters.
    pub sigma2: f64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
}

fn default_amplitude() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: String,
    /// Record every n-th step.
    #[serde(default = "default_stride")]
    pub stride: usize,
    /// Emit per-record state snapshot files `state_<index>.csv`.
    #[serde(default)]
    pub snapshots: bool,
}

fn default_directory() -> String {
    "out".into()
}

fn default_stride() -> usize {
    10
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: default_directory(),
            stride: default_stride(),
            snapshots: false,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub plant: PlantConfig,
    pub discretization: DiscretizationConfig,
    #[serde(default)]
    pub actuation: ActuationConfig,
    /// Absent shaping section means an open-loop run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shaping: Option<ShapingConfig>,
    pub initial_condition: InitialConditionConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    /// Validates every invariant, returning the full list of violations.
    pub fn validate(&self) -> Result<(), Vec<String>> {
        let mut errors = Vec::new();
        let plant = &self.plant;
        for (name, value) in [
            ("plant.length", plant.length),
            ("plant.tension", plant.tension),
            ("plant.density", plant.density),
            ("plant.dissipation", plant.dissipation),
        ] {
            if !value.is_finite() || value <= 0.0 {
                errors.push(format!("{name} must be positive, got {value}"));
            }
        }
        let disc = &self.discretization;
        if disc.p == 0 {
            errors.push("discretization.p must be >= 1".into());
        }
        if disc.gamma.is_nan() || disc.gamma <= 0.0 || disc.gamma >= 1.0 {
            errors.push(format!(
                "discretization.gamma must lie in (0, 1), got {}",
                disc.gamma
            ));
        }
        if !disc.dt.is_finite() || disc.dt <= 0.0 {
            errors.push(format!("discretization.dt must be positive, got {}", disc.dt));
        }
        if disc.t_final.is_nan() || disc.t_final < disc.dt {
            errors.push(format!(
                "discretization.t_final must be >= dt, got t_final = {}, dt = {}",
                disc.t_final, disc.dt
            ));
        }
        if let ActuationConfig::Patches { m } = self.actuation {
            if m == 0 {
                errors.push("actuation.m must be >= 1".into());
            } else if disc.p > 0 && !disc.p.is_multiple_of(m) {
                errors.push(format!("actuation.m = {m} must divide p = {}", disc.p));
            }
        }
        if let Some(shaping) = &self.shaping {
            if shaping.alpha < 0.0 || !shaping.alpha.is_finite() {
                errors.push(format!(
                    "shaping.alpha must be nonnegative, got {}",
                    shaping.alpha
                ));
            }
            match (&shaping.beta, &shaping.qm) {
                (Some(beta), None) => {
                    if *beta < 0.0 || !beta.is_finite() {
                        errors.push(format!("shaping.beta must be nonnegative, got {beta}"));
                    }
                }
                (None, Some(qm)) => {
                    if qm.shape() != (disc.p, disc.p) {
                        errors.push(format!(
                            "shaping.qm must be {p}x{p}, got {}x{}",
                            qm.nrows(),
                            qm.ncols(),
                            p = disc.p
                        ));
                    }
                }
                (Some(_), Some(_)) => {
                    errors.push("shaping: give either beta or qm, not both".into());
                }
                (None, None) => {
                    errors.push("shaping: one of beta or qm is required".into());
                }
            }
        }
        let ic = &self.initial_condition;
        if !ic.sigma2.is_finite() || ic.sigma2 <= 0.0 {
            errors.push(format!(
                "initial_condition.sigma2 must be positive, got {}",
                ic.sigma2
            ));
        }
        if self.output.stride == 0 {
            errors.push("output.stride must be >= 1".into());
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }
}
