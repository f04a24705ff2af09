//! TOML experiment configuration and the calibrated-constant store.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::catalyst::{DensityCatalyst, Interval};
use crate::{Error, Result};

/// Catalyst model selector.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Constant {
        level: f64,
    },
    Parabolic {
        q: f64,
    },
    Gap {
        inner: f64,
        level: f64,
    },
    Stable {
        gamma: f64,
        #[serde(default = "default_window")]
        half_width: f64,
        #[serde(default = "default_floor")]
        weight_floor: f64,
        #[serde(default = "default_scale")]
        intensity_scale: f64,
    },
    Lattice {
        d: usize,
        n: u32,
    },
}

fn default_window() -> f64 {
    4.0
}
fn default_floor() -> f64 {
    1e-4
}
fn default_scale() -> f64 {
    1.0
}

impl ModelSpec {
    pub fn density(&self) -> Option<DensityCatalyst> {
        match *self {
            ModelSpec::Constant { level } => Some(DensityCatalyst::Constant { level }),
            ModelSpec::Parabolic { q } => Some(DensityCatalyst::Parabolic { q }),
            ModelSpec::Gap { inner, level } => Some(DensityCatalyst::Gap {
                inner: Interval::new(-inner, inner).unwrap(),
                level,
            }),
            _ => None,
        }
    }
}

/// Schedule family selector for the `schedule` subcommand.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ScheduleSpec {
    Parabolic { alpha: f64, beta: f64, q: f64, epsilons: Vec<f64> },
    DensePoint { alpha: f64, beta: f64, n_start: u32, epsilons: Vec<f64> },
    Lattice { d: u32, n_starts: Vec<u32> },
}

/// Calibrated constants. Schedules and stage experiments refuse to run on a
/// missing entry; there are no silent defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Constants {
    pub a: Option<f64>,
    pub c0: Option<f64>,
    pub c1: Option<f64>,
    pub alpha_hat: Option<f64>,
}

impl Constants {
    pub fn require(&self, name: &'static str) -> Result<f64> {
        let v = match name {
            "a" => self.a,
            "c0" => self.c0,
            "c1" => self.c1,
            "alpha_hat" => self.alpha_hat,
            _ => None,
        };
        v.ok_or(Error::MissingConstant(name))
    }

    /// explicit entries win over `other`
    pub fn merged_over(&self, other: &Constants) -> Constants {
        Constants {
            a: self.a.or(other.a),
            c0: self.c0.or(other.c0),
            c1: self.c1.or(other.c1),
            alpha_hat: self.alpha_hat.or(other.alpha_hat),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: u64,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_t_grid")]
    pub t_grid: Vec<f64>,
    #[serde(default)]
    pub model: Option<ModelSpec>,
    #[serde(default)]
    pub schedule: Option<ScheduleSpec>,
    #[serde(default)]
    pub constants: Constants,
    /// path to a calibration manifest JSON produced by `calibrate`
    #[serde(default)]
    pub calibration: Option<String>,
    #[serde(default)]
    pub threads: Option<usize>,
}

fn default_seed() -> u64 {
    1
}
fn default_replicates() -> u64 {
    2000
}
fn default_n() -> usize {
    500
}
fn default_dt() -> f64 {
    0.02
}
fn default_t_grid() -> Vec<f64> {
    vec![0.5, 1.0, 2.0, 4.0, 8.0]
}

impl ExperimentConfig {
    pub fn minimal(experiment: &str) -> Self {
        ExperimentConfig {
            experiment: experiment.to_string(),
            seed: default_seed(),
            replicates: default_replicates(),
            n: default_n(),
            dt: default_dt(),
            t_grid: default_t_grid(),
            model: None,
            schedule: None,
            constants: Constants::default(),
            calibration: None,
            threads: None,
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let mut cfg: ExperimentConfig =
            toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.resolve_calibration()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// merge constants from the referenced calibration manifest, explicit
    /// config entries taking precedence
    fn resolve_calibration(&mut self) -> Result<()> {
        if let Some(path) = &self.calibration {
            let raw = std::fs::read_to_string(path)?;
            let doc: serde_json::Value = serde_json::from_str(&raw)?;
            let cal: Constants = serde_json::from_value(
                doc.get("constants").cloned().unwrap_or(doc),
            )?;
            self.constants = self.constants.merged_over(&cal);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_toml() {
        let cfg = ExperimentConfig::from_toml_str(
            r#"
experiment = "extinction_curve"
seed = 9
[model]
kind = "parabolic"
q = 2.0
"#,
        )
        .unwrap();
        assert_eq!(cfg.experiment, "extinction_curve");
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.replicates, 2000);
        assert!(matches!(cfg.model, Some(ModelSpec::Parabolic { q }) if q == 2.0));
        assert_eq!(cfg.t_grid, vec![0.5, 1.0, 2.0, 4.0, 8.0]);
    }

    #[test]
    fn missing_constant_is_an_error() {
        let c = Constants { c0: Some(0.8), ..Default::default() };
        assert!((c.require("c0").unwrap() - 0.8).abs() < 1e-15);
        assert!(matches!(c.require("a"), Err(Error::MissingConstant("a"))));
    }

    #[test]
    fn merge_prefers_explicit() {
        let explicit = Constants { c0: Some(1.0), ..Default::default() };
        let cal = Constants { c0: Some(2.0), a: Some(0.4), ..Default::default() };
        let m = explicit.merged_over(&cal);
        assert_eq!(m.c0, Some(1.0));
        assert_eq!(m.a, Some(0.4));
    }
}
