//! Run manifests: every reported number carries a standard error or an
//! exactness flag, and each check records its target and verdict.

use std::path::Path;

use serde::Serialize;

use crate::harness::config::Constants;
use crate::Result;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub estimate: f64,
    /// None marks an exact (non-statistical) quantity
    pub se: Option<f64>,
    pub target: f64,
    pub z: Option<f64>,
    pub pass: bool,
}

impl Check {
    /// |estimate - target| <= 3 se
    pub fn two_sided(name: impl Into<String>, estimate: f64, se: f64, target: f64) -> Check {
        let z = (estimate - target) / se;
        Check { name: name.into(), estimate, se: Some(se), target, z: Some(z), pass: z.abs() <= 3.0 }
    }

    /// estimate <= bound + 3 se
    pub fn upper_bound(name: impl Into<String>, estimate: f64, se: f64, bound: f64) -> Check {
        let z = (estimate - bound) / se.max(f64::MIN_POSITIVE);
        Check {
            name: name.into(),
            estimate,
            se: Some(se),
            target: bound,
            z: Some(z),
            pass: estimate <= bound + 3.0 * se,
        }
    }

    /// |estimate - target| <= tol, no statistical error involved
    pub fn exact(name: impl Into<String>, estimate: f64, target: f64, tol: f64) -> Check {
        Check {
            name: name.into(),
            estimate,
            se: None,
            target,
            z: None,
            pass: (estimate - target).abs() <= tol,
        }
    }

    /// qualitative verdict with a recorded value
    pub fn flag(name: impl Into<String>, estimate: f64, target: f64, pass: bool) -> Check {
        Check { name: name.into(), estimate, se: None, target, z: None, pass }
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub experiment: String,
    pub version: &'static str,
    pub seed: u64,
    pub replicates: u64,
    pub constants: Constants,
    pub wall_secs: f64,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub incomplete: bool,
}

impl RunManifest {
    pub fn new(experiment: &str, seed: u64, replicates: u64, constants: Constants) -> Self {
        RunManifest {
            experiment: experiment.to_string(),
            version: env!("CARGO_PKG_VERSION"),
            seed,
            replicates,
            constants,
            wall_secs: 0.0,
            checks: Vec::new(),
            pass: true,
            incomplete: false,
        }
    }

    pub fn push(&mut self, check: Check) {
        self.pass &= check.pass;
        self.checks.push(check);
    }

    pub fn extend(&mut self, checks: Vec<Check>) {
        for c in checks {
            self.push(c);
        }
    }

    pub fn write_json(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let s = serde_json::to_string_pretty(self)?;
        std::fs::write(dir.join("manifest.json"), s + "\n")?;
        Ok(())
    }
}

/// Deterministic CSV emission helper.
pub fn write_csv(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), contents)?;
    Ok(())
}
