//! Experiment configuration files (TOML).
//!
//! ```toml
//! model = "gradient_flow"        # maxwell_higgs | effective_gf | effective_mh
//! lambda = 2.0
//! output_dir = "runs/pair"
//!
//! [[vortices]]
//! x = -4.0
//! y = 0.0
//! n = 1
//! px = 0.05                      # optional, Maxwell-Higgs and effective_mh only
//!
//! [lattice]
//! spacing = 0.125                # half-width defaults to max |z| + 8
//!
//! [run]
//! t_end = 50.0
//! snapshot_every = 160
//! ```

use std::path::{Path, PathBuf};

use glvx_core::evolve::{GfRunConfig, MhRunConfig, RunConfig};
use glvx_core::lattice::{LatticeSpec, VortexAnsatz};
use glvx_core::{Error, Result};
use serde::{Deserialize, Serialize};

pub const DEFAULT_SPACING: f64 = 0.125;
pub const DEFAULT_CFL_FACTOR: f64 = 0.1;
pub const DEFAULT_COURANT_FACTOR: f64 = 0.25;
pub const DEFAULT_EFFECTIVE_DT: f64 = 0.01;
/// Lattice margin beyond the outermost vortex when no half-width is given.
pub const DEFAULT_MARGIN: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    GradientFlow,
    MaxwellHiggs,
    EffectiveGf,
    EffectiveMh,
}

impl Model {
    pub fn has_momentum(self) -> bool {
        matches!(self, Model::MaxwellHiggs | Model::EffectiveMh)
    }

    pub fn is_lattice(self) -> bool {
        matches!(self, Model::GradientFlow | Model::MaxwellHiggs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VortexConfig {
    pub x: f64,
    pub y: f64,
    pub n: i32,
    #[serde(default)]
    pub px: f64,
    #[serde(default)]
    pub py: f64,
}

/// Either `spacing` (+ optional `extent`) or `extent` + `points_per_side`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spacing: Option<f64>,
    /// Half-width `L`; with `spacing` it is a lower bound.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points_per_side: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSettings {
    pub t_end: f64,
    #[serde(default = "default_snapshot_every")]
    pub snapshot_every: usize,
    #[serde(default = "default_cfl")]
    pub cfl_factor: f64,
    #[serde(default = "default_courant")]
    pub courant_factor: f64,
    /// Step of the effective ODE integrators.
    #[serde(default = "default_effective_dt")]
    pub effective_dt: f64,
    /// Write a GLVX file at every recorded snapshot, not only the first and last.
    #[serde(default)]
    pub all_snapshots: bool,
}

fn default_snapshot_every() -> usize {
    100
}
fn default_cfl() -> f64 {
    DEFAULT_CFL_FACTOR
}
fn default_courant() -> f64 {
    DEFAULT_COURANT_FACTOR
}
fn default_effective_dt() -> f64 {
    DEFAULT_EFFECTIVE_DT
}

/// Random perturbation of the initial lattice field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perturbation {
    pub amplitude: f64,
    #[serde(default)]
    pub seed: u64,
}

/// Verdict thresholds of the PDE-versus-effective comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareThresholds {
    /// Bound on `|γż + ∇W| / |∇W|` (gradient flow).
    #[serde(default = "default_law_residual")]
    pub max_relative_law_residual: f64,
    /// Bound on `|ż − p| / max_j |p_j(0)|` (Maxwell–Higgs).
    #[serde(default = "default_velocity_fraction")]
    pub max_velocity_mismatch_fraction: f64,
    /// Bound on the trajectory deviation in lattice spacings.
    #[serde(default = "default_deviation")]
    pub max_deviation_spacings: f64,
    /// Lower bound on the tracked separation (Maxwell–Higgs).
    #[serde(default = "default_min_separation")]
    pub min_separation: f64,
}

fn default_law_residual() -> f64 {
    0.3
}
fn default_velocity_fraction() -> f64 {
    0.3
}
fn default_deviation() -> f64 {
    1.5
}
fn default_min_separation() -> f64 {
    4.0
}

impl Default for CompareThresholds {
    fn default() -> Self {
        Self {
            max_relative_law_residual: default_law_residual(),
            max_velocity_mismatch_fraction: default_velocity_fraction(),
            max_deviation_spacings: default_deviation(),
            min_separation: default_min_separation(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: Model,
    pub lambda: f64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub vortices: Vec<VortexConfig>,
    #[serde(default)]
    pub lattice: LatticeConfig,
    pub run: RunSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<Perturbation>,
    #[serde(default)]
    pub compare: CompareThresholds,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("glvx-out")
}

fn invalid(path: &str, message: impl std::fmt::Display) -> Error {
    Error::Configuration(format!("{path}: {message}"))
}

impl ExperimentConfig {
    /// Parses and validates a TOML document.
    pub fn from_toml(text: &str) -> Result<Self> {
        let mut config: Self = toml::from_str(text).map_err(|e| Error::Configuration(e.to_string()))?;
        config.fill_defaults();
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Configuration(e.to_string()))
    }

    /// Makes the lattice explicit so the serialized form is self-contained.
    fn fill_defaults(&mut self) {
        let lattice = &mut self.lattice;
        if lattice.spacing.is_none() && lattice.points_per_side.is_none() {
            lattice.spacing = Some(DEFAULT_SPACING);
        }
        if lattice.spacing.is_some() && lattice.extent.is_none() {
            let reach = self.vortices.iter().map(|v| v.x.hypot(v.y)).fold(0.0, f64::max);
            lattice.extent = Some(reach + DEFAULT_MARGIN);
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(invalid("lambda", format!("must be positive, got {}", self.lambda)));
        }
        if self.vortices.is_empty() {
            return Err(invalid("vortices", "at least one vortex is required"));
        }
        for (k, v) in self.vortices.iter().enumerate() {
            if v.n == 0 {
                return Err(invalid(&format!("vortices[{k}].n"), "degree must be nonzero"));
            }
            if ![v.x, v.y, v.px, v.py].iter().all(|c| c.is_finite()) {
                return Err(invalid(&format!("vortices[{k}]"), "non-finite coordinate"));
            }
            if !self.model.has_momentum() && (v.px != 0.0 || v.py != 0.0) {
                return Err(invalid(
                    &format!("vortices[{k}]"),
                    "momenta are only meaningful for maxwell_higgs and effective_mh",
                ));
            }
        }
        let ansatz = self.ansatz();
        if let Some(separation) = ansatz.min_separation() {
            if separation <= 2.0 {
                return Err(Error::SeparationViolation { separation });
            }
        }
        if matches!(self.model, Model::EffectiveGf | Model::EffectiveMh) && self.lambda <= 0.5 {
            return Err(Error::TypeIUnsupported { lambda: self.lambda });
        }
        let lattice = self.lattice_spec()?;
        if self.model.is_lattice() {
            lattice.check_placement(&ansatz.positions)?;
        }
        let run = &self.run;
        if !(run.effective_dt > 0.0 && run.effective_dt.is_finite()) {
            return Err(invalid("run.effective_dt", format!("must be positive, got {}", run.effective_dt)));
        }
        if let Some(p) = &self.perturbation {
            if !(p.amplitude >= 0.0 && p.amplitude.is_finite()) {
                return Err(invalid("perturbation.amplitude", "must be finite and >= 0"));
            }
        }
        let c = &self.compare;
        for (name, value) in [
            ("compare.max_relative_law_residual", c.max_relative_law_residual),
            ("compare.max_velocity_mismatch_fraction", c.max_velocity_mismatch_fraction),
            ("compare.max_deviation_spacings", c.max_deviation_spacings),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(invalid(name, format!("must be positive, got {value}")));
            }
        }
        self.run_config().map(|_| ())
    }

    pub fn lattice_spec(&self) -> Result<LatticeSpec> {
        let l = &self.lattice;
        let spec = match (l.spacing, l.extent, l.points_per_side) {
            (Some(h), Some(extent), None) => LatticeSpec::with_spacing(h, extent),
            (None, Some(extent), Some(n)) => LatticeSpec::new(extent, n),
            (Some(_), _, Some(_)) => return Err(invalid("lattice", "give either spacing or points_per_side, not both")),
            _ => return Err(invalid("lattice", "needs spacing, or extent and points_per_side")),
        };
        spec.map_err(|e| invalid("lattice", e))
    }

    pub fn ansatz(&self) -> VortexAnsatz {
        let positions = self.vortices.iter().map(|v| [v.x, v.y]).collect();
        let degrees = self.vortices.iter().map(|v| v.n).collect();
        let ansatz = VortexAnsatz::new(positions, degrees);
        if self.model.has_momentum() {
            ansatz.with_momenta(self.vortices.iter().map(|v| [v.px, v.py]).collect())
        } else {
            ansatz
        }
    }

    pub fn degrees(&self) -> Vec<i32> {
        self.vortices.iter().map(|v| v.n).collect()
    }

    /// Time-stepping parameters of the lattice model; effective models use the
    /// gradient-flow or Maxwell–Higgs counterpart for the shared lattice.
    pub fn run_config(&self) -> Result<RunConfig> {
        let h = self.lattice_spec()?.spacing();
        let r = &self.run;
        let config = if self.model.has_momentum() {
            MhRunConfig::new(h, r.courant_factor, r.t_end, r.snapshot_every).map(RunConfig::MaxwellHiggs)
        } else {
            GfRunConfig::new(h, r.cfl_factor, r.t_end, r.snapshot_every).map(RunConfig::GradientFlow)
        };
        config.map_err(|e| invalid("run", e))
    }

    /// Time between recorded lattice snapshots.
    pub fn snapshot_interval(&self) -> Result<f64> {
        Ok(match self.run_config()? {
            RunConfig::GradientFlow(c) => c.dt * c.snapshot_every as f64,
            RunConfig::MaxwellHiggs(c) => c.dt * c.snapshot_every as f64,
        })
    }
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| invalid(&path.display().to_string(), e))?;
    ExperimentConfig::from_toml(&text)
}
