//! Experiment configuration (TOML or JSON; same schema).
//!
//! ```toml
//! dimension = 1
//! seed = 42
//! k = 1.0                     # number, "fit", or "fit:<other config>"
//!
//! [grid]
//! length = 16.0
//! points = 799                # per axis
//!
//! [potential]
//! family = "constant"         # constant | step | well | periodic-cosine | random-alloy
//! value = 0.0
//!
//! [sampling]
//! M = 1.0
//! deltas = [0.1, 0.25, 0.5]
//! sequence = { kind = "periodic" }   # or { kind = "perturbed", seed = 3 }
//! ```
//!
//! Optional tables: `[eigen]`, `[fit]`, `[projector]`, `[residual]`,
//! `[weyl]`, `[geometry]`, `[tolerances]`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::geometry::{
    make_periodic_sequence, make_perturbed_sequence, EquidistributedSequence, IndexWindow,
};
use crate::hamiltonian::{Grid, HamiltonianOperator, PotentialSpec};
use crate::spectral::{SolverOptions, WeylStrategy};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dimension: usize,
    #[serde(default)]
    pub seed: u64,
    pub grid: GridSpec,
    #[serde(default)]
    pub potential: PotentialSpec,
    pub sampling: SamplingSpec,
    #[serde(default)]
    pub k: KChoice,
    #[serde(default)]
    pub eigen: EigenSpec,
    #[serde(default)]
    pub fit: FitSpec,
    #[serde(default)]
    pub projector: Option<ProjectorSpec>,
    #[serde(default)]
    pub residual: ResidualSpec,
    #[serde(default)]
    pub weyl: Option<WeylSpec>,
    #[serde(default)]
    pub geometry: GeometrySpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Directory of the config file; relative `fit:` references resolve here.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub length: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSpec {
    #[serde(rename = "M")]
    pub m: f64,
    pub deltas: Vec<f64>,
    #[serde(default)]
    pub sequence: SequenceKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SequenceKind {
    #[default]
    Periodic,
    Perturbed {
        #[serde(default)]
        seed: Option<u64>,
    },
}

/// Exponent constant: a fixed value, or fitted (`"fit"` on this config,
/// `"fit:<path>"` on another one).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KChoice {
    Fixed(f64),
    Fit(String),
}

impl Default for KChoice {
    /// Illustrative only; the true constants are not known numerically.
    fn default() -> Self {
        KChoice::Fixed(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EigenSpec {
    pub count: usize,
    pub tol: f64,
    pub dense_threshold: usize,
}

impl Default for EigenSpec {
    fn default() -> Self {
        EigenSpec {
            count: 1,
            tol: 1e-9,
            dense_threshold: SolverOptions::default().dense_threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSpec {
    /// Eigenfunction index whose ratios are fitted.
    pub mode: usize,
    pub margin: f64,
    pub heldout_seeds: Vec<u64>,
}

impl Default for FitSpec {
    fn default() -> Self {
        FitSpec {
            mode: 0,
            margin: 0.1,
            heldout_seeds: vec![101, 102, 103, 104, 105],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectorSpec {
    #[serde(rename = "E0")]
    pub e0: f64,
    pub intervals: Vec<IntervalSpec>,
    /// Random real and complex combinations tested per interval.
    #[serde(default = "default_combinations")]
    pub combinations: usize,
}

fn default_combinations() -> usize {
    4
}

/// Either `modes = [i, j, …]` (centered on those levels, half-width γ unless
/// given) or an explicit `center` with `half_width`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntervalSpec {
    pub modes: Vec<usize>,
    pub center: Option<f64>,
    pub half_width: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResidualSpec {
    pub packet_widths: Vec<f64>,
    pub band_limited: usize,
    pub cutoff: usize,
}

impl Default for ResidualSpec {
    fn default() -> Self {
        ResidualSpec {
            packet_widths: vec![0.5, 1.0, 2.0],
            band_limited: 3,
            cutoff: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeylSpec {
    pub energy: f64,
    pub n_from: u64,
    pub n_to: u64,
    #[serde(default)]
    pub strategy: WeylStrategy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometrySpec {
    pub trials: usize,
    pub dimensions: Vec<usize>,
}

impl Default for GeometrySpec {
    fn default() -> Self {
        GeometrySpec {
            trials: 1000,
            dimensions: vec![1, 2, 3],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Relative boundary mass at which a record becomes advisory.
    pub boundary_mass: f64,
    pub ratio_slack: f64,
    pub projector: f64,
    pub chain: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            boundary_mass: 1e-6,
            ratio_slack: 1e-12,
            projector: 1e-10,
            chain: 1e-8,
        }
    }
}

impl ExperimentConfig {
    pub fn from_str_with_format(text: &str, json: bool) -> Result<Self> {
        let value: Value = if json {
            serde_json::from_str(text).map_err(|e| Error::config(e.to_string()))?
        } else {
            toml::from_str(text).map_err(|e| Error::config(e.to_string()))?
        };
        Self::from_value(value)
    }

    pub fn from_value(value: Value) -> Result<Self> {
        serde_json::from_value(value).map_err(|e| Error::config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let json = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let mut cfg = Self::from_str_with_format(&text, json)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    /// Applies `key.path=value` overrides; every key must already exist in the
    /// fully defaulted schema. Values parse as JSON, falling back to strings.
    pub fn with_overrides(&self, overrides: &[String]) -> Result<Self> {
        if overrides.is_empty() {
            return Ok(self.clone());
        }
        let mut doc = serde_json::to_value(self).map_err(|e| Error::config(e.to_string()))?;
        for item in overrides {
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| Error::config(format!("override '{item}' is not key=value")))?;
            let value: Value =
                serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            let mut slot = &mut doc;
            for part in key.split('.') {
                slot = match slot {
                    Value::Object(map) => map
                        .get_mut(part)
                        .ok_or_else(|| Error::config(format!("unknown config key '{key}'")))?,
                    _ => return Err(Error::config(format!("unknown config key '{key}'"))),
                };
            }
            *slot = value;
        }
        let mut cfg = Self::from_value(doc)?;
        cfg.base_dir = self.base_dir.clone();
        Ok(cfg)
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.dimension, self.grid.length, self.grid.points)
    }

    pub fn hamiltonian(&self) -> Result<HamiltonianOperator> {
        HamiltonianOperator::from_spec(self.grid()?, &self.potential)
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            dense_threshold: self.eigen.dense_threshold,
            ..Default::default()
        }
    }

    fn sequence_seed(&self) -> u64 {
        match self.sampling.sequence {
            SequenceKind::Perturbed { seed: Some(s) } => s,
            _ => self.seed,
        }
    }

    /// Configured sequence at radius `delta` on the window covering the grid.
    pub fn sequence(&self, delta: f64) -> Result<EquidistributedSequence> {
        let grid = self.grid()?;
        let window = IndexWindow::covering(&grid, self.sampling.m);
        match self.sampling.sequence {
            SequenceKind::Periodic => {
                make_periodic_sequence(self.dimension, self.sampling.m, delta, window)
            }
            SequenceKind::Perturbed { .. } => make_perturbed_sequence(
                self.dimension,
                self.sampling.m,
                delta,
                window,
                self.sequence_seed(),
            ),
        }
    }

    /// Perturbed sequence with an explicit seed (held-out validation).
    pub fn perturbed_sequence(&self, delta: f64, seed: u64) -> Result<EquidistributedSequence> {
        let grid = self.grid()?;
        let window = IndexWindow::covering(&grid, self.sampling.m);
        make_perturbed_sequence(self.dimension, self.sampling.m, delta, window, seed)
    }

    /// Checks every δ against `(0, M/2]`, or `(0, M/2)` when `open` is set.
    pub fn check_deltas(&self, open: bool) -> Result<()> {
        let half = 0.5 * self.sampling.m;
        for &d in &self.sampling.deltas {
            let ok = d > 0.0 && if open { d < half } else { d <= half };
            if !ok {
                let range = if open {
                    "the open range (0, M/2) required by the projector bound"
                } else {
                    "(0, M/2]"
                };
                return Err(Error::config(format!(
                    "delta = {d} outside {range} (M = {})",
                    self.sampling.m
                )));
            }
        }
        if self.sampling.deltas.is_empty() {
            return Err(Error::config("sampling.deltas is empty"));
        }
        Ok(())
    }

    pub fn resolve_path(&self, rel: &str) -> PathBuf {
        match &self.base_dir {
            Some(dir) => dir.join(rel),
            None => PathBuf::from(rel),
        }
    }
}
