//! Experiment description, read from TOML with flat `[section]` tables.
//!
//! ```toml
//! [model]
//! dim = 2
//! alpha = 0.5
//! gamma = 1.5
//! kappa = 1.0
//!
//! [grid]
//! points = 64
//!
//! [initial]
//! kind = "gaussian-bump"
//! amplitude = 1.0
//! width = 0.6
//! seed = 1
//!
//! [run]
//! t_end = 5.0
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diagnostics::DiagnosticsSettings;
use crate::error::{Error, Result};
use crate::initial::InitialCondition;
use crate::integrator::StepPolicy;
use crate::operators::ModelParams;
use crate::spectral::TorusGrid;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub dim: usize,
    pub alpha: f64,
    pub gamma: f64,
    #[serde(default = "one")]
    pub kappa: f64,
    /// Admits `kappa = 0`.
    #[serde(default)]
    pub inviscid: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub points: usize,
    #[serde(default = "two_pi")]
    pub period: f64,
}

/// Flat initial-condition record; which keys are required depends on `kind`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub kind: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub background: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_wavenumber: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

impl InitialSection {
    pub fn from_condition(ic: &InitialCondition, seed: u64) -> Self {
        let mut s = InitialSection {
            kind: ic.name().to_string(),
            seed,
            ..Default::default()
        };
        match *ic {
            InitialCondition::GaussianBump {
                amplitude,
                width,
                count,
                background,
            } => {
                s.amplitude = Some(amplitude);
                s.width = Some(width);
                s.count = Some(count);
                s.background = Some(background);
            }
            InitialCondition::MultiMode {
                amplitude,
                modes,
                max_wavenumber,
            } => {
                s.amplitude = Some(amplitude);
                s.modes = Some(modes);
                s.max_wavenumber = Some(max_wavenumber);
            }
            InitialCondition::TanhFront { delta, width } => {
                s.delta = Some(delta);
                s.width = Some(width);
            }
            InitialCondition::RadialBump { amplitude, width } => {
                s.amplitude = Some(amplitude);
                s.width = Some(width);
            }
        }
        s
    }

    pub fn condition(&self) -> Result<InitialCondition> {
        let need = |v: Option<f64>, key: &str| {
            v.ok_or_else(|| Error::Config(format!("initial.{key} is required for kind '{}'", self.kind)))
        };
        let ic = match self.kind.as_str() {
            "gaussian-bump" => InitialCondition::GaussianBump {
                amplitude: need(self.amplitude, "amplitude")?,
                width: need(self.width, "width")?,
                count: self.count.unwrap_or(1),
                background: self.background.unwrap_or(0.0),
            },
            "multi-mode" => InitialCondition::MultiMode {
                amplitude: need(self.amplitude, "amplitude")?,
                modes: self.modes.unwrap_or(4),
                max_wavenumber: self.max_wavenumber.unwrap_or(3),
            },
            "tanh-front" => InitialCondition::TanhFront {
                delta: need(self.delta, "delta")?,
                width: need(self.width, "width")?,
            },
            "radial-bump" => InitialCondition::RadialBump {
                amplitude: need(self.amplitude, "amplitude")?,
                width: need(self.width, "width")?,
            },
            other => return Err(Error::Config(format!("unknown initial.kind '{other}'"))),
        };
        ic.validate()?;
        Ok(ic)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub t_end: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
    pub write_state: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: "out".into(),
            write_state: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub grid: GridSection,
    pub initial: InitialSection,
    #[serde(default)]
    pub stepper: StepPolicy,
    pub run: RunSection,
    #[serde(default)]
    pub diagnostics: DiagnosticsSettings,
    #[serde(default)]
    pub output: OutputSection,
}

/// Everything a run needs, checked and constructed.
#[derive(Clone, Debug)]
pub struct ValidatedConfig {
    pub params: ModelParams,
    pub grid: TorusGrid,
    pub initial: InitialCondition,
    pub seed: u64,
    pub policy: StepPolicy,
    pub t_end: f64,
    pub diagnostics: DiagnosticsSettings,
}

fn one() -> f64 {
    1.0
}

fn two_pi() -> f64 {
    2.0 * std::f64::consts::PI
}

fn as_config(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<ValidatedConfig> {
        let m = &self.model;
        let params = if m.inviscid {
            if m.kappa != 0.0 {
                return Err(Error::Config("inviscid runs need kappa = 0".into()));
            }
            ModelParams::inviscid(m.dim, m.alpha, m.gamma)
        } else {
            ModelParams::new(m.dim, m.alpha, m.gamma, m.kappa)
        }
        .map_err(as_config)?;
        let grid = TorusGrid::new(m.dim, self.grid.points, self.grid.period).map_err(as_config)?;
        let initial = self.initial.condition()?;
        self.stepper.validate()?;
        if !(self.run.t_end >= 0.0 && self.run.t_end.is_finite()) {
            return Err(Error::Config("run.t_end must be finite and >= 0".into()));
        }
        self.diagnostics.validate()?;
        Ok(ValidatedConfig {
            params,
            grid,
            initial,
            seed: self.initial.seed,
            policy: self.stepper,
            t_end: self.run.t_end,
            diagnostics: self.diagnostics.clone(),
        })
    }
}
