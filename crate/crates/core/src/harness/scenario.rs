//! Scenario descriptions, loaded from TOML.
//!
//! ```toml
//! name = "fig8d"
//! mode = "torque-control"
//! duration = 0.04
//! speed_rpm = 2400.0
//! solver = "lp"
//! schedule = [{ time = 0.0, value = 0.0 }, { time = 0.02, value = 10.5 }]
//!
//! [plant]       # MotorParams overrides by field name
//! k = 0.3674
//!
//! [controller]  # ControllerConfig overrides by field name
//! u_max = 250.0
//! ```
//!
//! Schedule values are torque references in Nm for torque control and speed
//! references in rpm for speed control.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::controller::ControllerConfig;
use crate::error::{Error, Result};
use crate::motor::MotorParams;
use crate::optimizer::SolverKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Torque references, speed imposed by a load machine.
    TorqueControl,
    /// Speed references through the PI loop, free rotor inertia.
    SpeedControl,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverSelection {
    #[default]
    Lp,
    Qp,
    Both,
}

impl SolverSelection {
    pub fn kinds(self) -> Vec<SolverKind> {
        match self {
            Self::Lp => vec![SolverKind::Lp],
            Self::Qp => vec![SolverKind::Qp],
            Self::Both => vec![SolverKind::Lp, SolverKind::Qp],
        }
    }
}

impl std::str::FromStr for SolverSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lp" => Ok(Self::Lp),
            "qp" => Ok(Self::Qp),
            "both" => Ok(Self::Both),
            other => Err(Error::Scenario(format!("unknown solver `{other}` (lp, qp or both)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Step {
    pub time: f64,
    pub value: f64,
}

fn default_inertia() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub mode: Mode,
    pub schedule: Vec<Step>,
    /// Held speed in torque control, initial speed in speed control.
    #[serde(default)]
    pub speed_rpm: f64,
    /// Rotor inertia for speed control (kg m^2).
    #[serde(default = "default_inertia")]
    pub inertia: f64,
    #[serde(default)]
    pub load_torque: f64,
    #[serde(default)]
    pub plant: BTreeMap<String, f64>,
    #[serde(default)]
    pub controller: BTreeMap<String, f64>,
    #[serde(default)]
    pub solver: SolverSelection,
    pub duration: f64,
    #[serde(default)]
    pub seed: u64,
    /// Standard deviation of additive current measurement noise (A).
    #[serde(default)]
    pub current_noise: f64,
    /// Initial plant current; the loop starts in the steady state of this
    /// current at the initial speed.
    #[serde(default)]
    pub initial_i_d: f64,
    #[serde(default)]
    pub initial_i_q: f64,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let sc: Self = toml::from_str(text)?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario fields are plain data")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::Scenario(format!("duration must be positive, got {}", self.duration)));
        }
        if self.schedule.is_empty() {
            return Err(Error::Scenario("schedule needs at least one step".into()));
        }
        if self.schedule.windows(2).any(|w| !(w[1].time > w[0].time)) {
            return Err(Error::Scenario("schedule times must be strictly increasing".into()));
        }
        if self.schedule.iter().any(|s| !(s.time.is_finite() && s.value.is_finite())) {
            return Err(Error::Scenario("schedule entries must be finite".into()));
        }
        if self.mode == Mode::SpeedControl && !(self.inertia > 0.0) {
            return Err(Error::Scenario("speed control needs a positive inertia".into()));
        }
        if !(self.initial_i_d.is_finite() && self.initial_i_q.is_finite()) {
            return Err(Error::Scenario("initial currents must be finite".into()));
        }
        if !(self.current_noise >= 0.0) {
            return Err(Error::Scenario("current_noise must be >= 0".into()));
        }
        let mut p = MotorParams::default();
        for (k, v) in &self.plant {
            p.set(k, *v)?;
        }
        let mut cfg = ControllerConfig::default();
        for (k, v) in &self.controller {
            cfg.set(k, *v)?;
        }
        Ok(())
    }

    /// Reference value in effect at time `t`; zero before the first step.
    pub fn reference(&self, t: f64) -> f64 {
        self.schedule
            .iter()
            .take_while(|s| s.time <= t)
            .last()
            .map_or(0.0, |s| s.value)
    }

    /// Time of the last reference change.
    pub fn last_step_time(&self) -> f64 {
        self.schedule.last().map_or(0.0, |s| s.time)
    }

    pub fn plant_params(&self, base: &MotorParams) -> Result<MotorParams> {
        let mut p = *base;
        for (k, v) in &self.plant {
            p.set(k, *v)?;
        }
        p.validate()?;
        Ok(p)
    }

    pub fn controller_config(&self, base: &ControllerConfig) -> Result<ControllerConfig> {
        let mut cfg = *base;
        for (k, v) in &self.controller {
            cfg.set(k, *v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

const BUILTIN: [(&str, &str); 8] = [
    ("fig8a", include_str!("../../scenarios/fig8a.toml")),
    ("fig8b", include_str!("../../scenarios/fig8b.toml")),
    ("fig8c", include_str!("../../scenarios/fig8c.toml")),
    ("fig8d", include_str!("../../scenarios/fig8d.toml")),
    ("fig9a", include_str!("../../scenarios/fig9a.toml")),
    ("fig9b", include_str!("../../scenarios/fig9b.toml")),
    ("zero", include_str!("../../scenarios/zero.toml")),
    ("k-plus-10", include_str!("../../scenarios/k-plus-10.toml")),
];

/// Names of the scenarios shipped with the crate.
pub fn builtin_names() -> Vec<&'static str> {
    BUILTIN.iter().map(|(n, _)| *n).collect()
}

pub fn builtin(name: &str) -> Result<Scenario> {
    let (_, text) = BUILTIN
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::Scenario(format!("no builtin scenario `{name}`")))?;
    Scenario::from_toml(text)
}
