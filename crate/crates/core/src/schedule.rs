//! Driver schedules `g(t) = c / f(t)` and their time derivatives.
//!
//! Every profile diverges at `t = 0`, so evaluation is only allowed for
//! `t >= t_floor`. Runners place `t_floor` half a step after zero and sample
//! `g` at step midpoints.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of the decay `f(t)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// `f(t) = ln(1 + t)`
    Log,
    /// `f(t) = sqrt(t)`
    Sqrt,
    /// `f(t) = t`
    Linear,
    /// `f(t) = t^2`
    Quadratic,
}

impl Profile {
    pub const ALL: [Profile; 4] = [Profile::Log, Profile::Sqrt, Profile::Linear, Profile::Quadratic];

    pub fn name(self) -> &'static str {
        match self {
            Profile::Log => "log",
            Profile::Sqrt => "sqrt",
            Profile::Linear => "linear",
            Profile::Quadratic => "quadratic",
        }
    }

    fn f(self, t: f64) -> f64 {
        match self {
            Profile::Log => t.ln_1p(),
            Profile::Sqrt => t.sqrt(),
            Profile::Linear => t,
            Profile::Quadratic => t * t,
        }
    }

    fn f_prime(self, t: f64) -> f64 {
        match self {
            Profile::Log => 1.0 / (1.0 + t),
            Profile::Sqrt => 0.5 / t.sqrt(),
            Profile::Linear => 1.0,
            Profile::Quadratic => 2.0 * t,
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "log" => Ok(Profile::Log),
            "sqrt" => Ok(Profile::Sqrt),
            "linear" => Ok(Profile::Linear),
            "quadratic" => Ok(Profile::Quadratic),
            other => Err(Error::invalid(format!("unknown schedule profile '{other}'"))),
        }
    }
}

/// How a schedule value becomes a Metropolis temperature.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemperatureMapping {
    /// `T = g(t)`.
    Direct,
    /// `1/T = g(t)`.
    Inverse,
    /// `T = g(t) / c = 1 / f(t)`: the profile shape without the driver scale.
    #[default]
    Shape,
}

impl TemperatureMapping {
    pub fn name(self) -> &'static str {
        match self {
            TemperatureMapping::Direct => "direct",
            TemperatureMapping::Inverse => "inverse",
            TemperatureMapping::Shape => "shape",
        }
    }

    pub fn temperature(self, sched: &Schedule, g: f64) -> f64 {
        match self {
            TemperatureMapping::Direct => g,
            TemperatureMapping::Inverse => 1.0 / g,
            TemperatureMapping::Shape => g / sched.c,
        }
    }
}

impl FromStr for TemperatureMapping {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "direct" => Ok(TemperatureMapping::Direct),
            "inverse" => Ok(TemperatureMapping::Inverse),
            "shape" => Ok(TemperatureMapping::Shape),
            other => Err(Error::invalid(format!("unknown temperature mapping '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub profile: Profile,
    pub c: f64,
    pub total_time: f64,
    pub t_floor: f64,
}

impl Schedule {
    pub const DEFAULT_T_FLOOR: f64 = 0.05;

    pub fn new(profile: Profile, c: f64, total_time: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::invalid(format!("schedule scale c must be positive, got {c}")));
        }
        if !(total_time.is_finite() && total_time > 0.0) {
            return Err(Error::invalid(format!(
                "total time must be positive, got {total_time}"
            )));
        }
        Ok(Schedule { profile, c, total_time, t_floor: Self::DEFAULT_T_FLOOR })
    }

    pub fn with_t_floor(self, t_floor: f64) -> Result<Self> {
        if !(t_floor.is_finite() && t_floor > 0.0) {
            return Err(Error::invalid(format!("t_floor must be positive, got {t_floor}")));
        }
        Ok(Schedule { t_floor, ..self })
    }

    fn check(&self, t: f64) -> Result<()> {
        if t.is_nan() || t < self.t_floor {
            return Err(Error::Domain(format!(
                "t = {t} is below t_floor = {}",
                self.t_floor
            )));
        }
        Ok(())
    }

    /// Driver amplitude `c / f(t)`.
    pub fn g(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        Ok(self.c / self.profile.f(t))
    }

    /// Closed-form `d/dt [c / f(t)] = -c f'(t) / f(t)^2`.
    pub fn g_dot(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        let f = self.profile.f(t);
        Ok(-self.c * self.profile.f_prime(t) / (f * f))
    }

    /// Time at the midpoint of sweep `k` when `total_time` is split into
    /// `total_sweeps` equal intervals starting at `t_floor`.
    pub fn sweep_time(&self, sweep_index: usize, total_sweeps: usize) -> Result<f64> {
        if total_sweeps == 0 || sweep_index >= total_sweeps {
            return Err(Error::invalid(format!(
                "sweep index {sweep_index} out of range for {total_sweeps} sweeps"
            )));
        }
        let width = self.total_time / total_sweeps as f64;
        Ok(self.t_floor + (sweep_index as f64 + 0.5) * width)
    }

    /// Schedule value `g(t_k)` driving sweep `k` of a classical run.
    pub fn classical_temperature(&self, sweep_index: usize, total_sweeps: usize) -> Result<f64> {
        self.g(self.sweep_time(sweep_index, total_sweeps)?)
    }
}
