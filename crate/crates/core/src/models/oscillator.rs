//! Forced damped oscillator with two response constraints.
//!
//! `(x₁+u₁) Y'' + u_p Y' + (x₂+u₂) Y = η(t)` is integrated from rest with
//! fixed-step RK4. The constraints are
//! `g₁ = u_r1 − max_t Y'(t)` and `g₂ = u_r2 − max_t Y''(t)`, both maxima
//! taken on the integration grid. Inputs are ordered
//! `[U1, U2, Up, Ur1, Ur2, Ur3]`; `Ur3` enters neither constraint.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use dashmap::DashMap;
use serde::{Deserialize, Serialize};

use crate::domain::{BoxDomain, RegionOracle};
use crate::error::{Error, Result};
use crate::kernels::MarginalDistribution;

/// Right-hand side `η(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Forcing {
    /// `η(t) = amplitude` for `t >= 0`.
    Step { amplitude: f64 },
    /// `η(t) = amplitude · sin(omega · t)`, `omega` in rad per unit time.
    Sine { omega: f64, amplitude: f64 },
}

impl Forcing {
    pub const DEFAULT_STEP_AMPLITUDE: f64 = 10.0;

    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Forcing::Step { amplitude } => amplitude,
            Forcing::Sine { omega, amplitude } => amplitude * (omega * t).sin(),
        }
    }
}

impl Default for Forcing {
    fn default() -> Self {
        Forcing::Step {
            amplitude: Self::DEFAULT_STEP_AMPLITUDE,
        }
    }
}

impl fmt::Display for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Forcing::Step { amplitude } => write!(f, "step:{amplitude}"),
            Forcing::Sine { omega, amplitude } => write!(f, "sine:{omega}:{amplitude}"),
        }
    }
}

/// `step`, `step:<amplitude>`, `sine:<omega>` or `sine:<omega>:<amplitude>`.
impl FromStr for Forcing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("cannot parse forcing `{s}`"));
        let mut parts = s.trim().split(':');
        let kind = parts.next().ok_or_else(bad)?;
        let nums: Vec<f64> = parts
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        if nums.iter().any(|v| !v.is_finite()) {
            return Err(bad());
        }
        match (kind, nums.as_slice()) {
            ("step", []) => Ok(Forcing::default()),
            ("step", [a]) => Ok(Forcing::Step { amplitude: *a }),
            ("sine", [w]) => Ok(Forcing::Sine {
                omega: *w,
                amplitude: 1.0,
            }),
            ("sine", [w, a]) => Ok(Forcing::Sine {
                omega: *w,
                amplitude: *a,
            }),
            _ => Err(bad()),
        }
    }
}

impl Serialize for Forcing {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Forcing {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Integration settings shared by every trajectory of a study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OscillatorSettings {
    pub forcing: Forcing,
    pub horizon: f64,
    pub dt: f64,
}

impl Default for OscillatorSettings {
    fn default() -> Self {
        Self {
            forcing: Forcing::default(),
            horizon: 10.0,
            dt: 0.01,
        }
    }
}

/// Physical parameters of one solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorParams {
    pub mass: f64,
    pub damping: f64,
    pub stiffness: f64,
    pub forcing: Forcing,
    pub horizon: f64,
    pub dt: f64,
}

/// Sampled trajectory on the grid `t_k = k·dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub time: Vec<f64>,
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub acceleration: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMaxima {
    pub max_velocity: f64,
    pub max_acceleration: f64,
}

impl OscillatorParams {
    fn validate(&self) -> Result<usize> {
        if !(self.mass > 0.0) {
            return Err(Error::NonphysicalMass(self.mass));
        }
        if !(self.stiffness > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "stiffness {} must be positive",
                self.stiffness
            )));
        }
        if !(self.dt > 0.0 && self.horizon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "dt {} and horizon {} must be positive",
                self.dt, self.horizon
            )));
        }
        Ok((self.horizon / self.dt).round().max(1.0) as usize)
    }

    #[inline]
    fn acceleration(&self, t: f64, y: f64, v: f64) -> f64 {
        (self.forcing.eval(t) - self.damping * v - self.stiffness * y) / self.mass
    }

    /// Calls `visit(t, y, y', y'')` at every grid point, starting from `(y0, v0)`.
    fn integrate_with<F: FnMut(f64, f64, f64, f64)>(
        &self,
        y0: f64,
        v0: f64,
        mut visit: F,
    ) -> Result<()> {
        let steps = self.validate()?;
        let h = self.dt;
        let (mut y, mut v) = (y0, v0);
        visit(0.0, y, v, self.acceleration(0.0, y, v));
        for k in 0..steps {
            let t = k as f64 * h;
            let (k1y, k1v) = (v, self.acceleration(t, y, v));
            let (k2y, k2v) = (
                v + 0.5 * h * k1v,
                self.acceleration(t + 0.5 * h, y + 0.5 * h * k1y, v + 0.5 * h * k1v),
            );
            let (k3y, k3v) = (
                v + 0.5 * h * k2v,
                self.acceleration(t + 0.5 * h, y + 0.5 * h * k2y, v + 0.5 * h * k2v),
            );
            let (k4y, k4v) = (
                v + h * k3v,
                self.acceleration(t + h, y + h * k3y, v + h * k3v),
            );
            y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
            v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            let t_next = (k + 1) as f64 * h;
            visit(t_next, y, v, self.acceleration(t_next, y, v));
        }
        Ok(())
    }

    /// Full trajectory from arbitrary initial conditions.
    pub fn trajectory(&self, y0: f64, v0: f64) -> Result<Trajectory> {
        let mut out = Trajectory {
            time: Vec::new(),
            position: Vec::new(),
            velocity: Vec::new(),
            acceleration: Vec::new(),
        };
        self.integrate_with(y0, v0, |t, y, v, a| {
            out.time.push(t);
            out.position.push(y);
            out.velocity.push(v);
            out.acceleration.push(a);
        })?;
        Ok(out)
    }

    /// Grid maxima of `Y'` and `Y''` (signed) from `(y0, v0)`.
    pub fn maxima_from(&self, y0: f64, v0: f64) -> Result<TrajectoryMaxima> {
        let mut best = TrajectoryMaxima {
            max_velocity: f64::NEG_INFINITY,
            max_acceleration: f64::NEG_INFINITY,
        };
        self.integrate_with(y0, v0, |_, _, v, a| {
            best.max_velocity = best.max_velocity.max(v);
            best.max_acceleration = best.max_acceleration.max(a);
        })?;
        Ok(best)
    }
}

/// Grid maxima of `Y'` and `Y''` from rest.
pub fn oscillator_trajectory(params: &OscillatorParams) -> Result<TrajectoryMaxima> {
    params.maxima_from(0.0, 0.0)
}

/// Which output of the oscillator case is studied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OscillatorOutput {
    G1,
    G2,
    /// `(Γ_g1, Γ_g2)` with the product kernel `k_set ⊗ k_set`.
    Pair,
    /// `Γ_g1 ∩ Γ_g2`.
    Intersection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    G1,
    G2,
    Both,
}

type CacheKey = [u64; 5];

/// Oscillator case with a per-(x,u) trajectory cache keyed on exact bit patterns.
#[derive(Debug, Clone)]
pub struct OscillatorCase {
    domain: BoxDomain,
    settings: OscillatorSettings,
    cache: Arc<DashMap<CacheKey, TrajectoryMaxima>>,
}

impl OscillatorCase {
    pub fn new(settings: OscillatorSettings) -> Self {
        Self {
            domain: BoxDomain::new(vec![1.0, 20.0], vec![5.0, 50.0]).expect("valid box"),
            settings,
            cache: Arc::default(),
        }
    }

    pub fn settings(&self) -> &OscillatorSettings {
        &self.settings
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    /// Same case, empty cache.
    pub fn fresh(&self) -> Self {
        Self::new(self.settings)
    }

    pub fn cached_trajectories(&self) -> usize {
        self.cache.len()
    }

    pub fn marginals() -> Vec<MarginalDistribution> {
        vec![
            MarginalDistribution::Uniform { a: -0.3, b: 0.3 },
            MarginalDistribution::Uniform { a: -1.0, b: 1.0 },
            MarginalDistribution::Uniform { a: 0.5, b: 1.5 },
            MarginalDistribution::Normal { mean: 1.0, sd: 0.1 },
            MarginalDistribution::Normal {
                mean: 2.5,
                sd: 0.25,
            },
            MarginalDistribution::Normal {
                mean: 15.0,
                sd: 3.0,
            },
        ]
    }

    pub fn input_names() -> Vec<String> {
        ["U1", "U2", "Up", "Ur1", "Ur2", "Ur3"]
            .map(String::from)
            .to_vec()
    }

    pub fn params(&self, x: &[f64], u: &[f64]) -> OscillatorParams {
        OscillatorParams {
            mass: x[0] + u[0],
            damping: u[2],
            stiffness: x[1] + u[1],
            forcing: self.settings.forcing,
            horizon: self.settings.horizon,
            dt: self.settings.dt,
        }
    }

    pub fn maxima(&self, x: &[f64], u: &[f64]) -> Result<TrajectoryMaxima> {
        let key = [x[0], x[1], u[0], u[1], u[2]].map(f64::to_bits);
        if let Some(hit) = self.cache.get(&key) {
            return Ok(*hit);
        }
        let value = oscillator_trajectory(&self.params(x, u))?;
        self.cache.insert(key, value);
        Ok(value)
    }

    pub fn g1(&self, x: &[f64], u: &[f64]) -> Result<f64> {
        Ok(u[3] - self.maxima(x, u)?.max_velocity)
    }

    pub fn g2(&self, x: &[f64], u: &[f64]) -> Result<f64> {
        Ok(u[4] - self.maxima(x, u)?.max_acceleration)
    }

    pub fn oracle(&self, constraint: Constraint) -> ConstraintOracle<'_> {
        ConstraintOracle {
            case: self,
            constraint,
        }
    }
}

/// Membership oracle of `Γ_g1`, `Γ_g2` or their intersection.
pub struct ConstraintOracle<'a> {
    case: &'a OscillatorCase,
    constraint: Constraint,
}

impl RegionOracle for ConstraintOracle<'_> {
    fn domain(&self) -> &BoxDomain {
        &self.case.domain
    }

    fn contains(&self, x: &[f64], u: &[f64]) -> Result<bool> {
        Ok(match self.constraint {
            Constraint::G1 => self.case.g1(x, u)? <= 0.0,
            Constraint::G2 => self.case.g2(x, u)? <= 0.0,
            Constraint::Both => self.case.g1(x, u)? <= 0.0 && self.case.g2(x, u)? <= 0.0,
        })
    }
}
