//! Impedance law for the generated torque and the two-mass elastic model.
//!
//! The generated torque is
//!
//! ```text
//! τ_gen = −ΔI·ω̇ − ΔD·ω − T_e(k_r, c_r)
//! ```
//!
//! where `T_e` comes from a virtual rod: the grip (base) follows the measured
//! angular acceleration, a tip mass hangs off it through a torsional spring
//! `k_r` and damper `c_r`, and `T_e = −k_r·Δθ − c_r·Δθ̇` with
//! `Δθ = θ_tip − θ_base`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::plant::CALIBRATED_INERTIA;

pub const DEFAULT_DIVERGENCE_BOUND: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImpedanceParams {
    #[serde(rename = "delta_I")]
    pub delta_inertia: f64,
    #[serde(rename = "delta_D")]
    pub delta_damping: f64,
    pub k_r: f64,
    pub c_r: f64,
    /// Inertia of the virtual tip mass.
    #[serde(rename = "I_tip", default = "default_tip_inertia")]
    pub tip_inertia: f64,
}

fn default_tip_inertia() -> f64 {
    CALIBRATED_INERTIA
}

impl Default for ImpedanceParams {
    fn default() -> Self {
        Self {
            delta_inertia: 0.0,
            delta_damping: 0.0,
            k_r: 0.0,
            c_r: 0.0,
            tip_inertia: CALIBRATED_INERTIA,
        }
    }
}

impl ImpedanceParams {
    pub fn new(delta_inertia: f64, delta_damping: f64, k_r: f64, c_r: f64) -> Self {
        Self {
            delta_inertia,
            delta_damping,
            k_r,
            c_r,
            tip_inertia: CALIBRATED_INERTIA,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite(self.delta_inertia, "delta_I")?;
        ensure_finite(self.delta_damping, "delta_D")?;
        if !(self.k_r.is_finite() && self.k_r >= 0.0) {
            return Err(Error::invalid("k_r", "must be finite and >= 0"));
        }
        if !(self.c_r.is_finite() && self.c_r >= 0.0) {
            return Err(Error::invalid("c_r", "must be finite and >= 0"));
        }
        if !(self.tip_inertia.is_finite() && self.tip_inertia > 0.0) {
            return Err(Error::invalid("I_tip", "must be finite and > 0"));
        }
        Ok(())
    }

    pub fn is_elastic(&self) -> bool {
        self.k_r > 0.0 || self.c_r > 0.0
    }
}

/// State of the virtual rod: base (grip) and tip orientations, rates and
/// accelerations.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ElasticState {
    pub theta1: f64,
    pub omega1: f64,
    pub alpha1: f64,
    pub theta2: f64,
    pub omega2: f64,
    pub alpha2: f64,
}

impl ElasticState {
    pub fn reset(&mut self) {
        *self = Self::default();
    }

    /// Bending of the rod, `θ_tip − θ_base`.
    pub fn delta_theta(&self) -> f64 {
        self.theta2 - self.theta1
    }

    pub fn delta_omega(&self) -> f64 {
        self.omega2 - self.omega1
    }

    fn is_finite(&self) -> bool {
        [
            self.theta1,
            self.omega1,
            self.alpha1,
            self.theta2,
            self.omega2,
            self.alpha2,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// One tick of the elastic model. Returns the rod torque `T_e` and the
/// updated state.
pub fn elastic_step(
    state: &ElasticState,
    base_accel_measured: f64,
    dt: f64,
    params: &ImpedanceParams,
) -> Result<(f64, ElasticState)> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::invalid("dt", "must be finite and > 0"));
    }
    ensure_finite(base_accel_measured, "measured angular acceleration")?;
    if !state.is_finite() {
        return Err(Error::NonFinite("elastic state"));
    }
    let mut next = *state;

    // grip follows the sensor
    next.alpha1 = base_accel_measured;
    next.omega1 += next.alpha1 * dt;
    next.theta1 += next.omega1 * dt;

    let bend = next.theta2 - next.theta1;
    let bend_rate = next.omega2 - next.omega1;
    let torque = -params.k_r * bend - params.c_r * bend_rate;

    next.alpha2 = torque / params.tip_inertia;
    next.omega2 += next.alpha2 * dt;
    next.theta2 += next.omega2 * dt;

    Ok((torque, next))
}

/// `τ_gen = −ΔI·α − ΔD·ω − T_e`
pub fn generated_torque(
    omega_meas: f64,
    alpha_meas: f64,
    elastic_torque: f64,
    params: &ImpedanceParams,
) -> f64 {
    -params.delta_inertia * alpha_meas - params.delta_damping * omega_meas - elastic_torque
}

/// A control loop's impedance renderer. Owns its elastic state.
#[derive(Clone, Debug)]
pub struct ImpedanceController {
    params: ImpedanceParams,
    elastic: ElasticState,
    divergence_bound: f64,
    time: f64,
}

/// What the controller computed on one tick.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControlOutput {
    pub tau_gen: f64,
    pub elastic_torque: f64,
}

impl ImpedanceController {
    pub fn new(params: ImpedanceParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            elastic: ElasticState::default(),
            divergence_bound: DEFAULT_DIVERGENCE_BOUND,
            time: 0.0,
        })
    }

    pub fn with_divergence_bound(mut self, bound: f64) -> Result<Self> {
        if !(bound > 0.0) {
            return Err(Error::invalid("divergence_bound", "must be > 0"));
        }
        self.divergence_bound = bound;
        Ok(self)
    }

    pub fn params(&self) -> &ImpedanceParams {
        &self.params
    }

    pub fn elastic_state(&self) -> &ElasticState {
        &self.elastic
    }

    pub fn reset(&mut self) {
        self.elastic.reset();
        self.time = 0.0;
    }

    /// Compute the generated torque from the sensed rate and acceleration.
    ///
    /// The elastic model is only integrated when `k_r` or `c_r` is nonzero.
    pub fn update(&mut self, omega_meas: f64, alpha_meas: f64, dt: f64) -> Result<ControlOutput> {
        ensure_finite(omega_meas, "measured angular velocity")?;
        let elastic_torque = if self.params.is_elastic() {
            let (torque, next) = elastic_step(&self.elastic, alpha_meas, dt, &self.params)?;
            let bend = next.delta_theta().abs();
            if bend > self.divergence_bound || !bend.is_finite() {
                return Err(Error::Instability {
                    time: self.time,
                    delta_theta: bend,
                    bound: self.divergence_bound,
                });
            }
            self.elastic = next;
            torque
        } else {
            ensure_finite(alpha_meas, "measured angular acceleration")?;
            0.0
        };
        self.time += dt;
        Ok(ControlOutput {
            tau_gen: generated_torque(omega_meas, alpha_meas, elastic_torque, &self.params),
            elastic_torque,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConditionName {
    IncreasedInertia,
    DecreasedInertia,
    DampingIncrease,
    DampingDecrease,
    /// Also called "decreased stiffness" in the perception experiments.
    #[serde(alias = "decreased-stiffness")]
    ElasticityIncrease,
}

impl ConditionName {
    pub const ALL: [ConditionName; 5] = [
        ConditionName::IncreasedInertia,
        ConditionName::DecreasedInertia,
        ConditionName::DampingIncrease,
        ConditionName::DampingDecrease,
        ConditionName::ElasticityIncrease,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ConditionName::IncreasedInertia => "increased-inertia",
            ConditionName::DecreasedInertia => "decreased-inertia",
            ConditionName::DampingIncrease => "damping-increase",
            ConditionName::DampingDecrease => "damping-decrease",
            ConditionName::ElasticityIncrease => "elasticity-increase",
        }
    }
}

impl fmt::Display for ConditionName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConditionName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .trim()
            .to_ascii_lowercase()
            .chars()
            .map(|c| if c == ' ' || c == '_' { '-' } else { c })
            .collect();
        let name = match norm.as_str() {
            "increased-inertia" | "inertia-increase" => ConditionName::IncreasedInertia,
            "decreased-inertia" | "inertia-decrease" => ConditionName::DecreasedInertia,
            "damping-increase" | "increased-damping" => ConditionName::DampingIncrease,
            "damping-decrease" | "decreased-damping" => ConditionName::DampingDecrease,
            "elasticity-increase" | "decreased-stiffness" => ConditionName::ElasticityIncrease,
            _ => {
                return Err(Error::invalid(
                    "condition",
                    format!(
                        "unknown condition `{s}` (expected one of: {})",
                        ConditionName::ALL.map(|c| c.as_str()).join(", ")
                    ),
                ))
            }
        };
        Ok(name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Condition {
    pub name: ConditionName,
    pub params: ImpedanceParams,
}

impl Condition {
    /// The measurement-study parameters for `name`.
    pub fn canonical(name: ConditionName) -> Self {
        let params = match name {
            ConditionName::IncreasedInertia => ImpedanceParams::new(0.002, 0.0, 0.0, 0.0),
            ConditionName::DecreasedInertia => ImpedanceParams::new(-0.002, 0.0, 0.0, 0.0),
            ConditionName::DampingIncrease => ImpedanceParams::new(0.0, 0.02, 0.0, 0.0),
            ConditionName::DampingDecrease => ImpedanceParams::new(0.0, -0.02, 0.0, 0.0),
            ConditionName::ElasticityIncrease => ImpedanceParams::new(0.0, 0.0, 0.2, 0.001),
        };
        Condition { name, params }
    }
}

/// The five impedance conditions of the torque-measurement study.
pub fn measurement_conditions() -> Vec<Condition> {
    ConditionName::ALL.into_iter().map(Condition::canonical).collect()
}
