//! Scissored-pair control moment gyroscope.
//!
//! Two flywheels of momentum `h` are gimballed at `(φ, −φ)` and driven at
//! `(φ̇, −φ̇)`. Their gyroscopic reactions cancel off-axis and add on the
//! output (pitch) axis:
//!
//! ```text
//! τ = −2·h·sin(φ)·φ̇
//! ```
//!
//! `φ = 0` is the torque-null orientation. The output is the time derivative
//! of `2·h·cos(φ)`, so the impulse a gimbal excursion can deliver is bounded
//! by the change of `cos φ` over the angle range.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

pub const DEFAULT_RATE_LIMIT: f64 = 20.0;
pub const DEFAULT_ANGLE_MIN: f64 = -170.0 * std::f64::consts::PI / 180.0;
pub const DEFAULT_ANGLE_MAX: f64 = 170.0 * std::f64::consts::PI / 180.0;
pub const DEFAULT_INITIAL_PHI: f64 = std::f64::consts::FRAC_PI_2;

/// `|sin φ|` below which the gimbal is treated as singular (sin 3°).
pub fn singularity_epsilon() -> f64 {
    3.0_f64.to_radians().sin()
}

pub fn rpm_to_rad_per_s(rpm: f64) -> f64 {
    rpm * 2.0 * std::f64::consts::PI / 60.0
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlywheelSpec {
    inertia_fw: f64,
    spin_rate: f64,
    momentum: f64,
}

impl FlywheelSpec {
    /// `inertia_fw` in kg·m² about the spin axis, `spin_rate` in rad/s.
    pub fn new(inertia_fw: f64, spin_rate: f64) -> Result<Self> {
        if !(inertia_fw.is_finite() && inertia_fw > 0.0) {
            return Err(Error::invalid("cmg.flywheel_inertia", "must be finite and > 0"));
        }
        if !(spin_rate.is_finite() && spin_rate > 0.0) {
            return Err(Error::invalid("cmg.spin_rate", "must be finite and > 0"));
        }
        Ok(Self {
            inertia_fw,
            spin_rate,
            momentum: inertia_fw * spin_rate,
        })
    }

    pub fn from_rpm(inertia_fw: f64, rpm: f64) -> Result<Self> {
        Self::new(inertia_fw, rpm_to_rad_per_s(rpm))
    }

    pub fn inertia_fw(&self) -> f64 {
        self.inertia_fw
    }

    pub fn spin_rate(&self) -> f64 {
        self.spin_rate
    }

    /// Angular momentum `h = I_fw·Ω`, N·m·s.
    pub fn momentum(&self) -> f64 {
        self.momentum
    }
}

impl Default for FlywheelSpec {
    /// Stainless 40 mm, 30 g wheel (1.27e-5 kg·m²) spinning at 8000 rpm.
    fn default() -> Self {
        Self::from_rpm(1.27e-5, 8000.0).expect("default flywheel is valid")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GimbalLimits {
    /// rad/s
    pub rate_limit: f64,
    /// rad
    pub angle_min: f64,
    /// rad
    pub angle_max: f64,
}

impl Default for GimbalLimits {
    fn default() -> Self {
        Self {
            rate_limit: DEFAULT_RATE_LIMIT,
            angle_min: DEFAULT_ANGLE_MIN,
            angle_max: DEFAULT_ANGLE_MAX,
        }
    }
}

impl GimbalLimits {
    pub fn validate(&self) -> Result<()> {
        if !(self.rate_limit.is_finite() && self.rate_limit > 0.0) {
            return Err(Error::invalid("cmg.rate_limit", "must be finite and > 0"));
        }
        if !(self.angle_min.is_finite()
            && self.angle_max.is_finite()
            && self.angle_min < self.angle_max)
        {
            return Err(Error::invalid("cmg.angle_range", "need finite min < max"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CmgState {
    /// Gimbal angle of the first unit; the second sits at `−phi`.
    pub phi: f64,
    pub phi_rate: f64,
    pub limits: GimbalLimits,
}

impl CmgState {
    pub fn new(phi: f64, limits: GimbalLimits) -> Result<Self> {
        limits.validate()?;
        ensure_finite(phi, "gimbal angle")?;
        if phi < limits.angle_min || phi > limits.angle_max {
            return Err(Error::invalid("cmg.initial_phi", "outside the gimbal angle range"));
        }
        Ok(Self {
            phi,
            phi_rate: 0.0,
            limits,
        })
    }

    /// True when the gimbal rests against either end of its range.
    pub fn at_stop(&self) -> bool {
        self.phi <= self.limits.angle_min || self.phi >= self.limits.angle_max
    }
}

impl Default for CmgState {
    fn default() -> Self {
        Self {
            phi: DEFAULT_INITIAL_PHI,
            phi_rate: 0.0,
            limits: GimbalLimits::default(),
        }
    }
}

/// Pitch-axis output torque, N·m.
pub fn forward_torque(state: &CmgState, spec: &FlywheelSpec) -> f64 {
    -2.0 * spec.momentum() * state.phi.sin() * state.phi_rate
}

/// Full torque vector as the sum of both units' gyroscopic reactions.
///
/// A unit at gimbal angle `φᵢ` driven at `φ̇ᵢ` produces
/// `h·φ̇ᵢ·(−sin φᵢ, cos φᵢ, 0)`; with `(φ, −φ)` and `(φ̇, −φ̇)` the second
/// component cancels.
pub fn torque_vector(state: &CmgState, spec: &FlywheelSpec) -> [f64; 3] {
    let h = spec.momentum();
    let unit = |phi: f64, rate: f64| [-h * rate * phi.sin(), h * rate * phi.cos(), 0.0];
    let a = unit(state.phi, state.phi_rate);
    let b = unit(-state.phi, -state.phi_rate);
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

/// Largest torque magnitude available at `phi`: `2·h·|sin φ|·rate_limit`.
pub fn torque_envelope(phi: f64, spec: &FlywheelSpec, rate_limit: f64) -> f64 {
    2.0 * spec.momentum() * phi.sin().abs() * rate_limit
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GimbalCommand {
    pub rate: f64,
    /// Rate was clamped or the escape rate was issued.
    pub saturated: bool,
    /// `|sin φ|` was below the singularity threshold.
    pub singular: bool,
}

/// Gimbal rate that yields `tau_desired` at `phi`, clamped to `±rate_limit`.
///
/// Near the torque-null orientation (`|sin φ| < ε`) a request the gimbal
/// cannot meet within its rate limit gets the full rate in the direction
/// that grows `|sin φ|` instead, and the command is flagged.
pub fn inverse_gimbal_rate(
    tau_desired: f64,
    phi: f64,
    spec: &FlywheelSpec,
    rate_limit: f64,
) -> GimbalCommand {
    let s = phi.sin();
    let raw = -tau_desired / (2.0 * spec.momentum() * s);
    if s.abs() < singularity_epsilon() && !(raw.abs() <= rate_limit) {
        // d|sin φ|/dt = sign(sin φ)·cos φ·φ̇
        let direction = if s == 0.0 {
            phi.cos().signum()
        } else {
            (s * phi.cos()).signum()
        };
        return GimbalCommand {
            rate: direction * rate_limit,
            saturated: true,
            singular: true,
        };
    }
    let rate = raw.clamp(-rate_limit, rate_limit);
    GimbalCommand {
        rate,
        saturated: rate != raw,
        singular: false,
    }
}

/// Rate-limited integrator standing in for the geared gimbal motor.
///
/// At a range stop the angle is pinned and the rate zeroed.
pub fn step_gimbal(state: &CmgState, rate_cmd: f64, dt: f64) -> CmgState {
    let lim = &state.limits;
    let rate = rate_cmd.clamp(-lim.rate_limit, lim.rate_limit);
    let phi = state.phi + rate * dt;
    let (phi, rate) = if phi > lim.angle_max {
        (lim.angle_max, 0.0)
    } else if phi < lim.angle_min {
        (lim.angle_min, 0.0)
    } else {
        (phi, rate)
    };
    CmgState {
        phi,
        phi_rate: rate,
        limits: *lim,
    }
}
