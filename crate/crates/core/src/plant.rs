//! Single-axis rotational dynamics of the hand plus device.
//!
//! `I·ω̇ = τ_human + τ_gen − D·ω`, integrated with semi-implicit Euler
//! (velocity first, then angle with the new velocity).

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Overall moment of inertia of hand and device about the pitch axis.
///
/// Not a measured value: chosen so that the elastic condition
/// (k_r = 0.2 N·m/rad) rings at about 2 Hz, `√(0.2 / 1.27e-3) / 2π ≈ 1.997 Hz`.
pub const CALIBRATED_INERTIA: f64 = 1.27e-3;

pub const DEFAULT_TIME_STEP: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantParams {
    /// kg·m²
    pub inertia_total: f64,
    /// N·m·s/rad
    pub damping_inherent: f64,
    /// s
    pub time_step: f64,
}

impl Default for PlantParams {
    fn default() -> Self {
        Self {
            inertia_total: CALIBRATED_INERTIA,
            damping_inherent: 0.0,
            time_step: DEFAULT_TIME_STEP,
        }
    }
}

impl PlantParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.inertia_total.is_finite() && self.inertia_total > 0.0) {
            return Err(Error::invalid("plant.inertia_total", "must be finite and > 0"));
        }
        if !(self.damping_inherent.is_finite() && self.damping_inherent >= 0.0) {
            return Err(Error::invalid("plant.damping_inherent", "must be finite and >= 0"));
        }
        if !(self.time_step.is_finite() && self.time_step > 0.0) {
            return Err(Error::invalid("plant.time_step", "must be finite and > 0"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PlantState {
    pub theta: f64,
    pub omega: f64,
    pub omega_dot: f64,
    pub time: f64,
}

impl PlantState {
    pub fn at_rest() -> Self {
        Self::default()
    }

    pub fn kinetic_energy(&self, inertia: f64) -> f64 {
        0.5 * inertia * self.omega * self.omega
    }

    fn is_finite(&self) -> bool {
        self.theta.is_finite()
            && self.omega.is_finite()
            && self.omega_dot.is_finite()
            && self.time.is_finite()
    }
}

/// Advance one fixed time step.
pub fn step(
    state: &PlantState,
    tau_human: f64,
    tau_gen: f64,
    params: &PlantParams,
) -> Result<PlantState> {
    params.validate()?;
    ensure_finite(tau_human, "human torque")?;
    ensure_finite(tau_gen, "generated torque")?;
    if !state.is_finite() {
        return Err(Error::NonFinite("plant state"));
    }
    let dt = params.time_step;
    let omega_dot =
        (tau_human + tau_gen - params.damping_inherent * state.omega) / params.inertia_total;
    let omega = state.omega + omega_dot * dt;
    let theta = state.theta + omega * dt;
    Ok(PlantState {
        theta,
        omega,
        omega_dot,
        time: state.time + dt,
    })
}

/// Torques applied during one step.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TorqueInput {
    pub human: f64,
    pub generated: f64,
}

impl TorqueInput {
    pub fn human(human: f64) -> Self {
        Self {
            human,
            generated: 0.0,
        }
    }
}

/// Supplies the torques for the next step given the current state.
///
/// State access lets a source close a feedback loop (e.g. inject negative
/// damping); purely time-indexed sources just read `state.time`.
pub trait TorqueSource {
    fn torque(&mut self, state: &PlantState) -> std::result::Result<TorqueInput, String>;
}

impl<F> TorqueSource for F
where
    F: FnMut(&PlantState) -> std::result::Result<TorqueInput, String>,
{
    fn torque(&mut self, state: &PlantState) -> std::result::Result<TorqueInput, String> {
        self(state)
    }
}

/// A run that stopped early. `states` holds everything computed up to the
/// failure, starting with the initial condition.
#[derive(Debug, thiserror::Error)]
#[error("simulation aborted after {} states: {cause}", states.len())]
pub struct SimulationAborted {
    pub states: Vec<PlantState>,
    #[source]
    pub cause: Error,
}

/// Number of steps needed to cover `duration`, i.e. `⌈duration / dt⌉`.
pub fn step_count(duration: f64, dt: f64) -> usize {
    // guard against 1.0 / 0.001 landing a hair above an integer
    let ratio = duration / dt;
    let nearest = ratio.round();
    if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest as usize
    } else {
        ratio.ceil() as usize
    }
}

/// Integrate from `initial` for `duration` seconds.
///
/// Returns `⌈duration / time_step⌉ + 1` states; the first is `initial`.
pub fn simulate<S: TorqueSource + ?Sized>(
    params: &PlantParams,
    initial: PlantState,
    source: &mut S,
    duration: f64,
) -> std::result::Result<Vec<PlantState>, SimulationAborted> {
    let abort = |states: Vec<PlantState>, cause| SimulationAborted { states, cause };
    if let Err(cause) = params.validate() {
        return Err(abort(vec![], cause));
    }
    if !(duration.is_finite() && duration > 0.0) {
        return Err(abort(vec![], Error::invalid("duration", "must be finite and > 0")));
    }
    let n = step_count(duration, params.time_step);
    let mut states = Vec::with_capacity(n + 1);
    states.push(initial);
    let mut current = initial;
    for _ in 0..n {
        let input = match source.torque(&current) {
            Ok(input) => input,
            Err(message) => {
                return Err(abort(
                    states,
                    Error::TorqueSource {
                        time: current.time,
                        message,
                    },
                ))
            }
        };
        current = match step(&current, input.human, input.generated, params) {
            Ok(next) => next,
            Err(cause) => return Err(abort(states, cause)),
        };
        states.push(current);
    }
    Ok(states)
}
