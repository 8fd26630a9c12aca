//! Closed-loop replication of the torque-measurement study.
//!
//! The hand trajectory is prescribed (the human is the position source and
//! the device does not perturb it). Each control tick:
//! sample the gyro → estimate ω̇ → impedance law → inverse gimbal rate →
//! rate-limited gimbal step → achieved torque from the forward law.

mod swing;
mod trace;

pub use swing::{swing_kinematics, Kinematics, SwingProfile, SwingShape};
pub use trace::{
    decay_time_constant, dominant_frequency, export_batch, export_trace, import_trace,
    tracking_metrics, write_trace, zero_crossings, ConditionTrace, GimbalSample, TrackingMetrics,
    TraceSample, TRACE_HEADER,
};

use crate::cmg::{self, CmgState, FlywheelSpec};
use crate::error::{Error, Result};
use crate::impedance::{Condition, ImpedanceController, DEFAULT_DIVERGENCE_BOUND};
use crate::plant::{step_count, PlantParams};
use crate::sensing::{AccelEstimator, Imu, ImuModel};

/// Everything about the simulated device that is not the impedance target.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rig {
    pub plant: PlantParams,
    pub flywheel: FlywheelSpec,
    /// Initial gimbal state, including its limits.
    pub gimbal: CmgState,
    pub imu: ImuModel,
    pub divergence_bound: f64,
}

impl Default for Rig {
    fn default() -> Self {
        Self {
            plant: PlantParams::default(),
            flywheel: FlywheelSpec::default(),
            gimbal: CmgState::default(),
            imu: ImuModel::default(),
            divergence_bound: DEFAULT_DIVERGENCE_BOUND,
        }
    }
}

impl Rig {
    /// Default rig with gyro noise and quantization switched off.
    pub fn noiseless() -> Self {
        Self {
            imu: ImuModel::noiseless(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.plant.validate()?;
        self.gimbal.limits.validate()?;
        self.imu.validate()?;
        if !(self.divergence_bound > 0.0) {
            return Err(Error::invalid("divergence_bound", "must be > 0"));
        }
        Ok(())
    }
}

/// Run one condition over the whole swing profile.
///
/// Elastic divergence does not return an error: the trace is cut at the
/// failing tick and marked `truncated`.
pub fn run_condition(
    condition: &Condition,
    profile: &SwingProfile,
    rig: &Rig,
) -> Result<ConditionTrace> {
    rig.validate()?;
    profile.validate()?;
    let dt = rig.plant.time_step;
    let ticks = step_count(profile.total_duration(), dt);

    let mut controller = ImpedanceController::new(condition.params)?
        .with_divergence_bound(rig.divergence_bound)?;
    let mut imu = Imu::new(rig.imu)?;
    let mut estimator = AccelEstimator::new(&rig.imu)?;
    let imu_period = rig.imu.sample_period();
    let mut next_sample = 0.0;
    let (mut omega_meas, mut alpha_meas) = (0.0, 0.0);
    let mut gimbal = rig.gimbal;
    let rate_limit = gimbal.limits.rate_limit;

    let mut trace = ConditionTrace {
        condition: condition.name.to_string(),
        samples: Vec::with_capacity(ticks + 1),
        gimbal: Vec::with_capacity(ticks + 1),
        ring_start: condition
            .params
            .is_elastic()
            .then(|| profile.last_swing_end()),
        truncated: false,
    };

    for k in 0..=ticks {
        let t = k as f64 * dt;
        let truth = swing_kinematics(profile, t);

        // zero-order hold between IMU samples
        if t + 1e-9 * dt >= next_sample {
            omega_meas = imu.sample_gyro(truth.omega);
            alpha_meas = estimator.update(omega_meas);
            next_sample += imu_period;
        }

        let out = match controller.update(omega_meas, alpha_meas, dt) {
            Ok(out) => out,
            Err(Error::Instability { .. }) => {
                trace.truncated = true;
                break;
            }
            Err(e) => return Err(e),
        };

        let command = cmg::inverse_gimbal_rate(out.tau_gen, gimbal.phi, &rig.flywheel, rate_limit);
        gimbal = cmg::step_gimbal(&gimbal, command.rate, dt);
        let achieved = cmg::forward_torque(&gimbal, &rig.flywheel);
        let pinned = gimbal.phi_rate != command.rate.clamp(-rate_limit, rate_limit);

        trace.samples.push(TraceSample {
            t,
            theta: truth.theta,
            omega: omega_meas,
            omega_dot: alpha_meas,
            tau_desired: out.tau_gen,
            tau_achieved: achieved,
            saturated: command.saturated || pinned,
        });
        trace.gimbal.push(GimbalSample {
            phi: gimbal.phi,
            phi_rate: gimbal.phi_rate,
            envelope: cmg::torque_envelope(gimbal.phi, &rig.flywheel, rate_limit),
            elastic_torque: out.elastic_torque,
        });
    }
    Ok(trace)
}

/// Run several conditions concurrently. Results keep the input order.
pub fn run_batch(
    conditions: &[Condition],
    profile: &SwingProfile,
    rig: &Rig,
) -> Vec<Result<ConditionTrace>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = conditions
            .iter()
            .map(|c| scope.spawn(move || run_condition(c, profile, rig)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("condition worker panicked"))
            .collect()
    })
}
