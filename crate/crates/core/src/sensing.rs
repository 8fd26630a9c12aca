//! IMU signal path: sampled, noisy, quantized gyro rate, and angular
//! acceleration from a backward difference followed by a causal single-pole
//! low-pass.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImuModel {
    /// Hz
    pub sample_rate: f64,
    /// rad/s, one sigma
    pub gyro_noise_std: f64,
    /// rad/s per LSB; 0 disables
    pub quantization: f64,
    /// Hz; 0 disables the acceleration low-pass
    pub filter_cutoff: f64,
    pub seed: u64,
}

impl Default for ImuModel {
    fn default() -> Self {
        Self {
            sample_rate: 1000.0,
            gyro_noise_std: 0.005,
            quantization: 0.0,
            filter_cutoff: 50.0,
            seed: 0,
        }
    }
}

impl ImuModel {
    /// Noise and quantization off, filter kept.
    pub fn noiseless() -> Self {
        Self {
            gyro_noise_std: 0.0,
            quantization: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return Err(Error::invalid("imu.sample_rate", "must be finite and > 0"));
        }
        if !(self.gyro_noise_std.is_finite() && self.gyro_noise_std >= 0.0) {
            return Err(Error::invalid("imu.gyro_noise_std", "must be finite and >= 0"));
        }
        if !(self.quantization.is_finite() && self.quantization >= 0.0) {
            return Err(Error::invalid("imu.quantization", "must be finite and >= 0"));
        }
        let nyquist = self.sample_rate / 2.0;
        if !(self.filter_cutoff == 0.0 || (self.filter_cutoff > 0.0 && self.filter_cutoff < nyquist))
        {
            return Err(Error::invalid(
                "imu.filter_cutoff",
                format!("must be 0 (disabled) or in (0, {nyquist}) Hz"),
            ));
        }
        Ok(())
    }

    pub fn sample_period(&self) -> f64 {
        1.0 / self.sample_rate
    }

    /// Filter time constant `1/(2π·fc)`, or `None` when the filter is off.
    pub fn filter_time_constant(&self) -> Option<f64> {
        (self.filter_cutoff > 0.0).then(|| 1.0 / (2.0 * std::f64::consts::PI * self.filter_cutoff))
    }
}

/// Floor-quantize to multiples of `step`; `step == 0` is the identity.
pub fn quantize(value: f64, step: f64) -> f64 {
    if step > 0.0 {
        (value / step).floor() * step
    } else {
        value
    }
}

/// Causal angular-acceleration estimator fed one gyro sample at a time.
#[derive(Clone, Debug)]
pub struct AccelEstimator {
    dt: f64,
    smoothing: f64,
    previous: Option<f64>,
    output: f64,
}

impl AccelEstimator {
    pub fn new(model: &ImuModel) -> Result<Self> {
        model.validate()?;
        let dt = model.sample_period();
        let smoothing = match model.filter_time_constant() {
            Some(tc) => 1.0 - (-dt / tc).exp(),
            None => 1.0,
        };
        Ok(Self {
            dt,
            smoothing,
            previous: None,
            output: 0.0,
        })
    }

    /// Push a rate sample and return the current acceleration estimate.
    /// The first sample yields 0.
    pub fn update(&mut self, omega: f64) -> f64 {
        if let Some(prev) = self.previous {
            let raw = (omega - prev) / self.dt;
            if self.smoothing >= 1.0 {
                self.output = raw;
            } else {
                self.output += self.smoothing * (raw - self.output);
            }
        }
        self.previous = Some(omega);
        self.output
    }

    pub fn current(&self) -> f64 {
        self.output
    }

    pub fn reset(&mut self) {
        self.previous = None;
        self.output = 0.0;
    }
}

/// Run a fresh estimator over `omega_samples` and return the final estimate.
pub fn estimate_accel(omega_samples: &[f64], model: &ImuModel) -> Result<f64> {
    if omega_samples.len() < 2 {
        return Err(Error::invalid(
            "omega_samples",
            format!("need at least 2 samples, got {}", omega_samples.len()),
        ));
    }
    let mut est = AccelEstimator::new(model)?;
    Ok(omega_samples.iter().fold(0.0, |_, &w| est.update(w)))
}

/// A simulated gyro with its own noise stream.
#[derive(Clone, Debug)]
pub struct Imu {
    model: ImuModel,
    rng: ChaCha8Rng,
    noise: Option<Normal<f64>>,
}

impl Imu {
    pub fn new(model: ImuModel) -> Result<Self> {
        model.validate()?;
        let noise = if model.gyro_noise_std > 0.0 {
            Some(
                Normal::new(0.0, model.gyro_noise_std)
                    .map_err(|e| Error::invalid("imu.gyro_noise_std", e.to_string()))?,
            )
        } else {
            None
        };
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(model.seed),
            model,
            noise,
        })
    }

    pub fn model(&self) -> &ImuModel {
        &self.model
    }

    /// `quantize(ω + n)`, `n ~ N(0, σ²)`.
    pub fn sample_gyro(&mut self, true_omega: f64) -> f64 {
        let noisy = match &self.noise {
            Some(dist) => true_omega + dist.sample(&mut self.rng),
            None => true_omega,
        };
        quantize(noisy, self.model.quantization)
    }
}
