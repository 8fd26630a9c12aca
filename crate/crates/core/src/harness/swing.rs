use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SwingShape {
    /// `θ = A·sin³(2πf·τ)`: flexion to `+A` at the quarter period, back
    /// through neutral, extension to `−A`, back to rest. C² at both ends.
    Sinusoid,
    /// Out-and-back minimum-jerk: quintic `0 → A` in half a period, then
    /// `A → 0`.
    MinimumJerk,
}

/// A series of wrist flexion/extension swings separated by rests.
///
/// Timeline: `lead_in` rest, then `n_swings` × (swing of `1/frequency` s
/// followed by `rest_between` s).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwingProfile {
    /// rad
    pub amplitude: f64,
    /// Hz; one swing lasts `1/frequency`
    pub frequency: f64,
    pub n_swings: usize,
    /// s
    pub rest_between: f64,
    /// s of rest before the first swing
    pub lead_in: f64,
    pub shape: SwingShape,
}

impl Default for SwingProfile {
    fn default() -> Self {
        Self {
            amplitude: 0.5,
            frequency: 1.0,
            n_swings: 3,
            rest_between: 2.0,
            lead_in: 0.5,
            shape: SwingShape::Sinusoid,
        }
    }
}

/// Prescribed hand kinematics at one instant.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Kinematics {
    pub theta: f64,
    pub omega: f64,
    pub omega_dot: f64,
}

impl SwingProfile {
    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude.is_finite() && self.amplitude > 0.0) {
            return Err(Error::invalid("swing.amplitude", "must be finite and > 0"));
        }
        if !(self.frequency.is_finite() && self.frequency > 0.0) {
            return Err(Error::invalid("swing.frequency", "must be finite and > 0"));
        }
        if !(self.rest_between.is_finite() && self.rest_between >= 0.0) {
            return Err(Error::invalid("swing.rest_between", "must be finite and >= 0"));
        }
        if !(self.lead_in.is_finite() && self.lead_in >= 0.0) {
            return Err(Error::invalid("swing.lead_in", "must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn swing_duration(&self) -> f64 {
        1.0 / self.frequency
    }

    pub fn swing_start(&self, index: usize) -> f64 {
        self.lead_in + index as f64 * (self.swing_duration() + self.rest_between)
    }

    /// End of the last swing (start of the final rest).
    pub fn last_swing_end(&self) -> f64 {
        match self.n_swings {
            0 => self.lead_in,
            n => self.swing_start(n - 1) + self.swing_duration(),
        }
    }

    pub fn total_duration(&self) -> f64 {
        self.last_swing_end() + self.rest_between
    }

    /// Index of the swing active at `t` and the time into it.
    fn active_swing(&self, t: f64) -> Option<(usize, f64)> {
        if t < self.lead_in || self.n_swings == 0 {
            return None;
        }
        let cycle = self.swing_duration() + self.rest_between;
        let index = ((t - self.lead_in) / cycle).floor() as usize;
        if index >= self.n_swings {
            return None;
        }
        let local = t - self.swing_start(index);
        (local >= 0.0 && local <= self.swing_duration()).then_some((index, local))
    }
}

/// Angle, rate and acceleration of the prescribed trajectory at `t ≥ 0`.
/// Derivatives are analytic.
pub fn swing_kinematics(profile: &SwingProfile, t: f64) -> Kinematics {
    let Some((_, local)) = profile.active_swing(t) else {
        return Kinematics::default();
    };
    let a = profile.amplitude;
    match profile.shape {
        SwingShape::Sinusoid => {
            let w = 2.0 * PI * profile.frequency;
            let (s, c) = (w * local).sin_cos();
            Kinematics {
                theta: a * s * s * s,
                omega: 3.0 * a * w * s * s * c,
                omega_dot: 3.0 * a * w * w * s * (2.0 * c * c - s * s),
            }
        }
        SwingShape::MinimumJerk => {
            let half = profile.swing_duration() / 2.0;
            let (u, dir, base) = if local <= half {
                (local / half, 1.0, 0.0)
            } else {
                ((local - half) / half, -1.0, a)
            };
            let u = u.clamp(0.0, 1.0);
            let p = u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
            let dp = 30.0 * u * u * (1.0 - u) * (1.0 - u);
            let ddp = 60.0 * u * (1.0 - 3.0 * u + 2.0 * u * u);
            Kinematics {
                theta: base + dir * a * p,
                omega: dir * a * dp / half,
                omega_dot: dir * a * ddp / (half * half),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let n = n + n % 2;
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn rest_gap_is_still() {
        let p = SwingProfile::default();
        for t in [0.0, 0.2, p.swing_start(0) + 1.5, p.total_duration() - 0.1] {
            assert_eq!(swing_kinematics(&p, t), Kinematics::default(), "t={t}");
        }
    }

    #[test]
    fn sinusoid_quarter_period_extremum() {
        let p = SwingProfile {
            lead_in: 0.0,
            ..SwingProfile::default()
        };
        let k = swing_kinematics(&p, 0.25);
        assert!((k.theta.abs() - 0.5).abs() < 1e-12);
        assert!(k.omega.abs() < 1e-12);
        let k = swing_kinematics(&p, 0.75);
        assert!((k.theta + 0.5).abs() < 1e-12);
    }

    #[test]
    fn swings_start_and_end_at_rest() {
        for shape in [SwingShape::Sinusoid, SwingShape::MinimumJerk] {
            let p = SwingProfile {
                shape,
                ..SwingProfile::default()
            };
            for i in 0..p.n_swings {
                for t in [p.swing_start(i), p.swing_start(i) + p.swing_duration()] {
                    let k = swing_kinematics(&p, t);
                    assert!(k.theta.abs() < 1e-12 && k.omega.abs() < 1e-12 && k.omega_dot.abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn acceleration_integrates_to_zero_over_a_swing() {
        for shape in [SwingShape::Sinusoid, SwingShape::MinimumJerk] {
            let p = SwingProfile {
                shape,
                ..SwingProfile::default()
            };
            let (a, b) = (p.swing_start(1), p.swing_start(1) + p.swing_duration());
            let integral = simpson(|t| swing_kinematics(&p, t).omega_dot, a, b, 4000);
            assert!(integral.abs() < 1e-6, "{shape:?}: {integral}");
            // and ω integrates to the net angle change, which is zero too
            let integral = simpson(|t| swing_kinematics(&p, t).omega, a, b, 4000);
            assert!(integral.abs() < 1e-8);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-6;
        for shape in [SwingShape::Sinusoid, SwingShape::MinimumJerk] {
            let p = SwingProfile {
                shape,
                ..SwingProfile::default()
            };
            for k in 1..40 {
                let t = p.swing_start(0) + k as f64 * p.swing_duration() / 41.0;
                let lo = swing_kinematics(&p, t - h);
                let hi = swing_kinematics(&p, t + h);
                let mid = swing_kinematics(&p, t);
                assert!(((hi.theta - lo.theta) / (2.0 * h) - mid.omega).abs() < 1e-6);
                assert!(((hi.omega - lo.omega) / (2.0 * h) - mid.omega_dot).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn timeline() {
        let p = SwingProfile::default();
        assert_eq!(p.swing_start(0), 0.5);
        assert_eq!(p.swing_start(1), 3.5);
        assert_eq!(p.last_swing_end(), 7.5);
        assert_eq!(p.total_duration(), 9.5);
        assert!(SwingProfile {
            amplitude: 0.0,
            ..p
        }
        .validate()
        .is_err());
    }
}
