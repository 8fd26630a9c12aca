//! TOML run configuration for the `measure` subcommand.
//!
//! Every key is optional and unknown keys are rejected. [`DEFAULT_CONFIG`]
//! is the fully spelled-out default file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cmg::{self, CmgState, FlywheelSpec, GimbalLimits};
use crate::error::{Error, Result};
use crate::harness::{Rig, SwingProfile};
use crate::impedance::{Condition, ConditionName, ImpedanceParams, DEFAULT_DIVERGENCE_BOUND};
use crate::plant::PlantParams;
use crate::sensing::ImuModel;

pub const DEFAULT_CONFIG: &str = r#"# Output directory for trace CSVs and summary.csv.
output_dir = "out"
# Seeds all randomness (gyro noise).
seed = 0

[plant]
inertia_total = 0.00127     # kg·m², hand + device about the pitch axis
damping_inherent = 0.0      # N·m·s/rad
time_step = 0.001           # s, control and integration step

[cmg]
flywheel_inertia = 1.27e-5  # kg·m², per flywheel
spin_rpm = 8000.0
rate_limit = 20.0           # rad/s, gimbal rate limit
angle_min_deg = -170.0
angle_max_deg = 170.0
initial_phi_deg = 90.0      # 0 is the torque-null orientation

[imu]
sample_rate = 1000.0        # Hz
gyro_noise_std = 0.005      # rad/s, one sigma
quantization = 0.0          # rad/s per LSB, 0 disables
filter_cutoff = 50.0        # Hz, acceleration low-pass, 0 disables

[swing]
amplitude = 0.5             # rad
frequency = 1.0             # Hz, one swing lasts 1/frequency s
n_swings = 3
rest_between = 2.0          # s
lead_in = 0.5               # s
shape = "sinusoid"          # or "minimum-jerk"

[conditions]
run = ["increased-inertia", "decreased-inertia", "damping-increase", "damping-decrease", "elasticity-increase"]
divergence_bound = 10.0     # rad, elastic |Δθ| beyond which a run is cut

# Per-condition parameters may be overridden, e.g.
# [conditions.elasticity-increase]
# delta_I = 0.0
# delta_D = 0.0
# k_r = 0.2
# c_r = 0.001
# I_tip = 0.00127
"#;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    pub seed: u64,
    pub plant: PlantParams,
    pub cmg: CmgConfig,
    pub imu: ImuConfig,
    pub swing: SwingProfile,
    pub conditions: ConditionsConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("out"),
            seed: 0,
            plant: PlantParams::default(),
            cmg: CmgConfig::default(),
            imu: ImuConfig::default(),
            swing: SwingProfile::default(),
            conditions: ConditionsConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CmgConfig {
    pub flywheel_inertia: f64,
    pub spin_rpm: f64,
    pub rate_limit: f64,
    pub angle_min_deg: f64,
    pub angle_max_deg: f64,
    pub initial_phi_deg: f64,
}

impl Default for CmgConfig {
    fn default() -> Self {
        Self {
            flywheel_inertia: 1.27e-5,
            spin_rpm: 8000.0,
            rate_limit: cmg::DEFAULT_RATE_LIMIT,
            angle_min_deg: cmg::DEFAULT_ANGLE_MIN.to_degrees(),
            angle_max_deg: cmg::DEFAULT_ANGLE_MAX.to_degrees(),
            initial_phi_deg: cmg::DEFAULT_INITIAL_PHI.to_degrees(),
        }
    }
}

/// [`ImuModel`] without its seed, which comes from the top-level `seed`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImuConfig {
    pub sample_rate: f64,
    pub gyro_noise_std: f64,
    pub quantization: f64,
    pub filter_cutoff: f64,
}

impl Default for ImuConfig {
    fn default() -> Self {
        let m = ImuModel::default();
        Self {
            sample_rate: m.sample_rate,
            gyro_noise_std: m.gyro_noise_std,
            quantization: m.quantization,
            filter_cutoff: m.filter_cutoff,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConditionsConfig {
    pub run: Vec<ConditionName>,
    pub divergence_bound: f64,
    #[serde(rename = "increased-inertia", skip_serializing_if = "Option::is_none")]
    pub increased_inertia: Option<ImpedanceParams>,
    #[serde(rename = "decreased-inertia", skip_serializing_if = "Option::is_none")]
    pub decreased_inertia: Option<ImpedanceParams>,
    #[serde(rename = "damping-increase", skip_serializing_if = "Option::is_none")]
    pub damping_increase: Option<ImpedanceParams>,
    #[serde(rename = "damping-decrease", skip_serializing_if = "Option::is_none")]
    pub damping_decrease: Option<ImpedanceParams>,
    #[serde(rename = "elasticity-increase", skip_serializing_if = "Option::is_none")]
    pub elasticity_increase: Option<ImpedanceParams>,
}

impl Default for ConditionsConfig {
    fn default() -> Self {
        Self {
            run: ConditionName::ALL.to_vec(),
            divergence_bound: DEFAULT_DIVERGENCE_BOUND,
            increased_inertia: None,
            decreased_inertia: None,
            damping_increase: None,
            damping_decrease: None,
            elasticity_increase: None,
        }
    }
}

impl ConditionsConfig {
    fn override_for(&self, name: ConditionName) -> Option<ImpedanceParams> {
        match name {
            ConditionName::IncreasedInertia => self.increased_inertia,
            ConditionName::DecreasedInertia => self.decreased_inertia,
            ConditionName::DampingIncrease => self.damping_increase,
            ConditionName::DampingDecrease => self.damping_decrease,
            ConditionName::ElasticityIncrease => self.elasticity_increase,
        }
    }

    /// The conditions to run, in `run` order, with overrides applied.
    pub fn resolve(&self) -> Vec<Condition> {
        self.run
            .iter()
            .map(|&name| match self.override_for(name) {
                Some(params) => Condition { name, params },
                None => Condition::canonical(name),
            })
            .collect()
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn rig(&self) -> Result<Rig> {
        let c = &self.cmg;
        let flywheel = FlywheelSpec::from_rpm(c.flywheel_inertia, c.spin_rpm)?;
        let limits = GimbalLimits {
            rate_limit: c.rate_limit,
            angle_min: c.angle_min_deg.to_radians(),
            angle_max: c.angle_max_deg.to_radians(),
        };
        let gimbal = CmgState::new(c.initial_phi_deg.to_radians(), limits)?;
        let i = &self.imu;
        let rig = Rig {
            plant: self.plant,
            flywheel,
            gimbal,
            imu: ImuModel {
                sample_rate: i.sample_rate,
                gyro_noise_std: i.gyro_noise_std,
                quantization: i.quantization,
                filter_cutoff: i.filter_cutoff,
                seed: self.seed,
            },
            divergence_bound: self.conditions.divergence_bound,
        };
        rig.validate()?;
        Ok(rig)
    }

    pub fn validate(&self) -> Result<()> {
        self.rig()?;
        self.swing.validate()?;
        for cond in self.conditions.resolve() {
            cond.params.validate()?;
        }
        let mut seen = self.conditions.run.clone();
        seen.sort();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("conditions.run lists a condition twice".into()));
        }
        Ok(())
    }
}
