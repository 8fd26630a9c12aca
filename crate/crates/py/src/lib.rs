//! Python bindings: `import hapsim`.

use nalgebra::DMatrix;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use hapsim::cmg::{self, CmgState, FlywheelSpec};
use hapsim::harness::{self, Rig, SwingProfile, SwingShape};
use hapsim::impedance::{self, Condition, ConditionName};
use hapsim::sdanalysis::{self, AnalysisOptions, ExtractionMethod, FactorRule, LoadOptions};

fn to_py(e: hapsim::Error) -> PyErr {
    if e.is_numerical() {
        PyRuntimeError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn matrix(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let k = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || k == 0 || rows.iter().any(|r| r.len() != k) {
        return Err(PyValueError::new_err("expected a non-empty rectangular list of rows"));
    }
    Ok(DMatrix::from_fn(rows.len(), k, |i, j| rows[i][j]))
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Impedance-change parameters: inertia, damping and the elastic rod.
#[pyclass(name = "ImpedanceParams", skip_from_py_object)]
#[derive(Clone)]
struct PyImpedanceParams {
    inner: impedance::ImpedanceParams,
}

#[pymethods]
impl PyImpedanceParams {
    #[new]
    #[pyo3(signature = (delta_I=0.0, delta_D=0.0, k_r=0.0, c_r=0.0, I_tip=None))]
    #[allow(non_snake_case)]
    fn new(delta_I: f64, delta_D: f64, k_r: f64, c_r: f64, I_tip: Option<f64>) -> PyResult<Self> {
        let mut inner = impedance::ImpedanceParams::new(delta_I, delta_D, k_r, c_r);
        if let Some(tip) = I_tip {
            inner.tip_inertia = tip;
        }
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Parameters of a named measurement condition, e.g. "damping-increase".
    #[staticmethod]
    fn for_condition(name: &str) -> PyResult<Self> {
        let name: ConditionName = name.parse().map_err(to_py)?;
        Ok(Self {
            inner: Condition::canonical(name).params,
        })
    }

    #[getter]
    #[allow(non_snake_case)]
    fn delta_I(&self) -> f64 {
        self.inner.delta_inertia
    }

    #[getter]
    #[allow(non_snake_case)]
    fn delta_D(&self) -> f64 {
        self.inner.delta_damping
    }

    #[getter]
    fn k_r(&self) -> f64 {
        self.inner.k_r
    }

    #[getter]
    fn c_r(&self) -> f64 {
        self.inner.c_r
    }

    #[getter]
    #[allow(non_snake_case)]
    fn I_tip(&self) -> f64 {
        self.inner.tip_inertia
    }

    fn is_elastic(&self) -> bool {
        self.inner.is_elastic()
    }

    /// Generated torque for measured ω, ω̇ and elastic torque Te.
    #[pyo3(signature = (omega, alpha, te=0.0))]
    fn torque(&self, omega: f64, alpha: f64, te: f64) -> f64 {
        impedance::generated_torque(omega, alpha, te, &self.inner)
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "ImpedanceParams(delta_I={}, delta_D={}, k_r={}, c_r={}, I_tip={})",
            p.delta_inertia, p.delta_damping, p.k_r, p.c_r, p.tip_inertia
        )
    }
}

/// Names of the five measurement conditions.
#[pyfunction]
fn conditions() -> Vec<&'static str> {
    ConditionName::ALL.iter().map(|c| c.as_str()).collect()
}

/// Hand pitch (θ, ω, ω̇) at time `t` of the default-style swing profile.
#[pyfunction]
#[pyo3(signature = (t, amplitude=0.5, frequency=1.0, minimum_jerk=false))]
fn swing_kinematics(t: f64, amplitude: f64, frequency: f64, minimum_jerk: bool) -> PyResult<(f64, f64, f64)> {
    let profile = profile(amplitude, frequency, None, minimum_jerk)?;
    let k = harness::swing_kinematics(&profile, t);
    Ok((k.theta, k.omega, k.omega_dot))
}

fn profile(amplitude: f64, frequency: f64, n_swings: Option<usize>, minimum_jerk: bool) -> PyResult<SwingProfile> {
    let mut p = SwingProfile {
        amplitude,
        frequency,
        shape: if minimum_jerk {
            SwingShape::MinimumJerk
        } else {
            SwingShape::Sinusoid
        },
        ..SwingProfile::default()
    };
    if let Some(n) = n_swings {
        p.n_swings = n;
    }
    p.validate().map_err(to_py)?;
    Ok(p)
}

/// Swing the simulated device under one condition.
///
/// Returns a dict of equal-length lists (t, theta, omega, omega_dot,
/// tau_desired, tau_achieved, saturated) plus `truncated` and `metrics`.
#[pyfunction]
#[pyo3(signature = (condition, params=None, noiseless=false, seed=0, amplitude=0.5, frequency=1.0, n_swings=3))]
#[allow(clippy::too_many_arguments)]
fn run_condition<'py>(
    py: Python<'py>,
    condition: &str,
    params: Option<PyRef<'_, PyImpedanceParams>>,
    noiseless: bool,
    seed: u64,
    amplitude: f64,
    frequency: f64,
    n_swings: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let name: ConditionName = condition.parse().map_err(to_py)?;
    let mut cond = Condition::canonical(name);
    if let Some(p) = params {
        cond.params = p.inner;
    }
    let mut rig = if noiseless { Rig::noiseless() } else { Rig::default() };
    rig.imu.seed = seed;
    let profile = profile(amplitude, frequency, Some(n_swings), false)?;
    let trace = harness::run_condition(&cond, &profile, &rig).map_err(to_py)?;
    let metrics = harness::tracking_metrics(&trace).map_err(to_py)?;

    let out = PyDict::new(py);
    let s = &trace.samples;
    out.set_item("condition", &trace.condition)?;
    out.set_item("t", s.iter().map(|x| x.t).collect::<Vec<_>>())?;
    out.set_item("theta", s.iter().map(|x| x.theta).collect::<Vec<_>>())?;
    out.set_item("omega", s.iter().map(|x| x.omega).collect::<Vec<_>>())?;
    out.set_item("omega_dot", s.iter().map(|x| x.omega_dot).collect::<Vec<_>>())?;
    out.set_item("tau_desired", s.iter().map(|x| x.tau_desired).collect::<Vec<_>>())?;
    out.set_item("tau_achieved", s.iter().map(|x| x.tau_achieved).collect::<Vec<_>>())?;
    out.set_item("saturated", s.iter().map(|x| x.saturated).collect::<Vec<_>>())?;
    out.set_item("truncated", trace.truncated)?;

    let m = PyDict::new(py);
    m.set_item("rms_error", metrics.rms_error)?;
    m.set_item("peak_desired", metrics.peak_desired)?;
    m.set_item("normalized_rmse", metrics.normalized_rmse)?;
    m.set_item("dominant_oscillation_hz", metrics.dominant_oscillation_hz)?;
    m.set_item("ring_decay_s", metrics.ring_decay_s)?;
    m.set_item("saturated_samples", metrics.saturated_samples)?;
    out.set_item("metrics", m)?;
    Ok(out)
}

/// Output torque of the default scissored pair at gimbal angle/rate.
#[pyfunction]
fn cmg_torque(phi: f64, phi_rate: f64) -> f64 {
    let state = CmgState {
        phi,
        phi_rate,
        ..CmgState::default()
    };
    cmg::forward_torque(&state, &FlywheelSpec::default())
}

/// Gimbal rate for a torque request: (rate, saturated, singular).
#[pyfunction]
#[pyo3(signature = (tau, phi, rate_limit=cmg::DEFAULT_RATE_LIMIT))]
fn cmg_gimbal_rate(tau: f64, phi: f64, rate_limit: f64) -> (f64, bool, bool) {
    let c = cmg::inverse_gimbal_rate(tau, phi, &FlywheelSpec::default(), rate_limit);
    (c.rate, c.saturated, c.singular)
}

/// Largest torque magnitude available at `phi`.
#[pyfunction]
#[pyo3(signature = (phi, rate_limit=cmg::DEFAULT_RATE_LIMIT))]
fn cmg_envelope(phi: f64, rate_limit: f64) -> f64 {
    cmg::torque_envelope(phi, &FlywheelSpec::default(), rate_limit)
}

/// Varimax-rotate a loading matrix: (rotated loadings, rotation matrix).
#[pyfunction]
#[pyo3(signature = (loadings, normalize=true))]
fn varimax(loadings: Vec<Vec<f64>>, normalize: bool) -> PyResult<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let l = matrix(&loadings)?;
    let opts = sdanalysis::VarimaxOptions {
        normalize,
        ..Default::default()
    };
    let v = sdanalysis::varimax(&l, &opts).map_err(to_py)?;
    Ok((rows(&v.loadings), rows(&v.rotation)))
}

/// Sums of squared loadings, variance shares and cumulative shares.
#[pyfunction]
fn factor_summary<'py>(py: Python<'py>, loadings: Vec<Vec<f64>>) -> PyResult<Bound<'py, PyDict>> {
    let s = sdanalysis::factor_summary(&matrix(&loadings)?);
    let out = PyDict::new(py);
    out.set_item("ss_loadings", s.ss_loadings)?;
    out.set_item("pct_variance", s.pct_variance)?;
    out.set_item("cumulative", s.cumulative)?;
    Ok(out)
}

/// Run the full rating analysis on a ratings CSV.
#[pyfunction]
#[pyo3(signature = (path, factors=None, method="paf", allow_missing=false))]
fn analyze_ratings<'py>(
    py: Python<'py>,
    path: &str,
    factors: Option<usize>,
    method: &str,
    allow_missing: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let load = LoadOptions {
        allow_missing,
        ..LoadOptions::default()
    };
    let ratings = sdanalysis::load_ratings(path, &load).map_err(to_py)?;
    let obs = sdanalysis::average_repetitions(&ratings);
    let mut options = AnalysisOptions::default();
    if let Some(k) = factors {
        options.rule = FactorRule::Fixed(k);
    }
    options.extraction.method = match method {
        "paf" => ExtractionMethod::PrincipalAxis,
        "pca" => ExtractionMethod::PrincipalComponent,
        other => return Err(PyValueError::new_err(format!("unknown method `{other}` (paf or pca)"))),
    };
    let model = sdanalysis::analyze(&obs, &options).map_err(to_py)?;

    let out = PyDict::new(py);
    out.set_item("pairs", &model.pairs)?;
    out.set_item("eigenvalues", &model.eigenvalues)?;
    out.set_item("n_factors", model.n_factors)?;
    out.set_item("loadings", rows(&model.loadings))?;
    out.set_item("ss_loadings", &model.summary.ss_loadings)?;
    out.set_item("pct_variance", &model.summary.pct_variance)?;
    out.set_item("cumulative", &model.summary.cumulative)?;
    out.set_item("scores", rows(&model.scores))?;
    let means = PyDict::new(py);
    for (c, row) in model
        .condition_means
        .conditions
        .iter()
        .zip(model.condition_means.means.row_iter())
    {
        means.set_item(c, row.iter().copied().collect::<Vec<_>>())?;
    }
    out.set_item("condition_means", means)?;
    Ok(out)
}

/// Write synthetic ratings from the built-in 4-factor model; returns the
/// generating loadings.
#[pyfunction]
#[pyo3(signature = (path, participants=16, noise=0.3, seed=0, round=false))]
fn synthesize(path: &str, participants: usize, noise: f64, seed: u64, round: bool) -> PyResult<Vec<Vec<f64>>> {
    let spec = sdanalysis::SynthSpec {
        participants,
        noise_std: noise,
        seed,
        round,
        ..Default::default()
    };
    let s = sdanalysis::synthesize(&spec).map_err(to_py)?;
    let file = std::fs::File::create(path).map_err(|e| PyValueError::new_err(format!("{path}: {e}")))?;
    sdanalysis::write_ratings(&s.ratings, file).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(spec.loadings)
}

/// Tucker congruence between two loading vectors.
#[pyfunction]
fn congruence(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    if a.len() != b.len() {
        return Err(PyValueError::new_err("vectors differ in length"));
    }
    Ok(sdanalysis::congruence(&a, &b))
}

#[pymodule]
#[pyo3(name = "hapsim")]
pub fn hapsim_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyImpedanceParams>()?;
    m.add_function(wrap_pyfunction!(conditions, m)?)?;
    m.add_function(wrap_pyfunction!(swing_kinematics, m)?)?;
    m.add_function(wrap_pyfunction!(run_condition, m)?)?;
    m.add_function(wrap_pyfunction!(cmg_torque, m)?)?;
    m.add_function(wrap_pyfunction!(cmg_gimbal_rate, m)?)?;
    m.add_function(wrap_pyfunction!(cmg_envelope, m)?)?;
    m.add_function(wrap_pyfunction!(varimax, m)?)?;
    m.add_function(wrap_pyfunction!(factor_summary, m)?)?;
    m.add_function(wrap_pyfunction!(analyze_ratings, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(congruence, m)?)?;
    Ok(())
}
