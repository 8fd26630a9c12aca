use pyo3::prelude::*;
use pyo3::types::PyDict;

fn with_module<F: FnOnce(Python<'_>, &Bound<'_, PyModule>)>(f: F) {
    Python::attach(|py| {
        let m = PyModule::new(py, "hapsim").unwrap();
        hapsim_py::hapsim_py(&m).unwrap();
        f(py, &m);
    });
}

#[test]
fn exposes_conditions_and_params() {
    with_module(|_, m| {
        let names: Vec<String> = m.getattr("conditions").unwrap().call0().unwrap().extract().unwrap();
        assert_eq!(names.len(), 5);
        let cls = m.getattr("ImpedanceParams").unwrap();
        let p = cls.call_method1("for_condition", ("elasticity-increase",)).unwrap();
        assert_eq!(p.getattr("k_r").unwrap().extract::<f64>().unwrap(), 0.2);
        assert!(p.call_method0("is_elastic").unwrap().extract::<bool>().unwrap());
        assert!(cls.call1((0.0, 0.0, 0.0, 0.0, -1.0)).is_err());
    });
}

#[test]
fn run_condition_returns_trace_and_metrics() {
    with_module(|py, m| {
        let kwargs = PyDict::new(py);
        kwargs.set_item("noiseless", true).unwrap();
        let run = m
            .getattr("run_condition")
            .unwrap()
            .call(("increased-inertia",), Some(&kwargs))
            .unwrap();
        let t: Vec<f64> = run.get_item("t").unwrap().extract().unwrap();
        let tau: Vec<f64> = run.get_item("tau_desired").unwrap().extract().unwrap();
        assert_eq!(t.len(), tau.len());
        let nrmse: f64 = run
            .get_item("metrics")
            .unwrap()
            .get_item("normalized_rmse")
            .unwrap()
            .extract()
            .unwrap();
        assert!(nrmse < 0.1);
    });
}

#[test]
fn numerical_and_input_errors_map_to_python_exceptions() {
    with_module(|py, m| {
        let err = m.getattr("run_condition").unwrap().call1(("nope",)).unwrap_err();
        assert!(err.is_instance_of::<pyo3::exceptions::PyValueError>(py));
        let err = m
            .getattr("varimax")
            .unwrap()
            .call1((vec![vec![0.5], vec![0.4]],))
            .unwrap_err();
        assert!(err.is_instance_of::<pyo3::exceptions::PyValueError>(py));
    });
}

#[test]
fn synthesize_and_analyze_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    let path = path.to_str().unwrap();
    with_module(|py, m| {
        let kwargs = PyDict::new(py);
        kwargs.set_item("participants", 40).unwrap();
        kwargs.set_item("noise", 0.0).unwrap();
        m.getattr("synthesize").unwrap().call((path,), Some(&kwargs)).unwrap();
        let kwargs = PyDict::new(py);
        kwargs.set_item("factors", 4).unwrap();
        kwargs.set_item("method", "pca").unwrap();
        let model = m.getattr("analyze_ratings").unwrap().call((path,), Some(&kwargs)).unwrap();
        let cum: Vec<f64> = model.get_item("cumulative").unwrap().extract().unwrap();
        assert_eq!(cum.len(), 4);
        let means = model.get_item("condition_means").unwrap();
        assert_eq!(means.len().unwrap(), 5);
    });
}
