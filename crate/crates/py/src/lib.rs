//! Python bindings: configuration, sampling, planning, checking and the grid oracle.

use diffdrive_topp::discretize::assemble;
use diffdrive_topp::format::PathInput;
use diffdrive_topp::pipeline::{self, Config as CoreConfig};
use diffdrive_topp::spline::{InitialTrajectory, PathSample, WaypointPath};
use diffdrive_topp::trajectory::{self, TimedTrajectory};
use diffdrive_topp::{lissajous as curve, solver, Error};
use pyo3::create_exception;
use pyo3::exceptions::{PyAttributeError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use pythonize::{depythonize, pythonize};
use serde_json::Value;

create_exception!(ddtopp, InfeasibleError, PyRuntimeError, "The limits admit no motion along the path.");

fn py_err(e: Error) -> PyErr {
    if e.is_infeasibility() {
        InfeasibleError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

/// Planner settings. Keyword arguments override the defaults, e.g.
/// `Config(v_max=1.0, solver={"max_iter": 50})`.
#[pyclass(module = "ddtopp", skip_from_py_object)]
#[derive(Clone)]
struct Config {
    inner: CoreConfig,
}

#[pymethods]
impl Config {
    #[new]
    #[pyo3(signature = (**overrides))]
    fn new(overrides: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let mut value = serde_json::to_value(CoreConfig::default()).map_err(|e| py_err(e.into()))?;
        if let Some(overrides) = overrides {
            let patch: Value = depythonize(overrides.as_any())?;
            merge(&mut value, patch);
        }
        Config::from_json(&value.to_string())
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        CoreConfig::from_json(text).map(|inner| Config { inner }).map_err(py_err)
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(py_err)
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        Ok(pythonize(py, &self.inner)?)
    }

    fn __getattr__<'py>(&self, py: Python<'py>, name: &str) -> PyResult<Bound<'py, PyAny>> {
        let value = serde_json::to_value(&self.inner).map_err(|e| py_err(e.into()))?;
        match value.get(name) {
            Some(v) => Ok(pythonize(py, v)?),
            None => Err(PyAttributeError::new_err(format!("Config has no field {name:?}"))),
        }
    }

    fn __eq__(&self, other: &Config) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("Config({})", serde_json::to_string(&self.inner).unwrap_or_default())
    }
}

fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, p) => *slot = p,
    }
}

fn config_or_default(cfg: Option<&Config>) -> CoreConfig {
    cfg.map(|c| c.inner.clone()).unwrap_or_default()
}

/// Path samples with heading and curvature, ready for planning.
#[pyclass(module = "ddtopp", skip_from_py_object)]
#[derive(Clone)]
struct Samples {
    inner: InitialTrajectory,
}

impl Samples {
    fn column(&self, f: impl Fn(&PathSample) -> f64) -> Vec<f64> {
        self.inner.samples.iter().map(f).collect()
    }
}

#[pymethods]
impl Samples {
    #[new]
    #[pyo3(signature = (x, y, theta, kappa, resolution = 0.0))]
    fn new(x: Vec<f64>, y: Vec<f64>, theta: Vec<f64>, kappa: Vec<f64>, resolution: f64) -> PyResult<Self> {
        let n = x.len();
        if y.len() != n || theta.len() != n || kappa.len() != n {
            return Err(PyValueError::new_err("x, y, theta and kappa must have equal lengths"));
        }
        let samples = (0..n)
            .map(|i| PathSample {
                x: x[i],
                y: y[i],
                theta: theta[i],
                kappa: kappa[i],
            })
            .collect();
        InitialTrajectory::new(samples, resolution)
            .map(|inner| Samples { inner })
            .map_err(py_err)
    }

    #[getter]
    fn x(&self) -> Vec<f64> {
        self.column(|s| s.x)
    }

    #[getter]
    fn y(&self) -> Vec<f64> {
        self.column(|s| s.y)
    }

    #[getter]
    fn theta(&self) -> Vec<f64> {
        self.column(|s| s.theta)
    }

    #[getter]
    fn kappa(&self) -> Vec<f64> {
        self.column(|s| s.kappa)
    }

    #[getter]
    fn resolution(&self) -> f64 {
        self.inner.resolution
    }

    fn chord_speeds(&self) -> Vec<f64> {
        curve::chord_speeds(&self.inner)
    }

    fn to_csv(&self) -> String {
        diffdrive_topp::format::samples_to_csv(&self.inner)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// A timed trajectory: node states plus per-segment controls.
#[pyclass(module = "ddtopp", skip_from_py_object)]
#[derive(Clone)]
struct Trajectory {
    inner: TimedTrajectory,
}

#[pymethods]
impl Trajectory {
    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        TimedTrajectory::from_csv(text)
            .map(|inner| Trajectory { inner })
            .map_err(py_err)
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    #[getter]
    fn duration(&self) -> f64 {
        self.inner.duration()
    }

    #[getter]
    fn t(&self) -> Vec<f64> {
        self.inner.nodes.iter().map(|n| n.t).collect()
    }

    #[getter]
    fn x(&self) -> Vec<f64> {
        self.inner.nodes.iter().map(|n| n.x).collect()
    }

    #[getter]
    fn y(&self) -> Vec<f64> {
        self.inner.nodes.iter().map(|n| n.y).collect()
    }

    #[getter]
    fn theta(&self) -> Vec<f64> {
        self.inner.nodes.iter().map(|n| n.theta).collect()
    }

    #[getter]
    fn v(&self) -> Vec<f64> {
        self.inner.speeds()
    }

    #[getter]
    fn a(&self) -> Vec<f64> {
        self.inner.segments.iter().map(|s| s.a).collect()
    }

    #[getter]
    fn omega(&self) -> Vec<f64> {
        self.inner.segments.iter().map(|s| s.omega).collect()
    }

    #[getter]
    fn v_r(&self) -> Vec<f64> {
        self.inner.segments.iter().map(|s| s.v_r).collect()
    }

    #[getter]
    fn v_l(&self) -> Vec<f64> {
        self.inner.segments.iter().map(|s| s.v_l).collect()
    }

    /// Interior stretches slower than `threshold`, at least `margin` seconds from either end.
    #[pyo3(signature = (threshold, margin = 2.0))]
    fn slow_regions<'py>(&self, py: Python<'py>, threshold: f64, margin: f64) -> PyResult<Bound<'py, PyAny>> {
        Ok(pythonize(py, &trajectory::slow_regions(&self.inner, threshold, margin))?)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Result of `plan`. `trajectory` is `None` unless the solve was optimal.
#[pyclass(module = "ddtopp")]
struct Plan {
    inner: pipeline::Plan,
}

#[pymethods]
impl Plan {
    #[getter]
    fn status<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        Ok(pythonize(py, &self.inner.solution.status)?)
    }

    #[getter]
    fn infeasible_family(&self) -> Option<String> {
        self.inner.solution.infeasible_family.map(|f| f.to_string())
    }

    #[getter]
    fn t_f(&self) -> f64 {
        self.inner.report.t_f
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.solution.iterations
    }

    #[getter]
    fn samples(&self) -> Samples {
        Samples {
            inner: self.inner.samples.clone(),
        }
    }

    #[getter]
    fn trajectory(&self) -> Option<Trajectory> {
        self.inner.trajectory.clone().map(|inner| Trajectory { inner })
    }

    /// Speed caps per node from curvature and the joint limits.
    #[getter]
    fn speed_caps(&self) -> Vec<f64> {
        self.inner.problem.vcap.clone()
    }

    fn summary<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        Ok(pythonize(py, &self.inner.summary())?)
    }

    fn __repr__(&self) -> String {
        format!(
            "Plan(status={:?}, n={}, t_f={})",
            self.inner.solution.status, self.inner.problem.n, self.inner.report.t_f
        )
    }
}

#[derive(FromPyObject)]
enum PathArg<'py> {
    Samples(PyRef<'py, Samples>),
    Waypoints(Vec<(f64, f64)>),
}

impl PathArg<'_> {
    fn to_input(&self) -> PyResult<PathInput> {
        Ok(match self {
            PathArg::Samples(s) => PathInput::Samples(s.inner.clone()),
            PathArg::Waypoints(w) => {
                let pts = w.iter().map(|&(x, y)| [x, y]).collect();
                PathInput::Waypoints(WaypointPath::new(pts).map_err(py_err)?)
            }
        })
    }
}

/// Samples the Lissajous test curve every `resolution` seconds.
#[pyfunction]
#[pyo3(signature = (resolution = 0.01))]
fn lissajous(resolution: f64) -> PyResult<Samples> {
    curve::lissajous_samples(resolution)
        .map(|inner| Samples { inner })
        .map_err(py_err)
}

/// Fits a spline through `(x, y)` waypoints and samples it.
#[pyfunction]
#[pyo3(signature = (waypoints, config = None))]
fn fit(waypoints: Vec<(f64, f64)>, config: Option<&Config>) -> PyResult<Samples> {
    let w = WaypointPath::new(waypoints.into_iter().map(|(x, y)| [x, y]).collect()).map_err(py_err)?;
    pipeline::fit_path(&w, &config_or_default(config))
        .map(|inner| Samples { inner })
        .map_err(py_err)
}

/// Plans a time-optimal speed profile along waypoints or `Samples`.
#[pyfunction]
#[pyo3(signature = (path, config = None))]
fn plan(py: Python<'_>, path: PathArg<'_>, config: Option<&Config>) -> PyResult<Plan> {
    let input = path.to_input()?;
    let cfg = config_or_default(config);
    py.detach(|| pipeline::plan(&input, &cfg))
        .map(|inner| Plan { inner })
        .map_err(py_err)
}

/// Re-checks a trajectory against the limits along the path it was planned on.
#[pyfunction]
#[pyo3(signature = (trajectory, path, config = None))]
fn check<'py>(
    py: Python<'py>,
    trajectory: &Trajectory,
    path: PathArg<'_>,
    config: Option<&Config>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = config_or_default(config);
    let (samples, _) = pipeline::prepare(&path.to_input()?, &cfg).map_err(py_err)?;
    if samples.len() != trajectory.inner.len() {
        return Err(PyValueError::new_err(format!(
            "trajectory has {} nodes but the path samples to {}",
            trajectory.inner.len(),
            samples.len()
        )));
    }
    let p = assemble(&samples, &cfg.limits(), &cfg.boundary(), &cfg.options()).map_err(py_err)?;
    Ok(pythonize(py, &trajectory::feasibility_check(&trajectory.inner, &p))?)
}

/// Compares the conic optimum with a `grid`-level dynamic-programming search.
#[pyfunction]
#[pyo3(signature = (path, config = None, grid = 400))]
fn oracle<'py>(py: Python<'py>, path: PathArg<'_>, config: Option<&Config>, grid: usize) -> PyResult<Bound<'py, PyAny>> {
    let cfg = config_or_default(config);
    let (samples, _) = pipeline::prepare(&path.to_input()?, &cfg).map_err(py_err)?;
    let p = assemble(&samples, &cfg.limits(), &cfg.boundary(), &cfg.options()).map_err(py_err)?;
    let dp = solver::dp_oracle(&p, grid).map_err(py_err)?;
    let sol = solver::solve(&p, &cfg.solver)
        .and_then(|s| s.into_result())
        .map_err(py_err)?;
    let report = serde_json::json!({
        "n": p.n,
        "grid": grid,
        "t_f_socp": sol.objective_value,
        "t_f_dp": dp.t_f,
        "gap": (dp.t_f - sol.objective_value) / sol.objective_value,
    });
    Ok(pythonize(py, &report)?)
}

#[pymodule]
fn ddtopp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Config>()?;
    m.add_class::<Samples>()?;
    m.add_class::<Trajectory>()?;
    m.add_class::<Plan>()?;
    m.add("InfeasibleError", m.py().get_type::<InfeasibleError>())?;
    m.add_function(wrap_pyfunction!(lissajous, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(plan, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(oracle, m)?)?;
    Ok(())
}
