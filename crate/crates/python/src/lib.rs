//! Python bindings for the beam planner.

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use beamplace::balancer::{refine, BalancerConfig};
use beamplace::coverage_graph::{self, run_stage1, Stage1Config};
use beamplace::error::Error;
use beamplace::geometry::{self, EARTH_RADIUS_KM};
use beamplace::link_budget::{self, PowerAllocation};
use beamplace::metrics::{self, Weights};
use beamplace::scenario::{self, ScenarioConfig};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Domain(_) | Error::Config(_) | Error::Infeasible(_) => {
            PyValueError::new_err(e.to_string())
        }
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        Error::Serialize(_) | Error::Internal(_) => PyRuntimeError::new_err(e.to_string()),
    }
}

/// A point on the spherical Earth, degrees.
#[pyclass(name = "GeoPoint", frozen, eq, from_py_object)]
#[derive(Clone, Copy, PartialEq)]
struct PyGeoPoint(geometry::GeoPoint);

#[pymethods]
impl PyGeoPoint {
    #[new]
    fn new(lat: f64, lon: f64) -> PyResult<Self> {
        geometry::GeoPoint::new(lat, lon)
            .map(PyGeoPoint)
            .map_err(to_py)
    }

    #[getter]
    fn lat(&self) -> f64 {
        self.0.lat
    }

    #[getter]
    fn lon(&self) -> f64 {
        self.0.lon
    }

    /// Earth-centred coordinates in km.
    fn ecef(&self) -> (f64, f64, f64) {
        let v = self.0.to_ecef(EARTH_RADIUS_KM);
        (v.x, v.y, v.z)
    }

    fn __repr__(&self) -> String {
        format!("GeoPoint(lat={}, lon={})", self.0.lat, self.0.lon)
    }
}

#[pyclass(name = "Satellite", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PySatellite(geometry::SatellitePose);

#[pymethods]
impl PySatellite {
    #[new]
    #[pyo3(signature = (lat=0.0, lon=-88.7, altitude_km=8063.0))]
    fn new(lat: f64, lon: f64, altitude_km: f64) -> PyResult<Self> {
        let pos = geometry::GeoPoint::new(lat, lon).map_err(to_py)?;
        geometry::SatellitePose::new(pos, altitude_km)
            .map(PySatellite)
            .map_err(to_py)
    }

    #[getter]
    fn position(&self) -> PyGeoPoint {
        PyGeoPoint(self.0.position)
    }

    #[getter]
    fn altitude_km(&self) -> f64 {
        self.0.altitude
    }

    fn __repr__(&self) -> String {
        format!(
            "Satellite(lat={}, lon={}, altitude_km={})",
            self.0.position.lat, self.0.position.lon, self.0.altitude
        )
    }
}

/// Link-budget constants. Keyword arguments override the defaults.
#[pyclass(name = "LinkParams", from_py_object)]
#[derive(Clone, Copy)]
struct PyLinkParams(link_budget::LinkBudgetParams);

#[pymethods]
impl PyLinkParams {
    #[new]
    #[pyo3(signature = (**overrides))]
    fn new(overrides: Option<&Bound<'_, pyo3::types::PyDict>>) -> PyResult<Self> {
        let mut value = serde_json::to_value(link_budget::LinkBudgetParams::default())
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        if let Some(d) = overrides {
            for (k, v) in d.iter() {
                let key: String = k.extract()?;
                let num: f64 = v.extract()?;
                if value.get(&key).is_none() {
                    return Err(PyValueError::new_err(format!(
                        "unknown link parameter {key:?}"
                    )));
                }
                value[key] = serde_json::json!(num);
            }
        }
        let params: link_budget::LinkBudgetParams =
            serde_json::from_value(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
        params.validate().map_err(to_py)?;
        Ok(PyLinkParams(params))
    }

    fn as_dict(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        let json =
            serde_json::to_string(&self.0).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        let loads = py.import("json")?.getattr("loads")?;
        Ok(loads.call1((json,))?.unbind())
    }

    fn __repr__(&self) -> String {
        format!("LinkParams({:?})", self.0)
    }
}

fn params_or_default(p: Option<PyLinkParams>) -> link_budget::LinkBudgetParams {
    p.map(|p| p.0).unwrap_or_default()
}

/// Users grouped into beams with their centres.
#[pyclass(name = "BeamPlan", frozen)]
struct PyBeamPlan(coverage_graph::BeamPlan);

#[pymethods]
impl PyBeamPlan {
    #[getter]
    fn n_beams(&self) -> usize {
        self.0.n_beams()
    }

    /// User indices of every beam, 0-based.
    fn partition(&self) -> Vec<Vec<usize>> {
        self.0.partition()
    }

    fn centers(&self) -> Vec<PyGeoPoint> {
        self.0.beams.iter().map(|b| PyGeoPoint(b.center)).collect()
    }

    fn sizes(&self) -> Vec<usize> {
        self.0.sizes()
    }

    fn load_gap(&self) -> usize {
        metrics::load_gap(&self.0)
    }

    fn __repr__(&self) -> String {
        format!("BeamPlan(partition={:?})", self.0.partition())
    }
}

fn points(users: Vec<PyGeoPoint>) -> Vec<geometry::GeoPoint> {
    users.into_iter().map(|u| u.0).collect()
}

#[pyfunction]
#[pyo3(signature = (a, b, radius=EARTH_RADIUS_KM))]
fn great_circle_distance(a: PyGeoPoint, b: PyGeoPoint, radius: f64) -> f64 {
    geometry::great_circle_distance(a.0, b.0, radius)
}

/// Angle in degrees between the satellite's lines of sight to two points.
#[pyfunction]
fn view_angle(sat: PySatellite, a: PyGeoPoint, b: PyGeoPoint) -> f64 {
    geometry::view_angle(&sat.0, a.0, b.0)
}

#[pyfunction]
fn slant_range(sat: PySatellite, user: PyGeoPoint) -> f64 {
    geometry::slant_range(&sat.0, user.0)
}

#[pyfunction]
fn bessel_j1(x: f64) -> PyResult<f64> {
    link_budget::bessel_j1(x).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (theta_deg, params=None))]
fn normalized_gain(theta_deg: f64, params: Option<PyLinkParams>) -> PyResult<f64> {
    link_budget::normalized_gain(theta_deg, &params_or_default(params)).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (params=None))]
fn half_power_angle(params: Option<PyLinkParams>) -> f64 {
    link_budget::half_power_angle(&params_or_default(params))
}

#[pyfunction]
#[pyo3(signature = (slant_range_km, params=None))]
fn free_space_path_loss(slant_range_km: f64, params: Option<PyLinkParams>) -> PyResult<f64> {
    link_budget::free_space_path_loss(slant_range_km, &params_or_default(params)).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (theta_deg, slant_range_km, power_dbw, params=None))]
fn cnr(
    theta_deg: f64,
    slant_range_km: f64,
    power_dbw: f64,
    params: Option<PyLinkParams>,
) -> PyResult<f64> {
    link_budget::cnr(
        theta_deg,
        slant_range_km,
        power_dbw,
        &params_or_default(params),
    )
    .map_err(to_py)
}

/// 0/1 adjacency matrix of users within `half_beamwidth` degrees of each other.
#[pyfunction]
#[pyo3(signature = (users, sat, half_beamwidth=1.6))]
fn coverage_matrix(
    users: Vec<PyGeoPoint>,
    sat: PySatellite,
    half_beamwidth: f64,
) -> PyResult<Vec<Vec<u8>>> {
    coverage_graph::build_graph(&points(users), &sat.0, half_beamwidth)
        .map(|g| g.matrix())
        .map_err(to_py)
}

/// Plan beams with the clique stage and, unless `balance` is false, the
/// K-means rebalancing stage.
#[pyfunction]
#[pyo3(signature = (users, sat, half_beamwidth=1.6, balance=true, seed=0))]
fn plan_beams(
    users: Vec<PyGeoPoint>,
    sat: PySatellite,
    half_beamwidth: f64,
    balance: bool,
    seed: u64,
) -> PyResult<PyBeamPlan> {
    let users = points(users);
    let g = coverage_graph::build_graph(&users, &sat.0, half_beamwidth).map_err(to_py)?;
    let s1 = run_stage1(&g, &users, &Stage1Config::default()).map_err(to_py)?;
    if !balance {
        return Ok(PyBeamPlan(s1.plan));
    }
    let cfg = BalancerConfig {
        seed,
        ..Default::default()
    };
    refine(&s1.plan, &users, &g, &cfg)
        .map(|out| PyBeamPlan(out.plan))
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (users, sat, half_beamwidth=1.6))]
fn beam_aperture_baseline(
    users: Vec<PyGeoPoint>,
    sat: PySatellite,
    half_beamwidth: f64,
) -> PyResult<PyBeamPlan> {
    metrics::beam_aperture_baseline(&points(users), &sat.0, half_beamwidth)
        .map(PyBeamPlan)
        .map_err(to_py)
}

#[pyfunction]
fn homogeneous_balance_baseline(users: Vec<PyGeoPoint>, n_beams: usize) -> PyResult<PyBeamPlan> {
    metrics::homogeneous_balance_baseline(&points(users), n_beams)
        .map(PyBeamPlan)
        .map_err(to_py)
}

/// Per-user link figures and aggregates of a plan, as a dict.
#[pyfunction]
#[pyo3(signature = (plan, users, sat, params=None, weights=(0.5, 0.5)))]
fn evaluate(
    py: Python<'_>,
    plan: &PyBeamPlan,
    users: Vec<PyGeoPoint>,
    sat: PySatellite,
    params: Option<PyLinkParams>,
    weights: (f64, f64),
) -> PyResult<Py<PyAny>> {
    let w = Weights::new(weights.0, weights.1).map_err(to_py)?;
    let report = metrics::evaluate(
        &plan.0,
        &points(users),
        &sat.0,
        &params_or_default(params),
        w,
        &PowerAllocation::EqualSplit,
    )
    .map_err(to_py)?;
    let json =
        serde_json::to_string(&report).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py
        .import("json")?
        .getattr("loads")?
        .call1((json,))?
        .unbind())
}

/// Run a scenario from TOML or JSON text and return the result document
/// as JSON text.
#[pyfunction]
fn run_scenario(py: Python<'_>, config: &str) -> PyResult<String> {
    let cfg = ScenarioConfig::parse(config).map_err(to_py)?;
    let doc = py.detach(|| scenario::run(&cfg)).map_err(to_py)?;
    serde_json::to_string(&doc).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Users of the ten-user worked example.
#[pyfunction]
fn example1_users() -> Vec<PyGeoPoint> {
    beamplace::example1::users()
        .into_iter()
        .map(PyGeoPoint)
        .collect()
}

#[pymodule]
fn beamplace_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGeoPoint>()?;
    m.add_class::<PySatellite>()?;
    m.add_class::<PyLinkParams>()?;
    m.add_class::<PyBeamPlan>()?;
    m.add_function(wrap_pyfunction!(great_circle_distance, m)?)?;
    m.add_function(wrap_pyfunction!(view_angle, m)?)?;
    m.add_function(wrap_pyfunction!(slant_range, m)?)?;
    m.add_function(wrap_pyfunction!(bessel_j1, m)?)?;
    m.add_function(wrap_pyfunction!(normalized_gain, m)?)?;
    m.add_function(wrap_pyfunction!(half_power_angle, m)?)?;
    m.add_function(wrap_pyfunction!(free_space_path_loss, m)?)?;
    m.add_function(wrap_pyfunction!(cnr, m)?)?;
    m.add_function(wrap_pyfunction!(coverage_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(plan_beams, m)?)?;
    m.add_function(wrap_pyfunction!(beam_aperture_baseline, m)?)?;
    m.add_function(wrap_pyfunction!(homogeneous_balance_baseline, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(example1_users, m)?)?;
    m.add("EARTH_RADIUS_KM", EARTH_RADIUS_KM)?;
    Ok(())
}
