//! Python bindings for `loadplan`.
//!
//! Poses cross the boundary as `(x_m, y_m, heading_deg)` tuples. Structured
//! results (plan logs, experiment summaries) are returned as plain dicts and
//! lists built from their JSON form.

use loadplan::harness::{run_experiment, stats_json, InitialPiles, RunRecord, ScenarioConfig};
use loadplan::planner::Planner;
use loadplan::vturn::{plan_vturn as plan_vturn_rs, VTurnConfig};
use loadplan::worldmodel::optimize_action as optimize_action_rs;
use loadplan::{DigPose, Error, FieldDims, HeightField, LoadAction, Pose, Strategy, VTurnLut, WorldModel};
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        Error::InvalidArgument(_) | Error::Config(_) | Error::Format { .. } | Error::OutOfBounds { .. } => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn json_to_py<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

fn dig(pose: (f64, f64, f64)) -> DigPose {
    DigPose::new(pose.0, pose.1, pose.2.to_radians())
}

fn triple<'py>(py: Python<'py>, p: &loadplan::PerformanceTriple) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("mass_kg", p.mass)?;
    d.set_item("time_s", p.time)?;
    d.set_item("work_j", p.work)?;
    Ok(d)
}

/// Regular grid of soil heights.
#[pyclass(name = "HeightField", module = "loadplan_py", frozen)]
struct PyHeightField {
    inner: HeightField,
}

#[pymethods]
impl PyHeightField {
    /// Heights are row-major, `heights[j * nx + i]`.
    #[new]
    fn new(nx: usize, ny: usize, cell: f64, origin: (f64, f64), heights: Vec<f64>) -> PyResult<Self> {
        let dims = FieldDims::new(nx, ny, cell, [origin.0, origin.1]).map_err(err)?;
        Ok(Self {
            inner: HeightField::new(dims, heights).map_err(err)?,
        })
    }

    #[staticmethod]
    fn read(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: loadplan::heightfield::read_hfld(path).map_err(err)?,
        })
    }

    fn write(&self, path: &str) -> PyResult<()> {
        loadplan::heightfield::write_hfld(path, &self.inner).map_err(err)
    }

    #[getter]
    fn nx(&self) -> usize {
        self.inner.nx()
    }

    #[getter]
    fn ny(&self) -> usize {
        self.inner.ny()
    }

    #[getter]
    fn cell(&self) -> f64 {
        self.inner.cell()
    }

    #[getter]
    fn origin(&self) -> (f64, f64) {
        let o = self.inner.origin();
        (o[0], o[1])
    }

    fn heights(&self) -> Vec<f64> {
        self.inner.heights().to_vec()
    }

    fn volume(&self) -> f64 {
        self.inner.volume()
    }

    fn max_slope(&self) -> f64 {
        self.inner.max_slope()
    }

    fn sample(&self, x: f64, y: f64) -> PyResult<f64> {
        self.inner.sample(x, y).map_err(err)
    }

    fn settle(&self, repose_deg: f64) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.settle(repose_deg.to_radians()).map_err(err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!("HeightField(nx={}, ny={}, cell={})", self.inner.nx(), self.inner.ny(), self.inner.cell())
    }
}

/// Precomputed V-turn costs over the dig region.
#[pyclass(name = "VTurnLut", module = "loadplan_py", frozen)]
struct PyLut {
    inner: VTurnLut,
}

#[pymethods]
impl PyLut {
    #[staticmethod]
    fn read(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: VTurnLut::read(path).map_err(err)?,
        })
    }

    fn write(&self, path: &str) -> PyResult<()> {
        self.inner.write(path).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// `(v1, v2)` costs at a dig pose, each `{"time_s", "work_j"}`.
    fn lookup<'py>(&self, py: Python<'py>, pose: (f64, f64, f64), load_kg: f64) -> PyResult<(Bound<'py, PyDict>, Bound<'py, PyDict>)> {
        let (a, b) = self.inner.lookup(&dig(pose).pose(), load_kg).map_err(err)?;
        let conv = |c: loadplan::VTurnCost| -> PyResult<Bound<'py, PyDict>> {
            let d = PyDict::new(py);
            d.set_item("time_s", c.time)?;
            d.set_item("work_j", c.work)?;
            Ok(d)
        };
        Ok((conv(a)?, conv(b)?))
    }
}

/// A complete scenario configuration.
#[pyclass(name = "Scenario", module = "loadplan_py", frozen)]
struct PyScenario {
    inner: ScenarioConfig,
}

#[pymethods]
impl PyScenario {
    /// Parses a JSON document; built-in defaults without one.
    #[new]
    #[pyo3(signature = (json=None))]
    fn new(json: Option<&str>) -> PyResult<Self> {
        let inner = match json {
            Some(t) => ScenarioConfig::from_json(t).map_err(err)?,
            None => ScenarioConfig::default(),
        };
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: ScenarioConfig::load(path).map_err(err)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn initial_pile(&self, py: Python<'_>, seed: u64) -> PyResult<PyHeightField> {
        let f = py.detach(|| self.inner.initial_pile(seed)).map_err(err)?;
        Ok(PyHeightField { inner: f })
    }

    fn build_lut(&self, py: Python<'_>) -> PyResult<PyLut> {
        let lut = py.detach(|| self.inner.build_lut()).map_err(err)?;
        Ok(PyLut { inner: lut })
    }

    /// Dig candidates on `field` as `(x_m, y_m, heading_deg)`.
    fn candidates(&self, field: &PyHeightField) -> Vec<(f64, f64, f64)> {
        let p = &self.inner.planner;
        loadplan::planner::listup(&field.inner, &p.region, &p.listup)
            .iter()
            .map(|c| (c.pose.x, c.pose.y, c.pose.heading.to_degrees()))
            .collect()
    }

    /// Loading performance of `action` at `pose`.
    fn predict_performance<'py>(
        &self,
        py: Python<'py>,
        field: &PyHeightField,
        pose: (f64, f64, f64),
        action: [f64; 4],
    ) -> PyResult<Bound<'py, PyDict>> {
        let model = self.inner.model().map_err(err)?;
        let p = model
            .predict_performance(&field.inner, &dig(pose), &LoadAction::new(action))
            .map_err(err)?;
        triple(py, &p)
    }

    /// Pile after loading with `action` at `pose`, and the removed volume.
    fn predict_pile(&self, field: &PyHeightField, pose: (f64, f64, f64), action: [f64; 4]) -> PyResult<(PyHeightField, f64)> {
        let model = self.inner.model().map_err(err)?;
        let p = model
            .predict_pile(&field.inner, &dig(pose), &LoadAction::new(action))
            .map_err(err)?;
        Ok((PyHeightField { inner: p.field }, p.removed_volume))
    }

    /// Best loading action at `pose`: `(action, performance, objective)`.
    fn optimize_action<'py>(
        &self,
        py: Python<'py>,
        field: &PyHeightField,
        pose: (f64, f64, f64),
    ) -> PyResult<([f64; 4], Bound<'py, PyDict>, f64)> {
        let model = self.inner.model().map_err(err)?;
        let enc = model.encode(&field.inner, &dig(pose)).map_err(err)?;
        let r = optimize_action_rs(&model, &enc, &self.inner.normalization, &self.inner.planner.optimize);
        Ok((r.action.0, triple(py, &r.performance)?, r.objective))
    }

    /// Runs one strategy (`greedy`, `max_loading`, `nominal`, `tree-d<N>`)
    /// and returns the run record as a dict.
    #[pyo3(signature = (field, lut, strategy, cycles=None))]
    fn plan<'py>(
        &self,
        py: Python<'py>,
        field: &PyHeightField,
        lut: &PyLut,
        strategy: &str,
        cycles: Option<usize>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let strategy = Strategy::parse(strategy).map_err(err)?;
        let cycles = cycles.unwrap_or(self.inner.cycles);
        let model = self.inner.model().map_err(err)?;
        let record = py
            .detach(|| -> loadplan::Result<RunRecord> {
                let planner = Planner::new(&model, &lut.inner, self.inner.normalization, self.inner.planner)?;
                let outcome = planner.run(&field.inner, strategy, cycles)?;
                Ok(RunRecord::from_outcome(self.inner.pile.seed, &outcome))
            })
            .map_err(err)?;
        let text = serde_json::to_string(&record).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        json_to_py(py, &text)
    }

    /// Runs the full experiment and returns its summary dict.
    #[pyo3(signature = (lut, field=None))]
    fn run_experiment<'py>(&self, py: Python<'py>, lut: &PyLut, field: Option<&PyHeightField>) -> PyResult<Bound<'py, PyAny>> {
        let piles = match field {
            Some(f) => InitialPiles::Fixed(f.inner.clone()),
            None => InitialPiles::Generated,
        };
        let result = py
            .detach(|| run_experiment(&self.inner, &lut.inner, &piles))
            .map_err(err)?;
        json_to_py(py, &stats_json(&result))
    }
}

/// V-turn between two poses with the default settings: total length,
/// quality and the switch-back pose.
#[pyfunction]
#[pyo3(signature = (start, end, mag_start=10.0, mag_end=30.0))]
fn plan_vturn<'py>(
    py: Python<'py>,
    start: (f64, f64, f64),
    end: (f64, f64, f64),
    mag_start: f64,
    mag_end: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let a = Pose::new(start.0, start.1, start.2.to_radians());
    let b = Pose::new(end.0, end.1, end.2.to_radians());
    let path = plan_vturn_rs(&a, &b, mag_start, mag_end, &VTurnConfig::default()).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("length_m", path.total_length())?;
    d.set_item("quality", path.quality)?;
    let s = path.switch_back;
    d.set_item("switch_back", (s.x, s.y, s.heading.to_degrees()))?;
    Ok(d)
}

#[pymodule]
fn loadplan_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyHeightField>()?;
    m.add_class::<PyLut>()?;
    m.add_class::<PyScenario>()?;
    m.add_function(wrap_pyfunction!(plan_vturn, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
