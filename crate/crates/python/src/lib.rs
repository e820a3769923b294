//! Python bindings for the alphafence engine.
//!
//! The module mirrors the library's main operations: compile GeoJSON into a
//! zone database, screen positions, manage dynamic zones, run scripted
//! missions, and use the alpha-shape primitives directly. Structured results
//! (position checks, mission traces, zone records) cross the boundary as
//! plain dicts and lists built from the library's own serialization, so the
//! Python view always matches the file formats.

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyBytes, PyDict, PyList, PyString};

use alphafence::alphashape::{self, PointSet};
use alphafence::geo::{GeoPoint, PlanarPoint};
use alphafence::mission::{self, MissionPlan};
use alphafence::repository::{
    compile, parse_features, AlphaPolicy, CategoryFilter, CompileConfig, CompiledDatabase,
    GeometryMode,
};
use alphafence::Error;

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::InvalidCoordinate(_)
        | Error::InvalidGeometry(_)
        | Error::DegenerateInput(_)
        | Error::UnsupportedParameter(_)
        | Error::InvalidInput(_)
        | Error::Parse { .. } => PyValueError::new_err(e.to_string()),
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn json_to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    use serde_json::Value;
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => PyBool::new(py, *b).to_owned().into_any(),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_pyobject(py)?.into_any()
            } else if let Some(u) = n.as_u64() {
                u.into_pyobject(py)?.into_any()
            } else {
                n.as_f64()
                    .unwrap_or(f64::NAN)
                    .into_pyobject(py)?
                    .into_any()
            }
        }
        Value::String(s) => PyString::new(py, s).into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (key, value) in map {
                dict.set_item(key, json_to_py(py, value)?)?;
            }
            dict.into_any()
        }
    })
}

/// Serializes any library type and hands it to Python as dicts/lists.
fn to_py_value<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let json = serde_json::to_value(value)
        .map_err(|e| PyRuntimeError::new_err(format!("serialization failed: {e}")))?;
    json_to_py(py, &json)
}

fn geo_point(lat_deg: f64, lon_deg: f64, alt_m: Option<f64>) -> PyResult<GeoPoint> {
    match alt_m {
        Some(alt) => GeoPoint::with_alt(lat_deg, lon_deg, alt),
        None => GeoPoint::new(lat_deg, lon_deg),
    }
    .map_err(to_py_err)
}

fn point_set(points: Vec<(f64, f64)>) -> PyResult<PointSet> {
    let pts = points
        .into_iter()
        .map(|(x, y)| PlanarPoint::new(x, y))
        .collect();
    PointSet::new(pts).map_err(to_py_err)
}

fn compile_config(
    mode: &str,
    alpha: Option<f64>,
    warning_m: f64,
    termination_m: f64,
    parallel: bool,
) -> PyResult<CompileConfig> {
    let mode = match mode {
        "alpha" => GeometryMode::Alpha,
        "polygonal" => GeometryMode::Polygonal,
        "hull" => GeometryMode::Hull,
        other => {
            return Err(PyValueError::new_err(format!(
                "mode must be 'alpha', 'polygonal', or 'hull', got {other:?}"
            )))
        }
    };
    Ok(CompileConfig {
        mode,
        alpha: match alpha {
            Some(a) => AlphaPolicy::Fixed(a),
            None => AlphaPolicy::Auto,
        },
        warning_buffer_m: warning_m,
        termination_buffer_m: termination_m,
        parallel,
    })
}

/// A compiled zone database: the projection, the compiled geofences, and
/// the spatial index used for screening.
#[pyclass(module = "alphafence_py")]
struct Database {
    inner: CompiledDatabase,
    /// Messages for features that were skipped or degraded during the
    /// compile that produced this database; empty for loaded databases.
    #[pyo3(get)]
    diagnostics: Vec<String>,
}

#[pymethods]
impl Database {
    /// Compiles OSM-style GeoJSON text into a zone database.
    ///
    /// `alpha=None` tunes alpha per feature; a number fixes it globally.
    #[staticmethod]
    #[pyo3(signature = (text, mode="alpha", alpha=None, warning_m=50.0, termination_m=20.0, parallel=false))]
    fn compile_geojson(
        text: &str,
        mode: &str,
        alpha: Option<f64>,
        warning_m: f64,
        termination_m: f64,
        parallel: bool,
    ) -> PyResult<Self> {
        let config = compile_config(mode, alpha, warning_m, termination_m, parallel)?;
        let parsed = parse_features(text).map_err(to_py_err)?;
        let out = compile(&parsed.features, &CategoryFilter::default_profile(), &config);
        let diagnostics = parsed
            .diagnostics
            .iter()
            .map(ToString::to_string)
            .chain(out.diagnostics.iter().map(ToString::to_string))
            .collect();
        Ok(Database {
            inner: out.database,
            diagnostics,
        })
    }

    /// Restores a database from `save()` bytes, verifying its digest.
    #[staticmethod]
    fn load(data: &[u8]) -> PyResult<Self> {
        Ok(Database {
            inner: CompiledDatabase::load(data).map_err(to_py_err)?,
            diagnostics: Vec::new(),
        })
    }

    #[staticmethod]
    fn load_file(path: &str) -> PyResult<Self> {
        let data = std::fs::read(path).map_err(|e| to_py_err(e.into()))?;
        Self::load(&data)
    }

    /// Serializes the database (JSON with an embedded content digest).
    fn save<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyBytes>> {
        let bytes = self.inner.save().map_err(to_py_err)?;
        Ok(PyBytes::new(py, &bytes))
    }

    fn save_file(&self, path: &str) -> PyResult<()> {
        let bytes = self.inner.save().map_err(to_py_err)?;
        std::fs::write(path, bytes).map_err(|e| to_py_err(e.into()))
    }

    fn zone_count(&self) -> usize {
        self.inner.zones().len()
    }

    fn __len__(&self) -> usize {
        self.inner.zones().len()
    }

    fn zone_ids(&self) -> Vec<String> {
        self.inner.zones().iter().map(|z| z.id.clone()).collect()
    }

    /// One zone record as a dict, or None for an unknown id.
    fn zone<'py>(&self, py: Python<'py>, id: &str) -> PyResult<Option<Bound<'py, PyAny>>> {
        self.inner.zone(id).map(|z| to_py_value(py, z)).transpose()
    }

    /// Projection origin as (lat_deg, lon_deg).
    fn origin(&self) -> (f64, f64) {
        let origin = self.inner.projection().origin();
        (origin.lat_deg, origin.lon_deg)
    }

    /// Screens a position against every zone. Returns a dict with `worst`
    /// ("clear"/"warning"/"terminate"/"violation"), `results` (per non-clear
    /// zone: id, status, signed distance), and `out_of_coverage`.
    #[pyo3(signature = (lat_deg, lon_deg, alt_m=None))]
    fn check<'py>(
        &self,
        py: Python<'py>,
        lat_deg: f64,
        lon_deg: f64,
        alt_m: Option<f64>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let p = geo_point(lat_deg, lon_deg, alt_m)?;
        let check = self.inner.evaluate_all(&p).map_err(to_py_err)?;
        to_py_value(py, &check)
    }

    /// Inserts a keep-out zone around another aircraft; returns the zone id.
    /// Spherical when an altitude is given, circular otherwise.
    #[pyo3(signature = (lat_deg, lon_deg, radius_m, alt_m=None))]
    fn add_dynamic_zone(
        &mut self,
        lat_deg: f64,
        lon_deg: f64,
        radius_m: f64,
        alt_m: Option<f64>,
    ) -> PyResult<String> {
        let p = geo_point(lat_deg, lon_deg, alt_m)?;
        self.inner.add_dynamic_zone(&p, radius_m).map_err(to_py_err)
    }

    /// Removes a zone by id; True when something was removed.
    fn remove_zone(&mut self, id: &str) -> bool {
        self.inner.remove_zone(id)
    }

    /// The whole database as a GeoJSON FeatureCollection string.
    fn export_geojson(&self) -> PyResult<String> {
        alphafence::geojson::database_geojson(&self.inner, None).map_err(to_py_err)
    }

    fn __repr__(&self) -> String {
        let origin = self.inner.projection().origin();
        format!(
            "Database(zones={}, origin=({:.4}, {:.4}))",
            self.inner.zones().len(),
            origin.lat_deg,
            origin.lon_deg
        )
    }
}

/// Boundary rings of the alpha shape of a planar point cloud, as lists of
/// (x, y) vertices in normal form.
#[pyfunction]
fn alpha_shape_rings(points: Vec<(f64, f64)>, alpha: f64) -> PyResult<Vec<Vec<(f64, f64)>>> {
    let set = point_set(points)?;
    let shape = alphashape::alpha_shape(&set, alpha).map_err(to_py_err)?;
    Ok(shape
        .boundary()
        .iter()
        .map(|ring| ring.vertices().iter().map(|p| (p.x, p.y)).collect())
        .collect())
}

/// The largest alpha whose shape is a single ring containing every input
/// point.
#[pyfunction]
fn auto_alpha(points: Vec<(f64, f64)>) -> PyResult<f64> {
    alphashape::auto_alpha(&point_set(points)?).map_err(to_py_err)
}

/// Convex hull vertices of a planar point cloud, counterclockwise.
#[pyfunction]
fn convex_hull(points: Vec<(f64, f64)>) -> PyResult<Vec<(f64, f64)>> {
    let hull = alphashape::convex_hull(&point_set(points)?).map_err(to_py_err)?;
    Ok(hull.vertices().iter().map(|p| (p.x, p.y)).collect())
}

/// Runs a scripted mission against a database. The plan uses the same JSON
/// schema as the command-line `simulate` subcommand; the returned dict holds
/// `states`, `events`, and `summary`.
#[pyfunction]
fn run_mission<'py>(
    py: Python<'py>,
    db: &Database,
    plan_json: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let plan: MissionPlan = serde_json::from_str(plan_json)
        .map_err(|e| PyValueError::new_err(format!("invalid mission plan: {e}")))?;
    let trace = mission::run(&db.inner, plan).map_err(to_py_err)?;
    to_py_value(py, &trace)
}

#[pymodule]
fn alphafence_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Database>()?;
    m.add_function(wrap_pyfunction!(alpha_shape_rings, m)?)?;
    m.add_function(wrap_pyfunction!(auto_alpha, m)?)?;
    m.add_function(wrap_pyfunction!(convex_hull, m)?)?;
    m.add_function(wrap_pyfunction!(run_mission, m)?)?;
    Ok(())
}
