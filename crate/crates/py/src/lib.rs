//! Python bindings. Rationals cross the boundary as strings such as `"3"` or `"-2/5"`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use monopat::search::{self, Method, SearchOptions};
use monopat::structure::{Ambient, ThickFamilySpec, ThickTestFamily, MAX_AMBIENT};
use monopat::walker::{self, WalkParams};
use monopat::{builtin_template, Builtin, GroundSet, PatternTemplate, Rational};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn rationals(vs: &[Rational]) -> Vec<String> {
    vs.iter().map(|v| v.to_string()).collect()
}

/// A finite ground set, written `int:LO..HI`, `fp:P` or `qgrid:N/D`.
#[pyclass(name = "Ground", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGround(GroundSet);

#[pymethods]
impl PyGround {
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        spec.parse().map(PyGround).map_err(value_err)
    }

    fn elements(&self) -> Vec<String> {
        rationals(&self.0.elements())
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Ground('{}')", self.0)
    }
}

#[pyclass(name = "Template", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyTemplate(PatternTemplate);

#[pymethods]
impl PyTemplate {
    /// `schur`, `moreira`, `quad` or `quad_ap` (which needs `k`).
    #[staticmethod]
    #[pyo3(signature = (name, k=None))]
    fn builtin(name: &str, k: Option<i64>) -> PyResult<Self> {
        let b: Builtin = name.parse().map_err(value_err)?;
        builtin_template(b, k).map(PyTemplate).map_err(value_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        PatternTemplate::from_json(text)
            .map(PyTemplate)
            .map_err(value_err)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    #[getter]
    fn num_vars(&self) -> usize {
        self.0.num_vars()
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }
}

#[pyclass(name = "Coloring", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyColoring(search::Coloring);

#[pymethods]
impl PyColoring {
    /// Colors are listed in the ground's enumeration order.
    #[new]
    fn new(ground: &PyGround, n: usize, colors: Vec<u8>) -> PyResult<Self> {
        search::Coloring::new(ground.0, n, colors)
            .map(PyColoring)
            .map_err(value_err)
    }

    #[staticmethod]
    fn random(ground: &PyGround, n: usize, seed: u64) -> PyResult<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        search::Coloring::random(ground.0, n, &mut rng)
            .map(PyColoring)
            .map_err(value_err)
    }

    #[staticmethod]
    fn monochrome(ground: &PyGround) -> Self {
        PyColoring(search::Coloring::monochrome(ground.0))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text)
            .map(PyColoring)
            .map_err(value_err)
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.0).expect("coloring serializes")
    }

    #[getter]
    fn ground(&self) -> PyGround {
        PyGround(self.0.ground())
    }

    #[getter]
    fn num_colors(&self) -> usize {
        self.0.num_colors()
    }

    #[getter]
    fn colors(&self) -> Vec<u8> {
        self.0.colors().to_vec()
    }

    fn color_of(&self, value: &str) -> PyResult<Option<usize>> {
        let v: Rational = value.parse().map_err(value_err)?;
        Ok(self.0.color_of(&v))
    }
}

/// Returns `(verdict, coloring or None, seconds)`.
#[pyfunction]
#[pyo3(signature = (ground, n, template, method="sat"))]
fn avoidance_search(
    ground: &PyGround,
    n: usize,
    template: &PyTemplate,
    method: &str,
) -> PyResult<(String, Option<PyColoring>, f64)> {
    let method: Method = method.parse().map_err(value_err)?;
    let r = search::avoidance_search(ground.0, n, &template.0, method, &SearchOptions::default())
        .map_err(value_err)?;
    Ok((
        r.verdict().name().to_owned(),
        r.coloring().cloned().map(PyColoring),
        r.seconds(),
    ))
}

/// Per-color counts and their total.
#[pyfunction]
fn count_monochromatic(coloring: &PyColoring, template: &PyTemplate) -> (Vec<u64>, u64) {
    let c = search::count_monochromatic(&coloring.0, &template.0);
    (c.per_color, c.total)
}

/// Monochromatic instances as `(assignment, color)` pairs.
#[pyfunction]
#[pyo3(signature = (coloring, template, limit=None))]
fn find_instances(
    coloring: &PyColoring,
    template: &PyTemplate,
    limit: Option<usize>,
) -> Vec<(Vec<String>, usize)> {
    search::find_instances(&coloring.0, &template.0, limit)
        .into_iter()
        .map(|(i, m)| (rationals(&i.assignment), m))
        .collect()
}

#[pyfunction]
fn verify_monochromatic(
    coloring: &PyColoring,
    template: &PyTemplate,
    assignment: Vec<String>,
) -> PyResult<Option<usize>> {
    let a = assignment
        .iter()
        .map(|s| s.parse::<Rational>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(value_err)?;
    Ok(search::verify_monochromatic(&coloring.0, &template.0, &a))
}

/// DIMACS text of the avoidance problem.
#[pyfunction]
#[pyo3(signature = (ground, n, template, threads=1))]
fn encode_cnf(ground: &PyGround, n: usize, template: &PyTemplate, threads: usize) -> String {
    search::encode_cnf_with_threads(ground.0, n, &template.0, threads.max(1)).to_dimacs()
}

/// Rows `(hi, verdict, inferred)` for the intervals `[lo, hi]`.
#[pyfunction]
#[pyo3(signature = (lo, hi_from, hi_to, n, template, method="sat"))]
fn threshold_scan(
    lo: i64,
    hi_from: i64,
    hi_to: i64,
    n: usize,
    template: &PyTemplate,
    method: &str,
) -> PyResult<Vec<(i64, String, bool)>> {
    let method: Method = method.parse().map_err(value_err)?;
    let table = search::threshold_scan(
        lo,
        hi_from..=hi_to,
        n,
        &template.0,
        method,
        &SearchOptions::default(),
    )
    .map_err(value_err)?;
    Ok(table
        .rows
        .iter()
        .map(|r| (r.hi, r.verdict.name().to_owned(), r.inferred))
        .collect())
}

/// Runs the quadruple walk on a prime-field coloring. Returns
/// `(quadruple, color, trace_json)`; failures raise `RuntimeError` carrying
/// the failure as JSON.
#[pyfunction]
#[pyo3(signature = (coloring, width=2, steps=6, seed=0, restarts=0))]
fn walk(
    coloring: &PyColoring,
    width: usize,
    steps: usize,
    seed: u64,
    restarts: usize,
) -> PyResult<(Vec<String>, usize, String)> {
    let ground = coloring.0.ground();
    if ground.len() > MAX_AMBIENT + 1 {
        return Err(PyValueError::new_err(format!(
            "ground {ground} is too large to walk"
        )));
    }
    let amb = Ambient::nonzero(ground).map_err(value_err)?;
    let family =
        ThickTestFamily::from_spec(&amb, &ThickFamilySpec::subsets(width)).map_err(value_err)?;
    let params = WalkParams {
        n: steps,
        seed,
        restarts,
        ..WalkParams::default()
    };
    match walker::walk_theorem_m2(&coloring.0, &params, width, &family) {
        Ok(s) => Ok((
            rationals(&s.quadruple),
            s.color,
            serde_json::to_string(&s.trace).expect("trace serializes"),
        )),
        Err(e) => Err(PyRuntimeError::new_err(
            serde_json::to_string(&e.failure).expect("failure serializes"),
        )),
    }
}

/// Re-checks a walk trace produced by [`walk`] against its coloring.
#[pyfunction]
fn check_trace(trace_json: &str, coloring: &PyColoring) -> PyResult<bool> {
    let trace: walker::WalkTrace = serde_json::from_str(trace_json).map_err(value_err)?;
    Ok(walker::check_trace(&trace, &coloring.0).is_ok())
}

#[pymodule]
fn monopat_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGround>()?;
    m.add_class::<PyTemplate>()?;
    m.add_class::<PyColoring>()?;
    m.add_function(wrap_pyfunction!(avoidance_search, m)?)?;
    m.add_function(wrap_pyfunction!(count_monochromatic, m)?)?;
    m.add_function(wrap_pyfunction!(find_instances, m)?)?;
    m.add_function(wrap_pyfunction!(verify_monochromatic, m)?)?;
    m.add_function(wrap_pyfunction!(encode_cnf, m)?)?;
    m.add_function(wrap_pyfunction!(threshold_scan, m)?)?;
    m.add_function(wrap_pyfunction!(walk, m)?)?;
    m.add_function(wrap_pyfunction!(check_trace, m)?)?;
    Ok(())
}
