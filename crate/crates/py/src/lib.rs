//! Python bindings for the isolation engine.
//!
//! Rationals cross the boundary as strings (`"3/4"`); structured results
//! are returned as plain dicts and lists decoded from the JSON encodings.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde_json::Value;

use isolde_core::applications::{self, ApplicationError, SubsetSumInstance};
use isolde_core::exactmath::{format_rat, parse_rat, RatMatrix};
use isolde_core::format::{
    emptiness_json, oracle_json, trace_json, verdict_json, FormatError, ProblemFile,
};
use isolde_core::isolation::{self, EngineError, EngineOptions};
use isolde_core::oracle;
use isolde_core::semilinear::{is_stratified, Grammar, LetterBoundedGrammar};
use isolde_core::stochastic::{self, LimitSystem};

type Components = Vec<(Vec<u64>, Vec<Vec<u64>>)>;

fn to_py(py: Python<'_>, v: &Value) -> PyResult<Py<PyAny>> {
    let json = py.import("json")?;
    Ok(json.call_method1("loads", (v.to_string(),))?.unbind())
}

fn format_err(e: FormatError) -> PyErr {
    match e {
        FormatError::Capacity(_) => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn engine_err(e: EngineError) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn app_err(e: ApplicationError) -> PyErr {
    match e {
        ApplicationError::Instance(_) | ApplicationError::Problem(_) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn options(parallel: bool, budget: u64, trace: bool) -> EngineOptions {
    EngineOptions {
        parallel,
        node_budget: budget,
        trace,
        ..EngineOptions::default()
    }
}

fn parse_matrix(rows: Vec<Vec<String>>) -> PyResult<RatMatrix> {
    let rows = rows
        .into_iter()
        .map(|r| {
            r.iter()
                .map(|s| parse_rat(s).map_err(|e| PyValueError::new_err(format!("{s:?}: {e}"))))
                .collect::<PyResult<Vec<_>>>()
        })
        .collect::<PyResult<Vec<_>>>()?;
    RatMatrix::from_rows(rows).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// An automaton, a letter-bounded language and a cutpoint.
#[pyclass(module = "isolde", frozen)]
struct Problem {
    file: ProblemFile,
    inner: isolation::Problem,
}

#[pymethods]
impl Problem {
    /// Parse a problem file document.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let file = ProblemFile::parse(text).map_err(format_err)?;
        let inner = file.to_problem().map_err(format_err)?;
        Ok(Self { file, inner })
    }

    fn to_json(&self) -> String {
        self.file.to_pretty_string()
    }

    #[getter]
    fn states(&self) -> usize {
        self.inner.pfa().states()
    }

    #[getter]
    fn letters(&self) -> Vec<String> {
        self.inner.pfa().letters().iter().map(|l| l.name.clone()).collect()
    }

    #[getter]
    fn cutpoint(&self) -> String {
        format_rat(self.inner.lambda())
    }

    /// Exact value of the word `a_1^{k_1} ··· a_ℓ^{k_ℓ}`.
    fn value(&self, exponents: Vec<u64>) -> PyResult<String> {
        if exponents.len() != self.inner.pfa().letter_count() {
            return Err(PyValueError::new_err("one exponent per letter"));
        }
        Ok(format_rat(&self.inner.pfa().value(&exponents)))
    }

    fn contains(&self, exponents: Vec<u64>) -> bool {
        exponents.len() == self.inner.pfa().letter_count() && self.inner.language().contains(&exponents)
    }

    /// Semilinear components as `(base, periods)` pairs.
    fn components(&self) -> Components {
        self.inner
            .language()
            .components()
            .iter()
            .map(|c| (c.base().to_vec(), c.periods().to_vec()))
            .collect()
    }

    #[pyo3(signature = (parallel=false, budget=1_000_000, trace=false))]
    fn decide(&self, py: Python<'_>, parallel: bool, budget: u64, trace: bool) -> PyResult<Verdict> {
        let decision = py
            .detach(|| isolation::decide_with(&self.inner, options(parallel, budget, trace)))
            .map_err(engine_err)?;
        Ok(Verdict {
            json: verdict_json(&decision.verdict),
            trace: trace.then(|| trace_json(&decision.trace)),
            verified: decision
                .verdict
                .witness()
                .is_none_or(|w| isolation::verify_witness(&self.inner, w)),
            inner: decision.verdict,
        })
    }

    /// `{"outcome": "empty" | "non-empty" | "not-isolated", "witness"?: [...]}`
    #[pyo3(signature = (budget=1_000_000))]
    fn emptiness(&self, py: Python<'_>, budget: u64) -> PyResult<Py<PyAny>> {
        let outcome = py
            .detach(|| applications::emptiness_if_isolated(&self.inner, options(false, budget, false)))
            .map_err(app_err)?;
        to_py(py, &emptiness_json(&outcome))
    }

    /// Whether values arbitrarily close to 1 occur.
    #[pyo3(signature = (budget=1_000_000))]
    fn value_one(&self, py: Python<'_>, budget: u64) -> PyResult<bool> {
        py.detach(|| applications::value_one(self.inner.pfa(), self.inner.language(), options(false, budget, false)))
            .map_err(app_err)
    }

    /// Minimum distance to the cutpoint over points with coordinates up to `bound`.
    fn brute_force_min_distance(&self, py: Python<'_>, bound: u64) -> PyResult<Py<PyAny>> {
        let report = py.detach(|| oracle::brute_force_min_distance(&self.inner, bound));
        to_py(py, &oracle_json(&report))
    }

    fn __repr__(&self) -> String {
        format!(
            "Problem(states={}, letters={:?}, cutpoint={})",
            self.states(),
            self.letters(),
            self.cutpoint()
        )
    }
}

/// Outcome of [`Problem::decide`].
#[pyclass(module = "isolde", frozen)]
struct Verdict {
    inner: isolation::Verdict,
    json: Value,
    trace: Option<Value>,
    verified: bool,
}

#[pymethods]
impl Verdict {
    #[getter]
    fn is_isolated(&self) -> bool {
        self.inner.is_isolated()
    }

    /// Certified isolation radius, `None` when not isolated.
    #[getter]
    fn epsilon(&self) -> Option<String> {
        self.inner.epsilon().map(format_rat)
    }

    /// Witness dict (`{"finite": [...]}` or `{"limit": {...}}`), `None` when isolated.
    #[getter]
    fn witness(&self, py: Python<'_>) -> PyResult<Option<Py<PyAny>>> {
        self.json.get("witness").map(|w| to_py(py, w)).transpose()
    }

    /// Whether the witness passed independent re-verification (always true when isolated).
    #[getter]
    fn verified(&self) -> bool {
        self.verified
    }

    #[getter]
    fn trace(&self, py: Python<'_>) -> PyResult<Option<Py<PyAny>>> {
        self.trace.as_ref().map(|t| to_py(py, t)).transpose()
    }

    fn to_json(&self) -> String {
        self.json.to_string()
    }

    fn __repr__(&self) -> String {
        match self.inner.epsilon() {
            Some(e) => format!("Verdict(isolated, epsilon={e})"),
            None => format!("Verdict(non-isolated, witness={})", self.json["witness"]),
        }
    }
}

/// Problem encoding the subset-sum instance `(values, target)`.
#[pyfunction]
fn subset_sum_gadget(values: Vec<u64>, target: u64) -> PyResult<Problem> {
    let inst = SubsetSumInstance::new(values, target).map_err(app_err)?;
    let inner = applications::subset_sum_gadget(&inst).map_err(app_err)?;
    Ok(Problem {
        file: ProblemFile::from_problem(&inner),
        inner,
    })
}

/// 1-based indices chosen by a gadget exponent tuple.
#[pyfunction]
fn decode_subset(tuple: Vec<u64>) -> Vec<usize> {
    applications::decode_subset(&tuple)
}

/// Parikh image of a grammar in the text format, as `(base, periods)` pairs.
#[pyfunction]
fn parikh_image(grammar: &str) -> PyResult<(Components, bool)> {
    let g = Grammar::parse(grammar).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let g = LetterBoundedGrammar::with_declared_order(g).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let image = isolde_core::semilinear::parikh_image(&g).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let comps = image
        .components()
        .iter()
        .map(|c| (c.base().to_vec(), c.periods().to_vec()))
        .collect();
    Ok((comps, is_stratified(&image)))
}

/// Least `D` such that the powers `A^{Dm}` converge.
#[pyfunction]
fn dominant_period(matrix: Vec<Vec<String>>) -> PyResult<u64> {
    let a = parse_matrix(matrix)?;
    stochastic::dominant_period(&a).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// `lim_m A^{Dm}` as rational strings.
#[pyfunction]
fn projection(matrix: Vec<Vec<String>>) -> PyResult<Vec<Vec<String>>> {
    let a = parse_matrix(matrix)?;
    let ls = LimitSystem::compute(0, &a).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(ls
        .projection
        .to_rows()
        .iter()
        .map(|r| r.iter().map(format_rat).collect())
        .collect())
}

#[pymodule]
fn isolde(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Problem>()?;
    m.add_class::<Verdict>()?;
    m.add_function(wrap_pyfunction!(subset_sum_gadget, m)?)?;
    m.add_function(wrap_pyfunction!(decode_subset, m)?)?;
    m.add_function(wrap_pyfunction!(parikh_image, m)?)?;
    m.add_function(wrap_pyfunction!(dominant_period, m)?)?;
    m.add_function(wrap_pyfunction!(projection, m)?)?;
    Ok(())
}
