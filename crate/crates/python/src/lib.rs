//! Python bindings: `Graph` and `Patron` classes plus the series operations,
//! all reporting the same JSON-shaped dictionaries as the CLI.

use pyo3::conversion::IntoPyObjectExt;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyAny, PyDict, PyList};

use num_rational::BigRational;
use serde_json::Value;

use pcurve::cli::{self, Command, SeriesParams};
use pcurve::filtration::{filtration_report, picard_lefschetz_delta, total_monodromy, Theory};
use pcurve::graph::{self, CoeffRing};
use pcurve::patron::{self, PatronDto};
use pcurve::scalar::{parse_rational, render_rational};

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// serde_json::Value → native Python object.
fn to_py(py: Python<'_>, v: &Value) -> PyResult<Py<PyAny>> {
    match v {
        Value::Null => Ok(py.None()),
        Value::Bool(b) => b.into_py_any(py),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_py_any(py)
            } else if let Some(u) = n.as_u64() {
                u.into_py_any(py)
            } else {
                n.as_f64().unwrap_or(f64::NAN).into_py_any(py)
            }
        }
        Value::String(s) => s.into_py_any(py),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(to_py(py, item)?)?;
            }
            list.into_py_any(py)
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, val) in map {
                dict.set_item(k, to_py(py, val)?)?;
            }
            dict.into_py_any(py)
        }
    }
}

fn parse_ring(s: &str) -> PyResult<CoeffRing> {
    let s = s.trim().to_ascii_uppercase();
    match s.as_str() {
        "Q" => Ok(CoeffRing::RationalField),
        "Z" => Ok(CoeffRing::IntegerRing),
        other => {
            if let Some(n) = other.strip_prefix("Z/") {
                let n: u64 = n.parse().map_err(|_| err(format!("bad modulus in {s:?}")))?;
                CoeffRing::integers_mod(n).map_err(err)
            } else {
                Err(err(format!("unknown ring {s:?} (expected Q, Z or Z/n)")))
            }
        }
    }
}

fn matrix_to_strings(m: &pcurve::linalg::QMat) -> Vec<Vec<String>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| render_rational(m.get(i, j))).collect())
        .collect()
}

/// A finite semi-metrized oriented graph.
#[pyclass(skip_from_py_object)]
#[derive(Clone)]
struct Graph {
    inner: graph::Graph,
}

#[pymethods]
impl Graph {
    /// Parse the graph JSON schema:
    /// {"vertices":[{"id":…}], "edges":[{"id","tail","head","length"}]}.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let dto: graph::GraphDto = serde_json::from_str(text).map_err(err)?;
        Ok(Graph { inner: graph::Graph::from_dto(&dto).map_err(err)? })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner.to_dto()).map_err(err)
    }

    /// Cohomology ranks/torsion/bases over "Q", "Z" or "Z/n".
    fn cohomology(&self, py: Python<'_>, ring: &str) -> PyResult<Py<PyAny>> {
        let ring = parse_ring(ring)?;
        let r = graph::cohomology(&self.inner, ring).map_err(err)?;
        let value = serde_json::json!({
            "ring": ring.to_string(),
            "h0": r.h0_rank,
            "h1": r.h1_rank,
            "h0c": r.h0c_rank,
            "h1c": r.h1c_rank,
            "h1c_dual": r.h1c_dual_rank,
            "h1c_torsion": r.h1c_torsion.iter().map(|d| d.to_string()).collect::<Vec<_>>(),
        });
        to_py(py, &value)
    }

    fn exact_sequence_check(&self) -> bool {
        graph::exact_sequence_check(&self.inner)
    }

    /// Matrix of N_μ in the deterministic bases, entries as rational strings.
    fn monodromy_matrix(&self, ring: &str) -> PyResult<Vec<Vec<String>>> {
        let ring = parse_ring(ring)?;
        let m = graph::monodromy_matrix(&self.inner, ring).map_err(err)?;
        Ok(matrix_to_strings(&m))
    }

    fn subdivide(&self) -> PyResult<Graph> {
        Ok(Graph { inner: graph::subdivide(&self.inner).map_err(err)? })
    }

    fn separate(&self) -> PyResult<Graph> {
        Ok(Graph { inner: graph::separate(&self.inner).map_err(err)? })
    }

    fn interior_subgraph(&self) -> Graph {
        Graph { inner: graph::interior_subgraph(&self.inner) }
    }

    fn vertex_count(&self) -> usize {
        self.inner.vertex_count()
    }

    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    fn __repr__(&self) -> String {
        format!(
            "Graph({} vertices, {} edges)",
            self.inner.vertex_count(),
            self.inner.edge_count()
        )
    }
}

/// A patron: shorts, legs and punctures encoding a p-adic curve with a
/// triangulation.
#[pyclass(skip_from_py_object)]
#[derive(Clone)]
struct Patron {
    inner: patron::Patron,
    p: Option<u64>,
}

#[pymethods]
impl Patron {
    /// Parse the patron JSON schema:
    /// {"p":5, "shorts":[…], "legs":[…], "punctures":[…]}.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let dto: PatronDto = serde_json::from_str(text).map_err(err)?;
        let p = dto.p;
        Ok(Patron { inner: patron::Patron::from_dto(&dto).map_err(err)?, p })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner.to_dto(self.p)).map_err(err)
    }

    /// Invariant violations as strings; empty means the patron is valid.
    fn validate(&self) -> Vec<String> {
        patron::validate(&self.inner).iter().map(|v| v.to_string()).collect()
    }

    fn genus(&self) -> PyResult<u64> {
        patron::genus(&self.inner).map_err(err)
    }

    /// The adic skeleton Γ^ad (punctures as 0⁺ dangling edges).
    fn adic_graph(&self) -> PyResult<Graph> {
        Ok(Graph { inner: self.inner.adic_graph().map_err(err)? })
    }

    /// Filtration report for "etale:<ell>", "hk", "dr" or "dagger".
    fn filtration_report(&self, py: Python<'_>, theory: &str) -> PyResult<Py<PyAny>> {
        let theory = self.parse_theory(theory)?;
        let report = filtration_report(&self.inner, theory).map_err(err)?;
        to_py(py, &cli::filtration_json(&report))
    }

    /// The monodromy operator on the direct sum of the graded pieces.
    fn total_monodromy(&self, theory: &str) -> PyResult<Vec<Vec<String>>> {
        let theory = self.parse_theory(theory)?;
        let m = total_monodromy(&self.inner, theory).map_err(err)?;
        Ok(matrix_to_strings(&m))
    }

    /// Stable model of the special fiber, as the marked-curve JSON dict.
    fn stabilize(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        let fiber = patron::special_fiber(&self.inner).map_err(err)?;
        let stable = patron::stabilize(&fiber).map_err(err)?;
        let value = serde_json::to_value(stable.to_dto()).map_err(err)?;
        to_py(py, &value)
    }

    /// Split a leg at 0 < mu1 < μ(leg) through a fresh genus-0 short.
    fn refine_leg(&self, leg: &str, mu1: &str) -> PyResult<Patron> {
        let mu1: BigRational = parse_rational(mu1).map_err(err)?;
        let refined = patron::refine_leg(&self.inner, leg, &mu1).map_err(err)?;
        Ok(Patron { inner: refined, p: self.p })
    }

    /// t·N_μ(φ) in the Coker ∂ basis; φ is edge-indexed over Γ^ad in id
    /// order, entries as rational strings.
    fn picard_lefschetz_delta(&self, t: &str, phi: Vec<String>) -> PyResult<Vec<String>> {
        let t: BigRational = parse_rational(t).map_err(err)?;
        let phi = phi
            .iter()
            .map(|s| parse_rational(s))
            .collect::<Result<Vec<_>, _>>()
            .map_err(err)?;
        let delta = picard_lefschetz_delta(&self.inner, &t, &phi).map_err(err)?;
        Ok(delta.iter().map(render_rational).collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "Patron({} shorts, {} legs, {} punctures)",
            self.inner.shorts().len(),
            self.inner.legs().len(),
            self.inner.punctures().len()
        )
    }
}

impl Patron {
    fn parse_theory(&self, s: &str) -> PyResult<Theory> {
        let theory = Theory::parse(s).map_err(err)?;
        if let (Theory::EtaleL(ell), Some(p)) = (theory, self.p) {
            if ell == p {
                return Err(err(format!("etale theory needs ell != p, got ell = p = {ell}")));
            }
        }
        Ok(theory)
    }
}

fn series_params(
    p: u64,
    ram: u32,
    prec: &str,
    coeffs: &str,
    nmin: Option<i64>,
    nmax: Option<i64>,
) -> SeriesParams {
    SeriesParams {
        p,
        ram,
        prec: prec.to_string(),
        coeffs: coeffs.to_string(),
        n_min: nmin,
        n_max: nmax,
    }
}

fn run_series(py: Python<'_>, cmd: Command) -> PyResult<Py<PyAny>> {
    let value = cli::run(&cmd).map_err(err)?;
    to_py(py, &value)
}

/// Canonical unit factorization u = c·T^k·u₊·u₋ of a truncated Laurent
/// series; coefficients given as "n:value,…" with scalar values like
/// "3/2+1/4*pi".
#[pyfunction]
#[pyo3(signature = (p, coeffs, ram=1, prec="12", nmin=None, nmax=None))]
fn series_factor(
    py: Python<'_>,
    p: u64,
    coeffs: &str,
    ram: u32,
    prec: &str,
    nmin: Option<i64>,
    nmax: Option<i64>,
) -> PyResult<Py<PyAny>> {
    run_series(py, Command::SeriesFactor { params: series_params(p, ram, prec, coeffs, nmin, nmax) })
}

/// Residue of ω = (coefficient series)·dT/T.
#[pyfunction]
#[pyo3(signature = (p, coeffs, ram=1, prec="12", nmin=None, nmax=None))]
fn series_residue(
    py: Python<'_>,
    p: u64,
    coeffs: &str,
    ram: u32,
    prec: &str,
    nmin: Option<i64>,
    nmax: Option<i64>,
) -> PyResult<Py<PyAny>> {
    run_series(py, Command::SeriesResidue { params: series_params(p, ram, prec, coeffs, nmin, nmax) })
}

/// Coefficient series of du/u against dT/T.
#[pyfunction]
#[pyo3(signature = (p, coeffs, ram=1, prec="12", nmin=None, nmax=None))]
fn series_dlog(
    py: Python<'_>,
    p: u64,
    coeffs: &str,
    ram: u32,
    prec: &str,
    nmin: Option<i64>,
    nmax: Option<i64>,
) -> PyResult<Py<PyAny>> {
    run_series(py, Command::SeriesDlog { params: series_params(p, ram, prec, coeffs, nmin, nmax) })
}

/// Restriction of a leg form to a boundary circle of T₁T₂ = p^μ.
#[pyfunction]
#[pyo3(signature = (p, coeffs, mu, side, ram=1, prec="12", nmin=None, nmax=None))]
#[allow(clippy::too_many_arguments)]
fn series_leg(
    py: Python<'_>,
    p: u64,
    coeffs: &str,
    mu: &str,
    side: u8,
    ram: u32,
    prec: &str,
    nmin: Option<i64>,
    nmax: Option<i64>,
) -> PyResult<Py<PyAny>> {
    run_series(
        py,
        Command::SeriesLeg {
            params: series_params(p, ram, prec, coeffs, nmin, nmax),
            mu: mu.to_string(),
            side,
        },
    )
}

#[pymodule]
fn pcurve_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Graph>()?;
    m.add_class::<Patron>()?;
    m.add_function(wrap_pyfunction!(series_factor, m)?)?;
    m.add_function(wrap_pyfunction!(series_residue, m)?)?;
    m.add_function(wrap_pyfunction!(series_dlog, m)?)?;
    m.add_function(wrap_pyfunction!(series_leg, m)?)?;
    Ok(())
}
