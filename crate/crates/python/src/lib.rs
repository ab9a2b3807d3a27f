//! Python bindings. Rationals cross the boundary as `"num/den"` strings, which
//! `fractions.Fraction` parses directly.

use std::collections::BTreeMap;

use cf_invariance::cli::{parse_graph, parse_model, parse_observation, run_command};
use cf_invariance::graph::{self, ForbiddenReading};
use cf_invariance::invariance;
use cf_invariance::polytope;
use cf_invariance::rational::format_rational;
use cf_invariance::Error;
use pyo3::exceptions::{PyNotImplementedError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    let msg = format!("{}: {e}", e.kind());
    match e.exit_code() {
        2 => PyNotImplementedError::new_err(msg),
        3 => PyRuntimeError::new_err(msg),
        _ => PyValueError::new_err(msg),
    }
}

/// Almost-sure degree and distributional gaps of `target` under interventions on
/// `intervene`, for the empty conditioning set and each set in `given`.
#[pyfunction]
#[pyo3(signature = (model, target, intervene, given = Vec::new()))]
fn analyze(model: &str, target: &str, intervene: &str, given: Vec<Vec<String>>) -> PyResult<BTreeMap<String, String>> {
    let m = parse_model(model).map_err(to_py)?;
    let mut out = BTreeMap::new();
    let degree = invariance::as_ci_degree(&m, target, intervene).map_err(to_py)?;
    out.insert("as_ci_degree".to_string(), format_rational(&degree));
    for set in std::iter::once(Vec::new()).chain(given) {
        let gap = invariance::dci_gap(&m, target, intervene, &set).map_err(to_py)?;
        out.insert(format!("dci_gap{{{}}}", set.join(",")), format_rational(&gap.gap));
    }
    Ok(out)
}

/// Exact range of `P(target(z) = target(z'))` over every model compatible with the
/// observation, as `(min, max)`.
#[pyfunction]
fn degree_bounds(graph: &str, observation: &str, target: &str, intervene: &str) -> PyResult<(String, String)> {
    let dag = parse_graph(graph).map_err(to_py)?;
    let observed = parse_observation(observation).map_err(to_py)?;
    let d = polytope::ci_degree_bounds(&dag, &observed, target, intervene).map_err(to_py)?;
    Ok((format_rational(&d.bounds.min), format_rational(&d.bounds.max)))
}

#[pyfunction]
#[pyo3(signature = (graph, exposure, outcome, max_size = 2))]
fn adjustment_sets(graph: &str, exposure: &str, outcome: &str, max_size: usize) -> PyResult<Vec<Vec<String>>> {
    let dag = parse_graph(graph).map_err(to_py)?;
    let sets = graph::enumerate_adjustment_sets(&dag, exposure, outcome, max_size, ForbiddenReading::ExcludeExposure)
        .map_err(to_py)?;
    Ok(sets.into_iter().map(|s| s.members).collect())
}

#[pyfunction]
fn d_separated(graph: &str, left: Vec<String>, right: Vec<String>, given: Vec<String>) -> PyResult<bool> {
    let dag = parse_graph(graph).map_err(to_py)?;
    graph::d_separated_by_name(&dag, &left, &right, &given).map_err(to_py)
}

/// Runs one command-line invocation (without the program name) and returns
/// `(exit_code, stdout, stderr)`.
#[pyfunction]
fn run(args: Vec<String>) -> (i32, String, String) {
    let out = run_command(std::iter::once("cfinv".to_string()).chain(args));
    (out.code, out.stdout, out.stderr)
}

#[pymodule]
fn cfinv(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(degree_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(adjustment_sets, m)?)?;
    m.add_function(wrap_pyfunction!(d_separated, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
