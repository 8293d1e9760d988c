//! Python bindings: synthetic data, pipeline runs, metrics and graph queries.

use std::path::PathBuf;
use std::str::FromStr;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use kgforge_core::candidates::RelationType;
use kgforge_core::corpus::{annotate as annotate_doc, Document, GazetteerSet};
use kgforge_core::evaluation::{roc_auc as auc, ScoredExample};
use kgforge_core::kgraph::{query as query_graph, Query};
use kgforge_core::pipeline::stages::{read_graph, read_reports};
use kgforge_core::pipeline::{run_pipeline, synth_project, PipelineConfig, Stage, StageOutcome};
use kgforge_core::synth::SynthSpec;
use kgforge_core::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::NoTemplates | Error::InvalidFractions { .. } => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn load(config: &str, overrides: Vec<String>) -> PyResult<PipelineConfig> {
    PipelineConfig::load(&PathBuf::from(config), &overrides).map_err(py_err)
}

/// Write a synthetic project into `out_dir`; returns the configuration path.
#[pyfunction]
#[pyo3(signature = (out_dir, n_documents = 1000, seed = 0, db_coverage = 0.3))]
fn synth(py: Python<'_>, out_dir: &str, n_documents: usize, seed: u64, db_coverage: f64) -> PyResult<String> {
    let spec = SynthSpec {
        n_documents,
        db_coverage,
        ..SynthSpec::default()
    };
    let dir = PathBuf::from(out_dir);
    let path = py.detach(|| synth_project(&dir, &spec, seed)).map_err(py_err)?;
    Ok(path.to_string_lossy().into_owned())
}

/// Run the pipeline through `until`; returns `{stage: "ran" | "skipped"}`.
#[pyfunction]
#[pyo3(signature = (config, overrides = Vec::new(), until = "export"))]
fn run<'py>(py: Python<'py>, config: &str, overrides: Vec<String>, until: &str) -> PyResult<Bound<'py, PyDict>> {
    let cfg = load(config, overrides)?;
    let until = Stage::from_str(until).map_err(py_err)?;
    let summary = py.detach(|| run_pipeline(&cfg, until)).map_err(py_err)?;
    let out = PyDict::new(py);
    for (stage, outcome) in summary.outcomes {
        let word = match outcome {
            StageOutcome::Ran => "ran",
            StageOutcome::Skipped => "skipped",
        };
        out.set_item(stage.name(), word)?;
    }
    Ok(out)
}

/// Per-relation test metrics of the last evaluate stage.
#[pyfunction]
#[pyo3(signature = (config, overrides = Vec::new()))]
fn metrics<'py>(py: Python<'py>, config: &str, overrides: Vec<String>) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let cfg = load(config, overrides)?;
    read_reports(&cfg)
        .map_err(py_err)?
        .into_iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("relation", r.relation.name())?;
            d.set_item("candidates", r.candidates)?;
            d.set_item("threshold", r.threshold)?;
            d.set_item("f1", r.f1)?;
            d.set_item("roc_auc", r.roc_auc)?;
            d.set_item("precision", r.precision)?;
            d.set_item("recall", r.recall)?;
            Ok(d)
        })
        .collect()
}

/// Triples of the exported graph, optionally filtered.
#[pyfunction]
#[pyo3(signature = (config, relation = None, min_prob = None, overrides = Vec::new()))]
fn query<'py>(
    py: Python<'py>,
    config: &str,
    relation: Option<&str>,
    min_prob: Option<f64>,
    overrides: Vec<String>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let cfg = load(config, overrides)?;
    let relation = relation.map(RelationType::from_str).transpose().map_err(py_err)?;
    let filter = Query {
        relation,
        min_prob,
        ..Query::default()
    };
    let graph = read_graph(&cfg).map_err(py_err)?;
    query_graph(&graph, &filter)
        .into_iter()
        .map(|t| {
            let d = PyDict::new(py);
            d.set_item("subject", &t.subject.entity)?;
            d.set_item("subject_class", t.subject.class.to_string())?;
            d.set_item("predicate", t.predicate.name())?;
            d.set_item("object", &t.object.entity)?;
            d.set_item("object_class", t.object.class.to_string())?;
            d.set_item("probability", t.probability)?;
            d.set_item("documents", t.provenance.iter().map(|p| p.doc_id.clone()).collect::<Vec<_>>())?;
            Ok(d)
        })
        .collect()
}

/// Area under the ROC curve, or None when only one class is present.
#[pyfunction]
fn roc_auc(scores: Vec<f64>, labels: Vec<bool>) -> PyResult<Option<f64>> {
    if scores.len() != labels.len() {
        return Err(PyValueError::new_err("scores and labels differ in length"));
    }
    let examples: Vec<ScoredExample> = scores
        .iter()
        .zip(&labels)
        .enumerate()
        .map(|(i, (&p, &y))| ScoredExample::new(i.to_string(), p, y))
        .collect();
    Ok(auc(&examples))
}

/// Tokens of `text` as `(surface, lemma, pos, ner)` tuples, one list per sentence.
#[pyfunction]
fn annotate(text: &str) -> Vec<Vec<(String, String, String, String)>> {
    let doc = annotate_doc(&Document::raw("py", "python", text), &GazetteerSet::maritime());
    doc.sentences
        .into_iter()
        .map(|s| s.into_iter().map(|t| (t.surface, t.lemma, t.pos, t.ner)).collect())
        .collect()
}

#[pymodule]
fn kgforge(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(synth, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(metrics, m)?)?;
    m.add_function(wrap_pyfunction!(query, m)?)?;
    m.add_function(wrap_pyfunction!(roc_auc, m)?)?;
    m.add_function(wrap_pyfunction!(annotate, m)?)?;
    Ok(())
}
