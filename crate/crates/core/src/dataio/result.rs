use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::metrics::Scores;
use crate::types::{ClusteringResult, LabelAssignment, WeightMatrix};

use super::{exact, write_atomic, Dataset};

const FORMAT: &str = "ksparse-result";
const VERSION: u32 = 1;

/// Parsed result document.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ResultDocument {
    pub format: String,
    pub version: u32,
    pub eta: f64,
    pub k: usize,
    pub dbar: usize,
    pub n_samples: usize,
    pub n_features: usize,
    pub sample_ids: Vec<String>,
    pub labels: Vec<usize>,
    pub selected_features: Vec<usize>,
    pub selected_feature_names: Vec<String>,
    pub objective_trace: Vec<f64>,
    /// Non-zero rows of `W` and their values.
    pub weight_rows: Vec<usize>,
    pub weight_values: Vec<Vec<f64>>,
    pub metrics: Option<MetricsSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct MetricsSection {
    pub accuracy: f64,
    pub ari: f64,
    pub nmi: f64,
}

impl ResultDocument {
    /// Rebuilds the clustering result the document was written from.
    pub fn to_clustering_result(&self) -> Result<ClusteringResult> {
        let mut w = Array2::zeros((self.n_features, self.dbar));
        for (&j, row) in self.weight_rows.iter().zip(&self.weight_values) {
            if j >= self.n_features || row.len() != self.dbar {
                return Err(Error::invalid("weight_rows", format!("row {j} does not fit the weight shape")));
            }
            for (c, &v) in row.iter().enumerate() {
                w[[j, c]] = v;
            }
        }
        Ok(ClusteringResult {
            labels: LabelAssignment::new(self.labels.clone(), self.k)?,
            weights: WeightMatrix::new(w, self.eta)?,
            selected_features: self.selected_features.clone(),
            objective_trace: self.objective_trace.clone(),
            metrics: self.metrics.map(|m| Scores {
                accuracy: m.accuracy,
                ari: m.ari,
                nmi: m.nmi,
            }),
        })
    }
}

fn toml_str(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

fn list<T>(out: &mut String, key: &str, items: &[T], fmt: impl Fn(&T) -> String) {
    if items.is_empty() {
        let _ = writeln!(out, "{key} = []");
        return;
    }
    let _ = writeln!(out, "{key} = [");
    for item in items {
        let _ = writeln!(out, "  {},", fmt(item));
    }
    out.push_str("]\n");
}

/// The result as a TOML document.
pub fn render_result(result: &ClusteringResult, dataset: &Dataset) -> Result<String> {
    let (m, d) = (dataset.matrix.rows(), dataset.matrix.cols());
    if result.labels.len() != m || result.weights.features() != d {
        return Err(Error::DimensionMismatch {
            axis: "result vs dataset shape",
            expected: m * d,
            got: result.labels.len() * result.weights.features(),
        });
    }
    let w = result.weights.values();
    let rows: Vec<usize> = (0..d).filter(|&j| w.row(j).iter().any(|&v| v != 0.0)).collect();

    let mut out = String::new();
    let _ = writeln!(out, "format = {}", toml_str(FORMAT));
    let _ = writeln!(out, "version = {VERSION}");
    let _ = writeln!(out, "eta = {}", exact(result.weights.eta()));
    let _ = writeln!(out, "k = {}", result.labels.k());
    let _ = writeln!(out, "dbar = {}", result.weights.dbar());
    let _ = writeln!(out, "n_samples = {m}");
    let _ = writeln!(out, "n_features = {d}");
    list(&mut out, "sample_ids", &dataset.sample_ids, |s| toml_str(s));
    list(&mut out, "labels", result.labels.labels(), |l| l.to_string());
    list(&mut out, "selected_features", &result.selected_features, |j| j.to_string());
    list(&mut out, "selected_feature_names", &result.selected_features, |&j| {
        toml_str(&dataset.feature_names[j])
    });
    list(&mut out, "objective_trace", &result.objective_trace, |&v| exact(v));
    list(&mut out, "weight_rows", &rows, |j| j.to_string());
    list(&mut out, "weight_values", &rows, |&j| {
        let vals: Vec<String> = w.row(j).iter().map(|&v| exact(v)).collect();
        format!("[{}]", vals.join(", "))
    });
    if let Some(s) = &result.metrics {
        out.push_str("\n[metrics]\n");
        let _ = writeln!(out, "accuracy = {}", exact(s.accuracy));
        let _ = writeln!(out, "ari = {}", exact(s.ari));
        let _ = writeln!(out, "nmi = {}", exact(s.nmi));
    }
    Ok(out)
}

pub fn write_result(result: &ClusteringResult, dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let text = render_result(result, dataset)?;
    write_atomic(path.as_ref(), text.as_bytes())
}

pub fn read_result(path: impl AsRef<Path>) -> Result<ResultDocument> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let doc: ResultDocument = toml::from_str(&text).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    if doc.format != FORMAT || doc.version != VERSION {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: format!("unsupported document {} v{}", doc.format, doc.version),
        });
    }
    Ok(doc)
}
