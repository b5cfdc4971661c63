//! wasm-bindgen entry points for the browser demo in `www/`.
//!
//! Every export returns a JSON string so the page needs no generated glue
//! beyond `wasm-bindgen --target web`.

use ksparse::dataio::{generate_synthetic, SyntheticSpec};
use ksparse::{k_sparse, project_l1_ball, sweep_eta, Scores, SolverConfig};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct Projection {
    point: Vec<f64>,
    l1: f64,
}

/// Projects `(x, y)` onto the l1 ball of radius `eta`.
#[wasm_bindgen]
pub fn project_point(x: f64, y: f64, eta: f64) -> Result<String, JsError> {
    let point = project_l1_ball(&[x, y], eta)?;
    let l1 = point.iter().map(|v| v.abs()).sum();
    Ok(serde_json::to_string(&Projection { point, l1 })?)
}

/// Synthetic problem size shared by the clustering exports.
#[wasm_bindgen]
#[derive(Clone, Copy)]
pub struct Problem {
    pub m: usize,
    pub d: usize,
    pub k: usize,
    pub n_informative: usize,
    pub shift: f64,
    pub noise_sd: f64,
    pub seed: u64,
}

#[wasm_bindgen]
impl Problem {
    #[wasm_bindgen(constructor)]
    pub fn new() -> Problem {
        Problem { m: 120, d: 400, k: 3, n_informative: 20, shift: 2.0, noise_sd: 1.0, seed: 0 }
    }
}

impl Default for Problem {
    fn default() -> Self {
        Self::new()
    }
}

impl Problem {
    fn spec(&self) -> SyntheticSpec {
        SyntheticSpec {
            m: self.m,
            d: self.d,
            k: self.k,
            n_informative: self.n_informative,
            shift: self.shift,
            noise_sd: self.noise_sd,
            seed: self.seed,
        }
    }
}

fn demo_config() -> SolverConfig {
    SolverConfig { inner_iters: 150, replicates: 10, ..SolverConfig::default() }
}

#[derive(Serialize)]
struct Clustering {
    labels: Vec<usize>,
    truth: Vec<usize>,
    selected: Vec<usize>,
    informative: Vec<usize>,
    /// First two coordinates of the learned embedding `XW`, one pair per sample.
    embedding: Vec<[f64; 2]>,
    trace: Vec<f64>,
    accuracy: f64,
    ari: f64,
    nmi: f64,
}

/// Generates the synthetic problem and runs one clustering at budget `eta`.
#[wasm_bindgen]
pub fn cluster(problem: &Problem, eta: f64) -> Result<String, JsError> {
    let data = generate_synthetic(&problem.spec())?;
    let x = &data.dataset.matrix;
    let truth = data.dataset.labels_true.as_ref().expect("generator sets labels");
    let r = k_sparse(x, problem.k, eta, &demo_config())?;
    let scores = Scores::compute(truth, &r.labels)?;
    let z = x.as_array().dot(r.weights.values());
    let embedding = z
        .rows()
        .into_iter()
        .map(|row| [row[0], row.get(1).copied().unwrap_or(0.0)])
        .collect();
    let out = Clustering {
        labels: r.labels.labels().to_vec(),
        truth: truth.labels().to_vec(),
        selected: r.selected_features,
        informative: data.informative,
        embedding,
        trace: r.objective_trace,
        accuracy: scores.accuracy,
        ari: scores.ari,
        nmi: scores.nmi,
    };
    Ok(serde_json::to_string(&out)?)
}

#[derive(Serialize)]
struct SweepRow {
    eta: f64,
    selected: usize,
    frobenius: f64,
    accuracy: Option<f64>,
    ari: Option<f64>,
    nmi: Option<f64>,
}

/// Clusters the synthetic problem once per budget in `etas`.
#[wasm_bindgen]
pub fn sweep(problem: &Problem, etas: Vec<f64>) -> Result<String, JsError> {
    let data = generate_synthetic(&problem.spec())?;
    let truth = data.dataset.labels_true.as_ref();
    let records = sweep_eta(&data.dataset.matrix, problem.k, &etas, truth, &demo_config())?;
    let rows: Vec<SweepRow> = records
        .into_iter()
        .map(|r| SweepRow {
            eta: r.eta,
            selected: r.selected_count,
            frobenius: r.frobenius_objective,
            accuracy: r.accuracy,
            ari: r.ari,
            nmi: r.nmi,
        })
        .collect();
    Ok(serde_json::to_string(&rows)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_json() {
        let v: serde_json::Value = serde_json::from_str(&project_point(3.0, -1.0, 2.0).unwrap()).unwrap();
        assert_eq!(v["point"][0], 2.0);
        assert_eq!(v["point"][1], 0.0);
        assert_eq!(v["l1"], 2.0);
    }

    #[test]
    fn small_cluster_run() {
        let s = cluster(&Problem::new(), 2.0).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["labels"].as_array().unwrap().len(), 120);
        assert!(v["accuracy"].as_f64().unwrap() > 0.9);
    }

    #[test]
    fn sweep_rows_follow_input() {
        let s = sweep(&Problem::new(), vec![1.0, 4.0]).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v[0]["eta"], 1.0);
        assert_eq!(v[1]["eta"], 4.0);
    }
}
