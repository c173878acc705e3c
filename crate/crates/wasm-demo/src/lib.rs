//! Browser bindings for the static page in `www/`.
//!
//! Each export returns a JSON string. The plain functions behind them
//! return `Result<String, String>` so they can be tested natively.

use sandpile_core::distributions::{pmf_table, PmfKind, DEFAULT_TOLERANCE};
use sandpile_core::graph::laplacian;
use sandpile_core::montecarlo::{run_experiment, ExperimentConfig, Model, Statistic};
use sandpile_core::snf::sandpile_invariants;
use sandpile_core::{BipartiteDigraph, Digraph, ModelParams};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Largest trial count the page accepts; keeps the tab responsive.
pub const MAX_TRIALS: u64 = 20_000;
pub const MAX_N: usize = 256;

fn err(e: impl ToString) -> String {
    e.to_string()
}

pub fn pmf(p: u32, kind: &str, u: u32, kmax: u32) -> Result<String, String> {
    let kind = match kind {
        "theorem" => PmfKind::Theorem,
        "iid" => PmfKind::Iid { u },
        other => return Err(format!("unknown kind {other:?}")),
    };
    let table = pmf_table(p, kind, kmax, DEFAULT_TOLERANCE).map_err(err)?;
    serde_json::to_string(&table).map_err(err)
}

#[allow(clippy::too_many_arguments)]
pub fn simulate(model: &str, n: usize, alpha: f64, q: f64, p: u32, u: usize, trials: u64, seed: u64) -> Result<String, String> {
    if n > MAX_N {
        return Err(format!("n is capped at {MAX_N} in the demo"));
    }
    if trials == 0 || trials > MAX_TRIALS {
        return Err(format!("trials must lie in 1..={MAX_TRIALS}"));
    }
    let model = match model {
        "bipartite" => Model::Bipartite,
        "er" => Model::Er,
        "iid" => Model::IidRect { u },
        other => return Err(format!("unknown model {other:?}")),
    };
    let params = ModelParams { n, alpha, q, p, seed };
    let cfg = ExperimentConfig::new(model, params, trials, Statistic::Corank);
    let report = run_experiment(&cfg, 1).map_err(err)?;
    serde_json::to_string(&report).map_err(err)
}

/// Sandpile group of a digraph given as `{"n", "adj"}` or a bipartite
/// digraph given as `{"n", "m", "edges_12", "edges_21"}`.
pub fn sandpile(graph_json: &str) -> Result<String, String> {
    let value: Value = serde_json::from_str(graph_json).map_err(err)?;
    let lap = if value.get("edges_12").is_some() {
        laplacian(&serde_json::from_value::<BipartiteDigraph>(value).map_err(err)?)
    } else {
        laplacian(&serde_json::from_value::<Digraph>(value).map_err(err)?)
    };
    let g = sandpile_invariants(&lap).map_err(err)?;
    let strings = |v: Vec<_>| v.iter().map(ToString::to_string).collect::<Vec<String>>();
    let out = json!({
        "vertices": lap.rows(),
        "torsion": strings(g.torsion()),
        "free_rank": g.factors.free_rank,
        "flagged": g.flagged,
        "order": g.order().map(|o| o.to_string()),
    });
    Ok(out.to_string())
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = pmfTable)]
pub fn pmf_table_js(p: u32, kind: &str, u: u32, kmax: u32) -> Result<String, JsError> {
    js(pmf(p, kind, u, kmax))
}

#[allow(clippy::too_many_arguments)]
#[wasm_bindgen(js_name = simulateCorank)]
pub fn simulate_js(model: &str, n: usize, alpha: f64, q: f64, p: u32, u: usize, trials: u32, seed: u32) -> Result<String, JsError> {
    js(simulate(model, n, alpha, q, p, u, trials as u64, seed as u64))
}

#[wasm_bindgen(js_name = sandpileGroup)]
pub fn sandpile_js(graph_json: &str) -> Result<String, JsError> {
    js(sandpile(graph_json))
}
