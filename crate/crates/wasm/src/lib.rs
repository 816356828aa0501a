//! WebAssembly bindings behind the static demo page in `www/`.
//!
//! Every exported function takes plain strings and numbers and returns a JSON
//! string, so the page needs no generated TypeScript types.

use epiclust::curves::{default_basis_size, DEFAULT_LAMBDA};
use epiclust::indexes::IndexTable;
use epiclust::metrics::{select_k, EvalReport, DEFAULT_CANDIDATES};
use epiclust::simgen::{gen_scenario, ScenarioSpec};
use epiclust::{admissible, enumerate_combos, make_basis, ComboSpec, ConfigName, FunctionalSample, Method, Smoother};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct Simulated {
    pub scenario: String,
    pub grid: Vec<f64>,
    pub curves: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

#[derive(Debug, Serialize)]
pub struct Clustered {
    pub config: String,
    pub columns: Vec<String>,
    /// Feature values, one row per curve.
    pub features: Vec<Vec<f64>>,
    pub assign: Vec<usize>,
    pub k: usize,
    pub purity: f64,
    pub fmeasure: f64,
    pub pairwise_f: f64,
    pub rand: f64,
}

#[derive(Debug, Serialize)]
pub struct KChoice {
    pub config: String,
    pub candidates: Vec<usize>,
    pub silhouettes: Vec<Option<f64>>,
    pub chosen: usize,
}

fn sample(scenario: &str, seed: u64) -> Result<FunctionalSample, String> {
    let spec = ScenarioSpec::by_name(scenario).map_err(|e| e.to_string())?;
    gen_scenario(&spec, seed).map_err(|e| e.to_string())
}

/// Smooths the sample and returns the admissible features of `combo`.
fn features(s: &FunctionalSample, combo: &str) -> Result<epiclust::FeatureMatrix, String> {
    let combo: ComboSpec = combo.parse().map_err(|e: epiclust::Error| e.to_string())?;
    let grid = s.grid();
    let basis = make_basis(grid, default_basis_size(grid.len())).map_err(|e| e.to_string())?;
    let smoother = Smoother::penalized(grid, &basis, DEFAULT_LAMBDA).map_err(|e| e.to_string())?;
    let triple = smoother.smooth(s).map_err(|e| e.to_string())?;
    let f = IndexTable::new(&triple).features(&combo);
    let adm = admissible(&f);
    if !adm.is_admissible() {
        return Err(format!("{combo} is {} on this sample", adm.reason()));
    }
    Ok(f)
}

fn parse_method(method: &str) -> Result<Method, String> {
    method.parse().map_err(|e: epiclust::Error| e.to_string())
}

pub fn scenario_names() -> Vec<String> {
    ScenarioSpec::catalog().into_iter().map(|s| s.name).collect()
}

pub fn combo_names() -> Vec<String> {
    enumerate_combos().iter().map(ToString::to_string).collect()
}

pub fn simulate_sample(scenario: &str, seed: u64) -> Result<Simulated, String> {
    let s = sample(scenario, seed)?;
    Ok(Simulated {
        scenario: scenario.to_string(),
        grid: s.grid().points().to_vec(),
        curves: (0..s.n_curves()).map(|i| s.curve(i)).collect(),
        labels: s.labels().map(<[usize]>::to_vec).unwrap_or_default(),
    })
}

/// Clusters a simulated sample with `k` groups; `k = 0` uses the true count.
pub fn cluster_sample(scenario: &str, seed: u64, combo: &str, method: &str, k: usize) -> Result<Clustered, String> {
    let s = sample(scenario, seed)?;
    let f = features(&s, combo)?;
    let method = parse_method(method)?;
    let truth = s.labels().ok_or("sample has no labels")?;
    let k = if k == 0 { truth.iter().max().map_or(1, |m| m + 1) } else { k };
    let part = method.cluster(&f.values, k, seed).map_err(|e| e.to_string())?;
    let eval = EvalReport::evaluate(&part, truth, 0.0).map_err(|e| e.to_string())?;
    Ok(Clustered {
        config: ConfigName::new(&method, f.combo.clone()).to_string(),
        columns: f.columns.iter().map(|(kind, src)| format!("{kind}{}", src.tag())).collect(),
        features: f.values.row_iter().map(|r| r.iter().copied().collect()).collect(),
        assign: part.assign().to_vec(),
        k,
        purity: eval.purity,
        fmeasure: eval.fmeasure,
        pairwise_f: eval.pairwise_f,
        rand: eval.rand,
    })
}

/// Mean silhouette for k = 2..6 and the resulting choice.
pub fn choose_k(scenario: &str, seed: u64, combo: &str, method: &str) -> Result<KChoice, String> {
    let s = sample(scenario, seed)?;
    let f = features(&s, combo)?;
    let method = parse_method(method)?;
    let sel = select_k(&f.values, &method, &DEFAULT_CANDIDATES, seed).map_err(|e| e.to_string())?;
    Ok(KChoice {
        config: ConfigName::new(&method, f.combo.clone()).to_string(),
        candidates: sel.candidates,
        silhouettes: sel.mean_silhouettes,
        chosen: sel.chosen,
    })
}

fn to_json<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
        .map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn scenarios() -> String {
    serde_json::to_string(&scenario_names()).unwrap_or_default()
}

#[wasm_bindgen]
pub fn combos() -> String {
    serde_json::to_string(&combo_names()).unwrap_or_default()
}

#[wasm_bindgen]
pub fn simulate(scenario: &str, seed: u32) -> Result<String, JsValue> {
    to_json(simulate_sample(scenario, seed as u64))
}

#[wasm_bindgen]
pub fn cluster(scenario: &str, seed: u32, combo: &str, method: &str, k: u32) -> Result<String, JsValue> {
    to_json(cluster_sample(scenario, seed as u64, combo, method, k as usize))
}

#[wasm_bindgen(js_name = selectK)]
pub fn select_k_js(scenario: &str, seed: u32, combo: &str, method: &str) -> Result<String, JsValue> {
    to_json(choose_k(scenario, seed as u64, combo, method))
}
