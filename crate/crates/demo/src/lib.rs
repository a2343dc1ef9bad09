//! Browser bindings: each entry point takes a generator spec as JSON and
//! returns a JSON string for the page to render.

use kcluster::cluster_test::{k_cluster_test, practical_params, Constants};
use kcluster::generators::{ClusterInstance, GenSpec};
use kcluster::spectral::{eigengap_report, eigensolve};
use kcluster::walk::{apply_walk, l2_distance_sq};
use serde::Serialize;
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Vertex cap for the dense eigensolve.
pub const SPECTRUM_CAP: usize = 600;
/// Vertex cap for the exact walk profile and the tester.
pub const GRAPH_CAP: usize = 20_000;
pub const MAX_STEPS: usize = 2_000;

fn instance(spec_json: &str, seed: u64) -> Result<ClusterInstance, String> {
    let spec: GenSpec = serde_json::from_str(spec_json).map_err(|e| format!("generator spec: {e}"))?;
    let inst = spec.generate(seed).map_err(|e| e.to_string())?;
    if inst.graph.n() > GRAPH_CAP {
        return Err(format!("n = {} exceeds the demo cap of {GRAPH_CAP}", inst.graph.n()));
    }
    Ok(inst)
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct ProfilePoint {
    t: usize,
    norm_sq: f64,
    own_part_mass: f64,
    /// Squared l2 distance to the walk from a vertex of another part.
    distance_sq: Option<f64>,
}

/// Exact lazy-walk statistics from vertex 0 for `t = 0..=steps`.
pub fn walk_profile_json(spec_json: &str, seed: u64, steps: usize) -> Result<String, String> {
    if steps > MAX_STEPS {
        return Err(format!("at most {MAX_STEPS} steps"));
    }
    let inst = instance(spec_json, seed)?;
    let g = &inst.graph;
    let n = g.n();
    let labels = inst.labels();
    let other = (0..n).find(|&v| labels[v] != labels[0]);
    let point = |v: usize| {
        let mut p = vec![0.0; n];
        p[v] = 1.0;
        p
    };
    let mut p = point(0);
    let mut q = other.map(point);
    let mut buf = vec![0.0; n];
    let mut points = Vec::with_capacity(steps + 1);
    for t in 0..=steps {
        points.push(ProfilePoint {
            t,
            norm_sq: p.iter().map(|x| x * x).sum(),
            own_part_mass: (0..n).filter(|&v| labels[v] == labels[0]).map(|v| p[v]).sum(),
            distance_sq: q.as_ref().map(|q| l2_distance_sq(&p, q)),
        });
        if t == steps {
            break;
        }
        apply_walk(g, &p, &mut buf);
        std::mem::swap(&mut p, &mut buf);
        if let Some(q) = q.as_mut() {
            apply_walk(g, q, &mut buf);
            std::mem::swap(q, &mut buf);
        }
    }
    to_json(&json!({
        "n": n,
        "d": g.d(),
        "parts": inst.parts.len(),
        "other_vertex": other,
        "points": points,
    }))
}

/// One sampled run of the tester with the bundled practical constants.
pub fn run_tester_json(spec_json: &str, seed: u64, k: usize, epsilon: f64, phi: f64) -> Result<String, String> {
    let inst = instance(spec_json, seed)?;
    let g = &inst.graph;
    let params = practical_params(g.n(), g.d(), k, epsilon, phi, &Constants::calibrated()).map_err(|e| e.to_string())?;
    let report = k_cluster_test(g, &params, seed).map_err(|e| e.to_string())?;
    let labels = inst.labels();
    let sample_parts: Vec<usize> = report.similarity.sample_vertices.iter().map(|&v| labels[v]).collect();
    to_json(&json!({
        "n": g.n(),
        "true_parts": inst.parts.len(),
        "verdict": report.verdict,
        "reject_reason": report.reject_reason,
        "component_count": report.component_count,
        "queries": report.queries,
        "query_budget": params.query_budget(),
        "params": { "s": params.s, "ell": params.ell, "r": params.r, "sigma": params.sigma, "batches": params.batches() },
        "sample_vertices": report.similarity.sample_vertices,
        "sample_parts": sample_parts,
        "edges": report.similarity.edges,
    }))
}

/// Laplacian eigenvalues and the eigengap against the planted partition.
pub fn spectrum_json(spec_json: &str, seed: u64) -> Result<String, String> {
    let inst = instance(spec_json, seed)?;
    if inst.graph.n() > SPECTRUM_CAP {
        return Err(format!("n = {} exceeds the spectrum cap of {SPECTRUM_CAP}", inst.graph.n()));
    }
    let rep = eigensolve(&inst.graph).map_err(|e| e.to_string())?;
    to_json(&json!({
        "n": inst.graph.n(),
        "eigenvalues": rep.eigenvalues,
        "zero_multiplicity": rep.zero_multiplicity(),
        "eigengap": eigengap_report(&inst, &rep),
    }))
}

#[wasm_bindgen(js_name = walkProfile)]
pub fn walk_profile(spec_json: &str, seed: u64, steps: usize) -> Result<String, JsValue> {
    walk_profile_json(spec_json, seed, steps).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = runTester)]
pub fn run_tester(spec_json: &str, seed: u64, k: usize, epsilon: f64, phi: f64) -> Result<String, JsValue> {
    run_tester_json(spec_json, seed, k, epsilon, phi).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn spectrum(spec_json: &str, seed: u64) -> Result<String, JsValue> {
    spectrum_json(spec_json, seed).map_err(|e| JsValue::from_str(&e))
}
