//! Browser bindings for three hypoflow computations. Every entry point returns a JSON string
//! and reports failures as a thrown JS error.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use hypoflow::flow::{diagonal_solve, f_lambda_mu, hypo_invariant_closed, FlowOptions};
use hypoflow::geometry::{holonomy_estimate, CohomOneMetric, HolonomyOptions};

/// Infinite domain ends are plotted up to this distance from 0.
const PLOT_CAP: f64 = 5.0;

fn plot_range(domain: (f64, f64)) -> (f64, f64) {
    let (lo, hi) = (domain.0.max(-PLOT_CAP), domain.1.min(PLOT_CAP));
    // Keep clear of poles and zeros at the domain ends.
    let pad = 0.02 * (hi - lo);
    (lo + pad, hi - pad)
}

fn grid(range: (f64, f64), n: usize) -> impl Iterator<Item = f64> {
    let n = n.max(2);
    (0..n).map(move |k| range.0 + (range.1 - range.0) * k as f64 / (n - 1) as f64)
}

/// JSON for finite floats, `null` for the infinite ends of a domain.
fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

/// `f_{lambda,mu}` on its positive interval around 0.
pub fn f_curve(lambda: f64, mu: f64, n: usize) -> Result<Value, String> {
    if !lambda.is_finite() || !mu.is_finite() {
        return Err("lambda and mu must be finite".into());
    }
    let f = f_lambda_mu(lambda, mu);
    let points: Vec<[f64; 2]> = grid(plot_range(f.domain), n)
        .map(|y| [y, f.value(y)])
        .collect();
    Ok(json!({
        "branch": format!("{:?}", f.branch),
        "domain": [num(f.domain.0), num(f.domain.1)],
        "points": points,
    }))
}

/// Metric coefficients of the invariant-torsion hypo family along its parameter.
pub fn invariant_metric(lambda1: f64, lambda2: f64, n: usize) -> Result<Value, String> {
    let (m, _) = hypo_invariant_closed(lambda1, lambda2).map_err(|e| e.to_string())?;
    let rows: Vec<Value> = grid(plot_range(m.domain), n)
        .map(|s| {
            let g = m.metric(s);
            json!({ "s": s, "omega": g[(0, 0)], "alpha": g[(6, 6)], "lapse": m.lapse(s) })
        })
        .collect();
    Ok(json!({ "tag": m.tag, "domain": [num(m.domain.0), num(m.domain.1)], "rows": rows }))
}

/// Integrates the diagonal almost Abelian Hitchin flow and estimates the holonomy of the
/// resulting 8-dimensional metric.
pub fn diagonal_holonomy(
    lambda: [f64; 3],
    mu: [f64; 3],
    t1: f64,
    samples: usize,
) -> Result<Value, String> {
    let sol =
        diagonal_solve(0.0, lambda, mu, t1, &FlowOptions::default()).map_err(|e| e.to_string())?;
    let (t0, t_end) = sol.trajectory.t_range();
    let mut e7 = [0.0; 7];
    e7[6] = 1.0;
    let m = CohomOneMetric::from_trajectory(&sol.trajectory).with_reeb_covector(&e7);
    let r = holonomy_estimate(&m, &HolonomyOptions::uniform(t0, t_end, samples))
        .map_err(|e| e.to_string())?;
    Ok(json!({
        "t_range": [t0, t_end],
        "stop": sol.trajectory.stop_reason,
        "isometry_residual": sol.isometry_residual(),
        "dimension": r.dimension,
        "verdict": r.verdict.label(),
        "ricci_max": r.ricci_max,
        "singular_values": r.singular_values,
    }))
}

fn to_js(r: Result<Value, String>) -> Result<String, JsError> {
    r.map(|v| v.to_string()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = fCurve)]
pub fn f_curve_js(lambda: f64, mu: f64, n: usize) -> Result<String, JsError> {
    to_js(f_curve(lambda, mu, n))
}

#[wasm_bindgen(js_name = invariantMetric)]
pub fn invariant_metric_js(lambda1: f64, lambda2: f64, n: usize) -> Result<String, JsError> {
    to_js(invariant_metric(lambda1, lambda2, n))
}

#[wasm_bindgen(js_name = diagonalHolonomy)]
pub fn diagonal_holonomy_js(
    lambda: Vec<f64>,
    mu: Vec<f64>,
    t1: f64,
    samples: usize,
) -> Result<String, JsError> {
    let three = |v: Vec<f64>| {
        <[f64; 3]>::try_from(v).map_err(|_| JsError::new("lambda and mu need three entries"))
    };
    to_js(diagonal_holonomy(three(lambda)?, three(mu)?, t1, samples))
}
