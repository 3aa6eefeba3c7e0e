//! Browser bindings. Each exported function takes source text and returns
//! a JSON string; errors come back as JavaScript exceptions.

use serde_json::json;
use wasm_bindgen::prelude::*;

use qssa::metrics::{compute_metrics, optimization_ratio};
use qssa::optimize::{parse_pipeline, run_pipeline, OptOptions, DEFAULT_PIPELINE};
use qssa::verify::{has_errors, verify_module};

/// Raises and optimizes OpenQASM, returning the optimized IR, the lowered
/// QASM (when lowerable) and before/after gate counts.
pub fn optimize_qasm_json(src: &str, pipeline: &str) -> Result<String, String> {
    let prog = qssa::parse_qasm(src).map_err(|e| e.to_string())?;
    let module = qssa::raise(&prog).map_err(|e| e.to_string())?;
    let passes = if pipeline.trim().is_empty() {
        DEFAULT_PIPELINE.iter().map(|s| s.to_string()).collect()
    } else {
        parse_pipeline(pipeline).map_err(|e| e.to_string())?
    };
    let (out, reports) = run_pipeline(&module, &passes, OptOptions::default()).map_err(|e| e.to_string())?;
    let before = compute_metrics(&module).map_err(|e| e.to_string())?;
    let after = compute_metrics(&out).map_err(|e| e.to_string())?;
    let lowered = qssa::lower(&out).map(|p| qssa::print_qasm(&p));
    Ok(json!({
        "schema": 1,
        "ir": qssa::print_ir(&out),
        "qasm": lowered.as_ref().ok(),
        "lower_error": lowered.as_ref().err().map(|e| e.to_string()),
        "before": before,
        "after": after,
        "ratio": optimization_ratio(&before, &after),
        "passes": reports,
    })
    .to_string())
}

/// Exact outcome distribution of an OpenQASM program.
pub fn simulate_qasm_json(src: &str) -> Result<String, String> {
    let prog = qssa::parse_qasm(src).map_err(|e| e.to_string())?;
    let dist = qssa::sim::run_qasm_distribution(&prog).map_err(|e| e.to_string())?;
    Ok(json!({ "schema": 1, "distribution": dist.outcomes }).to_string())
}

/// Verifies IR text (or OpenQASM, which is raised first).
pub fn verify_json(src: &str) -> Result<String, String> {
    let module = if src.trim_start().starts_with("OPENQASM") {
        let prog = qssa::parse_qasm(src).map_err(|e| e.to_string())?;
        qssa::raise(&prog).map_err(|e| e.to_string())?
    } else {
        qssa::parse_ir(src).map_err(|e| e.to_string())?
    };
    let diags = verify_module(&module).map_err(|e| e.to_string())?;
    Ok(json!({
        "schema": 1,
        "ok": !has_errors(&diags),
        "diagnostics": diags.iter().map(|d| d.to_string()).collect::<Vec<_>>(),
    })
    .to_string())
}

#[wasm_bindgen]
pub fn optimize_qasm(src: &str, pipeline: &str) -> Result<String, JsError> {
    optimize_qasm_json(src, pipeline).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn simulate_qasm(src: &str) -> Result<String, JsError> {
    simulate_qasm_json(src).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn verify(src: &str) -> Result<String, JsError> {
    verify_json(src).map_err(|e| JsError::new(&e))
}
