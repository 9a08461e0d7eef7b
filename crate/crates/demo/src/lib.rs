//! Browser bindings: run a driver, check a spec along the run, and judge
//! a single assertion at one position of the run. Every entry point takes
//! source text and returns JSON.

use serde_json::{json, Value as Json};
use wasm_bindgen::prelude::*;

use chainmail::checker::{check_trace, report_json, CheckOptions};
use chainmail::corpus;
use chainmail::dump::{config_to_json, trace_end_label};
use chainmail::interpreter::{initial, record_from, Bounds, Trace};
use chainmail::sat::{evaluate, EvalContext, Modules};
use chainmail::syntax::{parse_assertion, parse_module, parse_spec, parse_stmts};

fn modules(internal: &str, external: &str) -> Result<Modules, String> {
    let i = parse_module(internal).map_err(|e| format!("internal module: {e}"))?;
    let x = parse_module(external).map_err(|e| format!("external module: {e}"))?;
    Modules::new(i, x).map_err(|e| e.to_string())
}

fn record(m: &Modules, driver: &str, bounds: &Bounds) -> Result<Trace, String> {
    let d = parse_stmts(driver).map_err(|e| format!("driver: {e}"))?;
    Ok(record_from(&m.internal, &m.linked, initial(d), bounds))
}

fn bounds(max_steps: u32) -> Bounds {
    Bounds { max_steps: max_steps as usize, ..Bounds::default() }
}

/// The run as `{end, steps, positions: [config, ..]}`.
pub fn run_json(internal: &str, external: &str, driver: &str, max_steps: u32) -> Result<String, String> {
    let m = modules(internal, external)?;
    let t = record(&m, driver, &bounds(max_steps))?;
    let positions: Vec<Json> = t.externals.iter().map(|c| serde_json::to_value(config_to_json(c)).unwrap()).collect();
    Ok(json!({ "end": trace_end_label(&t.end), "steps": t.steps, "positions": positions }).to_string())
}

/// The checker's JSON report for one run.
pub fn check_json(internal: &str, external: &str, driver: &str, spec: &str, max_steps: u32) -> Result<String, String> {
    let m = modules(internal, external)?;
    let s = parse_spec(spec).map_err(|e| format!("spec: {e}"))?;
    let opts = CheckOptions { bounds: bounds(max_steps), threads: 1, ..CheckOptions::default() };
    let t = record(&m, driver, &opts.bounds)?;
    let v = check_trace(&m, &t, &s, &opts);
    Ok(report_json(&v, &s, &opts))
}

/// Judges `assertion` at `position` of the run: `{holds, withheld, caveats}`.
pub fn eval_json(
    internal: &str,
    external: &str,
    driver: &str,
    position: u32,
    assertion: &str,
    max_steps: u32,
) -> Result<String, String> {
    let m = modules(internal, external)?;
    let a = parse_assertion(assertion).map_err(|e| format!("assertion: {e}"))?;
    let b = bounds(max_steps);
    let t = record(&m, driver, &b)?;
    let p = position as usize;
    if p >= t.len() {
        return Err(format!("position {p} is past the end of the run ({} positions)", t.len()));
    }
    let j = evaluate(&EvalContext::at(&m, &t, p, b), &a);
    Ok(json!({ "holds": j.holds, "withheld": j.withheld, "caveats": j.caveats }).to_string())
}

/// The bundled examples with their sources.
pub fn examples_json() -> String {
    let list: Vec<Json> = corpus::exemplars()
        .iter()
        .map(|e| {
            json!({
                "name": e.name,
                "description": e.description,
                "internal": e.internal,
                "external": e.external,
                "driver": e.driver,
                "spec": e.spec,
                "expected": e.expected,
            })
        })
        .collect();
    Json::Array(list).to_string()
}

#[wasm_bindgen]
pub fn run(internal: &str, external: &str, driver: &str, max_steps: u32) -> Result<String, JsValue> {
    run_json(internal, external, driver, max_steps).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn check(internal: &str, external: &str, driver: &str, spec: &str, max_steps: u32) -> Result<String, JsValue> {
    check_json(internal, external, driver, spec, max_steps).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn judge(
    internal: &str,
    external: &str,
    driver: &str,
    position: u32,
    assertion: &str,
    max_steps: u32,
) -> Result<String, JsValue> {
    eval_json(internal, external, driver, position, assertion, max_steps).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn examples() -> String {
    examples_json()
}
