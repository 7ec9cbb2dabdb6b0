//! Browser bindings. Every entry point takes plain strings and returns a JSON
//! document; errors come back as `{"error": "..."}`.

use kbp::fixpoint::DEFAULT_BUDGET;
use kbp::report::{emit_traces, run_trace};
use kbp::scenario::{bundled, load_bundled};
use kbp::{classify, program_satisfies, Classification, Spec};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn keys<V>(map: &std::collections::BTreeMap<String, V>) -> Vec<&String> {
    map.keys().collect()
}

/// Bundled scenarios with their programs, contexts and named formulas.
pub fn scenario_list() -> Value {
    let list: Vec<Value> = bundled()
        .iter()
        .map(|s| {
            json!({
                "name": s.doc.name,
                "description": s.doc.description,
                "programs": keys(&s.programs),
                "contexts": keys(&s.contexts),
                "formulas": s.doc.formulas,
            })
        })
        .collect();
    json!(list)
}

/// Classifies the systems `program` represents in `context`, with their runs.
pub fn fixpoint_report(scenario: &str, context: &str, program: &str) -> Result<Value, String> {
    let s = load_bundled(scenario).map_err(|e| e.to_string())?;
    let prog = s.program(program).map_err(|e| e.to_string())?;
    let ctx = s.context(context).map_err(|e| e.to_string())?;
    let class = classify(prog, ctx, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
    let systems = match &class {
        Classification::Unique { system, .. } => vec![system.clone()],
        Classification::Multiple(v) => v.clone(),
        Classification::None | Classification::Unknown => vec![],
    };
    let traces: Vec<_> = systems.iter().enumerate().flat_map(|(i, sys)| emit_traces(&s.decls, sys, i)).collect();
    Ok(json!({ "classification": class.name(), "systems": systems.len(), "traces": traces }))
}

/// Checks a typed formula; formulas mentioning knowledge are checked for
/// validity, the others at the start of every run.
pub fn check_report(scenario: &str, context: &str, program: &str, formula: &str) -> Result<Value, String> {
    let s = load_bundled(scenario).map_err(|e| e.to_string())?;
    let prog = s.program(program).map_err(|e| e.to_string())?;
    let ctx = s.context(context).map_err(|e| e.to_string())?;
    let f = match s.formulas.get(formula) {
        Some(named) => named.clone(),
        None => s.parse_formula(formula).map_err(|e| e.to_string())?,
    };
    let spec = if f.has_know() { Spec::knowledge_based(f) } else { Spec::run_based(f).map_err(|e| e.to_string())? };
    let v = program_satisfies(prog, &spec, ctx, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
    let witness = v.counterexample.as_ref().map(|c| {
        let mut t = run_trace(&s.decls, &c.run, c.system, c.index);
        t.time = Some(c.time);
        t
    });
    Ok(json!({
        "formula": spec.formula.to_string(),
        "mode": spec.kind,
        "holds": v.holds,
        "vacuous": v.vacuous,
        "systems": v.fixpoints,
        "witness": witness,
    }))
}

fn respond(r: Result<Value, String>) -> String {
    r.unwrap_or_else(|e| json!({ "error": e })).to_string()
}

#[wasm_bindgen]
pub fn scenarios() -> String {
    scenario_list().to_string()
}

#[wasm_bindgen]
pub fn fixpoints(scenario: &str, context: &str, program: &str) -> String {
    respond(fixpoint_report(scenario, context, program))
}

#[wasm_bindgen]
pub fn check(scenario: &str, context: &str, program: &str, formula: &str) -> String {
    respond(check_report(scenario, context, program, formula))
}
