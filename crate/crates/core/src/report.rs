//! Machine-readable traces and reports.

use serde::Serialize;

use crate::kernel::{Declarations, LassoRun, System};

/// One run as rendered state lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Trace {
    /// Index of the system among those reported.
    pub system: usize,
    pub run: usize,
    pub prefix: Vec<String>,
    pub cycle: Vec<String>,
    /// Falsifying time, for counterexamples.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time: Option<usize>,
}

pub fn run_trace(decls: &Declarations, run: &LassoRun, system: usize, index: usize) -> Trace {
    Trace {
        system,
        run: index,
        prefix: run.prefix().iter().map(|s| s.render(decls)).collect(),
        cycle: run.cycle().iter().map(|s| s.render(decls)).collect(),
        time: None,
    }
}

/// Every run of `system`, in the system's canonical order.
pub fn emit_traces(decls: &Declarations, system: &System, index: usize) -> Vec<Trace> {
    system.runs().iter().enumerate().map(|(i, r)| run_trace(decls, r, index, i)).collect()
}

/// State-per-line rendering; cycle states are marked with `*`.
pub fn render_traces(traces: &[Trace]) -> String {
    let mut out = String::new();
    for t in traces {
        out.push_str(&format!("system {} run {}", t.system, t.run));
        if let Some(time) = t.time {
            out.push_str(&format!(" (fails at time {time})"));
        }
        out.push('\n');
        for (m, s) in t.prefix.iter().enumerate() {
            out.push_str(&format!("  {m:>3}   {s}\n"));
        }
        for (k, s) in t.cycle.iter().enumerate() {
            out.push_str(&format!("  {:>3} * {s}\n", t.prefix.len() + k));
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioInfo {
    pub name: String,
    pub digest: String,
}

/// The document every command prints.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioInfo>,
    pub verdict: serde_json::Value,
    pub traces: Vec<Trace>,
    pub diagnostics: Vec<String>,
    pub timing_ms: u64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{GlobalState, Owner, VarDecl};

    #[test]
    fn empty_system_has_no_traces() {
        let d = Declarations::new(vec!["1".into()], vec![VarDecl::new("x", vec![0], Owner::Agent(0)).unwrap()], false, None, None).unwrap();
        assert!(emit_traces(&d, &System::empty(), 0).is_empty());
        let s = GlobalState::initial(&d, &[0]).unwrap();
        let t = emit_traces(&d, &System::new([LassoRun::new(vec![], vec![s])]), 0);
        assert_eq!(t[0].cycle, vec!["- | 1: x=0".to_string()]);
        assert!(render_traces(&t).contains("  0 * - | 1: x=0"));
    }
}
