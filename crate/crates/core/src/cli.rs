//! The `kbp` command-line driver.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::builder::{build_system_with, state_cap};
use crate::error::{BuildError, ProgramError, ScenarioError, SpecError};
use crate::fixpoint::{classify, fixpoint_enumerate, fixpoint_iterate, Classification, Enumeration, IterateOutcome, Seed, SystemProtocol, DEFAULT_BUDGET, DEFAULT_MAX_ITERS};
use crate::formula::Formula;
use crate::kernel::System;
use crate::program::{is_standard, StandardProtocol};
use crate::report::{emit_traces, render_traces, run_trace, Report, ScenarioInfo, Trace};
use crate::scenario::{load, Scenario, BUNDLE};
use crate::spec::{monotonicity_report, program_satisfies, Notion, Spec, Verdict};

#[derive(Parser, Debug)]
#[command(name = "kbp", version, about = "Build systems, find fixed points and check specifications of knowledge-based programs")]
struct Cli {
    /// Human-readable output instead of JSON.
    #[arg(long, global = true)]
    human: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List the bundled scenarios.
    Scenarios,
    /// Generate the system of a standard program, or of the protocol a knowledge-based program derives from its represented system.
    Build {
        scenario: String,
        #[arg(long)]
        context: String,
        #[arg(long, conflicts_with = "protocol_of", required_unless_present = "protocol_of")]
        program: Option<String>,
        #[arg(long)]
        protocol_of: Option<String>,
        /// Also write the traces as JSON to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Find the systems a program represents.
    Fixpoints {
        scenario: String,
        #[arg(long)]
        context: String,
        #[arg(long)]
        program: String,
        #[arg(long, value_enum, default_value_t = Method::Enumerate)]
        method: Method,
        #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
        max_iters: usize,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        #[arg(long, value_enum, default_value_t = SeedArg::StandardClosure)]
        seed: SeedArg,
    },
    /// Check a specification against every represented system.
    Check {
        scenario: String,
        #[arg(long)]
        program: String,
        #[arg(long)]
        context: String,
        /// Name of a formula in the scenario.
        #[arg(long)]
        spec: String,
        /// Defaults to runbased for formulas without knowledge operators, kbspec otherwise.
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
    },
    /// Compare satisfaction under an initial condition and a strengthening of it.
    Monotonicity {
        scenario: String,
        #[arg(long)]
        program: String,
        #[arg(long)]
        family: String,
        #[arg(long)]
        init: String,
        #[arg(long)]
        stronger_init: String,
        #[arg(long)]
        spec: String,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "family,maximal")]
        notions: Vec<NotionArg>,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Method {
    Iterate,
    Enumerate,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SeedArg {
    StandardClosure,
    AllKnowTrue,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Mode {
    Runbased,
    Kbspec,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum NotionArg {
    Family,
    Maximal,
}

/// Exit status, captured output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub const EXIT_HOLDS: i32 = 0;
pub const EXIT_FAILS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_UNDECIDED: i32 = 3;

/// Everything that ends a command early.
enum Stop {
    Usage(String),
    Undecided(String),
}

impl From<ScenarioError> for Stop {
    fn from(e: ScenarioError) -> Self {
        Stop::Usage(e.to_string())
    }
}

impl From<BuildError> for Stop {
    fn from(e: BuildError) -> Self {
        Stop::Undecided(e.to_string())
    }
}

impl From<SpecError> for Stop {
    fn from(e: SpecError) -> Self {
        match e {
            SpecError::Undecided | SpecError::InitCapExceeded { .. } | SpecError::Build(_) => Stop::Undecided(e.to_string()),
            _ => Stop::Usage(e.to_string()),
        }
    }
}

struct Output {
    code: i32,
    verdict: serde_json::Value,
    traces: Vec<Trace>,
    diagnostics: Vec<String>,
    human: String,
}

pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<String>,
{
    let argv: Vec<String> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_HOLDS };
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome { code, stdout: String::new(), stderr: text }
            } else {
                Outcome { code, stdout: text, stderr: String::new() }
            };
        }
    };
    let started = Instant::now();
    let command: Vec<String> = argv.iter().skip(1).cloned().collect();
    let mut scenario_info = None;
    let result = execute(&cli.command, &mut scenario_info);
    let timing_ms = started.elapsed().as_millis() as u64;
    match result {
        Ok(out) => {
            let stdout = if cli.human {
                out.human
            } else {
                let report = Report { command, scenario: scenario_info, verdict: out.verdict, traces: out.traces, diagnostics: out.diagnostics, timing_ms };
                serde_json::to_string_pretty(&report).unwrap() + "\n"
            };
            Outcome { code: out.code, stdout, stderr: String::new() }
        }
        Err(stop) => {
            let (code, msg) = match stop {
                Stop::Usage(m) => (EXIT_USAGE, m),
                Stop::Undecided(m) => (EXIT_UNDECIDED, m),
            };
            let stdout = if cli.human {
                String::new()
            } else {
                let report = Report { command, scenario: scenario_info, verdict: json!({ "error": msg }), traces: vec![], diagnostics: vec![msg.clone()], timing_ms };
                serde_json::to_string_pretty(&report).unwrap() + "\n"
            };
            Outcome { code, stdout, stderr: format!("kbp: {msg}\n") }
        }
    }
}

fn open(name: &str, info: &mut Option<ScenarioInfo>) -> Result<Scenario, Stop> {
    let s = load(name)?;
    *info = Some(ScenarioInfo { name: s.doc.name.clone(), digest: s.digest.clone() });
    Ok(s)
}

fn spec_for(s: &Scenario, name: &str, mode: Option<Mode>) -> Result<Spec, Stop> {
    let f: Formula = s.formula(name)?.clone();
    match mode {
        Some(Mode::Runbased) => Ok(Spec::run_based(f)?),
        Some(Mode::Kbspec) => Ok(Spec::knowledge_based(f)),
        None if f.has_know() => Ok(Spec::knowledge_based(f)),
        None => Ok(Spec::run_based(f)?),
    }
}

fn systems_json(systems: &[System]) -> serde_json::Value {
    json!(systems.iter().map(|s| json!({ "runs": s.len(), "states": s.states().len() })).collect::<Vec<_>>())
}

fn execute(command: &Command, info: &mut Option<ScenarioInfo>) -> Result<Output, Stop> {
    match command {
        Command::Scenarios => {
            let mut list = Vec::new();
            let mut human = String::new();
            for (name, _) in BUNDLE {
                let s = load(name)?;
                human.push_str(&format!("{name:<20} {}\n", s.doc.description));
                list.push(json!({
                    "name": name,
                    "aliases": s.doc.aliases,
                    "description": s.doc.description,
                    "agents": s.decls.agent_count(),
                    "programs": s.programs.keys().collect::<Vec<_>>(),
                    "contexts": s.contexts.keys().collect::<Vec<_>>(),
                    "families": s.families.keys().collect::<Vec<_>>(),
                    "formulas": s.formulas.keys().collect::<Vec<_>>(),
                    "init_conditions": s.inits.keys().collect::<Vec<_>>(),
                    "digest": s.digest,
                }));
            }
            Ok(Output { code: EXIT_HOLDS, verdict: json!({ "scenarios": list }), traces: vec![], diagnostics: vec![], human })
        }
        Command::Build { scenario, context, program, protocol_of, out } => {
            let s = open(scenario, info)?;
            let ctx = s.context(context)?;
            let mut diagnostics = Vec::new();
            let (system, stats) = match (program, protocol_of) {
                (Some(p), _) => {
                    let prog = s.program(p)?;
                    if !is_standard(prog) {
                        return Err(Stop::Usage(format!("{} (use --protocol-of to build from its represented system)", ProgramError::SystemRequired(p.clone()))));
                    }
                    build_system_with(&StandardProtocol { decls: &s.decls, program: prog }, ctx, state_cap())?
                }
                (None, Some(p)) => {
                    let prog = s.program(p)?;
                    let represented = match classify(prog, ctx, DEFAULT_BUDGET)? {
                        Classification::Unique { system, .. } => system,
                        Classification::Unknown => return Err(Stop::Undecided(SpecError::Undecided.to_string())),
                        other => {
                            return Err(Stop::Usage(format!("`{p}` represents {} systems in `{context}`; its protocol is not determined", other.fixpoints().map_or(0, |v| v.len()))))
                        }
                    };
                    diagnostics.push(format!("protocol derived from the system `{p}` represents in `{context}`"));
                    build_system_with(&SystemProtocol::new(prog, &s.decls, &represented), ctx, state_cap())?
                }
                (None, None) => unreachable!("clap requires one of them"),
            };
            if !stats.undefined.is_empty() {
                diagnostics.push(format!("protocol undefined on {} local states; treated as no-op", stats.undefined.len()));
            }
            let traces = emit_traces(&s.decls, &system, 0);
            if let Some(path) = out {
                std::fs::write(path, serde_json::to_string_pretty(&traces).unwrap()).map_err(|e| Stop::Usage(format!("cannot write `{}`: {e}", path.display())))?;
            }
            let human = format!("{} runs, {} reachable states\n{}", system.len(), stats.states, render_traces(&traces));
            Ok(Output { code: EXIT_HOLDS, verdict: json!({ "runs": system.len(), "states": stats.states }), traces, diagnostics, human })
        }
        Command::Fixpoints { scenario, context, program, method, max_iters, budget, seed } => {
            let s = open(scenario, info)?;
            let ctx = s.context(context)?;
            let prog = s.program(program)?;
            match method {
                Method::Enumerate => match fixpoint_enumerate(prog, ctx, *budget)? {
                    Enumeration::BudgetExceeded { cells } => Err(Stop::Undecided(format!("budget exceeded: {cells} undetermined knowledge tests (2^{cells} > {budget})"))),
                    Enumeration::Complete { fixpoints, cells } => {
                        let class = match fixpoints.len() {
                            0 => "none",
                            1 => "unique",
                            _ => "multiple",
                        };
                        let traces: Vec<Trace> = fixpoints.iter().enumerate().flat_map(|(i, f)| emit_traces(&s.decls, f, i)).collect();
                        let runs: Vec<usize> = fixpoints.iter().map(System::len).collect();
                        let human = format!("{class}: {} represented systems (runs: {runs:?}), {cells} undetermined tests\n{}", fixpoints.len(), render_traces(&traces));
                        Ok(Output {
                            code: EXIT_HOLDS,
                            verdict: json!({ "method": "enumerate", "classification": class, "count": fixpoints.len(), "systems": systems_json(&fixpoints), "cells": cells }),
                            traces,
                            diagnostics: vec![],
                            human,
                        })
                    }
                },
                Method::Iterate => {
                    let seed = match seed {
                        SeedArg::StandardClosure => Seed::AllKnowFalse,
                        SeedArg::AllKnowTrue => Seed::AllKnowTrue,
                    };
                    match fixpoint_iterate(prog, ctx, &seed, *max_iters)? {
                        IterateOutcome::FixedPoint { system, iterations } => {
                            let traces = emit_traces(&s.decls, &system, 0);
                            let human = format!("fixed point after {iterations} iterations: {} runs\n{}", system.len(), render_traces(&traces));
                            Ok(Output {
                                code: EXIT_HOLDS,
                                verdict: json!({ "method": "iterate", "seed": seed.name(), "outcome": "fixed-point", "iterations": iterations, "systems": systems_json(&[system]) }),
                                traces,
                                diagnostics: vec![],
                                human,
                            })
                        }
                        IterateOutcome::Cycle { start, period } => {
                            Err(Stop::Undecided(format!("iteration from {} entered a cycle of period {period} at step {start}", seed.name())))
                        }
                        IterateOutcome::NoConvergence { iterations } => Err(Stop::Undecided(format!("no fixed point within {iterations} iterations"))),
                    }
                }
            }
        }
        Command::Check { scenario, program, context, spec, mode, budget } => {
            let s = open(scenario, info)?;
            let ctx = s.context(context)?;
            let prog = s.program(program)?;
            let sp = spec_for(&s, spec, *mode)?;
            let v = program_satisfies(prog, &sp, ctx, *budget)?;
            let traces = counterexample_traces(&s, &v);
            let mut diagnostics = Vec::new();
            if v.vacuous {
                diagnostics.push("vacuous: the program represents no system in this context".into());
            }
            let human = format!("{spec} {} ({} represented systems)\n{}", if v.holds { "holds" } else { "fails" }, v.fixpoints, render_traces(&traces));
            Ok(Output {
                code: if v.holds { EXIT_HOLDS } else { EXIT_FAILS },
                verdict: json!({ "holds": v.holds, "mode": sp.kind, "spec": sp.formula.to_string(), "fixpoints": v.fixpoints, "vacuous": v.vacuous }),
                traces,
                diagnostics,
                human,
            })
        }
        Command::Monotonicity { scenario, program, family, init, stronger_init, spec, mode, notions, budget } => {
            let s = open(scenario, info)?;
            let fam = s.family(family)?;
            let prog = s.program(program)?;
            let sp = spec_for(&s, spec, *mode)?;
            let (weak, strong) = (s.init(init)?, s.init(stronger_init)?);
            let notions: Vec<Notion> = notions
                .iter()
                .map(|n| match n {
                    NotionArg::Family => Notion::Family,
                    NotionArg::Maximal => Notion::Maximal,
                })
                .collect();
            let report = monotonicity_report(prog, &sp, fam, weak, strong, &notions, *budget)?;
            let mut rows = Vec::new();
            let mut traces = Vec::new();
            let mut diagnostics = Vec::new();
            let mut human = format!("{:<8} {:>10} {:>10}  flag\n", "notion", init, stronger_init);
            for row in &report.rows {
                let render = |v: &Verdict| v.witness_initial.as_ref().map(|w| w.iter().map(|st| st.render(&s.decls)).collect::<Vec<_>>());
                rows.push(json!({
                    "notion": row.notion,
                    "init": row.under_init.holds,
                    "stronger": row.under_stronger.holds,
                    "flag": row.flag(),
                    "witness_init": render(&row.under_init),
                    "witness_stronger": render(&row.under_stronger),
                }));
                human.push_str(&format!("{:<8} {:>10} {:>10}  {}\n", row.notion.name(), row.under_init.holds, row.under_stronger.holds, row.flag()));
                if row.violated() {
                    traces.extend(counterexample_traces(&s, &row.under_stronger));
                }
                if row.under_init.vacuous || row.under_stronger.vacuous {
                    diagnostics.push(format!("{}: some context has no represented system (vacuous)", row.notion.name()));
                }
            }
            human.push_str(&render_traces(&traces));
            let violated = report.rows.iter().any(|r| r.violated());
            Ok(Output {
                code: if violated { EXIT_FAILS } else { EXIT_HOLDS },
                verdict: json!({ "spec": sp.formula.to_string(), "mode": sp.kind, "init": init, "stronger_init": stronger_init, "rows": rows }),
                traces,
                diagnostics,
                human,
            })
        }
    }
}

fn counterexample_traces(s: &Scenario, v: &Verdict) -> Vec<Trace> {
    v.counterexample
        .iter()
        .map(|c| Trace { time: Some(c.time), ..run_trace(&s.decls, &c.run, c.system, c.index) })
        .collect()
}
