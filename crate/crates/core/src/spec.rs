//! Specifications, initial conditions, and the two satisfaction notions.

use std::fmt;

use serde::Serialize;

use crate::error::SpecError;
use crate::eval::{run_satisfies, Evaluator};
use crate::fixpoint::classify;
use crate::formula::Formula;
use crate::kernel::{Context, ContextFamily, Declarations, GlobalState, LassoRun};
use crate::program::Program;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SpecKind {
    /// A predicate on runs, checked at time 0 of each run.
    RunBased,
    /// A predicate on systems: validity at every point.
    KnowledgeBased,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Spec {
    pub kind: SpecKind,
    pub formula: Formula,
}

impl Spec {
    pub fn run_based(formula: Formula) -> Result<Spec, SpecError> {
        if formula.has_know() {
            return Err(SpecError::EpistemicInRunSpec);
        }
        Ok(Spec { kind: SpecKind::RunBased, formula })
    }

    pub fn knowledge_based(formula: Formula) -> Spec {
        Spec { kind: SpecKind::KnowledgeBased, formula }
    }
}

/// Where a specification fails: a run of a represented system and a time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub system: usize,
    /// Index of the run within its system.
    pub index: usize,
    pub run: LassoRun,
    pub time: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub holds: bool,
    /// Some checked context had no represented system at all.
    pub vacuous: bool,
    /// Represented systems in the (last) context checked.
    pub fixpoints: usize,
    /// Initial states of the failing context.
    pub witness_initial: Option<Vec<GlobalState>>,
    pub counterexample: Option<Counterexample>,
}

/// Whether every system representing `program` in `ctx` satisfies `spec`.
pub fn program_satisfies(program: &Program, spec: &Spec, ctx: &Context, budget: u64) -> Result<Verdict, SpecError> {
    let decls = &*ctx.decls;
    let systems = classify(program, ctx, budget)?.fixpoints().ok_or(SpecError::Undecided)?;
    let mut verdict = Verdict { holds: true, vacuous: systems.is_empty(), fixpoints: systems.len(), witness_initial: None, counterexample: None };
    for (i, system) in systems.iter().enumerate() {
        let failure = match spec.kind {
            SpecKind::RunBased => {
                let mut found = None;
                for (index, run) in system.runs().iter().enumerate() {
                    if !run_satisfies(decls, run, &spec.formula)? {
                        found = Some(Counterexample { system: i, index, run: run.clone(), time: 0 });
                        break;
                    }
                }
                found
            }
            SpecKind::KnowledgeBased => Evaluator::new(decls, system)
                .first_failure(&spec.formula)
                .map(|p| Counterexample { system: i, index: p.run, run: system.runs()[p.run].clone(), time: p.time }),
        };
        if let Some(c) = failure {
            verdict.holds = false;
            verdict.witness_initial = Some(ctx.initial.iter().cloned().collect());
            verdict.counterexample = Some(c);
            break;
        }
    }
    Ok(verdict)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InitSet {
    /// A propositional predicate on global states.
    Predicate(Formula),
    States(Vec<GlobalState>),
}

/// A named predicate on the initial states of a context family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InitCondition {
    pub name: String,
    pub set: InitSet,
}

/// Propositional formulas at a single global state.
pub fn holds_at_state(decls: &Declarations, s: &GlobalState, f: &Formula) -> bool {
    match f {
        Formula::Atom(a) => a.eval(decls, s),
        Formula::Not(a) => !holds_at_state(decls, s, a),
        Formula::And(a, b) => holds_at_state(decls, s, a) && holds_at_state(decls, s, b),
        Formula::Or(a, b) => holds_at_state(decls, s, a) || holds_at_state(decls, s, b),
        Formula::Implies(a, b) => !holds_at_state(decls, s, a) || holds_at_state(decls, s, b),
        _ => panic!("`{f}` is not a state predicate"),
    }
}

impl InitCondition {
    pub fn predicate(name: impl Into<String>, formula: Formula) -> Result<Self, SpecError> {
        if formula.has_know() || formula.has_temporal() {
            return Err(SpecError::NotStatePredicate(formula.to_string()));
        }
        Ok(InitCondition { name: name.into(), set: InitSet::Predicate(formula) })
    }

    /// The states of the family's universe satisfying the condition, sorted.
    pub fn states(&self, family: &ContextFamily) -> Vec<GlobalState> {
        family
            .universe
            .iter()
            .filter(|s| match &self.set {
                InitSet::Predicate(f) => holds_at_state(&family.decls, s, f),
                InitSet::States(list) => list.contains(s),
            })
            .cloned()
            .collect()
    }
}

impl fmt::Display for InitCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

pub fn is_strengthening(stronger: &InitCondition, weaker: &InitCondition, family: &ContextFamily) -> bool {
    let weak = weaker.states(family);
    stronger.states(family).iter().all(|s| weak.contains(s))
}

/// Largest initial condition [`satisfies_given_init`] will enumerate subsets of.
pub const INIT_CAP: usize = 12;

/// Nonempty subsets of `0..n` by size, then lexicographically.
fn subsets(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (1..=n).flat_map(move |k| {
        let mut combos = Vec::new();
        let mut cur = Vec::with_capacity(k);
        fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == k {
                out.push(cur.clone());
                return;
            }
            for i in start..n {
                cur.push(i);
                rec(i + 1, n, k, cur, out);
                cur.pop();
            }
        }
        rec(0, n, k, &mut cur, &mut combos);
        combos
    })
}

/// Satisfaction with respect to the family: `program` satisfies `spec` in every
/// context whose (nonempty) initial states satisfy `init`. The witness is the
/// smallest failing set of initial states.
pub fn satisfies_given_init(program: &Program, spec: &Spec, family: &ContextFamily, init: &InitCondition, budget: u64) -> Result<Verdict, SpecError> {
    let states = init.states(family);
    if states.len() > INIT_CAP {
        return Err(SpecError::InitCapExceeded { size: states.len(), cap: INIT_CAP });
    }
    let mut result = Verdict { holds: true, vacuous: false, fixpoints: 0, witness_initial: None, counterexample: None };
    for subset in subsets(states.len()) {
        let ctx = family.context(subset.iter().map(|&i| states[i].clone()));
        let v = program_satisfies(program, spec, &ctx, budget)?;
        result.vacuous |= v.vacuous;
        result.fixpoints = v.fixpoints;
        if !v.holds {
            return Ok(Verdict { vacuous: result.vacuous, ..v });
        }
    }
    Ok(result)
}

/// Maximal satisfaction: the single context whose initial states are all of `init`.
pub fn maximally_satisfies(program: &Program, spec: &Spec, family: &ContextFamily, init: &InitCondition, budget: u64) -> Result<Verdict, SpecError> {
    program_satisfies(program, spec, &family.context(init.states(family)), budget)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Notion {
    /// [`satisfies_given_init`]
    Family,
    /// [`maximally_satisfies`]
    Maximal,
}

impl Notion {
    pub fn name(&self) -> &'static str {
        match self {
            Notion::Family => "family",
            Notion::Maximal => "maximal",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NotionRow {
    pub notion: Notion,
    pub under_init: Verdict,
    pub under_stronger: Verdict,
}

impl NotionRow {
    /// Monotone unless the spec holds under the weaker condition and fails under the stronger one.
    pub fn violated(&self) -> bool {
        self.under_init.holds && !self.under_stronger.holds
    }

    pub fn flag(&self) -> &'static str {
        if self.violated() {
            "violated"
        } else {
            "preserved"
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonotonicityReport {
    pub rows: Vec<NotionRow>,
}

impl MonotonicityReport {
    pub fn row(&self, notion: Notion) -> Option<&NotionRow> {
        self.rows.iter().find(|r| r.notion == notion)
    }
}

pub fn monotonicity_report(
    program: &Program,
    spec: &Spec,
    family: &ContextFamily,
    init: &InitCondition,
    stronger: &InitCondition,
    notions: &[Notion],
    budget: u64,
) -> Result<MonotonicityReport, SpecError> {
    if !is_strengthening(stronger, init, family) {
        return Err(SpecError::NotStrengthening { stronger: stronger.name.clone(), weaker: init.name.clone() });
    }
    let mut rows = Vec::new();
    for &notion in notions {
        let check = |i: &InitCondition| match notion {
            Notion::Family => satisfies_given_init(program, spec, family, i, budget),
            Notion::Maximal => maximally_satisfies(program, spec, family, i, budget),
        };
        rows.push(NotionRow { notion, under_init: check(init)?, under_stronger: check(stronger)? });
    }
    Ok(MonotonicityReport { rows })
}
