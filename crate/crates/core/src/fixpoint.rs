//! Systems represented by a knowledge-based program: `R = R(Pg^R, γ)`.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::rc::Rc;

use crate::builder::{apply_transition, build_system_with, joint_actions, state_cap, BuildStats};
use crate::error::BuildError;
use crate::formula::Formula;
use crate::kernel::{Admissibility, Context, Declarations, GlobalState, LocalState, System};
use crate::program::{derive_on_system, eval_guard, is_standard, select_actions, ActionList, AgentProgram, Program, Protocol, ProtocolTable};

/// Default bound on `2^cells` for [`fixpoint_enumerate`].
pub const DEFAULT_BUDGET: u64 = 4096;
pub const DEFAULT_MAX_ITERS: usize = 64;

/// `Pg^R` as a protocol: tabulated on the local states of `R`, evaluated with
/// vacuous knowledge elsewhere.
pub struct SystemProtocol<'a> {
    decls: &'a Declarations,
    program: &'a Program,
    table: ProtocolTable,
}

impl<'a> SystemProtocol<'a> {
    pub fn new(program: &'a Program, decls: &'a Declarations, system: &System) -> Self {
        let table = if is_standard(program) { ProtocolTable::default() } else { derive_on_system(program, decls, system) };
        SystemProtocol { decls, program, table }
    }
}

impl Protocol for SystemProtocol<'_> {
    fn actions(&self, agent: usize, local: &LocalState) -> Option<ActionList> {
        self.table
            .actions(agent, local)
            .or_else(|| Some(select_actions(self.decls, &self.program.agents[agent], agent, local, &mut |_| true)))
    }
}

/// One step of the fixed-point map: `R ↦ R(Pg^R, γ)`.
pub fn step(program: &Program, ctx: &Context, system: &System) -> Result<System, BuildError> {
    let proto = SystemProtocol::new(program, &ctx.decls, system);
    build_system_with(&proto, ctx, state_cap()).map(|(s, _)| s)
}

/// `R(Pg^R, γ) == R`.
pub fn represents(program: &Program, ctx: &Context, system: &System) -> Result<bool, BuildError> {
    Ok(step(program, ctx, system)? == *system)
}

/// Starting point for [`fixpoint_iterate`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Seed {
    /// The system of the program with every knowledge test false.
    #[default]
    AllKnowFalse,
    /// The system of the program with every knowledge test true.
    AllKnowTrue,
    Explicit(System),
}

impl Seed {
    pub fn name(&self) -> &'static str {
        match self {
            Seed::AllKnowFalse => "standard-closure",
            Seed::AllKnowTrue => "all-know-true",
            Seed::Explicit(_) => "explicit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IterateOutcome {
    FixedPoint { system: System, iterations: usize },
    /// `R_start = R_{start+period}` without reaching a fixed point.
    Cycle { start: usize, period: usize },
    NoConvergence { iterations: usize },
}

pub fn seed_system(program: &Program, ctx: &Context, seed: &Seed) -> Result<System, BuildError> {
    let fixed = match seed {
        Seed::Explicit(s) => return Ok(s.clone()),
        Seed::AllKnowFalse => program.with_knows_fixed(false),
        Seed::AllKnowTrue => program.with_knows_fixed(true),
    };
    step(&fixed, ctx, &System::empty())
}

/// Iterates `R ↦ R(Pg^R, γ)` from `seed` until a fixed point, a cycle, or `max_iters`.
pub fn fixpoint_iterate(program: &Program, ctx: &Context, seed: &Seed, max_iters: usize) -> Result<IterateOutcome, BuildError> {
    let mut history = vec![seed_system(program, ctx, seed)?];
    for n in 1..=max_iters {
        let next = step(program, ctx, history.last().unwrap())?;
        if next == *history.last().unwrap() {
            return Ok(IterateOutcome::FixedPoint { system: next, iterations: n });
        }
        if let Some(start) = history.iter().position(|h| *h == next) {
            return Ok(IterateOutcome::Cycle { start, period: history.len() - start });
        }
        history.push(next);
    }
    Ok(IterateOutcome::NoConvergence { iterations: max_iters })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Enumeration {
    /// Every system the program represents, sorted.
    Complete { fixpoints: Vec<System>, cells: usize },
    BudgetExceeded { cells: usize },
}

/// Kleene evaluation of guards at a local state; `know` decides outermost tests.
fn eval_guard3(decls: &Declarations, agent: usize, local: &LocalState, guard: &Formula, know: &mut dyn FnMut(&Formula) -> Option<bool>) -> Option<bool> {
    match guard {
        Formula::Know(..) => know(guard),
        Formula::Not(a) => eval_guard3(decls, agent, local, a, know).map(|v| !v),
        Formula::And(a, b) => and3(eval_guard3(decls, agent, local, a, know), eval_guard3(decls, agent, local, b, know)),
        Formula::Or(a, b) => or3(eval_guard3(decls, agent, local, a, know), eval_guard3(decls, agent, local, b, know)),
        Formula::Implies(a, b) => or3(eval_guard3(decls, agent, local, a, know).map(|v| !v), eval_guard3(decls, agent, local, b, know)),
        _ => Some(eval_guard(decls, agent, local, guard, &mut |_| unreachable!())),
    }
}

fn and3(a: Option<bool>, b: Option<bool>) -> Option<bool> {
    match (a, b) {
        (Some(false), _) | (_, Some(false)) => Some(false),
        (Some(true), Some(true)) => Some(true),
        _ => None,
    }
}

fn or3(a: Option<bool>, b: Option<bool>) -> Option<bool> {
    and3(a.map(|v| !v), b.map(|v| !v)).map(|v| !v)
}

/// First-match choice under partial knowledge: every action list that some
/// completion of the undetermined tests could select, and the undetermined
/// tests consulted on the way.
fn possible_choices<'p>(
    decls: &Declarations,
    ap: &'p AgentProgram,
    agent: usize,
    local: &LocalState,
    know: &mut dyn FnMut(&Formula) -> Option<bool>,
) -> (Vec<ActionList>, Vec<&'p Formula>) {
    let mut out = BTreeSet::new();
    let mut open = Vec::new();
    for b in &ap.branches {
        let mut consulted = Vec::new();
        let v = eval_guard3(decls, agent, local, &b.guard, &mut |k| {
            let r = know(k);
            if r.is_none() {
                consulted.push(k.clone());
            }
            r
        });
        if v.is_none() {
            for k in b.guard.outermost_knows() {
                if consulted.contains(k) && !open.contains(&k) {
                    open.push(k);
                }
            }
        }
        match v {
            Some(true) => {
                out.insert(b.actions.clone());
                return (out.into_iter().collect(), open);
            }
            Some(false) => {}
            None => {
                out.insert(b.actions.clone());
            }
        }
    }
    out.insert(ActionList::noop());
    (out.into_iter().collect(), open)
}

/// What every system containing `s` agrees on: atoms, knowledge that is
/// refuted at `s` itself, and knowledge of facts the agent can see.
fn pointwise(decls: &Declarations, s: &GlobalState, f: &Formula) -> Option<bool> {
    match f {
        Formula::Atom(a) => Some(a.eval(decls, s)),
        Formula::Not(a) => pointwise(decls, s, a).map(|v| !v),
        Formula::And(a, b) => and3(pointwise(decls, s, a), pointwise(decls, s, b)),
        Formula::Or(a, b) => or3(pointwise(decls, s, a), pointwise(decls, s, b)),
        Formula::Implies(a, b) => or3(pointwise(decls, s, a).map(|v| !v), pointwise(decls, s, b)),
        Formula::Know(j, body) => {
            let v = pointwise(decls, s, body);
            let local = !body.has_know() && !body.has_temporal() && body.atoms().iter().all(|a| a.eval_local(decls, *j, s.local(*j)).is_some());
            if v == Some(false) || local {
                v
            } else {
                None
            }
        }
        _ => None,
    }
}

/// Three-valued view of every fixed point at once: `upper` holds every state
/// any fixed point can reach, `lower` the states all of them reach.
struct Approx<'a> {
    decls: &'a Declarations,
    upper: Vec<GlobalState>,
    in_lower: Vec<bool>,
    /// Per agent: local state -> indices into `upper`.
    groups: Vec<HashMap<LocalState, Vec<usize>>>,
    memo: HashMap<Formula, Rc<Vec<Option<bool>>>>,
}

impl<'a> Approx<'a> {
    fn new(decls: &'a Declarations, upper: BTreeSet<GlobalState>, lower: &BTreeSet<GlobalState>) -> Self {
        let upper: Vec<GlobalState> = upper.into_iter().collect();
        let in_lower = upper.iter().map(|s| lower.contains(s)).collect();
        let mut groups = vec![HashMap::<LocalState, Vec<usize>>::new(); decls.agent_count()];
        for (i, s) in upper.iter().enumerate() {
            for (a, g) in groups.iter_mut().enumerate() {
                g.entry(s.local(a).clone()).or_default().push(i);
            }
        }
        Approx { decls, upper, in_lower, groups, memo: HashMap::new() }
    }

    /// State formula values on `upper`, sound on the states of every fixed point.
    fn label(&mut self, f: &Formula) -> Rc<Vec<Option<bool>>> {
        if let Some(v) = self.memo.get(f) {
            return v.clone();
        }
        let n = self.upper.len();
        let out: Vec<Option<bool>> = match f {
            Formula::Atom(a) => self.upper.iter().map(|s| Some(a.eval(self.decls, s))).collect(),
            Formula::Not(a) => self.label(a).iter().map(|v| v.map(|b| !b)).collect(),
            Formula::And(a, b) => {
                let (x, y) = (self.label(a), self.label(b));
                (0..n).map(|i| and3(x[i], y[i])).collect()
            }
            Formula::Or(a, b) => {
                let (x, y) = (self.label(a), self.label(b));
                (0..n).map(|i| or3(x[i], y[i])).collect()
            }
            Formula::Implies(a, b) => {
                let (x, y) = (self.label(a), self.label(b));
                (0..n).map(|i| or3(x[i].map(|v| !v), y[i])).collect()
            }
            Formula::Know(j, body) => {
                let inner = self.label(body);
                let mut out = vec![None; n];
                for group in self.groups[*j].values() {
                    let v = self.know_value(&inner, group);
                    for &i in group {
                        out[i] = v.or(if inner[i] == Some(false) { Some(false) } else { None });
                    }
                }
                out
            }
            // guards are temporal-free
            _ => vec![None; n],
        };
        let rc = Rc::new(out);
        self.memo.insert(f.clone(), rc.clone());
        rc
    }

    fn know_value(&self, inner: &[Option<bool>], group: &[usize]) -> Option<bool> {
        if group.iter().all(|&i| inner[i] == Some(true)) {
            Some(true)
        } else if group.iter().all(|&i| inner[i] == Some(false)) || group.iter().any(|&i| self.in_lower[i] && inner[i] == Some(false)) {
            Some(false)
        } else {
            None
        }
    }

    /// Value of the outermost test `k = K_i φ` at an `i`-local state of `upper`.
    fn cell(&mut self, agent: usize, k: &Formula, local: &LocalState) -> Option<bool> {
        let Formula::Know(_, body) = k else { unreachable!() };
        let inner = self.label(body);
        let group = self.groups[agent].get(local).cloned().unwrap_or_default();
        self.know_value(&inner, &group)
    }

    fn choices(&mut self, program: &Program, agent: usize, local: &LocalState) -> (Vec<ActionList>, Vec<Formula>) {
        let decls = self.decls;
        let (c, open) = possible_choices(decls, &program.agents[agent], agent, local, &mut |k| self.cell(agent, k, local));
        (c, open.into_iter().cloned().collect())
    }
}

struct Fixed(Vec<ActionList>);

impl Protocol for Fixed {
    fn actions(&self, agent: usize, _: &LocalState) -> Option<ActionList> {
        self.0.get(agent).cloned()
    }
}

fn successors(ctx: &Context, s: &GlobalState, per_agent: &[Vec<ActionList>]) -> Vec<GlobalState> {
    let mut combos: Vec<Vec<ActionList>> = vec![vec![]];
    for options in per_agent {
        combos = combos.into_iter().flat_map(|pre| options.iter().map(move |o| [pre.clone(), vec![o.clone()]].concat())).collect();
    }
    let mut out = Vec::new();
    let mut stats = BuildStats::default();
    for combo in combos {
        for j in joint_actions(&Fixed(combo), ctx.env, &ctx.decls, s, &mut stats) {
            out.push(apply_transition(&ctx.decls, ctx.env, &j, s));
        }
    }
    out
}

/// Closure of the initial states; `expand` gives the options per agent, or `None` to stop.
fn closure(ctx: &Context, cap: usize, mut expand: impl FnMut(&GlobalState) -> Option<Vec<Vec<ActionList>>>) -> Result<BTreeSet<GlobalState>, BuildError> {
    let mut seen: BTreeSet<GlobalState> = ctx.initial.clone();
    let mut queue: VecDeque<GlobalState> = ctx.initial.iter().cloned().collect();
    while let Some(s) = queue.pop_front() {
        let Some(options) = expand(&s) else { continue };
        for t in successors(ctx, &s, &options) {
            if seen.insert(t.clone()) {
                if seen.len() > cap {
                    return Err(BuildError::StateBudgetExceeded { cap });
                }
                queue.push_back(t);
            }
        }
    }
    Ok(seen)
}

/// Refines upper and lower state sets until stable and returns the final view.
fn refine<'a>(program: &Program, ctx: &'a Context, cap: usize) -> Result<Approx<'a>, BuildError> {
    let decls = &*ctx.decls;
    let n = decls.agent_count();
    let mut upper = closure(ctx, cap, |s| {
        Some((0..n).map(|a| possible_choices(decls, &program.agents[a], a, s.local(a), &mut |k| pointwise(decls, s, k)).0).collect())
    })?;
    let mut lower = BTreeSet::new();
    loop {
        let mut approx = Approx::new(decls, upper.clone(), &lower);
        let mut memo: HashMap<(usize, LocalState), Vec<ActionList>> = HashMap::new();
        let mut options = |s: &GlobalState, approx: &mut Approx| -> Vec<Vec<ActionList>> {
            (0..n)
                .map(|a| memo.entry((a, s.local(a).clone())).or_insert_with(|| approx.choices(program, a, s.local(a)).0).clone())
                .collect()
        };
        let new_upper = closure(ctx, cap, |s| Some(options(s, &mut approx)))?;
        let new_lower = if ctx.admissibility == Admissibility::All {
            closure(ctx, cap, |s| {
                let o = options(s, &mut approx);
                o.iter().all(|c| c.len() == 1).then_some(o)
            })?
        } else {
            BTreeSet::new()
        };
        if new_upper == upper && new_lower == lower {
            return Ok(approx);
        }
        upper = new_upper;
        lower = new_lower;
    }
}

/// Every system the program represents in `ctx`, if the undetermined
/// knowledge tests leave at most `budget` candidate protocols.
pub fn fixpoint_enumerate(program: &Program, ctx: &Context, budget: u64) -> Result<Enumeration, BuildError> {
    let decls = &*ctx.decls;
    let cap = state_cap();
    let mut approx = refine(program, ctx, cap)?;

    let mut locals: Vec<BTreeSet<LocalState>> = vec![BTreeSet::new(); decls.agent_count()];
    for s in &approx.upper {
        for (a, set) in locals.iter_mut().enumerate() {
            set.insert(s.local(a).clone());
        }
    }
    let mut cells: Vec<(usize, Formula, LocalState)> = Vec::new();
    let mut known: HashMap<(usize, Formula, LocalState), bool> = HashMap::new();
    for (a, set) in locals.iter().enumerate() {
        for l in set {
            let (_, open) = approx.choices(program, a, l);
            for k in open {
                cells.push((a, k, l.clone()));
            }
            for b in &program.agents[a].branches {
                for k in b.guard.outermost_knows() {
                    if let Some(v) = approx.cell(a, k, l) {
                        known.insert((a, k.clone(), l.clone()), v);
                    }
                }
            }
        }
    }
    if cells.len() >= 64 || (1u64 << cells.len()) > budget {
        return Ok(Enumeration::BudgetExceeded { cells: cells.len() });
    }
    let index: HashMap<&(usize, Formula, LocalState), usize> = cells.iter().enumerate().map(|(i, c)| (c, i)).collect();

    let mut found = BTreeSet::new();
    for mask in 0u64..(1u64 << cells.len()) {
        let mut tables = Vec::with_capacity(decls.agent_count());
        for (a, set) in locals.iter().enumerate() {
            let mut table = BTreeMap::new();
            for l in set {
                let acts = select_actions(decls, &program.agents[a], a, l, &mut |k| {
                    let key = (a, k.clone(), l.clone());
                    match index.get(&key) {
                        Some(&i) => mask & (1 << i) != 0,
                        None => known.get(&key).copied().unwrap_or(true),
                    }
                });
                table.insert(l.clone(), acts);
            }
            tables.push(table);
        }
        let (candidate, _) = build_system_with(&ProtocolTable { tables }, ctx, cap)?;
        if !found.contains(&candidate) && represents(program, ctx, &candidate)? {
            found.insert(candidate);
        }
    }
    Ok(Enumeration::Complete { fixpoints: found.into_iter().collect(), cells: cells.len() })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Classification {
    None,
    /// `exact` is false when uniqueness rests only on both iteration seeds
    /// agreeing, because enumeration was over budget.
    Unique { system: System, exact: bool },
    Multiple(Vec<System>),
    Unknown,
}

impl Classification {
    pub fn name(&self) -> &'static str {
        match self {
            Classification::None => "none",
            Classification::Unique { .. } => "unique",
            Classification::Multiple(_) => "multiple",
            Classification::Unknown => "unknown",
        }
    }

    /// The represented systems, when they are known.
    pub fn fixpoints(&self) -> Option<Vec<System>> {
        match self {
            Classification::None => Some(vec![]),
            Classification::Unique { system, .. } => Some(vec![system.clone()]),
            Classification::Multiple(v) => Some(v.clone()),
            Classification::Unknown => None,
        }
    }
}

pub fn classify(program: &Program, ctx: &Context, budget: u64) -> Result<Classification, BuildError> {
    match fixpoint_enumerate(program, ctx, budget)? {
        Enumeration::Complete { mut fixpoints, .. } => Ok(match fixpoints.len() {
            0 => Classification::None,
            1 => Classification::Unique { system: fixpoints.pop().unwrap(), exact: true },
            _ => Classification::Multiple(fixpoints),
        }),
        Enumeration::BudgetExceeded { .. } => {
            let a = fixpoint_iterate(program, ctx, &Seed::AllKnowFalse, DEFAULT_MAX_ITERS)?;
            let b = fixpoint_iterate(program, ctx, &Seed::AllKnowTrue, DEFAULT_MAX_ITERS)?;
            Ok(match (a, b) {
                (IterateOutcome::FixedPoint { system: x, .. }, IterateOutcome::FixedPoint { system: y, .. }) if x == y => {
                    Classification::Unique { system: x, exact: false }
                }
                (IterateOutcome::FixedPoint { system: x, .. }, IterateOutcome::FixedPoint { system: y, .. }) => {
                    let mut both = vec![x, y];
                    both.sort();
                    Classification::Multiple(both)
                }
                _ => Classification::Unknown,
            })
        }
    }
}
