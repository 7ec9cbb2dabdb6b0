//! Standard and knowledge-based programs, and the protocols derived from them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{ModelError, ParseError, ProgramError};
use crate::eval::Evaluator;
use crate::formula::Formula;
use crate::kernel::{Declarations, GlobalState, LocalState, Owner, System, VarId};

/// Right-hand side of an assignment or a message payload.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    Const(i64),
    /// `name + offset`
    Var { var: VarId, name: String, offset: i64 },
}

impl Expr {
    pub fn eval(&self, decls: &Declarations, s: &GlobalState) -> i64 {
        match self {
            Expr::Const(v) => *v,
            Expr::Var { var, offset, .. } => s.value(decls, *var) + offset,
        }
    }

    fn var(&self) -> Option<VarId> {
        match self {
            Expr::Var { var, .. } => Some(*var),
            Expr::Const(_) => None,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(v) => write!(f, "{v}"),
            Expr::Var { name, offset: 0, .. } => write!(f, "{name}"),
            Expr::Var { name, offset, .. } if *offset > 0 => write!(f, "{name}+{offset}"),
            Expr::Var { name, offset, .. } => write!(f, "{name}-{}", -offset),
        }
    }
}

/// A primitive action term.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Assign { var: VarId, name: String, expr: Expr },
    /// Send to agent `to` (0-based).
    Send { to: usize, payload: Expr },
    NoOp,
}

impl Action {
    /// Parses `y := y+1`, `x2 := 1`, `send(3, x1)` or `noop`.
    pub fn parse(src: &str, decls: &Declarations) -> Result<Action, ParseError> {
        let err = |msg: String| ParseError { message: msg, column: 1, source_text: src.to_string() };
        let text = src.trim();
        if text == "noop" || text == "no-op" {
            return Ok(Action::NoOp);
        }
        if let Some(rest) = text.strip_prefix("send") {
            let inner = rest
                .trim()
                .strip_prefix('(')
                .and_then(|r| r.strip_suffix(')'))
                .ok_or_else(|| err("expected send(agent, payload)".into()))?;
            let (to, payload) = inner.split_once(',').ok_or_else(|| err("expected send(agent, payload)".into()))?;
            let to: usize = to.trim().parse().map_err(|_| err(format!("bad agent `{}`", to.trim())))?;
            if to == 0 || to > decls.agent_count() {
                return Err(err(format!("unknown agent {to}")));
            }
            return Ok(Action::Send { to: to - 1, payload: parse_expr(payload.trim(), decls).map_err(err)? });
        }
        let (lhs, rhs) = text.split_once(":=").ok_or_else(|| err("expected `var := expr`, `send(..)` or `noop`".into()))?;
        let name = lhs.trim();
        let var = decls.var_id(name).ok_or_else(|| err(format!("unknown variable `{name}`")))?;
        Ok(Action::Assign { var, name: name.to_string(), expr: parse_expr(rhs.trim(), decls).map_err(err)? })
    }
}

fn parse_expr(text: &str, decls: &Declarations) -> Result<Expr, String> {
    if let Ok(v) = text.parse::<i64>() {
        return Ok(Expr::Const(v));
    }
    let (name, offset) = if let Some((n, k)) = text.split_once('+') {
        (n.trim(), k.trim().parse::<i64>().map_err(|_| format!("bad offset in `{text}`"))?)
    } else if let Some((n, k)) = text.split_once('-') {
        (n.trim(), -k.trim().parse::<i64>().map_err(|_| format!("bad offset in `{text}`"))?)
    } else {
        (text, 0)
    };
    let var = decls.var_id(name).ok_or_else(|| format!("unknown variable `{name}`"))?;
    Ok(Expr::Var { var, name: name.to_string(), offset })
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Assign { name, expr, .. } => write!(f, "{name} := {expr}"),
            Action::Send { to, payload } => write!(f, "send({}, {payload})", to + 1),
            Action::NoOp => write!(f, "noop"),
        }
    }
}

/// The actions one agent performs in one round. Empty means no-op.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ActionList(pub Vec<Action>);

impl ActionList {
    pub fn new(actions: impl IntoIterator<Item = Action>) -> Self {
        ActionList(actions.into_iter().filter(|a| *a != Action::NoOp).collect())
    }

    pub fn noop() -> Self {
        ActionList(Vec::new())
    }

    pub fn is_noop(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for ActionList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "noop");
        }
        let parts: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        write!(f, "{}", parts.join("; "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GuardedBranch {
    pub guard: Formula,
    pub actions: ActionList,
}

/// `do forever` over branches; the first branch whose guard holds fires, and
/// no-op is the fallthrough.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AgentProgram {
    pub branches: Vec<GuardedBranch>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub name: String,
    pub agents: Vec<AgentProgram>,
}

impl Program {
    pub fn is_standard(&self) -> bool {
        is_standard(self)
    }

    /// The program with every outermost knowledge test replaced by a constant.
    pub fn with_knows_fixed(&self, value: bool) -> Program {
        Program {
            name: format!("{}[K={value}]", self.name),
            agents: self
                .agents
                .iter()
                .map(|ap| AgentProgram {
                    branches: ap
                        .branches
                        .iter()
                        .map(|b| GuardedBranch { guard: b.guard.with_knows_fixed(value), actions: b.actions.clone() })
                        .collect(),
                })
                .collect(),
        }
    }
}

/// True iff no guard contains a knowledge test.
pub fn is_standard(program: &Program) -> bool {
    program.agents.iter().all(|a| a.branches.iter().all(|b| !b.guard.has_know()))
}

/// Checks that guards lie in the knowledge-test fragment and actions are well
/// typed against the declarations and topology.
pub fn validate_program(program: &Program, decls: &Declarations) -> Result<(), ProgramError> {
    let mut errors = Vec::new();
    if program.agents.len() != decls.agent_count() {
        errors.push(format!("program has {} agent programs for {} agents", program.agents.len(), decls.agent_count()));
    }
    for (agent, ap) in program.agents.iter().enumerate() {
        for (bi, branch) in ap.branches.iter().enumerate() {
            let at = format!("agent {} branch {}", agent + 1, bi + 1);
            if branch.guard.has_temporal() {
                errors.push(format!("{at}: temporal operator in knowledge test `{}`", branch.guard));
            }
            for k in branch.guard.outermost_knows() {
                if let Formula::Know(j, _) = k {
                    if *j != agent {
                        errors.push(format!("{at}: outermost test `{k}` is about agent {}", j + 1));
                    }
                }
            }
            let probe = LocalState {
                vars: vec![0; decls.layout.agent_slots.get(agent).map_or(0, Vec::len)],
                clock: decls.clock.map(|_| 0),
                ..LocalState::default()
            };
            for atom in branch.guard.bare_atoms() {
                if agent < decls.agent_count() && atom.eval_local(decls, agent, &probe).is_none() {
                    errors.push(format!("{at}: test `{atom}` is not determined by the agent's local state"));
                }
            }
            for action in &branch.actions.0 {
                if let Err(e) = check_action(action, agent, decls) {
                    errors.push(format!("{at}: {e}"));
                }
            }
        }
    }
    if errors.is_empty() {
        Ok(())
    } else {
        Err(ProgramError::Invalid(errors))
    }
}

fn check_action(action: &Action, agent: usize, decls: &Declarations) -> Result<(), String> {
    let visible = |e: &Expr| match e.var() {
        Some(v) if !decls.var(v).is_visible_to(agent) => Err(format!("`{}` is not visible to agent {}", decls.var(v).name, agent + 1)),
        _ => Ok(()),
    };
    match action {
        Action::NoOp => Ok(()),
        Action::Assign { var, name, expr } => {
            if decls.var(*var).owner != Owner::Agent(agent) {
                return Err(format!("agent {} cannot assign `{name}`", agent + 1));
            }
            visible(expr)
        }
        Action::Send { to, payload } => {
            if !decls.message_log {
                return Err("send requires message logging".into());
            }
            if !decls.is_neighbor(agent, *to) {
                return Err(format!("send to undeclared neighbor {}", to + 1));
            }
            visible(payload)
        }
    }
}

/// A (deterministic) protocol: what an agent does in a local state. `None`
/// means the protocol is undefined there.
pub trait Protocol {
    fn actions(&self, agent: usize, local: &LocalState) -> Option<ActionList>;
}

/// A protocol as an explicit finite table.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ProtocolTable {
    pub tables: Vec<BTreeMap<LocalState, ActionList>>,
}

impl ProtocolTable {
    pub fn len(&self) -> usize {
        self.tables.iter().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// True if both tables prescribe the same actions on every local state they share.
    pub fn agrees_with_on_common(&self, other: &ProtocolTable) -> bool {
        self.tables.iter().zip(&other.tables).all(|(a, b)| a.iter().all(|(l, acts)| b.get(l).is_none_or(|o| o == acts)))
    }
}

impl Protocol for ProtocolTable {
    fn actions(&self, agent: usize, local: &LocalState) -> Option<ActionList> {
        self.tables.get(agent)?.get(local).cloned()
    }
}

/// Evaluates a guard at a local state: bare atoms from the local state (absent
/// ones count as false), outermost knowledge tests through `know`.
pub fn eval_guard(decls: &Declarations, agent: usize, local: &LocalState, guard: &Formula, know: &mut dyn FnMut(&Formula) -> bool) -> bool {
    match guard {
        Formula::Atom(a) => a.eval_local(decls, agent, local).unwrap_or(false),
        Formula::Know(..) => know(guard),
        Formula::Not(a) => !eval_guard(decls, agent, local, a, know),
        Formula::And(a, b) => eval_guard(decls, agent, local, a, know) && eval_guard(decls, agent, local, b, know),
        Formula::Or(a, b) => eval_guard(decls, agent, local, a, know) || eval_guard(decls, agent, local, b, know),
        Formula::Implies(a, b) => !eval_guard(decls, agent, local, a, know) || eval_guard(decls, agent, local, b, know),
        // excluded by validation
        Formula::Always(_) | Formula::Eventually(_) | Formula::Next(_) | Formula::Until(..) => false,
    }
}

/// First-match selection given a way to decide knowledge tests.
pub fn select_actions(decls: &Declarations, program: &AgentProgram, agent: usize, local: &LocalState, know: &mut dyn FnMut(&Formula) -> bool) -> ActionList {
    program
        .branches
        .iter()
        .find(|b| eval_guard(decls, agent, local, &b.guard, know))
        .map(|b| b.actions.clone())
        .unwrap_or_default()
}

/// A standard program read directly as a protocol (defined on every local state).
pub struct StandardProtocol<'p> {
    pub decls: &'p Declarations,
    pub program: &'p Program,
}

impl Protocol for StandardProtocol<'_> {
    fn actions(&self, agent: usize, local: &LocalState) -> Option<ActionList> {
        Some(select_actions(self.decls, &self.program.agents[agent], agent, local, &mut |_| false))
    }
}

/// Outcome of a knowledge test, with a flag for local states the system never visits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TestOutcome {
    pub value: bool,
    pub off_system: bool,
}

/// Evaluates `test` for `agent` in local state `local` with respect to `system`.
/// Off-system local states make every knowledge test vacuously true.
pub fn eval_test(decls: &Declarations, system: &System, agent: usize, local: &LocalState, test: &Formula) -> bool {
    eval_test_diag(decls, system, agent, local, test).value
}

pub fn eval_test_diag(decls: &Declarations, system: &System, agent: usize, local: &LocalState, test: &Formula) -> TestOutcome {
    let mut ev = Evaluator::new(decls, system);
    let witness = ev.index().same_local(agent, local).first().map(|&i| ev.index().points[i]);
    match witness {
        Some(p) => TestOutcome { value: ev.at(p, test), off_system: false },
        None => TestOutcome { value: eval_guard(decls, agent, local, test, &mut |_| true), off_system: true },
    }
}

/// `Pg^R`: the protocol derived from `program` given `system`.
///
/// Knowledge-based programs are tabulated on the local states occurring in the
/// system; standard programs on the whole local-state universe.
pub fn derive_protocol(program: &Program, decls: &Declarations, system: Option<&System>) -> Result<ProtocolTable, ProgramError> {
    if is_standard(program) {
        let mut tables = Vec::with_capacity(decls.agent_count());
        let proto = StandardProtocol { decls, program };
        for agent in 0..decls.agent_count() {
            let table = local_universe(decls, agent, 100_000)?
                .into_iter()
                .map(|l| {
                    let acts = proto.actions(agent, &l).unwrap();
                    (l, acts)
                })
                .collect();
            tables.push(table);
        }
        return Ok(ProtocolTable { tables });
    }
    let system = system.ok_or_else(|| ProgramError::SystemRequired(program.name.clone()))?;
    Ok(derive_on_system(program, decls, system))
}

/// Tabulates `Pg^R` on the local states occurring in `system`.
pub(crate) fn derive_on_system(program: &Program, decls: &Declarations, system: &System) -> ProtocolTable {
    let mut ev = Evaluator::new(decls, system);
    let mut tables = Vec::with_capacity(decls.agent_count());
    for (agent, ap) in program.agents.iter().enumerate() {
        let mut reps: BTreeMap<LocalState, usize> = BTreeMap::new();
        for (i, p) in ev.index().points.iter().enumerate() {
            reps.entry(system.state(*p).local(agent).clone()).or_insert(i);
        }
        let mut table = BTreeMap::new();
        for (local, idx) in reps {
            let acts = select_actions(decls, ap, agent, &local, &mut |k| ev.label(k)[idx]);
            table.insert(local, acts);
        }
        tables.push(table);
    }
    ProtocolTable { tables }
}

/// Every well-formed local state of `agent`: all variable values, all message
/// logs over neighbors and `message_values`, all clock values.
pub fn local_universe(decls: &Declarations, agent: usize, cap: usize) -> Result<Vec<LocalState>, ModelError> {
    let slots = &decls.layout.agent_slots[agent];
    let mut entries: Vec<(usize, i64)> = Vec::new();
    if decls.message_log {
        for n in decls.neighbors(agent) {
            for &v in &decls.message_values {
                entries.push((n, v));
            }
        }
    }
    let log_count: usize = 1usize.checked_shl(entries.len() as u32).unwrap_or(usize::MAX);
    let clocks: Vec<Option<u32>> = match decls.clock {
        Some(max) => (0..=max).map(Some).collect(),
        None => vec![None],
    };
    let mut size: usize = clocks.len();
    for &v in slots {
        size = size.saturating_mul(decls.var(v).domain.len());
    }
    size = size.saturating_mul(log_count).saturating_mul(log_count);
    if size > cap {
        return Err(ModelError::UniverseTooLarge { agent: agent + 1, cap });
    }
    let logs: Vec<BTreeSet<(usize, i64)>> =
        (0..log_count).map(|mask| entries.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, e)| *e).collect()).collect();
    let mut valuations: Vec<Vec<i64>> = vec![vec![]];
    for &v in slots {
        valuations = valuations
            .into_iter()
            .flat_map(|pre| decls.var(v).domain.iter().map(move |&x| [pre.clone(), vec![x]].concat()))
            .collect();
    }
    let mut out = Vec::with_capacity(size);
    for vars in &valuations {
        for sent in &logs {
            for recv in &logs {
                for &clock in &clocks {
                    out.push(LocalState { vars: vars.clone(), sent: sent.clone(), recv: recv.clone(), clock });
                }
            }
        }
    }
    out.sort();
    Ok(out)
}
