//! Local and global states.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::decl::{Declarations, Owner, VarId};
use crate::error::ModelError;

/// A message log entry: (peer agent, payload).
pub type LogEntry = (usize, i64);

/// What one agent (or the environment) sees.
///
/// `vars` is laid out according to [`super::decl::Layout`]: for an agent, its own
/// variables followed by copies of the variables it can observe.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct LocalState {
    pub vars: Vec<i64>,
    pub sent: BTreeSet<LogEntry>,
    pub recv: BTreeSet<LogEntry>,
    pub clock: Option<u32>,
}

/// A message in flight during the round that produced a state. Only recorded
/// under a lossy environment, where admissibility needs it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Transit {
    pub from: usize,
    pub to: usize,
    pub payload: i64,
    pub delivered: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GlobalState {
    pub env: LocalState,
    pub locals: Vec<LocalState>,
    /// One counter per tracked variable, in `Layout::tracked` order; capped at 2.
    pub counters: Vec<u8>,
    pub transits: BTreeSet<Transit>,
}

impl GlobalState {
    /// Builds an initial state (empty logs, zero clocks and counters) from one
    /// value per declared variable.
    pub fn initial(decls: &Declarations, valuation: &[i64]) -> Result<Self, ModelError> {
        assert_eq!(valuation.len(), decls.vars.len(), "valuation arity");
        for (id, &v) in valuation.iter().enumerate() {
            let d = decls.var(id);
            if d.domain.binary_search(&v).is_err() {
                return Err(ModelError::OutOfDomain { var: d.name.clone(), value: v });
            }
        }
        let clock = decls.clock.map(|_| 0);
        let env = LocalState {
            vars: decls.layout.env_slots.iter().map(|&v| valuation[v]).collect(),
            clock,
            ..LocalState::default()
        };
        let locals = decls
            .layout
            .agent_slots
            .iter()
            .map(|slots| LocalState { vars: slots.iter().map(|&v| valuation[v]).collect(), clock, ..LocalState::default() })
            .collect();
        Ok(GlobalState { env, locals, counters: vec![0; decls.layout.tracked.len()], transits: BTreeSet::new() })
    }

    /// The authoritative value of a variable (read from its owner's component).
    pub fn value(&self, decls: &Declarations, var: VarId) -> i64 {
        match decls.var(var).owner {
            Owner::Env => self.env.vars[decls.layout.env_slot_of[var].expect("env slot")],
            Owner::Agent(a) => self.locals[a].vars[decls.layout.agent_slot_of[a][var].expect("own slot")],
        }
    }

    pub fn valuation(&self, decls: &Declarations) -> Vec<i64> {
        (0..decls.vars.len()).map(|v| self.value(decls, v)).collect()
    }

    pub fn local(&self, agent: usize) -> &LocalState {
        &self.locals[agent]
    }

    pub fn counter(&self, decls: &Declarations, var: VarId) -> Option<u8> {
        decls.counter_slot(var).map(|s| self.counters[s])
    }

    pub fn clock(&self) -> Option<u32> {
        self.env.clock
    }

    /// One-line rendering, e.g. `x=0 | 1: y=2 sent{(2,0)}`.
    pub fn render(&self, decls: &Declarations) -> String {
        let mut out = String::new();
        let env: Vec<String> = decls
            .layout
            .env_slots
            .iter()
            .zip(&self.env.vars)
            .map(|(&v, val)| format!("{}={}", decls.var(v).name, val))
            .collect();
        out.push_str(if env.is_empty() { "-" } else { "" });
        out.push_str(&env.join(" "));
        if let Some(c) = self.clock() {
            let _ = write!(out, " clock={c}");
        }
        for (a, local) in self.locals.iter().enumerate() {
            let _ = write!(out, " | {}:", a + 1);
            for (&v, val) in decls.layout.agent_slots[a].iter().zip(&local.vars) {
                if decls.var(v).owner == Owner::Agent(a) {
                    let _ = write!(out, " {}={}", decls.var(v).name, val);
                }
            }
            if !local.sent.is_empty() {
                let _ = write!(out, " sent{}", render_log(&local.sent));
            }
            if !local.recv.is_empty() {
                let _ = write!(out, " recv{}", render_log(&local.recv));
            }
        }
        let changed: Vec<String> = decls
            .layout
            .tracked
            .iter()
            .zip(&self.counters)
            .filter(|(_, c)| **c > 0)
            .map(|(&v, c)| format!("{}:{}", decls.var(v).name, c))
            .collect();
        if !changed.is_empty() {
            let _ = write!(out, " | changes {}", changed.join(" "));
        }
        for t in &self.transits {
            let _ = write!(out, " | {}->{}:{}{}", t.from + 1, t.to + 1, t.payload, if t.delivered { "" } else { " dropped" });
        }
        out
    }
}

fn render_log(log: &BTreeSet<LogEntry>) -> String {
    let items: Vec<String> = log.iter().map(|(p, v)| format!("({},{})", p + 1, v)).collect();
    format!("{{{}}}", items.join(","))
}

/// All initial states over the declared initial value sets, in canonical order.
pub fn initial_universe(decls: &Declarations) -> Vec<GlobalState> {
    let mut out = Vec::new();
    let mut valuation = vec![0; decls.vars.len()];
    fn rec(decls: &Declarations, idx: usize, valuation: &mut Vec<i64>, out: &mut Vec<GlobalState>) {
        if idx == decls.vars.len() {
            out.push(GlobalState::initial(decls, valuation).expect("initial values lie in domain"));
            return;
        }
        for &v in &decls.vars[idx].initial {
            valuation[idx] = v;
            rec(decls, idx + 1, valuation, out);
        }
    }
    rec(decls, 0, &mut valuation, &mut out);
    out.sort();
    out
}
