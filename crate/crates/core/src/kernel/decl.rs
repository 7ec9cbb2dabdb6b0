//! Variable declarations and the layout that maps them into local states.

use std::collections::{BTreeSet, HashMap};

use crate::error::ModelError;

/// Who owns (and may assign) a variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Owner {
    Env,
    Agent(usize),
}

/// A finite-domain program variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarDecl {
    pub name: String,
    /// Sorted, distinct, nonempty.
    pub domain: Vec<i64>,
    /// Out-of-range arithmetic clamps to the domain bounds; otherwise it wraps.
    pub saturating: bool,
    /// Keep a change counter (capped at 2) in the global state.
    pub tracked: bool,
    pub owner: Owner,
    /// Agents (other than the owner) whose local state carries a copy.
    pub visible_to: Vec<usize>,
    /// Values allowed in initial states; defaults to the whole domain.
    pub initial: Vec<i64>,
}

impl VarDecl {
    pub fn new(name: impl Into<String>, domain: Vec<i64>, owner: Owner) -> Result<Self, ModelError> {
        let name = name.into();
        let mut sorted = domain.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if domain.is_empty() {
            return Err(ModelError::EmptyDomain(name));
        }
        if sorted != domain {
            return Err(ModelError::UnsortedDomain(name));
        }
        Ok(VarDecl {
            name,
            initial: domain.clone(),
            domain,
            saturating: false,
            tracked: false,
            owner,
            visible_to: Vec::new(),
        })
    }

    pub fn saturating(mut self, on: bool) -> Self {
        self.saturating = on;
        self
    }

    pub fn tracked(mut self, on: bool) -> Self {
        self.tracked = on;
        self
    }

    pub fn visible_to(mut self, agents: Vec<usize>) -> Self {
        self.visible_to = agents;
        self
    }

    pub fn with_initial(mut self, values: Vec<i64>) -> Result<Self, ModelError> {
        if values.iter().any(|v| !self.domain.contains(v)) {
            return Err(ModelError::OutOfDomain { var: self.name.clone(), value: values[0] });
        }
        let mut values = values;
        values.sort_unstable();
        values.dedup();
        self.initial = values;
        Ok(self)
    }

    pub fn min(&self) -> i64 {
        self.domain[0]
    }

    pub fn max(&self) -> i64 {
        *self.domain.last().unwrap()
    }

    /// Brings an arithmetic result back into the domain.
    pub fn normalize(&self, value: i64) -> i64 {
        if self.domain.binary_search(&value).is_ok() {
            return value;
        }
        if self.saturating {
            if value > self.max() {
                return self.max();
            }
            if value < self.min() {
                return self.min();
            }
            // inside the hull but a gap value: round down to the nearest member
            return *self.domain.iter().rev().find(|v| **v <= value).unwrap();
        }
        if value > self.max() {
            self.min()
        } else if value < self.min() {
            self.max()
        } else {
            *self.domain.iter().rev().find(|v| **v <= value).unwrap()
        }
    }

    pub fn is_visible_to(&self, agent: usize) -> bool {
        self.owner == Owner::Agent(agent) || self.visible_to.contains(&agent)
    }
}

pub type VarId = usize;

/// Where each variable lives inside a global state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    /// Env-owned variables, in declaration order.
    pub env_slots: Vec<VarId>,
    /// Per agent: own variables first, then visible copies.
    pub agent_slots: Vec<Vec<VarId>>,
    /// Per agent, var id -> slot in that agent's vars vector.
    pub agent_slot_of: Vec<Vec<Option<usize>>>,
    /// Var id -> slot in the env vector (env-owned only).
    pub env_slot_of: Vec<Option<usize>>,
    /// Tracked variables in declaration order.
    pub tracked: Vec<VarId>,
}

/// Everything the transition function and the evaluators need to know about a
/// scenario's state space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Declarations {
    pub agents: Vec<String>,
    pub vars: Vec<VarDecl>,
    pub message_log: bool,
    /// Synchronous clock cap, when clocks are enabled.
    pub clock: Option<u32>,
    /// Undirected edges between agents (0-based). `None` means fully connected.
    pub topology: Option<Vec<(usize, usize)>>,
    /// Payload values a message can carry; used only to enumerate local-state universes.
    pub message_values: Vec<i64>,
    pub layout: Layout,
    by_name: HashMap<String, VarId>,
}

impl Declarations {
    pub fn new(
        agents: Vec<String>,
        vars: Vec<VarDecl>,
        message_log: bool,
        clock: Option<u32>,
        topology: Option<Vec<(usize, usize)>>,
    ) -> Result<Self, ModelError> {
        let n = agents.len();
        if n == 0 {
            return Err(ModelError::NoAgents);
        }
        let mut by_name = HashMap::new();
        for (id, v) in vars.iter().enumerate() {
            if v.name == "clock" {
                return Err(ModelError::ReservedName(v.name.clone()));
            }
            if by_name.insert(v.name.clone(), id).is_some() {
                return Err(ModelError::DuplicateVar(v.name.clone()));
            }
            if let Owner::Agent(a) = v.owner {
                if a >= n {
                    return Err(ModelError::UnknownAgent(a + 1));
                }
            }
            if let Some(a) = v.visible_to.iter().find(|a| **a >= n) {
                return Err(ModelError::UnknownAgent(a + 1));
            }
        }
        if let Some(edges) = &topology {
            if let Some((a, b)) = edges.iter().find(|(a, b)| *a >= n || *b >= n || a == b) {
                return Err(ModelError::BadEdge(a + 1, b + 1));
            }
        }

        let env_slots: Vec<VarId> = (0..vars.len()).filter(|&v| vars[v].owner == Owner::Env).collect();
        let mut env_slot_of = vec![None; vars.len()];
        for (slot, &v) in env_slots.iter().enumerate() {
            env_slot_of[v] = Some(slot);
        }
        let mut agent_slots = Vec::with_capacity(n);
        let mut agent_slot_of = Vec::with_capacity(n);
        for a in 0..n {
            let mut slots: Vec<VarId> = (0..vars.len()).filter(|&v| vars[v].owner == Owner::Agent(a)).collect();
            slots.extend((0..vars.len()).filter(|&v| vars[v].owner != Owner::Agent(a) && vars[v].visible_to.contains(&a)));
            let mut slot_of = vec![None; vars.len()];
            for (slot, &v) in slots.iter().enumerate() {
                slot_of[v] = Some(slot);
            }
            agent_slots.push(slots);
            agent_slot_of.push(slot_of);
        }
        let tracked = (0..vars.len()).filter(|&v| vars[v].tracked).collect();

        Ok(Declarations {
            agents,
            vars,
            message_log,
            clock,
            topology,
            message_values: vec![0, 1],
            layout: Layout { env_slots, agent_slots, agent_slot_of, env_slot_of, tracked },
            by_name,
        })
    }

    pub fn agent_count(&self) -> usize {
        self.agents.len()
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.by_name.get(name).copied()
    }

    pub fn var(&self, id: VarId) -> &VarDecl {
        &self.vars[id]
    }

    pub fn neighbors(&self, agent: usize) -> BTreeSet<usize> {
        match &self.topology {
            Some(edges) => edges
                .iter()
                .filter_map(|&(a, b)| {
                    if a == agent {
                        Some(b)
                    } else if b == agent {
                        Some(a)
                    } else {
                        None
                    }
                })
                .collect(),
            None => (0..self.agent_count()).filter(|&b| b != agent).collect(),
        }
    }

    pub fn is_neighbor(&self, a: usize, b: usize) -> bool {
        a != b && self.neighbors(a).contains(&b)
    }

    /// Slot of the var holding change counter `var`, if tracked.
    pub fn counter_slot(&self, var: VarId) -> Option<usize> {
        self.layout.tracked.iter().position(|&t| t == var)
    }
}
