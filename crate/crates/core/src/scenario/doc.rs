//! The on-disk `.kbp.json` scenario format.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::ScenarioError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub aliases: Vec<String>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    /// Agent names; agents are numbered from 1 in this order.
    pub agents: Vec<String>,
    pub variables: Vec<VarDoc>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub message_log: bool,
    /// Clock cap; enables a synchronous clock in every local state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clock: Option<u32>,
    /// Undirected edges between 1-based agents; omitted means fully connected.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology: Option<Vec<[usize; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message_values: Option<Vec<i64>>,
    /// Named action lists, referenced from branches as `@name`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub actions: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub env_protocols: BTreeMap<String, EnvProtocolDoc>,
    #[serde(default)]
    pub programs: BTreeMap<String, ProgramDoc>,
    #[serde(default)]
    pub formulas: BTreeMap<String, String>,
    #[serde(default)]
    pub init_conditions: BTreeMap<String, InitDoc>,
    #[serde(default)]
    pub contexts: BTreeMap<String, ContextDoc>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub families: BTreeMap<String, FamilyDoc>,
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarDoc {
    pub name: String,
    pub owner: OwnerDoc,
    pub domain: DomainDoc,
    #[serde(default, skip_serializing_if = "is_false")]
    pub saturating: bool,
    #[serde(default, skip_serializing_if = "is_false")]
    pub tracked: bool,
    /// 1-based agents that observe a copy of this variable.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub visible_to: Vec<usize>,
    /// Values allowed in initial states; defaults to the whole domain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<i64>>,
}

/// `"env"` or a 1-based agent number.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OwnerDoc {
    Agent(usize),
    Named(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DomainDoc {
    Values(Vec<i64>),
    Range { range: [i64; 2] },
    /// Only useful for reporting a clear error on infinite domains.
    Named(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvProtocolDoc {
    /// `noop` or `lossy`.
    pub kind: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ProgramDoc {
    /// Branches per 1-based agent, keyed by agent number.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub agents: BTreeMap<String, Vec<BranchDoc>>,
    /// Branch templates instantiated for every agent with `{i}` bound.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub all_agents: Vec<BranchDoc>,
}

/// A guarded branch, possibly a template. Placeholders `{name}` are replaced
/// textually: `{i}` is the agent, `for_each` supplies explicit bindings,
/// `for_values` binds `{v}` to each value of a variable, and `for_neighbors`
/// binds `{j}` to neighbors of the agent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchDoc {
    pub guard: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub actions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub for_each: Option<Vec<BTreeMap<String, String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub for_values: Option<String>,
    /// Expands into one branch per subset S of the neighbors: the guard is
    /// strengthened with `cond_j` for j in S and `!cond_j` for the others, and
    /// the per-neighbor actions are added for j in S.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub for_neighbors: Option<NeighborDoc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeighborDoc {
    pub guard: String,
    #[serde(default)]
    pub actions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitDoc {
    Predicate { predicate: String },
    /// Valuations in variable declaration order.
    States { states: Vec<Vec<i64>> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ContextDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub env: Option<String>,
    /// Name of an initial condition; omitted means every initial state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_states: Option<Vec<Vec<i64>>>,
    /// `all` or `fair-delivery`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub admissibility: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct FamilyDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub env: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub admissibility: Option<String>,
}

impl ScenarioDoc {
    pub fn from_json(text: &str) -> Result<ScenarioDoc, ScenarioError> {
        serde_json::from_str(text).map_err(|e| ScenarioError::Json { line: e.line(), column: e.column(), message: e.to_string() })
    }

    /// Canonical pretty-printed form.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario documents serialize")
    }
}
