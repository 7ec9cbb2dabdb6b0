//! Turning a [`ScenarioDoc`] into declarations, programs, formulas and contexts.

use std::collections::BTreeMap;
use std::sync::Arc;

use sha2::{Digest, Sha256};

use super::doc::{BranchDoc, DomainDoc, InitDoc, OwnerDoc, ProgramDoc, ScenarioDoc};
use crate::error::{ProgramError, ScenarioError};
use crate::formula::Formula;
use crate::kernel::{Admissibility, Context, ContextFamily, Declarations, EnvProtocol, GlobalState, Owner, VarDecl};
use crate::program::{validate_program, Action, ActionList, AgentProgram, GuardedBranch, Program};
use crate::spec::{InitCondition, InitSet};

/// A loaded, cross-checked scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub doc: ScenarioDoc,
    pub decls: Arc<Declarations>,
    pub programs: BTreeMap<String, Program>,
    pub formulas: BTreeMap<String, Formula>,
    pub inits: BTreeMap<String, InitCondition>,
    pub contexts: BTreeMap<String, Context>,
    pub families: BTreeMap<String, ContextFamily>,
    /// sha256 of the canonical document, hex.
    pub digest: String,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Scenario, ScenarioError> {
        compile(ScenarioDoc::from_json(text)?)
    }

    pub fn program(&self, name: &str) -> Result<&Program, ScenarioError> {
        lookup(&self.programs, "program", name)
    }

    pub fn formula(&self, name: &str) -> Result<&Formula, ScenarioError> {
        lookup(&self.formulas, "formula", name)
    }

    pub fn init(&self, name: &str) -> Result<&InitCondition, ScenarioError> {
        lookup(&self.inits, "initial condition", name)
    }

    pub fn context(&self, name: &str) -> Result<&Context, ScenarioError> {
        lookup(&self.contexts, "context", name)
    }

    pub fn family(&self, name: &str) -> Result<&ContextFamily, ScenarioError> {
        lookup(&self.families, "family", name)
    }

    /// Parses an ad hoc formula against this scenario's declarations.
    pub fn parse_formula(&self, src: &str) -> Result<Formula, ScenarioError> {
        Formula::parse(src, &self.decls).map_err(|e| ScenarioError::Syntax { context: "formula".into(), source: e })
    }
}

fn lookup<'a, T>(map: &'a BTreeMap<String, T>, kind: &str, name: &str) -> Result<&'a T, ScenarioError> {
    map.get(name).ok_or_else(|| {
        let known: Vec<&str> = map.keys().map(String::as_str).collect();
        ScenarioError::Unresolved(format!("{kind} `{name}` (known: {})", known.join(", ")))
    })
}

fn owner(doc: &OwnerDoc, var: &str) -> Result<Owner, ScenarioError> {
    match doc {
        OwnerDoc::Named(s) if s == "env" => Ok(Owner::Env),
        OwnerDoc::Agent(a) if *a >= 1 => Ok(Owner::Agent(a - 1)),
        _ => Err(ScenarioError::Invalid(format!("owner of `{var}` must be \"env\" or an agent number"))),
    }
}

fn domain(doc: &DomainDoc, var: &str) -> Result<Vec<i64>, ScenarioError> {
    match doc {
        DomainDoc::Values(v) => Ok(v.clone()),
        DomainDoc::Range { range: [lo, hi] } => Ok((*lo..=*hi).collect()),
        DomainDoc::Named(n) if matches!(n.as_str(), "naturals" | "integers" | "nat" | "int") => Err(ScenarioError::InfiniteDomain(var.to_string())),
        DomainDoc::Named(n) => Err(ScenarioError::Invalid(format!("unknown domain `{n}` for `{var}`"))),
    }
}

fn env_protocol(doc: &ScenarioDoc, name: Option<&str>) -> Result<EnvProtocol, ScenarioError> {
    let kind = match name {
        None => "noop",
        Some(n) => doc.env_protocols.get(n).map(|e| e.kind.as_str()).unwrap_or(n),
    };
    match kind {
        "noop" => Ok(EnvProtocol::NoOp),
        "lossy" => Ok(EnvProtocol::Lossy),
        other => Err(ScenarioError::Unresolved(format!("environment protocol `{other}`"))),
    }
}

fn admissibility(name: Option<&str>) -> Result<Admissibility, ScenarioError> {
    match name.unwrap_or("all") {
        "all" => Ok(Admissibility::All),
        "fair-delivery" => Ok(Admissibility::FairDelivery),
        other => Err(ScenarioError::Unresolved(format!("admissibility `{other}`"))),
    }
}

fn substitute(text: &str, bindings: &BTreeMap<String, String>) -> String {
    bindings.iter().fold(text.to_string(), |acc, (k, v)| acc.replace(&format!("{{{k}}}"), v))
}

/// One branch template with its bindings applied, before parsing.
struct RawBranch {
    guard: String,
    actions: Vec<String>,
    origin: String,
}

fn expand_actions(items: &[String], bindings: &BTreeMap<String, String>, named: &BTreeMap<String, Vec<String>>) -> Result<Vec<String>, ScenarioError> {
    let mut out = Vec::new();
    for a in items {
        match a.strip_prefix('@') {
            Some(n) => {
                let list = named.get(n).ok_or_else(|| ScenarioError::Unresolved(format!("action `{n}`")))?;
                out.extend(list.iter().map(|x| substitute(x, bindings)));
            }
            None => out.push(substitute(a, bindings)),
        }
    }
    Ok(out)
}

fn expand(template: &BranchDoc, agent: usize, decls: &Declarations, named: &BTreeMap<String, Vec<String>>) -> Result<Vec<RawBranch>, ScenarioError> {
    let mut base = BTreeMap::new();
    base.insert("i".to_string(), (agent + 1).to_string());
    let mut bindings = vec![base];
    if let Some(each) = &template.for_each {
        bindings = bindings
            .into_iter()
            .flat_map(|b| {
                each.iter().map(move |extra| {
                    let mut m = b.clone();
                    m.extend(extra.iter().map(|(k, v)| (k.clone(), v.clone())));
                    m
                })
            })
            .collect();
    }
    if let Some(var) = &template.for_values {
        let mut next = Vec::new();
        for b in bindings {
            let name = substitute(var, &b);
            let id = decls.var_id(&name).ok_or_else(|| ScenarioError::Unresolved(format!("variable `{name}` in for_values")))?;
            for v in &decls.var(id).domain {
                let mut m = b.clone();
                m.insert("v".into(), v.to_string());
                next.push(m);
            }
        }
        bindings = next;
    }
    let mut out = Vec::new();
    for b in &bindings {
        let guard = substitute(&template.guard, b);
        let actions = expand_actions(&template.actions, b, named)?;
        let origin = format!("agent {} guard `{guard}`", agent + 1);
        let Some(nb) = &template.for_neighbors else {
            out.push(RawBranch { guard, actions, origin });
            continue;
        };
        let neighbors: Vec<usize> = decls.neighbors(agent).into_iter().collect();
        let mut per_j: Vec<(String, Vec<String>)> = Vec::new();
        for j in &neighbors {
            let mut m = b.clone();
            m.insert("j".into(), (j + 1).to_string());
            per_j.push((substitute(&nb.guard, &m), expand_actions(&nb.actions, &m, named)?));
        }
        for mask in (0..1usize << neighbors.len()).rev() {
            let mut g = format!("({guard})");
            let mut acts = actions.clone();
            for (k, (cond, extra)) in per_j.iter().enumerate() {
                if mask & (1 << k) != 0 {
                    g.push_str(&format!(" & ({cond})"));
                    acts.extend(extra.iter().cloned());
                } else {
                    g.push_str(&format!(" & !({cond})"));
                }
            }
            out.push(RawBranch { guard: g, actions: acts, origin: origin.clone() });
        }
    }
    Ok(out)
}

fn compile_program(name: &str, doc: &ProgramDoc, scenario: &ScenarioDoc, decls: &Declarations) -> Result<Program, ScenarioError> {
    for key in doc.agents.keys() {
        match key.parse::<usize>() {
            Ok(a) if a >= 1 && a <= decls.agent_count() => {}
            _ => return Err(ScenarioError::Unresolved(format!("agent `{key}` in program `{name}`"))),
        }
    }
    let mut agents = Vec::with_capacity(decls.agent_count());
    for agent in 0..decls.agent_count() {
        let own = doc.agents.get(&(agent + 1).to_string()).into_iter().flatten();
        let mut raw = Vec::new();
        for t in own.chain(&doc.all_agents) {
            raw.extend(expand(t, agent, decls, &scenario.actions).map_err(|e| match e {
                ScenarioError::Unresolved(m) => ScenarioError::Unresolved(format!("{m} in program `{name}`")),
                other => other,
            })?);
        }
        let mut branches = Vec::with_capacity(raw.len());
        for r in raw {
            let syntax = |e| ScenarioError::Syntax { context: format!("program `{name}`, {}", r.origin), source: e };
            let guard = Formula::parse(&r.guard, decls).map_err(syntax)?;
            let mut actions = Vec::new();
            for a in &r.actions {
                actions.push(Action::parse(a, decls).map_err(syntax)?);
            }
            branches.push(GuardedBranch { guard, actions: ActionList::new(actions) });
        }
        agents.push(AgentProgram { branches });
    }
    let program = Program { name: name.to_string(), agents };
    validate_program(&program, decls).map_err(|e| match e {
        ProgramError::Invalid(msgs) => ScenarioError::Program(ProgramError::Invalid(msgs.into_iter().map(|m| format!("program `{name}`: {m}")).collect())),
        other => ScenarioError::Program(other),
    })?;
    Ok(program)
}

fn states(decls: &Declarations, rows: &[Vec<i64>], what: &str) -> Result<Vec<GlobalState>, ScenarioError> {
    rows.iter()
        .map(|row| {
            if row.len() != decls.vars.len() {
                return Err(ScenarioError::Invalid(format!("{what}: state {row:?} needs {} values", decls.vars.len())));
            }
            Ok(GlobalState::initial(decls, row)?)
        })
        .collect()
}

pub fn compile(doc: ScenarioDoc) -> Result<Scenario, ScenarioError> {
    let mut vars = Vec::with_capacity(doc.variables.len());
    for v in &doc.variables {
        let mut decl = VarDecl::new(v.name.clone(), domain(&v.domain, &v.name)?, owner(&v.owner, &v.name)?)?
            .saturating(v.saturating)
            .tracked(v.tracked);
        if v.visible_to.contains(&0) {
            return Err(ScenarioError::Invalid(format!("agents are numbered from 1 in visible_to of `{}`", v.name)));
        }
        decl = decl.visible_to(v.visible_to.iter().map(|a| a - 1).collect());
        if let Some(init) = &v.initial {
            decl = decl.with_initial(init.clone())?;
        }
        vars.push(decl);
    }
    let topology = match &doc.topology {
        Some(edges) => {
            if edges.iter().any(|[a, b]| *a == 0 || *b == 0) {
                return Err(ScenarioError::Invalid("topology agents are numbered from 1".into()));
            }
            Some(edges.iter().map(|[a, b]| (a - 1, b - 1)).collect())
        }
        None => None,
    };
    let mut decls = Declarations::new(doc.agents.clone(), vars, doc.message_log, doc.clock, topology)?;
    if let Some(values) = &doc.message_values {
        decls.message_values = values.clone();
    }
    let decls = Arc::new(decls);

    let mut programs = BTreeMap::new();
    for (name, p) in &doc.programs {
        programs.insert(name.clone(), compile_program(name, p, &doc, &decls)?);
    }
    let mut formulas = BTreeMap::new();
    for (name, src) in &doc.formulas {
        let f = Formula::parse(src, &decls).map_err(|e| ScenarioError::Syntax { context: format!("formula `{name}`"), source: e })?;
        formulas.insert(name.clone(), f);
    }
    let mut inits = BTreeMap::new();
    for (name, i) in &doc.init_conditions {
        let set = match i {
            InitDoc::Predicate { predicate } => {
                let f = Formula::parse(predicate, &decls).map_err(|e| ScenarioError::Syntax { context: format!("initial condition `{name}`"), source: e })?;
                InitCondition::predicate(name.clone(), f).map_err(|e| ScenarioError::Invalid(e.to_string()))?.set
            }
            InitDoc::States { states: rows } => InitSet::States(states(&decls, rows, &format!("initial condition `{name}`"))?),
        };
        inits.insert(name.clone(), InitCondition { name: name.clone(), set });
    }
    let mut contexts = BTreeMap::new();
    for (name, c) in &doc.contexts {
        let env = env_protocol(&doc, c.env.as_deref())?;
        let adm = admissibility(c.admissibility.as_deref())?;
        let family = ContextFamily::new(decls.clone(), env, adm);
        let initial = match (&c.init, &c.initial_states) {
            (Some(_), Some(_)) => return Err(ScenarioError::Invalid(format!("context `{name}` sets both init and initial_states"))),
            (Some(i), None) => lookup(&inits, "initial condition", i)?.states(&family),
            (None, Some(rows)) => states(&decls, rows, &format!("context `{name}`"))?,
            (None, None) => family.universe.clone(),
        };
        contexts.insert(name.clone(), family.context(initial));
    }
    let mut families = BTreeMap::new();
    for (name, f) in &doc.families {
        families.insert(name.clone(), ContextFamily::new(decls.clone(), env_protocol(&doc, f.env.as_deref())?, admissibility(f.admissibility.as_deref())?));
    }
    let digest = hex::encode(Sha256::digest(doc.to_json().as_bytes()));
    Ok(Scenario { doc, decls, programs, formulas, inits, contexts, families, digest })
}
