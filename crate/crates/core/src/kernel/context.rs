//! Contexts `(P_e, Γ₀, τ, Ψ)` and families of contexts that differ only in Γ₀.

use std::collections::BTreeSet;
use std::sync::Arc;

use super::decl::Declarations;
use super::state::{initial_universe, GlobalState};

/// The environment's protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum EnvProtocol {
    /// The environment does nothing; channels are reliable.
    #[default]
    NoOp,
    /// Each round the environment may drop any subset of directed channels.
    Lossy,
}

impl EnvProtocol {
    pub fn name(&self) -> &'static str {
        match self {
            EnvProtocol::NoOp => "noop",
            EnvProtocol::Lossy => "lossy",
        }
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self, EnvProtocol::NoOp)
    }
}

/// A named, decidable predicate on lasso runs (Ψ).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Admissibility {
    #[default]
    All,
    /// Every message sent in some round of the cycle is delivered in some round
    /// of the cycle.
    FairDelivery,
}

impl Admissibility {
    pub fn name(&self) -> &'static str {
        match self {
            Admissibility::All => "all",
            Admissibility::FairDelivery => "fair-delivery",
        }
    }

    /// `Ψ′ ⊆ Ψ` for the built-in predicates.
    pub fn is_subset_of(&self, other: &Admissibility) -> bool {
        self == other || *other == Admissibility::All
    }
}

#[derive(Debug, Clone)]
pub struct Context {
    pub decls: Arc<Declarations>,
    pub env: EnvProtocol,
    pub initial: BTreeSet<GlobalState>,
    pub admissibility: Admissibility,
}

impl Context {
    pub fn new(decls: Arc<Declarations>, env: EnvProtocol, initial: impl IntoIterator<Item = GlobalState>, admissibility: Admissibility) -> Self {
        Context { decls, env, initial: initial.into_iter().collect(), admissibility }
    }

    /// Same context with a different set of initial states.
    pub fn with_initial(&self, initial: impl IntoIterator<Item = GlobalState>) -> Self {
        Context { initial: initial.into_iter().collect(), ..self.clone() }
    }

    /// Same transition function (same declarations).
    pub fn same_dynamics(&self, other: &Context) -> bool {
        Arc::ptr_eq(&self.decls, &other.decls) || *self.decls == *other.decls
    }

    /// `self ⊑ other`: same environment and transitions, fewer initial states,
    /// fewer admissible runs.
    pub fn is_below(&self, other: &Context) -> bool {
        self.same_dynamics(other)
            && self.env == other.env
            && self.initial.is_subset(&other.initial)
            && self.admissibility.is_subset_of(&other.admissibility)
    }
}

/// `Γ(P_e, τ, Ψ)`: all contexts sharing these components, indexed by Γ₀.
#[derive(Debug, Clone)]
pub struct ContextFamily {
    pub decls: Arc<Declarations>,
    pub env: EnvProtocol,
    pub admissibility: Admissibility,
    pub universe: Vec<GlobalState>,
}

impl ContextFamily {
    pub fn new(decls: Arc<Declarations>, env: EnvProtocol, admissibility: Admissibility) -> Self {
        let universe = initial_universe(&decls);
        ContextFamily { decls, env, admissibility, universe }
    }

    pub fn context(&self, initial: impl IntoIterator<Item = GlobalState>) -> Context {
        Context::new(self.decls.clone(), self.env, initial, self.admissibility)
    }
}
