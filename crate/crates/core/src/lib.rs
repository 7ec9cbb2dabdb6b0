//! Knowledge-based programs over finite interpreted systems: building systems
//! from protocols, evaluating temporal-epistemic formulas, finding the systems
//! a knowledge-based program represents, and checking specifications.

pub mod error;
pub mod eval;
pub mod fixpoint;
pub mod formula;
pub mod kernel;
pub mod builder;
pub mod cli;
pub mod program;
pub mod report;
pub mod scenario;
pub mod spec;

pub use error::{BuildError, ModelError, ParseError, ProgramError, ScenarioError, SpecError};
pub use builder::{build_system, build_system_with, BuildStats};
pub use eval::{eval_formula, run_satisfies, valid_in_system, Evaluator};
pub use fixpoint::{classify, fixpoint_enumerate, fixpoint_iterate, represents, Classification, Enumeration, IterateOutcome, Seed};
pub use formula::{Atom, Cmp, Formula};
pub use kernel::*;
pub use program::{
    derive_protocol, eval_test, is_standard, validate_program, Action, ActionList, AgentProgram, Expr, GuardedBranch, Program, Protocol,
    ProtocolTable,
};
pub use spec::{
    is_strengthening, maximally_satisfies, monotonicity_report, program_satisfies, satisfies_given_init, InitCondition, MonotonicityReport, Notion, Spec,
    SpecKind, Verdict,
};
