//! Scenario files: format, compilation, and the bundled examples.

mod bundle;
mod compile;
mod doc;

pub use bundle::{bundled, load, load_bundled, BUNDLE};
pub use compile::{compile, Scenario};
pub use doc::{BranchDoc, ContextDoc, DomainDoc, EnvProtocolDoc, FamilyDoc, InitDoc, NeighborDoc, OwnerDoc, ProgramDoc, ScenarioDoc, VarDoc};
