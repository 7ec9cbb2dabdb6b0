//! Core value model: declarations, states, lasso runs, systems and contexts.

pub mod context;
pub mod decl;
pub mod lasso;
pub mod state;
pub mod system;

pub use context::{Admissibility, Context, ContextFamily, EnvProtocol};
pub use decl::{Declarations, Layout, Owner, VarDecl, VarId};
pub use lasso::{canonicalize, LassoRun};
pub use state::{initial_universe, GlobalState, LocalState, LogEntry, Transit};
pub use system::{indistinguishable_points, representative_points, Point, PointIndex, System};
