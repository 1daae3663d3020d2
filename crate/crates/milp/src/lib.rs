//! Mixed-integer linear programming primitives: a dense bounded simplex,
//! best-bound branch-and-bound with lazy constraints, and LP-file I/O.

pub mod bnb;
pub mod error;
pub mod lpfile;
pub mod model;
pub mod simplex;

pub use bnb::{solve, solve_relaxation, solve_with_lazy, LazyConstraints, NoLazy, SolveOptions, SolveResult, SolveStatus};
pub use error::{LpParseError, ModelError, SolveError};
pub use lpfile::{export_lp, parse_lp};
pub use model::{LinConstraint, MilpModel, Sense, Var, VarId, VarKind};
pub use simplex::LpOutcome;
