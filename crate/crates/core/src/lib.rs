//! Certified dual bounds for districting objectives of the form
//! `Σ_j φ(ratio_j)` with `φ` a probit curve.

pub mod breakpoints;
pub mod cli;
pub mod contiguity;
pub mod error;
pub mod graycode;
pub mod instance;
pub mod knapsack;
pub mod oracle;
pub mod prebounds;
pub mod probit;
pub mod relax;

pub use error::{Error, Result};
pub use instance::{grid_instance, Assignment, Field, Instance, Node};
pub use probit::{ObjectiveKind, ObjectiveSpec, ProbitCurve};
