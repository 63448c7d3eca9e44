//! Exact, resource-bounded algorithmic information between probability
//! measures, relative to fixed prefix-free reference machines.
//!
//! Every quantity this crate produces is computed by exhaustively running
//! a concrete, serializable machine up to explicit program-length and
//! step bounds, and every reported value carries those bounds. Conserved
//! quantities (information never grows under randomized processing) are
//! exposed as measurable gaps rather than assumed inequalities.

pub mod bits;
pub mod bounds;
pub mod cantor;
pub mod codec;
pub mod discrete;
pub mod fixtures;
pub mod logdomain;
pub mod machine;
pub mod rat_serde;
pub mod space;
pub mod suites;
pub mod oracle;
pub mod quantum;

pub use bits::Bits;
pub use machine::{MachineSpec, RunOutcome, RunStatus};
