//! Report building and experiment drivers behind the `onfair` binary.

pub mod families;
pub mod figures;
pub mod guarantees;
pub mod harness;
pub mod reports;
