//! Core library for the online fair division laboratory.
//!
//! Items arrive one at a time and a mechanism must irrevocably hand
//! each to an agent (or discard it) knowing only the bids seen so far.
//! This crate provides the instance model, the randomized allocation
//! mechanisms, advice tapes that inject offline knowledge, exact and
//! sampled evaluation engines, offline benchmarks, and property
//! checkers for strategy-proofness, envy, and Pareto efficiency.

pub mod advice;
pub mod allocation;
pub mod axioms;
pub mod error;
pub mod evaluation;
pub mod generators;
pub mod instance;
pub mod mechanisms;
pub mod offline;
pub mod rational;
pub mod welfare;

pub use advice::{AdviceEncoding, AdviceTape, OraclePolicy};
pub use allocation::{Allocation, AllocationDistribution, Assignee, AssignmentMatrix};
pub use axioms::Verdict;
pub use error::{Error, Result};
pub use evaluation::{evaluate, Engine, EngineConfig, Evaluation, McReport};
pub use instance::{BidProfile, Instance, UtilityRegime};
pub use mechanisms::{MechanismKind, MechanismSpec};
pub use rational::Rational;
pub use welfare::{Objective, RatioReport, RatioValue, WelfareReport};
