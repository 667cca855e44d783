//! Constraint-driven phrase search: wells generate, constrain and explain
//! rephrasings of a selected span of text.

pub mod constraints;
pub mod exec;
pub mod lm;
pub mod matching;
pub mod model;
pub mod orchestrator;
pub mod phonology;
pub mod pos;
pub mod search;
pub mod views;
pub mod wells;

pub use exec::Execution;
