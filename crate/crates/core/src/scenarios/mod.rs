//! Scenario simulators.

pub mod cartpole;
pub mod chain;
pub mod crosswalk;
pub mod encounter;
pub mod seed;
