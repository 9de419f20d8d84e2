//! Blend-based lower bounds on prior-independent approximation ratios.

pub mod blackwell;
pub mod blends;
pub mod bounds;
pub mod cli;
pub mod curves;
pub mod dist;
pub mod error;
pub mod expr;
pub mod generators;
pub mod mechanisms;
pub mod pilp;
pub mod quad;
pub mod repro;
pub mod report;
pub mod simplex;

pub use dist::{Atom, Distribution, Objective, SupportInterval, Transform};
pub use error::{Error, Result};
