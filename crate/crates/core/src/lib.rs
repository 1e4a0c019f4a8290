//! Free group words, automorphisms, truncated geodesic currents, marked metric
//! roses and the dynamics of the action of Out(F_N) on them.

pub mod automorphism;
pub mod cli;
pub mod config;
pub mod currents;
pub mod document;
pub mod dynamics;
pub mod error;
pub mod freegroup;
pub mod report;
pub mod trees;

pub use error::{Error, Result};
