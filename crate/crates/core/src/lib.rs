//! Trace-driven lab for online file caching with rental costs and zapping.

pub mod adversary;
pub mod baselines;
pub mod bounds;
pub mod cilp;
pub mod covering;
pub mod error;
pub mod gen;
pub mod harness;
pub mod meta;
pub mod model;
pub mod oracle;
pub mod rational;
pub mod registry;
pub mod rng;
pub mod sim;
pub mod ski;
pub mod trace_io;
pub mod worklog;

pub use error::{Error, Result};
pub use rational::Rat;
