//! Hierarchical multi-agent option learning on a deterministic kinematic
//! lane-change simulator.
//!
//! The crate is organized bottom-up:
//!
//! - [`nn`]: dense networks, reverse-mode gradients, Adam, target updates
//! - [`env`]: the two-lane kinematic traffic environment
//! - [`options`]: the four temporally extended actions and their semantics
//! - [`replay`]: FIFO experience buffers with uniform sampling
//! - [`low`]: per-option continuous-control skills (soft actor-critic)
//! - [`opponent`]: per-opponent option-prediction networks
//! - [`high`]: decentralized high-level actor-critic with opponent modeling
//! - [`dqn`]: independent deep Q-learning baseline over the same options
//! - [`metrics`], [`harness`]: evaluation reports, curves and the staged
//!   training entry points used by the CLI

pub mod error;
pub mod nn;
pub mod rng;

pub use error::{Error, Result};
