//! Clipped online mirror descent for heavy-tailed multi-armed bandits.
//!
//! The crate is organised bottom-up:
//!
//! - [`rng`] and [`dist`]: seeded randomness and heavy-tailed loss laws
//!   with certified moment bounds.
//! - [`clip`]: scalar and norm clipping, the clipped importance-weighted
//!   estimator and Monte-Carlo checks of the clipping lemmas.
//! - [`tsallis`]: the Tsallis-entropy mirror step with implicit
//!   normalization.
//! - [`policy`]: INF-clip, Skip-INF and a truncated-mean robust UCB behind
//!   one [`policy::Policy`] trait, plus the simulation loop.
//! - [`envs`]: stochastic arm environments and noisy function environments.
//! - [`zeroth`]: gradient-free clipped mirror descent for nonlinear bandits
//!   and its parameter planners.
//! - [`bench`]: the experiment harness, CSV output and the verification
//!   suite behind the CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod bench;
pub mod clip;
pub mod dist;
pub mod envs;
pub mod error;
pub mod policy;
pub mod quadrature;
pub mod rng;
pub mod tsallis;
pub mod zeroth;

pub use error::{Error, Result};
