//! Outage and coverage simulation for system-information broadcast in
//! cell-free massive MIMO.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod deployment;
pub mod error;
pub mod grouping;
pub mod harness;
#[cfg(feature = "oracle")]
pub mod linklevel;
pub mod metrics;
pub mod ostbc;
pub mod power;
pub mod propagation;
pub mod registry;
pub mod rng;
pub mod snr;
pub mod stats;
#[cfg(feature = "oracle")]
pub mod validation;

pub use error::{Error, Result};
