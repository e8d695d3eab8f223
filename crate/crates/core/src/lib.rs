//! Continuous-time consensus under integral (non-instantaneous) reciprocity.
//!
//! * [`schedules`]: piecewise-constant weight schedules `a_ij(t)` and the
//!   canonical scenarios.
//! * [`dynamics`]: exact propagation and sampled transition matrices.
//! * [`reciprocity`]: cut-balance, mass bounds, pairwise reciprocity and
//!   the interval-partition builder.
//! * [`clustering`]: persistent-interaction graph and limit analysis.
//! * [`rendezvous`]: saturated planar robots with engage/reciprocate rules.
//! * [`cli`]: the pipeline behind the `recipro` binary.
//!
//! Indices are 0-based in the API and in JSON; CSV headers and
//! human-readable output use 1-based agent labels.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod clustering;
pub mod dynamics;
pub mod error;
pub mod reciprocity;
pub mod rendezvous;
pub mod schedules;
pub mod subset;

pub use error::{Error, Result};
pub use subset::AgentSet;
