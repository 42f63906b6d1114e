//! Exact inference for discrete Bayesian networks, built on a small kernel of
//! probabilistic channels.
//!
//! A [`Channel`] is a row-stochastic matrix between finite [`Space`]s; a
//! [`State`] is a distribution and a [`Predicate`] a fuzzy truth assignment.
//! Channels push states forward (`c >> w`, [`Channel::transform_state`]) and
//! pull predicates back (`c << q`, [`Channel::transform_pred`]), and states are
//! conditioned on predicates by [`State::update`].
//!
//! A Bayesian network ([`BayesNet`], loaded from BIF files) is answered in
//! three moves:
//!
//! 1. [`prune`](BayesNet::prune) it down to the nodes that can influence the
//!    query,
//! 2. [`stretch()`] it into a linear [`Chain`] of channel stages along a
//!    randomized topological order, picked by width over a number of symbolic
//!    dry runs ([`dry_run_select`]),
//! 3. run a forward state-transformation pass and a backward
//!    predicate-transformation pass along the chain, folding evidence in where
//!    its node enters the chain ([`infer`]).
//!
//! The [`oracle`] module holds an independent brute-force reference (full
//! joint enumeration) that everything else is tested against.

mod bif;
mod channel;
mod error;
pub mod inference;
mod net;
pub mod oracle;
mod predicate;
mod space;
mod state;
pub mod stretch;

pub use bif::{parse_bif, serialize_bif};
pub use channel::Channel;
pub use error::{Error, Result};
pub use inference::{infer, infer_report, InferConfig, InferOutcome, InferReport, Query};
pub use net::{topological_order, BayesNet, NodeDef};
pub use predicate::Predicate;
pub use space::{Space, Var};
pub use state::State;
pub use stretch::{chain_width, dry_run_select, dry_run_widths, stretch, Chain, Stage, StageOp};

/// Constructor tolerance: states and channel rows must sum to 1 within this.
pub const NORM_TOL: f64 = 1e-9;

/// Input tolerance for CPT rows read from BIF files (rounded decimals are
/// renormalized exactly on ingest).
pub const BIF_ROW_TOL: f64 = 1e-6;

#[cfg(test)]
pub(crate) mod testutil;
