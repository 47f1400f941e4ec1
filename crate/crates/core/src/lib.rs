//! Thermal neural networks (TNN).
//!
//! A TNN is a recurrent state-space model with the structure of a lumped-parameter
//! thermal network (LPTN): each state is a node temperature, and the thermal
//! conductances, power losses and inverse capacitances that drive the node ODE
//! are produced by small learned function approximators.
//!
//! Modules:
//! - [`data`]: channel schema, measurement profiles, CSV ingestion, cross-validation folds
//! - [`nn`]: dense feed-forward networks with exact reverse-mode gradients
//! - [`tnn`]: the TNN cell, rollouts, truncated BPTT, conductance indexing and pruning masks
//! - [`train`]: optimizers, gradient clipping, epoch loop with early stopping
//! - [`plant`]: synthetic LPTN simulator used as ground truth
//! - [`analysis`]: metrics, conductance medians, pruning, detuned-initial-condition study, grid search

// `!(x > 0.0)` is used on purpose to reject NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod data;
pub mod error;
pub mod nn;
pub mod plant;
pub mod tnn;
pub mod train;

pub use error::{Error, Result};
