//! Graph representation learning with explicit neighborhood interaction.
//!
//! Node representations are built from two aggregation branches whose
//! elementwise product models pairwise neighbor interaction; the product is
//! merged with the plain aggregation through a skip connection. The crate
//! contains everything needed to train and evaluate such models on
//! desk-scale graphs:
//!
//! - [`graph`]: CSR storage, adjacency normalization, bundle I/O, synthetic
//!   graphs and edge splits for link prediction.
//! - [`autodiff`]: a small reverse-mode tape over dense matrices, Adam and a
//!   finite-difference gradient checker.
//! - [`models`]: GCN / SAGE-mean bases, the interaction model and its
//!   ablations, a linear baseline and the graph autoencoder.
//! - [`train`]: training loops, metrics and multi-seed experiments.
//! - [`analysis`]: numeric checks on the Taylor structure of the sigmoid.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod autodiff;
pub mod dense;
pub mod error;
pub mod graph;
pub mod models;
pub mod rng;
pub mod train;

pub use dense::Matrix;
pub use error::{Error, Result};
