//! Reverse-mode differentiation over dense matrices.
//!
//! Operations are recorded on a [`Tape`] in execution order; each returns a
//! [`Var`] handle into the tape. [`Tape::backward`] walks the record in
//! reverse, accumulating gradients into every node that depends on a
//! parameter. Sparse propagation matrices enter as constants.

mod adam;
mod gradcheck;
mod init;
mod params;
mod tape;

pub use adam::{AdamConfig, AdamState};
pub use gradcheck::{gradcheck, GradcheckReport};
pub use init::glorot_uniform;
pub use params::{BoundParams, Param, ParamSet};
pub use tape::{OpKind, Tape, Var};
