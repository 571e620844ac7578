//! Model architectures assembled from tape primitives.
//!
//! Every model is a stack of graph convolutions `Â·(H·W)`. The interaction
//! family runs two independent branches of `K` convolutions over the same
//! input, multiplies their final pre-activations elementwise, and merges the
//! product with the first branch through a skip connection:
//!
//! ```text
//! h_agg      = branch(X; W₁..W_K)
//! h̄_agg      = branch(X; W′₁..W′_K)
//! h_ir       = h_agg ⊙ h̄_agg
//! h_air      = relu(h_agg) + relu(h_ir)
//! z_air      = Â·(h_air·W_air)       (used for prediction)
//! z_agg      = Â·(h_agg·W_agg)       (auxiliary)
//! z̄_agg      = Â·(h̄_agg·W̄_agg)       (auxiliary)
//! ```

mod layers;
mod spec;
mod variants;

pub use layers::{air_combine, branch_forward, gcn_layer, prediction_head, sparse_dropout};
pub use spec::{Base, ModelSpec, Task, Variant};
pub use variants::{build_variant, gae_decode, AirTrace, Forward, GraphInputs, Model};
