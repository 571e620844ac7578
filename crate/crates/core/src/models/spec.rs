use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Neighborhood aggregator of the underlying convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Base {
    /// Symmetric normalization `D̃^{-1/2} Ã D̃^{-1/2}`.
    Gcn,
    /// Row-stochastic mean `D̃^{-1} Ã`.
    SageMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    /// Plain (K+1)-layer convolution stack.
    Base,
    /// Two disentangled branches joined by a Hadamard interaction.
    Air,
    /// Same parameters as `Air`, with the product replaced by a sum.
    Dp,
    /// One branch interacting with itself.
    SelfIr,
    /// Propagation without activations: `Â^{K+1}·X·W`.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Task {
    NodeClassification,
    LinkPrediction,
}

macro_rules! keyword_enum {
    ($ty:ty, $what:literal, { $($variant:path => $kw:literal),+ $(,)? }) => {
        impl $ty {
            pub fn keyword(self) -> &'static str {
                match self { $($variant => $kw),+ }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.keyword())
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($kw => Ok($variant),)+
                    other => Err(Error::invalid(format!(
                        concat!("unknown ", $what, " {:?} (expected one of: {})"),
                        other,
                        [$($kw),+].join(", ")
                    ))),
                }
            }
        }
    };
}

keyword_enum!(Base, "base", { Base::Gcn => "gcn", Base::SageMean => "sage-mean" });
keyword_enum!(Variant, "variant", {
    Variant::Base => "base",
    Variant::Air => "air",
    Variant::Dp => "dp",
    Variant::SelfIr => "self-ir",
    Variant::Linear => "linear",
});
keyword_enum!(Task, "task", { Task::NodeClassification => "node-clf", Task::LinkPrediction => "link-pred" });

/// Architecture description.
///
/// `k_layers` is the number of convolutions per branch; the underlying base
/// model has `k_layers + 1` layers including its output layer, so the usual
/// two-layer GCN is `k_layers = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub base: Base,
    pub variant: Variant,
    pub k_layers: usize,
    pub input_dim: usize,
    pub hidden_dim: usize,
    /// Class count for node classification, embedding width for link
    /// prediction.
    pub output_dim: usize,
    pub dropout: f64,
    pub task: Task,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        if self.k_layers == 0 {
            return Err(Error::invalid("k_layers must be at least 1"));
        }
        if self.input_dim == 0 || self.hidden_dim == 0 || self.output_dim == 0 {
            return Err(Error::invalid("dimensions must be positive"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::invalid(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        Ok(())
    }

    /// Closed-form scalar parameter count (no biases).
    pub fn parameter_count(&self) -> usize {
        let (m, d, c, k) = (self.input_dim, self.hidden_dim, self.output_dim, self.k_layers);
        let branch = m * d + (k - 1) * d * d;
        match self.variant {
            Variant::Base => branch + d * c,
            Variant::Air | Variant::Dp => 2 * branch + 3 * d * c,
            Variant::SelfIr => branch + 2 * d * c,
            Variant::Linear => m * c,
        }
    }

    /// Number of prediction heads the variant trains.
    pub fn head_count(&self) -> usize {
        match self.variant {
            Variant::Base | Variant::Linear => 1,
            Variant::SelfIr => 2,
            Variant::Air | Variant::Dp => 3,
        }
    }
}
