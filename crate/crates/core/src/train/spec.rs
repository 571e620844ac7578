use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Optimization schedule shared by node classification and link prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSpec {
    pub epochs: usize,
    pub lr: f64,
    pub weight_decay: f64,
    /// Loss weights for the output head and the two auxiliary heads.
    pub lambdas: [f64; 3],
    /// Epochs without validation improvement before stopping; setting it to
    /// `epochs` disables early stopping.
    pub patience: usize,
    pub seeds: Vec<u64>,
    /// Link prediction only: positive-class weight of the edge loss. `None`
    /// uses `min(negatives / positives, 20)` of the pairs scored each epoch,
    /// which is 1 with balanced sampling.
    pub pos_weight: Option<f64>,
}

impl TrainSpec {
    /// Defaults for semi-supervised node classification.
    pub fn node_classification() -> Self {
        Self {
            epochs: 200,
            lr: 0.01,
            weight_decay: 5e-4,
            lambdas: [1.0, 0.5, 0.5],
            patience: 30,
            seeds: (0..10).collect(),
            pos_weight: None,
        }
    }

    /// Defaults for graph-autoencoder link prediction.
    pub fn link_prediction() -> Self {
        Self {
            weight_decay: 0.0,
            ..Self::node_classification()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be positive"));
        }
        if !(self.lr > 0.0) || !(self.weight_decay >= 0.0) {
            return Err(Error::invalid("lr must be positive and weight_decay non-negative"));
        }
        if self.lambdas.iter().any(|&l| !(l >= 0.0)) || self.lambdas[0] <= 0.0 {
            return Err(Error::invalid("loss weights must be non-negative with lambda1 > 0"));
        }
        if self.patience == 0 || self.patience > self.epochs {
            return Err(Error::invalid("patience must lie in [1, epochs]"));
        }
        if self.seeds.is_empty() {
            return Err(Error::invalid("at least one seed is required"));
        }
        if let Some(w) = self.pos_weight {
            if !(w > 0.0) {
                return Err(Error::invalid("pos_weight must be positive"));
            }
        }
        Ok(())
    }
}
