//! Training loops, evaluation metrics and multi-seed experiments.

mod experiment;
mod link;
mod metrics;
mod node;
mod spec;

pub use experiment::{run_experiment, ExperimentReport, ExperimentTask, SeedOutcome, SeedResult, SeedStatus, Summary};
pub use link::{link_scores, train_link_predictor, LinkOutcome};
pub use metrics::{accuracy, auc, history_csv, mean_std, EpochRecord, RunMetrics};
pub use node::{evaluate_accuracy, train_node_classifier, NodeOutcome};
pub use spec::TrainSpec;

use crate::autodiff::{gradcheck, GradcheckReport, Tape, Var};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::models::{build_variant, Forward, GraphInputs, ModelSpec, Task};
use crate::rng;

/// `Σ λ_k · loss(head_k)` over the heads the model produced, in
/// output/aux order.
pub(crate) fn weighted_loss(
    tape: &mut Tape,
    forward: &Forward,
    lambdas: [f64; 3],
    mut head_loss: impl FnMut(&mut Tape, Var) -> Result<Var>,
) -> Result<Var> {
    let mut total: Option<Var> = None;
    for (head, &lambda) in forward.heads().zip(&lambdas) {
        if lambda == 0.0 {
            continue;
        }
        let l = head_loss(tape, head)?;
        let l = tape.scale(l, lambda);
        total = Some(match total {
            Some(t) => tape.add(t, l)?,
            None => l,
        });
    }
    Ok(total.expect("lambda1 > 0 guarantees one term"))
}

/// Finite-difference check of the full node-classification objective
/// (forward pass plus weighted head losses on the training mask) at a
/// seeded initialization. Dropout is off.
pub fn check_gradients(
    graph: &Graph,
    model_spec: &ModelSpec,
    lambdas: [f64; 3],
    eps: f64,
    seed: u64,
) -> Result<GradcheckReport> {
    if model_spec.task != Task::NodeClassification {
        return Err(Error::invalid("gradient check uses the node-classification objective"));
    }
    let inputs = GraphInputs::new(model_spec.base, graph.adjacency(), graph.features())?;
    let (model, params) = build_variant(model_spec, &mut rng::seeded(seed))?;
    gradcheck(&params, eps, |tape, bound| {
        let forward = model.forward(tape, &inputs, bound, None)?;
        weighted_loss(tape, &forward, lambdas, |t, head| {
            t.masked_softmax_cross_entropy(head, graph.labels(), graph.train_mask())
        })
    })
}
