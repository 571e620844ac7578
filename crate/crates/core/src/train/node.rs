use crate::autodiff::{AdamConfig, AdamState, ParamSet, Tape};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::models::{build_variant, GraphInputs, Model, ModelSpec, Task};
use crate::rng;

use super::metrics::{accuracy, EpochRecord, RunMetrics};
use super::{weighted_loss, TrainSpec};

#[derive(Debug, Clone)]
pub struct NodeOutcome {
    pub model: Model,
    pub params: ParamSet,
    pub metrics: RunMetrics,
}

/// Accuracy of the prediction head on the nodes selected by `mask`.
pub fn evaluate_accuracy(
    model: &Model,
    params: &ParamSet,
    inputs: &GraphInputs,
    labels: &[i64],
    mask: &[bool],
) -> Result<f64> {
    let mut tape = Tape::new();
    let bound = params.bind(&mut tape);
    let forward = model.forward(&mut tape, inputs, &bound, None)?;
    accuracy(tape.value(forward.output), labels, mask)
}

fn eval_loss_and_accuracy(model: &Model, params: &ParamSet, inputs: &GraphInputs, graph: &Graph) -> Result<(f64, f64)> {
    let mut tape = Tape::new();
    let bound = params.bind(&mut tape);
    let forward = model.forward(&mut tape, inputs, &bound, None)?;
    let loss = tape.masked_softmax_cross_entropy(forward.output, graph.labels(), graph.val_mask())?;
    let acc = accuracy(tape.value(forward.output), graph.labels(), graph.val_mask())?;
    Ok((tape.scalar(loss), acc))
}

/// Trains a node classifier on the graph's training mask.
///
/// Minimizes `λ₁·L(z_air) + λ₂·L(z_agg) + λ₃·L(z̄_agg)` (heads a variant lacks
/// are skipped) with Adam. After every step the output head's validation
/// cross-entropy is measured; the parameters with the lowest value are kept
/// and returned, and training stops after `patience` epochs without
/// improvement. Test accuracy comes from the output head only.
pub fn train_node_classifier(
    graph: &Graph,
    model_spec: &ModelSpec,
    train_spec: &TrainSpec,
    seed: u64,
) -> Result<NodeOutcome> {
    train_spec.validate()?;
    if model_spec.task != Task::NodeClassification {
        return Err(Error::invalid("model spec is not configured for node classification"));
    }
    if model_spec.output_dim != graph.n_classes() {
        return Err(Error::shape(
            "train_node_classifier",
            graph.n_classes(),
            model_spec.output_dim,
        ));
    }
    for mask in [graph.train_mask(), graph.val_mask(), graph.test_mask()] {
        if !mask.contains(&true) {
            return Err(Error::EmptyMask);
        }
    }

    let inputs = GraphInputs::new(model_spec.base, graph.adjacency(), graph.features())?;
    let mut init_rng = rng::derive(seed, 0);
    let mut dropout_rng = rng::derive(seed, 1);
    let (model, mut params) = build_variant(model_spec, &mut init_rng)?;
    let mut adam = AdamState::new(AdamConfig {
        weight_decay: train_spec.weight_decay,
        ..AdamConfig::with_lr(train_spec.lr)
    });

    let mut history = Vec::with_capacity(train_spec.epochs);
    let mut best: Option<(f64, f64, usize, ParamSet)> = None;
    let mut since_best = 0;
    for epoch in 0..train_spec.epochs {
        let mut tape = Tape::new();
        let bound = params.bind(&mut tape);
        let forward = model.forward(&mut tape, &inputs, &bound, Some(&mut dropout_rng))?;
        let loss = weighted_loss(&mut tape, &forward, train_spec.lambdas, |t, head| {
            t.masked_softmax_cross_entropy(head, graph.labels(), graph.train_mask())
        })?;
        let train_loss = tape.scalar(loss);
        if !train_loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        tape.backward(loss)?;
        adam.step(&mut params, &bound.grads(&tape))?;

        let (val_loss, val_acc) = eval_loss_and_accuracy(&model, &params, &inputs, graph)?;
        if !val_loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        history.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
            val_metric: val_acc,
        });
        if best.as_ref().is_none_or(|b| val_loss < b.0) {
            best = Some((val_loss, val_acc, epoch, params.clone()));
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= train_spec.patience {
                break;
            }
        }
    }

    let (best_val_loss, val_metric, best_epoch, params) = best.expect("at least one epoch ran");
    let test_metric = evaluate_accuracy(&model, &params, &inputs, graph.labels(), graph.test_mask())?;
    Ok(NodeOutcome {
        model,
        params,
        metrics: RunMetrics {
            history,
            best_epoch,
            best_val_loss,
            val_metric,
            test_metric,
        },
    })
}
