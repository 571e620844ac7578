use std::collections::HashSet;
use std::sync::Arc;

use rand::Rng as _;

use crate::autodiff::{AdamConfig, AdamState, ParamSet, Tape};
use crate::dense::Matrix;
use crate::error::{Error, Result};
use crate::graph::{EdgeSplit, Graph};
use crate::models::{build_variant, gae_decode, GraphInputs, Model, ModelSpec, Task};
use crate::rng::{self, Rng};

use super::metrics::{auc, EpochRecord, RunMetrics};
use super::{weighted_loss, TrainSpec};

#[derive(Debug, Clone)]
pub struct LinkOutcome {
    pub model: Model,
    pub params: ParamSet,
    /// Output-head embeddings of the restored parameters.
    pub embeddings: Matrix,
    pub metrics: RunMetrics,
}

/// Dot-product scores of `pairs` under embeddings `z`.
pub fn link_scores(z: &Matrix, pairs: &[(usize, usize)]) -> Vec<f64> {
    pairs
        .iter()
        .map(|&(i, j)| z.row(i).iter().zip(z.row(j)).map(|(a, b)| a * b).sum())
        .collect()
}

fn labeled_pairs(pos: &[(usize, usize)], neg: &[(usize, usize)]) -> (Vec<(usize, usize)>, Vec<bool>) {
    let pairs = pos.iter().chain(neg).copied().collect();
    let labels = std::iter::repeat_n(true, pos.len())
        .chain(std::iter::repeat_n(false, neg.len()))
        .collect();
    (pairs, labels)
}

/// Uniform non-edges of `edges` (as `i < j` pairs), `count` of them, drawn
/// with replacement.
fn sample_negatives(n: usize, edges: &HashSet<(usize, usize)>, count: usize, rng: &mut Rng) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a == b {
            continue;
        }
        let pair = (a.min(b), a.max(b));
        if !edges.contains(&pair) {
            out.push(pair);
        }
    }
    out
}

fn embed(model: &Model, params: &ParamSet, inputs: &GraphInputs) -> Result<Matrix> {
    let mut tape = Tape::new();
    let bound = params.bind(&mut tape);
    let forward = model.forward(&mut tape, inputs, &bound, None)?;
    Ok(tape.value(forward.output).clone())
}

/// Trains a graph autoencoder on the split's training edges.
///
/// Every epoch scores all training edges against an equal number of freshly
/// sampled non-edges with the binary cross-entropy on `z_i · z_j`, weighting
/// each head by its λ. Validation AUC on the fixed held-out pairs selects
/// the returned parameters; test AUC is reported for them.
pub fn train_link_predictor(
    graph: &Graph,
    split: &EdgeSplit,
    model_spec: &ModelSpec,
    train_spec: &TrainSpec,
    seed: u64,
) -> Result<LinkOutcome> {
    train_spec.validate()?;
    if model_spec.task != Task::LinkPrediction {
        return Err(Error::invalid("model spec is not configured for link prediction"));
    }
    let n = graph.n();
    if split.train_adjacency.n_rows() != n {
        return Err(Error::shape("train_link_predictor", n, split.train_adjacency.n_rows()));
    }
    let train_pos = split.train_edges();
    if train_pos.is_empty()
        || split.val_pos.is_empty()
        || split.val_neg.is_empty()
        || split.test_pos.is_empty()
        || split.test_neg.is_empty()
    {
        return Err(Error::invalid(
            "degenerate edge split: every pair set must be non-empty",
        ));
    }
    let edge_set: HashSet<(usize, usize)> = train_pos.iter().copied().collect();
    if edge_set.len() >= n * (n - 1) / 2 {
        return Err(Error::invalid(
            "degenerate edge split: the training graph has no non-edges",
        ));
    }
    // Each epoch scores every positive against as many sampled negatives.
    let n_neg = train_pos.len();
    let pos_weight = train_spec
        .pos_weight
        .unwrap_or_else(|| (n_neg as f64 / train_pos.len() as f64).min(20.0));

    let inputs = GraphInputs::new(model_spec.base, &split.train_adjacency, graph.features())?;
    let mut init_rng = rng::derive(seed, 0);
    let mut dropout_rng = rng::derive(seed, 1);
    let mut sample_rng = rng::derive(seed, 2);
    let (model, mut params) = build_variant(model_spec, &mut init_rng)?;
    let mut adam = AdamState::new(AdamConfig {
        weight_decay: train_spec.weight_decay,
        ..AdamConfig::with_lr(train_spec.lr)
    });

    let (val_pairs, val_labels) = labeled_pairs(&split.val_pos, &split.val_neg);
    let val_targets: Vec<f64> = val_labels.iter().map(|&l| f64::from(u8::from(l))).collect();
    let val_pairs = Arc::new(val_pairs);
    let mut targets = vec![1.0; train_pos.len()];
    targets.resize(train_pos.len() + n_neg, 0.0);

    let mut history = Vec::with_capacity(train_spec.epochs);
    let mut best: Option<(f64, f64, usize, ParamSet)> = None;
    let mut since_best = 0;
    for epoch in 0..train_spec.epochs {
        let mut pairs = train_pos.clone();
        pairs.extend(sample_negatives(n, &edge_set, n_neg, &mut sample_rng));
        let pairs = Arc::new(pairs);

        let mut tape = Tape::new();
        let bound = params.bind(&mut tape);
        let forward = model.forward(&mut tape, &inputs, &bound, Some(&mut dropout_rng))?;
        let loss = weighted_loss(&mut tape, &forward, train_spec.lambdas, |t, z| {
            let scores = gae_decode(t, z, &pairs)?;
            t.bce_with_logits(scores, &targets, pos_weight)
        })?;
        let train_loss = tape.scalar(loss);
        if !train_loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        tape.backward(loss)?;
        adam.step(&mut params, &bound.grads(&tape))?;

        let mut tape = Tape::new();
        let bound = params.bind(&mut tape);
        let forward = model.forward(&mut tape, &inputs, &bound, None)?;
        let scores = gae_decode(&mut tape, forward.output, &val_pairs)?;
        let val_loss_var = tape.bce_with_logits(scores, &val_targets, 1.0)?;
        let val_loss = tape.scalar(val_loss_var);
        let val_auc = auc(tape.value(scores).data(), &val_labels)?;
        history.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
            val_metric: val_auc,
        });
        if best.as_ref().is_none_or(|b| val_auc > b.1) {
            best = Some((val_loss, val_auc, epoch, params.clone()));
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= train_spec.patience {
                break;
            }
        }
    }

    let (best_val_loss, val_metric, best_epoch, params) = best.expect("at least one epoch ran");
    let embeddings = embed(&model, &params, &inputs)?;
    let (test_pairs, test_labels) = labeled_pairs(&split.test_pos, &split.test_neg);
    let test_metric = auc(&link_scores(&embeddings, &test_pairs), &test_labels)?;
    Ok(LinkOutcome {
        model,
        params,
        embeddings,
        metrics: RunMetrics {
            history,
            best_epoch,
            best_val_loss,
            val_metric,
            test_metric,
        },
    })
}
