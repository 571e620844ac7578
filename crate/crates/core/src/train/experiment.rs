use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph::{EdgeSplit, Graph};
use crate::models::ModelSpec;
use crate::rng::RNG_ALGORITHM;

use super::link::train_link_predictor;
use super::metrics::{mean_std, EpochRecord};
use super::node::train_node_classifier;
use super::TrainSpec;

/// Data for one experiment.
#[derive(Debug, Clone, Copy)]
pub enum ExperimentTask<'a> {
    NodeClassification,
    LinkPrediction(&'a EdgeSplit),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub test_metric: f64,
    pub val_metric: f64,
    pub best_epoch: usize,
    pub epochs_run: usize,
    #[serde(skip)]
    pub history: Vec<EpochRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    #[serde(flatten)]
    pub outcome: SeedStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedStatus {
    Ok(SeedOutcome),
    Failed(String),
}

impl SeedResult {
    pub fn ok(&self) -> Option<&SeedOutcome> {
        match &self.outcome {
            SeedStatus::Ok(o) => Some(o),
            SeedStatus::Failed(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: Option<f64>,
    /// Sample standard deviation; absent with fewer than two successful seeds.
    pub std: Option<f64>,
    pub successful_seeds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    /// `accuracy` or `auc`.
    pub metric: String,
    pub seeds: Vec<SeedResult>,
    pub test: Summary,
    pub val: Summary,
    pub rng: String,
    pub wall_clock_seconds: f64,
}

fn summarize(values: &[f64]) -> Summary {
    let (mean, std) = mean_std(values);
    Summary {
        mean,
        std,
        successful_seeds: values.len(),
    }
}

/// Trains once per seed (in parallel) and aggregates test and validation
/// metrics. A failing seed is recorded and excluded from the summary.
pub fn run_experiment(
    graph: &Graph,
    model_spec: &ModelSpec,
    train_spec: &TrainSpec,
    task: ExperimentTask<'_>,
) -> Result<ExperimentReport> {
    train_spec.validate()?;
    model_spec.validate()?;
    let start = Instant::now();
    let seeds: Vec<SeedResult> = train_spec
        .seeds
        .par_iter()
        .map(|&seed| {
            let metrics = match task {
                ExperimentTask::NodeClassification => {
                    train_node_classifier(graph, model_spec, train_spec, seed).map(|o| o.metrics)
                }
                ExperimentTask::LinkPrediction(split) => {
                    train_link_predictor(graph, split, model_spec, train_spec, seed).map(|o| o.metrics)
                }
            };
            let outcome = match metrics {
                Ok(m) => SeedStatus::Ok(SeedOutcome {
                    test_metric: m.test_metric,
                    val_metric: m.val_metric,
                    best_epoch: m.best_epoch,
                    epochs_run: m.history.len(),
                    history: m.history,
                }),
                Err(e) => SeedStatus::Failed(e.to_string()),
            };
            SeedResult { seed, outcome }
        })
        .collect();
    let test: Vec<f64> = seeds.iter().filter_map(|s| s.ok().map(|o| o.test_metric)).collect();
    let val: Vec<f64> = seeds.iter().filter_map(|s| s.ok().map(|o| o.val_metric)).collect();
    Ok(ExperimentReport {
        metric: match task {
            ExperimentTask::NodeClassification => "accuracy",
            ExperimentTask::LinkPrediction(_) => "auc",
        }
        .to_owned(),
        test: summarize(&test),
        val: summarize(&val),
        seeds,
        rng: RNG_ALGORITHM.to_owned(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    })
}
