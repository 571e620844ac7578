use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use graphair_core::analysis::{taylor_report, TaylorOptions, TaylorReport};
use graphair_core::graph::{
    gradcheck_fixture, load_bundle, row_normalize_features, split_edges, synth_xor_graph, write_bundle, Graph,
};
use graphair_core::models::{Base, ModelSpec, Task, Variant};
use graphair_core::train::{
    check_gradients, history_csv, run_experiment, ExperimentReport, ExperimentTask, SeedStatus,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{DatasetSource, RunConfig};

/// Largest relative gradient error `gradcheck` accepts.
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    /// Resolved configuration; feeding it back as a config file reproduces
    /// the run.
    pub config: BTreeMap<String, String>,
    pub parameter_count: usize,
    pub experiment: ExperimentReport,
}

pub fn load_graph(cfg: &RunConfig) -> Result<Graph> {
    let graph = match &cfg.dataset {
        DatasetSource::Bundle(dir) => load_bundle(dir).with_context(|| format!("loading bundle {}", dir.display()))?,
        DatasetSource::Synth { n, seed } => synth_xor_graph(*n, *seed)?,
    };
    if cfg.normalize_features {
        let features = row_normalize_features(graph.features());
        Ok(graph.with_features(features)?)
    } else {
        Ok(graph)
    }
}

pub fn model_spec(cfg: &RunConfig, graph: &Graph) -> ModelSpec {
    ModelSpec {
        base: cfg.base,
        variant: cfg.variant,
        k_layers: cfg.k_layers,
        input_dim: graph.n_features(),
        hidden_dim: cfg.hidden,
        output_dim: match cfg.task {
            Task::NodeClassification => graph.n_classes(),
            Task::LinkPrediction => cfg.embedding,
        },
        dropout: cfg.dropout,
        task: cfg.task,
    }
}

fn experiment(cfg: &RunConfig, graph: &Graph) -> Result<ExperimentReport> {
    let spec = model_spec(cfg, graph);
    let report = match cfg.task {
        Task::NodeClassification => run_experiment(graph, &spec, &cfg.train, ExperimentTask::NodeClassification)?,
        Task::LinkPrediction => {
            let split = split_edges(graph, cfg.val_frac, cfg.test_frac, cfg.split_seed)?;
            run_experiment(graph, &spec, &cfg.train, ExperimentTask::LinkPrediction(&split))?
        }
    };
    Ok(report)
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

/// Runs `train` or `linkpred`, writing the report and loss history when
/// the configuration asks for them.
pub fn run(command: &str, cfg: &RunConfig) -> Result<RunReport> {
    let graph = load_graph(cfg)?;
    let experiment = experiment(cfg, &graph)?;
    let report = RunReport {
        command: command.to_owned(),
        config: cfg.to_pairs().into_iter().collect(),
        parameter_count: model_spec(cfg, &graph).parameter_count(),
        experiment,
    };
    if let Some(path) = &cfg.out {
        write_json(&report, path)?;
    }
    if let Some(path) = &cfg.history {
        let first = report.experiment.seeds.iter().find_map(|s| s.ok());
        let csv = history_csv(first.map_or(&[][..], |o| &o.history));
        fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(report)
}

pub fn summary_text(report: &RunReport) -> String {
    let e = &report.experiment;
    let mut out = String::new();
    for s in &e.seeds {
        match &s.outcome {
            SeedStatus::Ok(o) => {
                out += &format!(
                    "seed {:>3}  val {} {:.4}  test {} {:.4}  best epoch {}\n",
                    s.seed, e.metric, o.val_metric, e.metric, o.test_metric, o.best_epoch
                )
            }
            SeedStatus::Failed(msg) => out += &format!("seed {:>3}  failed: {msg}\n", s.seed),
        }
    }
    let fmt = |v: Option<f64>| v.map_or("n/a".to_owned(), |x| format!("{x:.4}"));
    out += &format!(
        "test {}: mean {} std {} over {} seeds ({:.1} s)\n",
        e.metric,
        fmt(e.test.mean),
        fmt(e.test.std),
        e.test.successful_seeds,
        e.wall_clock_seconds
    );
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct GradcheckLine {
    pub base: Base,
    pub variant: Variant,
    pub max_rel_error: f64,
    pub worst: Option<String>,
    pub coordinates: usize,
}

/// Gradient check of every base/variant pair on the 8-node fixture.
pub fn gradcheck(eps: f64, seed: u64) -> Result<Vec<GradcheckLine>> {
    let graph = gradcheck_fixture();
    let mut lines = Vec::new();
    for base in [Base::Gcn, Base::SageMean] {
        for variant in [
            Variant::Base,
            Variant::Air,
            Variant::Dp,
            Variant::SelfIr,
            Variant::Linear,
        ] {
            let spec = ModelSpec {
                base,
                variant,
                k_layers: 2,
                input_dim: graph.n_features(),
                hidden_dim: 4,
                output_dim: graph.n_classes(),
                dropout: 0.0,
                task: Task::NodeClassification,
            };
            let r = check_gradients(&graph, &spec, [1.0, 0.5, 0.5], eps, seed)?;
            lines.push(GradcheckLine {
                base,
                variant,
                max_rel_error: r.max_rel_error,
                worst: r.worst.map(|(name, k)| format!("{name}[{k}]")),
                coordinates: r.coordinates,
            });
        }
    }
    Ok(lines)
}

pub fn taylor(opts: &TaylorOptions) -> Result<TaylorReport> {
    Ok(taylor_report(opts)?)
}

pub fn taylor_text(r: &TaylorReport) -> String {
    let mut out = format!("sigmoid Taylor expansion at 0, degree {}\n", r.degree);
    let width = r.exact.iter().map(String::len).max().unwrap_or(0);
    for (k, (exact, value)) in r.exact.iter().zip(&r.coefficients).enumerate() {
        out += &format!("  c{k:<2} = {exact:>width$}  ({value:+.12e})\n");
    }
    out += &format!("remainder bound on |t| <= {}: {:.6e}\n", r.t_max, r.remainder_bound);
    let fit = &r.cross_term;
    let (a, b) = fit.cubic_cross();
    out += &format!(
        "cubic fit of s(u+v) on [{}, {}]^2, {} samples, rms residual {:.3e}\n",
        fit.lo, fit.hi, fit.n_samples, fit.residual
    );
    out += &format!(
        "  u^2v = {a:+.6}  uv^2 = {b:+.6}  implied c3 = {:+.6}\n",
        fit.implied_c3()
    );
    out
}

pub fn synth(n: usize, seed: u64, out: &Path) -> Result<Graph> {
    let graph = synth_xor_graph(n, seed)?;
    write_bundle(&graph, out).with_context(|| format!("writing bundle to {}", out.display()))?;
    Ok(graph)
}

#[derive(Debug, Clone, Serialize)]
pub struct GridPoint {
    pub lambdas: [f64; 3],
    pub val_mean: Option<f64>,
    pub test_mean: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridReport {
    pub config: BTreeMap<String, String>,
    pub metric: String,
    pub points: Vec<GridPoint>,
    /// Point with the highest mean validation metric.
    pub best: Option<GridPoint>,
}

/// Loss-weight values searched by `grid`.
pub fn grid_values(full: bool) -> Vec<f64> {
    if full {
        (1..=15).map(|i| f64::from(i) / 10.0).collect()
    } else {
        vec![0.1, 0.5, 1.0, 1.5]
    }
}

pub fn grid(cfg: &RunConfig, full: bool) -> Result<GridReport> {
    let graph = load_graph(cfg)?;
    let values = grid_values(full);
    let mut combos = Vec::with_capacity(values.len().pow(3));
    for &a in &values {
        for &b in &values {
            for &c in &values {
                combos.push([a, b, c]);
            }
        }
    }
    let points = combos
        .par_iter()
        .map(|&lambdas| {
            let mut run = cfg.clone();
            run.train.lambdas = lambdas;
            let e = experiment(&run, &graph)?;
            Ok(GridPoint {
                lambdas,
                val_mean: e.val.mean,
                test_mean: e.test.mean,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = points
        .iter()
        .filter(|p| p.val_mean.is_some())
        .max_by(|a, b| a.val_mean.partial_cmp(&b.val_mean).expect("finite metrics"))
        .cloned();
    let report = GridReport {
        config: cfg.to_pairs().into_iter().collect(),
        metric: match cfg.task {
            Task::NodeClassification => "accuracy",
            Task::LinkPrediction => "auc",
        }
        .to_owned(),
        points,
        best,
    };
    if let Some(path) = &cfg.out {
        write_json(&report, path)?;
    }
    Ok(report)
}
