mod common;

use common::*;
use graphair_core::autodiff::{AdamConfig, AdamState, Tape};
use graphair_core::graph::{split_edges, synth_xor_graph};
use graphair_core::models::{build_variant, Base, GraphInputs, ModelSpec, Task, Variant};
use graphair_core::rng;
use graphair_core::train::{
    auc, evaluate_accuracy, link_scores, run_experiment, train_link_predictor, train_node_classifier, ExperimentTask,
    SeedStatus, TrainSpec,
};
use graphair_core::{Error, Matrix};
use rand_distr::{Distribution, StandardNormal};

fn short(epochs: usize) -> TrainSpec {
    TrainSpec {
        epochs,
        patience: epochs,
        seeds: vec![0],
        ..TrainSpec::node_classification()
    }
}

#[test]
fn returned_parameters_attain_minimum_validation_loss() {
    let g = random_graph(40, 0.15, 6, 3, 11);
    let spec = ModelSpec {
        dropout: 0.5,
        ..node_spec(Base::Gcn, Variant::Air, 1, &g, 8)
    };
    let ts = TrainSpec {
        epochs: 80,
        patience: 10,
        ..short(80)
    };
    let out = train_node_classifier(&g, &spec, &ts, 3).unwrap();
    let min = out
        .metrics
        .history
        .iter()
        .map(|r| r.val_loss)
        .fold(f64::INFINITY, f64::min);
    assert_eq!(out.metrics.best_val_loss, min);
    assert_eq!(out.metrics.history[out.metrics.best_epoch].val_loss, min);

    let inputs = GraphInputs::new(Base::Gcn, g.adjacency(), g.features()).unwrap();
    let mut tape = Tape::new();
    let b = out.params.bind(&mut tape);
    let f = out.model.forward(&mut tape, &inputs, &b, None).unwrap();
    let loss = tape
        .masked_softmax_cross_entropy(f.output, g.labels(), g.val_mask())
        .unwrap();
    assert_eq!(tape.scalar(loss), min);
    let test = evaluate_accuracy(&out.model, &out.params, &inputs, g.labels(), g.test_mask()).unwrap();
    assert_eq!(test, out.metrics.test_metric);
}

#[test]
fn early_stopping_halts_after_patience() {
    let g = random_graph(30, 0.2, 4, 2, 5);
    let spec = node_spec(Base::Gcn, Variant::Base, 1, &g, 8);
    let ts = TrainSpec {
        epochs: 500,
        patience: 5,
        lr: 0.2,
        ..short(500)
    };
    let out = train_node_classifier(&g, &spec, &ts, 0).unwrap();
    assert!(out.metrics.history.len() < 500);
    assert_eq!(out.metrics.history.len(), out.metrics.best_epoch + 6);
}

#[test]
fn training_loss_drops_and_runs_are_reproducible() {
    let g = synth_xor_graph(60, 2).unwrap();
    for variant in VARIANTS {
        let spec = ModelSpec {
            dropout: 0.3,
            ..node_spec(Base::Gcn, variant, 2, &g, 8)
        };
        let a = train_node_classifier(&g, &spec, &short(30), 4).unwrap();
        let b = train_node_classifier(&g, &spec, &short(30), 4).unwrap();
        assert_eq!(a.metrics, b.metrics, "{variant}");
        assert_eq!(a.params, b.params);
        let h = &a.metrics.history;
        assert!(
            h[10].train_loss < h[0].train_loss,
            "{variant}: {} vs {}",
            h[10].train_loss,
            h[0].train_loss
        );
    }
}

#[test]
fn single_head_variants_ignore_auxiliary_weights() {
    let g = random_graph(24, 0.2, 4, 2, 9);
    for variant in [Variant::Base, Variant::Linear] {
        let spec = node_spec(Base::Gcn, variant, 1, &g, 6);
        let a = train_node_classifier(&g, &spec, &short(15), 1).unwrap();
        let ts = TrainSpec {
            lambdas: [1.0, 1.3, 0.0],
            ..short(15)
        };
        let b = train_node_classifier(&g, &spec, &ts, 1).unwrap();
        assert_eq!(a.metrics, b.metrics);
    }
}

#[test]
fn scaled_loss_weights_keep_first_step_direction() {
    let g = random_graph(20, 0.25, 5, 3, 21);
    let spec = node_spec(Base::Gcn, Variant::Air, 2, &g, 6);
    let (model, init) = build_variant(&spec, &mut rng::seeded(2)).unwrap();
    let inputs = GraphInputs::new(Base::Gcn, g.adjacency(), g.features()).unwrap();
    let step = |lambdas: [f64; 3], lr: f64| {
        let mut params = init.clone();
        let mut tape = Tape::new();
        let b = params.bind(&mut tape);
        let f = model.forward(&mut tape, &inputs, &b, None).unwrap();
        let mut total = None;
        for (head, l) in f.heads().zip(lambdas) {
            let ce = tape
                .masked_softmax_cross_entropy(head, g.labels(), g.train_mask())
                .unwrap();
            let term = tape.scale(ce, l);
            total = Some(match total {
                None => term,
                Some(t) => tape.add(t, term).unwrap(),
            });
        }
        tape.backward(total.unwrap()).unwrap();
        let grads = b.grads(&tape);
        AdamState::new(AdamConfig::with_lr(lr))
            .step(&mut params, &grads)
            .unwrap();
        params
            .iter()
            .flat_map(|(name, p)| {
                let before = init.get(name).unwrap().value.data().to_vec();
                p.value
                    .data()
                    .iter()
                    .zip(before)
                    .map(|(a, b)| (a - b).signum())
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<f64>>()
    };
    let reference = step([1.0, 0.5, 0.5], 0.01);
    for c in [0.25, 3.0, 10.0] {
        assert_eq!(step([c, 0.5 * c, 0.5 * c], 0.01 / c), reference, "scale {c}");
    }
}

#[test]
fn rejects_empty_masks_and_wrong_task() {
    let g = random_graph(8, 0.5, 2, 2, 0);
    let no_val = graphair_core::graph::Graph::new(
        g.adjacency().clone(),
        g.features().clone(),
        g.labels().to_vec(),
        2,
        [g.train_mask().to_vec(), vec![false; 8], g.test_mask().to_vec()],
    )
    .unwrap();
    let spec = node_spec(Base::Gcn, Variant::Base, 1, &g, 4);
    assert!(matches!(
        train_node_classifier(&no_val, &spec, &short(5), 0),
        Err(Error::EmptyMask)
    ));
    let g = random_graph(12, 0.5, 2, 2, 0);
    let link = ModelSpec {
        task: Task::LinkPrediction,
        ..node_spec(Base::Gcn, Variant::Base, 1, &g, 4)
    };
    assert!(train_node_classifier(&g, &link, &short(5), 0).is_err());
}

#[test]
fn experiment_summary_statistics() {
    let g = random_graph(24, 0.2, 4, 2, 3);
    let spec = node_spec(Base::Gcn, Variant::Air, 1, &g, 6);
    let one = run_experiment(&g, &spec, &short(10), ExperimentTask::NodeClassification).unwrap();
    assert_eq!(one.test.successful_seeds, 1);
    assert!(one.test.mean.is_some() && one.test.std.is_none());
    let twice = TrainSpec {
        seeds: vec![5, 5],
        ..short(10)
    };
    let two = run_experiment(&g, &spec, &twice, ExperimentTask::NodeClassification).unwrap();
    assert_eq!(two.test.std, Some(0.0));
    assert!(two.rng.contains("ChaCha8"));
}

#[test]
fn failing_seed_is_recorded_not_fatal() {
    let g = random_graph(24, 0.2, 4, 2, 3);
    let spec = node_spec(Base::Gcn, Variant::Base, 1, &g, 6);
    let ts = TrainSpec {
        lr: 1e300,
        seeds: vec![0, 1],
        ..short(5)
    };
    let r = run_experiment(&g, &spec, &ts, ExperimentTask::NodeClassification).unwrap();
    assert!(r.seeds.iter().all(|s| matches!(s.outcome, SeedStatus::Failed(_))));
    assert_eq!(r.test.successful_seeds, 0);
    assert!(r.test.mean.is_none());
}

#[test]
fn random_embeddings_score_near_chance() {
    let g = random_graph(80, 0.08, 4, 2, 17);
    let split = split_edges(&g, 0.05, 0.1, 1).unwrap();
    let pairs: Vec<_> = split.test_pos.iter().chain(&split.test_neg).copied().collect();
    let labels: Vec<bool> = (0..pairs.len()).map(|i| i < split.test_pos.len()).collect();
    let mut r = rng::seeded(0);
    let mean = (0..20)
        .map(|_| {
            let z = Matrix::from_fn(80, 16, |_, _| StandardNormal.sample(&mut r));
            auc(&link_scores(&z, &pairs), &labels).unwrap()
        })
        .sum::<f64>()
        / 20.0;
    assert!((mean - 0.5).abs() < 0.05, "{mean}");
}

#[test]
fn link_prediction_learns_structure() {
    // Two dense communities with community-indicator features.
    let n = 60;
    let mut r = rng::seeded(4);
    let mut edges = Vec::new();
    use rand::Rng;
    for i in 0..n {
        for j in i + 1..n {
            let p = if (i < n / 2) == (j < n / 2) { 0.3 } else { 0.01 };
            if r.gen_bool(p) {
                edges.push((i, j));
            }
        }
    }
    let adjacency = graphair_core::graph::CsrMatrix::from_undirected_edges(n, edges).unwrap();
    let x = Matrix::from_fn(n, 4, |i, j| {
        if j == usize::from(i < n / 2) {
            1.0
        } else {
            r.gen_range(0.0..0.2)
        }
    });
    let g = graphair_core::graph::Graph::new(
        adjacency,
        x,
        vec![0; n],
        1,
        [vec![false; n], vec![false; n], vec![false; n]],
    )
    .unwrap();
    let split = split_edges(&g, 0.05, 0.1, 0).unwrap();
    for variant in VARIANTS {
        let spec = ModelSpec {
            base: Base::Gcn,
            variant,
            k_layers: 1,
            input_dim: 4,
            hidden_dim: 16,
            output_dim: 8,
            dropout: 0.0,
            task: Task::LinkPrediction,
        };
        let ts = TrainSpec {
            epochs: 100,
            patience: 100,
            ..TrainSpec::link_prediction()
        };
        let out = train_link_predictor(&g, &split, &spec, &ts, 0).unwrap();
        // Half the sampled non-edges fall inside a community, which caps
        // community-level embeddings near 0.75.
        assert!(out.metrics.test_metric > 0.7, "{variant}: {}", out.metrics.test_metric);
        let h = &out.metrics.history;
        assert!(h[10].train_loss < h[0].train_loss);
        let again = train_link_predictor(&g, &split, &spec, &ts, 0).unwrap();
        assert_eq!(again.metrics, out.metrics);
    }
}
