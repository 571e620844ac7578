#![allow(dead_code)]

pub mod identities;

use graphair_core::graph::{CsrMatrix, Graph};
use graphair_core::models::{Base, ModelSpec, Task, Variant};
use graphair_core::rng;
use graphair_core::Matrix;
use rand::seq::SliceRandom;
use rand::Rng;

pub const BASES: [Base; 2] = [Base::Gcn, Base::SageMean];
pub const VARIANTS: [Variant; 5] = [
    Variant::Base,
    Variant::Air,
    Variant::Dp,
    Variant::SelfIr,
    Variant::Linear,
];

/// Erdős–Rényi graph with uniform features in [-1, 1], `classes` labels and
/// a 50/25/25 split in node order.
pub fn random_graph(n: usize, p: f64, features: usize, classes: usize, seed: u64) -> Graph {
    let mut r = rng::seeded(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if r.gen_bool(p) {
                edges.push((i, j));
            }
        }
    }
    let adjacency = CsrMatrix::from_undirected_edges(n, edges).unwrap();
    let x = Matrix::from_fn(n, features, |_, _| r.gen_range(-1.0..1.0));
    let labels = (0..n).map(|_| r.gen_range(0..classes) as i64).collect();
    let masks = [
        (0..n).map(|i| i < n / 2).collect(),
        (0..n).map(|i| i >= n / 2 && i < 3 * n / 4).collect(),
        (0..n).map(|i| i >= 3 * n / 4).collect(),
    ];
    Graph::new(adjacency, x, labels, classes, masks).unwrap()
}

pub fn random_permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(&mut rng::seeded(seed));
    p
}

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut r = rng::seeded(seed);
    Matrix::from_fn(rows, cols, |_, _| r.gen_range(-1.0..1.0))
}

pub fn node_spec(base: Base, variant: Variant, k: usize, graph: &Graph, hidden: usize) -> ModelSpec {
    ModelSpec {
        base,
        variant,
        k_layers: k,
        input_dim: graph.n_features(),
        hidden_dim: hidden,
        output_dim: graph.n_classes(),
        dropout: 0.0,
        task: Task::NodeClassification,
    }
}

/// O(n²) pairwise AUC with ties counted one half.
pub fn brute_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &li) in labels.iter().enumerate() {
        for (j, &lj) in labels.iter().enumerate() {
            if li && !lj {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}
