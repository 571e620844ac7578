use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng as _;

use super::{CsrMatrix, Graph};
use crate::error::{Error, Result};
use crate::rng;

/// Held-out positive and negative node pairs for link prediction.
///
/// Pairs are stored with the smaller index first.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSplit {
    pub train_adjacency: CsrMatrix,
    pub val_pos: Vec<(usize, usize)>,
    pub val_neg: Vec<(usize, usize)>,
    pub test_pos: Vec<(usize, usize)>,
    pub test_neg: Vec<(usize, usize)>,
}

impl EdgeSplit {
    pub fn train_edges(&self) -> Vec<(usize, usize)> {
        self.train_adjacency.upper_edges()
    }
}

fn held_out(frac: f64, edges: usize) -> usize {
    // tolerate representation error such as 0.07 * 100 = 7.000000000000001
    (frac * edges as f64 + 1e-9).floor() as usize
}

/// Holds out `⌊val_frac·E⌋` and `⌊test_frac·E⌋` edges as positives and pairs
/// each set with as many uniformly sampled non-edges; the remaining edges
/// form the training adjacency.
pub fn split_edges(graph: &Graph, val_frac: f64, test_frac: f64, seed: u64) -> Result<EdgeSplit> {
    if !(val_frac >= 0.0 && test_frac >= 0.0 && val_frac + test_frac > 0.0 && val_frac + test_frac < 1.0) {
        return Err(Error::invalid(format!(
            "need 0 < val_frac + test_frac < 1, got {val_frac} + {test_frac}"
        )));
    }
    let n = graph.n();
    let mut edges = graph.adjacency().upper_edges();
    let n_edges = edges.len();
    let n_val = held_out(val_frac, n_edges);
    let n_test = held_out(test_frac, n_edges);
    if n_val == 0 || n_test == 0 {
        return Err(Error::EmptyHoldout {
            edges: n_edges,
            val: n_val,
            test: n_test,
        });
    }

    let mut rng = rng::seeded(seed);
    edges.shuffle(&mut rng);
    let test_pos = edges[..n_test].to_vec();
    let val_pos = edges[n_test..n_test + n_val].to_vec();
    let train = &edges[n_test + n_val..];

    let needed = n_val + n_test;
    let available = n * n.saturating_sub(1) / 2 - n_edges;
    if needed > available {
        return Err(Error::NotEnoughNegatives { needed, available });
    }
    let adjacency = graph.adjacency();
    let negatives: Vec<(usize, usize)> = if needed * 2 > available {
        // dense graph: enumerate every non-edge and take a shuffled prefix
        let mut all: Vec<_> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| !adjacency.contains(i, j))
            .collect();
        all.shuffle(&mut rng);
        all.truncate(needed);
        all
    } else {
        let mut chosen = Vec::with_capacity(needed);
        let mut seen = HashSet::with_capacity(needed);
        while chosen.len() < needed {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            if a == b {
                continue;
            }
            let pair = (a.min(b), a.max(b));
            if !adjacency.contains(pair.0, pair.1) && seen.insert(pair) {
                chosen.push(pair);
            }
        }
        chosen
    };
    let test_neg = negatives[..n_test].to_vec();
    let val_neg = negatives[n_test..].to_vec();

    Ok(EdgeSplit {
        train_adjacency: CsrMatrix::from_undirected_edges(n, train.iter().copied())?,
        val_pos,
        val_neg,
        test_pos,
        test_neg,
    })
}
