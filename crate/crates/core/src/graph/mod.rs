//! Graph storage, normalization, dataset bundles and edge splits.

mod bundle;
mod csr;
mod split;
mod synth;

pub use bundle::{load_bundle, write_bundle};
pub use csr::{mean_adjacency, normalize_adjacency, row_normalize_features, CsrMatrix};
pub use split::{split_edges, EdgeSplit};
pub use synth::{gradcheck_fixture, synth_xor_graph, xor_graph_from_signs};

use crate::dense::Matrix;
use crate::error::{Error, Result};

/// Label value for nodes without a class.
pub const UNLABELED: i64 = -1;

/// Undirected attributed graph with a transductive train/val/test split.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    adjacency: CsrMatrix,
    features: Matrix,
    labels: Vec<i64>,
    n_classes: usize,
    train_mask: Vec<bool>,
    val_mask: Vec<bool>,
    test_mask: Vec<bool>,
}

impl Graph {
    /// Checks the structural invariants: binary symmetric adjacency without
    /// self-loops, aligned node arrays and pairwise disjoint masks.
    pub fn new(
        adjacency: CsrMatrix,
        features: Matrix,
        labels: Vec<i64>,
        n_classes: usize,
        masks: [Vec<bool>; 3],
    ) -> Result<Self> {
        let n = adjacency.n_rows();
        if !adjacency.is_symmetric() {
            return Err(Error::invalid("adjacency must be square and symmetric"));
        }
        if !adjacency.has_empty_diagonal() {
            return Err(Error::invalid("adjacency must not store self-loops"));
        }
        if features.rows() != n || labels.len() != n || masks.iter().any(|m| m.len() != n) {
            return Err(Error::invalid(format!("node arrays must all have length {n}")));
        }
        for (i, &y) in labels.iter().enumerate() {
            if y != UNLABELED && (y < 0 || y as usize >= n_classes) {
                return Err(Error::invalid(format!(
                    "label {y} of node {i} outside [0, {n_classes})"
                )));
            }
        }
        let [train_mask, val_mask, test_mask] = masks;
        for i in 0..n {
            let hits = [train_mask[i], val_mask[i], test_mask[i]]
                .iter()
                .filter(|&&b| b)
                .count();
            if hits > 1 {
                return Err(Error::invalid(format!("node {i} appears in more than one mask")));
            }
        }
        Ok(Self {
            adjacency,
            features,
            labels,
            n_classes,
            train_mask,
            val_mask,
            test_mask,
        })
    }

    pub fn n(&self) -> usize {
        self.adjacency.n_rows()
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_edges(&self) -> usize {
        self.adjacency.nnz() / 2
    }

    pub fn adjacency(&self) -> &CsrMatrix {
        &self.adjacency
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    pub fn train_mask(&self) -> &[bool] {
        &self.train_mask
    }

    pub fn val_mask(&self) -> &[bool] {
        &self.val_mask
    }

    pub fn test_mask(&self) -> &[bool] {
        &self.test_mask
    }

    pub fn with_features(mut self, features: Matrix) -> Result<Self> {
        if features.rows() != self.n() {
            return Err(Error::shape("with_features", self.n(), features.rows()));
        }
        self.features = features;
        Ok(self)
    }

    /// Relabels nodes so that node `i` becomes node `perm[i]`.
    pub fn permute(&self, perm: &[usize]) -> Result<Graph> {
        let n = self.n();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::invalid("not a permutation of the node set"));
        }
        let mut features = Matrix::zeros(n, self.n_features());
        let mut labels = vec![UNLABELED; n];
        let mut masks = [vec![false; n], vec![false; n], vec![false; n]];
        for (i, &p) in perm.iter().enumerate() {
            features.row_mut(p).copy_from_slice(self.features.row(i));
            labels[p] = self.labels[i];
            masks[0][p] = self.train_mask[i];
            masks[1][p] = self.val_mask[i];
            masks[2][p] = self.test_mask[i];
        }
        Graph::new(self.adjacency.permute(perm)?, features, labels, self.n_classes, masks)
    }
}
