use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::dense::Matrix;
use crate::error::{Error, Result};

/// Compressed sparse row matrix.
///
/// Column indices are strictly increasing within each row and every entry is
/// explicitly stored (zeros included if the caller put them there).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Validates raw CSR arrays.
    pub fn from_parts(
        n_rows: usize,
        n_cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.len() != n_rows + 1 {
            return Err(Error::invalid(format!(
                "row_offsets has length {}, expected {}",
                row_offsets.len(),
                n_rows + 1
            )));
        }
        if row_offsets[0] != 0 || row_offsets[n_rows] != col_indices.len() {
            return Err(Error::invalid("row_offsets must start at 0 and end at nnz"));
        }
        if values.len() != col_indices.len() {
            return Err(Error::invalid("values and col_indices differ in length"));
        }
        for w in row_offsets.windows(2) {
            if w[0] > w[1] {
                return Err(Error::invalid("row_offsets must be non-decreasing"));
            }
            let cols = &col_indices[w[0]..w[1]];
            if cols.windows(2).any(|c| c[0] >= c[1]) {
                return Err(Error::invalid("column indices must be strictly increasing per row"));
            }
            if let Some(&c) = cols.last() {
                if c >= n_cols {
                    return Err(Error::IndexOutOfRange { index: c, len: n_cols });
                }
            }
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Builds from `(row, col, value)` entries; duplicates are summed.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_rows];
        for (i, j, v) in triplets {
            if i >= n_rows {
                return Err(Error::IndexOutOfRange { index: i, len: n_rows });
            }
            if j >= n_cols {
                return Err(Error::IndexOutOfRange { index: j, len: n_cols });
            }
            rows[i].push((j, v));
        }
        let mut row_offsets = Vec::with_capacity(n_rows + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for mut row in rows {
            row.sort_by_key(|&(j, _)| j);
            for (j, v) in row {
                if col_indices.len() > *row_offsets.last().unwrap() && *col_indices.last().unwrap() == j {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_indices.push(j);
                    values.push(v);
                }
            }
            row_offsets.push(col_indices.len());
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Binary symmetric adjacency from undirected edges, either orientation.
    /// Duplicate edges collapse and self-loops are dropped.
    pub fn from_undirected_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            for idx in [a, b] {
                if idx >= n {
                    return Err(Error::IndexOutOfRange { index: idx, len: n });
                }
            }
            if a != b {
                set.insert((a, b));
                set.insert((b, a));
            }
        }
        let mut row_offsets = vec![0; n + 1];
        let mut col_indices = Vec::with_capacity(set.len());
        for &(a, b) in &set {
            row_offsets[a + 1] += 1;
            col_indices.push(b);
        }
        for i in 0..n {
            row_offsets[i + 1] += row_offsets[i];
        }
        let values = vec![1.0; col_indices.len()];
        Ok(Self {
            n_rows: n,
            n_cols: n,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.col_indices.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let range = self.row_offsets[i]..self.row_offsets[i + 1];
        (&self.col_indices[range.clone()], &self.values[range])
    }

    pub fn row_len(&self, i: usize) -> usize {
        self.row_offsets[i + 1] - self.row_offsets[i]
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).ok().map(|k| vals[k])
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.get(i, j).is_some()
    }

    /// Iterates stored entries as `(row, col, value)`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    /// Undirected edges `(i, j)` with `i < j`, in row-major order.
    pub fn upper_edges(&self) -> Vec<(usize, usize)> {
        self.iter().filter(|&(i, j, _)| i < j).map(|(i, j, _)| (i, j)).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        self.n_rows == self.n_cols && self.iter().all(|(i, j, v)| self.get(j, i) == Some(v))
    }

    pub fn has_empty_diagonal(&self) -> bool {
        (0..self.n_rows).all(|i| !self.contains(i, i))
    }

    pub fn transpose(&self) -> CsrMatrix {
        CsrMatrix::from_triplets(self.n_cols, self.n_rows, self.iter().map(|(i, j, v)| (j, i, v)))
            .expect("transpose of a valid matrix is valid")
    }

    pub fn to_dense(&self) -> Matrix {
        let mut m = Matrix::zeros(self.n_rows, self.n_cols);
        for (i, j, v) in self.iter() {
            m.set(i, j, v);
        }
        m
    }

    /// Returns a copy with each stored value replaced by `f(row, col, value)`.
    pub fn map_values(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> CsrMatrix {
        let mut out = self.clone();
        for i in 0..self.n_rows {
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                out.values[k] = f(i, self.col_indices[k], self.values[k]);
            }
        }
        out
    }

    /// Relabels rows and columns: entry `(i, j)` moves to `(perm[i], perm[j])`.
    pub fn permute(&self, perm: &[usize]) -> Result<CsrMatrix> {
        if perm.len() != self.n_rows || self.n_rows != self.n_cols {
            return Err(Error::invalid("permutation length must match a square matrix"));
        }
        CsrMatrix::from_triplets(
            self.n_rows,
            self.n_cols,
            self.iter().map(|(i, j, v)| (perm[i], perm[j], v)),
        )
    }

    /// `self · h` for a dense `h`.
    pub fn mul_dense(&self, h: &Matrix) -> Result<Matrix> {
        if self.n_cols != h.rows() {
            return Err(Error::shape(
                "spmm",
                format!("{} rows in dense operand", self.n_cols),
                format!("{} rows", h.rows()),
            ));
        }
        let d = h.cols();
        let mut out = Matrix::zeros(self.n_rows, d);
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            let out_row = out.row_mut(i);
            for (&j, &a) in cols.iter().zip(vals) {
                for (o, &x) in out_row.iter_mut().zip(h.row(j)) {
                    *o += a * x;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · g` without materializing the transpose.
    pub fn t_mul_dense(&self, g: &Matrix) -> Result<Matrix> {
        if self.n_rows != g.rows() {
            return Err(Error::shape(
                "spmm backward",
                format!("{} rows in dense operand", self.n_rows),
                format!("{} rows", g.rows()),
            ));
        }
        let d = g.cols();
        let mut out = Matrix::zeros(self.n_cols, d);
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            let g_row = g.row(i);
            for (&j, &a) in cols.iter().zip(vals) {
                for (o, &x) in out.row_mut(j).iter_mut().zip(g_row) {
                    *o += a * x;
                }
            }
        }
        Ok(out)
    }

    fn with_self_loops(&self) -> Result<CsrMatrix> {
        if self.n_rows != self.n_cols {
            return Err(Error::invalid("adjacency must be square"));
        }
        CsrMatrix::from_triplets(
            self.n_rows,
            self.n_cols,
            self.iter().chain((0..self.n_rows).map(|i| (i, i, 1.0))),
        )
    }
}

/// Symmetric GCN propagation matrix `D̃^{-1/2} (A + I) D̃^{-1/2}`.
///
/// Isolated nodes keep only their self-loop, so every degree is at least one.
pub fn normalize_adjacency(adjacency: &CsrMatrix) -> Result<CsrMatrix> {
    let tilde = adjacency.with_self_loops()?;
    let inv_sqrt: Vec<f64> = (0..tilde.n_rows())
        .map(|i| 1.0 / tilde.row(i).1.iter().sum::<f64>().sqrt())
        .collect();
    Ok(tilde.map_values(|i, j, v| v * inv_sqrt[i] * inv_sqrt[j]))
}

/// Row-stochastic mean aggregator `D̃^{-1} (A + I)`.
pub fn mean_adjacency(adjacency: &CsrMatrix) -> Result<CsrMatrix> {
    let tilde = adjacency.with_self_loops()?;
    let inv: Vec<f64> = (0..tilde.n_rows())
        .map(|i| 1.0 / tilde.row(i).1.iter().sum::<f64>())
        .collect();
    Ok(tilde.map_values(|i, _, v| v * inv[i]))
}

/// Divides each row by its L1 norm; all-zero rows are left unchanged.
pub fn row_normalize_features(features: &Matrix) -> Matrix {
    let mut out = features.clone();
    for i in 0..out.rows() {
        let norm: f64 = out.row(i).iter().map(|x| x.abs()).sum();
        if norm > 0.0 {
            out.row_mut(i).iter_mut().for_each(|x| *x /= norm);
        }
    }
    out
}
