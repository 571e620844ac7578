use std::sync::Arc;

use crate::dense::Matrix;
use crate::error::{Error, Result};
use crate::graph::CsrMatrix;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var {
    id: usize,
    rows: usize,
    cols: usize,
}

impl Var {
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpKind {
    Leaf,
    MatMul,
    SpMM,
    Hadamard,
    Add,
    Scale,
    Relu,
    Sigmoid,
    Dropout,
    SoftmaxCrossEntropy,
    BceWithLogits,
    PairDot,
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    SpMM(Arc<CsrMatrix>, Var),
    Hadamard(Var, Var),
    Add(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    Sigmoid(Var),
    /// Per-element multiplier: 0 for dropped entries, 1/(1-p) for kept ones.
    Dropout(Var, Vec<f64>),
    /// Losses store d(loss)/d(input) computed during the forward pass.
    SoftmaxCrossEntropy(Var, Matrix),
    BceWithLogits(Var, Matrix),
    PairDot(Var, Arc<Vec<(usize, usize)>>),
}

impl Op {
    fn kind(&self) -> OpKind {
        match self {
            Op::Leaf => OpKind::Leaf,
            Op::MatMul(..) => OpKind::MatMul,
            Op::SpMM(..) => OpKind::SpMM,
            Op::Hadamard(..) => OpKind::Hadamard,
            Op::Add(..) => OpKind::Add,
            Op::Scale(..) => OpKind::Scale,
            Op::Relu(..) => OpKind::Relu,
            Op::Sigmoid(..) => OpKind::Sigmoid,
            Op::Dropout(..) => OpKind::Dropout,
            Op::SoftmaxCrossEntropy(..) => OpKind::SoftmaxCrossEntropy,
            Op::BceWithLogits(..) => OpKind::BceWithLogits,
            Op::PairDot(..) => OpKind::PairDot,
        }
    }
}

#[derive(Debug)]
struct Node {
    value: Matrix,
    grad: Option<Matrix>,
    requires_grad: bool,
    op: Op,
}

/// Ordered record of executed operations.
///
/// Node ids are assigned in execution order, so every operation's inputs
/// precede it and a single reverse sweep is a valid topological traversal.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Matrix, requires_grad: bool, op: Op) -> Var {
        let var = Var {
            id: self.nodes.len(),
            rows: value.rows(),
            cols: value.cols(),
        };
        self.nodes.push(Node {
            value,
            grad: None,
            requires_grad,
            op,
        });
        var
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.id].requires_grad
    }

    /// Records a constant input.
    pub fn constant(&mut self, value: Matrix) -> Var {
        self.push(value, false, Op::Leaf)
    }

    /// Records a trainable input whose gradient is tracked.
    pub fn param(&mut self, value: Matrix) -> Var {
        self.push(value, true, Op::Leaf)
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.id].value
    }

    /// Value of a 1×1 node.
    pub fn scalar(&self, v: Var) -> f64 {
        debug_assert_eq!(v.shape(), (1, 1));
        self.nodes[v.id].value.data()[0]
    }

    pub fn grad(&self, v: Var) -> Option<&Matrix> {
        self.nodes[v.id].grad.as_ref()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.needs(v)
    }

    pub fn op_kind(&self, v: Var) -> OpKind {
        self.nodes[v.id].op.kind()
    }

    pub fn op_kinds(&self) -> impl Iterator<Item = OpKind> + '_ {
        self.nodes.iter().map(|n| n.op.kind())
    }

    pub fn count_ops(&self, kind: OpKind) -> usize {
        self.op_kinds().filter(|&k| k == kind).count()
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).matmul(self.value(b))?;
        let rg = self.needs(a) || self.needs(b);
        Ok(self.push(value, rg, Op::MatMul(a, b)))
    }

    /// Sparse-dense product `a · h`; `a` is a constant.
    pub fn spmm(&mut self, a: &Arc<CsrMatrix>, h: Var) -> Result<Var> {
        let value = a.mul_dense(self.value(h))?;
        let rg = self.needs(h);
        Ok(self.push(value, rg, Op::SpMM(Arc::clone(a), h)))
    }

    fn same_shape(op: &'static str, a: Var, b: Var) -> Result<()> {
        if a.shape() != b.shape() {
            return Err(Error::shape(op, format!("{:?}", a.shape()), format!("{:?}", b.shape())));
        }
        Ok(())
    }

    pub fn hadamard(&mut self, a: Var, b: Var) -> Result<Var> {
        Self::same_shape("hadamard", a, b)?;
        let value = self.value(a).zip_map(self.value(b), |x, y| x * y);
        let rg = self.needs(a) || self.needs(b);
        Ok(self.push(value, rg, Op::Hadamard(a, b)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        Self::same_shape("add", a, b)?;
        let value = self.value(a).zip_map(self.value(b), |x, y| x + y);
        let rg = self.needs(a) || self.needs(b);
        Ok(self.push(value, rg, Op::Add(a, b)))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Var {
        let value = self.value(a).scale(factor);
        let rg = self.needs(a);
        self.push(value, rg, Op::Scale(a, factor))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let value = self.value(a).map(|x| x.max(0.0));
        let rg = self.needs(a);
        self.push(value, rg, Op::Relu(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let value = self.value(a).map(sigmoid);
        let rg = self.needs(a);
        self.push(value, rg, Op::Sigmoid(a))
    }

    /// Inverted dropout: in training mode each entry is zeroed with
    /// probability `p` and survivors are scaled by `1/(1-p)`. Outside
    /// training, or with `p = 0`, the input handle is returned unchanged.
    pub fn dropout<R: rand::Rng + ?Sized>(&mut self, a: Var, p: f64, training: bool, rng: &mut R) -> Result<Var> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::invalid(format!("dropout probability {p} outside [0, 1)")));
        }
        if !training || p == 0.0 {
            return Ok(a);
        }
        let keep = 1.0 / (1.0 - p);
        let mask: Vec<f64> = (0..a.rows * a.cols)
            .map(|_| if rng.gen::<f64>() < p { 0.0 } else { keep })
            .collect();
        let data = self.value(a).data().iter().zip(&mask).map(|(x, m)| x * m).collect();
        let value = Matrix::new(a.rows, a.cols, data)?;
        let rg = self.needs(a);
        Ok(self.push(value, rg, Op::Dropout(a, mask)))
    }

    /// Mean over rows selected by `mask` of `-log softmax(logits)[label]`.
    pub fn masked_softmax_cross_entropy(&mut self, logits: Var, labels: &[i64], mask: &[bool]) -> Result<Var> {
        let (n, c) = logits.shape();
        if labels.len() != n || mask.len() != n {
            return Err(Error::shape(
                "masked_softmax_cross_entropy",
                n,
                labels.len().min(mask.len()),
            ));
        }
        let count = mask.iter().filter(|&&m| m).count();
        if count == 0 {
            return Err(Error::EmptyMask);
        }
        let z = self.value(logits);
        let mut grad = Matrix::zeros(n, c);
        let mut total = 0.0;
        for i in (0..n).filter(|&i| mask[i]) {
            let y = labels[i];
            if y < 0 || y as usize >= c {
                return Err(Error::invalid(format!("label {y} of row {i} outside [0, {c})")));
            }
            let row = z.row(i);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = row.iter().map(|&x| (x - max).exp()).sum();
            let log_norm = max + sum.ln();
            total += log_norm - row[y as usize];
            let g = grad.row_mut(i);
            for (gj, &x) in g.iter_mut().zip(row) {
                *gj = (x - log_norm).exp() / count as f64;
            }
            g[y as usize] -= 1.0 / count as f64;
        }
        let value = Matrix::from_rows(&[[total / count as f64]]);
        let rg = self.needs(logits);
        Ok(self.push(value, rg, Op::SoftmaxCrossEntropy(logits, grad)))
    }

    /// Mean of `pos_weight·t·softplus(-x) + (1-t)·softplus(x)` over all
    /// entries of `scores`.
    pub fn bce_with_logits(&mut self, scores: Var, targets: &[f64], pos_weight: f64) -> Result<Var> {
        let n = scores.rows * scores.cols;
        if targets.len() != n {
            return Err(Error::shape("bce_with_logits", n, targets.len()));
        }
        if n == 0 {
            return Err(Error::invalid("bce_with_logits on empty input"));
        }
        let x = self.value(scores);
        let mut total = 0.0;
        let mut grad = Vec::with_capacity(n);
        for (&s, &t) in x.data().iter().zip(targets) {
            total += pos_weight * t * softplus(-s) + (1.0 - t) * softplus(s);
            grad.push((-pos_weight * t * sigmoid(-s) + (1.0 - t) * sigmoid(s)) / n as f64);
        }
        let grad = Matrix::new(scores.rows, scores.cols, grad)?;
        let value = Matrix::from_rows(&[[total / n as f64]]);
        let rg = self.needs(scores);
        Ok(self.push(value, rg, Op::BceWithLogits(scores, grad)))
    }

    /// Column of dot products `z_i · z_j`, one per pair.
    pub fn pair_dot(&mut self, z: Var, pairs: &Arc<Vec<(usize, usize)>>) -> Result<Var> {
        let zv = self.value(z);
        let mut out = Vec::with_capacity(pairs.len());
        for &(i, j) in pairs.iter() {
            for idx in [i, j] {
                if idx >= z.rows {
                    return Err(Error::IndexOutOfRange {
                        index: idx,
                        len: z.rows,
                    });
                }
            }
            out.push(zv.row(i).iter().zip(zv.row(j)).map(|(a, b)| a * b).sum());
        }
        let value = Matrix::new(pairs.len(), 1, out)?;
        let rg = self.needs(z);
        Ok(self.push(value, rg, Op::PairDot(z, Arc::clone(pairs))))
    }

    fn accumulate(&mut self, v: Var, g: Matrix) {
        let node = &mut self.nodes[v.id];
        if !node.requires_grad {
            return;
        }
        match &mut node.grad {
            Some(existing) => existing.add_assign(&g),
            None => node.grad = Some(g),
        }
    }

    /// Clears every stored gradient.
    pub fn zero_grad(&mut self) {
        for node in &mut self.nodes {
            node.grad = None;
        }
    }

    /// Propagates d(loss)/d(node) to every node that requires a gradient.
    ///
    /// Gradients add to whatever is already stored, so calling this twice
    /// without [`Tape::zero_grad`] doubles them.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if loss.shape() != (1, 1) {
            return Err(Error::shape("backward", "(1, 1)", format!("{:?}", loss.shape())));
        }
        self.accumulate(loss, Matrix::filled(1, 1, 1.0));
        for id in (0..=loss.id).rev() {
            let Some(g) = self.nodes[id].grad.clone() else {
                continue;
            };
            // split the borrow: inputs always live before `id`
            let (before, rest) = self.nodes.split_at_mut(id);
            let node = &rest[0];
            let mut updates: Vec<(Var, Matrix)> = Vec::with_capacity(2);
            let needs = |v: &Var| before[v.id].requires_grad;
            match &node.op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    if needs(a) {
                        updates.push((*a, g.matmul_t(&before[b.id].value)?));
                    }
                    if needs(b) {
                        updates.push((*b, before[a.id].value.t_matmul(&g)?));
                    }
                }
                Op::SpMM(adj, h) => {
                    if needs(h) {
                        updates.push((*h, adj.t_mul_dense(&g)?));
                    }
                }
                Op::Hadamard(a, b) => {
                    if needs(a) {
                        updates.push((*a, g.zip_map(&before[b.id].value, |x, y| x * y)));
                    }
                    if needs(b) {
                        updates.push((*b, g.zip_map(&before[a.id].value, |x, y| x * y)));
                    }
                }
                Op::Add(a, b) => {
                    if needs(a) {
                        updates.push((*a, g.clone()));
                    }
                    if needs(b) {
                        updates.push((*b, g.clone()));
                    }
                }
                Op::Scale(a, f) => updates.push((*a, g.scale(*f))),
                Op::Relu(a) => {
                    let x = &before[a.id].value;
                    updates.push((*a, g.zip_map(x, |gi, xi| if xi > 0.0 { gi } else { 0.0 })));
                }
                Op::Sigmoid(a) => {
                    let s = &node.value;
                    updates.push((*a, g.zip_map(s, |gi, si| gi * si * (1.0 - si))));
                }
                Op::Dropout(a, mask) => {
                    let data = g.data().iter().zip(mask).map(|(x, m)| x * m).collect();
                    updates.push((*a, Matrix::new(a.rows, a.cols, data)?));
                }
                Op::SoftmaxCrossEntropy(a, local) | Op::BceWithLogits(a, local) => {
                    updates.push((*a, local.scale(g.data()[0])));
                }
                Op::PairDot(z, pairs) => {
                    let zv = &before[z.id].value;
                    let mut dz = Matrix::zeros(z.rows, z.cols);
                    for (k, &(i, j)) in pairs.iter().enumerate() {
                        let gk = g.data()[k];
                        for c in 0..z.cols {
                            let zi = zv.get(i, c);
                            let zj = zv.get(j, c);
                            dz.row_mut(i)[c] += gk * zj;
                            dz.row_mut(j)[c] += gk * zi;
                        }
                    }
                    updates.push((*z, dz));
                }
            }
            for (v, u) in updates {
                self.accumulate(v, u);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn identity_products() {
        let mut t = Tape::new();
        let x = Matrix::from_rows(&[[1.0, -2.0], [3.0, 0.5]]);
        let i = t.constant(Matrix::identity(2));
        let xv = t.constant(x.clone());
        let y = t.matmul(i, xv).unwrap();
        assert_eq!(t.value(y), &x);
        let s = t.spmm(&Arc::new(CsrMatrix::identity(2)), xv).unwrap();
        assert_eq!(t.value(s), &x);
    }

    #[test]
    fn spmm_on_normalized_path() {
        let mut t = Tape::new();
        let a = CsrMatrix::from_triplets(2, 2, [(0, 0, 0.5), (0, 1, 0.5), (1, 0, 0.5), (1, 1, 0.5)]).unwrap();
        let h = t.constant(Matrix::identity(2));
        let y = t.spmm(&Arc::new(a), h).unwrap();
        assert_eq!(t.value(y), &Matrix::from_rows(&[[0.5, 0.5], [0.5, 0.5]]));
    }

    #[test]
    fn hadamard_identity_and_absorbing() {
        let mut t = Tape::new();
        let a = t.constant(Matrix::from_rows(&[[1.0, -2.0, 3.0]]));
        let ones = t.constant(Matrix::filled(1, 3, 1.0));
        let zeros = t.constant(Matrix::zeros(1, 3));
        let x = t.hadamard(a, ones).unwrap();
        let z = t.hadamard(a, zeros).unwrap();
        assert_eq!(t.value(x), t.value(a));
        assert_eq!(t.value(z), &Matrix::zeros(1, 3));
    }

    #[test]
    fn elementwise_ops() {
        let mut t = Tape::new();
        let a = t.constant(Matrix::from_rows(&[[-1.0, 0.0, 2.0]]));
        let r = t.relu(a);
        assert_eq!(t.value(r).data(), &[0.0, 0.0, 2.0]);
        let z = t.constant(Matrix::zeros(1, 1));
        let s = t.sigmoid(z);
        assert_eq!(t.scalar(s), 0.5);
        let zeros = t.constant(Matrix::zeros(1, 3));
        let sum = t.add(a, zeros).unwrap();
        assert_eq!(t.value(sum), t.value(a));
        let wrong = t.constant(Matrix::zeros(3, 1));
        assert!(t.add(a, wrong).is_err());
        assert!(t.hadamard(a, wrong).is_err());
    }

    #[test]
    fn relu_subgradient_at_zero_is_zero() {
        let mut t = Tape::new();
        let a = t.param(Matrix::from_rows(&[[0.0, 1.0]]));
        let r = t.relu(a);
        let w = t.constant(Matrix::from_rows(&[[1.0], [1.0]]));
        let s = t.matmul(r, w).unwrap();
        t.backward(s).unwrap();
        assert_eq!(t.grad(a).unwrap().data(), &[0.0, 1.0]);
    }

    #[test]
    fn shared_input_accumulates() {
        let mut t = Tape::new();
        let a = t.param(Matrix::from_rows(&[[1.5, -2.0, 0.25]]));
        let sq = t.hadamard(a, a).unwrap();
        let ones = t.constant(Matrix::filled(3, 1, 1.0));
        let s = t.matmul(sq, ones).unwrap();
        t.backward(s).unwrap();
        assert_eq!(t.grad(a).unwrap().data(), &[3.0, -4.0, 0.5]);
    }

    #[test]
    fn dropout_modes() {
        let mut rng = rng::seeded(1);
        let mut t = Tape::new();
        let a = t.constant(Matrix::filled(1, 4, 1.0));
        assert_eq!(t.dropout(a, 0.0, true, &mut rng).unwrap(), a);
        assert_eq!(t.dropout(a, 0.7, false, &mut rng).unwrap(), a);
        assert!(t.dropout(a, 1.0, true, &mut rng).is_err());
        assert!(t.dropout(a, -0.1, true, &mut rng).is_err());
    }

    #[test]
    fn dropout_preserves_mean() {
        let mut rng = rng::seeded(42);
        let mut t = Tape::new();
        let a = t.constant(Matrix::filled(1, 100_000, 1.0));
        let d = t.dropout(a, 0.5, true, &mut rng).unwrap();
        let mean = t.value(d).data().iter().sum::<f64>() / 100_000.0;
        assert!((0.98..=1.02).contains(&mean), "mean {mean}");
        assert!(t.value(d).data().iter().all(|&x| x == 0.0 || x == 2.0));
    }

    #[test]
    fn uniform_logits_give_log_classes() {
        let mut t = Tape::new();
        let z = t.param(Matrix::zeros(4, 7));
        let loss = t
            .masked_softmax_cross_entropy(z, &[0, 3, 6, 2], &[true, true, false, true])
            .unwrap();
        assert!((t.scalar(loss) - 7f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn confident_logits_drive_loss_to_zero() {
        let mut prev = f64::INFINITY;
        for margin in [1.0, 5.0, 20.0, 50.0] {
            let mut t = Tape::new();
            let z = t.constant(Matrix::from_rows(&[[margin, 0.0, 0.0]]));
            let l = t.masked_softmax_cross_entropy(z, &[0], &[true]).unwrap();
            assert!(t.scalar(l) < prev);
            prev = t.scalar(l);
        }
        assert!(prev < 1e-20);
    }

    #[test]
    fn cross_entropy_errors() {
        let mut t = Tape::new();
        let z = t.constant(Matrix::zeros(2, 3));
        assert!(matches!(
            t.masked_softmax_cross_entropy(z, &[0, 1], &[false, false]),
            Err(Error::EmptyMask)
        ));
        assert!(t.masked_softmax_cross_entropy(z, &[0, 3], &[true, true]).is_err());
        assert!(t.masked_softmax_cross_entropy(z, &[0, -1], &[true, false]).is_ok());
    }

    #[test]
    fn bce_reference_points() {
        let mut t = Tape::new();
        let x = t.constant(Matrix::zeros(1, 1));
        let l = t.bce_with_logits(x, &[1.0], 1.0).unwrap();
        assert!((t.scalar(l) - 2f64.ln()).abs() < 1e-15);
        let big = t.constant(Matrix::filled(1, 1, 800.0));
        let l = t.bce_with_logits(big, &[1.0], 1.0).unwrap();
        assert_eq!(t.scalar(l), 0.0);
        assert!(t.bce_with_logits(big, &[1.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn pair_dot_rejects_bad_index() {
        let mut t = Tape::new();
        let z = t.constant(Matrix::identity(3));
        assert!(t.pair_dot(z, &Arc::new(vec![(0, 3)])).is_err());
        let s = t.pair_dot(z, &Arc::new(vec![(0, 0), (0, 1), (2, 2)])).unwrap();
        assert_eq!(t.value(s).data(), &[1.0, 0.0, 1.0]);
    }

    #[test]
    fn backward_requires_scalar() {
        let mut t = Tape::new();
        let a = t.param(Matrix::zeros(2, 2));
        assert!(t.backward(a).is_err());
    }
}
