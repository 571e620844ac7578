use std::sync::Arc;

use rand::Rng as _;

use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::graph::CsrMatrix;
use crate::rng::Rng;

/// `σ(Â·(h·w))` with σ = ReLU when `activation` is set, else `Â·(h·w)`.
pub fn gcn_layer(tape: &mut Tape, adj: &Arc<CsrMatrix>, h: Var, w: Var, activation: bool) -> Result<Var> {
    let projected = tape.matmul(h, w)?;
    let aggregated = tape.spmm(adj, projected)?;
    Ok(if activation { tape.relu(aggregated) } else { aggregated })
}

/// Inverted dropout on a constant sparse input; the sparsity pattern is kept.
pub fn sparse_dropout(x: &CsrMatrix, p: f64, rng: &mut Rng) -> Result<CsrMatrix> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::invalid(format!("dropout probability {p} outside [0, 1)")));
    }
    let keep = 1.0 / (1.0 - p);
    Ok(x.map_values(|_, _, v| if rng.gen::<f64>() < p { 0.0 } else { v * keep }))
}

/// One branch of `weights.len()` graph convolutions over the sparse input
/// `features`.
///
/// Dropout precedes every layer. Layers before the last apply ReLU; the last
/// layer's pre-activation is returned so the caller decides its activation.
pub fn branch_forward(
    tape: &mut Tape,
    adj: &Arc<CsrMatrix>,
    features: &Arc<CsrMatrix>,
    weights: &[Var],
    dropout: f64,
    mut rng: Option<&mut Rng>,
) -> Result<Var> {
    let (first, rest) = weights
        .split_first()
        .ok_or_else(|| Error::invalid("branch needs at least one layer"))?;
    let input = match rng.as_deref_mut() {
        Some(rng) if dropout > 0.0 => Arc::new(sparse_dropout(features, dropout, rng)?),
        _ => Arc::clone(features),
    };
    let projected = tape.spmm(&input, *first)?;
    let mut h = tape.spmm(adj, projected)?;
    for &w in rest {
        let activated = tape.relu(h);
        let dropped = match rng.as_deref_mut() {
            Some(rng) => tape.dropout(activated, dropout, true, rng)?,
            None => activated,
        };
        h = gcn_layer(tape, adj, dropped, w, false)?;
    }
    Ok(h)
}

/// Interaction and skip connection: returns `(h_ir, h_air)` with
/// `h_ir = h_agg ⊙ h̄_agg` and `h_air = relu(h_agg) + relu(h_ir)`.
pub fn air_combine(tape: &mut Tape, h_agg: Var, h_agg_bar: Var) -> Result<(Var, Var)> {
    let h_ir = tape.hadamard(h_agg, h_agg_bar)?;
    let a = tape.relu(h_agg);
    let b = tape.relu(h_ir);
    let h_air = tape.add(a, b)?;
    Ok((h_ir, h_air))
}

/// Output convolution `Â·(h·w_head)`, returned as logits.
pub fn prediction_head(tape: &mut Tape, adj: &Arc<CsrMatrix>, h: Var, w_head: Var) -> Result<Var> {
    gcn_layer(tape, adj, h, w_head, false)
}
