//! Structural identities shared by the property suite and the acceptance
//! target. Each check returns a description of the first violation.

use std::sync::Arc;

use graphair_core::autodiff::{gradcheck, ParamSet, Tape};
use graphair_core::graph::{normalize_adjacency, Graph};
use graphair_core::models::{build_variant, Base, GraphInputs, Variant};
use graphair_core::rng;
use graphair_core::train::auc;
use graphair_core::Matrix;

use super::{brute_auc, node_spec, random_graph, random_matrix, random_permutation};

pub type Check = Result<(), String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

pub fn forward_output(graph: &Graph, base: Base, variant: Variant, k: usize, params: &ParamSet) -> Matrix {
    let spec = node_spec(base, variant, k, graph, 5);
    let (model, _) = build_variant(&spec, &mut rng::seeded(0)).unwrap();
    let inputs = GraphInputs::new(base, graph.adjacency(), graph.features()).unwrap();
    let mut tape = Tape::new();
    let b = params.bind(&mut tape);
    let f = model.forward(&mut tape, &inputs, &b, None).unwrap();
    tape.value(f.output).clone()
}

pub fn spmm_matches_dense(n: usize, p: f64, cols: usize, seed: u64) -> Check {
    let g = random_graph(n, p, 2, 2, seed);
    let a = Arc::new(normalize_adjacency(g.adjacency()).unwrap());
    let h = random_matrix(n, cols, seed ^ 1);
    let mut tape = Tape::new();
    let hv = tape.param(h.clone());
    let out = tape.spmm(&a, hv).unwrap();
    let dense = a.to_dense().matmul(&h).unwrap();
    let d = tape.value(out).max_abs_diff(&dense);
    ensure(d < 1e-12, || format!("spmm differs from dense product by {d:e}"))?;
    let dense_t = a.to_dense().transpose().matmul(&h).unwrap();
    let d = a.t_mul_dense(&h).unwrap().max_abs_diff(&dense_t);
    ensure(d < 1e-12, || format!("transposed spmm differs by {d:e}"))
}

pub fn permutation_equivariant(base: Base, variant: Variant, seed: u64) -> Check {
    let g = random_graph(8, 0.35, 3, 3, seed);
    let perm = random_permutation(8, seed ^ 7);
    let spec = node_spec(base, variant, 2, &g, 5);
    let (_, params) = build_variant(&spec, &mut rng::seeded(seed)).unwrap();
    let out = forward_output(&g, base, variant, 2, &params);
    let out_p = forward_output(&g.permute(&perm).unwrap(), base, variant, 2, &params);
    for (i, &pi) in perm.iter().enumerate() {
        for c in 0..out.cols() {
            let d = (out.get(i, c) - out_p.get(pi, c)).abs();
            ensure(d < 1e-12, || {
                format!("{base}/{variant}: node {i} moves by {d:e} under permutation")
            })?;
        }
    }
    Ok(())
}

pub fn interaction_is_hadamard(variant: Variant, k: usize, seed: u64) -> Check {
    let g = random_graph(8, 0.4, 3, 2, seed);
    let spec = node_spec(Base::Gcn, variant, k, &g, 4);
    let (model, params) = build_variant(&spec, &mut rng::seeded(seed)).unwrap();
    let inputs = GraphInputs::new(Base::Gcn, g.adjacency(), g.features()).unwrap();
    let mut tape = Tape::new();
    let b = params.bind(&mut tape);
    let tr = model.forward(&mut tape, &inputs, &b, None).unwrap().trace.unwrap();
    let expected = tape.value(tr.h_agg).zip_map(tape.value(tr.h_agg_bar), |a, b| a * b);
    ensure(tape.value(tr.h_ir) == &expected, || {
        format!("{variant}: h_ir is not h_agg * h_agg_bar")
    })?;
    let air = tape
        .value(tr.h_agg)
        .zip_map(tape.value(tr.h_ir), |a, b| a.max(0.0) + b.max(0.0));
    ensure(tape.value(tr.h_air) == &air, || {
        format!("{variant}: h_air is not relu(h_agg) + relu(h_ir)")
    })
}

/// An AIR model whose interaction branch is zeroed computes exactly the base
/// model with the aggregation weights and output head copied over.
pub fn zero_branch_reduces_to_base(base: Base, k: usize, seed: u64) -> Check {
    let g = random_graph(9, 0.3, 4, 3, seed);
    let (_, mut air) = build_variant(&node_spec(base, Variant::Air, k, &g, 6), &mut rng::seeded(seed)).unwrap();
    let (_, mut plain) = build_variant(&node_spec(base, Variant::Base, k, &g, 6), &mut rng::seeded(0)).unwrap();
    for (name, p) in air.iter_mut() {
        if name.starts_with("inter/") {
            p.value = Matrix::zeros(p.value.rows(), p.value.cols());
        }
    }
    for i in 1..=k {
        let w = air.get(&format!("agg/w{i}")).unwrap().value.clone();
        plain.get_mut(&format!("agg/w{i}")).unwrap().value = w;
    }
    plain.get_mut("head/out").unwrap().value = air.get("head/air").unwrap().value.clone();
    let a = forward_output(&g, base, Variant::Air, k, &air);
    let b = forward_output(&g, base, Variant::Base, k, &plain);
    let d = a.max_abs_diff(&b);
    ensure(d < 1e-12, || {
        format!("{base} K={k}: zeroed AIR differs from base by {d:e}")
    })
}

/// Labels from the low bits of `bits`, with the first two forced so both
/// classes occur.
pub fn labels_from_bits(len: usize, bits: u64) -> Vec<bool> {
    let mut labels: Vec<bool> = (0..len).map(|i| bits >> (i % 64) & 1 == 1).collect();
    labels[0] = true;
    labels[1] = false;
    labels
}

pub fn auc_matches_brute_force(scores: &[f64], bits: u64) -> Check {
    let labels = labels_from_bits(scores.len(), bits);
    let fast = auc(scores, &labels).unwrap();
    let slow = brute_auc(scores, &labels);
    ensure((fast - slow).abs() < 1e-12, || {
        format!("auc {fast} but pairwise count gives {slow}")
    })
}

/// Worst relative gradient error of a chain that touches every tape
/// primitive. Dropout is reseeded inside the objective so each evaluation
/// sees the same mask.
pub fn primitive_chain_error(seed: u64, eps: f64) -> f64 {
    let g = random_graph(6, 0.5, 3, 3, seed);
    let a = Arc::new(normalize_adjacency(g.adjacency()).unwrap());
    let mut params = ParamSet::new();
    params.insert("x", random_matrix(6, 3, seed ^ 1), false);
    params.insert("w", random_matrix(3, 3, seed ^ 2), false);
    params.insert("v", random_matrix(6, 3, seed ^ 3), false);
    let labels = g.labels().to_vec();
    let mask = vec![true; 6];
    let pairs = Arc::new(vec![(0, 1), (2, 5), (3, 3), (4, 0)]);
    let report = gradcheck(&params, eps, |t, b| {
        let xw = t.matmul(b.get("x")?, b.get("w")?)?;
        let p = t.spmm(&a, xw)?;
        let s = t.sigmoid(p);
        let h = t.hadamard(s, b.get("v")?)?;
        let h = t.relu(h);
        let h = t.dropout(h, 0.3, true, &mut rng::seeded(seed))?;
        let r = t.add(h, p)?;
        let r = t.scale(r, 1.7);
        let ce = t.masked_softmax_cross_entropy(r, &labels, &mask)?;
        let scores = t.pair_dot(r, &pairs)?;
        let bce = t.bce_with_logits(scores, &[1.0, 0.0, 1.0, 0.0], 2.5)?;
        t.add(ce, bce)
    })
    .unwrap();
    report.max_rel_error
}
