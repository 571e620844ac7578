use rand::seq::SliceRandom;
use rand::Rng as _;

use super::{CsrMatrix, Graph};
use crate::dense::Matrix;
use crate::error::{Error, Result};
use crate::rng;

/// Cycle graph whose labels depend on a product of neighbor signs.
///
/// Node `i` carries features `[s_i, 1]` with `s_i = ±1` drawn from the seeded
/// generator, and label `1` iff `s_{i-1} · s_{i+1} > 0` (indices mod n). The
/// label is invisible to any model that is linear in aggregated features.
/// Nodes are split 60/20/20 into train/val/test by a seeded shuffle.
pub fn synth_xor_graph(n: usize, seed: u64) -> Result<Graph> {
    check_size(n)?;
    let mut rng = rng::seeded(seed);
    let signs: Vec<i8> = (0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
    build(&signs, &mut rng)
}

/// Same construction with caller-chosen signs; `seed` drives only the split.
pub fn xor_graph_from_signs(signs: &[i8], seed: u64) -> Result<Graph> {
    check_size(signs.len())?;
    if signs.iter().any(|&s| s != 1 && s != -1) {
        return Err(Error::invalid("signs must be +1 or -1"));
    }
    build(signs, &mut rng::seeded(seed))
}

/// Small fixed graph for gradient checks: 8 nodes, 11 edges, 3 features,
/// 3 classes, with 4/2/2 train/val/test nodes.
pub fn gradcheck_fixture() -> Graph {
    let edges = [
        (0, 1),
        (1, 2),
        (2, 3),
        (3, 4),
        (4, 5),
        (5, 6),
        (6, 7),
        (7, 0),
        (0, 4),
        (1, 5),
        (2, 6),
    ];
    let adjacency = CsrMatrix::from_undirected_edges(8, edges).expect("fixture edges are valid");
    let mut rng = rng::seeded(8);
    let features = Matrix::from_fn(8, 3, |_, _| rng.gen_range(-1.0..1.0));
    let labels = vec![0, 1, 2, 0, 1, 2, 0, 1];
    let masks = [
        (0..8).map(|i| i < 4).collect(),
        (0..8).map(|i| (4..6).contains(&i)).collect(),
        (0..8).map(|i| i >= 6).collect(),
    ];
    Graph::new(adjacency, features, labels, 3, masks).expect("fixture is a valid graph")
}

fn check_size(n: usize) -> Result<()> {
    if n < 8 || n % 2 == 1 {
        return Err(Error::invalid(format!(
            "xor graph needs an even node count >= 8, got {n}"
        )));
    }
    Ok(())
}

fn build(signs: &[i8], rng: &mut rng::Rng) -> Result<Graph> {
    let n = signs.len();
    let adjacency = CsrMatrix::from_undirected_edges(n, (0..n).map(|i| (i, (i + 1) % n)))?;
    let features = Matrix::from_fn(n, 2, |i, j| if j == 0 { f64::from(signs[i]) } else { 1.0 });
    let labels = (0..n)
        .map(|i| {
            let prev = signs[(i + n - 1) % n];
            let next = signs[(i + 1) % n];
            i64::from(prev * next > 0)
        })
        .collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let n_train = n * 6 / 10;
    let n_val = n * 2 / 10;
    let mut masks = [vec![false; n], vec![false; n], vec![false; n]];
    for (k, &node) in order.iter().enumerate() {
        let which = if k < n_train {
            0
        } else if k < n_train + n_val {
            1
        } else {
            2
        };
        masks[which][node] = true;
    }
    Graph::new(adjacency, features, labels, 2, masks)
}
