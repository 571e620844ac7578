mod common;

use common::*;
use graphair_core::autodiff::Tape;
use graphair_core::graph::{mean_adjacency, normalize_adjacency};
use graphair_core::models::{build_variant, Base, GraphInputs, Variant};
use graphair_core::rng;
use graphair_core::train::auc;
use graphair_core::Matrix;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn spmm_matches_dense(n in 1usize..=10, p in 0.0f64..1.0, cols in 1usize..5, seed in any::<u64>()) {
        identities::spmm_matches_dense(n, p, cols, seed).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn forward_is_permutation_equivariant(seed in any::<u64>(), vi in 0usize..5, bi in 0usize..2) {
        identities::permutation_equivariant(BASES[bi], VARIANTS[vi], seed).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn interaction_is_exact_hadamard(seed in any::<u64>(), k in 1usize..4, self_ir in any::<bool>()) {
        let variant = if self_ir { Variant::SelfIr } else { Variant::Air };
        identities::interaction_is_hadamard(variant, k, seed).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn zero_branch_reduces_to_base(seed in any::<u64>(), k in 1usize..4, bi in 0usize..2) {
        identities::zero_branch_reduces_to_base(BASES[bi], k, seed).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn auc_matches_brute_force(
        scores in prop::collection::vec(prop_oneof![-3i32..3, Just(0)].prop_map(f64::from), 2..50),
        label_bits in any::<u64>(),
    ) {
        identities::auc_matches_brute_force(&scores, label_bits).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn auc_invariant_under_monotone_maps(
        scores in prop::collection::vec(-5.0f64..5.0, 2..60),
        label_bits in any::<u64>(),
        a in 0.1f64..10.0,
        b in -5.0f64..5.0,
    ) {
        let labels = identities::labels_from_bits(scores.len(), label_bits);
        let base = auc(&scores, &labels).unwrap();
        let maps: [&dyn Fn(f64) -> f64; 3] = [&|x| a * x + b, &|x| x.exp(), &|x| (a * x).atan() + x.powi(3)];
        for f in maps {
            let mapped: Vec<f64> = scores.iter().map(|&s| f(s)).collect();
            prop_assert_eq!(auc(&mapped, &labels).unwrap(), base);
        }
    }

    #[test]
    fn cross_entropy_translation_invariant(seed in any::<u64>(), shift in -50.0f64..50.0) {
        let logits = random_matrix(6, 4, seed).scale(5.0);
        let labels = vec![0, 1, 2, 3, 1, 0];
        let mask = vec![true, true, false, true, true, true];
        let mut tape = Tape::new();
        let a = tape.constant(logits.clone());
        let la = tape.masked_softmax_cross_entropy(a, &labels, &mask).unwrap();
        let b = tape.constant(logits.map(|x| x + shift));
        let lb = tape.masked_softmax_cross_entropy(b, &labels, &mask).unwrap();
        prop_assert!((tape.scalar(la) - tape.scalar(lb)).abs() < 1e-10);
    }

    #[test]
    fn linear_variant_is_linear_in_features(seed in any::<u64>(), k in 1usize..4) {
        let g = random_graph(7, 0.4, 3, 2, seed);
        let spec = node_spec(Base::Gcn, Variant::Linear, k, &g, 4);
        let (_, params) = build_variant(&spec, &mut rng::seeded(seed)).unwrap();
        let doubled = g.clone().with_features(g.features().scale(2.0)).unwrap();
        let zero = g.clone().with_features(Matrix::zeros(7, 3)).unwrap();
        let run = |graph: &graphair_core::graph::Graph| {
            let mut spec = spec;
            spec.k_layers = k;
            let (model, _) = build_variant(&spec, &mut rng::seeded(0)).unwrap();
            let inputs = GraphInputs::new(Base::Gcn, graph.adjacency(), graph.features()).unwrap();
            let mut tape = Tape::new();
            let b = params.bind(&mut tape);
            let f = model.forward(&mut tape, &inputs, &b, None).unwrap();
            tape.value(f.output).clone()
        };
        let z0 = run(&zero);
        let d1 = run(&g).zip_map(&z0, |a, b| a - b);
        let d2 = run(&doubled).zip_map(&z0, |a, b| a - b);
        prop_assert!(d2.max_abs_diff(&d1.scale(2.0)) < 1e-12);
    }

    #[test]
    fn propagation_matrices(n in 1usize..=10, p in 0.0f64..1.0, seed in any::<u64>()) {
        let g = random_graph(n, p, 1, 2, seed);
        let sym = normalize_adjacency(g.adjacency()).unwrap();
        prop_assert!(sym.is_symmetric());
        let mean = mean_adjacency(g.adjacency()).unwrap();
        for i in 0..n {
            let (_, vals) = mean.row(i);
            prop_assert!((vals.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    #[test]
    fn primitive_chains_pass_gradcheck(seed in any::<u64>()) {
        let err = identities::primitive_chain_error(seed, 1e-6);
        prop_assert!(err < 1e-5, "max relative error {err:e}");
    }
}
