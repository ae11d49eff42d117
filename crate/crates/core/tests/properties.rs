//! Invariants checked over generated inputs.

mod common;

use approx::assert_relative_eq;
use graphpool::eval::{
    gamma_baseline, quadratic_loss, run_autoencoder, run_spectral, spectral_signal, ExperimentKind, RunConfig,
};
use graphpool::graph::{build_erdos_renyi, build_sensor, Graph, LaplacianKind};
use graphpool::linalg::{eigvalsh, kron_reduction, pseudo_inverse, sparsemax};
use graphpool::ops::{nmf_factorize, NmfConfig};
use graphpool::pooling::pool;
use graphpool::registry::{build_operator, OpArgs};
use nalgebra::DMatrix;
use proptest::prelude::*;

use common::*;

fn pooled_spectrum(g: &Graph, op: &str) -> Vec<f64> {
    let op = build_operator(op, g, &OpArgs::new(), 0).unwrap();
    let p = pool(g, op.as_pooling()).unwrap();
    eigvalsh(&p.a_pooled).unwrap()
}

fn config(kind: ExperimentKind) -> RunConfig {
    RunConfig { op_args: OpArgs::new(), train: kind.train_config() }
}

fn shuffle(n: usize, keys: &[u32]) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.sort_by_key(|&i| (keys[i], i));
    perm
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn sparsemax_matches_brute_force(z in proptest::collection::vec(-3.0f64..3.0, 1..9)) {
        let fast = sparsemax(&z);
        let slow = simplex_projection_brute(&z);
        prop_assert!((fast.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for (a, b) in fast.iter().zip(&slow) {
            prop_assert!(*a >= 0.0 && (a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn kron_matches_schur_complement((g, keep) in graph_with_keep_set(10)) {
        let l = g.laplacian(LaplacianKind::Combinatorial);
        let fast = kron_reduction(&l, &keep).unwrap();
        let slow = schur_dense(&l, &keep);
        prop_assert!((&fast - &slow).amax() <= 1e-9 * slow.amax().max(1.0));
        for r in fast.row_iter() {
            prop_assert!(r.sum().abs() < 1e-9);
        }
    }

    #[test]
    fn pinv_satisfies_moore_penrose(a in low_rank_matrix()) {
        prop_assert!(moore_penrose_residual(&a, &pseudo_inverse(&a)) < 1e-8);
    }

    #[test]
    fn laplacian_is_psd_and_eigenvalues_sum_to_trace(g in connected_graph(12)) {
        for kind in [LaplacianKind::Combinatorial, LaplacianKind::SymNormalized] {
            let l = g.laplacian(kind);
            let ev = eigvalsh(&l).unwrap();
            prop_assert!(ev[0] > -1e-9);
            prop_assert!((ev.iter().sum::<f64>() - l.trace()).abs() < 1e-9 * l.trace().max(1.0));
            prop_assert!(ev[1] > 1e-9, "connected graph has a single zero eigenvalue");
        }
    }

    #[test]
    fn gamma_ignores_relabelling_and_translation(g in connected_graph(10), keys in proptest::collection::vec(any::<u32>(), 10), shift in -5.0f64..5.0) {
        let n = g.n();
        let x = DMatrix::from_fn(n, 2, |i, j| ((i * 7 + j * 3) % 5) as f64);
        let g = g.with_features(x.clone()).unwrap();
        let base = gamma_baseline(&g).unwrap();
        let moved = g.with_features(x.add_scalar(shift)).unwrap();
        prop_assert!((gamma_baseline(&moved).unwrap() - base).abs() < 1e-9);
        let relabelled = g.permuted(&shuffle(n, &keys[..n]));
        prop_assert!((gamma_baseline(&relabelled).unwrap() - base).abs() < 1e-12);
    }

    #[test]
    fn nmf_objective_never_increases(g in connected_graph(10), rank in 1usize..4, seed in any::<u64>()) {
        let cfg = NmfConfig { max_iters: 100, seed, ..NmfConfig::default() };
        let f = nmf_factorize(&g.adjacency(), rank.min(g.n()), &cfg).unwrap();
        for w in f.objective.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-10) + 1e-12);
        }
    }
}

#[test]
fn zero_eigenvalues_count_components() {
    for seed in 0..20 {
        let g = build_erdos_renyi(30, 0.06, seed).unwrap();
        let ev = eigvalsh(&g.laplacian(LaplacianKind::Combinatorial)).unwrap();
        let zeros = ev.iter().filter(|v| v.abs() < 1e-8).count();
        assert_eq!(zeros, g.num_components(), "seed {seed}");
    }
}

#[test]
fn nmf_recovers_rank_k_products() {
    let w = DMatrix::from_fn(12, 3, |i, j| if i % 3 == j { 1.0 + i as f64 / 12.0 } else { 0.05 });
    let a = &w * w.transpose();
    let cfg = NmfConfig { max_iters: 5000, tol: 1e-12, ..NmfConfig::default() };
    let f = nmf_factorize(&a, 3, &cfg).unwrap();
    let rel = (&a - &f.w * &f.h).norm_squared() / a.norm_squared();
    assert!(rel <= 1e-3, "relative error {rel}");
}

#[test]
fn quadratic_loss_ignores_signal_signs() {
    let g = build_sensor(40, 3).unwrap();
    let signal = spectral_signal(&g).unwrap();
    let mut flipped = signal.clone();
    for j in (0..flipped.ncols()).step_by(2) {
        flipped.column_mut(j).neg_mut();
    }
    let loss = |x: &DMatrix<f64>| {
        let h = g.with_features(x.clone()).unwrap();
        let op = build_operator("ndp", &h, &OpArgs::new(), 0).unwrap();
        quadratic_loss(&h, x, &pool(&h, op.as_pooling()).unwrap())
    };
    assert_relative_eq!(loss(&signal), loss(&flipped), epsilon = 1e-10);
}

#[test]
fn deterministic_operators_commute_with_relabelling() {
    for seed in 0..5u64 {
        let g = build_sensor(30, seed).unwrap();
        let keys: Vec<u32> = (0..30u32).map(|i| i.wrapping_mul(2654435761).rotate_left(seed as u32)).collect();
        let h = g.permuted(&shuffle(30, &keys));
        for op in ["ndp", "lapool"] {
            let (a, b) = (pooled_spectrum(&g, op), pooled_spectrum(&h, op));
            assert_eq!(a.len(), b.len(), "{op} seed {seed}");
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-8, "{op} seed {seed}: {x} vs {y}");
            }
        }
    }
}

#[test]
fn identity_pooling_is_lossless() {
    let g = build_sensor(30, 1).unwrap();
    let ae = run_autoencoder("sensor", &g, "identity", &config(ExperimentKind::Autoencoder));
    assert!(ae.mse.unwrap() < 1e-20, "{:?}", ae.status);
    let sp = run_spectral("sensor", &g, "identity", &config(ExperimentKind::Spectral));
    assert!(sp.quad_loss.unwrap() < 1e-12, "{:?}", sp.status);
}
