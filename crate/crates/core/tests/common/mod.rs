//! Independent reference implementations shared by the integration tests.

#![allow(dead_code)]

use graphpool::graph::Graph;
use nalgebra::DMatrix;
use proptest::prelude::*;

/// Projection onto the simplex by enumerating every support: the closest
/// feasible candidate `p_S = z_S - tau_S` is the projection.
pub fn simplex_projection_brute(z: &[f64]) -> Vec<f64> {
    let n = z.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1 << n) {
        let members: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        let tau = (members.iter().map(|&i| z[i]).sum::<f64>() - 1.0) / members.len() as f64;
        let mut p = vec![0.0; n];
        let mut feasible = true;
        for &i in &members {
            p[i] = z[i] - tau;
            feasible &= p[i] >= -1e-15;
        }
        if !feasible {
            continue;
        }
        let d: f64 = p.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
        if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
            best = Some((d, p));
        }
    }
    best.expect("the full support is always feasible after clipping").1
}

/// `L_kk - L_kd L_dd^{-1} L_dk` through an explicit LU inverse.
pub fn schur_dense(l: &DMatrix<f64>, keep: &[usize]) -> DMatrix<f64> {
    let drop: Vec<usize> = (0..l.nrows()).filter(|i| !keep.contains(i)).collect();
    let l_kk = l.select_rows(keep).select_columns(keep);
    if drop.is_empty() {
        return l_kk;
    }
    let l_kd = l.select_rows(keep).select_columns(&drop);
    let l_dd = l.select_rows(&drop).select_columns(&drop);
    let inv = l_dd.try_inverse().expect("grounded Laplacian of a connected graph is invertible");
    l_kk - &l_kd * inv * l_kd.transpose()
}

/// Connected weighted graph: a random spanning tree plus extra edges.
pub fn connected_graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n)
        .prop_flat_map(|n| {
            let parents: Vec<_> = (1..n).map(|i| 0..i).collect();
            let extras = proptest::collection::vec((0..n, 0..n, 0.1f64..3.0), 0..(2 * n));
            let tree_w = proptest::collection::vec(0.1f64..3.0, n - 1);
            (Just(n), parents, tree_w, extras)
        })
        .prop_map(|(n, parents, tree_w, extras)| {
            let mut w = DMatrix::zeros(n, n);
            for (i, (&p, &wt)) in parents.iter().zip(&tree_w).enumerate() {
                w[(i + 1, p)] = wt;
                w[(p, i + 1)] = wt;
            }
            for (a, b, wt) in extras {
                if a != b {
                    w[(a, b)] = wt;
                    w[(b, a)] = wt;
                }
            }
            let mut edges = Vec::new();
            for j in 0..n {
                for i in 0..j {
                    if w[(i, j)] > 0.0 {
                        edges.push((i, j, w[(i, j)]));
                    }
                }
            }
            Graph::new(DMatrix::zeros(n, 1), edges, None).unwrap()
        })
}

/// Nonempty proper-or-full subset of `0..n`, sorted.
pub fn keep_set(n: usize) -> impl Strategy<Value = Vec<usize>> {
    proptest::sample::subsequence((0..n).collect::<Vec<_>>(), 1..=n)
}

/// Matrix with a prescribed rank deficiency: `rows x cols` with rank at most `rank`.
pub fn low_rank_matrix() -> impl Strategy<Value = DMatrix<f64>> {
    (1usize..7, 1usize..7, 1usize..7).prop_flat_map(|(r, c, k)| {
        (proptest::collection::vec(-2.0f64..2.0, r * k), proptest::collection::vec(-2.0f64..2.0, k * c))
            .prop_map(move |(a, b)| DMatrix::from_vec(r, k, a) * DMatrix::from_vec(k, c, b))
    })
}

/// Largest violation of the four Moore-Penrose identities, relative to `||A||`-scaled sizes.
pub fn moore_penrose_residual(a: &DMatrix<f64>, p: &DMatrix<f64>) -> f64 {
    let scale_a = a.norm().max(1e-300);
    let scale_p = p.norm().max(1e-300);
    let r1 = (a * p * a - a).norm() / scale_a;
    let r2 = (p * a * p - p).norm() / scale_p;
    let ap = a * p;
    let pa = p * a;
    let r3 = (&ap - ap.transpose()).norm() / ap.norm().max(1.0);
    let r4 = (&pa - pa.transpose()).norm() / pa.norm().max(1.0);
    r1.max(r2).max(r3).max(r4)
}

pub fn graph_with_keep_set(max_n: usize) -> impl Strategy<Value = (Graph, Vec<usize>)> {
    connected_graph(max_n).prop_flat_map(|g| {
        let n = g.n();
        (Just(g), keep_set(n))
    })
}
