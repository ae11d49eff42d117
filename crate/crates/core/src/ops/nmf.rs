//! Nonnegative factorisation of the adjacency, `A ~ W H`, with `S = H^T`.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::graph::Graph;
use crate::pooling::{KPolicy, OperatorDescriptor, PoolError, PoolingOperator, SelectOutput};

/// Keeps the multiplicative updates away from 0/0.
const DENOM_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmfConfig {
    /// `Fixed(K)` or `Ratio(r)`.
    pub rank: KPolicy,
    pub max_iters: usize,
    /// Stop once the relative objective change drops below this.
    pub tol: f64,
    pub seed: u64,
}

impl Default for NmfConfig {
    fn default() -> Self {
        Self { rank: KPolicy::Ratio(0.5), max_iters: 500, tol: 1e-5, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NmfFactorization {
    pub w: DMatrix<f64>,
    pub h: DMatrix<f64>,
    /// Squared Frobenius error `||A - WH||^2`, starting with the initial guess.
    pub objective: Vec<f64>,
    pub converged: bool,
}

fn frob_err(a: &DMatrix<f64>, w: &DMatrix<f64>, h: &DMatrix<f64>) -> f64 {
    (a - w * h).norm_squared()
}

/// Lee-Seung multiplicative updates. The iterate returned is the last one,
/// which is also the best since the objective never increases.
pub fn nmf_factorize(a: &DMatrix<f64>, rank: usize, cfg: &NmfConfig) -> Result<NmfFactorization, PoolError> {
    let n = a.nrows();
    if rank == 0 {
        return Err(PoolError::Config("nmf rank must be >= 1".into()));
    }
    if a.ncols() != n || a.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(PoolError::Config("nmf needs a square nonnegative matrix".into()));
    }
    let mean = if n == 0 { 0.0 } else { a.sum() / (n * n) as f64 };
    let scale = (mean / rank as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut draw = |r, c| {
        DMatrix::from_fn(r, c, |_, _| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z.abs() * scale
        })
    };
    let mut w = draw(n, rank);
    let mut h = draw(rank, n);
    let mut objective = vec![frob_err(a, &w, &h)];
    let mut converged = objective[0] == 0.0;
    for _ in 0..cfg.max_iters {
        if converged {
            break;
        }
        let num_h = w.tr_mul(a);
        let den_h = w.tr_mul(&w) * &h;
        h.zip_zip_apply(&num_h, &den_h, |x, nu, de| *x *= nu / (de + DENOM_EPS));
        let num_w = a * h.transpose();
        let den_w = &w * (&h * h.transpose());
        w.zip_zip_apply(&num_w, &den_w, |x, nu, de| *x *= nu / (de + DENOM_EPS));
        let prev = *objective.last().expect("non-empty");
        let cur = frob_err(a, &w, &h);
        objective.push(cur);
        if (prev - cur).abs() <= cfg.tol * prev.max(f64::MIN_POSITIVE) {
            converged = true;
        }
    }
    Ok(NmfFactorization { w, h, objective, converged })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Nmf {
    pub config: NmfConfig,
}

impl Nmf {
    pub fn new(config: NmfConfig) -> Self {
        Self { config }
    }
}

impl PoolingOperator for Nmf {
    fn id(&self) -> &str {
        "nmf"
    }

    fn descriptor(&self) -> OperatorDescriptor {
        OperatorDescriptor {
            trainable: false,
            dense: true,
            fixed: false,
            hierarchical: true,
            k_policy: self.config.rank,
        }
    }

    fn select(&self, g: &Graph) -> Result<SelectOutput, PoolError> {
        let k = self
            .config
            .rank
            .resolve(g.n())
            .ok_or_else(|| PoolError::Config("nmf needs a fixed rank or a ratio".into()))?;
        let f = nmf_factorize(&g.adjacency(), k, &self.config)?;
        if !f.converged {
            log::warn!(
                "nmf stopped after {} iterations without reaching tol {}",
                self.config.max_iters,
                self.config.tol
            );
        }
        SelectOutput::dense(f.h.transpose())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(k: usize, seed: u64) -> NmfConfig {
        NmfConfig { rank: KPolicy::Fixed(k), max_iters: 2000, tol: 1e-12, seed }
    }

    #[test]
    fn rank_one_ones() {
        let a = DMatrix::from_element(4, 4, 1.0);
        let f = nmf_factorize(&a, 1, &cfg(1, 0)).unwrap();
        assert!((&f.w * &f.h - &a).amax() < 1e-6);
        let h = f.h.row(0);
        let m = h.mean();
        assert!(h.iter().all(|v| (v - m).abs() < 1e-6 * m.max(1.0)));
    }

    #[test]
    fn two_triangles_split() {
        let g = Graph::new(
            DMatrix::zeros(6, 1),
            [(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0), (3, 4, 1.0), (3, 5, 1.0), (4, 5, 1.0)],
            None,
        )
        .unwrap();
        let s = Nmf::new(cfg(2, 1)).select(&g).unwrap().matrix();
        let arg: Vec<usize> = s.row_iter().map(|r| r.transpose().argmax().0).collect();
        assert_eq!(arg[0], arg[1]);
        assert_eq!(arg[1], arg[2]);
        assert_eq!(arg[3], arg[4]);
        assert_eq!(arg[4], arg[5]);
        assert_ne!(arg[0], arg[3]);
    }

    #[test]
    fn objective_never_increases() {
        for seed in 0..20 {
            let g = crate::graph::build_erdos_renyi(15, 0.3, seed).unwrap();
            let f = nmf_factorize(&g.adjacency(), 4, &NmfConfig { seed, ..cfg(4, seed) }).unwrap();
            for w in f.objective.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-15, "seed {seed}: {} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn non_convergence_is_flagged() {
        let g = crate::graph::build_grid2d(4, 4).unwrap();
        let f = nmf_factorize(&g.adjacency(), 3, &NmfConfig { max_iters: 2, tol: 0.0, ..cfg(3, 0) }).unwrap();
        assert!(!f.converged);
        assert_eq!(f.objective.len(), 3);
        assert!(f.w.iter().chain(f.h.iter()).all(|&v| v >= 0.0));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(nmf_factorize(&DMatrix::zeros(2, 2), 0, &cfg(1, 0)).is_err());
        assert!(nmf_factorize(&DMatrix::from_element(2, 2, -1.0), 1, &cfg(1, 0)).is_err());
    }
}
