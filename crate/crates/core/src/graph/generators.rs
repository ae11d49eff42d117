//! Deterministic generators for the benchmark graphs.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Graph, GraphError};

/// Feature width of [`build_erdos_renyi`] graphs.
pub const ER_FEATURES: usize = 4;

const SENSOR_NEIGHBORS: usize = 8;
const SENSOR_ATTEMPTS: usize = 100;

/// 4-neighbour lattice with unit weights. Node `r * cols + c` sits at
/// `(c, r) / max(rows, cols)`; the coordinates double as the features.
pub fn build_grid2d(rows: usize, cols: usize) -> Result<Graph, GraphError> {
    if rows == 0 || cols == 0 {
        return Err(GraphError::InvalidParameter(format!("grid2d needs rows, cols >= 1, got {rows}x{cols}")));
    }
    let h = 1.0 / rows.max(cols) as f64;
    let n = rows * cols;
    let coords = DMatrix::from_fn(n, 2, |u, d| if d == 0 { (u % cols) as f64 * h } else { (u / cols) as f64 * h });
    let mut edges = Vec::with_capacity(2 * n);
    for r in 0..rows {
        for c in 0..cols {
            let u = r * cols + c;
            if c + 1 < cols {
                edges.push((u, u + 1, 1.0));
            }
            if r + 1 < rows {
                edges.push((u, u + cols, 1.0));
            }
        }
    }
    Graph::new(coords.clone(), edges, Some(coords))
}

/// Cycle graph with unit weights and nodes on the unit circle.
pub fn build_ring(n: usize) -> Result<Graph, GraphError> {
    if n < 3 {
        return Err(GraphError::InvalidParameter(format!("ring needs n >= 3, got {n}")));
    }
    let coords = DMatrix::from_fn(n, 2, |k, d| {
        let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
        if d == 0 {
            t.cos()
        } else {
            t.sin()
        }
    });
    let edges = (0..n).map(|k| (k, (k + 1) % n, 1.0));
    Graph::new(coords.clone(), edges, Some(coords))
}

/// Random sensor network: uniform points in the unit square joined to their
/// 8 nearest neighbours (symmetrised), with Gaussian weights
/// `exp(-d^2 / 2 sigma^2)` where `sigma` is the mean neighbour distance.
/// Samples are redrawn until connected.
pub fn build_sensor(n: usize, seed: u64) -> Result<Graph, GraphError> {
    if n < 2 {
        return Err(GraphError::InvalidParameter(format!("sensor needs n >= 2, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = SENSOR_NEIGHBORS.min(n - 1);
    for _ in 0..SENSOR_ATTEMPTS {
        let pts = DMatrix::from_fn(n, 2, |_, _| rng.random::<f64>());
        let dist = |a: usize, b: usize| {
            let dx = pts[(a, 0)] - pts[(b, 0)];
            let dy = pts[(a, 1)] - pts[(b, 1)];
            (dx * dx + dy * dy).sqrt()
        };
        let mut knn = Vec::with_capacity(n);
        let mut total = 0.0;
        for i in 0..n {
            let mut order: Vec<(f64, usize)> = (0..n).filter(|&j| j != i).map(|j| (dist(i, j), j)).collect();
            order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            order.truncate(k);
            total += order.iter().map(|p| p.0).sum::<f64>();
            knn.push(order);
        }
        let sigma = total / (n * k) as f64;
        let mut pairs: Vec<(usize, usize)> =
            knn.iter().enumerate().flat_map(|(i, nb)| nb.iter().map(move |&(_, j)| (i.min(j), i.max(j)))).collect();
        pairs.sort_unstable();
        pairs.dedup();
        let edges: Vec<_> = pairs
            .into_iter()
            .map(|(i, j)| {
                let d = dist(i, j);
                // Coincident points would give weight 1; keep weights strictly positive regardless.
                (i, j, (-d * d / (2.0 * sigma * sigma)).exp().max(f64::MIN_POSITIVE))
            })
            .collect();
        let g = Graph::new(pts.clone(), edges, Some(pts))?;
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(GraphError::NotConnected(SENSOR_ATTEMPTS))
}

/// G(n, p) with unit weights and uniform `[0, 1)` node features of width
/// [`ER_FEATURES`]. Pairs are sampled with geometric skips, so the cost is
/// proportional to the number of edges.
pub fn build_erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Graph, GraphError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(GraphError::InvalidParameter(format!("edge probability must be in [0, 1], got {p}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let features = DMatrix::from_fn(n, ER_FEATURES, |_, _| rng.random::<f64>());
    let mut edges = Vec::new();
    if p >= 1.0 {
        for j in 1..n {
            for i in 0..j {
                edges.push((i, j, 1.0));
            }
        }
    } else if p > 0.0 {
        let log_q = (1.0 - p).ln();
        // Walk the lower triangle (row v, column w < v) in skip steps.
        let (mut v, mut w) = (1usize, -1i64);
        while v < n {
            let r: f64 = rng.random();
            w += 1 + ((1.0 - r).ln() / log_q).floor() as i64;
            while w >= v as i64 && v < n {
                w -= v as i64;
                v += 1;
            }
            if v < n {
                edges.push((w as usize, v, 1.0));
            }
        }
    }
    Graph::new(features, edges, None)
}
