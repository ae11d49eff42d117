//! Weighted undirected graphs with per-node features.
//!
//! A [`Graph`] is immutable once built. Edges are stored once with `i < j`
//! and expanded symmetrically into neighbour lists; the absence of an edge is
//! the null attribute, so every stored weight is strictly positive.

mod generators;
mod io;

pub use generators::{build_erdos_renyi, build_grid2d, build_ring, build_sensor, ER_FEATURES};
pub use io::{load_graph, read_graph, save_graph, write_graph};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("edge ({0}, {0}) is a self-loop")]
    SelfLoop(usize),
    #[error("edge ({i}, {j}) references a node outside 0..{n}")]
    OutOfRange { i: usize, j: usize, n: usize },
    #[error("edge ({i}, {j}) has invalid weight {w}; weights must be finite and > 0")]
    BadWeight { i: usize, j: usize, w: f64 },
    #[error("duplicate edge ({i}, {j})")]
    Duplicate { i: usize, j: usize },
    #[error("{what} matrix has {rows} rows, expected {n}")]
    RowMismatch { what: &'static str, rows: usize, n: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid generator parameter: {0}")]
    InvalidParameter(String),
    #[error("no connected sample after {0} attempts")]
    NotConnected(usize),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// An undirected weighted edge, stored with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LaplacianKind {
    /// `L = D - A`
    Combinatorial,
    /// `I - D^{-1/2} A D^{-1/2}`; isolated nodes get a zero diagonal.
    SymNormalized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    features: DMatrix<f64>,
    coords: Option<DMatrix<f64>>,
    edges: Vec<Edge>,
    neighbors: Vec<Vec<(usize, f64)>>,
}

impl Graph {
    /// Builds a graph from a feature matrix (one row per node), an edge list
    /// in either orientation and optional coordinates.
    pub fn new(
        features: DMatrix<f64>,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
        coords: Option<DMatrix<f64>>,
    ) -> Result<Self, GraphError> {
        let n = features.nrows();
        if features.iter().any(|v| !v.is_finite()) {
            return Err(GraphError::NonFinite("features"));
        }
        if let Some(c) = &coords {
            if c.nrows() != n {
                return Err(GraphError::RowMismatch { what: "coordinate", rows: c.nrows(), n });
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(GraphError::NonFinite("coordinates"));
            }
        }
        let mut list = Vec::new();
        for (a, b, w) in edges {
            if a >= n || b >= n {
                return Err(GraphError::OutOfRange { i: a, j: b, n });
            }
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(GraphError::BadWeight { i: a, j: b, w });
            }
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            list.push(Edge { i, j, w });
        }
        list.sort_by(|x, y| (x.i, x.j).cmp(&(y.i, y.j)));
        if let Some(d) = list.windows(2).find(|p| p[0].i == p[1].i && p[0].j == p[1].j) {
            return Err(GraphError::Duplicate { i: d[0].i, j: d[0].j });
        }
        let mut neighbors = vec![Vec::new(); n];
        for e in &list {
            neighbors[e.i].push((e.j, e.w));
            neighbors[e.j].push((e.i, e.w));
        }
        for nb in &mut neighbors {
            nb.sort_by_key(|&(j, _)| j);
        }
        Ok(Self { features, coords, edges: list, neighbors })
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn coords(&self) -> Option<&DMatrix<f64>> {
        self.coords.as_ref()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Neighbours of `i` with edge weights, sorted by index.
    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.neighbors[i]
    }

    /// Weighted degree `D_ii`.
    pub fn degree(&self, i: usize) -> f64 {
        self.neighbors[i].iter().map(|&(_, w)| w).sum()
    }

    pub fn degrees(&self) -> DVector<f64> {
        DVector::from_iterator(self.n(), (0..self.n()).map(|i| self.degree(i)))
    }

    /// Same topology with a different feature matrix.
    pub fn with_features(&self, features: DMatrix<f64>) -> Result<Self, GraphError> {
        if features.nrows() != self.n() {
            return Err(GraphError::RowMismatch { what: "feature", rows: features.nrows(), n: self.n() });
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(GraphError::NonFinite("features"));
        }
        Ok(Self { features, ..self.clone() })
    }

    pub fn adjacency(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut a = DMatrix::zeros(n, n);
        for e in &self.edges {
            a[(e.i, e.j)] = e.w;
            a[(e.j, e.i)] = e.w;
        }
        a
    }

    pub fn laplacian(&self, kind: LaplacianKind) -> DMatrix<f64> {
        laplacian_of(&self.adjacency(), kind)
    }

    /// `A · M` using the neighbour lists.
    pub fn adj_mul(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(m.nrows(), self.n(), "adj_mul: row mismatch");
        let mut out = DMatrix::zeros(m.nrows(), m.ncols());
        for c in 0..m.ncols() {
            let col = m.column(c);
            for i in 0..self.n() {
                out[(i, c)] = self.neighbors[i].iter().map(|&(j, w)| w * col[j]).sum();
            }
        }
        out
    }

    /// Connected-component label of every node; labels are dense and
    /// numbered by the smallest node index they contain.
    pub fn components(&self) -> Vec<usize> {
        let n = self.n();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for e in &self.edges {
            let (a, b) = (find(&mut parent, e.i), find(&mut parent, e.j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        let mut out = vec![0; n];
        for i in 0..n {
            let r = find(&mut parent, i);
            if label[r] == usize::MAX {
                label[r] = next;
                next += 1;
            }
            out[i] = label[r];
        }
        out
    }

    pub fn num_components(&self) -> usize {
        self.components().iter().max().map_or(0, |m| m + 1)
    }

    pub fn is_connected(&self) -> bool {
        self.num_components() <= 1
    }

    /// Induced subgraph on `nodes` (in the given order).
    pub fn subgraph(&self, nodes: &[usize]) -> Self {
        let mut pos = vec![usize::MAX; self.n()];
        for (k, &v) in nodes.iter().enumerate() {
            pos[v] = k;
        }
        let features = self.features.select_rows(nodes);
        let coords = self.coords.as_ref().map(|c| c.select_rows(nodes));
        let edges = self
            .edges
            .iter()
            .filter(|e| pos[e.i] != usize::MAX && pos[e.j] != usize::MAX)
            .map(|e| (pos[e.i], pos[e.j], e.w));
        Self::new(features, edges, coords).expect("subgraph of a valid graph is valid")
    }

    /// Relabels node `i` as `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.n();
        assert_eq!(perm.len(), n);
        let mut inv = vec![0; n];
        for (i, &p) in perm.iter().enumerate() {
            inv[p] = i;
        }
        let features = self.features.select_rows(&inv);
        let coords = self.coords.as_ref().map(|c| c.select_rows(&inv));
        let edges = self.edges.iter().map(|e| (perm[e.i], perm[e.j], e.w));
        Self::new(features, edges, coords).expect("permutation of a valid graph is valid")
    }
}

/// Laplacian of a dense symmetric adjacency. The diagonal of `a` (self-loops)
/// is ignored, so pooled adjacencies with self-loops are handled uniformly.
pub fn laplacian_of(a: &DMatrix<f64>, kind: LaplacianKind) -> DMatrix<f64> {
    let n = a.nrows();
    let deg: Vec<f64> = (0..n).map(|i| (0..n).filter(|&j| j != i).map(|j| a[(i, j)]).sum()).collect();
    let mut l = DMatrix::zeros(n, n);
    match kind {
        LaplacianKind::Combinatorial => {
            for i in 0..n {
                for j in 0..n {
                    l[(i, j)] = if i == j { deg[i] } else { -a[(i, j)] };
                }
            }
        }
        LaplacianKind::SymNormalized => {
            let inv_sqrt: Vec<f64> = deg.iter().map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 }).collect();
            for i in 0..n {
                for j in 0..n {
                    l[(i, j)] = if i == j {
                        if deg[i] > 0.0 {
                            1.0
                        } else {
                            0.0
                        }
                    } else {
                        -a[(i, j)] * inv_sqrt[i] * inv_sqrt[j]
                    };
                }
            }
        }
    }
    l
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> Graph {
        Graph::new(DMatrix::zeros(n, 1), (0..n - 1).map(|i| (i, i + 1, 1.0)), None).unwrap()
    }

    #[test]
    fn rejects_invalid_edges() {
        let x = DMatrix::zeros(3, 1);
        assert!(matches!(Graph::new(x.clone(), [(0, 0, 1.0)], None), Err(GraphError::SelfLoop(0))));
        assert!(matches!(Graph::new(x.clone(), [(0, 3, 1.0)], None), Err(GraphError::OutOfRange { .. })));
        assert!(matches!(Graph::new(x.clone(), [(0, 1, 0.0)], None), Err(GraphError::BadWeight { .. })));
        assert!(matches!(Graph::new(x, [(0, 1, 1.0), (1, 0, 2.0)], None), Err(GraphError::Duplicate { i: 0, j: 1 })));
    }

    #[test]
    fn edges_are_canonical() {
        let g = Graph::new(DMatrix::zeros(3, 1), [(2, 1, 1.0), (1, 0, 2.0)], None).unwrap();
        assert_eq!(g.edges()[0], Edge { i: 0, j: 1, w: 2.0 });
        assert_eq!(g.edges()[1], Edge { i: 1, j: 2, w: 1.0 });
        assert_eq!(g.neighbors(1), &[(0, 2.0), (2, 1.0)]);
    }

    #[test]
    fn path2_laplacian() {
        let l = path(2).laplacian(LaplacianKind::Combinatorial);
        assert_eq!(l, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
    }

    #[test]
    fn triangle_laplacian_is_2i_minus_a() {
        let g = Graph::new(DMatrix::zeros(3, 1), [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)], None).unwrap();
        let expected = DMatrix::identity(3, 3) * 2.0 - g.adjacency();
        assert_eq!(g.laplacian(LaplacianKind::Combinatorial), expected);
    }

    #[test]
    fn normalized_laplacian_isolated_node_has_zero_diagonal() {
        let g = Graph::new(DMatrix::zeros(3, 1), [(0, 1, 1.0)], None).unwrap();
        let l = g.laplacian(LaplacianKind::SymNormalized);
        assert_eq!(l[(2, 2)], 0.0);
        assert_eq!(l[(0, 0)], 1.0);
        assert_eq!(l[(0, 1)], -1.0);
    }

    #[test]
    fn combinatorial_rows_sum_to_zero() {
        let g = Graph::new(DMatrix::zeros(4, 1), [(0, 1, 0.5), (1, 2, 2.0), (0, 3, 1.5)], None).unwrap();
        let l = g.laplacian(LaplacianKind::Combinatorial);
        for i in 0..4 {
            assert!(l.row(i).sum().abs() < 1e-15);
        }
    }

    #[test]
    fn components_and_subgraph() {
        let g = Graph::new(DMatrix::zeros(5, 1), [(0, 2, 1.0), (3, 4, 1.0)], None).unwrap();
        assert_eq!(g.components(), vec![0, 1, 0, 2, 2]);
        let s = g.subgraph(&[3, 4]);
        assert_eq!(s.n(), 2);
        assert_eq!(s.edges(), &[Edge { i: 0, j: 1, w: 1.0 }]);
    }

    #[test]
    fn adj_mul_matches_dense() {
        let g = Graph::new(DMatrix::zeros(3, 1), [(0, 1, 2.0), (1, 2, 3.0)], None).unwrap();
        let m = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(g.adj_mul(&m), g.adjacency() * &m);
    }

    #[test]
    fn permutation_relabels_nodes() {
        let x = DMatrix::from_column_slice(3, 1, &[10.0, 11.0, 12.0]);
        let g = Graph::new(x, [(0, 1, 1.0)], None).unwrap();
        let p = g.permuted(&[2, 0, 1]);
        assert_eq!(p.features()[(2, 0)], 10.0);
        assert_eq!(p.edges(), &[Edge { i: 0, j: 2, w: 1.0 }]);
    }
}
