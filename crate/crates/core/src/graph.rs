//! Undirected simple graphs and the structural quantities the coupling
//! bounds are built from: diameter, the common-neighbour matrix `P`, the
//! Laplacian spectrum and pairwise differences over the complete graph.
//!
//! Vertices are 0-indexed here. The JSON loaders in [`crate::io`] convert
//! from the 1-indexed form used in files.

use std::collections::{BTreeSet, VecDeque};

use rand::Rng;

use crate::error::{Error, Result};

/// Undirected simple graph. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
    adjacency: Vec<Vec<bool>>,
    neighbors: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from 0-indexed edge pairs. Orientation and order do
    /// not matter; self-loops, duplicates and out-of-range endpoints are
    /// rejected.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("graph needs at least one vertex".into()));
        }
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a}, {b}) out of range for n = {n}"
                )));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {a}")));
            }
            if !set.insert((a.min(b), a.max(b))) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({a}, {b})")));
            }
        }
        Ok(Self::from_canonical(n, set))
    }

    fn from_canonical(n: usize, edges: BTreeSet<(usize, usize)>) -> Self {
        let mut adjacency = vec![vec![false; n]; n];
        let mut neighbors = vec![Vec::new(); n];
        for &(i, j) in &edges {
            adjacency[i][j] = true;
            adjacency[j][i] = true;
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Self {
            n,
            edges,
            adjacency,
            neighbors,
        }
    }

    pub fn complete(n: usize) -> Result<Self> {
        Self::new(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))))
    }

    pub fn path(n: usize) -> Result<Self> {
        Self::new(n, (1..n).map(|i| (i - 1, i)))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Edges as `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i][j]
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    /// Vertices adjacent to both `i` and `j`, ascending.
    pub fn common_neighbors(&self, i: usize, j: usize) -> Vec<usize> {
        self.neighbors[i]
            .iter()
            .copied()
            .filter(|&m| self.adjacency[j][m])
            .collect()
    }

    /// Number of vertex pairs that are not edges.
    pub fn missing_edge_count(&self) -> usize {
        self.n * (self.n - 1) / 2 - self.edges.len()
    }

    /// Hop distances from `source`; `None` for unreachable vertices.
    pub fn bfs_distances(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap_or(0);
            for &v in &self.neighbors[u] {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Largest shortest-path distance over all vertex pairs, or `None` when
    /// the graph is disconnected.
    pub fn diameter(&self) -> Option<usize> {
        let mut diam = 0;
        for s in 0..self.n {
            for d in self.bfs_distances(s) {
                diam = diam.max(d?);
            }
        }
        Some(diam)
    }

    pub fn is_connected(&self) -> bool {
        self.bfs_distances(0).iter().all(Option::is_some)
    }

    pub fn p_matrix(&self) -> PMatrix {
        let n = self.n;
        let mut values = vec![vec![0u32; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let common = self.common_neighbors(i, j).len() as u32;
                let p = common + 2 * u32::from(self.adjacency[i][j]);
                values[i][j] = p;
                values[j][i] = p;
            }
        }
        PMatrix { values }
    }

    /// `L = diag(deg) - A` as a dense row-major matrix.
    pub fn laplacian(&self) -> Vec<Vec<f64>> {
        let n = self.n;
        let mut l = vec![vec![0.0; n]; n];
        for i in 0..n {
            l[i][i] = self.degree(i) as f64;
            for &j in &self.neighbors[i] {
                l[i][j] = -1.0;
            }
        }
        l
    }

    /// Laplacian eigenvalues in ascending order.
    pub fn laplacian_spectrum(&self) -> Vec<f64> {
        symmetric_eigenvalues(self.laplacian())
    }

    /// Second-smallest Laplacian eigenvalue. Zero (up to round-off) for
    /// disconnected graphs; exactly zero for a single vertex.
    pub fn algebraic_connectivity(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let spectrum = self.laplacian_spectrum();
        spectrum[1].max(0.0)
    }
}

/// Common-neighbour counts plus twice the adjacency indicator; the diagonal
/// is unused and held at zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PMatrix {
    values: Vec<Vec<u32>>,
}

impl PMatrix {
    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.values[i][j]
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.values
    }
}

/// Pairwise differences `x_i - x_j` over all `i < j` in lexicographic pair
/// order, i.e. the transpose of the complete-graph incidence matrix applied
/// to `x`.
pub fn complete_incidence_transpose_apply(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            out.push(x[i] - x[j]);
        }
    }
    out
}

/// Adds uniformly chosen absent edges to the empty graph on `n` vertices
/// until the diameter is exactly two.
pub fn random_diameter2_graph<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Graph> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!(
            "diameter-two graphs need n >= 3, got {n}"
        )));
    }
    let mut absent: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let mut edges = BTreeSet::new();
    loop {
        // The complete graph minus one edge already has diameter 2, so the
        // pool never runs dry before we stop.
        let pick = rng.gen_range(0..absent.len());
        edges.insert(absent.swap_remove(pick));
        let g = Graph::from_canonical(n, edges.clone());
        if g.diameter() == Some(2) {
            return Ok(g);
        }
    }
}

const JACOBI_OFF_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations,
/// ascending. Iterates until the off-diagonal Frobenius norm drops below
/// `1e-12`.
pub fn symmetric_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    let off_norm = |a: &[Vec<f64>]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i][j] * a[i][j];
                }
            }
        }
        s.sqrt()
    };

    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_norm(&a) < JACOBI_OFF_TOL {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }

    let mut eig: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    eig.sort_by(f64::total_cmp);
    eig
}
