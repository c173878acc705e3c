//! Random directed bipartite and Erdős–Rényi digraphs and their Laplacians.
//!
//! Vertex order is all of `V1` (indices `0..n`) followed by `V2`
//! (`n..n+m`). Row `i` of a Laplacian describes the out-edges of vertex `i`:
//! off-diagonal entry `(i, j)` is the edge indicator `i -> j` and the
//! diagonal is minus the out-degree, so every row sums to zero.

use num_bigint::BigInt;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gfp::{is_prime, BitMatrix, GfMatrix, Modulus, MAX_MODULUS};
use crate::snf::IntMatrix;

/// Parameters of the random bipartite model.
///
/// `alpha > 1/p` is deliberately not enforced; phase sweeps go below it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: usize,
    pub alpha: f64,
    pub q: f64,
    pub p: u32,
    pub seed: u64,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "q must satisfy 0 < q < 1, got {}",
                self.q
            )));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must satisfy 0 < alpha <= 1, got {}",
                self.alpha
            )));
        }
        if self.n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        if self.m() < 1 {
            return Err(Error::InvalidParameter(format!(
                "floor(alpha * n) must be at least 1, got floor({} * {})",
                self.alpha, self.n
            )));
        }
        if self.p >= MAX_MODULUS || !is_prime(self.p) {
            return Err(Error::InvalidModulus(self.p));
        }
        Ok(())
    }

    /// `|V2| = floor(alpha * n)`. A `1e-9` guard keeps products such as
    /// `0.29 * 100` from flooring one below the intended integer.
    pub fn m(&self) -> usize {
        (self.alpha * self.n as f64 + 1e-9).floor() as usize
    }

    pub fn vertices(&self) -> usize {
        self.n + self.m()
    }
}

/// Bernoulli(q) draw from one `u64`; all samplers share this rule so draw
/// order fixes the graph.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Bernoulli {
    threshold: u64,
}

impl Bernoulli {
    pub(crate) fn new(q: f64) -> Self {
        // q * 2^64, saturating
        let scaled = q * 18_446_744_073_709_551_616.0;
        Self {
            threshold: if scaled >= u64::MAX as f64 {
                u64::MAX
            } else {
                scaled as u64
            },
        }
    }

    #[inline]
    pub(crate) fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> bool {
        rng.next_u64() < self.threshold
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawBipartite")]
pub struct BipartiteDigraph {
    pub n: usize,
    pub m: usize,
    /// `edges_12[i][j]`: edge from `V1` vertex `i` to `V2` vertex `j`.
    pub edges_12: Vec<Vec<u8>>,
    /// `edges_21[j][i]`: edge from `V2` vertex `j` to `V1` vertex `i`.
    pub edges_21: Vec<Vec<u8>>,
}

#[derive(Deserialize)]
struct RawBipartite {
    n: usize,
    m: usize,
    edges_12: Vec<Vec<u8>>,
    edges_21: Vec<Vec<u8>>,
}

impl TryFrom<RawBipartite> for BipartiteDigraph {
    type Error = Error;

    fn try_from(raw: RawBipartite) -> Result<Self> {
        BipartiteDigraph::new(raw.n, raw.m, raw.edges_12, raw.edges_21)
    }
}

fn check_indicators(name: &str, a: &[Vec<u8>], rows: usize, cols: usize) -> Result<()> {
    if a.len() != rows || a.iter().any(|r| r.len() != cols) {
        return Err(Error::InvalidParameter(format!(
            "{name} must be {rows}x{cols}"
        )));
    }
    if a.iter().flatten().any(|&e| e > 1) {
        return Err(Error::InvalidParameter(format!("{name} entries must be 0 or 1")));
    }
    Ok(())
}

impl BipartiteDigraph {
    pub fn new(n: usize, m: usize, edges_12: Vec<Vec<u8>>, edges_21: Vec<Vec<u8>>) -> Result<Self> {
        check_indicators("edges_12", &edges_12, n, m)?;
        check_indicators("edges_21", &edges_21, m, n)?;
        Ok(Self {
            n,
            m,
            edges_12,
            edges_21,
        })
    }

    pub fn empty(n: usize, m: usize) -> Self {
        Self {
            n,
            m,
            edges_12: vec![vec![0; m]; n],
            edges_21: vec![vec![0; n]; m],
        }
    }

    pub fn vertices(&self) -> usize {
        self.n + self.m
    }

    pub fn edge_count(&self) -> usize {
        let count = |a: &[Vec<u8>]| a.iter().flatten().filter(|&&e| e == 1).count();
        count(&self.edges_12) + count(&self.edges_21)
    }

    /// Adjacency of the whole graph as `(from, to)` pairs in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, row) in self.edges_12.iter().enumerate() {
            out.extend(row.iter().enumerate().filter(|(_, &e)| e == 1).map(|(j, _)| (i, self.n + j)));
        }
        for (j, row) in self.edges_21.iter().enumerate() {
            out.extend(row.iter().enumerate().filter(|(_, &e)| e == 1).map(|(i, _)| (self.n + j, i)));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawDigraph")]
pub struct Digraph {
    pub n: usize,
    pub adj: Vec<Vec<u8>>,
}

#[derive(Deserialize)]
struct RawDigraph {
    n: usize,
    adj: Vec<Vec<u8>>,
}

impl TryFrom<RawDigraph> for Digraph {
    type Error = Error;

    fn try_from(raw: RawDigraph) -> Result<Self> {
        Digraph::new(raw.n, raw.adj)
    }
}

impl Digraph {
    pub fn new(n: usize, adj: Vec<Vec<u8>>) -> Result<Self> {
        check_indicators("adj", &adj, n, n)?;
        if (0..n).any(|i| adj[i][i] != 0) {
            return Err(Error::InvalidParameter("adj must have a zero diagonal".into()));
        }
        Ok(Self { n, adj })
    }

    pub fn complete(n: usize) -> Self {
        let adj = (0..n)
            .map(|i| (0..n).map(|j| u8::from(i != j)).collect())
            .collect();
        Self { n, adj }
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().flatten().filter(|&&e| e == 1).count()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, row) in self.adj.iter().enumerate() {
            out.extend(row.iter().enumerate().filter(|(_, &e)| e == 1).map(|(j, _)| (i, j)));
        }
        out
    }
}

/// Anything with a Laplacian.
pub trait Graph {
    fn vertex_count(&self) -> usize;
    fn edge_list(&self) -> Vec<(usize, usize)>;
}

impl Graph for BipartiteDigraph {
    fn vertex_count(&self) -> usize {
        self.vertices()
    }

    fn edge_list(&self) -> Vec<(usize, usize)> {
        self.edges()
    }
}

impl Graph for Digraph {
    fn vertex_count(&self) -> usize {
        self.n
    }

    fn edge_list(&self) -> Vec<(usize, usize)> {
        self.edges()
    }
}

/// Draws the `2 n m` crossing-edge indicators in a fixed order (all of
/// `V1 -> V2` row-major, then all of `V2 -> V1` row-major) and reports each
/// present edge as `(from, to)` in global vertex indices.
fn draw_bipartite<R: RngCore + ?Sized>(n: usize, m: usize, q: f64, rng: &mut R, mut edge: impl FnMut(usize, usize)) {
    let coin = Bernoulli::new(q);
    for i in 0..n {
        for j in 0..m {
            if coin.sample(rng) {
                edge(i, n + j);
            }
        }
    }
    for j in 0..m {
        for i in 0..n {
            if coin.sample(rng) {
                edge(n + j, i);
            }
        }
    }
}

fn draw_er<R: RngCore + ?Sized>(n: usize, q: f64, rng: &mut R, mut edge: impl FnMut(usize, usize)) {
    let coin = Bernoulli::new(q);
    for i in 0..n {
        for j in 0..n {
            if i != j && coin.sample(rng) {
                edge(i, j);
            }
        }
    }
}

/// Each of the `2 n floor(alpha n)` crossing edges, in both orientations,
/// is present independently with probability `q`.
pub fn sample_bipartite_digraph<R: RngCore + ?Sized>(params: &ModelParams, rng: &mut R) -> BipartiteDigraph {
    let (n, m) = (params.n, params.m());
    let mut g = BipartiteDigraph::empty(n, m);
    draw_bipartite(n, m, params.q, rng, |from, to| {
        if from < n {
            g.edges_12[from][to - n] = 1;
        } else {
            g.edges_21[from - n][to] = 1;
        }
    });
    g
}

pub fn sample_er_digraph<R: RngCore + ?Sized>(n: usize, q: f64, rng: &mut R) -> Digraph {
    let mut adj = vec![vec![0u8; n]; n];
    draw_er(n, q, rng, |i, j| adj[i][j] = 1);
    Digraph { n, adj }
}

/// Same draws as [`sample_bipartite_digraph`], written straight into the
/// Laplacian mod `p`.
pub fn sample_bipartite_laplacian_mod_p<R: RngCore + ?Sized>(params: &ModelParams, rng: &mut R) -> Result<GfMatrix> {
    let (n, m) = (params.n, params.m());
    let mut builder = ModLaplacianBuilder::new(params.p, n + m)?;
    draw_bipartite(n, m, params.q, rng, |from, to| builder.edge(from, to));
    Ok(builder.finish())
}

/// Same draws as [`sample_bipartite_digraph`], into a packed `F_2` Laplacian.
pub fn sample_bipartite_laplacian_gf2<R: RngCore + ?Sized>(params: &ModelParams, rng: &mut R) -> BitMatrix {
    let (n, m) = (params.n, params.m());
    let mut lap = BitMatrix::zeros(n + m, n + m);
    draw_bipartite(n, m, params.q, rng, |from, to| {
        lap.set(from, to, true);
        lap.toggle(from, from);
    });
    lap
}

pub fn sample_er_laplacian_mod_p<R: RngCore + ?Sized>(n: usize, q: f64, p: u32, rng: &mut R) -> Result<GfMatrix> {
    let mut builder = ModLaplacianBuilder::new(p, n)?;
    draw_er(n, q, rng, |i, j| builder.edge(i, j));
    Ok(builder.finish())
}

pub fn sample_er_laplacian_gf2<R: RngCore + ?Sized>(n: usize, q: f64, rng: &mut R) -> BitMatrix {
    let mut lap = BitMatrix::zeros(n, n);
    draw_er(n, q, rng, |i, j| {
        lap.set(i, j, true);
        lap.toggle(i, i);
    });
    lap
}

/// `rows x cols` matrix of iid Bernoulli(q) residues.
pub fn sample_iid_matrix<R: RngCore + ?Sized>(rows: usize, cols: usize, q: f64, p: u32, rng: &mut R) -> Result<GfMatrix> {
    let coin = Bernoulli::new(q);
    let entries = (0..rows * cols).map(|_| coin.sample(rng) as u32).collect();
    GfMatrix::new(p, rows, cols, entries)
}

pub fn sample_iid_matrix_gf2<R: RngCore + ?Sized>(rows: usize, cols: usize, q: f64, rng: &mut R) -> BitMatrix {
    let coin = Bernoulli::new(q);
    let mut out = BitMatrix::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            if coin.sample(rng) {
                out.set(r, c, true);
            }
        }
    }
    out
}

struct ModLaplacianBuilder {
    modulus: Modulus,
    size: usize,
    entries: Vec<u32>,
    out_degree: Vec<u32>,
}

impl ModLaplacianBuilder {
    fn new(p: u32, size: usize) -> Result<Self> {
        Ok(Self {
            modulus: Modulus::new(p)?,
            size,
            entries: vec![0; size * size],
            out_degree: vec![0; size],
        })
    }

    fn edge(&mut self, from: usize, to: usize) {
        self.entries[from * self.size + to] = 1 % self.modulus.value();
        self.out_degree[from] += 1;
    }

    fn finish(mut self) -> GfMatrix {
        for (i, &d) in self.out_degree.iter().enumerate() {
            self.entries[i * self.size + i] = self.modulus.neg(self.modulus.reduce(d));
        }
        GfMatrix::new(self.modulus.value(), self.size, self.size, self.entries).expect("square by construction")
    }
}

/// Integer Laplacian: `+1` per edge off the diagonal, minus the out-degree
/// on it.
pub fn laplacian<G: Graph + ?Sized>(g: &G) -> IntMatrix {
    let size = g.vertex_count();
    let mut entries = vec![0i64; size * size];
    for (from, to) in g.edge_list() {
        entries[from * size + to] = 1;
        entries[from * size + from] -= 1;
    }
    IntMatrix::new(size, size, entries.into_iter().map(BigInt::from).collect()).expect("square by construction")
}

pub fn laplacian_mod_p<G: Graph + ?Sized>(g: &G, p: u32) -> Result<GfMatrix> {
    let mut builder = ModLaplacianBuilder::new(p, g.vertex_count())?;
    for (from, to) in g.edge_list() {
        builder.edge(from, to);
    }
    Ok(builder.finish())
}

/// Submatrix on strictly increasing row and column index sets.
pub fn restrict(m: &GfMatrix, row_set: &[usize], col_set: &[usize]) -> Result<GfMatrix> {
    m.restrict(row_set, col_set)
}
