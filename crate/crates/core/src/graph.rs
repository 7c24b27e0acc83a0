//! Weighted simple graphs and their Laplacian algebra.
//!
//! Nodes are 0-based internally; the JSON interface and `Display` output use
//! 1-based ids. Edge weights are stored as `f64` but every finite `f64` is a
//! dyadic rational, so the Laplacian is also available exactly as
//! `BigRational` entries.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use num_rational::BigRational;
use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::error::{AlfError, Result};
use crate::precision::Scalar;
use crate::rng::SeededRng;

/// Undirected simple graph with strictly positive edge weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: BTreeMap<(usize, usize), f64>,
}

fn key(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

impl Graph {
    /// Edgeless graph on `n` nodes.
    pub fn empty(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(AlfError::InvalidSize(n));
        }
        Ok(Self { n, edges: BTreeMap::new() })
    }

    /// Builds from 0-based `(i, j, w)` triples.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut g = Self::empty(n)?;
        for (i, j, w) in edges {
            g.add_edge(i, j, w)?;
        }
        Ok(g)
    }

    pub fn complete(n: usize) -> Result<Self> {
        let mut g = Self::empty(n)?;
        for i in 0..n {
            for j in i + 1..n {
                g.edges.insert((i, j), 1.0);
            }
        }
        Ok(g)
    }

    pub fn path(n: usize) -> Result<Self> {
        Self::from_edges(n, (1..n).map(|i| (i - 1, i, 1.0)))
    }

    pub fn cycle(n: usize) -> Result<Self> {
        let mut g = Self::path(n)?;
        if n >= 3 {
            g.add_edge(n - 1, 0, 1.0)?;
        }
        Ok(g)
    }

    fn add_edge(&mut self, i: usize, j: usize, w: f64) -> Result<()> {
        if i >= self.n || j >= self.n {
            return Err(AlfError::InvalidEdge(i + 1, j + 1, "node out of range".into()));
        }
        if i == j {
            return Err(AlfError::InvalidEdge(i + 1, j + 1, "self-loop".into()));
        }
        if !(w.is_finite() && w > 0.0) {
            return Err(AlfError::InvalidEdge(i + 1, j + 1, format!("weight {w} must be finite and > 0")));
        }
        if self.edges.insert(key(i, j), w).is_some() {
            return Err(AlfError::InvalidEdge(i + 1, j + 1, "duplicate edge".into()));
        }
        Ok(())
    }

    /// Same topology, every weight replaced by one.
    pub fn unweighted(&self) -> Self {
        Self { n: self.n, edges: self.edges.keys().map(|&k| (k, 1.0)).collect() }
    }

    /// Same topology with weights drawn uniformly from `[lo, hi)`.
    pub fn with_random_weights(&self, seed: u64, lo: f64, hi: f64) -> Result<Self> {
        let mut rng = SeededRng::new(seed);
        let mut g = Self::empty(self.n)?;
        for &(i, j) in self.edges.keys() {
            g.add_edge(i, j, rng.uniform(lo, hi))?;
        }
        Ok(g)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        self.edges.get(&key(i, j)).copied()
    }

    /// Edges as sorted 0-based `(i, j, w)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.edges.iter().map(|(&(i, j), &w)| (i, j, w))
    }

    pub fn is_complete_unweighted(&self) -> bool {
        self.edges.len() == self.n * (self.n - 1) / 2 && self.edges.values().all(|&w| w == 1.0)
    }

    pub fn weighted_degree(&self, i: usize) -> f64 {
        self.edges().filter(|&(a, b, _)| a == i || b == i).map(|(_, _, w)| w).sum()
    }

    pub fn laplacian(&self) -> LaplacianMatrix {
        let n = self.n;
        let zero = <BigRational as Scalar>::zero();
        let mut entries = vec![zero; n * n];
        for (i, j, w) in self.edges() {
            let w = <BigRational as Scalar>::from_f64(w);
            entries[i * n + j] -= &w;
            entries[j * n + i] -= &w;
            entries[i * n + i] += &w;
            entries[j * n + j] += &w;
        }
        LaplacianMatrix { n, entries }
    }

    /// Node sets of the connected components, each sorted, ordered by smallest node.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for (i, j, _) in self.edges() {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for v in 0..self.n {
            let r = find(&mut parent, v);
            groups.entry(r).or_default().push(v);
        }
        groups.into_values().collect()
    }

    /// True iff `max |Lσ − σL| <= tol`, evaluated in exact arithmetic.
    pub fn commutes_with_laplacian(&self, p: &Permutation, tol: f64) -> Result<bool> {
        if p.len() != self.n {
            return Err(AlfError::DimensionMismatch { expected: self.n, got: p.len() });
        }
        // Lσ − σL = (L − σLσᵀ)σ and right-multiplying by σ only permutes
        // columns, so the max norm equals that of L − σLσᵀ.
        let l = self.laplacian();
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in 0..self.n {
                let d = l.get(p.image(i), p.image(j)) - l.get(i, j);
                worst = worst.max(Scalar::to_f64(&Signed::abs(&d)));
            }
        }
        Ok(worst <= tol)
    }
}

/// Dense symmetric Laplacian `Δ − A` with exact rational entries.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianMatrix {
    n: usize,
    entries: Vec<BigRational>,
}

impl LaplacianMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &BigRational {
        &self.entries[i * self.n + j]
    }

    /// Row-major entries converted to the scalar `S`.
    pub fn entries_as<S: Scalar>(&self) -> Vec<S> {
        self.entries.iter().map(S::from_rational).collect()
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.entries_as::<f64>())
    }

    /// Exact row sums; all zero for any valid graph.
    pub fn row_sums(&self) -> Vec<BigRational> {
        self.entries
            .chunks(self.n)
            .map(|row| row.iter().fold(<BigRational as Scalar>::zero(), |a, b| a + b))
            .collect()
    }

    /// Eigenvalues in ascending order (double precision).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let eig = SymmetricEigen::new(self.to_dmatrix());
        let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Number of eigenvalues with `|μ| < 1e-8 · max(1, ‖L‖∞)`.
    pub fn zero_eigenvalue_count(&self) -> usize {
        let tol = ZERO_EIGEN_TOL * self.max_abs_row_sum().max(1.0);
        self.eigenvalues().into_iter().filter(|m| f64::abs(*m) < tol).count()
    }

    fn max_abs_row_sum(&self) -> f64 {
        self.entries
            .chunks(self.n)
            .map(|row| row.iter().map(|v| Scalar::to_f64(&Signed::abs(v))).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Relative threshold below which a Laplacian eigenvalue counts as zero.
pub const ZERO_EIGEN_TOL: f64 = 1e-8;

/// Bijection on `0..n`; acts on vectors by `(σx)[σ(j)] = x[j]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; images.len()];
        for &v in &images {
            if v >= images.len() || seen[v] {
                return Err(AlfError::InvalidPermutation(format!("{images:?} is not a bijection")));
            }
            seen[v] = true;
        }
        Ok(Self { images })
    }

    /// From the one-line image array `[p(1), …, p(n)]` with 1-based ids.
    pub fn from_one_based(images: &[usize]) -> Result<Self> {
        if images.contains(&0) {
            return Err(AlfError::InvalidPermutation("node ids are 1-based".into()));
        }
        Self::new(images.iter().map(|v| v - 1).collect())
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.images.iter().map(|v| v + 1).collect()
    }

    pub fn identity(n: usize) -> Self {
        Self { images: (0..n).collect() }
    }

    /// Swaps 0-based nodes `a` and `b`.
    pub fn transposition(n: usize, a: usize, b: usize) -> Result<Self> {
        let mut images: Vec<usize> = (0..n).collect();
        if a >= n || b >= n {
            return Err(AlfError::InvalidPermutation(format!("transposition ({a} {b}) outside 0..{n}")));
        }
        images.swap(a, b);
        Ok(Self { images })
    }

    /// `i ↦ i + 1 mod n`.
    pub fn cyclic_shift(n: usize) -> Self {
        Self { images: (0..n).map(|i| (i + 1) % n).collect() }
    }

    /// `i ↦ n − 1 − i`.
    pub fn reversal(n: usize) -> Self {
        Self { images: (0..n).rev().collect() }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn image(&self, i: usize) -> usize {
        self.images[i]
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &v)| i == v)
    }

    /// `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &Self) -> Self {
        Self { images: other.images.iter().map(|&v| self.images[v]).collect() }
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.images.len()];
        for (i, &v) in self.images.iter().enumerate() {
            inv[v] = i;
        }
        Self { images: inv }
    }

    pub fn act<T: Clone>(&self, x: &[T]) -> Vec<T> {
        let mut out = x.to_vec();
        for (j, v) in x.iter().enumerate() {
            out[self.images[j]] = v.clone();
        }
        out
    }

    /// Orthogonal 0/1 matrix with `σ e_j = e_{σ(j)}`.
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.images.len();
        DMatrix::from_fn(n, n, |i, j| if self.images[j] == i { 1.0 } else { 0.0 })
    }
}

impl Serialize for Permutation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_one_based().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Permutation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<usize>::deserialize(d)?;
        Permutation::from_one_based(&v).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    Complete,
    Cycle,
    Path,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomWeights {
    pub seed: u64,
    pub lo: f64,
    pub hi: f64,
}

/// JSON description of a graph, `{"type", "n", "edges": [[i, j, w], …]}` with 1-based ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    #[serde(rename = "type")]
    pub kind: GraphKind,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<(usize, usize, f64)>>,
    /// Replaces every weight by a seeded uniform draw.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_weights: Option<RandomWeights>,
}

impl GraphSpec {
    pub fn complete(n: usize) -> Self {
        Self { kind: GraphKind::Complete, n, edges: None, random_weights: None }
    }

    pub fn build(&self) -> Result<Graph> {
        let g = match self.kind {
            GraphKind::Complete => Graph::complete(self.n)?,
            GraphKind::Cycle => Graph::cycle(self.n)?,
            GraphKind::Path => Graph::path(self.n)?,
            GraphKind::Custom => {
                let edges = self.edges.as_deref().unwrap_or_default();
                if edges.iter().any(|&(i, j, _)| i == 0 || j == 0) {
                    return Err(AlfError::Config("graph node ids are 1-based".into()));
                }
                Graph::from_edges(self.n, edges.iter().map(|&(i, j, w)| (i - 1, j - 1, w)))?
            }
        };
        if self.kind != GraphKind::Custom && self.edges.is_some() {
            return Err(AlfError::Config("`edges` is only valid for custom graphs".into()));
        }
        match &self.random_weights {
            Some(rw) => {
                if !(rw.lo > 0.0 && rw.hi >= rw.lo) {
                    return Err(AlfError::Config(format!("random weights need 0 < lo <= hi, got [{}, {}]", rw.lo, rw.hi)));
                }
                g.with_random_weights(rw.seed, rw.lo, rw.hi)
            }
            None => Ok(g),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn r(v: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(v))
    }

    fn dense(l: &LaplacianMatrix) -> Vec<Vec<BigRational>> {
        (0..l.dim()).map(|i| (0..l.dim()).map(|j| l.get(i, j).clone()).collect()).collect()
    }

    fn random_graph(rng: &mut SeededRng, n: usize, p: f64) -> Graph {
        let mut edges = vec![];
        for i in 0..n {
            for j in i + 1..n {
                if rng.unit() < p {
                    edges.push((i, j, rng.uniform(0.1, 5.0)));
                }
            }
        }
        Graph::from_edges(n, edges).unwrap()
    }

    #[test]
    fn complete_graph_edge_counts() {
        let k3 = Graph::complete(3).unwrap();
        let e: Vec<_> = k3.edges().collect();
        assert_eq!(e, vec![(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)]);
        assert_eq!(Graph::complete(1).unwrap().edge_count(), 0);
        assert_eq!(Graph::complete(10).unwrap().edge_count(), 45);
        assert_eq!(Graph::complete(0), Err(AlfError::InvalidSize(0)));
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(Graph::from_edges(3, [(0, 0, 1.0)]).is_err());
        assert!(Graph::from_edges(3, [(0, 1, -1.0)]).is_err());
        assert!(Graph::from_edges(3, [(0, 1, 0.0)]).is_err());
        assert!(Graph::from_edges(3, [(0, 1, 1.0), (1, 0, 2.0)]).is_err());
        assert!(Graph::from_edges(3, [(0, 5, 1.0)]).is_err());
    }

    #[test]
    fn laplacian_small_cases() {
        let k3 = Graph::complete(3).unwrap().laplacian();
        assert_eq!(
            dense(&k3),
            vec![vec![r(2), r(-1), r(-1)], vec![r(-1), r(2), r(-1)], vec![r(-1), r(-1), r(2)]]
        );
        let p2 = Graph::path(2).unwrap().laplacian();
        assert_eq!(dense(&p2), vec![vec![r(1), r(-1)], vec![r(-1), r(1)]]);

        // w12 = 2: degrees (1+2, 2+1, 1+1)
        let g = Graph::from_edges(3, [(0, 1, 2.0), (0, 2, 1.0), (1, 2, 1.0)]).unwrap();
        let l = g.laplacian();
        assert_eq!((l.get(0, 0), l.get(1, 1), l.get(2, 2)), (&r(3), &r(3), &r(2)));
        assert_eq!(l.get(0, 1), &r(-2));
        assert_eq!(l.get(1, 0), &r(-2));
    }

    #[test]
    fn laplacian_rows_sum_to_zero_exactly() {
        let mut rng = SeededRng::new(1);
        for _ in 0..30 {
            let n = 2 + rng.below(10);
            let g = random_graph(&mut rng, n, 0.6);
            assert!(g.laplacian().row_sums().iter().all(|s| *s == r(0)));
        }
    }

    #[test]
    fn components_small_cases() {
        assert_eq!(Graph::complete(3).unwrap().connected_components(), vec![vec![0, 1, 2]]);
        let two = Graph::from_edges(5, [(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0), (3, 4, 1.0)]).unwrap();
        assert_eq!(two.connected_components().len(), 2);
        assert_eq!(Graph::empty(4).unwrap().connected_components().len(), 4);
    }

    #[test]
    fn laplacian_is_positive_semidefinite() {
        let mut rng = SeededRng::new(2);
        for _ in 0..100 {
            let n = 1 + rng.below(12);
            let g = random_graph(&mut rng, n, 0.5);
            let ev = g.laplacian().eigenvalues();
            assert!(ev.iter().all(|&m| m >= -1e-10), "{ev:?}");
        }
    }

    #[test]
    fn zero_eigenvalues_count_components() {
        let mut rng = SeededRng::new(3);
        for _ in 0..50 {
            let n = 1 + rng.below(12);
            let g = random_graph(&mut rng, n, 0.25);
            assert_eq!(g.laplacian().zero_eigenvalue_count(), g.connected_components().len());
        }
    }

    #[test]
    fn complete_graph_commutes_with_every_permutation() {
        let mut rng = SeededRng::new(4);
        for _ in 0..50 {
            let n = 2 + rng.below(9);
            let g = Graph::complete(n).unwrap();
            let p = Permutation::new(rng.permutation(n)).unwrap();
            assert!(g.commutes_with_laplacian(&p, 0.0).unwrap());
        }
    }

    #[test]
    fn path_does_not_commute_with_end_swap() {
        let p3 = Graph::path(3).unwrap();
        let sigma = Permutation::transposition(3, 0, 1).unwrap();
        assert!(!p3.commutes_with_laplacian(&sigma, 1e-12).unwrap());

        // explicit commutator: L = [[1,-1,0],[-1,2,-1],[0,-1,1]], σ swaps e1,e2
        let l = p3.laplacian().to_dmatrix();
        let s = sigma.matrix();
        let c = &l * &s - &s * &l;
        assert_eq!(c.amax(), 1.0);
        assert!(p3.commutes_with_laplacian(&Permutation::identity(3), 0.0).unwrap());
        assert!(p3.commutes_with_laplacian(&Permutation::reversal(3), 0.0).unwrap());
        assert!(p3.commutes_with_laplacian(&Permutation::identity(4), 0.0).is_err());
    }

    #[test]
    fn permutation_action_matches_matrix() {
        let p = Permutation::from_one_based(&[2, 3, 1]).unwrap();
        let x = [10.0, 20.0, 30.0];
        let via_matrix = p.matrix() * nalgebra::DVector::from_row_slice(&x);
        assert_eq!(p.act(&x), via_matrix.as_slice());
        assert!(p.compose(&p.inverse()).is_identity());
        assert!(Permutation::from_one_based(&[1, 1, 2]).is_err());
        assert!(Permutation::from_one_based(&[0, 1, 2]).is_err());
    }

    #[test]
    fn graph_spec_json() {
        let spec: GraphSpec = serde_json::from_str(r#"{"type":"custom","n":3,"edges":[[1,2,2.0],[2,3,1]]}"#).unwrap();
        let g = spec.build().unwrap();
        assert_eq!(g.weight(0, 1), Some(2.0));
        assert_eq!(g.weight(2, 1), Some(1.0));
        let k: GraphSpec = serde_json::from_str(r#"{"type":"complete","n":4}"#).unwrap();
        assert_eq!(k.build().unwrap().edge_count(), 6);
        assert!(serde_json::from_str::<GraphSpec>(r#"{"type":"complete","n":4,"foo":1}"#).is_err());
        let w: GraphSpec =
            serde_json::from_str(r#"{"type":"complete","n":10,"random_weights":{"seed":9,"lo":1,"hi":5}}"#).unwrap();
        let g = w.build().unwrap();
        assert!(g.edges().all(|(_, _, w)| (1.0..5.0).contains(&w)));
        assert_eq!(g, w.build().unwrap());
    }
}
