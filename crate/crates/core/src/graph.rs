//! Ambiguity graphs: construction from gates, threshold graphs and
//! exhaustive enumeration.
//!
//! A graph is stored as a bitset over the upper-triangle pairs `(i, j)`,
//! `i < j`, ordered row by row. This ordering is also the canonical code used
//! by [`enumerate_graphs`], so graph `c` in the enumeration has pair `p` as an
//! edge iff bit `p` of `c` is set.

use std::fmt;

use crate::error::{Error, Result};
use crate::gating::{ConfusionTable, RectGate};
use crate::real::Real;

/// Largest number of vertex pairs `enumerate_graphs` accepts.
pub const MAX_ENUMERATION_PAIRS: usize = 25;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AmbiguityGraph {
    n_vertices: usize,
    words: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphKind {
    Complete,
    Empty,
    /// Edges only between consecutive targets `k` and `k+1`.
    Path,
}

fn n_pairs(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

impl AmbiguityGraph {
    pub fn empty(n_vertices: usize) -> Self {
        Self {
            n_vertices,
            words: vec![0; n_pairs(n_vertices).div_ceil(64)],
        }
    }

    pub fn complete(n_vertices: usize) -> Self {
        let mut g = Self::empty(n_vertices);
        for p in 0..g.pair_count() {
            g.set_pair(p, true);
        }
        g
    }

    pub fn path(n_vertices: usize) -> Self {
        let mut g = Self::empty(n_vertices);
        for k in 1..n_vertices {
            g.add_edge(k - 1, k);
        }
        g
    }

    pub fn standard(n_vertices: usize, kind: GraphKind) -> Self {
        match kind {
            GraphKind::Complete => Self::complete(n_vertices),
            GraphKind::Empty => Self::empty(n_vertices),
            GraphKind::Path => Self::path(n_vertices),
        }
    }

    pub fn from_edges(n_vertices: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::empty(n_vertices);
        for &(i, j) in edges {
            if i >= n_vertices || j >= n_vertices {
                return Err(Error::TargetIndex {
                    index: i.max(j),
                    n_targets: n_vertices,
                });
            }
            if i == j {
                return Err(Error::SameTarget(i));
            }
            g.add_edge(i, j);
        }
        Ok(g)
    }

    /// Graph whose upper-triangle bitset is `code`. Requires at most 64 pairs.
    pub fn from_code(n_vertices: usize, code: u64) -> Self {
        let mut g = Self::empty(n_vertices);
        assert!(g.pair_count() <= 64, "code form limited to 64 pairs");
        if let Some(w) = g.words.first_mut() {
            let mask = if n_pairs(n_vertices) == 64 {
                u64::MAX
            } else {
                (1u64 << n_pairs(n_vertices)) - 1
            };
            *w = code & mask;
        }
        g
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn pair_count(&self) -> usize {
        n_pairs(self.n_vertices)
    }

    fn pair_index(&self, i: usize, j: usize) -> usize {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        a * (2 * self.n_vertices - a - 1) / 2 + (b - a - 1)
    }

    fn pair_at(&self, mut p: usize) -> (usize, usize) {
        let n = self.n_vertices;
        for a in 0..n {
            let row = n - a - 1;
            if p < row {
                return (a, a + 1 + p);
            }
            p -= row;
        }
        unreachable!("pair index out of range")
    }

    fn get_pair(&self, p: usize) -> bool {
        self.words[p / 64] >> (p % 64) & 1 == 1
    }

    fn set_pair(&mut self, p: usize, on: bool) {
        let bit = 1u64 << (p % 64);
        if on {
            self.words[p / 64] |= bit;
        } else {
            self.words[p / 64] &= !bit;
        }
    }

    /// False for `i == j`; panics when a vertex is out of range.
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        assert!(i < self.n_vertices && j < self.n_vertices, "vertex out of range");
        i != j && self.get_pair(self.pair_index(i, j))
    }

    pub fn add_edge(&mut self, i: usize, j: usize) {
        assert!(i < self.n_vertices && j < self.n_vertices, "vertex out of range");
        if i != j {
            let p = self.pair_index(i, j);
            self.set_pair(p, true);
        }
    }

    pub fn remove_edge(&mut self, i: usize, j: usize) {
        assert!(i < self.n_vertices && j < self.n_vertices, "vertex out of range");
        if i != j {
            let p = self.pair_index(i, j);
            self.set_pair(p, false);
        }
    }

    pub fn edge_count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Edges `(i, j)` with `i < j` in canonical order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.pair_count())
            .filter(|&p| self.get_pair(p))
            .map(|p| self.pair_at(p))
    }

    /// The neighbour set `E_k`.
    pub fn neighbors(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_vertices).filter(move |&j| self.has_edge(k, j))
    }

    pub fn degree(&self, k: usize) -> usize {
        self.neighbors(k).count()
    }

    /// True when every edge of `self` is an edge of `other`.
    pub fn is_subgraph_of(&self, other: &Self) -> bool {
        self.n_vertices == other.n_vertices
            && self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn is_complete(&self) -> bool {
        self.edge_count() == self.pair_count()
    }

    /// Canonical bitset code; `None` above 64 pairs.
    pub fn code(&self) -> Option<u64> {
        (self.pair_count() <= 64).then(|| self.words.first().copied().unwrap_or(0))
    }

    /// Canonical text form: every edge as `i-j,` (zero based, `i < j`),
    /// sorted. The empty graph encodes as the empty string.
    pub fn encode(&self) -> String {
        self.edges().map(|(i, j)| format!("{i}-{j},")).collect()
    }

    /// Inverse of [`AmbiguityGraph::encode`].
    pub fn decode(n_vertices: usize, text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (a, b) = item
                .split_once('-')
                .ok_or_else(|| Error::InvalidParameter(format!("malformed edge `{item}`")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidParameter(format!("malformed edge `{item}`")))
            };
            edges.push((parse(a)?, parse(b)?));
        }
        Self::from_edges(n_vertices, &edges)
    }
}

impl fmt::Display for AmbiguityGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.encode())
    }
}

pub fn standard_graph(n_vertices: usize, kind: GraphKind) -> AmbiguityGraph {
    AmbiguityGraph::standard(n_vertices, kind)
}

/// Edge `(k, k')` iff the closed rectangles of `k` and `k'` intersect.
pub fn from_gates<T: Real>(gates: &[RectGate<T>]) -> AmbiguityGraph {
    let mut g = AmbiguityGraph::empty(gates.len());
    for i in 0..gates.len() {
        for j in (i + 1)..gates.len() {
            if gates[i].intersects(&gates[j]) {
                g.add_edge(i, j);
            }
        }
    }
    g
}

/// Graph whose edges are the pairs that are hard to disambiguate at level
/// `gamma`: `(k, k')` is an edge iff `p[k][k'] <= gamma` or
/// `p[k'][k] <= gamma`.
pub fn threshold_graph<T: Real>(table: &ConfusionTable<T>, gamma: T) -> AmbiguityGraph {
    let k = table.n_targets();
    let mut g = AmbiguityGraph::empty(k);
    for i in 0..k {
        for j in (i + 1)..k {
            if table.get(i, j) <= gamma || table.get(j, i) <= gamma {
                g.add_edge(i, j);
            }
        }
    }
    g
}

/// Sorted distinct off-diagonal entries of `table`.
pub fn gamma_breakpoints<T: Real>(table: &ConfusionTable<T>) -> Vec<T> {
    let k = table.n_targets();
    let mut values: Vec<T> = (0..k)
        .flat_map(|i| (0..k).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| table.get(i, j))
        .collect();
    values.sort_by(|a, b| a.partial_cmp(b).expect("confusion probabilities are not NaN"));
    values.dedup();
    values
}

/// Iterator over every graph on a fixed vertex set, in code order.
#[derive(Debug, Clone)]
pub struct GraphEnumeration {
    n_vertices: usize,
    next: u64,
    end: u64,
}

impl Iterator for GraphEnumeration {
    type Item = AmbiguityGraph;

    fn next(&mut self) -> Option<AmbiguityGraph> {
        if self.next >= self.end {
            return None;
        }
        let g = AmbiguityGraph::from_code(self.n_vertices, self.next);
        self.next += 1;
        Some(g)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.end - self.next) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for GraphEnumeration {}

/// All `2^{K(K−1)/2}` labelled graphs on `n_vertices` vertices.
pub fn enumerate_graphs(n_vertices: usize) -> Result<GraphEnumeration> {
    let pairs = n_pairs(n_vertices);
    if pairs > MAX_ENUMERATION_PAIRS {
        return Err(Error::TooManyPairs {
            pairs,
            limit: MAX_ENUMERATION_PAIRS,
        });
    }
    Ok(GraphEnumeration {
        n_vertices,
        next: 0,
        end: 1u64 << pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn standard_graphs() {
        assert_eq!(standard_graph(3, GraphKind::Complete).edge_count(), 3);
        let p = standard_graph(4, GraphKind::Path);
        assert_eq!(p.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2), (2, 3)]);
        for kind in [GraphKind::Complete, GraphKind::Empty, GraphKind::Path] {
            assert_eq!(standard_graph(1, kind).edge_count(), 0);
        }
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_graphs(2).unwrap().count(), 2);
        assert_eq!(enumerate_graphs(4).unwrap().count(), 64);
        assert_eq!(enumerate_graphs(6).unwrap().len(), 32768);
        assert!(matches!(enumerate_graphs(8), Err(Error::TooManyPairs { .. })));
    }

    #[test]
    fn enumeration_has_no_duplicates() {
        for k in 1..=5 {
            let all: Vec<_> = enumerate_graphs(k).unwrap().collect();
            let distinct: HashSet<_> = all.iter().cloned().collect();
            assert_eq!(all.len(), 1 << (k * (k - 1) / 2));
            assert_eq!(distinct.len(), all.len());
        }
    }

    #[test]
    fn encode_roundtrip() {
        let g = AmbiguityGraph::from_edges(4, &[(2, 1), (0, 3)]).unwrap();
        assert_eq!(g.encode(), "0-3,1-2,");
        assert_eq!(AmbiguityGraph::decode(4, &g.encode()).unwrap(), g);
        assert_eq!(AmbiguityGraph::empty(3).encode(), "");
        assert!(AmbiguityGraph::decode(3, "0-0,").is_err());
        assert!(AmbiguityGraph::decode(3, "0-5,").is_err());
    }

    #[test]
    fn large_graphs_use_multiple_words() {
        let g = AmbiguityGraph::complete(20);
        assert_eq!(g.edge_count(), 190);
        assert!(g.has_edge(18, 19));
        assert!(g.code().is_none());
        let p = AmbiguityGraph::path(20);
        assert!(p.is_subgraph_of(&g));
        assert!(!g.is_subgraph_of(&p));
        assert_eq!(p.neighbors(5).collect::<Vec<_>>(), vec![4, 6]);
    }

    #[test]
    fn gates_to_graph() {
        let r = |lo: f64, hi: f64| RectGate::new(lo, hi, -1.0, 1.0).unwrap();
        let chain = [r(0.0, 1.5), r(1.0, 2.5), r(2.0, 3.5), r(3.0, 4.5)];
        assert_eq!(from_gates(&chain), AmbiguityGraph::path(4));
        let apart = [r(0.0, 1.0), r(2.0, 3.0), r(4.0, 5.0)];
        assert_eq!(from_gates(&apart).edge_count(), 0);
        let same = [r(0.0, 1.0), r(0.0, 1.0), r(0.0, 1.0)];
        assert!(from_gates(&same).is_complete());
        // touching rectangles intersect (closed sets)
        let touch = [r(0.0, 1.0), r(1.0, 2.0)];
        assert_eq!(from_gates(&touch).edge_count(), 1);
    }

    #[test]
    fn threshold_graph_examples() {
        let table = ConfusionTable::from_rows(vec![
            vec![0.0, 0.6, 0.9],
            vec![0.6, 0.0, 0.8],
            vec![0.9, 0.8, 0.0],
        ])
        .unwrap();
        assert!(threshold_graph(&table, 1.0).is_complete());
        assert_eq!(threshold_graph(&table, 0.0).edge_count(), 0);
        let g = threshold_graph(&table, 0.7);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1)]);
        let bps = gamma_breakpoints(&table);
        assert_eq!(bps, vec![0.6, 0.8, 0.9]);
        let mut graphs: Vec<_> = std::iter::once(0.0)
            .chain(bps.iter().copied())
            .map(|g| threshold_graph(&table, g))
            .collect();
        graphs.dedup();
        assert_eq!(graphs.len(), 4);
    }

    #[test]
    fn breakpoint_edge_cases() {
        let eq = ConfusionTable::from_rows(vec![vec![0.0, 0.7, 0.7], vec![0.7, 0.0, 0.7], vec![0.7, 0.7, 0.0]]).unwrap();
        assert_eq!(gamma_breakpoints(&eq), vec![0.7]);
        let two = ConfusionTable::from_rows(vec![vec![0.0, 0.8], vec![0.8, 0.0]]).unwrap();
        assert_eq!(gamma_breakpoints(&two).len(), 1);
    }
}
