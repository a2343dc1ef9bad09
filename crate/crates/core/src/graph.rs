//! Bounded-degree graphs, the neighbor-query oracle and exact conductance.
//!
//! Graphs are immutable once built. Adjacency is stored in fixed-width rows of
//! `d` slots so that the `i`-th neighbor query and a lazy walk step are single
//! indexed loads.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::union_find::UnionFind;

pub type Vertex = usize;

/// Exact conductance value `cut / (d * |S|)`.
pub type Conductance = Ratio<u64>;

/// Largest vertex count the exhaustive conductance oracle accepts.
pub const BRUTE_FORCE_CAP: usize = 24;

const EMPTY_SLOT: u32 = u32::MAX;

/// Access to a graph through neighbor queries only, as in the bounded-degree
/// property-testing model.
pub trait NeighborOracle: Sync {
    fn vertex_count(&self) -> usize;

    fn degree_bound(&self) -> usize;

    /// The `i`-th neighbor of `v`, or `None` when `i >= deg(v)`.
    ///
    /// Callers guarantee `v < vertex_count()`.
    fn neighbor(&self, v: Vertex, i: usize) -> Option<Vertex>;

    /// Landing vertex of a lazy step from `v` on draw `x` in `[0, 2d)`: the
    /// `x`-th neighbor when it exists, `v` otherwise.
    #[inline]
    fn lazy_target(&self, v: Vertex, x: usize) -> Vertex {
        if x < self.degree_bound() {
            self.neighbor(v, x).unwrap_or(v)
        } else {
            v
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundedDegreeGraph {
    n: usize,
    d: usize,
    degrees: Vec<u32>,
    slots: Vec<u32>,
    /// Rows of width `2d` resolving every lazy-step draw to its target.
    lazy: Vec<u32>,
}

impl BoundedDegreeGraph {
    /// Builds a simple graph from an undirected edge list.
    ///
    /// Neighbor order follows the order in which edges are listed. Self-loops,
    /// repeated edges, out-of-range endpoints and degree overflow are rejected.
    pub fn from_edges<I>(n: usize, d: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vertex, Vertex)>,
    {
        if n == 0 {
            return Err(Error::invalid("graph needs at least one vertex"));
        }
        if d == 0 {
            return Err(Error::invalid("degree bound must be at least 1"));
        }
        if n >= EMPTY_SLOT as usize {
            return Err(Error::invalid(format!("vertex count {n} too large")));
        }
        let mut degrees = vec![0u32; n];
        let mut slots = vec![EMPTY_SLOT; n * d];
        let mut seen = HashSet::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::invalid(format!(
                    "edge ({u}, {v}) has an endpoint outside [0, {n})"
                )));
            }
            if u == v {
                return Err(Error::invalid(format!("self-loop at vertex {u}")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::invalid(format!("repeated edge ({u}, {v})")));
            }
            for (a, b) in [(u, v), (v, u)] {
                let deg = degrees[a] as usize;
                if deg == d {
                    return Err(Error::invalid(format!(
                        "vertex {a} exceeds the degree bound {d}"
                    )));
                }
                slots[a * d + deg] = b as u32;
                degrees[a] += 1;
            }
        }
        let mut lazy = Vec::with_capacity(2 * n * d);
        for v in 0..n {
            let row = &slots[v * d..(v + 1) * d];
            lazy.extend(row.iter().map(|&u| if u == EMPTY_SLOT { v as u32 } else { u }));
            lazy.extend(std::iter::repeat(v as u32).take(d));
        }
        Ok(Self {
            n,
            d,
            degrees,
            slots,
            lazy,
        })
    }

    /// The one-vertex graph with no edges.
    pub fn singleton(d: usize) -> Result<Self> {
        Self::from_edges(1, d, std::iter::empty())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.degrees[v] as usize
    }

    pub fn max_degree(&self) -> usize {
        self.degrees.iter().copied().max().unwrap_or(0) as usize
    }

    pub fn neighbors(&self, v: Vertex) -> &[u32] {
        let start = v * self.d;
        &self.slots[start..start + self.degrees[v] as usize]
    }

    pub fn edge_count(&self) -> usize {
        self.degrees.iter().map(|&x| x as usize).sum::<usize>() / 2
    }

    /// All edges as `(u, v)` with `u < v`, sorted lexicographically.
    pub fn edges(&self) -> Vec<(Vertex, Vertex)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for u in 0..self.n {
            for &v in self.neighbors(u) {
                if u < v as usize {
                    out.push((u, v as usize));
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Rebuilds the graph with every adjacency row in ascending order.
    pub fn canonical(&self) -> Self {
        Self::from_edges(self.n, self.d, self.edges()).expect("re-validating a valid graph")
    }

    /// Same edges under a different (not smaller than max degree) bound.
    pub fn with_degree_bound(&self, d: usize) -> Result<Self> {
        let mut edges = Vec::with_capacity(self.edge_count());
        for u in 0..self.n {
            for &v in self.neighbors(u) {
                if u < v as usize {
                    edges.push((u, v as usize));
                }
            }
        }
        Self::from_edges(self.n, d, edges)
    }

    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        self.neighbors(u).iter().any(|&w| w as usize == v)
    }

    /// The oracle query: `i`-th neighbor of `v`, or `None` past its degree.
    pub fn neighbor_query(&self, v: Vertex, i: usize) -> Result<Option<Vertex>> {
        if v >= self.n {
            return Err(Error::invalid(format!(
                "vertex {v} outside [0, {})",
                self.n
            )));
        }
        Ok(self.neighbor(v, i))
    }

    /// Connected component label per vertex, labels dense in `[0, count)`.
    pub fn components(&self) -> (Vec<usize>, usize) {
        let mut uf = UnionFind::new(self.n);
        for u in 0..self.n {
            for &v in self.neighbors(u) {
                uf.union(u, v as usize);
            }
        }
        uf.labels()
    }

    pub fn component_count(&self) -> usize {
        self.components().1
    }

    pub fn is_connected(&self) -> bool {
        self.component_count() == 1
    }

    /// Serializes to the edge-list text format: `n d` then one `u v` per line.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::with_capacity(16 * (self.edge_count() + 1));
        let _ = writeln!(out, "{} {}", self.n, self.d);
        for (u, v) in self.edges() {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }

    /// Parses the edge-list text format. `source` labels diagnostics.
    pub fn parse_edge_list(text: &str, source: &str) -> Result<Self> {
        let parse_err = |line: usize, message: String| Error::Parse {
            path: source.to_string(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate();
        let (n, d) = loop {
            let Some((idx, line)) = lines.next() else {
                return Err(parse_err(1, "missing header line `n d`".into()));
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let nums = parse_pair(line).map_err(|m| parse_err(idx + 1, m))?;
            break nums;
        };
        let mut edges = Vec::new();
        for (idx, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (u, v) = parse_pair(line).map_err(|m| parse_err(idx + 1, m))?;
            if u >= v || v >= n {
                return Err(parse_err(
                    idx + 1,
                    format!("edge `{line}` must satisfy 0 <= u < v < {n}"),
                ));
            }
            edges.push((u, v));
        }
        Self::from_edges(n, d, edges).map_err(|e| parse_err(0, e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        Self::parse_edge_list(&text, &path.display().to_string())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_edge_list())?;
        Ok(())
    }
}

fn parse_pair(line: &str) -> std::result::Result<(usize, usize), String> {
    let mut it = line.split_ascii_whitespace();
    let a = it.next().ok_or("expected two integers")?;
    let b = it.next().ok_or("expected two integers")?;
    if it.next().is_some() {
        return Err(format!("trailing fields in `{line}`"));
    }
    let a = a.parse().map_err(|_| format!("`{a}` is not a vertex id"))?;
    let b = b.parse().map_err(|_| format!("`{b}` is not a vertex id"))?;
    Ok((a, b))
}

impl NeighborOracle for BoundedDegreeGraph {
    fn vertex_count(&self) -> usize {
        self.n
    }

    fn degree_bound(&self) -> usize {
        self.d
    }

    #[inline]
    fn neighbor(&self, v: Vertex, i: usize) -> Option<Vertex> {
        if i < self.degrees[v] as usize {
            Some(self.slots[v * self.d + i] as usize)
        } else {
            None
        }
    }

    #[inline]
    fn lazy_target(&self, v: Vertex, x: usize) -> Vertex {
        self.lazy[2 * self.d * v + x] as usize
    }
}

/// A sorted, duplicate-free set of vertices of a graph with `universe` vertices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VertexSet {
    universe: usize,
    members: Vec<u32>,
}

impl VertexSet {
    pub fn new<I>(universe: usize, members: I) -> Result<Self>
    where
        I: IntoIterator<Item = Vertex>,
    {
        let mut out = Vec::new();
        for v in members {
            if v >= universe {
                return Err(Error::invalid(format!(
                    "vertex {v} outside [0, {universe})"
                )));
            }
            out.push(v as u32);
        }
        out.sort_unstable();
        out.dedup();
        Ok(Self {
            universe,
            members: out,
        })
    }

    pub fn full(universe: usize) -> Self {
        Self {
            universe,
            members: (0..universe as u32).collect(),
        }
    }

    pub fn from_mask(mask: &[bool]) -> Self {
        Self {
            universe: mask.len(),
            members: (0..mask.len() as u32).filter(|&v| mask[v as usize]).collect(),
        }
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, v: Vertex) -> bool {
        v < self.universe && self.members.binary_search(&(v as u32)).is_ok()
    }

    pub fn members(&self) -> &[u32] {
        &self.members
    }

    pub fn iter(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.members.iter().map(|&v| v as usize)
    }

    pub fn mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.universe];
        for &v in &self.members {
            mask[v as usize] = true;
        }
        mask
    }

    pub fn complement(&self) -> Self {
        let mask = self.mask();
        Self {
            universe: self.universe,
            members: (0..self.universe as u32)
                .filter(|&v| !mask[v as usize])
                .collect(),
        }
    }
}

fn check_universe(g: &BoundedDegreeGraph, s: &VertexSet) -> Result<()> {
    if s.universe() != g.n() {
        return Err(Error::invalid(format!(
            "vertex set over {} vertices used with a graph on {}",
            s.universe(),
            g.n()
        )));
    }
    Ok(())
}

/// Number of edges between `S` and its complement.
pub fn cut_size(g: &BoundedDegreeGraph, s: &VertexSet) -> u64 {
    let mask = s.mask();
    cut_size_masked(g, s.iter(), &mask)
}

pub(crate) fn cut_size_masked(
    g: &BoundedDegreeGraph,
    members: impl Iterator<Item = Vertex>,
    mask: &[bool],
) -> u64 {
    members
        .map(|u| {
            g.neighbors(u)
                .iter()
                .filter(|&&v| !mask[v as usize])
                .count() as u64
        })
        .sum()
}

/// `phi_G(S) = e(S, V \ S) / (d |S|)`.
pub fn outer_conductance(g: &BoundedDegreeGraph, s: &VertexSet) -> Result<Conductance> {
    check_universe(g, s)?;
    if s.is_empty() {
        return Err(Error::invalid("conductance of the empty set is undefined"));
    }
    Ok(Ratio::new(cut_size(g, s), (g.d() * s.len()) as u64))
}

pub fn ratio_to_f64(r: Conductance) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Exhaustive minimum of `phi_G(S)` over nonempty `S` with `|S| <= n/2`.
///
/// Returns `None` for the singleton graph, which has no such set.
pub fn exhaustive_sparsest_cut(
    g: &BoundedDegreeGraph,
) -> Result<Option<(VertexSet, Conductance)>> {
    let n = g.n();
    if n > BRUTE_FORCE_CAP {
        return Err(Error::Capacity {
            what: "exhaustive conductance",
            limit: BRUTE_FORCE_CAP,
            got: n,
            hint: "use the spectral (Cheeger) bounds instead",
        });
    }
    if n == 1 {
        return Ok(None);
    }
    let nbr: Vec<u32> = (0..n)
        .map(|u| g.neighbors(u).iter().fold(0u32, |m, &v| m | (1 << v)))
        .collect();
    let deg: Vec<i64> = (0..n).map(|u| g.degree(u) as i64).collect();
    let half = n / 2;

    // Gray-code walk over all subsets, updating the cut one vertex at a time.
    let mut mask: u32 = 0;
    let mut size = 0usize;
    let mut cut: i64 = 0;
    let mut best: Option<(u32, u64, u64)> = None;
    for i in 1u64..(1u64 << n) {
        let v = i.trailing_zeros() as usize;
        let bit = 1u32 << v;
        let inside = (nbr[v] & mask & !bit).count_ones() as i64;
        if mask & bit == 0 {
            mask |= bit;
            size += 1;
            cut += deg[v] - 2 * inside;
        } else {
            mask &= !bit;
            size -= 1;
            cut -= deg[v] - 2 * inside;
        }
        if size == 0 || size > half {
            continue;
        }
        let c = cut as u64;
        let better = match best {
            None => true,
            Some((_, bc, bs)) => c * bs < bc * size as u64,
        };
        if better {
            best = Some((mask, c, size as u64));
        }
    }
    let (m, c, s) = best.expect("n >= 2 has a subset of size <= n/2");
    let set = VertexSet::new(n, (0..n).filter(|&v| m & (1 << v) != 0))?;
    Ok(Some((set, Ratio::new(c, g.d() as u64 * s))))
}

/// `phi(G)`: exact minimum conductance, `1/d` for the singleton graph.
pub fn min_conductance_bruteforce(g: &BoundedDegreeGraph) -> Result<Conductance> {
    Ok(match exhaustive_sparsest_cut(g)? {
        Some((_, phi)) => phi,
        None => Ratio::new(1, g.d() as u64),
    })
}

/// `G[S]` with vertices renumbered by rank in `S`; returns the rank-to-id map.
///
/// The induced graph keeps the degree bound `d` of `g`.
pub fn induced_subgraph(
    g: &BoundedDegreeGraph,
    s: &VertexSet,
) -> Result<(BoundedDegreeGraph, Vec<Vertex>)> {
    check_universe(g, s)?;
    if s.is_empty() {
        return Err(Error::invalid("induced subgraph of the empty set"));
    }
    let ids: Vec<Vertex> = s.iter().collect();
    let mut rank = vec![u32::MAX; g.n()];
    for (i, &v) in ids.iter().enumerate() {
        rank[v] = i as u32;
    }
    let mut edges = Vec::new();
    for (i, &u) in ids.iter().enumerate() {
        for &v in g.neighbors(u) {
            let j = rank[v as usize];
            if j != u32::MAX && (i as u32) < j {
                edges.push((i, j as usize));
            }
        }
    }
    let sub = BoundedDegreeGraph::from_edges(ids.len(), g.d(), edges)?;
    Ok((sub, ids))
}

/// `phi(G[S])`, exact, for `|S| <= 24`.
pub fn inner_conductance(g: &BoundedDegreeGraph, s: &VertexSet) -> Result<Conductance> {
    if s.len() > BRUTE_FORCE_CAP {
        return Err(Error::Capacity {
            what: "exact inner conductance",
            limit: BRUTE_FORCE_CAP,
            got: s.len(),
            hint: "certify the inner conductance from lambda_2 of G[S] instead",
        });
    }
    let (sub, _) = induced_subgraph(g, s)?;
    min_conductance_bruteforce(&sub)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle(n: usize) -> BoundedDegreeGraph {
        BoundedDegreeGraph::from_edges(n, 2, (0..n).map(|i| (i, (i + 1) % n))).unwrap()
    }

    fn complete(n: usize) -> BoundedDegreeGraph {
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
        BoundedDegreeGraph::from_edges(n, n - 1, edges).unwrap()
    }

    fn set(n: usize, v: &[usize]) -> VertexSet {
        VertexSet::new(n, v.iter().copied()).unwrap()
    }

    #[test]
    fn neighbor_query_follows_listing_order() {
        let g = cycle(4);
        assert_eq!(g.neighbor_query(0, 0).unwrap(), Some(1));
        assert_eq!(g.neighbor_query(0, 2).unwrap(), None);
        assert!(g.neighbor_query(4, 0).is_err());
        let one = BoundedDegreeGraph::singleton(3).unwrap();
        assert_eq!(one.neighbor_query(0, 0).unwrap(), None);
    }

    #[test]
    fn loader_rejects_bad_graphs() {
        assert!(BoundedDegreeGraph::from_edges(3, 2, [(0, 1), (1, 0)]).is_err());
        assert!(BoundedDegreeGraph::from_edges(3, 2, [(0, 0)]).is_err());
        assert!(BoundedDegreeGraph::from_edges(3, 1, [(0, 1), (0, 2)]).is_err());
        assert!(BoundedDegreeGraph::from_edges(3, 2, [(0, 3)]).is_err());
        // isolated vertices are fine
        let g = BoundedDegreeGraph::from_edges(3, 2, [(0, 1)]).unwrap();
        assert_eq!(g.degree(2), 0);
    }

    #[test]
    fn edge_list_roundtrip_and_diagnostics() {
        let g = complete(4);
        let text = g.to_edge_list();
        assert!(text.starts_with("4 3\n0 1\n"));
        assert_eq!(BoundedDegreeGraph::parse_edge_list(&text, "k4").unwrap(), g);

        let err = BoundedDegreeGraph::parse_edge_list("3 2\n0 1\n2 1\n", "bad").unwrap_err();
        assert!(err.to_string().contains("bad:3"), "{err}");
        let err = BoundedDegreeGraph::parse_edge_list("3 2\n0 x\n", "bad").unwrap_err();
        assert!(err.to_string().contains("bad:2"), "{err}");
        let err = BoundedDegreeGraph::parse_edge_list("3 1\n0 1\n0 2\n", "deg").unwrap_err();
        assert!(err.to_string().contains("degree bound"), "{err}");
    }

    #[test]
    fn outer_conductance_examples() {
        let c4 = cycle(4);
        assert_eq!(outer_conductance(&c4, &set(4, &[0])).unwrap(), Ratio::new(1, 1));
        assert_eq!(
            outer_conductance(&c4, &VertexSet::full(4)).unwrap(),
            Ratio::new(0, 1)
        );
        let k4 = complete(4);
        assert_eq!(
            outer_conductance(&k4, &set(4, &[1, 3])).unwrap(),
            Ratio::new(2, 3)
        );
        assert!(outer_conductance(&k4, &set(4, &[])).is_err());
    }

    #[test]
    fn brute_force_examples() {
        assert_eq!(min_conductance_bruteforce(&complete(4)).unwrap(), Ratio::new(2, 3));
        let two_edges = BoundedDegreeGraph::from_edges(4, 1, [(0, 1), (2, 3)]).unwrap();
        assert_eq!(min_conductance_bruteforce(&two_edges).unwrap(), Ratio::new(0, 1));
        let one = BoundedDegreeGraph::singleton(5).unwrap();
        assert_eq!(min_conductance_bruteforce(&one).unwrap(), Ratio::new(1, 5));
        // 8-cycle: best cut is a contiguous half
        assert_eq!(min_conductance_bruteforce(&cycle(8)).unwrap(), Ratio::new(1, 4));
        let big = cycle(25);
        assert!(matches!(
            min_conductance_bruteforce(&big),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn induced_subgraph_examples() {
        let k4 = complete(4);
        let (k3, ids) = induced_subgraph(&k4, &set(4, &[0, 2, 3])).unwrap();
        assert_eq!(ids, vec![0, 2, 3]);
        assert_eq!(k3.edge_count(), 3);
        assert_eq!(k3.d(), 3);

        let (iso, _) = induced_subgraph(&cycle(4), &set(4, &[0, 2])).unwrap();
        assert_eq!(iso.edge_count(), 0);

        let (same, ids) = induced_subgraph(&k4, &VertexSet::full(4)).unwrap();
        assert_eq!(ids, vec![0, 1, 2, 3]);
        assert_eq!(same.edges(), k4.edges());
    }

    #[test]
    fn inner_conductance_examples() {
        let k4 = complete(4);
        // K3 under d = 3: a singleton cut has 2 edges, 2 / (3 * 1)
        assert_eq!(inner_conductance(&k4, &set(4, &[0, 1, 2])).unwrap(), Ratio::new(2, 3));
        assert_eq!(inner_conductance(&k4, &set(4, &[0, 1])).unwrap(), Ratio::new(1, 3));
        assert_eq!(inner_conductance(&cycle(4), &set(4, &[0, 2])).unwrap(), Ratio::new(0, 1));
    }

    #[test]
    fn components_of_disjoint_edges() {
        let g = BoundedDegreeGraph::from_edges(5, 1, [(0, 1), (2, 3)]).unwrap();
        assert_eq!(g.component_count(), 3);
        assert!(!g.is_connected());
        assert!(complete(4).is_connected());
    }
}
