//! The lazy random walk: sampled endpoints and exact endpoint distributions.
//!
//! From `v` the walk crosses each incident edge with probability `1/(2d)` and
//! stays put otherwise, which is the lazy walk on the `d`-regular graph
//! obtained by padding every vertex with half-weighted self-loops. A step
//! draws `x` uniformly from `[0, 2d)` and, when `x < d`, issues the neighbor
//! query `(v, x)`; an absent answer means stay.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{BoundedDegreeGraph, NeighborOracle, Vertex, VertexSet};
use crate::rng::{self, Purpose};

/// Largest graph for which dense distribution vectors are built.
pub const EXACT_CAP: usize = 100_000;

/// One lazy step from `v`, counting issued neighbor queries.
#[inline]
pub fn walk_step_counted<O, R>(g: &O, v: Vertex, rng: &mut R, queries: &mut u64) -> Vertex
where
    O: NeighborOracle + ?Sized,
    R: Rng + ?Sized,
{
    let d = g.degree_bound();
    let x = rng.gen_range(0..2 * d as u32) as usize;
    *queries += (x < d) as u64;
    g.lazy_target(v, x)
}

pub fn walk_step<O, R>(g: &O, v: Vertex, rng: &mut R) -> Vertex
where
    O: NeighborOracle + ?Sized,
    R: Rng + ?Sized,
{
    let mut q = 0;
    walk_step_counted(g, v, rng, &mut q)
}

/// Endpoint of a `t`-step lazy walk from `v`.
pub fn sample_endpoint<O, R>(g: &O, v: Vertex, t: usize, rng: &mut R) -> Vertex
where
    O: NeighborOracle + ?Sized,
    R: Rng + ?Sized,
{
    let mut q = 0;
    (0..t).fold(v, |u, _| walk_step_counted(g, u, rng, &mut q))
}

/// Histogram of `r` walk endpoints from one origin.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleCounts {
    origin: Vertex,
    t: usize,
    r: u64,
    /// `(vertex, count)` sorted by vertex, counts positive.
    entries: Vec<(u32, u32)>,
    #[serde(skip)]
    self_pairs: u64,
}

impl SampleCounts {
    pub fn from_endpoints(origin: Vertex, t: usize, mut endpoints: Vec<u32>) -> Self {
        endpoints.sort_unstable();
        let r = endpoints.len() as u64;
        let mut entries: Vec<(u32, u32)> = Vec::new();
        for v in endpoints {
            match entries.last_mut() {
                Some((u, c)) if *u == v => *c += 1,
                _ => entries.push((v, 1)),
            }
        }
        Self::from_entries(origin, t, r, entries)
    }

    /// Builds a histogram from explicit `(vertex, count)` pairs.
    pub fn from_counts<I>(origin: Vertex, t: usize, counts: I) -> Self
    where
        I: IntoIterator<Item = (Vertex, u64)>,
    {
        let mut entries: Vec<(u32, u32)> = counts
            .into_iter()
            .filter(|&(_, c)| c > 0)
            .map(|(v, c)| (v as u32, c as u32))
            .collect();
        entries.sort_unstable();
        let mut merged: Vec<(u32, u32)> = Vec::with_capacity(entries.len());
        for (v, c) in entries {
            match merged.last_mut() {
                Some((u, acc)) if *u == v => *acc += c,
                _ => merged.push((v, c)),
            }
        }
        let r = merged.iter().map(|&(_, c)| c as u64).sum();
        Self::from_entries(origin, t, r, merged)
    }

    fn from_entries(origin: Vertex, t: usize, r: u64, entries: Vec<(u32, u32)>) -> Self {
        let self_pairs = entries
            .iter()
            .map(|&(_, c)| {
                let c = c as u64;
                c * (c.saturating_sub(1)) / 2
            })
            .sum();
        Self {
            origin,
            t,
            r,
            entries,
            self_pairs,
        }
    }

    pub fn origin(&self) -> Vertex {
        self.origin
    }

    pub fn walk_length(&self) -> usize {
        self.t
    }

    /// Total number of samples.
    pub fn r(&self) -> u64 {
        self.r
    }

    pub fn get(&self, v: Vertex) -> u64 {
        self.entries
            .binary_search_by_key(&(v as u32), |&(u, _)| u)
            .map(|i| self.entries[i].1 as u64)
            .unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Vertex, u64)> + '_ {
        self.entries.iter().map(|&(v, c)| (v as usize, c as u64))
    }

    pub fn distinct(&self) -> usize {
        self.entries.len()
    }

    pub(crate) fn entries(&self) -> &[(u32, u32)] {
        &self.entries
    }

    /// Cached `sum_i C(count_i, 2)`.
    pub(crate) fn cached_self_pairs(&self) -> u64 {
        self.self_pairs
    }
}

/// `r` independent `t`-step endpoints from `v`, plus the queries they issued.
pub fn sample_counts_counted<O, R>(
    g: &O,
    v: Vertex,
    t: usize,
    r: u64,
    rng: &mut R,
) -> (SampleCounts, u64)
where
    O: NeighborOracle + ?Sized,
    R: Rng + ?Sized,
{
    let d = g.degree_bound();
    let mut draws = StepDraws::new(d);
    let mut queries = 0;
    // The r walks advance in lockstep so that independent lookups overlap.
    let mut endpoints = vec![v as u32; r as usize];
    for _ in 0..t {
        for u in endpoints.iter_mut() {
            let x = draws.next(rng);
            queries += (x < d) as u64;
            *u = g.lazy_target(*u as usize, x) as u32;
        }
    }
    (SampleCounts::from_endpoints(v, t, endpoints), queries)
}

/// Uniform values in `[0, 2d)` cut from 64-bit words, rejecting overshoots.
struct StepDraws {
    span: u64,
    bits: u32,
    mask: u64,
    word: u64,
    left: u32,
}

impl StepDraws {
    fn new(d: usize) -> Self {
        let span = 2 * d as u64;
        let bits = 64 - (span - 1).leading_zeros();
        Self {
            span,
            bits,
            mask: (1u64 << bits) - 1,
            word: 0,
            left: 0,
        }
    }

    #[inline]
    fn next<R: Rng + ?Sized>(&mut self, rng: &mut R) -> usize {
        loop {
            if self.left < self.bits {
                self.word = rng.next_u64();
                self.left = 64;
            }
            let x = self.word & self.mask;
            self.word >>= self.bits;
            self.left -= self.bits;
            if x < self.span {
                return x as usize;
            }
        }
    }
}

pub fn sample_counts<O, R>(g: &O, v: Vertex, t: usize, r: u64, rng: &mut R) -> Result<SampleCounts>
where
    O: NeighborOracle + ?Sized,
    R: Rng + ?Sized,
{
    if r == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    if v >= g.vertex_count() {
        return Err(Error::invalid(format!("start vertex {v} out of range")));
    }
    Ok(sample_counts_counted(g, v, t, r, rng).0)
}

/// Histogram drawn from the reproducible stream `(master, purpose, v, index)`.
pub fn seeded_counts<O>(
    g: &O,
    master: u64,
    purpose: Purpose,
    v: Vertex,
    index: u64,
    t: usize,
    r: u64,
) -> (SampleCounts, u64)
where
    O: NeighborOracle + ?Sized,
{
    let mut rng = rng::stream(master, purpose, v as u64, index);
    sample_counts_counted(g, v, t, r, &mut rng)
}

/// Exact endpoint distribution of a `t`-step lazy walk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkDistribution {
    pub origin: Vertex,
    pub t: usize,
    pub probs: Vec<f64>,
}

impl WalkDistribution {
    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.probs.iter().map(|p| p * p).sum()
    }

    pub fn l2_distance_sq(&self, other: &WalkDistribution) -> f64 {
        l2_distance_sq(&self.probs, &other.probs)
    }

    /// Probability mass on `set`.
    pub fn mass(&self, set: &VertexSet) -> f64 {
        set.iter().map(|v| self.probs[v]).sum()
    }
}

pub fn l2_distance_sq(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum()
}

fn check_exact_cap(g: &BoundedDegreeGraph) -> Result<()> {
    if g.n() > EXACT_CAP {
        return Err(Error::Capacity {
            what: "exact walk distributions",
            limit: EXACT_CAP,
            got: g.n(),
            hint: "use sampled endpoints instead",
        });
    }
    Ok(())
}

/// One application of the lazy-walk operator, `out = p W`.
///
/// `W` is symmetric, so the same routine advances row and column vectors.
pub fn apply_walk(g: &BoundedDegreeGraph, p: &[f64], out: &mut [f64]) {
    let move_p = 1.0 / (2.0 * g.d() as f64);
    for (u, o) in out.iter_mut().enumerate() {
        let nbrs = g.neighbors(u);
        let inflow: f64 = nbrs.iter().map(|&w| p[w as usize]).sum();
        *o = p[u] * (1.0 - nbrs.len() as f64 * move_p) + inflow * move_p;
    }
}

/// Advances `p` by `t` walk steps.
pub fn evolve(g: &BoundedDegreeGraph, mut p: Vec<f64>, t: usize) -> Vec<f64> {
    let mut scratch = vec![0.0; p.len()];
    for _ in 0..t {
        apply_walk(g, &p, &mut scratch);
        std::mem::swap(&mut p, &mut scratch);
    }
    p
}

/// `p_v^t = 1_v W^t`, by `t` sparse applications of the walk operator.
pub fn exact_distribution(g: &BoundedDegreeGraph, v: Vertex, t: usize) -> Result<WalkDistribution> {
    check_exact_cap(g)?;
    if v >= g.n() {
        return Err(Error::invalid(format!("start vertex {v} out of range")));
    }
    let mut p = vec![0.0; g.n()];
    p[v] = 1.0;
    Ok(WalkDistribution {
        origin: v,
        t,
        probs: evolve(g, p, t),
    })
}

/// Probability that a `t`-step walk from `v` never leaves `A`,
/// `(1_v (W I_A)^t)(A)`.
pub fn remain_probability(
    g: &BoundedDegreeGraph,
    v: Vertex,
    a: &VertexSet,
    t: usize,
) -> Result<f64> {
    if !a.contains(v) {
        return Err(Error::invalid(format!("start vertex {v} is not in A")));
    }
    Ok(remain_probabilities(g, a, t)?[v])
}

/// Remain probabilities for every start vertex at once (zero outside `A`).
///
/// Uses the column form `(W I_A)^t 1_A`, so the cost is that of a single walk.
pub fn remain_probabilities(g: &BoundedDegreeGraph, a: &VertexSet, t: usize) -> Result<Vec<f64>> {
    check_exact_cap(g)?;
    if a.universe() != g.n() {
        return Err(Error::invalid("vertex set does not belong to this graph"));
    }
    let mask = a.mask();
    let mut x: Vec<f64> = mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();
    let mut scratch = vec![0.0; g.n()];
    for _ in 0..t {
        apply_walk(g, &x, &mut scratch);
        for (s, &m) in scratch.iter_mut().zip(&mask) {
            if !m {
                *s = 0.0;
            }
        }
        std::mem::swap(&mut x, &mut scratch);
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn k2() -> BoundedDegreeGraph {
        BoundedDegreeGraph::from_edges(2, 1, [(0, 1)]).unwrap()
    }

    fn cycle(n: usize) -> BoundedDegreeGraph {
        BoundedDegreeGraph::from_edges(n, 2, (0..n).map(|i| (i, (i + 1) % n))).unwrap()
    }

    #[test]
    fn isolated_vertex_never_moves() {
        let g = BoundedDegreeGraph::from_edges(3, 2, [(0, 1)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(walk_step(&g, 2, &mut rng), 2);
        }
        let one = BoundedDegreeGraph::singleton(4).unwrap();
        assert_eq!(sample_endpoint(&one, 0, 37, &mut rng), 0);
    }

    #[test]
    fn zero_length_walk_returns_origin() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert_eq!(sample_endpoint(&cycle(5), 3, 0, &mut rng), 3);
        let d = exact_distribution(&cycle(5), 3, 0).unwrap();
        assert_eq!(d.probs, vec![0.0, 0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn full_degree_vertex_stays_half_the_time() {
        let g = cycle(6);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let trials = 200_000;
        let stays = (0..trials).filter(|_| walk_step(&g, 0, &mut rng) == 0).count();
        let p = stays as f64 / trials as f64;
        let se = (0.25 / trials as f64).sqrt();
        assert!((p - 0.5).abs() < 4.0 * se, "stay fraction {p}");
    }

    #[test]
    fn k2_empirical_matches_exact() {
        let g = k2();
        let exact = exact_distribution(&g, 0, 1).unwrap();
        assert_eq!(exact.probs, vec![0.5, 0.5]);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let r = 1_000_000u64;
        let c = sample_counts(&g, 0, 1, r, &mut rng).unwrap();
        let p0 = c.get(0) as f64 / r as f64;
        let se = (0.25 / r as f64).sqrt();
        assert!((p0 - 0.5).abs() < 3.0 * se, "p0 = {p0}");
    }

    #[test]
    fn sample_counts_conserve_mass() {
        let g = cycle(9);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let one = sample_counts(&g, 4, 3, 1, &mut rng).unwrap();
        assert_eq!(one.distinct(), 1);
        assert_eq!(one.iter().next().unwrap().1, 1);
        let single = BoundedDegreeGraph::singleton(2).unwrap();
        let c = sample_counts(&single, 0, 10, 50, &mut rng).unwrap();
        assert_eq!(c.iter().collect::<Vec<_>>(), vec![(0, 50)]);
        let c = sample_counts(&g, 0, 7, 333, &mut rng).unwrap();
        assert_eq!(c.iter().map(|(_, x)| x).sum::<u64>(), 333);
        assert_eq!(c.r(), 333);
        assert!(sample_counts(&g, 0, 7, 0, &mut rng).is_err());
    }

    #[test]
    fn seeded_counts_are_reproducible() {
        let g = cycle(11);
        let a = seeded_counts(&g, 99, Purpose::NormBatch, 3, 0, 8, 200);
        let b = seeded_counts(&g, 99, Purpose::NormBatch, 3, 0, 8, 200);
        assert_eq!(a, b);
        let c = seeded_counts(&g, 99, Purpose::NormBatch, 3, 1, 8, 200);
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn remain_probability_edge_cases() {
        let g = cycle(8);
        let all = VertexSet::full(8);
        assert!((remain_probability(&g, 2, &all, 25).unwrap() - 1.0).abs() < 1e-12);
        let a = VertexSet::new(8, [0, 1, 2]).unwrap();
        assert_eq!(remain_probability(&g, 1, &a, 0).unwrap(), 1.0);
        assert!(remain_probability(&g, 5, &a, 3).is_err());
        // from the middle of a 3-arc, one step leaves only via the endpoints' outer edges
        let p1 = remain_probability(&g, 1, &a, 1).unwrap();
        assert!((p1 - 1.0).abs() < 1e-12);
        let p2 = remain_probability(&g, 1, &a, 2).unwrap();
        // step 1 lands on 0 or 2 w.p. 1/4 each; each then exits w.p. 1/4
        assert!((p2 - (1.0 - 2.0 * 0.25 * 0.25)).abs() < 1e-12);
    }

    #[test]
    fn exact_distribution_capacity() {
        let g = BoundedDegreeGraph::from_edges(EXACT_CAP + 1, 1, std::iter::empty()).unwrap();
        assert!(matches!(
            exact_distribution(&g, 0, 1),
            Err(Error::Capacity { .. })
        ));
    }
}
