//! Constructions behind the soundness argument, run on concrete graphs.
//!
//! [`construct_s`] and [`repair_to_expander`] turn a graph whose remainder
//! `G[V \ A]` expands into an expander by editing `O(|A|)` edges; every
//! arbitrary choice is resolved by smallest vertex id. [`iterative_partition`]
//! refines a partition with sweep cuts until it has `k + 1` sparse parts or the
//! conductance budget runs out.

use std::collections::HashSet;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::random_simple_graph;
use crate::graph::{
    exhaustive_sparsest_cut, induced_subgraph, min_conductance_bruteforce, outer_conductance,
    ratio_to_f64, BoundedDegreeGraph, Conductance, Vertex, VertexSet, BRUTE_FORCE_CAP,
};
use crate::rng::{stream, Purpose};
use crate::spectral::{fiedler_sweep, lambda2, partition_cut_total};

pub const DEFAULT_EPSILON: f64 = 0.3;

/// Stand-in for the expansion constant of bounded-degree-3 expanders.
pub const DEFAULT_C_EXP: f64 = 0.1;

/// Largest `n` at which a repair is checked against `phi(H) >= alpha` exhaustively.
pub const REPAIR_CHECK_CAP: usize = 20;

/// Largest outer conductance [`iterative_partition`] accepts for a new part.
pub const DEFAULT_PHI_BUDGET: f64 = 0.05;

/// Disjoint vertex pairs; `(v, v)` is a self-pair.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairSet {
    pub pairs: Vec<(u32, u32)>,
}

impl PairSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Each vertex occurs in at most one pair.
    pub fn is_disjoint(&self) -> bool {
        let mut seen = HashSet::new();
        self.pairs.iter().all(|&(u, v)| {
            if u == v {
                seen.insert(u)
            } else {
                seen.insert(u) && seen.insert(v)
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructS {
    /// The full candidate set `S'`, ordered by `(min, max)`.
    pub s_prime: PairSet,
    /// The first `ceil(|A|/4)` pairs of `S'`.
    pub s: PairSet,
    /// Vertices outside `A` with degree at most `d - 2`.
    pub low_degree: usize,
    /// `|S'| >= n/6`.
    pub claim_holds: bool,
}

fn check_a(g: &BoundedDegreeGraph, a: &VertexSet, epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon <= 0.5) {
        return Err(Error::invalid(format!("epsilon must lie in (0, 1/2], got {epsilon}")));
    }
    if a.universe() != g.n() {
        return Err(Error::invalid("A is over a different vertex count"));
    }
    let cap = (epsilon * g.n() as f64 / 9.0).ceil() as usize;
    if a.len() > cap {
        return Err(Error::invalid(format!(
            "|A| = {} exceeds ceil(epsilon n / 9) = {cap}",
            a.len()
        )));
    }
    Ok(())
}

/// Self-pairs on low-degree vertices plus a greedy matching on the rest.
pub fn construct_s(g: &BoundedDegreeGraph, a: &VertexSet, epsilon: f64) -> Result<ConstructS> {
    check_a(g, a, epsilon)?;
    let n = g.n();
    let d = g.d();
    let in_a = a.mask();
    let mut pairs: Vec<(u32, u32)> = Vec::new();
    let mut in_u = vec![false; n];
    let mut low_degree = 0;
    for v in (0..n).filter(|&v| !in_a[v]) {
        if g.degree(v) + 2 <= d {
            pairs.push((v as u32, v as u32));
            low_degree += 1;
        } else {
            in_u[v] = true;
        }
    }
    // One ascending pass equals repeatedly taking the smallest v with a
    // neighbor in U: U only shrinks, so a skipped v stays skipped.
    for v in 0..n {
        if !in_u[v] {
            continue;
        }
        let partner = g
            .neighbors(v)
            .iter()
            .map(|&u| u as usize)
            .filter(|&u| in_u[u])
            .min();
        if let Some(u) = partner {
            in_u[v] = false;
            in_u[u] = false;
            pairs.push((v.min(u) as u32, v.max(u) as u32));
        }
    }
    pairs.sort_unstable();
    let want = a.len().div_ceil(4);
    let claim_holds = 6 * pairs.len() >= n;
    if pairs.len() < want {
        return Err(Error::Construction(format!(
            "S' has {} pairs but ceil(|A|/4) = {want} are needed",
            pairs.len()
        )));
    }
    if d >= 3 && !claim_holds {
        return Err(Error::Construction(format!(
            "|S'| = {} is below n/6 with n = {n}",
            pairs.len()
        )));
    }
    Ok(ConstructS {
        s: PairSet {
            pairs: pairs[..want].to_vec(),
        },
        s_prime: PairSet { pairs },
        low_degree,
        claim_holds,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Repair {
    pub graph: BoundedDegreeGraph,
    pub s: PairSet,
    /// Vertices of `A` that end up with one edge leaving `A`.
    pub a_double: Vec<Vertex>,
    /// Edges of the gadget built on `A`.
    pub gadget_edges: Vec<(Vertex, Vertex)>,
    /// `lambda2` of the cubic expander on `A'` (normalized by 3), when one was built.
    pub expander_lambda2: Option<f64>,
    pub deletions: usize,
    pub insertions: usize,
    /// `|E(G) symmetric difference E(H)|`.
    pub edits: usize,
    /// `(d + 4) |A|`.
    pub edit_budget: usize,
}

/// Degree sequence for a max-degree-3 graph on `m` vertices with as many edges as possible.
fn cubic_degrees(m: usize) -> Vec<usize> {
    let r = 3.min(m - 1);
    let mut deg = vec![r; m];
    if r * m % 2 == 1 {
        deg[m - 1] -= 1;
    }
    deg
}

fn cubic_expander(m: usize, seed: u64) -> Result<(Vec<(Vertex, Vertex)>, f64)> {
    let degrees = cubic_degrees(m);
    let mut rng = stream(seed, Purpose::Generator, 1, m as u64);
    let floor = crate::generators::default_lambda2_floor(3, 3);
    let mut best = 0.0f64;
    for _ in 0..crate::generators::MAX_RETRIES {
        let Some(edges) = random_simple_graph(&degrees, &mut rng, crate::generators::MAX_RETRIES) else {
            continue;
        };
        let h = BoundedDegreeGraph::from_edges(m, 3, edges)?.canonical();
        let l2 = lambda2(&h);
        best = best.max(l2);
        if l2 >= floor {
            return Ok((h.edges(), l2));
        }
    }
    Err(Error::Construction(format!(
        "no degree-3 expander on {m} vertices reached lambda2 >= {floor:.4} (best {best:.4}); resample with another seed"
    )))
}

/// Rebuilds `G` so that `A` carries an expander gadget wired into `V \ A`.
///
/// Deletes every edge at `A` and inside each pair of `S`, builds the gadget on
/// `A` (nothing for `|A| = 1`, a path for `|A| < 10`, otherwise a cubic
/// expander on `A'` whose edges are subdivided by the vertices of `A''`) and
/// matches `A''` to the pair endpoints of `S`.
pub fn repair_to_expander(g: &BoundedDegreeGraph, a: &VertexSet, epsilon: f64, seed: u64) -> Result<Repair> {
    let d = g.d();
    if d < 3 {
        return Err(Error::invalid(format!("repair needs d >= 3, got {d}")));
    }
    let cs = construct_s(g, a, epsilon)?;
    let n = g.n();
    let members: Vec<Vertex> = a.iter().collect();
    let size = members.len();
    let in_a = a.mask();

    let double = 2 * size.div_ceil(4);
    let (a_double, gadget, expander_lambda2): (Vec<Vertex>, Vec<(Vertex, Vertex)>, Option<f64>) = match size {
        0 => (Vec::new(), Vec::new(), None),
        1 => (members.clone(), Vec::new(), None),
        2..=9 => {
            let path = members.windows(2).map(|w| (w[0], w[1])).collect();
            (members[..double].to_vec(), path, None)
        }
        _ => {
            let a2 = members[..double].to_vec();
            let a1 = &members[double..];
            let (local, l2) = cubic_expander(a1.len(), seed)?;
            let mut base: Vec<(Vertex, Vertex)> = local.iter().map(|&(u, v)| (a1[u], a1[v])).collect();
            base.sort_unstable();
            // chain[j] lists the A'' vertices placed on base edge j, round-robin,
            // so every A'' vertex is used once even when E' is short
            let mut chains: Vec<Vec<Vertex>> = vec![Vec::new(); base.len()];
            for (i, &w) in a2.iter().enumerate() {
                chains[i % base.len()].push(w);
            }
            let mut edges = Vec::new();
            for (&(u, v), chain) in base.iter().zip(&chains) {
                let mut prev = u;
                for &w in chain {
                    edges.push((prev, w));
                    prev = w;
                }
                edges.push((prev, v));
            }
            (a2, edges, Some(l2))
        }
    };

    let mut removed: HashSet<(Vertex, Vertex)> = HashSet::new();
    for (u, v) in g.edges() {
        if in_a[u] || in_a[v] {
            removed.insert((u, v));
        }
    }
    for &(u, v) in &cs.s.pairs {
        let (u, v) = (u as Vertex, v as Vertex);
        if u != v && g.has_edge(u, v) {
            removed.insert((u.min(v), u.max(v)));
        }
    }
    let endpoints: Vec<Vertex> = cs
        .s
        .pairs
        .iter()
        .flat_map(|&(u, v)| [u as Vertex, v as Vertex])
        .collect();
    let mut added: Vec<(Vertex, Vertex)> = Vec::new();
    if a_double.len() == 1 && !endpoints.is_empty() {
        let w = a_double[0];
        added.push((w.min(endpoints[0]), w.max(endpoints[0])));
        if endpoints[1] != endpoints[0] {
            added.push((w.min(endpoints[1]), w.max(endpoints[1])));
        }
    } else {
        for (&w, &x) in a_double.iter().zip(&endpoints) {
            added.push((w.min(x), w.max(x)));
        }
    }
    added.extend(gadget.iter().map(|&(u, v)| (u.min(v), u.max(v))));

    let mut kept: Vec<(Vertex, Vertex)> = g.edges().into_iter().filter(|e| !removed.contains(e)).collect();
    kept.extend_from_slice(&added);
    let h = BoundedDegreeGraph::from_edges(n, d, kept)
        .map_err(|e| Error::Construction(format!("repaired graph is invalid: {e}")))?
        .canonical();

    let old: HashSet<(Vertex, Vertex)> = g.edges().into_iter().collect();
    let new: HashSet<(Vertex, Vertex)> = h.edges().into_iter().collect();
    let edits = old.symmetric_difference(&new).count();
    let edit_budget = (d + 4) * size;
    if edits > edit_budget {
        return Err(Error::Construction(format!(
            "repair edited {edits} edges, above the (d + 4)|A| = {edit_budget} budget"
        )));
    }
    Ok(Repair {
        graph: h,
        s: cs.s,
        a_double,
        gadget_edges: gadget,
        expander_lambda2,
        deletions: removed.len(),
        insertions: added.len(),
        edits,
        edit_budget,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepairCheck {
    pub degree_ok: bool,
    pub edits_ok: bool,
    /// `phi(G[V \ A])`, exact.
    pub phi_rest: Option<Conductance>,
    pub alpha: f64,
    /// `alpha <= c_exp/(150 d)` and `phi(G[V \ A]) >= (350 / c_exp) alpha`.
    pub preconditions: bool,
    pub phi_h: Option<Conductance>,
    /// `phi(H) >= alpha`; `None` when the preconditions fail or `n` is too large.
    pub alpha_ok: Option<bool>,
}

/// The largest `alpha` for which the repaired graph is certified an `alpha`-expander:
/// `min(c_exp / (150 d), phi(G[V \ A]) c_exp / 350)`.
pub fn expansion_alpha(d: usize, phi_rest: f64, c_exp: f64) -> f64 {
    (c_exp / (150.0 * d as f64)).min(phi_rest * c_exp / 350.0)
}

/// Checks a repair: degree bound, edit budget and, for `n <= 20`, `phi(H) >= alpha`.
pub fn verify_repair(
    g: &BoundedDegreeGraph,
    a: &VertexSet,
    repair: &Repair,
    alpha: f64,
    c_exp: f64,
) -> Result<RepairCheck> {
    let h = &repair.graph;
    let degree_ok = h.n() == g.n() && h.max_degree() <= g.d();
    let edits_ok = repair.edits <= repair.edit_budget;
    let rest = a.complement();
    let phi_rest = if !rest.is_empty() && rest.len() <= BRUTE_FORCE_CAP {
        let (sub, _) = induced_subgraph(g, &rest)?;
        Some(min_conductance_bruteforce(&sub)?)
    } else {
        None
    };
    let preconditions = match phi_rest {
        Some(p) => {
            alpha > 0.0
                && alpha <= c_exp / (150.0 * g.d() as f64)
                && ratio_to_f64(p) >= 350.0 / c_exp * alpha
        }
        None => false,
    };
    let (phi_h, alpha_ok) = if h.n() <= REPAIR_CHECK_CAP {
        let p = min_conductance_bruteforce(h)?;
        (Some(p), preconditions.then(|| ratio_to_f64(p) >= alpha))
    } else {
        (None, None)
    };
    Ok(RepairCheck {
        degree_ok,
        edits_ok,
        phi_rest,
        alpha,
        preconditions,
        phi_h,
        alpha_ok,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CutMode {
    Exact,
    Sweep,
}

impl std::str::FromStr for CutMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Self::Exact),
            "sweep" => Ok(Self::Sweep),
            _ => Err(Error::invalid(format!("cut mode must be exact or sweep, got `{s}`"))),
        }
    }
}

/// A sparse set with `|S| <= n/2`: the exact minimizer or the Fiedler sweep cut.
pub fn sparse_cut_search(g: &BoundedDegreeGraph, mode: CutMode) -> Result<(VertexSet, Conductance)> {
    if g.n() < 2 {
        return Err(Error::invalid("cut search needs at least two vertices"));
    }
    match mode {
        CutMode::Exact => Ok(exhaustive_sparsest_cut(g)?.expect("n >= 2")),
        CutMode::Sweep => {
            let s = fiedler_sweep(g)?;
            Ok((s.set, s.phi))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionCertificate {
    pub k: usize,
    pub epsilon: f64,
    pub parts: Vec<VertexSet>,
    pub phi_out: Vec<Conductance>,
    pub min_size: usize,
    /// `epsilon^2 n / (1152 k)`.
    pub size_floor: f64,
    pub phi_budget: f64,
    /// `e(V_1, ..., V_h)`, recounted from the final parts.
    pub cut_total: u64,
    /// Reached `k + 1` parts.
    pub complete: bool,
    pub size_ok: bool,
    pub budget_ok: bool,
}

impl PartitionCertificate {
    pub fn holds(&self) -> bool {
        self.complete && self.size_ok && self.budget_ok
    }
}

/// Refines `{V}` towards `k + 1` parts of small outer conductance.
///
/// Connected components come first: with at least `k + 1` of them the `k`
/// largest are kept and the rest merged. Otherwise the split chosen at each
/// round is the sweep cut, over all current parts, whose larger-conductance
/// side is smallest in `G`; splits below the size floor or above `phi_budget`
/// are not taken.
pub fn iterative_partition(
    g: &BoundedDegreeGraph,
    k: usize,
    epsilon: f64,
    phi_budget: f64,
) -> Result<PartitionCertificate> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if !(epsilon > 0.0 && epsilon <= 0.5) {
        return Err(Error::invalid(format!("epsilon must lie in (0, 1/2], got {epsilon}")));
    }
    let n = g.n();
    let size_floor = epsilon * epsilon * n as f64 / (1152.0 * k as f64);
    let (labels, count) = g.components();
    let mut comps: Vec<Vec<Vertex>> = vec![Vec::new(); count];
    for v in 0..n {
        comps[labels[v]].push(v);
    }
    comps.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    let mut parts: Vec<VertexSet> = Vec::new();
    if count > k {
        for c in comps.iter().take(k) {
            parts.push(VertexSet::new(n, c.iter().copied())?);
        }
        parts.push(VertexSet::new(n, comps[k..].iter().flatten().copied())?);
    } else {
        for c in &comps {
            parts.push(VertexSet::new(n, c.iter().copied())?);
        }
        while parts.len() < k + 1 {
            let mut best: Option<(Conductance, usize, VertexSet, VertexSet)> = None;
            for (i, p) in parts.iter().enumerate() {
                if p.len() < 2 {
                    continue;
                }
                let (sub, ids) = induced_subgraph(g, p)?;
                let (side, _) = sparse_cut_search(&sub, CutMode::Sweep)?;
                let a = VertexSet::new(n, side.iter().map(|v| ids[v]))?;
                let b = VertexSet::new(n, p.iter().filter(|&v| !a.contains(v)))?;
                if (a.len().min(b.len()) as f64) < size_floor {
                    continue;
                }
                let score = outer_conductance(g, &a)?.max(outer_conductance(g, &b)?);
                if best.as_ref().map_or(true, |(s, ..)| score < *s) {
                    best = Some((score, i, a, b));
                }
            }
            match best {
                Some((score, i, a, b)) if ratio_to_f64(score) <= phi_budget => {
                    parts[i] = a;
                    parts.push(b);
                }
                _ => break,
            }
        }
    }
    let phi_out = parts
        .iter()
        .map(|p| outer_conductance(g, p))
        .collect::<Result<Vec<_>>>()?;
    let min_size = parts.iter().map(VertexSet::len).min().unwrap_or(0);
    Ok(PartitionCertificate {
        k,
        epsilon,
        complete: parts.len() == k + 1,
        size_ok: min_size as f64 >= size_floor,
        budget_ok: phi_out.iter().all(|&p| ratio_to_f64(p) <= phi_budget),
        cut_total: partition_cut_total(g, &parts),
        phi_out,
        min_size,
        size_floor,
        phi_budget,
        parts,
    })
}

/// Zero conductance as an exact value.
pub fn zero() -> Conductance {
    Ratio::from_integer(0)
}
