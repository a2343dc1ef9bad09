//! Seeded benchmark instances with a known planted partition.
//!
//! Expander pieces come from the pairing model: stubs are shuffled and paired,
//! pairs that would form a loop or repeat an edge are returned to the pool and
//! reshuffled, and the attempt restarts if no legal pair remains. Every piece
//! is certified by its second Laplacian eigenvalue and resampled when it falls
//! below the floor.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{outer_conductance, ratio_to_f64, BoundedDegreeGraph, Conductance, VertexSet};
use crate::rng::{stream, Purpose};
use crate::spectral::lambda2;

pub const SIDECAR_SCHEMA_VERSION: u32 = 1;

/// Resampling attempts before a piece is declared unobtainable.
pub const MAX_RETRIES: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartDesign {
    pub size: usize,
    /// Degree of every vertex inside its own part.
    pub internal_degree: usize,
    /// Second eigenvalue of the part on its own, normalized by the global `d`.
    pub lambda2: Option<f64>,
    /// Cheeger lower bound `lambda2 / 2` on the part's inner conductance.
    pub phi_in_target: f64,
    pub phi_out: Conductance,
    pub phi_out_value: f64,
    pub cross_degree: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Design {
    pub family: String,
    pub k: usize,
    pub d: usize,
    pub cross_edges: usize,
    pub parts: Vec<PartDesign>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Design {
    pub fn max_phi_out(&self) -> f64 {
        self.parts.iter().map(|p| p.phi_out_value).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterInstance {
    pub graph: BoundedDegreeGraph,
    pub parts: Vec<VertexSet>,
    pub design: Design,
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    schema_version: u32,
    seed: u64,
    parts: Vec<Vec<u32>>,
    design: Design,
}

/// `foo.edges` -> `foo.json`.
pub fn sidecar_path(edges: &Path) -> PathBuf {
    edges.with_extension("json")
}

impl ClusterInstance {
    /// Part index of every vertex.
    pub fn labels(&self) -> Vec<usize> {
        let mut out = vec![usize::MAX; self.graph.n()];
        for (i, p) in self.parts.iter().enumerate() {
            for v in p.iter() {
                out[v] = i;
            }
        }
        out
    }

    /// Writes the edge list to `edges` and the sidecar next to it.
    pub fn save(&self, edges: impl AsRef<Path>) -> Result<()> {
        let edges = edges.as_ref();
        self.graph.save(edges)?;
        let sidecar = Sidecar {
            schema_version: SIDECAR_SCHEMA_VERSION,
            seed: self.seed,
            parts: self.parts.iter().map(|p| p.members().to_vec()).collect(),
            design: self.design.clone(),
        };
        fs::write(sidecar_path(edges), serde_json::to_string_pretty(&sidecar)? + "\n")?;
        Ok(())
    }

    /// Loads an instance and re-checks the partition and the recorded `phi_out`.
    pub fn load(edges: impl AsRef<Path>) -> Result<Self> {
        let edges = edges.as_ref();
        let graph = BoundedDegreeGraph::load(edges)?;
        let text = fs::read_to_string(sidecar_path(edges))?;
        let sidecar: Sidecar = serde_json::from_str(&text)?;
        let parts = sidecar
            .parts
            .iter()
            .map(|p| VertexSet::new(graph.n(), p.iter().map(|&v| v as usize)))
            .collect::<Result<Vec<_>>>()?;
        let inst = Self {
            graph,
            parts,
            design: sidecar.design,
            seed: sidecar.seed,
        };
        inst.check()?;
        Ok(inst)
    }

    /// Parts partition `[0, n)` and every recorded `phi_out` matches a recount.
    pub fn check(&self) -> Result<()> {
        let n = self.graph.n();
        let mut seen = vec![false; n];
        for p in &self.parts {
            if p.universe() != n {
                return Err(Error::Construction("part universe differs from graph".into()));
            }
            for v in p.iter() {
                if std::mem::replace(&mut seen[v], true) {
                    return Err(Error::Construction(format!("vertex {v} in two parts")));
                }
            }
        }
        if let Some(v) = seen.iter().position(|&x| !x) {
            return Err(Error::Construction(format!("vertex {v} in no part")));
        }
        if self.design.parts.len() != self.parts.len() {
            return Err(Error::Construction("design and part lists differ in length".into()));
        }
        for (i, (p, rec)) in self.parts.iter().zip(&self.design.parts).enumerate() {
            let phi = outer_conductance(&self.graph, p)?;
            if phi != rec.phi_out {
                return Err(Error::Construction(format!(
                    "part {i}: recorded phi_out {} but graph gives {phi}",
                    rec.phi_out
                )));
            }
        }
        Ok(())
    }
}

/// Degree-sequence sampler; returns `None` if `restarts` attempts all got stuck.
pub fn random_simple_graph<R: Rng + ?Sized>(
    degrees: &[usize],
    rng: &mut R,
    restarts: usize,
) -> Option<Vec<(usize, usize)>> {
    if degrees.iter().sum::<usize>() % 2 == 1 {
        return None;
    }
    (0..restarts.max(1)).find_map(|_| try_pairing(degrees, rng))
}

fn try_pairing<R: Rng + ?Sized>(degrees: &[usize], rng: &mut R) -> Option<Vec<(usize, usize)>> {
    let mut stubs: Vec<u32> = degrees
        .iter()
        .enumerate()
        .flat_map(|(v, &k)| std::iter::repeat(v as u32).take(k))
        .collect();
    let mut present: HashSet<(u32, u32)> = HashSet::with_capacity(stubs.len() / 2);
    let mut edges = Vec::with_capacity(stubs.len() / 2);
    while !stubs.is_empty() {
        stubs.shuffle(rng);
        let mut left = Vec::new();
        for pair in stubs.chunks_exact(2) {
            let (u, v) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if u != v && present.insert((u, v)) {
                edges.push((u as usize, v as usize));
            } else {
                left.extend_from_slice(pair);
            }
        }
        if left.len() == stubs.len() && !has_legal_pair(&left, &present) {
            return None;
        }
        stubs = left;
    }
    Some(edges)
}

fn has_legal_pair(stubs: &[u32], present: &HashSet<(u32, u32)>) -> bool {
    let mut vs: Vec<u32> = stubs.to_vec();
    vs.sort_unstable();
    vs.dedup();
    for (i, &u) in vs.iter().enumerate() {
        for &v in &vs[i + 1..] {
            if !present.contains(&(u, v)) {
                return true;
            }
        }
    }
    false
}

/// Heuristic floor for an `r`-regular piece normalized by `d`: half the
/// Alon-Boppana value `(r - 2 sqrt(r-1)) / d`, and plain connectivity for `r <= 2`.
pub fn default_lambda2_floor(r: usize, d: usize) -> f64 {
    if r <= 2 {
        return 0.0;
    }
    let rf = r as f64;
    (0.5 * (rf - 2.0 * (rf - 1.0).sqrt()) / d as f64).max(0.005)
}

/// A connected `r`-regular graph on `m` vertices with bound `d` whose
/// `lambda2` clears `floor`, together with that eigenvalue.
pub(crate) fn certified_regular<R: Rng + ?Sized>(
    m: usize,
    r: usize,
    d: usize,
    floor: f64,
    rng: &mut R,
) -> Result<(BoundedDegreeGraph, f64)> {
    if m * r % 2 == 1 {
        return Err(Error::invalid(format!("m = {m}, d = {r}: m*d must be even for a regular graph")));
    }
    if m < r + 1 {
        return Err(Error::invalid(format!(
            "{m} vertices cannot be {r}-regular (need m >= {})",
            r + 1
        )));
    }
    if r > d {
        return Err(Error::invalid(format!("degree {r} exceeds bound {d}")));
    }
    let degrees = vec![r; m];
    let mut best = 0.0f64;
    for _ in 0..MAX_RETRIES {
        let Some(edges) = random_simple_graph(&degrees, rng, MAX_RETRIES) else {
            continue;
        };
        let g = BoundedDegreeGraph::from_edges(m, d, edges)?.canonical();
        if m > 1 && !g.is_connected() {
            continue;
        }
        let l2 = if m == 1 { 0.0 } else { lambda2(&g) };
        best = best.max(l2);
        if l2 >= floor {
            return Ok((g, l2));
        }
    }
    Err(Error::Construction(format!(
        "no connected {r}-regular graph on {m} vertices reached lambda2 >= {floor} \
         in {MAX_RETRIES} attempts (best {best:.4})"
    )))
}

/// A simple `d`-regular graph on `m` vertices, certified as an expander.
pub fn random_regular_expander<R: Rng + ?Sized>(
    m: usize,
    d: usize,
    rng: &mut R,
) -> Result<BoundedDegreeGraph> {
    if d == 0 {
        return Err(Error::invalid("degree must be at least 1"));
    }
    Ok(certified_regular(m, d, d, default_lambda2_floor(d, d), rng)?.0)
}

struct Piece {
    graph: BoundedDegreeGraph,
    lambda2: f64,
}

fn build_pieces<R: Rng + ?Sized>(sizes: &[usize], r: usize, d: usize, rng: &mut R) -> Result<Vec<Piece>> {
    let floor = default_lambda2_floor(r, d);
    sizes
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            certified_regular(m, r, d, floor, rng)
                .map(|(graph, lambda2)| Piece { graph, lambda2 })
                .map_err(|e| match e {
                    Error::InvalidInput(msg) => Error::invalid(format!("part {i}: {msg}")),
                    other => other,
                })
        })
        .collect()
}

fn assemble(
    family: &str,
    k: usize,
    d: usize,
    pieces: &[Piece],
    cross: &[(usize, usize)],
    seed: u64,
    note: Option<String>,
) -> Result<ClusterInstance> {
    let n: usize = pieces.iter().map(|p| p.graph.n()).sum();
    let mut edges = Vec::new();
    let mut parts = Vec::with_capacity(pieces.len());
    let mut offset = 0;
    for p in pieces {
        edges.extend(p.graph.edges().into_iter().map(|(u, v)| (u + offset, v + offset)));
        parts.push(VertexSet::new(n, offset..offset + p.graph.n())?);
        offset += p.graph.n();
    }
    edges.extend_from_slice(cross);
    let graph = BoundedDegreeGraph::from_edges(n, d, edges)?.canonical();
    let mut designs = Vec::with_capacity(parts.len());
    for (part, piece) in parts.iter().zip(pieces) {
        let phi_out = outer_conductance(&graph, part)?;
        designs.push(PartDesign {
            size: part.len(),
            internal_degree: piece.graph.max_degree(),
            lambda2: Some(piece.lambda2),
            phi_in_target: piece.lambda2 / 2.0,
            phi_out,
            phi_out_value: ratio_to_f64(phi_out),
            cross_degree: crate::graph::cut_size(&graph, part),
        });
    }
    let inst = ClusterInstance {
        graph,
        parts,
        design: Design {
            family: family.to_string(),
            k,
            d,
            cross_edges: cross.len(),
            parts: designs,
            note,
        },
        seed,
    };
    inst.check()?;
    Ok(inst)
}

fn instance_rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    stream(seed, Purpose::Generator, 0, 0)
}

/// `(d-1)`-regular expanders joined by `cross_edges` edges between uniformly
/// random part pairs, each on vertices that still have their spare slot.
pub fn planted_clusterable(sizes: &[usize], d: usize, cross_edges: usize, seed: u64) -> Result<ClusterInstance> {
    if sizes.is_empty() {
        return Err(Error::invalid("sizes must name at least one part"));
    }
    if d < 2 {
        return Err(Error::invalid("planted parts need d >= 2"));
    }
    if let Some(i) = sizes.iter().position(|&m| m < d + 1) {
        return Err(Error::invalid(format!(
            "sizes[{i}] = {} is below d + 1 = {}",
            sizes[i],
            d + 1
        )));
    }
    let total: usize = sizes.iter().sum();
    let max_part = *sizes.iter().max().unwrap_or(&0);
    if sizes.len() < 2 && cross_edges > 0 {
        return Err(Error::invalid("cross_edges needs at least two parts"));
    }
    if cross_edges > (total - max_part).min(total / 2) {
        return Err(Error::invalid(format!(
            "cross_edges = {cross_edges} exceeds the {} available spare slots",
            (total - max_part).min(total / 2)
        )));
    }
    let mut rng = instance_rng(seed);
    let pieces = build_pieces(sizes, d - 1, d, &mut rng)?;

    let mut free: Vec<Vec<usize>> = Vec::with_capacity(sizes.len());
    let mut offset = 0;
    for &m in sizes {
        let mut f: Vec<usize> = (offset..offset + m).collect();
        f.shuffle(&mut rng);
        free.push(f);
        offset += m;
    }
    let mut cross = Vec::with_capacity(cross_edges);
    for _ in 0..cross_edges {
        let live: Vec<usize> = (0..free.len()).filter(|&i| !free[i].is_empty()).collect();
        if live.len() < 2 {
            return Err(Error::invalid(format!(
                "cross_edges = {cross_edges} exceeds the available spare slots"
            )));
        }
        let ia = rng.gen_range(0..live.len());
        let mut ib = rng.gen_range(0..live.len() - 1);
        if ib >= ia {
            ib += 1;
        }
        let u = free[live[ia]].pop().unwrap();
        let v = free[live[ib]].pop().unwrap();
        cross.push((u.min(v), u.max(v)));
    }
    assemble("planted", sizes.len(), d, &pieces, &cross, seed, None)
}

/// `k_plus` disjoint `d`-regular expanders of equal size.
pub fn far_instance_disjoint(k_plus: usize, size: usize, d: usize, seed: u64) -> Result<ClusterInstance> {
    if k_plus < 2 {
        return Err(Error::invalid("k_plus must be at least 2"));
    }
    let mut rng = instance_rng(seed);
    let pieces = build_pieces(&vec![size; k_plus], d, d, &mut rng)?;
    let note = format!(
        "{k_plus} disjoint expanders of size {size}; merging them into {} or fewer \
         well-connected clusters needs a linear number of inserted edges",
        k_plus - 1
    );
    assemble("far", k_plus, d, &pieces, &[], seed, Some(note))
}

/// Two `(d-1)`-regular expanders of size `half` joined by `cut_edges`
/// vertex-disjoint edges.
pub fn dumbbell(half: usize, d: usize, cut_edges: usize, seed: u64) -> Result<ClusterInstance> {
    if d < 2 {
        return Err(Error::invalid("dumbbell needs d >= 2"));
    }
    if 4 * cut_edges > half {
        return Err(Error::invalid(format!(
            "cut_edges = {cut_edges} gives phi_out above 1/(4d); need 4 * cut_edges <= half = {half}"
        )));
    }
    let mut rng = instance_rng(seed);
    let pieces = build_pieces(&[half, half], d - 1, d, &mut rng)?;
    let mut left: Vec<usize> = (0..half).collect();
    let mut right: Vec<usize> = (half..2 * half).collect();
    left.shuffle(&mut rng);
    right.shuffle(&mut rng);
    let cross: Vec<_> = left.into_iter().zip(right).take(cut_edges).collect();
    assemble("dumbbell", 2, d, &pieces, &cross, seed, None)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Path,
    Cycle,
    Grid,
}

impl std::str::FromStr for FamilyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "path" => Ok(Self::Path),
            "cycle" => Ok(Self::Cycle),
            "grid" => Ok(Self::Grid),
            _ => Err(Error::invalid(format!("unknown family `{s}` (path|cycle|grid)"))),
        }
    }
}

/// Path, cycle or square grid on `n` vertices with `d` set to the max degree.
pub fn low_conductance_family(kind: FamilyKind, n: usize) -> Result<BoundedDegreeGraph> {
    if n < 3 {
        return Err(Error::invalid(format!("family graphs need n >= 3, got {n}")));
    }
    let edges: Vec<(usize, usize)> = match kind {
        FamilyKind::Path => (0..n - 1).map(|i| (i, i + 1)).collect(),
        FamilyKind::Cycle => (0..n).map(|i| (i.min((i + 1) % n), i.max((i + 1) % n))).collect(),
        FamilyKind::Grid => {
            let side = (n as f64).sqrt().round() as usize;
            if side * side != n {
                return Err(Error::invalid(format!("grid needs a square vertex count, got {n}")));
            }
            let mut e = Vec::new();
            for r in 0..side {
                for c in 0..side {
                    let v = r * side + c;
                    if c + 1 < side {
                        e.push((v, v + 1));
                    }
                    if r + 1 < side {
                        e.push((v, v + side));
                    }
                }
            }
            e
        }
    };
    let mut deg = vec![0usize; n];
    for &(u, v) in &edges {
        deg[u] += 1;
        deg[v] += 1;
    }
    let d = deg.into_iter().max().unwrap_or(1).max(1);
    Ok(BoundedDegreeGraph::from_edges(n, d, edges)?.canonical())
}

/// A generator invocation, as stored in configs and corpus listings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GenSpec {
    RandomRegular { m: usize, d: usize },
    Planted { sizes: Vec<usize>, d: usize, cross_edges: usize },
    Far { k_plus: usize, size: usize, d: usize },
    Dumbbell { half: usize, d: usize, cut_edges: usize },
    Family { family: FamilyKind, n: usize },
}

impl GenSpec {
    pub fn generate(&self, seed: u64) -> Result<ClusterInstance> {
        match self {
            Self::RandomRegular { m, d } => {
                if *d == 0 {
                    return Err(Error::invalid("degree must be at least 1"));
                }
                let mut rng = instance_rng(seed);
                let (graph, l2) =
                    certified_regular(*m, *d, *d, default_lambda2_floor(*d, *d), &mut rng)?;
                let piece = Piece { graph, lambda2: l2 };
                assemble("random_regular", 1, *d, &[piece], &[], seed, None)
            }
            Self::Planted { sizes, d, cross_edges } => planted_clusterable(sizes, *d, *cross_edges, seed),
            Self::Far { k_plus, size, d } => far_instance_disjoint(*k_plus, *size, *d, seed),
            Self::Dumbbell { half, d, cut_edges } => dumbbell(*half, *d, *cut_edges, seed),
            Self::Family { family, n } => {
                let graph = low_conductance_family(*family, *n)?;
                let l2 = if graph.n() <= 4000 { lambda2(&graph) } else { f64::NAN };
                let piece = Piece { graph, lambda2: l2 };
                let name = format!("{family:?}").to_lowercase();
                let mut inst = assemble(&name, 1, piece.graph.d(), &[piece], &[], seed, None)?;
                if l2.is_nan() {
                    inst.design.parts[0].lambda2 = None;
                    inst.design.parts[0].phi_in_target = 0.0;
                }
                Ok(inst)
            }
        }
    }
}

/// One entry of the standard acceptance corpus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub name: String,
    pub spec: GenSpec,
    pub seed: u64,
    /// Cluster count handed to the tester.
    pub k: usize,
    pub epsilon: f64,
    pub phi: f64,
    /// Whether the tester is expected to accept.
    pub clusterable: bool,
}

/// Inner-conductance parameter the corpus is tested with.
pub const CORPUS_PHI: f64 = 0.25;
pub const CORPUS_EPSILON: f64 = 0.3;
pub const CORPUS_D: usize = 8;

/// Twenty planted instances (k in {2,3}, n in [1000, 3000], at most ten cross
/// edges) followed by twenty far instances (k+1 disjoint expanders), all d = 8.
pub fn standard_corpus(master: u64) -> Vec<CorpusEntry> {
    let mut out = Vec::with_capacity(40);
    for i in 0..20usize {
        let k = 2 + i % 2;
        let n = 1000 + 100 * (i / 2) * 2;
        // (d-1) = 7 is odd, so every part size must be even
        let base = (n / k) & !1;
        let mut sizes = vec![base; k];
        sizes[0] += n - base * k;
        if i % 4 == 0 {
            let shift = (base / 5) & !1;
            sizes[0] += shift;
            sizes[k - 1] -= shift;
        }
        let cross_edges = 1 + (i * 7) % 10;
        out.push(CorpusEntry {
            name: format!("planted-{i:02}"),
            spec: GenSpec::Planted {
                sizes,
                d: CORPUS_D,
                cross_edges,
            },
            seed: master.wrapping_add(i as u64),
            k,
            epsilon: CORPUS_EPSILON,
            phi: CORPUS_PHI,
            clusterable: true,
        });
    }
    for i in 0..20usize {
        let k = 2 + i % 2;
        let n = 1000 + 100 * (i / 2) * 2;
        let size = n / (k + 1);
        out.push(CorpusEntry {
            name: format!("far-{i:02}"),
            spec: GenSpec::Far {
                k_plus: k + 1,
                size: size + size % 2,
                d: CORPUS_D,
            },
            seed: master.wrapping_add(100 + i as u64),
            k,
            epsilon: CORPUS_EPSILON,
            phi: CORPUS_PHI,
            clusterable: false,
        });
    }
    out
}
