//! Dense spectral oracle for the normalized Laplacian `L = (D - A) / d`.
//!
//! `L = 2 (I - W)` for the lazy walk matrix `W`, so the walk has eigenvalues
//! `1 - lambda_i / 2` with the same eigenvectors. The full solve is dense and
//! capped at [`EIGEN_CAP`] vertices; [`lambda2`] falls back to Lanczos beyond
//! a small size so that generators can certify large pieces.

use nalgebra::{DMatrix, SymmetricEigen};
use num_rational::Ratio;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::ClusterInstance;
use crate::graph::{
    cut_size, induced_subgraph, min_conductance_bruteforce, outer_conductance, ratio_to_f64,
    BoundedDegreeGraph, Conductance, VertexSet, BRUTE_FORCE_CAP,
};
use crate::rng::{stream, Purpose};
use crate::walk::{exact_distribution, remain_probabilities, WalkDistribution};

pub const EIGEN_CAP: usize = 4000;

/// Largest `n` for which [`rho_k_bruteforce`] enumerates subsets.
pub const RHO_CAP: usize = 12;

/// Below this size [`lambda2`] uses the dense solver.
pub const DENSE_LAMBDA2_CAP: usize = 400;

/// Tolerance used for every asserted spectral identity.
pub const FACT_TOL: f64 = 1e-8;

pub fn laplacian_dense(g: &BoundedDegreeGraph) -> DMatrix<f64> {
    let n = g.n();
    let inv_d = 1.0 / g.d() as f64;
    let mut m = DMatrix::zeros(n, n);
    for v in 0..n {
        m[(v, v)] = g.degree(v) as f64 * inv_d;
        for &u in g.neighbors(v) {
            m[(v, u as usize)] = -inv_d;
        }
    }
    m
}

/// `y = L x` without forming `L`.
pub fn laplacian_apply(g: &BoundedDegreeGraph, x: &[f64], y: &mut [f64]) {
    let inv_d = 1.0 / g.d() as f64;
    for (v, yv) in y.iter_mut().enumerate() {
        let nb: f64 = g.neighbors(v).iter().map(|&u| x[u as usize]).sum();
        *yv = (g.degree(v) as f64 * x[v] - nb) * inv_d;
    }
}

#[derive(Clone, Debug)]
pub struct SpectralReport {
    pub eigenvalues: Vec<f64>,
    /// Column `i` is the unit eigenvector of `eigenvalues[i]`.
    pub eigenvectors: DMatrix<f64>,
    /// `max_i ||L v_i - lambda_i v_i||_2`.
    pub eigen_residual: f64,
    /// `max |V^T V - I|` entrywise.
    pub orthogonality_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    pub n: usize,
    pub eigenvalues: Vec<f64>,
    pub eigen_residual: f64,
    pub orthogonality_residual: f64,
    pub zero_multiplicity: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenvectors: Option<Vec<Vec<f64>>>,
}

impl SpectralReport {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.eigenvectors.column(i).iter().copied().collect()
    }

    /// Number of eigenvalues below `FACT_TOL`.
    pub fn zero_multiplicity(&self) -> usize {
        self.eigenvalues.iter().filter(|&&l| l < FACT_TOL).count()
    }

    pub fn summary(&self, with_vectors: bool) -> SpectralSummary {
        SpectralSummary {
            n: self.n(),
            eigenvalues: self.eigenvalues.clone(),
            eigen_residual: self.eigen_residual,
            orthogonality_residual: self.orthogonality_residual,
            zero_multiplicity: self.zero_multiplicity(),
            eigenvectors: with_vectors.then(|| (0..self.n()).map(|i| self.vector(i)).collect()),
        }
    }

    /// `||p_u^t||^2 = sum_i v_i(u)^2 (1 - lambda_i/2)^(2t)`.
    pub fn walk_norm_sq(&self, u: usize, t: usize) -> f64 {
        self.eigenvalues
            .iter()
            .enumerate()
            .map(|(i, &l)| self.eigenvectors[(u, i)].powi(2) * (1.0 - l / 2.0).powi(2 * t as i32))
            .sum()
    }

    /// `p_u^t = sum_i v_i(u) (1 - lambda_i/2)^t v_i`.
    pub fn walk_distribution(&self, u: usize, t: usize) -> Vec<f64> {
        let n = self.n();
        let mut out = vec![0.0; n];
        for (i, &l) in self.eigenvalues.iter().enumerate() {
            let c = self.eigenvectors[(u, i)] * (1.0 - l / 2.0).powi(t as i32);
            for (w, o) in out.iter_mut().enumerate() {
                *o += c * self.eigenvectors[(w, i)];
            }
        }
        out
    }
}

/// Full spectrum of `L`, eigenvalues ascending.
pub fn eigensolve(g: &BoundedDegreeGraph) -> Result<SpectralReport> {
    let n = g.n();
    if n > EIGEN_CAP {
        return Err(Error::Capacity {
            what: "dense eigensolve",
            limit: EIGEN_CAP,
            got: n,
            hint: "use lambda2 (Lanczos) or the sweep-cut bounds",
        });
    }
    // L is block diagonal over components, so each block is solved on its own
    // and its eigenvectors are zero-padded.
    let (labels, count) = g.components();
    let mut pairs: Vec<(f64, Vec<(usize, f64)>)> = Vec::with_capacity(n);
    // blocks have disjoint supports, so only within-block Gram entries can be off
    let mut orthogonality_residual = 0.0f64;
    for c in 0..count {
        let block = VertexSet::from_mask(&labels.iter().map(|&l| l == c).collect::<Vec<_>>());
        let (sub, ids) = induced_subgraph(g, &block)?;
        let l = laplacian_dense(&sub);
        let eig = faer::Mat::from_fn(sub.n(), sub.n(), |i, j| l[(i, j)])
            .self_adjoint_eigen(faer::Side::Lower)
            .map_err(|e| Error::Construction(format!("eigensolve did not converge: {e:?}")))?;
        let (vals, vecs) = (eig.S().column_vector(), eig.U());
        let gram = vecs.transpose() * vecs;
        for i in 0..sub.n() {
            for j in 0..sub.n() {
                let target = if i == j { 1.0 } else { 0.0 };
                orthogonality_residual = orthogonality_residual.max((gram[(i, j)] - target).abs());
            }
        }
        for j in 0..sub.n() {
            let col = vecs.col(j);
            pairs.push((vals[j], ids.iter().zip(col.iter()).map(|(&v, &x)| (v, x)).collect()));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let eigenvalues: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (j, (_, col)) in pairs.iter().enumerate() {
        for &(v, x) in col {
            vecs[(v, j)] = x;
        }
    }

    let mut eigen_residual = 0.0f64;
    let mut lx = vec![0.0; n];
    for (j, &l) in eigenvalues.iter().enumerate() {
        let x: Vec<f64> = vecs.column(j).iter().copied().collect();
        laplacian_apply(g, &x, &mut lx);
        let r: f64 = lx.iter().zip(&x).map(|(a, b)| (a - l * b).powi(2)).sum();
        eigen_residual = eigen_residual.max(r.sqrt());
    }
    Ok(SpectralReport {
        eigenvalues,
        eigenvectors: vecs,
        eigen_residual,
        orthogonality_residual,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ritz {
    pub value: f64,
    pub vector: Vec<f64>,
    /// `||L x - value x||_2`; some eigenvalue lies within this of `value`.
    pub residual: f64,
    pub iterations: usize,
}

fn remove_mean(x: &mut [f64]) {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter_mut().for_each(|v| *v -= mean);
}

fn normalize(x: &mut [f64]) -> f64 {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        x.iter_mut().for_each(|v| *v /= norm);
    }
    norm
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Smallest Ritz pair of `L` on the complement of the constant vector, by
/// Lanczos with full reorthogonalization.
pub fn lanczos_fiedler(g: &BoundedDegreeGraph, max_iter: usize, seed: u64) -> Ritz {
    let n = g.n();
    assert!(n >= 2, "Lanczos needs at least two vertices");
    let steps = max_iter.clamp(1, n - 1);
    let mut rng = stream(seed, Purpose::Audit, 0, 0);
    let mut q: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
    remove_mean(&mut q);
    normalize(&mut q);
    let mut basis: Vec<Vec<f64>> = vec![q];
    let mut alpha = Vec::with_capacity(steps);
    let mut beta: Vec<f64> = Vec::with_capacity(steps);
    let mut w = vec![0.0; n];
    for j in 0..steps {
        laplacian_apply(g, &basis[j], &mut w);
        let a = dot(&basis[j], &w);
        alpha.push(a);
        for _ in 0..2 {
            remove_mean(&mut w);
            for b in &basis {
                let c = dot(b, &w);
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        if j + 1 == steps {
            break;
        }
        let b = normalize(&mut w);
        if b < 1e-12 {
            break;
        }
        beta.push(b);
        basis.push(w.clone());
    }
    let m = alpha.len();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let (imin, &value) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty tridiagonal");
    let mut vector = vec![0.0; n];
    for (j, b) in basis.iter().take(m).enumerate() {
        let c = eig.eigenvectors[(j, imin)];
        vector.iter_mut().zip(b).for_each(|(x, y)| *x += c * y);
    }
    normalize(&mut vector);
    let mut lx = vec![0.0; n];
    laplacian_apply(g, &vector, &mut lx);
    let residual = lx
        .iter()
        .zip(&vector)
        .map(|(a, b)| (a - value * b).powi(2))
        .sum::<f64>()
        .sqrt();
    Ritz {
        value,
        vector,
        residual,
        iterations: m,
    }
}

/// Second smallest eigenvalue of `L`: 0 when disconnected, exact below
/// [`DENSE_LAMBDA2_CAP`] vertices, Lanczos estimate above.
pub fn lambda2(g: &BoundedDegreeGraph) -> f64 {
    let n = g.n();
    if n < 2 || !g.is_connected() {
        return 0.0;
    }
    if n <= DENSE_LAMBDA2_CAP {
        let eig = SymmetricEigen::new(laplacian_dense(g));
        let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        return ev[1].max(0.0);
    }
    lanczos_fiedler(g, 120, 0x5eed).value.max(0.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactResiduals {
    pub vertex: usize,
    pub t: usize,
    /// `max_w |sum_i v_i(u) v_i(w) - [w = u]|`.
    pub indicator: f64,
    /// `|sum_i v_i(u)^2 - 1|`.
    pub row_norm: f64,
    /// Max-entry gap between the eigendecomposed walk and the matrix-power walk.
    pub walk: f64,
    /// Gap between the two exact forms of `||p_u^t||^2`.
    pub norm: f64,
}

impl FactResiduals {
    pub fn max(&self) -> f64 {
        self.indicator.max(self.row_norm).max(self.walk).max(self.norm)
    }

    pub fn holds(&self) -> bool {
        self.max() <= FACT_TOL
    }
}

pub fn verify_spectral_facts(
    g: &BoundedDegreeGraph,
    report: &SpectralReport,
    u: usize,
    t: usize,
) -> Result<FactResiduals> {
    let n = g.n();
    if report.n() != n || u >= n {
        return Err(Error::invalid(format!(
            "vertex {u} or report size {} does not match n = {n}",
            report.n()
        )));
    }
    let indicator_form = report.walk_distribution(u, 0);
    let indicator = indicator_form
        .iter()
        .enumerate()
        .map(|(w, &x)| (x - if w == u { 1.0 } else { 0.0 }).abs())
        .fold(0.0, f64::max);
    let row_norm = (report.eigenvectors.row(u).iter().map(|x| x * x).sum::<f64>() - 1.0).abs();
    let spectral = report.walk_distribution(u, t);
    let exact = exact_distribution(g, u, t)?;
    let walk = spectral
        .iter()
        .zip(&exact.probs)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let norm = (report.walk_norm_sq(u, t) - exact.l2_norm_sq()).abs();
    Ok(FactResiduals {
        vertex: u,
        t,
        indicator,
        row_norm,
        walk,
        norm,
    })
}

/// Best threshold cut along `x`, reported as its smaller side.
///
/// Ties in `x` are broken by vertex id.
pub fn sweep_cut(g: &BoundedDegreeGraph, x: &[f64]) -> Result<(VertexSet, Conductance)> {
    let n = g.n();
    if n < 2 {
        return Err(Error::invalid("sweep needs at least two vertices"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
    let mut inside = vec![false; n];
    let mut cut: i64 = 0;
    let mut best: Option<(usize, Conductance)> = None;
    for (i, &v) in order.iter().enumerate().take(n - 1) {
        for &u in g.neighbors(v) {
            cut += if inside[u as usize] { -1 } else { 1 };
        }
        inside[v] = true;
        let size = (i + 1).min(n - i - 1) as u64;
        let phi = Ratio::new(cut as u64, g.d() as u64 * size);
        if best.as_ref().map_or(true, |(_, b)| phi < *b) {
            best = Some((i + 1, phi));
        }
    }
    let (len, phi) = best.expect("n >= 2");
    let prefix = VertexSet::new(n, order[..len].iter().copied())?;
    let side = if 2 * len <= n { prefix } else { prefix.complement() };
    Ok((side, phi))
}

/// Sweep on the Fiedler vector; a disconnected graph returns its smallest component.
pub fn fiedler_sweep(g: &BoundedDegreeGraph) -> Result<SweepResult> {
    let n = g.n();
    if n < 2 {
        return Err(Error::invalid("sweep needs at least two vertices"));
    }
    let (labels, count) = g.components();
    if count > 1 {
        let mut sizes = vec![0usize; count];
        labels.iter().for_each(|&l| sizes[l] += 1);
        let smallest = (0..count).min_by_key(|&c| (sizes[c], c)).unwrap();
        let set = VertexSet::new(n, (0..n).filter(|&v| labels[v] == smallest))?;
        return Ok(SweepResult {
            set,
            phi: Ratio::from_integer(0),
            rayleigh: 0.0,
        });
    }
    let (vector, rayleigh) = if n <= DENSE_LAMBDA2_CAP {
        let rep = eigensolve(g)?;
        (rep.vector(1), rep.eigenvalues[1].max(0.0))
    } else {
        let r = lanczos_fiedler(g, 150, 0x5eed);
        (r.vector, r.value.max(0.0))
    };
    let (set, phi) = sweep_cut(g, &vector)?;
    Ok(SweepResult { set, phi, rayleigh })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub set: VertexSet,
    pub phi: Conductance,
    /// Rayleigh quotient of the swept vector; `phi <= sqrt(2 * rayleigh)`.
    pub rayleigh: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheegerCheck {
    pub lambda2: Option<f64>,
    pub phi: Conductance,
    pub phi_value: f64,
    /// `phi` is the exact minimum rather than a sweep upper bound.
    pub exact: bool,
    pub lower_holds: bool,
    pub upper_holds: bool,
    pub holds: bool,
}

/// Cheeger sandwich `lambda2/2 <= phi <= sqrt(2 lambda2)`; exact `phi` up to
/// [`BRUTE_FORCE_CAP`] vertices, otherwise only `lambda2/2 <= phi_sweep`.
pub fn cheeger_check(g: &BoundedDegreeGraph) -> Result<CheegerCheck> {
    const TOL: f64 = 1e-9;
    let n = g.n();
    if n == 1 {
        let phi = min_conductance_bruteforce(g)?;
        return Ok(CheegerCheck {
            lambda2: None,
            phi,
            phi_value: ratio_to_f64(phi),
            exact: true,
            lower_holds: true,
            upper_holds: true,
            holds: true,
        });
    }
    if n <= BRUTE_FORCE_CAP {
        let l2 = eigensolve(g)?.eigenvalues[1].max(0.0);
        let phi = min_conductance_bruteforce(g)?;
        let pv = ratio_to_f64(phi);
        let lower_holds = l2 / 2.0 <= pv + TOL;
        let upper_holds = pv <= (2.0 * l2).sqrt() + TOL;
        return Ok(CheegerCheck {
            lambda2: Some(l2),
            phi,
            phi_value: pv,
            exact: true,
            lower_holds,
            upper_holds,
            holds: lower_holds && upper_holds,
        });
    }
    let sweep = fiedler_sweep(g)?;
    let l2 = if n <= DENSE_LAMBDA2_CAP { sweep.rayleigh } else { lambda2(g) };
    let pv = ratio_to_f64(sweep.phi);
    let lower_holds = l2 / 2.0 <= pv + TOL;
    let upper_holds = pv <= (2.0 * sweep.rayleigh).sqrt() + TOL;
    Ok(CheegerCheck {
        lambda2: Some(l2),
        phi: sweep.phi,
        phi_value: pv,
        exact: false,
        lower_holds,
        upper_holds,
        holds: lower_holds,
    })
}

/// Exact `rho_G(k)`: the least possible largest conductance over `k` disjoint
/// non-empty vertex sets.
pub fn rho_k_bruteforce(g: &BoundedDegreeGraph, k: usize) -> Result<Conductance> {
    let n = g.n();
    if n > RHO_CAP {
        return Err(Error::Capacity {
            what: "rho_k enumeration",
            limit: RHO_CAP,
            got: n,
            hint: "use the eigenvalue bound lambda_k / 2",
        });
    }
    if k == 0 || k > n {
        return Err(Error::invalid(format!("k must lie in [1, {n}], got {k}")));
    }
    let full = (1usize << n) - 1;
    let nbr_mask: Vec<usize> = (0..n)
        .map(|v| g.neighbors(v).iter().fold(0usize, |m, &u| m | 1 << u))
        .collect();
    let d = g.d() as u64;
    let mut phi: Vec<Option<Conductance>> = vec![None; full + 1];
    for s in 1..=full {
        let mut cut = 0u64;
        let mut rest = s;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            cut += (nbr_mask[v] & !s).count_ones() as u64;
        }
        phi[s] = Some(Ratio::new(cut, d * s.count_ones() as u64));
    }
    // best[mask] = rho over `level` disjoint subsets of `mask`
    let mut best: Vec<Option<Conductance>> = vec![None; full + 1];
    for mask in 1..=full {
        let mut sub = mask;
        let mut b: Option<Conductance> = None;
        while sub != 0 {
            let p = phi[sub];
            if b.map_or(true, |x| p.unwrap() < x) {
                b = p;
            }
            sub = (sub - 1) & mask;
        }
        best[mask] = b;
    }
    for _ in 1..k {
        let mut next: Vec<Option<Conductance>> = vec![None; full + 1];
        for mask in 1..=full {
            let mut sub = mask;
            let mut b: Option<Conductance> = None;
            while sub != 0 {
                if let Some(rest) = best[mask & !sub] {
                    let cand = phi[sub].unwrap().max(rest);
                    if b.map_or(true, |x| cand < x) {
                        b = Some(cand);
                    }
                }
                sub = (sub - 1) & mask;
            }
            next[mask] = b;
        }
        best = next;
    }
    Ok(best[full].expect("k <= n guarantees a family"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigengapReport {
    pub h: usize,
    pub max_phi_out: f64,
    /// `lambda_1 .. lambda_{h+1}` (fewer if `n <= h`).
    pub leading: Vec<f64>,
    /// `lambda_i <= 2 max phi_out` for every `i <= h`.
    pub holds: bool,
    pub lambda_next: Option<f64>,
    /// `lambda_{h+1} / max(lambda_h, 1e-12)`; reported only.
    pub gap_ratio: Option<f64>,
}

pub fn eigengap_report(inst: &ClusterInstance, report: &SpectralReport) -> EigengapReport {
    let h = inst.parts.len();
    let max_phi_out = inst
        .parts
        .iter()
        .map(|p| ratio_to_f64(outer_conductance(&inst.graph, p).expect("parts are non-empty")))
        .fold(0.0, f64::max);
    let leading: Vec<f64> = report.eigenvalues.iter().take(h + 1).copied().collect();
    let holds = leading.iter().take(h).all(|&l| l <= 2.0 * max_phi_out + FACT_TOL);
    let lambda_next = report.eigenvalues.get(h).copied();
    let gap_ratio = lambda_next.map(|l| l / report.eigenvalues[h - 1].max(1e-12));
    EigengapReport {
        h,
        max_phi_out,
        leading,
        holds,
        lambda_next,
        gap_ratio,
    }
}

/// `(1/|C|) sum_{u,v in C} (x_u - x_v)^2 = 2 sum_{u in C} (x_u - mean_C)^2`.
pub fn spread(x: &[f64], c: &VertexSet) -> f64 {
    let m = c.len() as f64;
    let mean = c.iter().map(|v| x[v]).sum::<f64>() / m;
    2.0 * c.iter().map(|v| (x[v] - mean).powi(2)).sum::<f64>()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpreadCheck {
    pub part: usize,
    pub i: usize,
    pub spread: f64,
    pub phi_out: f64,
    /// `lambda2(G[C]) / 2`, a certified lower bound on the inner conductance.
    pub phi_in_lower: f64,
    /// `8 d^4 phi_out / phi_in_lower^2`.
    pub bound: f64,
    pub holds: bool,
}

/// Spread of eigenvector `i` (0-based) over planted part `part`.
pub fn eigenvector_spread(
    inst: &ClusterInstance,
    report: &SpectralReport,
    part: usize,
    i: usize,
) -> Result<SpreadCheck> {
    let c = inst
        .parts
        .get(part)
        .ok_or_else(|| Error::invalid(format!("no part {part}")))?;
    if i >= report.n() {
        return Err(Error::invalid(format!("no eigenvector {i}")));
    }
    let x = report.vector(i);
    let value = spread(&x, c);
    let phi_out = ratio_to_f64(outer_conductance(&inst.graph, c)?);
    let (sub, _) = induced_subgraph(&inst.graph, c)?;
    let phi_in_lower = lambda2(&sub) / 2.0;
    let d = inst.graph.d() as f64;
    let bound = if phi_in_lower > 0.0 {
        8.0 * d.powi(4) * phi_out / (phi_in_lower * phi_in_lower)
    } else {
        f64::INFINITY
    };
    Ok(SpreadCheck {
        part,
        i,
        spread: value,
        phi_out,
        phi_in_lower,
        bound,
        holds: value <= bound + FACT_TOL,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialCheck {
    pub potential: f64,
    pub phi_out: f64,
    /// `phi_out / (24 d^3)`.
    pub floor: f64,
    pub holds: bool,
}

/// Largest per-part spread of the Fiedler vector against `phi_out / (24 d^3)`,
/// with `phi_out` the largest planted outer conductance.
pub fn fiedler_potential(inst: &ClusterInstance, report: &SpectralReport) -> Result<PotentialCheck> {
    if report.n() < 2 {
        return Err(Error::invalid("potential needs at least two vertices"));
    }
    let x = report.vector(1);
    let potential = inst.parts.iter().map(|c| spread(&x, c)).fold(0.0, f64::max);
    let phi_out = inst.design.max_phi_out();
    let floor = phi_out / (24.0 * (inst.graph.d() as f64).powi(3));
    Ok(PotentialCheck {
        potential,
        phi_out,
        floor,
        holds: potential >= floor,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditOptions {
    /// Set size parameter `alpha`, normally `1 / (24 s)`.
    pub alpha: f64,
    pub k: usize,
    /// Parts larger than this are audited on a random subset of this many vertices.
    pub max_vertices_per_part: usize,
    /// Remain probability that marks a vertex as high-remain.
    pub remain_floor: f64,
    pub seed: u64,
}

impl AuditOptions {
    pub fn new(k: usize, s: usize, seed: u64) -> Self {
        Self {
            alpha: 1.0 / (24.0 * s as f64),
            k,
            max_vertices_per_part: 200,
            remain_floor: 0.75,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartAudit {
    pub part: usize,
    pub size: usize,
    pub audited: usize,
    pub pairs: usize,
    /// Audited pairs at distance `<= 1/(4n)`.
    pub close_pairs: usize,
    pub max_distance: f64,
    /// Audited vertices all of whose audited distances are `<= 1/(4n)`.
    pub core_fraction: f64,
    /// Audited vertices with `||p_u^t||^2 <= 2k/(alpha n)`.
    pub norm_ok_fraction: f64,
    pub high_remain_fraction: f64,
    pub phi_out: f64,
    /// `t <= alpha / (2 phi_out)`.
    pub in_window: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceAudit {
    pub t: usize,
    pub n: usize,
    pub within_threshold: f64,
    pub norm_threshold: f64,
    pub cross_threshold: f64,
    pub parts: Vec<PartAudit>,
    pub within_pairs: usize,
    pub within_close: usize,
    pub cross_pairs: usize,
    pub cross_far: usize,
    pub min_cross_distance: Option<f64>,
    pub norm_vertices: usize,
    pub norm_ok: usize,
}

impl DistanceAudit {
    pub fn within_fraction(&self) -> f64 {
        frac(self.within_close, self.within_pairs)
    }

    pub fn cross_fraction(&self) -> f64 {
        frac(self.cross_far, self.cross_pairs)
    }

    pub fn norm_fraction(&self) -> f64 {
        frac(self.norm_ok, self.norm_vertices)
    }
}

fn frac(a: usize, b: usize) -> f64 {
    if b == 0 {
        1.0
    } else {
        a as f64 / b as f64
    }
}

/// Exact pairwise walk distances within and across planted parts.
///
/// Cross pairs are restricted to endpoints whose probability of staying in
/// their own part for all `t` steps is at least `remain_floor >= 3/4`; for such
/// pairs `||p_u - p_v||^2 >= 1/n` is guaranteed.
pub fn within_cluster_distance_audit(
    inst: &ClusterInstance,
    t: usize,
    opts: &AuditOptions,
) -> Result<DistanceAudit> {
    let g = &inst.graph;
    let n = g.n();
    let within_threshold = 1.0 / (4.0 * n as f64);
    let norm_threshold = 2.0 * opts.k as f64 / (opts.alpha * n as f64);
    let cross_threshold = 1.0 / n as f64;
    let mut rng = stream(opts.seed, Purpose::Audit, 1, 0);

    let mut audited: Vec<Vec<(usize, WalkDistribution)>> = Vec::with_capacity(inst.parts.len());
    let mut high: Vec<Vec<bool>> = Vec::with_capacity(inst.parts.len());
    let mut parts = Vec::with_capacity(inst.parts.len());
    let mut totals = (0usize, 0usize, 0usize, 0usize);
    for (pi, c) in inst.parts.iter().enumerate() {
        let mut members: Vec<usize> = c.iter().collect();
        if members.len() > opts.max_vertices_per_part {
            rand::seq::SliceRandom::partial_shuffle(&mut members[..], &mut rng, opts.max_vertices_per_part);
            members.truncate(opts.max_vertices_per_part);
            members.sort_unstable();
        }
        let dists = members
            .iter()
            .map(|&u| exact_distribution(g, u, t).map(|p| (u, p)))
            .collect::<Result<Vec<_>>>()?;
        let m = dists.len();
        let mut close_all = vec![true; m];
        let (mut pairs, mut close, mut max_distance) = (0usize, 0usize, 0.0f64);
        for a in 0..m {
            for b in a + 1..m {
                let dist = dists[a].1.l2_distance_sq(&dists[b].1);
                pairs += 1;
                max_distance = max_distance.max(dist);
                if dist <= within_threshold {
                    close += 1;
                } else {
                    close_all[a] = false;
                    close_all[b] = false;
                }
            }
        }
        let norm_ok = dists
            .iter()
            .filter(|(_, p)| p.l2_norm_sq() <= norm_threshold)
            .count();
        let remain = remain_probabilities(g, c, t)?;
        let hi: Vec<bool> = dists.iter().map(|(u, _)| remain[*u] >= opts.remain_floor).collect();
        let phi_out = ratio_to_f64(outer_conductance(g, c)?);
        totals.0 += pairs;
        totals.1 += close;
        totals.2 += m;
        totals.3 += norm_ok;
        parts.push(PartAudit {
            part: pi,
            size: c.len(),
            audited: m,
            pairs,
            close_pairs: close,
            max_distance,
            core_fraction: frac(close_all.iter().filter(|&&x| x).count(), m),
            norm_ok_fraction: frac(norm_ok, m),
            high_remain_fraction: frac(hi.iter().filter(|&&x| x).count(), m),
            phi_out,
            in_window: phi_out == 0.0 || t as f64 <= opts.alpha / (2.0 * phi_out),
        });
        audited.push(dists);
        high.push(hi);
    }
    let (mut cross_pairs, mut cross_far) = (0usize, 0usize);
    let mut min_cross: Option<f64> = None;
    for a in 0..audited.len() {
        for b in a + 1..audited.len() {
            for (x, (_, pu)) in audited[a].iter().enumerate() {
                if !high[a][x] {
                    continue;
                }
                for (y, (_, pv)) in audited[b].iter().enumerate() {
                    if !high[b][y] {
                        continue;
                    }
                    let dist = pu.l2_distance_sq(pv);
                    cross_pairs += 1;
                    if dist >= cross_threshold {
                        cross_far += 1;
                    }
                    min_cross = Some(min_cross.map_or(dist, |m: f64| m.min(dist)));
                }
            }
        }
    }
    Ok(DistanceAudit {
        t,
        n,
        within_threshold,
        norm_threshold,
        cross_threshold,
        parts,
        within_pairs: totals.0,
        within_close: totals.1,
        cross_pairs,
        cross_far,
        min_cross_distance: min_cross,
        norm_vertices: totals.2,
        norm_ok: totals.3,
    })
}

/// Cut edges between the parts of a partition, counted once each.
pub fn partition_cut_total(g: &BoundedDegreeGraph, parts: &[VertexSet]) -> u64 {
    parts.iter().map(|p| cut_size(g, p)).sum::<u64>() / 2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{dumbbell, far_instance_disjoint, low_conductance_family, FamilyKind};

    fn k4() -> BoundedDegreeGraph {
        BoundedDegreeGraph::from_edges(4, 3, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap()
    }

    fn cycle(n: usize) -> BoundedDegreeGraph {
        low_conductance_family(FamilyKind::Cycle, n).unwrap()
    }

    #[test]
    fn k4_spectrum() {
        let r = eigensolve(&k4()).unwrap();
        let want = [0.0, 4.0 / 3.0, 4.0 / 3.0, 4.0 / 3.0];
        for (a, b) in r.eigenvalues.iter().zip(want) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(r.eigen_residual < 1e-10 && r.orthogonality_residual < 1e-10);
        let v0 = r.vector(0);
        assert!(v0.iter().all(|x| (x.abs() - 0.5).abs() < 1e-10));
    }

    #[test]
    fn zero_multiplicity_counts_components() {
        let g = BoundedDegreeGraph::from_edges(7, 2, [(0, 1), (2, 3), (3, 4)]).unwrap();
        assert_eq!(eigensolve(&g).unwrap().zero_multiplicity(), g.component_count());
    }

    #[test]
    fn facts_on_small_graphs() {
        let g = cycle(9);
        let r = eigensolve(&g).unwrap();
        for t in [0, 1, 7, 30] {
            let f = verify_spectral_facts(&g, &r, 4, t).unwrap();
            assert!(f.holds(), "{f:?}");
        }
    }

    #[test]
    fn lanczos_matches_dense() {
        let g = cycle(60);
        let dense = eigensolve(&g).unwrap().eigenvalues[1];
        let r = lanczos_fiedler(&g, 59, 1);
        assert!((r.value - dense).abs() < 1e-8, "{} vs {dense}", r.value);
        assert!(r.residual < 1e-6);
    }

    #[test]
    fn cheeger_examples() {
        let c = cheeger_check(&k4()).unwrap();
        assert_eq!(c.phi, Ratio::new(2, 3));
        assert!((c.lambda2.unwrap() / 2.0 - 2.0 / 3.0).abs() < 1e-12);
        assert!(c.holds);
        let c = cheeger_check(&cycle(8)).unwrap();
        assert_eq!(c.phi, Ratio::new(1, 4));
        assert!(c.holds);
        let single = cheeger_check(&BoundedDegreeGraph::singleton(3).unwrap()).unwrap();
        assert!(single.holds && single.lambda2.is_none());
        assert_eq!(single.phi, Ratio::new(1, 3));
    }

    #[test]
    fn rho_examples() {
        let two_k4 = BoundedDegreeGraph::from_edges(
            8,
            3,
            [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3), (4, 5), (4, 6), (4, 7), (5, 6), (5, 7), (6, 7)],
        )
        .unwrap();
        assert_eq!(rho_k_bruteforce(&two_k4, 2).unwrap(), Ratio::from_integer(0));
        let g = cycle(10);
        assert_eq!(rho_k_bruteforce(&g, 2).unwrap(), min_conductance_bruteforce(&g).unwrap());
        assert_eq!(rho_k_bruteforce(&k4(), 4).unwrap(), Ratio::from_integer(1));
        assert!(rho_k_bruteforce(&cycle(13), 2).is_err());
    }

    #[test]
    fn sweep_finds_dumbbell_side() {
        let inst = dumbbell(30, 4, 1, 3).unwrap();
        let s = fiedler_sweep(&inst.graph).unwrap();
        assert_eq!(s.phi, Ratio::new(1, 4 * 30));
        assert!(ratio_to_f64(s.phi) <= (2.0 * s.rayleigh).sqrt());
    }

    #[test]
    fn gap_spread_and_potential_on_dumbbell() {
        let inst = dumbbell(40, 5, 2, 8).unwrap();
        let rep = eigensolve(&inst.graph).unwrap();
        let gap = eigengap_report(&inst, &rep);
        assert!(gap.holds);
        for part in 0..2 {
            for i in 0..2 {
                assert!(eigenvector_spread(&inst, &rep, part, i).unwrap().holds);
            }
        }
        assert!(fiedler_potential(&inst, &rep).unwrap().holds);
    }

    #[test]
    fn audit_on_disjoint_expanders() {
        let inst = far_instance_disjoint(2, 60, 6, 4).unwrap();
        let a = within_cluster_distance_audit(&inst, 60, &AuditOptions::new(2, 10, 1)).unwrap();
        assert_eq!(a.within_fraction(), 1.0);
        assert_eq!(a.cross_fraction(), 1.0);
        assert_eq!(a.cross_pairs, 60 * 60);
        let a0 = within_cluster_distance_audit(&inst, 0, &AuditOptions::new(2, 10, 1)).unwrap();
        assert_eq!(a0.within_close, 0);
        assert_eq!(a0.min_cross_distance, Some(2.0));
    }
}
