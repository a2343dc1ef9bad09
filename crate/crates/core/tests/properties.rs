//! Property tests for the invariants each module promises.

use std::sync::atomic::{AtomicU64, Ordering};

use num_rational::Ratio;
use proptest::prelude::*;

use kcluster::cluster_test::{
    connected_components, k_cluster_test, practical_params, Constants, SimilarityGraph,
};
use kcluster::dist_test::{amplification_batches, l2_closeness_test, l2_norm_test};
use kcluster::farness::{construct_s, iterative_partition, repair_to_expander, sparse_cut_search, CutMode};
use kcluster::generators::{planted_clusterable, ClusterInstance, GenSpec};
use kcluster::graph::{
    cut_size, induced_subgraph, min_conductance_bruteforce, outer_conductance, BoundedDegreeGraph,
    NeighborOracle, Vertex, VertexSet,
};
use kcluster::rng::{stream, Purpose};
use kcluster::spectral::{eigensolve, lambda2, partition_cut_total, verify_spectral_facts};
use kcluster::walk::{exact_distribution, remain_probability, SampleCounts};

/// A graph on `n` vertices with max degree `d`, built by greedily keeping the
/// candidate edges that fit.
fn graph_from(n: usize, d: usize, cand: &[(usize, usize)]) -> BoundedDegreeGraph {
    let mut deg = vec![0; n];
    let mut seen = std::collections::HashSet::new();
    let mut edges = Vec::new();
    for &(a, b) in cand {
        let (u, v) = (a % n, b % n);
        if u == v || deg[u] == d || deg[v] == d || !seen.insert((u.min(v), u.max(v))) {
            continue;
        }
        deg[u] += 1;
        deg[v] += 1;
        edges.push((u, v));
    }
    BoundedDegreeGraph::from_edges(n, d, edges).unwrap()
}

fn small_graph(max_n: usize) -> impl Strategy<Value = BoundedDegreeGraph> {
    (2..=max_n, 1usize..=4).prop_flat_map(|(n, d)| {
        proptest::collection::vec((0..n, 0..n), 0..3 * n).prop_map(move |c| graph_from(n, d, &c))
    })
}

fn graph_and_set(max_n: usize) -> impl Strategy<Value = (BoundedDegreeGraph, Vec<bool>)> {
    small_graph(max_n).prop_flat_map(|g| {
        let n = g.n();
        (Just(g), proptest::collection::vec(any::<bool>(), n))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cut_is_symmetric_and_conductances_add_up((g, mask) in graph_and_set(14)) {
        let s = VertexSet::from_mask(&mask);
        let t = s.complement();
        prop_assert_eq!(cut_size(&g, &s), cut_size(&g, &t));
        if !s.is_empty() && !t.is_empty() {
            let a = outer_conductance(&g, &s).unwrap() * Ratio::from_integer(s.len() as u64);
            let b = outer_conductance(&g, &t).unwrap() * Ratio::from_integer(t.len() as u64);
            prop_assert_eq!(a + b, Ratio::new(2 * cut_size(&g, &s), g.d() as u64));
        }
    }

    #[test]
    fn brute_force_minimum_lower_bounds_every_small_set((g, mask) in graph_and_set(12)) {
        let s = VertexSet::from_mask(&mask);
        if !s.is_empty() && 2 * s.len() <= g.n() {
            prop_assert!(min_conductance_bruteforce(&g).unwrap() <= outer_conductance(&g, &s).unwrap());
        }
    }

    #[test]
    fn induced_subgraph_never_raises_degrees((g, mask) in graph_and_set(14)) {
        let s = VertexSet::from_mask(&mask);
        if !s.is_empty() {
            let (h, ids) = induced_subgraph(&g, &s).unwrap();
            for (local, &v) in ids.iter().enumerate() {
                prop_assert!(h.degree(local) <= g.degree(v));
            }
        }
    }

    #[test]
    fn walk_distributions_conserve_mass_and_shrink(g in small_graph(14), t in 0usize..12) {
        let v = 0;
        let p = exact_distribution(&g, v, t).unwrap();
        let q = exact_distribution(&g, v, t + 1).unwrap();
        prop_assert!((p.total() - 1.0).abs() < 1e-9);
        prop_assert!(q.l2_norm_sq() <= p.l2_norm_sq() + 1e-12);
    }

    #[test]
    fn remain_probability_is_non_increasing((g, mask) in graph_and_set(12), t in 0usize..10) {
        let s = VertexSet::from_mask(&mask);
        let first = s.iter().next();
        if let Some(v) = first {
            let a = remain_probability(&g, v, &s, t).unwrap();
            let b = remain_probability(&g, v, &s, t + 1).unwrap();
            prop_assert!(b <= a + 1e-12);
        }
    }

    #[test]
    fn eigen_form_matches_walk_and_zero_multiplicity_counts_components(g in small_graph(16), t in 0usize..20) {
        let rep = eigensolve(&g).unwrap();
        prop_assert!(rep.eigen_residual <= 1e-8 && rep.orthogonality_residual <= 1e-8);
        prop_assert_eq!(rep.zero_multiplicity(), g.component_count());
        for u in 0..g.n() {
            prop_assert!(verify_spectral_facts(&g, &rep, u, t).unwrap().max() <= 1e-8);
        }
    }

    #[test]
    fn sweep_cut_meets_cheeger_bound(g in small_graph(16)) {
        if g.is_connected() {
            let (_, phi) = sparse_cut_search(&g, CutMode::Sweep).unwrap();
            let l2 = lambda2(&g);
            prop_assert!(kcluster::graph::ratio_to_f64(phi) <= (2.0 * l2).sqrt() + 1e-9);
        }
    }

    #[test]
    fn median_ignores_a_corrupted_minority(r in 4u64..40, bad in any::<prop::sample::Index>(), close in any::<bool>()) {
        let delta = 0.3;
        let m = amplification_batches(delta).unwrap();
        let point = |v: u32| SampleCounts::from_endpoints(0, 1, vec![v; r as usize]);
        // honest batches give estimate 0 (same point mass) or 2 (disjoint point masses)
        let honest_q = if close { point(0) } else { point(1) };
        let corrupt_q = if close { point(1) } else { point(0) };
        let flips = bad.index((m - 1) / 2 + 1);
        let p: Vec<SampleCounts> = (0..m).map(|_| point(0)).collect();
        let q: Vec<SampleCounts> = (0..m).map(|i| if i < flips { corrupt_q.clone() } else { honest_q.clone() }).collect();
        let v = l2_closeness_test(&p, &q, 0.1, delta).unwrap();
        prop_assert_eq!(v.accepted, close);
    }

    #[test]
    fn adding_similarity_edges_never_breaks_acceptance(
        s in 2usize..12,
        edges in proptest::collection::vec((0usize..12, 0usize..12), 0..20),
        extra in (0usize..12, 0usize..12),
        k in 1usize..6,
    ) {
        let clip = |(a, b): (usize, usize)| (a % s, b % s);
        let h = SimilarityGraph { sample_vertices: (0..s).collect(), edges: edges.iter().copied().map(clip).collect(), per_pair_verdicts: Vec::new() };
        let mut h2 = h.clone();
        h2.edges.push(clip(extra));
        let (c1, c2) = (connected_components(&h), connected_components(&h2));
        prop_assert!(c2 <= c1);
        prop_assert!(!(c1 <= k) || c2 <= k);
    }

    #[test]
    fn construct_s_pairs_are_disjoint_and_outside_a(seed in 0u64..1000, picks in proptest::collection::vec(0usize..200, 0..6)) {
        let mut rng = stream(seed, Purpose::Generator, 0, 0);
        let g = kcluster::generators::random_regular_expander(200, 3, &mut rng).unwrap();
        let a = VertexSet::new(200, picks).unwrap();
        let cs = construct_s(&g, &a, 0.5).unwrap();
        prop_assert!(cs.s_prime.is_disjoint());
        for &(u, v) in &cs.s_prime.pairs {
            prop_assert!(!a.contains(u as usize) && !a.contains(v as usize));
            if u == v {
                prop_assert!(g.degree(u as usize) + 2 <= g.d());
            }
        }
        let rep = repair_to_expander(&g, &a, 0.5, seed).unwrap();
        prop_assert!(rep.graph.max_degree() <= g.d());
        prop_assert!(rep.edits <= (g.d() + 4) * a.len());
    }
}

fn planted(seed: u64) -> ClusterInstance {
    planted_clusterable(&[120, 80], 6, 3, seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn generated_instances_check_out_and_are_reproducible(seed in 0u64..10_000) {
        let inst = planted(seed);
        inst.check().unwrap();
        let again = planted(seed);
        prop_assert_eq!(inst.graph.to_edge_list(), again.graph.to_edge_list());
        let reparsed = BoundedDegreeGraph::parse_edge_list(&inst.graph.to_edge_list(), "mem").unwrap();
        prop_assert_eq!(reparsed, inst.graph.clone());
    }

    #[test]
    fn partition_cut_totals_recount(seed in 0u64..10_000) {
        let inst = GenSpec::Dumbbell { half: 60, d: 6, cut_edges: 2 }.generate(seed).unwrap();
        let cert = iterative_partition(&inst.graph, 1, 0.3, 0.05).unwrap();
        prop_assert_eq!(cert.cut_total, partition_cut_total(&inst.graph, &cert.parts));
    }

    #[test]
    fn query_count_matches_an_instrumented_oracle(seed in 0u64..10_000) {
        let inst = planted(seed);
        let counting = Counting { g: &inst.graph, queries: AtomicU64::new(0) };
        let p = practical_params(inst.graph.n(), 6, 2, 0.3, 0.25, &Constants::calibrated()).unwrap();
        let report = k_cluster_test(&counting, &p, seed).unwrap();
        prop_assert_eq!(report.queries, counting.queries.load(Ordering::Relaxed));
        let budget = p.s as f64 * (p.batches() as f64 + 1.0) * p.r as f64 * p.ell as f64;
        prop_assert!(report.queries as f64 <= budget);
    }
}

struct Counting<'a> {
    g: &'a BoundedDegreeGraph,
    queries: AtomicU64,
}

impl NeighborOracle for Counting<'_> {
    fn vertex_count(&self) -> usize {
        self.g.n()
    }

    fn degree_bound(&self) -> usize {
        self.g.d()
    }

    fn neighbor(&self, v: Vertex, i: usize) -> Option<Vertex> {
        self.queries.fetch_add(1, Ordering::Relaxed);
        self.g.neighbor_query(v, i).unwrap()
    }
}

#[test]
fn norm_test_tie_rejects() {
    // four samples on one vertex: Z = C(4,2) = 6; threshold C(4,2) sigma / 2 = 6 at sigma = 2
    let c = SampleCounts::from_endpoints(0, 1, vec![3; 4]);
    let v = l2_norm_test(&c, 2.0).unwrap();
    assert_eq!(v.statistic, v.threshold);
    assert!(!v.accepted);
}

#[test]
fn reports_do_not_depend_on_worker_count() {
    let inst = planted(7);
    let p = practical_params(inst.graph.n(), 6, 2, 0.3, 0.25, &Constants::calibrated()).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| k_cluster_test(&inst.graph, &p, 11).unwrap())
    };
    let (a, b) = (run(1), run(4));
    assert!(a.same_outcome(&b));
}
