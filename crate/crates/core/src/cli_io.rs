//! Configuration, persistence and the experiment harness behind the `kcluster` binary.
//!
//! Settings come from three layers, highest first: command-line flags, a TOML
//! config file, built-in defaults. Every trial record embeds the resolved
//! [`RunConfig`], so [`replay`] can rerun it bit-exactly.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cluster_test::{
    k_cluster_test, oracle_cluster_test, par_map, theory_params, Constants, Mode, RunReport, TestParams,
    Verdict, TOOL_VERSION,
};
use crate::error::{Error, Result};
use crate::generators::{sidecar_path, standard_corpus, ClusterInstance, CorpusEntry, GenSpec};
use crate::graph::BoundedDegreeGraph;
use crate::rng::trial_seed;
use crate::spectral::{
    cheeger_check, eigengap_report, eigensolve, rho_k_bruteforce, verify_spectral_facts, SpectralSummary,
    EIGEN_CAP, FACT_TOL, RHO_CAP,
};

pub const RECORD_SCHEMA_VERSION: u32 = 1;
pub const CORPUS_MANIFEST: &str = "corpus.json";
pub const DEFAULT_K: usize = 2;
pub const DEFAULT_EPSILON: f64 = 0.3;
pub const DEFAULT_PHI: f64 = 0.25;
pub const DEFAULT_TRIALS: usize = 1;

/// Partial constants; unset fields fall back to the mode's base constants.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsOverride {
    pub c_s: Option<f64>,
    pub c_ell: Option<f64>,
    pub c_r: Option<f64>,
    pub c_sigma: Option<f64>,
    pub closeness_c: Option<f64>,
}

impl ConstantsOverride {
    pub fn apply(&self, base: Constants) -> Constants {
        Constants {
            c_s: self.c_s.unwrap_or(base.c_s),
            c_ell: self.c_ell.unwrap_or(base.c_ell),
            c_r: self.c_r.unwrap_or(base.c_r),
            c_sigma: self.c_sigma.unwrap_or(base.c_sigma),
            closeness_c: self.closeness_c.unwrap_or(base.closeness_c),
        }
    }
}

/// Grid swept by [`calibrate`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationGrid {
    pub c_s: Vec<f64>,
    pub c_ell: Vec<f64>,
    pub c_r: Vec<f64>,
    pub c_sigma: Vec<f64>,
    /// Minimum per-instance rate of correct verdicts.
    pub target: f64,
}

impl Default for CalibrationGrid {
    fn default() -> Self {
        Self {
            c_s: vec![1.5, 2.0],
            c_ell: vec![0.25, 0.5],
            c_r: vec![0.25, 0.5, 1.0],
            c_sigma: vec![8.0],
            target: 0.9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub ns: Vec<usize>,
    pub d: usize,
    pub cross_edges: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            ns: vec![1_000, 10_000, 100_000],
            d: 8,
            cross_edges: 2,
        }
    }
}

/// The config file: every key optional, unknown keys rejected.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub mode: Option<Mode>,
    pub oracle: Option<bool>,
    pub out: Option<PathBuf>,
    pub k: Option<usize>,
    pub epsilon: Option<f64>,
    pub phi: Option<f64>,
    /// Tolerance for the spectral identities checked by `verify`.
    pub fact_tol: Option<f64>,
    pub constants: Option<ConstantsOverride>,
    #[serde(rename = "gen")]
    pub generator: Option<GenSpec>,
    pub calibrate: Option<CalibrationGrid>,
    pub bench: Option<BenchConfig>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl ConfigFile {
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            path: source.to_string(),
            line: e.span().map_or(0, |s| line_of(text, s.start)),
            message: e.message().to_string(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&fs::read_to_string(path)?, &path.display().to_string())
    }

    /// Layers `flags` over `self`: any key set in `flags` wins.
    pub fn overlay(self, flags: ConfigFile) -> ConfigFile {
        let constants = match (self.constants, flags.constants) {
            (Some(a), Some(b)) => Some(ConstantsOverride {
                c_s: b.c_s.or(a.c_s),
                c_ell: b.c_ell.or(a.c_ell),
                c_r: b.c_r.or(a.c_r),
                c_sigma: b.c_sigma.or(a.c_sigma),
                closeness_c: b.closeness_c.or(a.closeness_c),
            }),
            (a, b) => b.or(a),
        };
        ConfigFile {
            seed: flags.seed.or(self.seed),
            trials: flags.trials.or(self.trials),
            mode: flags.mode.or(self.mode),
            oracle: flags.oracle.or(self.oracle),
            out: flags.out.or(self.out),
            k: flags.k.or(self.k),
            epsilon: flags.epsilon.or(self.epsilon),
            phi: flags.phi.or(self.phi),
            fact_tol: flags.fact_tol.or(self.fact_tol),
            constants,
            generator: flags.generator.or(self.generator),
            calibrate: flags.calibrate.or(self.calibrate),
            bench: flags.bench.or(self.bench),
        }
    }

    /// Loads `file` (if any) and puts `flags` on top.
    pub fn resolve(file: Option<&Path>, flags: ConfigFile) -> Result<ConfigFile> {
        let base = match file {
            Some(p) => Self::load(p)?,
            None => ConfigFile::default(),
        };
        Ok(base.overlay(flags))
    }

    /// The seed is mandatory: runs never draw implicit entropy.
    pub fn seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::invalid("a seed is required (--seed or `seed` in the config file)"))
    }

    pub fn mode(&self) -> Mode {
        self.mode.unwrap_or(Mode::Practical)
    }

    pub fn constants(&self) -> Constants {
        let base = match self.mode() {
            Mode::Theory => Constants::theory(),
            Mode::Practical => Constants::calibrated(),
        };
        self.constants.clone().unwrap_or_default().apply(base)
    }

    pub fn run_config(&self, instance: &str, g: &BoundedDegreeGraph) -> Result<RunConfig> {
        Ok(RunConfig {
            seed: self.seed()?,
            trials: self.trials.unwrap_or(DEFAULT_TRIALS),
            mode: self.mode(),
            oracle: self.oracle.unwrap_or(false),
            k: self.k.unwrap_or(DEFAULT_K),
            epsilon: self.epsilon.unwrap_or(DEFAULT_EPSILON),
            phi: self.phi.unwrap_or(DEFAULT_PHI),
            constants: self.constants(),
            instance: instance.to_string(),
            graph_digest: graph_digest(g),
        })
    }
}

/// Fully resolved settings of a `test` run, embedded in every trial record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub trials: usize,
    pub mode: Mode,
    pub oracle: bool,
    pub k: usize,
    pub epsilon: f64,
    pub phi: f64,
    pub constants: Constants,
    pub instance: String,
    /// FNV-1a of the canonical edge list.
    pub graph_digest: String,
}

impl RunConfig {
    pub fn params(&self, g: &BoundedDegreeGraph) -> Result<TestParams> {
        TestParams::for_mode(self.mode, g.n(), g.d(), self.k, self.epsilon, self.phi, &self.constants)
    }
}

pub fn graph_digest(g: &BoundedDegreeGraph) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |x: u64| {
        for b in x.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    };
    eat(g.n() as u64);
    eat(g.d() as u64);
    for (u, v) in g.edges() {
        eat(u as u64);
        eat(v as u64);
    }
    format!("{h:016x}")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename = "trial")]
pub struct TrialRecord {
    pub schema_version: u32,
    pub tool_version: String,
    pub trial: usize,
    pub trial_seed: u64,
    pub config: RunConfig,
    pub report: RunReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename = "summary")]
pub struct TrialSummary {
    pub schema_version: u32,
    pub trials: usize,
    pub accepts: usize,
    pub accept_fraction: f64,
    pub total_queries: u64,
    pub wall_time_ms: f64,
}

impl TrialSummary {
    pub fn of(records: &[TrialRecord]) -> Self {
        let accepts = records.iter().filter(|r| r.report.verdict == Verdict::Accept).count();
        Self {
            schema_version: RECORD_SCHEMA_VERSION,
            trials: records.len(),
            accepts,
            accept_fraction: if records.is_empty() { 0.0 } else { accepts as f64 / records.len() as f64 },
            total_queries: records.iter().map(|r| r.report.queries).sum(),
            wall_time_ms: records.iter().map(|r| r.report.wall_time_ms).sum(),
        }
    }
}

fn run_one(g: &BoundedDegreeGraph, params: &TestParams, oracle: bool, seed: u64) -> Result<RunReport> {
    if oracle {
        oracle_cluster_test(g, params, seed)
    } else {
        k_cluster_test(g, params, seed)
    }
}

/// Runs `config.trials` trials; trial `i` uses seed `config.seed + i`.
///
/// The oracle path is deterministic given the seed, so it runs once.
pub fn run_trials(g: &BoundedDegreeGraph, config: &RunConfig) -> Result<Vec<TrialRecord>> {
    let params = config.params(g)?;
    params.validate(g.n())?;
    let count = if config.oracle { 1 } else { config.trials };
    let idx: Vec<usize> = (0..count).collect();
    let reports = par_map(&idx, |&i| run_one(g, &params, config.oracle, trial_seed(config.seed, i as u64)));
    reports
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            Ok(TrialRecord {
                schema_version: RECORD_SCHEMA_VERSION,
                tool_version: TOOL_VERSION.to_string(),
                trial: i,
                trial_seed: trial_seed(config.seed, i as u64),
                config: config.clone(),
                report: r?,
            })
        })
        .collect()
}

/// Reruns a record from its embedded config; true iff the outcome matches exactly.
pub fn replay(record: &TrialRecord, g: &BoundedDegreeGraph) -> Result<bool> {
    if graph_digest(g) != record.config.graph_digest {
        return Err(Error::invalid(format!(
            "graph digest {} does not match the record's {}",
            graph_digest(g),
            record.config.graph_digest
        )));
    }
    let params = record.config.params(g)?;
    let fresh = run_one(g, &params, record.config.oracle, record.trial_seed)?;
    Ok(fresh.same_outcome(&record.report))
}

/// Parses the trial records of a JSON-lines stream, skipping summary lines.
pub fn parse_records(text: &str) -> Result<Vec<TrialRecord>> {
    let mut out = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let v: serde_json::Value = serde_json::from_str(line)?;
        if v.get("kind").and_then(|k| k.as_str()) == Some("trial") {
            out.push(serde_json::from_value(v)?);
        }
    }
    Ok(out)
}

/// Loads a graph from an edge list; the sidecar, if present, is checked too.
pub fn load_graph(path: &Path) -> Result<BoundedDegreeGraph> {
    if sidecar_path(path).exists() {
        Ok(ClusterInstance::load(path)?.graph)
    } else {
        BoundedDegreeGraph::load(path)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenSummary {
    pub name: String,
    pub path: PathBuf,
    pub family: String,
    pub n: usize,
    pub d: usize,
    pub edges: usize,
    pub parts: Vec<usize>,
    pub max_phi_out: f64,
    pub seed: u64,
}

impl GenSummary {
    fn of(name: &str, path: &Path, inst: &ClusterInstance) -> Self {
        Self {
            name: name.to_string(),
            path: path.to_path_buf(),
            family: inst.design.family.clone(),
            n: inst.graph.n(),
            d: inst.graph.d(),
            edges: inst.graph.edge_count(),
            parts: inst.parts.iter().map(|p| p.len()).collect(),
            max_phi_out: inst.design.max_phi_out(),
            seed: inst.seed,
        }
    }
}

/// Generates one instance and writes `out` plus its sidecar.
pub fn gen_instance(spec: &GenSpec, seed: u64, out: &Path) -> Result<GenSummary> {
    let inst = spec.generate(seed)?;
    if let Some(dir) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    inst.save(out)?;
    let name = out.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    Ok(GenSummary::of(&name, out, &inst))
}

/// Writes the standard corpus into `dir` with a `corpus.json` manifest.
pub fn write_corpus(dir: &Path, master: u64) -> Result<Vec<GenSummary>> {
    fs::create_dir_all(dir)?;
    let entries = standard_corpus(master);
    let summaries = par_map(&entries, |e| gen_instance(&e.spec, e.seed, &dir.join(format!("{}.edges", e.name))));
    let summaries = summaries.into_iter().collect::<Result<Vec<_>>>()?;
    fs::write(dir.join(CORPUS_MANIFEST), serde_json::to_string_pretty(&entries)? + "\n")?;
    Ok(summaries)
}

/// Reads the manifest of a corpus directory and loads every listed instance.
pub fn load_corpus(dir: &Path) -> Result<Vec<(CorpusEntry, ClusterInstance)>> {
    let manifest = dir.join(CORPUS_MANIFEST);
    let entries: Vec<CorpusEntry> = serde_json::from_str(&fs::read_to_string(&manifest)?)?;
    entries
        .into_iter()
        .map(|e| {
            let inst = ClusterInstance::load(dir.join(format!("{}.edges", e.name)))?;
            Ok((e, inst))
        })
        .collect()
}

/// Edge-list files with a sidecar in `dir`, sorted by name.
pub fn instance_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "edges") && sidecar_path(p).exists())
        .collect();
    out.sort();
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantCheck {
    pub name: String,
    pub holds: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename = "audit")]
pub struct AuditRecord {
    pub instance: String,
    pub n: Option<usize>,
    pub checks: Vec<InvariantCheck>,
    /// Checks not run, with the reason.
    pub skipped: Vec<String>,
    pub ok: bool,
}

impl AuditRecord {
    pub fn failed(&self) -> impl Iterator<Item = &InvariantCheck> {
        self.checks.iter().filter(|c| !c.holds)
    }
}

fn check(name: &str, holds: bool, detail: String) -> InvariantCheck {
    InvariantCheck {
        name: name.to_string(),
        holds,
        detail,
    }
}

/// Spectral, Cheeger and partition audits of one instance.
pub fn audit_instance(inst: &ClusterInstance, fact_tol: f64) -> Result<(Vec<InvariantCheck>, Vec<String>)> {
    let g = &inst.graph;
    let n = g.n();
    let mut checks = Vec::new();
    let mut skipped = Vec::new();

    let ch = cheeger_check(g)?;
    checks.push(check(
        "cheeger",
        ch.holds,
        format!(
            "lambda2 = {:.6}, phi = {:.6} ({})",
            ch.lambda2.unwrap_or(0.0),
            ch.phi_value,
            if ch.exact { "exact" } else { "sweep" }
        ),
    ));

    if n > EIGEN_CAP {
        skipped.push(format!("spectral identities: n = {n} exceeds {EIGEN_CAP}"));
        return Ok((checks, skipped));
    }
    let report = eigensolve(g)?;
    let comps = g.component_count();
    let zm = report.zero_multiplicity();
    checks.push(check(
        "zero_multiplicity",
        zm == comps,
        format!("{zm} zero eigenvalues, {comps} components"),
    ));
    checks.push(check(
        "eigen_residual",
        report.eigen_residual <= fact_tol && report.orthogonality_residual <= fact_tol,
        format!(
            "residual {:.3e}, orthogonality {:.3e}",
            report.eigen_residual, report.orthogonality_residual
        ),
    ));
    let mut worst: f64 = 0.0;
    for u in [0, n / 2, n - 1] {
        worst = worst.max(verify_spectral_facts(g, &report, u, 10)?.max());
    }
    checks.push(check("spectral_facts", worst <= fact_tol, format!("max residual {worst:.3e}")));
    let gap = eigengap_report(inst, &report);
    checks.push(check(
        "eigengap",
        gap.holds,
        format!("lambda_1..lambda_h <= 2 * {:.3e}: {:?}", gap.max_phi_out, gap.leading),
    ));
    if n <= RHO_CAP {
        for k in 2..=3.min(n) {
            let rho = crate::graph::ratio_to_f64(rho_k_bruteforce(g, k)?);
            let lk = report.eigenvalues[k - 1];
            checks.push(check(
                &format!("rho_{k}"),
                lk / 2.0 <= rho + 1e-9,
                format!("lambda_{k}/2 = {:.6}, rho = {rho:.6}", lk / 2.0),
            ));
        }
    }
    Ok((checks, skipped))
}

/// Audits every instance file in `dir`; load failures are reported per instance.
pub fn verify_dir(dir: &Path, fact_tol: Option<f64>) -> Result<Vec<AuditRecord>> {
    let tol = fact_tol.unwrap_or(FACT_TOL);
    let files = instance_files(dir)?;
    Ok(files
        .iter()
        .map(|path| {
            let name = path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
            match ClusterInstance::load(path).and_then(|inst| Ok((inst.graph.n(), audit_instance(&inst, tol)?))) {
                Ok((n, (checks, skipped))) => {
                    let ok = checks.iter().all(|c| c.holds);
                    AuditRecord {
                        instance: name,
                        n: Some(n),
                        checks,
                        skipped,
                        ok,
                    }
                }
                Err(e @ Error::Capacity { .. }) => AuditRecord {
                    instance: name,
                    n: None,
                    checks: Vec::new(),
                    skipped: vec![e.to_string()],
                    ok: true,
                },
                Err(e) => AuditRecord {
                    instance: name,
                    n: None,
                    checks: vec![check("load", false, e.to_string())],
                    skipped: Vec::new(),
                    ok: false,
                },
            }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceRate {
    pub name: String,
    pub clusterable: bool,
    /// Fraction of trials with the expected verdict.
    pub correct: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SettingResult {
    pub constants: Constants,
    /// Mean per-run query budget over the corpus.
    pub mean_query_budget: f64,
    pub feasible: bool,
    pub infeasible_reason: Option<String>,
    /// Worst correct-verdict rate on clusterable instances.
    pub worst_accept: Option<f64>,
    /// Worst correct-verdict rate on far instances.
    pub worst_reject: Option<f64>,
    pub meets_target: bool,
    pub rates: Vec<InstanceRate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub mode: Mode,
    pub seed: u64,
    pub trials: usize,
    pub target: f64,
    pub settings: Vec<SettingResult>,
    /// Cheapest setting meeting the target on every instance.
    pub recommended: Option<Constants>,
}

fn grid_settings(grid: &CalibrationGrid, mode: Mode, base: &Constants) -> Vec<Constants> {
    if mode == Mode::Theory {
        return vec![base.clone()];
    }
    let mut out = Vec::new();
    for &c_s in &grid.c_s {
        for &c_ell in &grid.c_ell {
            for &c_r in &grid.c_r {
                for &c_sigma in &grid.c_sigma {
                    out.push(Constants {
                        c_s,
                        c_ell,
                        c_r,
                        c_sigma,
                        ..base.clone()
                    });
                }
            }
        }
    }
    out
}

/// Sweeps `grid` over `corpus`, cheapest setting first.
///
/// A setting stops at its first instance below target. In theory mode the
/// grid is the single theory setting, which is reported infeasible whenever
/// its parameters fail validation.
pub fn calibrate(
    corpus: &[(CorpusEntry, ClusterInstance)],
    grid: &CalibrationGrid,
    mode: Mode,
    base: &Constants,
    trials: usize,
    seed: u64,
) -> Result<CalibrationReport> {
    let mut settings: Vec<(Constants, f64, Option<String>)> = Vec::new();
    for c in grid_settings(grid, mode, base) {
        let mut budget = 0.0;
        let mut reason = None;
        for (e, inst) in corpus {
            let g = &inst.graph;
            let p = TestParams::for_mode(mode, g.n(), g.d(), e.k, e.epsilon, e.phi, &c)?;
            if let Err(err) = p.validate(g.n()) {
                reason.get_or_insert_with(|| format!("{}: {err}", e.name));
            }
            budget += p.query_budget();
        }
        settings.push((c, budget / corpus.len().max(1) as f64, reason));
    }
    settings.sort_by(|a, b| a.1.total_cmp(&b.1));

    let mut results = Vec::new();
    for (c, mean_query_budget, reason) in settings {
        let mut rates = Vec::new();
        let mut meets = reason.is_none() && !corpus.is_empty();
        if reason.is_none() {
            for (e, inst) in corpus {
                let config = RunConfig {
                    seed,
                    trials,
                    mode,
                    oracle: false,
                    k: e.k,
                    epsilon: e.epsilon,
                    phi: e.phi,
                    constants: c.clone(),
                    instance: e.name.clone(),
                    graph_digest: String::new(),
                };
                let records = run_trials(&inst.graph, &config)?;
                let want = if e.clusterable { Verdict::Accept } else { Verdict::Reject };
                let correct = records.iter().filter(|r| r.report.verdict == want).count() as f64 / trials as f64;
                rates.push(InstanceRate {
                    name: e.name.clone(),
                    clusterable: e.clusterable,
                    correct,
                });
                if correct < grid.target {
                    meets = false;
                    break;
                }
            }
        }
        let worst = |want: bool| {
            rates
                .iter()
                .filter(|r| r.clusterable == want)
                .map(|r| r.correct)
                .reduce(f64::min)
        };
        results.push(SettingResult {
            constants: c,
            mean_query_budget,
            feasible: reason.is_none(),
            infeasible_reason: reason,
            worst_accept: worst(true),
            worst_reject: worst(false),
            meets_target: meets,
            rates,
        });
    }
    let recommended = results.iter().find(|r| r.meets_target).map(|r| r.constants.clone());
    Ok(CalibrationReport {
        mode,
        seed,
        trials,
        target: grid.target,
        settings: results,
        recommended,
    })
}

/// The constants file read back by `Constants::calibrated`.
pub fn calibration_toml(report: &CalibrationReport, constants: &Constants) -> Result<String> {
    #[derive(Serialize)]
    struct File<'a> {
        constants: &'a Constants,
    }
    let body = toml::to_string(&File { constants }).map_err(|e| Error::invalid(e.to_string()))?;
    Ok(format!(
        "# Practical-mode constants read by Constants::calibrated().\n\
         # Written by `kcluster calibrate` (seed {}, {} trials per instance, target {}).\n\n{body}",
        report.seed, report.trials, report.target
    ))
}

/// Whether theory-mode parameters are runnable for one `(n, d, k, epsilon, phi)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryFeasibility {
    pub params: TestParams,
    pub query_budget: f64,
    pub feasible: bool,
    pub reason: Option<String>,
}

pub fn theory_feasibility(n: usize, d: usize, k: usize, epsilon: f64, phi: f64) -> Result<TheoryFeasibility> {
    let params = theory_params(n, d, k, epsilon, phi, &Constants::theory())?;
    let reason = params.validate(n).err().map(|e| e.to_string());
    Ok(TheoryFeasibility {
        query_budget: params.query_budget(),
        feasible: reason.is_none(),
        reason,
        params,
    })
}

pub fn spectra(g: &BoundedDegreeGraph, with_vectors: bool) -> Result<SpectralSummary> {
    Ok(eigensolve(g)?.summary(with_vectors))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchPoint {
    pub n: usize,
    pub s: usize,
    pub ell: usize,
    pub r: u64,
    pub trials: usize,
    pub accept_fraction: f64,
    pub mean_queries: f64,
    pub mean_wall_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub k: usize,
    pub epsilon: f64,
    pub phi: f64,
    pub mode: Mode,
    pub constants: Constants,
    pub points: Vec<BenchPoint>,
    /// Least-squares slope of `ln(mean queries)` against `ln n`.
    pub query_slope: Option<f64>,
    pub wall_slope: Option<f64>,
}

/// Least-squares slope of `ln y` on `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 || xs.len() != ys.len() {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / lx.len() as f64;
    let my = ly.iter().sum::<f64>() / ly.len() as f64;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Planted instance of `k` near-equal parts used for scaling runs.
pub fn bench_instance(n: usize, k: usize, cfg: &BenchConfig, seed: u64) -> Result<ClusterInstance> {
    let base = (n / k) & !1;
    let mut sizes = vec![base; k];
    sizes[0] += n - base * k;
    GenSpec::Planted {
        sizes,
        d: cfg.d,
        cross_edges: cfg.cross_edges,
    }
    .generate(seed)
}

/// Query counts and wall time of the sampled tester across `cfg.ns`.
pub fn bench(settings: &ConfigFile, cfg: &BenchConfig) -> Result<BenchReport> {
    let seed = settings.seed()?;
    let k = settings.k.unwrap_or(DEFAULT_K);
    let trials = settings.trials.unwrap_or(3);
    let mut points = Vec::new();
    for &n in &cfg.ns {
        let inst = bench_instance(n, k, cfg, seed)?;
        let config = settings.run_config(&format!("bench-{n}"), &inst.graph)?;
        let config = RunConfig {
            trials,
            oracle: false,
            ..config
        };
        let params = config.params(&inst.graph)?;
        let records = run_trials(&inst.graph, &config)?;
        let summary = TrialSummary::of(&records);
        points.push(BenchPoint {
            n,
            s: params.s,
            ell: params.ell,
            r: params.r,
            trials,
            accept_fraction: summary.accept_fraction,
            mean_queries: summary.total_queries as f64 / trials as f64,
            mean_wall_ms: summary.wall_time_ms / trials as f64,
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.n as f64).collect();
    let q: Vec<f64> = points.iter().map(|p| p.mean_queries).collect();
    let w: Vec<f64> = points.iter().map(|p| p.mean_wall_ms.max(1e-6)).collect();
    Ok(BenchReport {
        k,
        epsilon: settings.epsilon.unwrap_or(DEFAULT_EPSILON),
        phi: settings.phi.unwrap_or(DEFAULT_PHI),
        mode: settings.mode(),
        constants: settings.constants(),
        query_slope: log_log_slope(&xs, &q),
        wall_slope: log_log_slope(&xs, &w),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_layers_flags_over_file() {
        let file = ConfigFile::parse(
            "seed = 3\ntrials = 10\nk = 3\n[constants]\nc_r = 0.5\nc_s = 1.0\n",
            "t.toml",
        )
        .unwrap();
        let flags = ConfigFile {
            trials: Some(4),
            constants: Some(ConstantsOverride {
                c_r: Some(2.0),
                ..Default::default()
            }),
            ..Default::default()
        };
        let c = file.overlay(flags);
        assert_eq!((c.seed, c.trials, c.k), (Some(3), Some(4), Some(3)));
        let k = c.constants();
        assert_eq!((k.c_r, k.c_s), (2.0, 1.0));
        assert_eq!(k.c_ell, Constants::calibrated().c_ell);
    }

    #[test]
    fn config_errors_carry_line_numbers() {
        match ConfigFile::parse("seed = 1\n\ntrails = 3\n", "bad.toml") {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("trails"));
            }
            other => panic!("{other:?}"),
        }
        assert!(ConfigFile::default().seed().is_err());
    }

    #[test]
    fn bundled_calibration_parses() {
        let c = Constants::calibrated();
        assert!(c.c_s > 0.0 && c.c_r > 0.0 && c.c_ell > 0.0);
    }

    #[test]
    fn slope_of_power_law() {
        let xs = [10.0, 100.0, 1000.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(0.5)).collect();
        assert!((log_log_slope(&xs, &ys).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(log_log_slope(&[1.0], &[1.0]), None);
    }

    #[test]
    fn singleton_trials_accept_and_replay() {
        let g = BoundedDegreeGraph::singleton(1).unwrap();
        let cfg = ConfigFile {
            seed: Some(9),
            trials: Some(5),
            k: Some(1),
            ..Default::default()
        };
        let rc = cfg.run_config("singleton", &g).unwrap();
        let recs = run_trials(&g, &rc).unwrap();
        assert_eq!(recs.len(), 5);
        assert!(recs.iter().all(|r| r.report.verdict == Verdict::Accept));
        let text: String = recs
            .iter()
            .map(|r| serde_json::to_string(r).unwrap() + "\n")
            .collect();
        let back = parse_records(&text).unwrap();
        assert_eq!(back, recs);
        for r in &back {
            assert!(replay(r, &g).unwrap());
        }
    }

    #[test]
    fn theory_mode_is_infeasible_at_desk_scale() {
        let t = theory_feasibility(4096, 8, 2, 0.5, 0.25).unwrap();
        assert!(!t.feasible);
        assert_eq!(t.params.s, 39052);
    }
}
