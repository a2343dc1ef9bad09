//! `kcluster`: generate instances, run the tester, audit corpora, calibrate and benchmark.
//!
//! Exit codes: 0 ran to completion, 1 an audited invariant or calibration
//! target failed, 2 usage or configuration error.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kcluster::cli_io::{
    self, calibrate, calibration_toml, gen_instance, load_corpus, load_graph, run_trials, theory_feasibility,
    verify_dir, write_corpus, BenchConfig, ConfigFile, ConstantsOverride, TrialSummary,
};
use kcluster::cluster_test::Mode;
use kcluster::generators::{standard_corpus, ClusterInstance, GenSpec};
use kcluster::Error;

#[derive(Parser)]
#[command(name = "kcluster", version, about = "Sublinear k-cluster testing for bounded-degree graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct Common {
    /// Master seed; required here or in the config file.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// theory or practical
    #[arg(long)]
    mode: Option<Mode>,
    /// Use exact walk distributions instead of sampled walks.
    #[arg(long)]
    oracle: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    /// TOML config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    phi: Option<f64>,
    #[arg(long = "c-s")]
    c_s: Option<f64>,
    #[arg(long = "c-ell")]
    c_ell: Option<f64>,
    #[arg(long = "c-r")]
    c_r: Option<f64>,
    #[arg(long = "c-sigma")]
    c_sigma: Option<f64>,
    #[arg(long = "closeness-c")]
    closeness_c: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one instance (edge list + sidecar) or the standard corpus.
    Gen {
        /// Generator spec as JSON, e.g. '{"kind":"dumbbell","half":40,"d":4,"cut_edges":1}'.
        #[arg(long, conflicts_with = "corpus")]
        spec: Option<String>,
        /// Write the standard corpus into this directory.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Run the tester on an instance; one JSON record per trial, then a summary.
    Test {
        instance: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Audit every instance in a corpus directory.
    Verify {
        dir: PathBuf,
        /// Tolerance for the spectral identities.
        #[arg(long)]
        fact_tol: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Sweep practical-mode constants and write the cheapest passing setting.
    Calibrate {
        /// Corpus directory written by `gen --corpus`; generated in memory if absent.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Where to write the full JSON report (standard output if absent).
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Dump the Laplacian spectrum of an instance.
    Spectra {
        instance: PathBuf,
        /// Include eigenvectors.
        #[arg(long)]
        vectors: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Query-count and wall-time scaling of the sampled tester.
    Bench {
        /// Comma-separated vertex counts.
        #[arg(long, value_delimiter = ',')]
        ns: Option<Vec<usize>>,
        #[command(flatten)]
        common: Common,
    },
}

impl Common {
    fn settings(&self) -> kcluster::Result<ConfigFile> {
        let c = ConstantsOverride {
            c_s: self.c_s,
            c_ell: self.c_ell,
            c_r: self.c_r,
            c_sigma: self.c_sigma,
            closeness_c: self.closeness_c,
        };
        let flags = ConfigFile {
            seed: self.seed,
            trials: self.trials,
            mode: self.mode,
            oracle: self.oracle.then_some(true),
            out: self.out.clone(),
            k: self.k,
            epsilon: self.epsilon,
            phi: self.phi,
            constants: (c != ConstantsOverride::default()).then_some(c),
            ..Default::default()
        };
        ConfigFile::resolve(self.config.as_deref(), flags)
    }
}

enum Failure {
    Invariant(String),
    Usage(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.into())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Usage(e.into())
    }
}

type Outcome = std::result::Result<(), Failure>;

fn sink(out: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(io::BufWriter::new(fs::File::create(p)?)),
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    })
}

fn json_line<T: serde::Serialize>(w: &mut dyn Write, v: &T) -> Outcome {
    serde_json::to_writer(&mut *w, v)?;
    writeln!(w)?;
    Ok(())
}

fn cmd_gen(spec: Option<String>, corpus: Option<PathBuf>, s: ConfigFile) -> Outcome {
    let seed = s.seed()?;
    if let Some(dir) = corpus {
        for summary in write_corpus(&dir, seed)? {
            json_line(&mut io::stdout(), &summary)?;
        }
        return Ok(());
    }
    let spec: GenSpec = match spec {
        Some(text) => serde_json::from_str(&text)
            .map_err(|e| Error::InvalidInput(format!("generator spec: {e}")))?,
        None => s
            .generator
            .clone()
            .ok_or_else(|| Error::InvalidInput("no generator spec: pass --spec or a [gen] table".into()))?,
    };
    let out = s
        .out
        .clone()
        .ok_or_else(|| Error::InvalidInput("--out is required for a single instance".into()))?;
    json_line(&mut io::stdout(), &gen_instance(&spec, seed, &out)?)
}

fn cmd_test(instance: &Path, s: ConfigFile) -> Outcome {
    let g = load_graph(instance)?;
    let config = s.run_config(&instance.display().to_string(), &g)?;
    let records = run_trials(&g, &config)?;
    let mut w = sink(s.out.as_deref())?;
    for r in &records {
        json_line(&mut *w, r)?;
    }
    json_line(&mut *w, &TrialSummary::of(&records))?;
    w.flush()?;
    Ok(())
}

fn cmd_verify(dir: &Path, fact_tol: Option<f64>, s: ConfigFile) -> Outcome {
    let records = verify_dir(dir, fact_tol.or(s.fact_tol))?;
    if records.is_empty() {
        eprintln!("warning: no instances found in {}", dir.display());
    }
    let mut w = sink(s.out.as_deref())?;
    let mut failed = Vec::new();
    for r in &records {
        json_line(&mut *w, r)?;
        for c in r.failed() {
            failed.push(format!("{}: {} ({})", r.instance, c.name, c.detail));
        }
    }
    w.flush()?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Invariant(format!("invariant failed: {}", failed.join("; "))))
    }
}

fn cmd_calibrate(corpus: Option<PathBuf>, report_path: Option<PathBuf>, s: ConfigFile) -> Outcome {
    let seed = s.seed()?;
    let mode = s.mode();
    let trials = s.trials.unwrap_or(10);
    let grid = s.calibrate.clone().unwrap_or_default();
    let instances = match corpus {
        Some(dir) => load_corpus(&dir)?,
        None => standard_corpus(seed)
            .into_iter()
            .map(|e| {
                let inst: ClusterInstance = e.spec.generate(e.seed)?;
                Ok((e, inst))
            })
            .collect::<kcluster::Result<Vec<_>>>()?,
    };
    let report = calibrate(&instances, &grid, mode, &s.constants(), trials, seed)?;
    let reference = theory_feasibility(4096, 8, 2, 0.5, cli_io::DEFAULT_PHI)?;
    let full = serde_json::json!({ "calibration": report, "theory_reference": reference });
    match report_path {
        Some(p) => fs::write(p, serde_json::to_string_pretty(&full)? + "\n")?,
        None => println!("{}", serde_json::to_string_pretty(&full)?),
    }
    match &report.recommended {
        Some(c) if mode == Mode::Practical => {
            let out = s.out.clone().unwrap_or_else(|| PathBuf::from("practical.toml"));
            fs::write(&out, calibration_toml(&report, c)?)?;
            eprintln!("wrote {}", out.display());
            Ok(())
        }
        Some(_) => Ok(()),
        None => {
            let why = report
                .settings
                .iter()
                .find_map(|r| r.infeasible_reason.clone())
                .unwrap_or_else(|| format!("no setting reached target {}", grid.target));
            Err(Failure::Invariant(format!("calibration failed: {why}")))
        }
    }
}

fn cmd_spectra(instance: &Path, vectors: bool, s: ConfigFile) -> Outcome {
    let g = load_graph(instance)?;
    let summary = cli_io::spectra(&g, vectors)?;
    let mut w = sink(s.out.as_deref())?;
    json_line(&mut *w, &summary)?;
    w.flush()?;
    Ok(())
}

fn cmd_bench(ns: Option<Vec<usize>>, s: ConfigFile) -> Outcome {
    let mut cfg: BenchConfig = s.bench.clone().unwrap_or_default();
    if let Some(ns) = ns {
        cfg.ns = ns;
    }
    let report = cli_io::bench(&s, &cfg)?;
    let mut w = sink(s.out.as_deref())?;
    json_line(&mut *w, &report)?;
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Gen { spec, corpus, common } => cmd_gen(spec, corpus, common.settings()?),
        Command::Test { instance, common } => cmd_test(&instance, common.settings()?),
        Command::Verify { dir, fact_tol, common } => cmd_verify(&dir, fact_tol, common.settings()?),
        Command::Calibrate { corpus, report, common } => cmd_calibrate(corpus, report, common.settings()?),
        Command::Spectra { instance, vectors, common } => cmd_spectra(&instance, vectors, common.settings()?),
        Command::Bench { ns, common } => cmd_bench(ns, common.settings()?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invariant(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
