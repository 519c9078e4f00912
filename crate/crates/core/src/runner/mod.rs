//! Experiment orchestration behind the `minrule` command line.
//!
//! Each `cmd_*` function takes a parsed [`ExperimentSpec`] plus
//! [`Options`], writes its artifacts and returns a report; nothing here
//! prints. Every seed's graph, model and configuration are built and
//! validated before the first file is written, so a bad spec leaves the
//! output directory untouched.
//!
//! | file | written by |
//! |------|------------|
//! | `trajectory_seed{S}.csv` | `run` |
//! | `metrics_seed{S}.csv` | `run` |
//! | `manifest_seed{S}.json` | `run` |
//! | `local_seed{S}.csv`, `estimates_seed{S}.csv`, `tau_seed{S}.csv` | `run`, when recorded |
//! | `compare_seed{S}.csv`, `compare_manifest_seed{S}.json`, `compare_summary.csv` | `compare` |
//! | `belief_seed{S}.svg`, `rate_seed{S}.svg` | `compare`, `plot` |

pub mod export;
pub mod plots;
pub mod spec;
pub mod svg;

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::engine::{run, run_parallel, SharingMode, SimulationConfig, Trajectory};
use crate::error::Error;
use crate::graph::AgentId;
use crate::metrics::{
    convergence_time, learning_verdict, median_convergence_time, min_final_belief, theoretical_rate_bound,
};
use crate::model::HypothesisId;
use export::CompareTable;
pub use spec::{ExperimentSpec, Instance, SpecError, DEFAULT_SPEC};

/// Tolerance of the learning verdict reported by the commands.
pub const LEARNING_TOLERANCE: f64 = 0.01;

const MODEL_GENERATOR: &str = "each column: i.i.d. uniform(floor, 1) draws, normalized, floored at `floor`, \
renormalized; discriminating agents redrawn until every ordered pair has KL >= min_kl";

#[derive(Debug, thiserror::Error)]
pub enum RunnerError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("invalid experiment: {0}")]
    Invalid(Error),
    #[error("validation failed")]
    Verdict,
    #[error("engine error: {0}")]
    Engine(Error),
    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("I/O error: {0}")]
    Data(Error),
}

impl RunnerError {
    /// 2 for spec problems, 3 for engine failures, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunnerError::Spec(_) | RunnerError::Invalid(_) | RunnerError::Verdict => 2,
            RunnerError::Engine(_) => 3,
            RunnerError::Io { .. } | RunnerError::Data(_) => 4,
        }
    }
}

fn classify(e: Error) -> RunnerError {
    match e {
        Error::Parameter(_) | Error::Parse { .. } | Error::Domain(_) => RunnerError::Invalid(e),
        Error::Io(_) | Error::Data(_) => RunnerError::Data(e),
        other => RunnerError::Engine(other),
    }
}

fn at(path: &Path) -> impl Fn(Error) -> RunnerError + '_ {
    move |e| match e {
        Error::Io(source) => RunnerError::Io { path: path.to_path_buf(), source },
        other => classify(other),
    }
}

fn io_at(path: &Path) -> impl Fn(std::io::Error) -> RunnerError + '_ {
    move |source| RunnerError::Io { path: path.to_path_buf(), source }
}

/// Command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct Options {
    /// Output directory; defaults to the spec's `output.dir`.
    pub out: Option<PathBuf>,
    /// Replaces the spec's first seed.
    pub seed: Option<u64>,
}

fn prepare(spec: &ExperimentSpec, opts: &Options) -> (ExperimentSpec, PathBuf) {
    let mut spec = spec.clone();
    if let Some(seed) = opts.seed {
        spec.override_seed(seed);
    }
    let out = opts.out.clone().unwrap_or_else(|| spec.output.dir.clone());
    (spec, out)
}

fn run_config(config: &SimulationConfig, parallel: bool) -> Result<Trajectory, RunnerError> {
    let result = if parallel { run_parallel(config) } else { run(config) };
    result.map_err(|e| classify(e.source))
}

struct Job {
    seed: u64,
    instance: Instance,
    warnings: Vec<String>,
}

/// Build and validate every seed's instance under `modes`.
fn plan(spec: &ExperimentSpec, modes: &[SharingMode]) -> Result<Vec<Job>, RunnerError> {
    spec.run
        .seeds
        .iter()
        .map(|&seed| {
            let instance = spec.instance(seed).map_err(classify)?;
            let mut warnings = Vec::new();
            for &mode in modes {
                for w in spec.config(&instance, seed, mode).validate().map_err(classify)? {
                    if !warnings.contains(&w) {
                        warnings.push(w);
                    }
                }
            }
            Ok(Job { seed, instance, warnings })
        })
        .collect()
}

#[derive(Serialize)]
struct ManifestRun {
    mode: String,
    tau_mode: String,
    config_digest: String,
    horizon: usize,
    wall_time_secs: f64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    library_version: &'static str,
    seed: u64,
    seeds: &'a [u64],
    graph_seed: Option<u64>,
    model_seed: Option<u64>,
    model_generator: Option<&'static str>,
    runs: Vec<ManifestRun>,
    files: Vec<String>,
    warnings: &'a [String],
    spec: &'a ExperimentSpec,
}

impl Manifest<'_> {
    fn write(&self, path: &Path) -> Result<(), RunnerError> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes") + "\n";
        fs::write(path, text).map_err(io_at(path))
    }
}

fn manifest<'a>(
    command: &'a str,
    spec: &'a ExperimentSpec,
    job: &'a Job,
    runs: &[&Trajectory],
    files: &[PathBuf],
) -> Manifest<'a> {
    Manifest {
        command,
        library_version: env!("CARGO_PKG_VERSION"),
        seed: job.seed,
        seeds: &spec.run.seeds,
        graph_seed: job.instance.graph_seed,
        model_seed: job.instance.model_seed,
        model_generator: job.instance.model_seed.map(|_| MODEL_GENERATOR),
        runs: runs
            .iter()
            .map(|t| ManifestRun {
                mode: t.meta.mode.clone(),
                tau_mode: t.meta.tau_mode.clone(),
                config_digest: t.meta.config_digest.clone(),
                horizon: t.meta.horizon,
                wall_time_secs: t.meta.wall_time_secs,
            })
            .collect(),
        files: files.iter().filter_map(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned()).collect(),
        warnings: &job.warnings,
        spec,
    }
}

/// Learning summary of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub mode: SharingMode,
    pub learned: bool,
    pub min_final_belief: f64,
    /// Median over agents of the sustained-threshold crossing time.
    pub median_convergence: Option<f64>,
    pub wall_time_secs: f64,
}

impl RunSummary {
    pub fn of(mode: SharingMode, traj: &Trajectory, h_true: HypothesisId, threshold: f64) -> Result<Self, RunnerError> {
        let times = convergence_time(traj, threshold, h_true).map_err(classify)?;
        Ok(Self {
            mode,
            learned: learning_verdict(traj, h_true, LEARNING_TOLERANCE),
            min_final_belief: min_final_belief(traj, h_true),
            median_convergence: median_convergence_time(&times),
            wall_time_secs: traj.meta.wall_time_secs,
        })
    }
}

impl fmt::Display for RunSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let med = self.median_convergence.map_or("never".to_string(), |m| format!("{m}"));
        write!(
            f,
            "{:<18} learned={:<5} min final belief={:.6} median convergence round={:<6} ({:.2}s)",
            self.mode.to_string(),
            self.learned,
            self.min_final_belief,
            med,
            self.wall_time_secs
        )
    }
}

#[derive(Debug, Clone)]
pub struct SeedReport {
    pub seed: u64,
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
    pub summaries: Vec<RunSummary>,
    /// Agent and hypothesis shown in the plots, with the network-wide rate bound.
    pub plotted: Option<(AgentId, HypothesisId, f64)>,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub out_dir: PathBuf,
    pub seeds: Vec<SeedReport>,
}

impl Report {
    pub fn files(&self) -> impl Iterator<Item = &PathBuf> {
        self.seeds.iter().flat_map(|s| &s.files)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.seeds {
            writeln!(f, "seed {}:", s.seed)?;
            for w in &s.warnings {
                writeln!(f, "  warning: {w}")?;
            }
            if let Some((agent, h, bound)) = s.plotted {
                writeln!(f, "  plotted agent {agent}, rate of {h} (bound {bound:.6} nats/round)")?;
            }
            for r in &s.summaries {
                writeln!(f, "  {r}")?;
            }
            for p in &s.files {
                writeln!(f, "  wrote {}", p.display())?;
            }
        }
        Ok(())
    }
}

/// Run the configured mode for every seed and export trajectory, metrics and manifest.
pub fn cmd_run(spec: &ExperimentSpec, opts: &Options) -> Result<Report, RunnerError> {
    let (spec, out) = prepare(spec, opts);
    let mode = spec.sharing_mode();
    let jobs = plan(&spec, &[mode])?;
    fs::create_dir_all(&out).map_err(io_at(&out))?;

    let results: Vec<Result<SeedReport, RunnerError>> = jobs
        .par_iter()
        .map(|job| {
            let seed = job.seed;
            let config = spec.config(&job.instance, seed, mode);
            let traj = run_config(&config, spec.run.parallel)?;
            let mut files = Vec::new();
            let p = out.join(format!("trajectory_seed{seed}.csv"));
            export::write_trajectory_file(&traj, &p).map_err(at(&p))?;
            files.push(p);
            let p = out.join(format!("metrics_seed{seed}.csv"));
            export::write_metrics_file(&traj, spec.h_true(), &p).map_err(at(&p))?;
            files.push(p);
            type Extra = fn(&Trajectory, &Path) -> crate::Result<bool>;
            let extras: [(&str, Extra); 3] = [
                ("local", export::write_local_file),
                ("estimates", export::write_estimates_file),
                ("tau", export::write_tau_file),
            ];
            for (name, write) in extras {
                let p = out.join(format!("{name}_seed{seed}.csv"));
                if write(&traj, &p).map_err(at(&p))? {
                    files.push(p);
                }
            }
            let p = out.join(format!("manifest_seed{seed}.json"));
            files.push(p.clone());
            manifest("run", &spec, job, &[&traj], &files).write(&p)?;
            Ok(SeedReport {
                seed,
                files,
                warnings: job.warnings.clone(),
                summaries: vec![RunSummary::of(mode, &traj, spec.h_true(), spec.output.threshold)?],
                plotted: None,
            })
        })
        .collect();
    Ok(Report { out_dir: out, seeds: results.into_iter().collect::<Result<_, _>>()? })
}

/// The three compared modes run on one seed's instance.
#[derive(Debug, Clone)]
pub struct ModeComparison {
    pub seed: u64,
    pub instance: Instance,
    pub warnings: Vec<String>,
    pub runs: Vec<(SharingMode, Trajectory)>,
}

impl ModeComparison {
    pub fn table(&self, spec: &ExperimentSpec) -> CompareTable {
        let runs: Vec<(String, &Trajectory)> = self.runs.iter().map(|(m, t)| (m.label().to_string(), t)).collect();
        CompareTable::from_trajectories(&runs, spec.h_true(), spec.plot_hypothesis(self.instance.model.n_hypotheses()))
    }
}

/// Run every compared mode on the graph, model and observation streams of `seed`.
pub fn compare_modes(spec: &ExperimentSpec, seed: u64) -> Result<ModeComparison, RunnerError> {
    let mut spec = spec.clone();
    spec.run.seeds = vec![seed];
    let job = plan(&spec, &SharingMode::COMPARED)?.pop().expect("one seed");
    run_comparison(&spec, job)
}

fn run_comparison(spec: &ExperimentSpec, job: Job) -> Result<ModeComparison, RunnerError> {
    let runs = SharingMode::COMPARED
        .par_iter()
        .map(|&mode| Ok((mode, run_config(&spec.config(&job.instance, job.seed, mode), spec.run.parallel)?)))
        .collect::<Result<Vec<_>, RunnerError>>()?;
    Ok(ModeComparison { seed: job.seed, instance: job.instance, warnings: job.warnings, runs })
}

fn write_svgs(
    out: &Path,
    seed: u64,
    table: &CompareTable,
    agent: AgentId,
    bound: f64,
) -> Result<Vec<PathBuf>, RunnerError> {
    if agent >= table.n_agents {
        return Err(RunnerError::Invalid(Error::Parameter(format!(
            "plot agent {agent} out of range for {} agents",
            table.n_agents
        ))));
    }
    let belief = out.join(format!("belief_seed{seed}.svg"));
    fs::write(&belief, plots::belief_plot(table, agent, seed).render()).map_err(io_at(&belief))?;
    let rate = out.join(format!("rate_seed{seed}.svg"));
    fs::write(&rate, plots::rate_plot(table, agent, bound, seed).render()).map_err(io_at(&rate))?;
    Ok(vec![belief, rate])
}

/// Run full, partial-previous and partial-own sharing on identical seeds;
/// export the combined CSV, a summary table and (optionally) the two charts.
pub fn cmd_compare(spec: &ExperimentSpec, opts: &Options) -> Result<Report, RunnerError> {
    let (spec, out) = prepare(spec, opts);
    let jobs = plan(&spec, &SharingMode::COMPARED)?;
    fs::create_dir_all(&out).map_err(io_at(&out))?;

    let mut seeds = Vec::new();
    let mut summary = String::from("seed,mode,learned,min_final_belief,median_convergence_time\n");
    for job in jobs {
        let seed = job.seed;
        let cmp = run_comparison(&spec, job)?;
        let table = cmp.table(&spec);
        let model = &cmp.instance.model;
        let agent = spec.plot_agent(model);
        let bound = theoretical_rate_bound(model, spec.h_true(), table.h_plot).map_err(classify)?;

        let mut files = Vec::new();
        let p = out.join(format!("compare_seed{seed}.csv"));
        table.write_file(&p).map_err(at(&p))?;
        files.push(p);
        if spec.output.plots {
            files.extend(write_svgs(&out, seed, &table, agent, bound)?);
        }
        let summaries = cmp
            .runs
            .iter()
            .map(|(mode, traj)| RunSummary::of(*mode, traj, spec.h_true(), spec.output.threshold))
            .collect::<Result<Vec<_>, _>>()?;
        for s in &summaries {
            let med = s.median_convergence.map(|m| m.to_string()).unwrap_or_default();
            let _ = writeln!(
                summary,
                "{seed},{},{},{},{med}",
                s.mode.label(),
                s.learned,
                export::fmt_f64(s.min_final_belief)
            );
        }
        let p = out.join(format!("compare_manifest_seed{seed}.json"));
        files.push(p.clone());
        let job = Job { seed, instance: cmp.instance.clone(), warnings: cmp.warnings.clone() };
        let trajs: Vec<&Trajectory> = cmp.runs.iter().map(|(_, t)| t).collect();
        manifest("compare", &spec, &job, &trajs, &files).write(&p)?;
        seeds.push(SeedReport {
            seed,
            files,
            warnings: cmp.warnings,
            summaries,
            plotted: Some((agent, table.h_plot, bound)),
        });
    }
    let p = out.join("compare_summary.csv");
    fs::write(&p, summary).map_err(io_at(&p))?;
    if let Some(last) = seeds.last_mut() {
        last.files.push(p);
    }
    Ok(Report { out_dir: out, seeds })
}

/// Connectivity, identifiability and rate-bound report for one seed's instance.
#[derive(Debug, Clone)]
pub struct ValidateReport {
    pub seed: u64,
    pub n_agents: usize,
    pub n_edges: usize,
    pub connected: bool,
    pub unreachable: Vec<(AgentId, AgentId)>,
    pub identifiable: bool,
    pub failing_pairs: Vec<(HypothesisId, HypothesisId)>,
    pub h_true: HypothesisId,
    /// `max_kl[l][k] = max_j K_j(h_l, h_k)`.
    pub max_kl: Vec<Vec<f64>>,
}

impl ValidateReport {
    pub fn passed(&self) -> bool {
        self.connected && self.identifiable
    }
}

const LIST_LIMIT: usize = 50;

impl fmt::Display for ValidateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = |ok: bool| if ok { "PASS" } else { "FAIL" };
        writeln!(f, "seed {}: {} agents, {} directed edges", self.seed, self.n_agents, self.n_edges)?;
        writeln!(f, "strong connectivity: {}", verdict(self.connected))?;
        if !self.connected {
            writeln!(f, "  {} unreachable (from, to) pairs:", self.unreachable.len())?;
            for (a, b) in self.unreachable.iter().take(LIST_LIMIT) {
                writeln!(f, "    {a} -> {b}")?;
            }
            if self.unreachable.len() > LIST_LIMIT {
                writeln!(f, "    ... and {} more", self.unreachable.len() - LIST_LIMIT)?;
            }
        }
        writeln!(f, "global identifiability: {}", verdict(self.identifiable))?;
        if !self.identifiable {
            writeln!(f, "  {} pairs no agent can separate:", self.failing_pairs.len())?;
            for (a, b) in self.failing_pairs.iter().take(LIST_LIMIT) {
                writeln!(f, "    {a} vs {b}")?;
            }
            if self.failing_pairs.len() > LIST_LIMIT {
                writeln!(f, "    ... and {} more", self.failing_pairs.len() - LIST_LIMIT)?;
            }
        }
        writeln!(f, "rejection-rate bounds max_j K_j({}, h) in nats/round:", self.h_true)?;
        for (k, v) in self.max_kl[self.h_true.0].iter().enumerate() {
            if k != self.h_true.0 {
                writeln!(f, "  h{k:<4} {v:.6}")?;
            }
        }
        writeln!(f, "pairwise max_j K_j(row, column):")?;
        write!(f, "{:>6}", "")?;
        for k in 0..self.max_kl.len() {
            write!(f, " {:>8}", format!("h{k}"))?;
        }
        writeln!(f)?;
        for (l, row) in self.max_kl.iter().enumerate() {
            write!(f, "{:>6}", format!("h{l}"))?;
            for v in row {
                write!(f, " {v:>8.4}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Build the first seed's graph and model and check both standing assumptions.
pub fn cmd_validate(spec: &ExperimentSpec, opts: &Options) -> Result<ValidateReport, RunnerError> {
    let (spec, _) = prepare(spec, opts);
    let seed = spec.run.seeds[0];
    let inst = spec.instance(seed).map_err(classify)?;
    let (network, model) = (&inst.network, &inst.model);
    if model.n_agents() != network.n_agents() {
        return Err(RunnerError::Invalid(Error::Parameter(format!(
            "network has {} agents but the model has {}",
            network.n_agents(),
            model.n_agents()
        ))));
    }
    model.check_hypothesis(spec.h_true()).map_err(classify)?;
    let m = model.n_hypotheses();
    let max_kl = (0..m)
        .map(|l| {
            (0..m)
                .map(|k| {
                    (0..model.n_agents())
                        .map(|j| model.kl_divergence(j, HypothesisId(l), HypothesisId(k)))
                        .fold(0.0, f64::max)
                })
                .collect()
        })
        .collect();
    let ident = model.check_global_identifiability();
    Ok(ValidateReport {
        seed,
        n_agents: network.n_agents(),
        n_edges: network.n_edges(),
        connected: network.is_strongly_connected(),
        unreachable: network.unreachable_pairs(),
        identifiable: ident.identifiable,
        failing_pairs: ident.failing_pairs,
        h_true: spec.h_true(),
        max_kl,
    })
}

/// Re-render the charts from CSVs already in the output directory.
///
/// Uses `compare_seed{S}.csv` when present, else `trajectory_seed{S}.csv`.
pub fn cmd_plot(spec: &ExperimentSpec, opts: &Options) -> Result<Report, RunnerError> {
    let (spec, out) = prepare(spec, opts);
    let mut seeds = Vec::new();
    for &seed in &spec.run.seeds {
        let compare = out.join(format!("compare_seed{seed}.csv"));
        let single = out.join(format!("trajectory_seed{seed}.csv"));
        let table = if compare.is_file() {
            CompareTable::read_file(&compare).map_err(at(&compare))?
        } else if single.is_file() {
            let traj = export::read_trajectory_file(&single).map_err(at(&single))?;
            let h_plot = spec.plot_hypothesis(traj.n_hypotheses());
            CompareTable::from_trajectories(&[(spec.sharing_mode().label().to_string(), &traj)], spec.h_true(), h_plot)
        } else {
            return Err(RunnerError::Io {
                path: compare,
                source: std::io::Error::new(
                    std::io::ErrorKind::NotFound,
                    format!("no comparison or trajectory CSV for seed {seed}"),
                ),
            });
        };
        let inst = spec.instance(seed).map_err(classify)?;
        let agent = spec.plot_agent(&inst.model);
        let bound = theoretical_rate_bound(&inst.model, table.h_true, table.h_plot).map_err(classify)?;
        let files = write_svgs(&out, seed, &table, agent, bound)?;
        seeds.push(SeedReport {
            seed,
            files,
            warnings: vec![],
            summaries: vec![],
            plotted: Some((agent, table.h_plot, bound)),
        });
    }
    Ok(Report { out_dir: out, seeds })
}
