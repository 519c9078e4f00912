//! Experiment specification files.
//!
//! A spec is a TOML document with four sections, `[graph]`, `[model]`,
//! `[run]` and `[output]`. Every key has a default, unknown keys are
//! rejected, and list values may be written either as arrays or as
//! comma-separated strings (`seeds = "1, 2, 3"`). Relative paths inside a
//! spec resolve against the directory containing the spec file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize};

use crate::engine::{RecordFlags, SharingMode, SimulationConfig, TauMode};
use crate::error::Result;
use crate::graph::{circulant, generate_k_regular_with_budget, read_edge_list, AgentId, Network};
use crate::model::{generate_random_model, HypothesisId, LikelihoodModel, ModelParams};
use crate::rng::{derive_seed, DOMAIN_GRAPH, DOMAIN_MODEL};

/// The bundled default spec (100 agents, 4-regular, 20 hypotheses, 500 signals).
pub const DEFAULT_SPEC: &str = include_str!("../../specs/default.toml");

const DEFAULT_AGENTS: usize = 100;
const DEFAULT_DEGREE: usize = 4;
const DEFAULT_PLOT_HYPOTHESIS: usize = 3;

/// A spec that failed to parse or validate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub struct SpecError {
    /// Dotted key such as `run.fixed_hypothesis`, when one is known.
    pub key: Option<String>,
    /// 1-based line in the spec text.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("spec error")?;
        if let Some(line) = self.line {
            write!(f, " at line {line}")?;
        }
        if let Some(key) = &self.key {
            write!(f, " in `{key}`")?;
        }
        write!(f, ": {}", self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphFamily {
    KRegular,
    Circulant,
    EdgeList,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSource {
    Random,
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    Full,
    PartialPrevious,
    PartialOwn,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauName {
    Global,
    PerAgent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphSpec {
    pub family: GraphFamily,
    /// Defaults to 100 for generated families; inferred for edge lists.
    pub n_agents: Option<usize>,
    /// Defaults to 4.
    pub degree: Option<usize>,
    pub seed: Option<u64>,
    pub path: Option<PathBuf>,
    pub undirected: bool,
    pub attempts: usize,
}

impl Default for GraphSpec {
    fn default() -> Self {
        Self {
            family: GraphFamily::KRegular,
            n_agents: None,
            degree: None,
            seed: None,
            path: None,
            undirected: true,
            attempts: crate::graph::DEFAULT_ATTEMPT_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSpec {
    pub source: ModelSource,
    pub n_hypotheses: usize,
    pub alphabet_size: usize,
    #[serde(deserialize_with = "opt_list")]
    pub alphabet_sizes: Option<Vec<usize>>,
    pub floor: f64,
    #[serde(deserialize_with = "list")]
    pub discriminating_agents: Vec<AgentId>,
    pub min_kl: f64,
    pub attempts: usize,
    pub true_hypothesis: usize,
    pub seed: Option<u64>,
    pub path: Option<PathBuf>,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            source: ModelSource::Random,
            n_hypotheses: 20,
            alphabet_size: 500,
            alphabet_sizes: None,
            floor: crate::model::DEFAULT_FLOOR,
            discriminating_agents: vec![0],
            min_kl: 0.05,
            attempts: crate::model::DEFAULT_MODEL_ATTEMPTS,
            true_hypothesis: 0,
            seed: None,
            path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSpec {
    pub mode: ModeName,
    pub fixed_hypothesis: Option<usize>,
    pub tau_mode: TauName,
    pub horizon: usize,
    #[serde(deserialize_with = "list")]
    pub seeds: Vec<u64>,
    pub record_local: bool,
    pub record_estimates: bool,
    pub record_tau: bool,
    pub record_every: usize,
    pub parallel: bool,
}

impl Default for RunSpec {
    fn default() -> Self {
        Self {
            mode: ModeName::Full,
            fixed_hypothesis: None,
            tau_mode: TauName::Global,
            horizon: 1000,
            seeds: vec![1],
            record_local: false,
            record_estimates: false,
            record_tau: false,
            record_every: 1,
            parallel: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    /// Relative to the working directory, not the spec file.
    pub dir: PathBuf,
    pub plots: bool,
    pub plot_agent: Option<AgentId>,
    pub plot_hypothesis: Option<usize>,
    pub threshold: f64,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), plots: true, plot_agent: None, plot_hypothesis: None, threshold: 0.99 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default)]
    pub graph: GraphSpec,
    #[serde(default)]
    pub model: ModelSpec,
    #[serde(default)]
    pub run: RunSpec,
    #[serde(default)]
    pub output: OutputSpec,
    /// Directory that relative input paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self::bundled()
    }
}

/// Graph and model for one run seed.
#[derive(Debug, Clone)]
pub struct Instance {
    pub network: Network,
    pub model: LikelihoodModel,
    /// Seed handed to the graph generator (`None` for edge lists).
    pub graph_seed: Option<u64>,
    /// Seed handed to the model generator (`None` for model files).
    pub model_seed: Option<u64>,
}

impl ExperimentSpec {
    pub fn bundled() -> Self {
        Self::from_toml(DEFAULT_SPEC, Path::new(".")).expect("bundled spec is valid")
    }

    /// Parse and validate spec text; `base_dir` anchors relative input paths.
    pub fn from_toml(text: &str, base_dir: &Path) -> std::result::Result<Self, SpecError> {
        let mut spec: ExperimentSpec = toml::from_str(text).map_err(|e| toml_error(text, &e))?;
        spec.base_dir = base_dir.to_path_buf();
        spec.check(text)?;
        Ok(spec)
    }

    /// Read, parse and validate a spec file.
    pub fn load(path: &Path) -> std::result::Result<Self, super::RunnerError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| super::RunnerError::Io { path: path.to_path_buf(), source })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self::from_toml(&text, &base)?)
    }

    /// Replace the first seed (the command-line override).
    pub fn override_seed(&mut self, seed: u64) {
        match self.run.seeds.first_mut() {
            Some(first) => *first = seed,
            None => self.run.seeds.push(seed),
        }
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn h_true(&self) -> HypothesisId {
        HypothesisId(self.model.true_hypothesis)
    }

    pub fn sharing_mode(&self) -> SharingMode {
        match self.run.mode {
            ModeName::Full => SharingMode::Full,
            ModeName::PartialPrevious => SharingMode::PartialPrevious,
            ModeName::PartialOwn => SharingMode::PartialOwn,
            ModeName::Fixed => SharingMode::Fixed(HypothesisId(self.run.fixed_hypothesis.unwrap_or(0))),
        }
    }

    pub fn tau_mode(&self) -> TauMode {
        match self.run.tau_mode {
            TauName::Global => TauMode::Global,
            TauName::PerAgent => TauMode::PerAgent,
        }
    }

    pub fn record_flags(&self) -> RecordFlags {
        RecordFlags {
            local: self.run.record_local,
            estimates: self.run.record_estimates,
            tau: self.run.record_tau,
            every: self.run.record_every,
        }
    }

    pub fn graph_seed(&self, run_seed: u64) -> u64 {
        self.graph.seed.unwrap_or_else(|| derive_seed(run_seed, DOMAIN_GRAPH))
    }

    pub fn model_seed(&self, run_seed: u64) -> u64 {
        self.model.seed.unwrap_or_else(|| derive_seed(run_seed, DOMAIN_MODEL))
    }

    pub fn build_network(&self, run_seed: u64) -> Result<Network> {
        let g = &self.graph;
        let n = g.n_agents.unwrap_or(DEFAULT_AGENTS);
        let k = g.degree.unwrap_or(DEFAULT_DEGREE);
        match g.family {
            GraphFamily::KRegular => generate_k_regular_with_budget(n, k, self.graph_seed(run_seed), g.attempts),
            GraphFamily::Circulant => circulant(n, k),
            GraphFamily::EdgeList => {
                let path = self.resolve(g.path.as_deref().unwrap_or(Path::new("")));
                read_edge_list(&path, g.n_agents, g.undirected)
            }
        }
    }

    pub fn build_model(&self, n_agents: usize, run_seed: u64) -> Result<LikelihoodModel> {
        let m = &self.model;
        match m.source {
            ModelSource::File => LikelihoodModel::load(&self.resolve(m.path.as_deref().unwrap_or(Path::new("")))),
            ModelSource::Random => {
                let params = ModelParams {
                    n_agents,
                    n_hypotheses: m.n_hypotheses,
                    alphabet_sizes: m.alphabet_sizes.clone().unwrap_or_else(|| vec![m.alphabet_size; n_agents]),
                    floor: m.floor,
                    discriminating_agents: m.discriminating_agents.clone(),
                    min_kl: m.min_kl,
                    attempts: m.attempts,
                };
                generate_random_model(&params, self.model_seed(run_seed))
            }
        }
    }

    pub fn instance(&self, run_seed: u64) -> Result<Instance> {
        let network = self.build_network(run_seed)?;
        let model = self.build_model(network.n_agents(), run_seed)?;
        Ok(Instance {
            graph_seed: matches!(self.graph.family, GraphFamily::KRegular).then(|| self.graph_seed(run_seed)),
            model_seed: matches!(self.model.source, ModelSource::Random).then(|| self.model_seed(run_seed)),
            network,
            model,
        })
    }

    /// Simulation config for `instance` under `mode`, seeded with `run_seed`.
    pub fn config(&self, instance: &Instance, run_seed: u64, mode: SharingMode) -> SimulationConfig {
        SimulationConfig::new(instance.network.clone(), instance.model.clone(), self.h_true(), mode)
            .with_tau_mode(self.tau_mode())
            .with_horizon(self.run.horizon)
            .with_seed(run_seed)
            .with_record(self.record_flags())
    }

    /// Hypothesis shown in rate plots: the configured one, else `h3` when it
    /// exists and is false, else the first false hypothesis.
    pub fn plot_hypothesis(&self, n_hypotheses: usize) -> HypothesisId {
        let h_true = self.model.true_hypothesis;
        if let Some(h) = self.output.plot_hypothesis {
            return HypothesisId(h);
        }
        if DEFAULT_PLOT_HYPOTHESIS < n_hypotheses && DEFAULT_PLOT_HYPOTHESIS != h_true {
            return HypothesisId(DEFAULT_PLOT_HYPOTHESIS);
        }
        HypothesisId((0..n_hypotheses).find(|&h| h != h_true).unwrap_or(0))
    }

    /// Agent shown in plots: the configured one, else the lowest-indexed
    /// agent that cannot separate `h_true` from the plotted hypothesis,
    /// else agent 0.
    pub fn plot_agent(&self, model: &LikelihoodModel) -> AgentId {
        if let Some(a) = self.output.plot_agent {
            return a;
        }
        let h = self.plot_hypothesis(model.n_hypotheses());
        crate::metrics::first_non_discriminating(model, self.h_true(), h).ok().flatten().unwrap_or(0)
    }

    fn check(&self, text: &str) -> std::result::Result<(), SpecError> {
        let fail = |section: &str, key: &str, message: String| {
            Err(SpecError { key: Some(format!("{section}.{key}")), line: locate(text, section, key), message })
        };
        let g = &self.graph;
        let known_n = match g.family {
            GraphFamily::EdgeList => g.n_agents,
            _ => Some(g.n_agents.unwrap_or(DEFAULT_AGENTS)),
        };
        if known_n == Some(0) {
            return fail("graph", "n_agents", "must be at least 1".into());
        }
        if g.attempts == 0 {
            return fail("graph", "attempts", "must be at least 1".into());
        }
        match g.family {
            GraphFamily::KRegular | GraphFamily::Circulant => {
                let n = known_n.unwrap_or(DEFAULT_AGENTS);
                let k = g.degree.unwrap_or(DEFAULT_DEGREE);
                if k == 0 || k >= n {
                    return fail(
                        "graph",
                        "degree",
                        format!("degree {k} must lie in [1, n_agents) with n_agents = {n}"),
                    );
                }
                if g.family == GraphFamily::KRegular && n * k % 2 == 1 {
                    return fail("graph", "degree", format!("n_agents * degree = {n} * {k} must be even"));
                }
            }
            GraphFamily::EdgeList => match &g.path {
                None => return fail("graph", "path", "required when family = \"edge_list\"".into()),
                Some(p) if !self.resolve(p).is_file() => {
                    return fail("graph", "path", format!("file {} does not exist", self.resolve(p).display()))
                }
                Some(_) => {}
            },
        }

        let m = &self.model;
        let n_hyp = match m.source {
            ModelSource::File => {
                match &m.path {
                    None => return fail("model", "path", "required when source = \"file\"".into()),
                    Some(p) if !self.resolve(p).is_file() => {
                        return fail("model", "path", format!("file {} does not exist", self.resolve(p).display()))
                    }
                    Some(_) => {}
                }
                None
            }
            ModelSource::Random => {
                if m.n_hypotheses < 2 {
                    return fail("model", "n_hypotheses", format!("need at least 2, got {}", m.n_hypotheses));
                }
                let sizes = m.alphabet_sizes.clone().unwrap_or_else(|| vec![m.alphabet_size]);
                if sizes.contains(&0) {
                    let key = if m.alphabet_sizes.is_some() { "alphabet_sizes" } else { "alphabet_size" };
                    return fail("model", key, "alphabet sizes must be at least 1".into());
                }
                if let (Some(list), Some(n)) = (&m.alphabet_sizes, known_n) {
                    if list.len() != n {
                        return fail("model", "alphabet_sizes", format!("{} sizes for {n} agents", list.len()));
                    }
                }
                let max_size = sizes.iter().copied().max().unwrap_or(1);
                if !(m.floor > 0.0 && m.floor < 1.0 / max_size as f64) {
                    return fail("model", "floor", format!("{} must lie in (0, 1/{max_size})", m.floor));
                }
                if !(m.min_kl >= 0.0 && m.min_kl.is_finite()) {
                    return fail("model", "min_kl", format!("must be a nonnegative number, got {}", m.min_kl));
                }
                if m.attempts == 0 {
                    return fail("model", "attempts", "must be at least 1".into());
                }
                if let Some(n) = known_n {
                    if let Some(bad) = m.discriminating_agents.iter().find(|&&a| a >= n) {
                        return fail(
                            "model",
                            "discriminating_agents",
                            format!("agent {bad} out of range for {n} agents"),
                        );
                    }
                }
                Some(m.n_hypotheses)
            }
        };
        let in_range = |h: usize| n_hyp.is_none_or(|m| h < m);
        if !in_range(m.true_hypothesis) {
            return fail(
                "model",
                "true_hypothesis",
                format!("{} out of range for {} hypotheses", m.true_hypothesis, m.n_hypotheses),
            );
        }

        let r = &self.run;
        if r.mode == ModeName::Fixed {
            match r.fixed_hypothesis {
                None => return fail("run", "fixed_hypothesis", "required when mode = \"fixed\"".into()),
                Some(h) if !in_range(h) => {
                    return fail(
                        "run",
                        "fixed_hypothesis",
                        format!("{h} out of range for {} hypotheses", m.n_hypotheses),
                    )
                }
                Some(_) => {}
            }
        }
        if r.seeds.is_empty() {
            return fail("run", "seeds", "at least one seed is required".into());
        }
        let mut sorted = r.seeds.clone();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return fail("run", "seeds", format!("seed {} listed twice", w[0]));
        }
        if r.record_every == 0 {
            return fail("run", "record_every", "must be at least 1".into());
        }

        let o = &self.output;
        if !(o.threshold > 0.0 && o.threshold < 1.0) {
            return fail("output", "threshold", format!("{} must lie in (0, 1)", o.threshold));
        }
        if let Some(h) = o.plot_hypothesis {
            if !in_range(h) {
                return fail(
                    "output",
                    "plot_hypothesis",
                    format!("{h} out of range for {} hypotheses", m.n_hypotheses),
                );
            }
            if h == m.true_hypothesis {
                return fail("output", "plot_hypothesis", "must differ from model.true_hypothesis".into());
            }
        }
        if let (Some(a), Some(n)) = (o.plot_agent, known_n) {
            if a >= n {
                return fail("output", "plot_agent", format!("agent {a} out of range for {n} agents"));
            }
        }
        Ok(())
    }
}

fn toml_error(text: &str, e: &toml::de::Error) -> SpecError {
    let line = e.span().map(|s| line_of(text, s.start));
    let key = line.and_then(|l| {
        let src = text.lines().nth(l - 1)?;
        let (k, _) = src.split_once('=')?;
        let k = k.trim();
        (!k.is_empty() && !k.starts_with('[')).then(|| k.to_string())
    });
    let key = key.map(|k| match section_at(text, line.unwrap_or(1)) {
        Some(s) => format!("{s}.{k}"),
        None => k,
    });
    SpecError { key, line, message: e.message().trim().to_string() }
}

fn line_of(text: &str, offset: usize) -> usize {
    text.as_bytes()[..offset.min(text.len())].iter().filter(|&&b| b == b'\n').count() + 1
}

fn section_at(text: &str, line: usize) -> Option<String> {
    text.lines()
        .take(line)
        .filter_map(|l| l.trim().strip_prefix('[')?.split(']').next().map(|s| s.trim().to_string()))
        .last()
}

/// Line of `key = ...` inside `[section]`, else the section header, else `None`.
fn locate(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = None::<String>;
    let mut header = None;
    for (idx, raw) in text.lines().enumerate() {
        let l = raw.trim();
        if let Some(rest) = l.strip_prefix('[') {
            let name = rest.split(']').next().unwrap_or("").trim().to_string();
            if name == section {
                header = Some(idx + 1);
            }
            current = Some(name);
            continue;
        }
        if current.as_deref() == Some(section) {
            if let Some((k, _)) = l.split_once('=') {
                if k.trim() == key {
                    return Some(idx + 1);
                }
            }
        }
    }
    header
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawList<T> {
    Items(Vec<T>),
    Text(String),
}

fn list<'de, D, T>(d: D) -> std::result::Result<Vec<T>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de> + FromStr,
    T::Err: fmt::Display,
{
    match RawList::<T>::deserialize(d)? {
        RawList::Items(v) => Ok(v),
        RawList::Text(s) => s
            .split(',')
            .map(str::trim)
            .filter(|x| !x.is_empty())
            .map(|x| x.parse().map_err(|e| D::Error::custom(format!("invalid list item `{x}`: {e}"))))
            .collect(),
    }
}

fn opt_list<'de, D, T>(d: D) -> std::result::Result<Option<Vec<T>>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de> + FromStr,
    T::Err: fmt::Display,
{
    list(d).map(Some)
}
