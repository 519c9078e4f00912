//! Synchronous round-based simulation of the learning process.
//!
//! Each round has two phases. First every random quantity of the round is
//! drawn ([`RoundDraws`]): one observation per agent from that agent's stream
//! and the hypothesis each agent shares. Then every agent's new state is
//! computed as a pure function of the previous-round snapshot and the draws,
//! so agents can be processed in any order, or in parallel, with identical
//! results.

use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::belief::{
    estimate_update_own, estimate_update_previous, local_update_log, min_rule, BeliefVector, SharedMessage,
};
use crate::error::{param, Error, Result};
use crate::graph::{AgentId, Network};
use crate::model::{HypothesisId, LikelihoodModel, ObservationSampler};
use crate::rng::{derive_stream, StreamRng, DOMAIN_OBSERVATION, DOMAIN_TAU_AGENT, DOMAIN_TAU_GLOBAL};

/// How beliefs are shared with neighbors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SharingMode {
    /// Whole belief vectors are exchanged every round.
    Full,
    /// One hypothesis per round; missing entries come from stored estimates.
    PartialPrevious,
    /// One hypothesis per round; missing entries come from the receiver's own belief.
    PartialOwn,
    /// Always the same hypothesis, with stored estimates.
    Fixed(HypothesisId),
}

impl SharingMode {
    pub const COMPARED: [SharingMode; 3] = [SharingMode::Full, SharingMode::PartialPrevious, SharingMode::PartialOwn];

    pub fn label(self) -> &'static str {
        match self {
            SharingMode::Full => "full",
            SharingMode::PartialPrevious => "partial_previous",
            SharingMode::PartialOwn => "partial_own",
            SharingMode::Fixed(_) => "fixed",
        }
    }

    fn stores_estimates(self) -> bool {
        matches!(self, SharingMode::PartialPrevious | SharingMode::Fixed(_))
    }
}

impl fmt::Display for SharingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SharingMode::Fixed(h) => write!(f, "fixed({h})"),
            other => f.write_str(other.label()),
        }
    }
}

/// Who draws the shared hypothesis each round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TauMode {
    /// One uniform draw per round shared by all agents.
    Global,
    /// Every agent draws the hypothesis it shares independently.
    PerAgent,
}

impl TauMode {
    pub fn label(self) -> &'static str {
        match self {
            TauMode::Global => "global",
            TauMode::PerAgent => "per_agent",
        }
    }
}

/// Which series a run keeps besides the public beliefs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordFlags {
    pub local: bool,
    pub estimates: bool,
    pub tau: bool,
    /// Keep every `every`-th round (the final round is always kept).
    pub every: usize,
}

impl Default for RecordFlags {
    fn default() -> Self {
        Self { local: false, estimates: false, tau: false, every: 1 }
    }
}

impl RecordFlags {
    pub fn everything() -> Self {
        Self { local: true, estimates: true, tau: true, every: 1 }
    }
}

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub network: Network,
    pub model: LikelihoodModel,
    pub h_true: HypothesisId,
    pub mode: SharingMode,
    pub tau_mode: TauMode,
    pub horizon: usize,
    pub master_seed: u64,
    pub record: RecordFlags,
}

impl SimulationConfig {
    pub fn new(network: Network, model: LikelihoodModel, h_true: HypothesisId, mode: SharingMode) -> Self {
        Self {
            network,
            model,
            h_true,
            mode,
            tau_mode: TauMode::Global,
            horizon: 1000,
            master_seed: 0,
            record: RecordFlags::default(),
        }
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn with_tau_mode(mut self, tau_mode: TauMode) -> Self {
        self.tau_mode = tau_mode;
        self
    }

    pub fn with_mode(mut self, mode: SharingMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_record(mut self, record: RecordFlags) -> Self {
        self.record = record;
        self
    }

    pub fn n_hypotheses(&self) -> usize {
        self.model.n_hypotheses()
    }

    /// Check hard invariants; returns soft warnings (identifiability).
    pub fn validate(&self) -> Result<Vec<String>> {
        let n = self.network.n_agents();
        if self.model.n_agents() != n {
            return param(format!("network has {n} agents but the model has {}", self.model.n_agents()));
        }
        self.model.check_hypothesis(self.h_true)?;
        if let SharingMode::Fixed(h) = self.mode {
            self.model.check_hypothesis(h)?;
        }
        if self.record.every == 0 {
            return param("record interval must be at least 1");
        }
        if !self.network.is_strongly_connected() {
            return param("communication network is not strongly connected");
        }
        let mut warnings = Vec::new();
        if !matches!(self.mode, SharingMode::Fixed(_)) {
            let report = self.model.check_global_identifiability();
            if !report.identifiable {
                warnings.push(format!(
                    "model is not globally identifiable: {} indistinguishable pair(s), first {} vs {}",
                    report.failing_pairs.len(),
                    report.failing_pairs[0].0,
                    report.failing_pairs[0].1
                ));
            }
        }
        Ok(warnings)
    }

    /// SHA-256 over every input that influences the trajectory.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.network.n_agents() as u64).to_le_bytes());
        for (i, j) in self.network.edges() {
            h.update((i as u64).to_le_bytes());
            h.update((j as u64).to_le_bytes());
        }
        h.update((self.model.n_hypotheses() as u64).to_le_bytes());
        for i in 0..self.model.n_agents() {
            for p in self.model.table(i) {
                h.update(p.to_bits().to_le_bytes());
            }
        }
        h.update(format!(
            "{}|{}|{}|{}|{}",
            self.h_true.0,
            self.mode,
            self.tau_mode.label(),
            self.horizon,
            self.master_seed
        ));
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// State of one agent after a round.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    /// Local (private Bayesian) belief.
    pub alpha: BeliefVector,
    /// Public belief, the one neighbors read.
    pub beta: BeliefVector,
    /// Estimates of neighbors' public beliefs, keyed by neighbor id. Only
    /// populated when the sharing mode stores estimates.
    pub estimates: BTreeMap<AgentId, BeliefVector>,
}

/// All agents start from the uniform belief, including their estimates.
pub fn initial_states(config: &SimulationConfig) -> Result<Vec<AgentState>> {
    let uniform = BeliefVector::uniform(config.n_hypotheses())?;
    let stores = config.mode.stores_estimates();
    Ok((0..config.network.n_agents())
        .map(|i| AgentState {
            alpha: uniform.clone(),
            beta: uniform.clone(),
            estimates: if stores {
                config.network.neighbors_unchecked(i).iter().map(|&j| (j, uniform.clone())).collect()
            } else {
                BTreeMap::new()
            },
        })
        .collect())
}

/// Independent random streams of one run, all derived from the master seed.
#[derive(Debug, Clone)]
pub struct RngStreams {
    pub observation: Vec<StreamRng>,
    pub tau_global: StreamRng,
    pub tau_agent: Vec<StreamRng>,
}

impl RngStreams {
    pub fn new(master_seed: u64, n_agents: usize) -> Self {
        Self {
            observation: (0..n_agents).map(|i| derive_stream(master_seed, DOMAIN_OBSERVATION, i as u64)).collect(),
            tau_global: derive_stream(master_seed, DOMAIN_TAU_GLOBAL, 0),
            tau_agent: (0..n_agents).map(|i| derive_stream(master_seed, DOMAIN_TAU_AGENT, i as u64)).collect(),
        }
    }
}

/// The hypothesis each agent shares this round.
pub fn select_tau(
    tau_mode: TauMode,
    mode: SharingMode,
    m: usize,
    n_agents: usize,
    streams: &mut RngStreams,
) -> Vec<HypothesisId> {
    match (mode, tau_mode) {
        (SharingMode::Fixed(h), _) => vec![h; n_agents],
        (_, TauMode::Global) => vec![HypothesisId(streams.tau_global.random_range(0..m)); n_agents],
        (_, TauMode::PerAgent) => {
            streams.tau_agent.iter_mut().map(|rng| HypothesisId(rng.random_range(0..m))).collect()
        }
    }
}

/// Everything random about one round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundDraws {
    /// `o_{i,t}` per agent.
    pub observations: Vec<usize>,
    /// Hypothesis whose belief agent `j` shares this round.
    pub taus: Vec<HypothesisId>,
}

impl RoundDraws {
    pub fn draw(config: &SimulationConfig, sampler: &ObservationSampler, streams: &mut RngStreams) -> Self {
        let n = config.network.n_agents();
        let observations = streams.observation.iter_mut().enumerate().map(|(i, rng)| sampler.sample(i, rng)).collect();
        let taus = select_tau(config.tau_mode, config.mode, config.n_hypotheses(), n, streams);
        Self { observations, taus }
    }
}

/// One synchronous round for all agents, processed in index order.
pub fn step(
    prev: &[AgentState],
    round: usize,
    config: &SimulationConfig,
    draws: &RoundDraws,
) -> Result<Vec<AgentState>> {
    (0..prev.len()).map(|i| update_agent(i, prev, round, config, draws)).collect()
}

/// [`step`] with agents processed in the given order.
pub fn step_in_order(
    prev: &[AgentState],
    round: usize,
    config: &SimulationConfig,
    draws: &RoundDraws,
    order: &[AgentId],
) -> Result<Vec<AgentState>> {
    if order.len() != prev.len() {
        return param("processing order must list every agent once");
    }
    let mut slots: Vec<Option<AgentState>> = vec![None; prev.len()];
    for &i in order {
        if i >= prev.len() || slots[i].is_some() {
            return param(format!("processing order is not a permutation (agent {i})"));
        }
        slots[i] = Some(update_agent(i, prev, round, config, draws)?);
    }
    Ok(slots.into_iter().map(|s| s.expect("every slot filled")).collect())
}

/// [`step`] with agents updated concurrently.
pub fn step_parallel(
    prev: &[AgentState],
    round: usize,
    config: &SimulationConfig,
    draws: &RoundDraws,
) -> Result<Vec<AgentState>> {
    (0..prev.len()).into_par_iter().map(|i| update_agent(i, prev, round, config, draws)).collect()
}

fn update_agent(
    i: AgentId,
    prev: &[AgentState],
    round: usize,
    config: &SimulationConfig,
    draws: &RoundDraws,
) -> Result<AgentState> {
    let wrap = |source: Error| Error::Engine { agent: i, round, source: Box::new(source) };
    let own = &prev[i];
    let alpha = local_update_log(&own.alpha, config.model.log_row(i, draws.observations[i])).map_err(wrap)?;
    let neighbors = config.network.neighbors_unchecked(i);
    let message = |j: AgentId| SharedMessage::from_belief(&prev[j].beta, draws.taus[j]);

    let (beta, estimates) = match config.mode {
        SharingMode::Full => {
            let beta = min_rule(&own.beta, neighbors.iter().map(|&j| &prev[j].beta), &alpha).map_err(wrap)?;
            (beta, BTreeMap::new())
        }
        SharingMode::PartialPrevious | SharingMode::Fixed(_) => {
            let mut estimates = BTreeMap::new();
            for &j in neighbors {
                let stored = own
                    .estimates
                    .get(&j)
                    .ok_or_else(|| wrap(Error::Data(format!("missing estimate of neighbor {j}"))))?;
                estimates.insert(j, estimate_update_previous(stored, &message(j)).map_err(wrap)?);
            }
            let beta = min_rule(&own.beta, estimates.values(), &alpha).map_err(wrap)?;
            (beta, estimates)
        }
        SharingMode::PartialOwn => {
            let transient = neighbors
                .iter()
                .map(|&j| estimate_update_own(&own.beta, &message(j)))
                .collect::<Result<Vec<_>>>()
                .map_err(wrap)?;
            let beta = min_rule(&own.beta, transient.iter(), &alpha).map_err(wrap)?;
            (beta, BTreeMap::new())
        }
    };
    Ok(AgentState { alpha, beta, estimates })
}

/// Step-by-step driver owning the states and random streams of one run.
#[derive(Debug, Clone)]
pub struct Simulation<'a> {
    config: &'a SimulationConfig,
    sampler: ObservationSampler,
    streams: RngStreams,
    states: Vec<AgentState>,
    round: usize,
    parallel: bool,
}

impl<'a> Simulation<'a> {
    pub fn new(config: &'a SimulationConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            sampler: config.model.sampler(config.h_true),
            streams: RngStreams::new(config.master_seed, config.network.n_agents()),
            states: initial_states(config)?,
            round: 0,
            parallel: false,
        })
    }

    pub fn parallel(mut self, on: bool) -> Self {
        self.parallel = on;
        self
    }

    pub fn states(&self) -> &[AgentState] {
        &self.states
    }

    pub fn round(&self) -> usize {
        self.round
    }

    /// Draw the next round's randomness and advance all agents.
    pub fn advance(&mut self) -> Result<RoundDraws> {
        let draws = RoundDraws::draw(self.config, &self.sampler, &mut self.streams);
        let t = self.round + 1;
        self.states = if self.parallel {
            step_parallel(&self.states, t, self.config, &draws)?
        } else {
            step(&self.states, t, self.config, &draws)?
        };
        self.round = t;
        Ok(draws)
    }

    /// Like [`Simulation::advance`] with an explicit agent processing order.
    pub fn advance_in_order(&mut self, order: &[AgentId]) -> Result<RoundDraws> {
        let draws = RoundDraws::draw(self.config, &self.sampler, &mut self.streams);
        let t = self.round + 1;
        self.states = step_in_order(&self.states, t, self.config, &draws, order)?;
        self.round = t;
        Ok(draws)
    }
}

/// A failed run together with everything recorded before the failure.
#[derive(Debug, Error)]
#[error("{source}")]
pub struct RunError {
    pub source: Error,
    pub partial: Box<Trajectory>,
}

impl From<RunError> for Error {
    fn from(e: RunError) -> Self {
        e.source
    }
}

/// Execute the configured horizon and return the recorded trajectory.
pub fn run(config: &SimulationConfig) -> std::result::Result<Trajectory, RunError> {
    run_with(config, false)
}

/// [`run`] with per-round agent updates spread over the rayon pool.
pub fn run_parallel(config: &SimulationConfig) -> std::result::Result<Trajectory, RunError> {
    run_with(config, true)
}

fn run_with(config: &SimulationConfig, parallel: bool) -> std::result::Result<Trajectory, RunError> {
    let started = Instant::now();
    let mut traj = Trajectory::empty(config);
    let mut sim = match Simulation::new(config) {
        Ok(sim) => sim.parallel(parallel),
        Err(source) => return Err(RunError { source, partial: Box::new(traj) }),
    };
    traj.push(0, sim.states(), None, &config.record);
    for t in 1..=config.horizon {
        match sim.advance() {
            Ok(draws) => {
                if t % config.record.every == 0 || t == config.horizon {
                    traj.push(t, sim.states(), Some(&draws.taus), &config.record);
                }
            }
            Err(source) => {
                traj.meta.wall_time_secs = started.elapsed().as_secs_f64();
                return Err(RunError { source, partial: Box::new(traj) });
            }
        }
    }
    traj.meta.wall_time_secs = started.elapsed().as_secs_f64();
    Ok(traj)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub config_digest: String,
    pub master_seed: u64,
    pub h_true: HypothesisId,
    pub mode: String,
    pub tau_mode: String,
    pub horizon: usize,
    pub wall_time_secs: f64,
}

/// Recorded public beliefs (always) plus optional local beliefs, estimates
/// and shared-hypothesis draws, indexed by recorded round.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    n_agents: usize,
    n_hypotheses: usize,
    rounds: Vec<usize>,
    public: Vec<f64>,
    local: Option<Vec<f64>>,
    estimates: Option<Vec<Vec<BTreeMap<AgentId, BeliefVector>>>>,
    taus: Option<Vec<Vec<HypothesisId>>>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    fn empty(config: &SimulationConfig) -> Self {
        let rec = config.record;
        Self {
            n_agents: config.network.n_agents(),
            n_hypotheses: config.n_hypotheses(),
            rounds: Vec::new(),
            public: Vec::new(),
            local: rec.local.then(Vec::new),
            estimates: rec.estimates.then(Vec::new),
            taus: rec.tau.then(Vec::new),
            meta: TrajectoryMeta {
                config_digest: config.digest(),
                master_seed: config.master_seed,
                h_true: config.h_true,
                mode: config.mode.to_string(),
                tau_mode: config.tau_mode.label().to_string(),
                horizon: config.horizon,
                wall_time_secs: 0.0,
            },
        }
    }

    /// Build from public log-beliefs laid out `[round][agent][hypothesis]`.
    pub fn from_public(
        n_agents: usize,
        n_hypotheses: usize,
        rounds: Vec<usize>,
        public: Vec<f64>,
        meta: TrajectoryMeta,
    ) -> Result<Self> {
        if public.len() != rounds.len() * n_agents * n_hypotheses {
            return Err(Error::Data(format!(
                "{} values for {} rounds x {n_agents} agents x {n_hypotheses} hypotheses",
                public.len(),
                rounds.len()
            )));
        }
        if rounds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Data("recorded rounds must be strictly increasing".into()));
        }
        Ok(Self { n_agents, n_hypotheses, rounds, public, local: None, estimates: None, taus: None, meta })
    }

    fn push(&mut self, t: usize, states: &[AgentState], taus: Option<&[HypothesisId]>, rec: &RecordFlags) {
        self.rounds.push(t);
        for s in states {
            self.public.extend_from_slice(s.beta.log_probs());
        }
        if let Some(local) = self.local.as_mut() {
            for s in states {
                local.extend_from_slice(s.alpha.log_probs());
            }
        }
        if let Some(est) = self.estimates.as_mut() {
            est.push(states.iter().map(|s| s.estimates.clone()).collect());
        }
        if let (Some(all), true) = (self.taus.as_mut(), rec.tau) {
            all.push(taus.map(<[_]>::to_vec).unwrap_or_default());
        }
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn n_hypotheses(&self) -> usize {
        self.n_hypotheses
    }

    /// Recorded round numbers, starting with 0.
    pub fn rounds(&self) -> &[usize] {
        &self.rounds
    }

    pub fn n_recorded(&self) -> usize {
        self.rounds.len()
    }

    /// Position of round `t` among the recorded rounds.
    pub fn index_of(&self, t: usize) -> Option<usize> {
        self.rounds.binary_search(&t).ok()
    }

    fn offset(&self, idx: usize, agent: AgentId) -> usize {
        (idx * self.n_agents + agent) * self.n_hypotheses
    }

    /// Public log-beliefs of `agent` at recorded index `idx`.
    pub fn public_log(&self, idx: usize, agent: AgentId) -> &[f64] {
        let o = self.offset(idx, agent);
        &self.public[o..o + self.n_hypotheses]
    }

    pub fn log_belief(&self, idx: usize, agent: AgentId, h: HypothesisId) -> f64 {
        self.public[self.offset(idx, agent) + h.0]
    }

    pub fn local_log(&self, idx: usize, agent: AgentId) -> Option<&[f64]> {
        let o = self.offset(idx, agent);
        self.local.as_ref().map(|l| &l[o..o + self.n_hypotheses])
    }

    pub fn estimates(&self, idx: usize, agent: AgentId) -> Option<&BTreeMap<AgentId, BeliefVector>> {
        self.estimates.as_ref().map(|e| &e[idx][agent])
    }

    /// Shared hypotheses per agent at recorded index `idx` (empty at round 0).
    pub fn taus(&self, idx: usize) -> Option<&[HypothesisId]> {
        self.taus.as_ref().map(|t| t[idx].as_slice())
    }

    pub fn final_public_log(&self, agent: AgentId) -> &[f64] {
        self.public_log(self.rounds.len() - 1, agent)
    }
}
