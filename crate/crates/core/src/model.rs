//! Per-agent likelihood tables, observation sampling, KL divergences and the
//! global identifiability check.

use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::graph::AgentId;
use crate::rng::StreamRng;

/// Default lower bound on generated likelihood entries.
pub const DEFAULT_FLOOR: f64 = 1e-6;
/// KL values at or below this are treated as "cannot distinguish".
pub const KL_ZERO_TOLERANCE: f64 = 1e-12;
/// Allowed deviation of a likelihood column sum from one.
pub const COLUMN_SUM_TOLERANCE: f64 = 1e-12;
/// Regeneration attempts per discriminating agent.
pub const DEFAULT_MODEL_ATTEMPTS: usize = 1000;

/// Index of a hypothesis; `HypothesisId(0)` is `h_1` in one-based notation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct HypothesisId(pub usize);

impl HypothesisId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for HypothesisId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "h{}", self.0)
    }
}

/// Likelihood functions `f_i(o | h)` for every agent.
///
/// Tables are stored row-major: entry `o * M + h` of agent `i`'s table is
/// `f_i(o | h)`. Every entry is strictly positive and every column sums to one.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodModel {
    n_hypotheses: usize,
    alphabet_sizes: Vec<usize>,
    tables: Vec<Vec<f64>>,
    log_tables: Vec<Vec<f64>>,
}

impl LikelihoodModel {
    /// Build from row-major tables, validating every invariant.
    pub fn new(n_hypotheses: usize, alphabet_sizes: Vec<usize>, tables: Vec<Vec<f64>>) -> Result<Self> {
        if n_hypotheses < 2 {
            return param(format!("need at least 2 hypotheses, got {n_hypotheses}"));
        }
        if alphabet_sizes.is_empty() {
            return param("model needs at least one agent");
        }
        if alphabet_sizes.len() != tables.len() {
            return param(format!("{} alphabet sizes but {} tables", alphabet_sizes.len(), tables.len()));
        }
        for (i, (&size, table)) in alphabet_sizes.iter().zip(&tables).enumerate() {
            if size == 0 {
                return param(format!("agent {i}: empty observation alphabet"));
            }
            if table.len() != size * n_hypotheses {
                return param(format!("agent {i}: table has {} entries, expected {size}x{n_hypotheses}", table.len()));
            }
            if let Some(bad) = table.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
                return Err(Error::Domain(format!("agent {i}: likelihood entry {bad} is not positive")));
            }
            for h in 0..n_hypotheses {
                let sum: f64 = (0..size).map(|o| table[o * n_hypotheses + h]).sum();
                if (sum - 1.0).abs() > COLUMN_SUM_TOLERANCE {
                    return Err(Error::Domain(format!("agent {i}: column h{h} sums to {sum}, not 1")));
                }
            }
        }
        let log_tables = tables.iter().map(|t| t.iter().map(|p| p.ln()).collect()).collect();
        Ok(Self { n_hypotheses, alphabet_sizes, tables, log_tables })
    }

    /// Build from columns: `columns[i][h]` is the distribution `f_i(· | h)`.
    pub fn from_columns(columns: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let m = columns.first().map_or(0, Vec::len);
        let mut sizes = Vec::with_capacity(columns.len());
        let mut tables = Vec::with_capacity(columns.len());
        for (i, agent) in columns.iter().enumerate() {
            if agent.len() != m {
                return param(format!("agent {i} has {} columns, expected {m}", agent.len()));
            }
            let size = agent[0].len();
            if agent.iter().any(|c| c.len() != size) {
                return param(format!("agent {i}: columns of unequal length"));
            }
            let mut table = vec![0.0; size * m];
            for (h, col) in agent.iter().enumerate() {
                for (o, &p) in col.iter().enumerate() {
                    table[o * m + h] = p;
                }
            }
            sizes.push(size);
            tables.push(table);
        }
        Self::new(m, sizes, tables)
    }

    pub fn n_agents(&self) -> usize {
        self.tables.len()
    }

    pub fn n_hypotheses(&self) -> usize {
        self.n_hypotheses
    }

    pub fn alphabet_size(&self, i: AgentId) -> usize {
        self.alphabet_sizes[i]
    }

    pub fn alphabet_sizes(&self) -> &[usize] {
        &self.alphabet_sizes
    }

    pub fn table(&self, i: AgentId) -> &[f64] {
        &self.tables[i]
    }

    pub fn prob(&self, i: AgentId, o: usize, h: HypothesisId) -> f64 {
        self.tables[i][o * self.n_hypotheses + h.0]
    }

    /// `f_i(o | ·)` across hypotheses.
    pub fn row(&self, i: AgentId, o: usize) -> &[f64] {
        let m = self.n_hypotheses;
        &self.tables[i][o * m..(o + 1) * m]
    }

    /// `ln f_i(o | ·)` across hypotheses.
    pub fn log_row(&self, i: AgentId, o: usize) -> &[f64] {
        let m = self.n_hypotheses;
        &self.log_tables[i][o * m..(o + 1) * m]
    }

    /// The distribution `f_i(· | h)` over observations.
    pub fn column(&self, i: AgentId, h: HypothesisId) -> Vec<f64> {
        (0..self.alphabet_sizes[i]).map(|o| self.prob(i, o, h)).collect()
    }

    /// `K_i(h_l, h_k) = Σ_o f_i(o|h_l) ln(f_i(o|h_l) / f_i(o|h_k))`, in nats.
    pub fn kl_divergence(&self, i: AgentId, hl: HypothesisId, hk: HypothesisId) -> f64 {
        let m = self.n_hypotheses;
        let (t, lt) = (&self.tables[i], &self.log_tables[i]);
        (0..self.alphabet_sizes[i]).map(|o| t[o * m + hl.0] * (lt[o * m + hl.0] - lt[o * m + hk.0])).sum()
    }

    /// Agents whose KL divergence for `(h_l, h_k)` exceeds [`KL_ZERO_TOLERANCE`].
    pub fn discriminating_set(&self, hl: HypothesisId, hk: HypothesisId) -> Result<Vec<AgentId>> {
        self.check_hypothesis(hl)?;
        self.check_hypothesis(hk)?;
        if hl == hk {
            return param(format!("discriminating set needs distinct hypotheses, got {hl} twice"));
        }
        Ok((0..self.n_agents()).filter(|&i| self.kl_divergence(i, hl, hk) > KL_ZERO_TOLERANCE).collect())
    }

    /// Every unordered pair must be distinguished by at least one agent.
    pub fn check_global_identifiability(&self) -> IdentifiabilityReport {
        let mut failing_pairs = Vec::new();
        for l in 0..self.n_hypotheses {
            for k in l + 1..self.n_hypotheses {
                let (hl, hk) = (HypothesisId(l), HypothesisId(k));
                let any = (0..self.n_agents()).any(|i| self.kl_divergence(i, hl, hk) > KL_ZERO_TOLERANCE);
                if !any {
                    failing_pairs.push((hl, hk));
                }
            }
        }
        IdentifiabilityReport { identifiable: failing_pairs.is_empty(), failing_pairs }
    }

    /// Draw `o` with probability `f_i(o | h_true)` by inverse-CDF sampling.
    pub fn sample_observation<R: Rng + ?Sized>(&self, i: AgentId, h_true: HypothesisId, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let last = self.alphabet_sizes[i] - 1;
        for o in 0..last {
            acc += self.prob(i, o, h_true);
            if u < acc {
                return o;
            }
        }
        last
    }

    /// Precomputed inverse-CDF sampler for every agent under `h_true`.
    ///
    /// Produces exactly the same draws as [`LikelihoodModel::sample_observation`].
    pub fn sampler(&self, h_true: HypothesisId) -> ObservationSampler {
        let cdfs = (0..self.n_agents())
            .map(|i| {
                let mut acc = 0.0;
                (0..self.alphabet_sizes[i] - 1)
                    .map(|o| {
                        acc += self.prob(i, o, h_true);
                        acc
                    })
                    .collect()
            })
            .collect();
        ObservationSampler { cdfs }
    }

    pub fn check_hypothesis(&self, h: HypothesisId) -> Result<()> {
        if h.0 >= self.n_hypotheses {
            return param(format!("hypothesis {h} out of range for M={}", self.n_hypotheses));
        }
        Ok(())
    }

    /// Serialize to the JSON interchange format.
    pub fn to_json(&self) -> String {
        let file = ModelFile {
            n_agents: self.n_agents(),
            n_hypotheses: self.n_hypotheses,
            alphabet_sizes: self.alphabet_sizes.clone(),
            tables: self.tables.clone(),
        };
        serde_json::to_string_pretty(&file).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::Parse { line: e.line(), message: e.to_string() })?;
        if file.n_agents != file.tables.len() {
            return param(format!("n_agents = {} but {} tables present", file.n_agents, file.tables.len()));
        }
        Self::new(file.n_hypotheses, file.alphabet_sizes, file.tables)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// On-disk model layout. Tables are row-major `|O_i| x M`.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    n_agents: usize,
    n_hypotheses: usize,
    alphabet_sizes: Vec<usize>,
    tables: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentifiabilityReport {
    pub identifiable: bool,
    /// Unordered pairs `(h_l, h_k)`, `l < k`, that no agent distinguishes.
    pub failing_pairs: Vec<(HypothesisId, HypothesisId)>,
}

/// Cumulative tables for fast observation draws under a fixed true hypothesis.
#[derive(Debug, Clone)]
pub struct ObservationSampler {
    // The final cumulative value (one) is implicit.
    cdfs: Vec<Vec<f64>>,
}

impl ObservationSampler {
    pub fn sample<R: Rng + ?Sized>(&self, i: AgentId, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let cdf = &self.cdfs[i];
        cdf.iter().position(|&c| u < c).unwrap_or(cdf.len())
    }
}

/// Parameters of [`generate_random_model`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n_agents: usize,
    pub n_hypotheses: usize,
    pub alphabet_sizes: Vec<usize>,
    pub floor: f64,
    pub discriminating_agents: Vec<AgentId>,
    pub min_kl: f64,
    pub attempts: usize,
}

impl ModelParams {
    pub fn uniform_alphabet(n_agents: usize, n_hypotheses: usize, alphabet_size: usize) -> Self {
        Self {
            n_agents,
            n_hypotheses,
            alphabet_sizes: vec![alphabet_size; n_agents],
            floor: DEFAULT_FLOOR,
            discriminating_agents: Vec::new(),
            min_kl: 0.0,
            attempts: DEFAULT_MODEL_ATTEMPTS,
        }
    }

    pub fn with_discriminating(mut self, agents: Vec<AgentId>, min_kl: f64) -> Self {
        self.discriminating_agents = agents;
        self.min_kl = min_kl;
        self
    }

    pub fn with_floor(mut self, floor: f64) -> Self {
        self.floor = floor;
        self
    }
}

/// Random likelihood model: each column is i.i.d. uniform(floor, 1) values,
/// normalized, floored and renormalized. Every agent listed as discriminating
/// is regenerated until all ordered pairs satisfy `K_i(h_l, h_k) >= min_kl`
/// (and exceed [`KL_ZERO_TOLERANCE`]).
pub fn generate_random_model(params: &ModelParams, seed: u64) -> Result<LikelihoodModel> {
    let ModelParams { n_agents, n_hypotheses: m, ref alphabet_sizes, floor, min_kl, attempts, .. } = *params;
    if n_agents == 0 || alphabet_sizes.len() != n_agents {
        return param(format!("need one alphabet size per agent ({n_agents} agents, {} sizes)", alphabet_sizes.len()));
    }
    if m < 2 {
        return param(format!("need at least 2 hypotheses, got {m}"));
    }
    let max_size = alphabet_sizes.iter().copied().max().unwrap_or(0);
    if max_size == 0 || alphabet_sizes.contains(&0) {
        return param("alphabet sizes must be at least 1");
    }
    if !(floor > 0.0 && floor < 1.0 / max_size as f64) {
        return param(format!("floor {floor} must lie in (0, 1/{max_size})"));
    }
    if !(min_kl >= 0.0 && min_kl.is_finite()) {
        return param(format!("min_kl must be a nonnegative number, got {min_kl}"));
    }
    if let Some(&bad) = params.discriminating_agents.iter().find(|&&a| a >= n_agents) {
        return param(format!("discriminating agent {bad} out of range"));
    }

    let mut rng = StreamRng::seed_from_u64(seed);
    let mut tables = Vec::with_capacity(n_agents);
    for (i, &size) in alphabet_sizes.iter().enumerate() {
        let mut table = random_table(size, m, floor, &mut rng);
        if params.discriminating_agents.contains(&i) {
            let mut best = min_pairwise_kl(&table, size, m);
            let mut tries = 1;
            while !(best >= min_kl && best > KL_ZERO_TOLERANCE) {
                if tries >= attempts {
                    return Err(Error::GenerationFailure {
                        attempts,
                        reason: format!("agent {i}: best minimum pairwise KL {best:.6e} below required {min_kl:.6e}"),
                    });
                }
                let candidate = random_table(size, m, floor, &mut rng);
                let kl = min_pairwise_kl(&candidate, size, m);
                if kl > best {
                    best = kl;
                }
                if kl >= min_kl && kl > KL_ZERO_TOLERANCE {
                    table = candidate;
                    break;
                }
                tries += 1;
            }
        }
        tables.push(table);
    }
    LikelihoodModel::new(m, alphabet_sizes.clone(), tables)
}

fn random_table(size: usize, m: usize, floor: f64, rng: &mut StreamRng) -> Vec<f64> {
    let mut table = vec![0.0; size * m];
    for h in 0..m {
        let mut col: Vec<f64> = (0..size).map(|_| rng.random_range(floor..1.0)).collect();
        normalize_linear(&mut col);
        for p in col.iter_mut() {
            *p = p.max(floor);
        }
        normalize_linear(&mut col);
        for (o, p) in col.into_iter().enumerate() {
            table[o * m + h] = p;
        }
    }
    table
}

fn normalize_linear(col: &mut [f64]) {
    let sum: f64 = col.iter().sum();
    col.iter_mut().for_each(|p| *p /= sum);
}

fn min_pairwise_kl(table: &[f64], size: usize, m: usize) -> f64 {
    let mut best = f64::INFINITY;
    for l in 0..m {
        for k in 0..m {
            if l == k {
                continue;
            }
            let kl: f64 = (0..size)
                .map(|o| {
                    let (p, q) = (table[o * m + l], table[o * m + k]);
                    p * (p / q).ln()
                })
                .sum();
            best = best.min(kl);
        }
    }
    best
}
