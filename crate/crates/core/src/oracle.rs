//! Linear-domain reference implementation of the update rules.
//!
//! Every formula here is evaluated literally on plain probabilities with
//! naive summation. Nothing is shared with [`crate::belief`] except the
//! random draws, so agreement between the two is real evidence. Only usable
//! while every probability stays above [`ORACLE_FLOOR`].

// Index loops mirror the formulas on purpose.
#![allow(clippy::needless_range_loop)]

use std::collections::BTreeMap;

use crate::engine::{RngStreams, RoundDraws, SharingMode, SimulationConfig};
use crate::error::{Error, Result};
use crate::graph::AgentId;
use crate::model::LikelihoodModel;

/// Smallest probability the oracle accepts before reporting a range error.
pub const ORACLE_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseBelief {
    pub p: Vec<f64>,
}

impl DenseBelief {
    pub fn uniform(m: usize) -> Self {
        Self { p: vec![1.0 / m as f64; m] }
    }

    fn check(self, what: &str) -> Result<Self> {
        if let Some(bad) = self.p.iter().find(|&&v| v.is_nan() || v < ORACLE_FLOOR) {
            return Err(Error::OracleRange(format!("{what}: probability {bad:e} below {ORACLE_FLOOR:e}")));
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleState {
    pub alpha: DenseBelief,
    pub beta: DenseBelief,
    pub estimates: BTreeMap<AgentId, DenseBelief>,
}

pub fn oracle_initial(config: &SimulationConfig) -> Vec<OracleState> {
    let m = config.n_hypotheses();
    let stores = matches!(config.mode, SharingMode::PartialPrevious | SharingMode::Fixed(_));
    (0..config.network.n_agents())
        .map(|i| OracleState {
            alpha: DenseBelief::uniform(m),
            beta: DenseBelief::uniform(m),
            estimates: if stores {
                config.network.neighbors(i).unwrap().iter().map(|&j| (j, DenseBelief::uniform(m))).collect()
            } else {
                BTreeMap::new()
            },
        })
        .collect()
}

/// One round from the literal formulas, consuming the same draws as the engine.
pub fn oracle_step(
    prev: &[OracleState],
    _round: usize,
    config: &SimulationConfig,
    draws: &RoundDraws,
) -> Result<Vec<OracleState>> {
    let m = config.n_hypotheses();
    let mut next = Vec::with_capacity(prev.len());
    for (i, own) in prev.iter().enumerate() {
        // local Bayes update
        let o = draws.observations[i];
        let mut num = vec![0.0; m];
        let mut den = 0.0;
        for h in 0..m {
            num[h] = config.model.row(i, o)[h] * own.alpha.p[h];
            den += num[h];
        }
        let alpha = DenseBelief { p: num.iter().map(|v| v / den).collect() }.check("local belief")?;

        let neighbors = config.network.neighbors(i)?;
        let mut others: Vec<DenseBelief> = Vec::new();
        let mut estimates = BTreeMap::new();
        for &j in neighbors {
            let tau = draws.taus[j].0;
            let received = prev[j].beta.p[tau];
            match config.mode {
                SharingMode::Full => others.push(prev[j].beta.clone()),
                SharingMode::PartialPrevious | SharingMode::Fixed(_) => {
                    let stored = &own.estimates[&j];
                    let d = 1.0 - stored.p[tau] + received;
                    let mut e = vec![0.0; m];
                    for h in 0..m {
                        e[h] = if h == tau { received / d } else { stored.p[h] / d };
                    }
                    let e = DenseBelief { p: e }.check("estimate")?;
                    others.push(e.clone());
                    estimates.insert(j, e);
                }
                SharingMode::PartialOwn => {
                    let c = 1.0 - own.beta.p[tau] + received;
                    let mut e = vec![0.0; m];
                    for h in 0..m {
                        e[h] = if h == tau { received / c } else { own.beta.p[h] / c };
                    }
                    others.push(DenseBelief { p: e }.check("estimate")?);
                }
            }
        }

        let mut mins = vec![0.0; m];
        let mut total = 0.0;
        for h in 0..m {
            let mut v = own.beta.p[h].min(alpha.p[h]);
            for other in &others {
                if other.p[h] < v {
                    v = other.p[h];
                }
            }
            mins[h] = v;
            total += v;
        }
        let beta = DenseBelief { p: mins.iter().map(|v| v / total).collect() }.check("public belief")?;
        next.push(OracleState { alpha, beta, estimates });
    }
    Ok(next)
}

/// Run the oracle over the configured horizon, returning every round's states.
pub fn oracle_run(config: &SimulationConfig) -> Result<Vec<Vec<OracleState>>> {
    let sampler = config.model.sampler(config.h_true);
    let mut streams = RngStreams::new(config.master_seed, config.network.n_agents());
    let mut states = oracle_initial(config);
    let mut all = vec![states.clone()];
    for t in 1..=config.horizon {
        let draws = RoundDraws::draw(config, &sampler, &mut streams);
        states = oracle_step(&states, t, config, &draws)?;
        all.push(states.clone());
    }
    Ok(all)
}

/// Closed-form posterior `∝ prior(h) · Π_t f_i(o_t | h)` computed in one pass.
pub fn exhaustive_local_posterior(
    model: &LikelihoodModel,
    agent: AgentId,
    observations: &[usize],
    prior: &DenseBelief,
) -> Result<DenseBelief> {
    let m = model.n_hypotheses();
    let mut w = prior.p.clone();
    for &o in observations {
        for h in 0..m {
            w[h] *= model.row(agent, o)[h];
        }
    }
    if let Some(bad) = w.iter().find(|&&v| v.is_nan() || v < ORACLE_FLOOR) {
        return Err(Error::OracleRange(format!("unnormalized posterior weight {bad:e} underflowed")));
    }
    let total: f64 = w.iter().sum();
    Ok(DenseBelief { p: w.iter().map(|v| v / total).collect() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::{local_update, BeliefVector};
    use crate::engine::{run, RecordFlags};
    use crate::graph::Network;
    use crate::model::{generate_random_model, HypothesisId, ModelParams};

    #[test]
    fn uninformative_single_agent_stays_uniform() {
        let network = Network::from_edges(1, []).unwrap();
        let model = LikelihoodModel::from_columns(vec![vec![vec![0.3, 0.7]; 3]]).unwrap();
        let cfg = SimulationConfig::new(network, model, HypothesisId(0), SharingMode::Full).with_horizon(40);
        let all = oracle_run(&cfg).unwrap();
        for states in all {
            for p in &states[0].beta.p {
                assert!((p - 1.0 / 3.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn posterior_base_cases() {
        let params = ModelParams::uniform_alphabet(1, 3, 4);
        let model = generate_random_model(&params, 8).unwrap();
        let prior = DenseBelief { p: vec![0.2, 0.3, 0.5] };
        assert_eq!(exhaustive_local_posterior(&model, 0, &[], &prior).unwrap(), prior);

        let one = exhaustive_local_posterior(&model, 0, &[2], &prior).unwrap();
        let engine = local_update(&BeliefVector::from_probs(&prior.p).unwrap(), model.row(0, 2)).unwrap();
        for (a, b) in one.p.iter().zip(engine.probs()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn underflow_is_reported() {
        let model = LikelihoodModel::from_columns(vec![vec![vec![1.0 - 1e-9, 1e-9], vec![1e-9, 1.0 - 1e-9]]]).unwrap();
        let obs = vec![1usize; 40];
        let err = exhaustive_local_posterior(&model, 0, &obs, &DenseBelief::uniform(2)).unwrap_err();
        assert!(matches!(err, Error::OracleRange(_)));
    }

    #[test]
    fn two_cycle_agreement_all_modes() {
        let network = Network::undirected(2, [(0, 1)]).unwrap();
        let params = ModelParams::uniform_alphabet(2, 2, 3);
        let model = generate_random_model(&params, 4).unwrap();
        for mode in [SharingMode::Full, SharingMode::PartialPrevious, SharingMode::PartialOwn] {
            let cfg = SimulationConfig::new(network.clone(), model.clone(), HypothesisId(0), mode)
                .with_horizon(30)
                .with_seed(12)
                .with_record(RecordFlags::everything());
            let traj = run(&cfg).unwrap();
            let oracle = oracle_run(&cfg).unwrap();
            for (idx, states) in oracle.iter().enumerate() {
                for (i, s) in states.iter().enumerate() {
                    for (h, &p) in s.beta.p.iter().enumerate() {
                        let e = traj.log_belief(idx, i, HypothesisId(h)).exp();
                        assert!(((e - p) / p).abs() < 1e-12, "{mode} t={idx} i={i} h={h}: {e} vs {p}");
                    }
                }
            }
        }
    }
}
