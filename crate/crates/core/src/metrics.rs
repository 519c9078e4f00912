//! Convergence diagnostics and rejection-rate bounds.
//!
//! All rates are in nats per round and are computed from stored
//! log-beliefs, never from exponentiated values.

use crate::engine::Trajectory;
use crate::error::{param, Error, Result};
use crate::graph::AgentId;
use crate::model::{HypothesisId, LikelihoodModel};

/// `r_{i,t}(h) = -ln β_{i,t}(h) / t` over the recorded rounds `t >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSeries {
    pub agent: AgentId,
    pub hypothesis: HypothesisId,
    pub rounds: Vec<usize>,
    pub values: Vec<f64>,
}

impl RateSeries {
    /// Mean of the values whose round lies in the last `fraction` of the
    /// recorded horizon.
    pub fn tail_mean(&self, fraction: f64) -> Option<f64> {
        let last = *self.rounds.last()?;
        let cutoff = last as f64 * (1.0 - fraction);
        let tail: Vec<f64> =
            self.rounds.iter().zip(&self.values).filter(|(&t, _)| t as f64 > cutoff).map(|(_, &v)| v).collect();
        (!tail.is_empty()).then(|| tail.iter().sum::<f64>() / tail.len() as f64)
    }
}

pub fn rejection_rate(traj: &Trajectory, agent: AgentId, h: HypothesisId) -> Result<RateSeries> {
    if agent >= traj.n_agents() || h.0 >= traj.n_hypotheses() {
        return Err(Error::Data(format!(
            "series for agent {agent}, {h} not recorded ({} agents, {} hypotheses)",
            traj.n_agents(),
            traj.n_hypotheses()
        )));
    }
    let (rounds, values) = traj
        .rounds()
        .iter()
        .enumerate()
        .filter(|(_, &t)| t >= 1)
        .map(|(idx, &t)| (t, -traj.log_belief(idx, agent, h) / t as f64))
        .unzip();
    Ok(RateSeries { agent, hypothesis: h, rounds, values })
}

/// `max_j K_j(h_true, h)`: the network-wide lower bound on the asymptotic
/// rejection rate of `h`.
pub fn theoretical_rate_bound(model: &LikelihoodModel, h_true: HypothesisId, h: HypothesisId) -> Result<f64> {
    check_false(model, h_true, h)?;
    Ok((0..model.n_agents()).map(|j| model.kl_divergence(j, h_true, h)).fold(0.0, f64::max))
}

/// `K_i(h_true, h)`: the bound for a single discriminating agent.
pub fn discriminating_rate_bound(
    model: &LikelihoodModel,
    agent: AgentId,
    h_true: HypothesisId,
    h: HypothesisId,
) -> Result<f64> {
    check_false(model, h_true, h)?;
    if agent >= model.n_agents() {
        return param(format!("agent {agent} out of range"));
    }
    Ok(model.kl_divergence(agent, h_true, h))
}

fn check_false(model: &LikelihoodModel, h_true: HypothesisId, h: HypothesisId) -> Result<()> {
    model.check_hypothesis(h_true)?;
    model.check_hypothesis(h)?;
    if h == h_true {
        return param(format!("rate bound needs a false hypothesis, got the true one ({h})"));
    }
    Ok(())
}

/// Per agent, the first recorded round from which `β(h_true) >= threshold`
/// holds for every later recorded round.
pub fn convergence_time(traj: &Trajectory, threshold: f64, h_true: HypothesisId) -> Result<Vec<Option<usize>>> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return param(format!("threshold {threshold} must lie in (0, 1)"));
    }
    let log_thr = threshold.ln();
    Ok((0..traj.n_agents())
        .map(|i| {
            let mut since = None;
            for (idx, &t) in traj.rounds().iter().enumerate() {
                if traj.log_belief(idx, i, h_true) >= log_thr {
                    since.get_or_insert(t);
                } else {
                    since = None;
                }
            }
            since
        })
        .collect())
}

/// True iff every agent's final belief on `h_true` is at least `1 - tol`.
pub fn learning_verdict(traj: &Trajectory, h_true: HypothesisId, tol: f64) -> bool {
    min_final_belief(traj, h_true) >= 1.0 - tol
}

pub fn min_final_belief(traj: &Trajectory, h_true: HypothesisId) -> f64 {
    (0..traj.n_agents()).map(|i| traj.final_public_log(i)[h_true.0].exp()).fold(f64::INFINITY, f64::min)
}

/// Median of the converged agents' times; `None` if any agent never converged.
pub fn median_convergence_time(times: &[Option<usize>]) -> Option<f64> {
    let mut ts: Vec<usize> = times.iter().copied().collect::<Option<_>>()?;
    if ts.is_empty() {
        return None;
    }
    ts.sort_unstable();
    let n = ts.len();
    Some(if n % 2 == 1 { ts[n / 2] as f64 } else { (ts[n / 2 - 1] + ts[n / 2]) as f64 / 2.0 })
}

/// Lowest-indexed agent that cannot distinguish `h_true` from `h`, if any.
pub fn first_non_discriminating(
    model: &LikelihoodModel,
    h_true: HypothesisId,
    h: HypothesisId,
) -> Result<Option<AgentId>> {
    let d = model.discriminating_set(h_true, h)?;
    Ok((0..model.n_agents()).find(|i| d.binary_search(i).is_err()))
}
