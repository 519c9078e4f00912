//! Log-domain belief vectors and the min-rule family of update rules.
//!
//! Beliefs on false hypotheses decay exponentially, so every vector is kept
//! as natural-log probabilities. The componentwise minimum commutes with the
//! logarithm, which makes the min-rule exact in this representation.

use crate::error::{param, Error, Result};
use crate::model::HypothesisId;

/// Tolerance on `Σ exp(log_p) = 1`.
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// A probability vector over `M` hypotheses stored as log-probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefVector {
    log_p: Vec<f64>,
}

impl BeliefVector {
    /// Uniform belief `1/M` on every hypothesis.
    pub fn uniform(m: usize) -> Result<Self> {
        if m < 2 {
            return param(format!("belief vectors need M >= 2, got {m}"));
        }
        Ok(Self { log_p: vec![-(m as f64).ln(); m] })
    }

    /// Normalize arbitrary finite log-weights.
    pub fn from_log_weights(log_w: Vec<f64>) -> Result<Self> {
        if log_w.len() < 2 {
            return param(format!("belief vectors need M >= 2, got {}", log_w.len()));
        }
        if let Some(bad) = log_w.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("log-weight {bad} is not finite")));
        }
        let mut v = Self { log_p: log_w };
        v.normalize();
        Ok(v)
    }

    /// Normalize strictly positive linear weights.
    pub fn from_probs(p: &[f64]) -> Result<Self> {
        if let Some(bad) = p.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::Domain(format!("belief weight {bad} is not positive")));
        }
        Self::from_log_weights(p.iter().map(|v| v.ln()).collect())
    }

    /// Wrap already-normalized log-probabilities without renormalizing.
    pub fn from_normalized_log(log_p: Vec<f64>) -> Result<Self> {
        if log_p.len() < 2 {
            return param(format!("belief vectors need M >= 2, got {}", log_p.len()));
        }
        if let Some(bad) = log_p.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("log-probability {bad} is not finite")));
        }
        let v = Self { log_p };
        if v.simplex_error() > SIMPLEX_TOLERANCE {
            return Err(Error::Domain(format!("log-probabilities sum to {} in linear space", 1.0 + v.simplex_error())));
        }
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.log_p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_p.is_empty()
    }

    pub fn log_probs(&self) -> &[f64] {
        &self.log_p
    }

    pub fn log_prob(&self, h: HypothesisId) -> f64 {
        self.log_p[h.0]
    }

    pub fn prob(&self, h: HypothesisId) -> f64 {
        self.log_p[h.0].exp()
    }

    pub fn probs(&self) -> Vec<f64> {
        self.log_p.iter().map(|l| l.exp()).collect()
    }

    /// `|Σ_h β(h) - 1|`.
    pub fn simplex_error(&self) -> f64 {
        (self.log_p.iter().map(|l| l.exp()).sum::<f64>() - 1.0).abs()
    }

    fn normalize(&mut self) {
        let z = log_sum_exp(&self.log_p);
        self.log_p.iter_mut().for_each(|l| *l -= z);
    }
}

/// Max-shifted log-sum-exp: the remaining terms are summed left to right
/// and added through `ln_1p`, so a dominant entry does not swallow them.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let Some((arg, max)) = xs.iter().copied().enumerate().fold(None, |acc: Option<(usize, f64)>, (k, x)| match acc {
        Some((_, m)) if m >= x => acc,
        _ => Some((k, x)),
    }) else {
        return f64::NEG_INFINITY;
    };
    if !max.is_finite() {
        return max;
    }
    let rest: f64 = xs.iter().enumerate().filter(|&(k, _)| k != arg).map(|(_, x)| (x - max).exp()).sum();
    max + rest.ln_1p()
}

/// Partial-sharing message: the sender's previous-round log-belief on one
/// hypothesis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SharedMessage {
    pub hypothesis: HypothesisId,
    pub log_belief: f64,
}

impl SharedMessage {
    pub fn from_belief(belief: &BeliefVector, hypothesis: HypothesisId) -> Self {
        Self { hypothesis, log_belief: belief.log_prob(hypothesis) }
    }
}

/// Bayes rule on the local belief given the likelihood column
/// `f_i(o_t | ·)` in linear form.
pub fn local_update(alpha_prev: &BeliefVector, likelihood: &[f64]) -> Result<BeliefVector> {
    if let Some(bad) = likelihood.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::Domain(format!("likelihood value {bad} is not positive")));
    }
    let logs: Vec<f64> = likelihood.iter().map(|v| v.ln()).collect();
    local_update_log(alpha_prev, &logs)
}

/// [`local_update`] taking `ln f_i(o_t | ·)` directly.
pub fn local_update_log(alpha_prev: &BeliefVector, log_likelihood: &[f64]) -> Result<BeliefVector> {
    check_len(alpha_prev.len(), log_likelihood.len())?;
    if let Some(bad) = log_likelihood.iter().find(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("log-likelihood {bad} is not finite")));
    }
    let mut log_p: Vec<f64> = alpha_prev.log_p.iter().zip(log_likelihood).map(|(a, l)| a + l).collect();
    let z = log_sum_exp(&log_p);
    log_p.iter_mut().for_each(|l| *l -= z);
    Ok(BeliefVector { log_p })
}

/// Public update with full sharing: componentwise minimum over the neighbors'
/// previous beliefs, the agent's own previous belief and its new local
/// belief, then normalized.
pub fn min_rule_full(
    own_prev: &BeliefVector,
    neighbor_prevs: &[BeliefVector],
    alpha_now: &BeliefVector,
) -> Result<BeliefVector> {
    min_rule(own_prev, neighbor_prevs.iter(), alpha_now)
}

/// Public update with partial sharing; identical to [`min_rule_full`] with
/// neighbor estimates in place of the neighbors' true beliefs.
pub fn min_rule_partial(
    own_prev: &BeliefVector,
    estimates_now: &[BeliefVector],
    alpha_now: &BeliefVector,
) -> Result<BeliefVector> {
    min_rule(own_prev, estimates_now.iter(), alpha_now)
}

/// Shared body of the two min-rules over any iterator of borrowed vectors.
pub fn min_rule<'a, I>(own_prev: &BeliefVector, others: I, alpha_now: &BeliefVector) -> Result<BeliefVector>
where
    I: IntoIterator<Item = &'a BeliefVector>,
{
    let m = own_prev.len();
    check_len(m, alpha_now.len())?;
    let mut log_p: Vec<f64> = own_prev.log_p.iter().zip(&alpha_now.log_p).map(|(a, b)| a.min(*b)).collect();
    for other in others {
        check_len(m, other.len())?;
        for (acc, v) in log_p.iter_mut().zip(&other.log_p) {
            *acc = acc.min(*v);
        }
    }
    let z = log_sum_exp(&log_p);
    log_p.iter_mut().for_each(|l| *l -= z);
    Ok(BeliefVector { log_p })
}

/// Estimate of a neighbor built from the previous estimate: entry `τ` takes
/// the received value, the others are kept, and everything is divided by
/// `D = 1 - β̂_prev(τ) + received`.
pub fn estimate_update_previous(estimate_prev: &BeliefVector, msg: &SharedMessage) -> Result<BeliefVector> {
    replace_and_rescale(estimate_prev, msg)
}

/// Memory-efficient estimate: entry `τ` takes the received value, the others
/// copy the receiver's own previous belief, divided by
/// `C = 1 - β_own(τ) + received`.
pub fn estimate_update_own(own_prev: &BeliefVector, msg: &SharedMessage) -> Result<BeliefVector> {
    replace_and_rescale(own_prev, msg)
}

fn replace_and_rescale(base: &BeliefVector, msg: &SharedMessage) -> Result<BeliefVector> {
    let tau = msg.hypothesis.0;
    if tau >= base.len() {
        return param(format!("message hypothesis {} out of range for M={}", msg.hypothesis, base.len()));
    }
    // normalized log-probabilities may exceed zero by rounding
    if msg.log_belief.is_nan() || msg.log_belief > SIMPLEX_TOLERANCE {
        return Err(Error::Domain(format!("shared log-belief {} is not <= 0", msg.log_belief)));
    }
    let mut log_p = base.log_p.clone();
    log_p[tau] = msg.log_belief;
    // ln(1 - base(τ) + received), summed over the entries themselves
    let log_d = log_sum_exp(&log_p);
    if !log_d.is_finite() {
        return Err(Error::NumericalDegeneracy(format!(
            "rescaling normalizer ln D = {log_d} (received log-belief {})",
            msg.log_belief
        )));
    }
    log_p.iter_mut().for_each(|l| *l -= log_d);
    Ok(BeliefVector { log_p })
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return param(format!("length mismatch: expected {expected} hypotheses, got {got}"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bv(p: &[f64]) -> BeliefVector {
        BeliefVector::from_probs(p).unwrap()
    }

    fn assert_probs(v: &BeliefVector, expected: &[f64]) {
        let got = v.probs();
        assert_eq!(got.len(), expected.len());
        for (g, e) in got.iter().zip(expected) {
            assert!((g - e).abs() < 1e-12, "{got:?} vs {expected:?}");
        }
    }

    #[test]
    fn uniform_belief() {
        assert_probs(&BeliefVector::uniform(20).unwrap(), &[0.05; 20]);
        assert_probs(&BeliefVector::uniform(2).unwrap(), &[0.5, 0.5]);
        assert!(BeliefVector::uniform(4).unwrap().simplex_error() <= 1e-15);
        assert!(BeliefVector::uniform(1).is_err());
    }

    #[test]
    fn local_update_examples() {
        let u = BeliefVector::uniform(2).unwrap();
        assert_probs(&local_update(&u, &[0.8, 0.2]).unwrap(), &[0.8, 0.2]);

        let a = bv(&[0.5, 0.25, 0.25]);
        assert_probs(&local_update(&a, &[0.3, 0.3, 0.3]).unwrap(), &[0.5, 0.25, 0.25]);
        assert_probs(&local_update(&a, &[0.2, 0.2, 0.6]).unwrap(), &[1.0 / 3.0, 1.0 / 6.0, 0.5]);

        assert!(matches!(local_update(&a, &[0.2, 0.0, 0.6]), Err(Error::Domain(_))));
        assert!(matches!(local_update(&a, &[0.2, 0.6]), Err(Error::Parameter(_))));
    }

    #[test]
    fn min_rule_full_examples() {
        let out = min_rule_full(&bv(&[0.5, 0.5]), &[bv(&[0.2, 0.8])], &bv(&[0.4, 0.6])).unwrap();
        assert_probs(&out, &[2.0 / 7.0, 5.0 / 7.0]);

        let u = BeliefVector::uniform(3).unwrap();
        assert_probs(&min_rule_full(&u, &[u.clone(), u.clone()], &u).unwrap(), &[1.0 / 3.0; 3]);

        let out = min_rule_full(&bv(&[0.3, 0.7]), &[], &bv(&[0.6, 0.4])).unwrap();
        assert_probs(&out, &[3.0 / 7.0, 4.0 / 7.0]);

        assert!(min_rule_full(&bv(&[0.3, 0.7]), &[bv(&[0.2, 0.3, 0.5])], &bv(&[0.6, 0.4])).is_err());
    }

    #[test]
    fn estimate_update_previous_examples() {
        let msg = SharedMessage { hypothesis: HypothesisId(0), log_belief: 0.3f64.ln() };
        assert_probs(&estimate_update_previous(&bv(&[0.5, 0.5]), &msg).unwrap(), &[0.375, 0.625]);

        let prev = bv(&[0.2, 0.3, 0.5]);
        let same = SharedMessage::from_belief(&prev, HypothesisId(2));
        assert_eq!(estimate_update_previous(&prev, &same).unwrap(), prev);

        let msg = SharedMessage { hypothesis: HypothesisId(1), log_belief: 0.6f64.ln() };
        let out = estimate_update_previous(&prev, &msg).unwrap();
        assert_probs(&out, &[0.2 / 1.3, 0.6 / 1.3, 0.5 / 1.3]);
    }

    #[test]
    fn estimate_update_own_examples() {
        let msg = SharedMessage { hypothesis: HypothesisId(0), log_belief: 0.2f64.ln() };
        assert_probs(&estimate_update_own(&bv(&[0.4, 0.6]), &msg).unwrap(), &[0.25, 0.75]);

        let own = bv(&[0.1, 0.2, 0.7]);
        let same = SharedMessage::from_belief(&own, HypothesisId(0));
        assert_eq!(estimate_update_own(&own, &same).unwrap(), own);

        let msg = SharedMessage { hypothesis: HypothesisId(2), log_belief: 0.4f64.ln() };
        assert_probs(&estimate_update_own(&own, &msg).unwrap(), &[1.0 / 7.0, 2.0 / 7.0, 4.0 / 7.0]);
    }

    #[test]
    fn min_rule_partial_examples() {
        let own = bv(&[0.5, 0.5]);
        let alpha = bv(&[0.8, 0.2]);
        let out = min_rule_partial(&own, &[bv(&[0.375, 0.625])], &alpha).unwrap();
        assert_probs(&out, &[15.0 / 23.0, 8.0 / 23.0]);

        let nbrs = [bv(&[0.1, 0.9]), bv(&[0.7, 0.3])];
        assert_eq!(min_rule_partial(&own, &nbrs, &alpha).unwrap(), min_rule_full(&own, &nbrs, &alpha).unwrap());
        assert_eq!(min_rule_partial(&own, &[], &alpha).unwrap(), min_rule_full(&own, &[], &alpha).unwrap());
    }

    #[test]
    fn log_sum_exp_keeps_small_terms() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[-3.0]), -3.0);
        let z = log_sum_exp(&[0.0, -39.85]);
        assert!(z > 0.0 && (z - (-39.85f64).exp()).abs() < 1e-30);
        assert!((log_sum_exp(&[1.0f64.ln(), 2.0f64.ln(), 3.0f64.ln()]) - 6.0f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn normalizer_without_cancellation() {
        // stored entry ~1 and received exp(-800): 1 - stored + received is tiny but exact
        let stored = BeliefVector::from_log_weights(vec![0.0, -800.0]).unwrap();
        let msg = SharedMessage { hypothesis: HypothesisId(0), log_belief: -800.0 };
        let e = estimate_update_previous(&stored, &msg).unwrap();
        assert_probs(&e, &[0.5, 0.5]);
        // non-τ mass of 5e-18 next to a dominant τ entry
        let own = BeliefVector::from_log_weights(vec![-39.85, 0.0]).unwrap();
        let msg = SharedMessage { hypothesis: HypothesisId(1), log_belief: -38.0 };
        let e = estimate_update_own(&own, &msg).unwrap();
        let (a, b) = ((-39.85f64).exp(), (-38.0f64).exp());
        assert_probs(&e, &[a / (a + b), b / (a + b)]);
        assert!(e.simplex_error() < 1e-13, "{}", e.simplex_error());
    }

    #[test]
    fn shared_value_must_be_a_probability() {
        let msg = SharedMessage { hypothesis: HypothesisId(0), log_belief: 0.1 };
        assert!(estimate_update_own(&bv(&[0.4, 0.6]), &msg).is_err());
    }

    #[test]
    fn deep_log_values_stay_finite() {
        let v = BeliefVector::from_log_weights(vec![0.0, -5000.0, -12000.0]).unwrap();
        assert_eq!(v.log_prob(HypothesisId(0)), 0.0);
        assert_eq!(v.log_prob(HypothesisId(2)), -12000.0);
        let msg = SharedMessage { hypothesis: HypothesisId(1), log_belief: -7000.0 };
        let e = estimate_update_previous(&v, &msg).unwrap();
        assert!(e.log_probs().iter().all(|l| l.is_finite()));
        assert_eq!(e.log_prob(HypothesisId(1)), -7000.0);
    }
}
