//! The building blocks of one round, checked against hand computations:
//! local Bayes update, min-rule aggregation and the two estimate rules.
//!
//! ```bash
//! cargo run -p minrule --example belief_rules
//! ```

use minrule::belief::{
    estimate_update_own, estimate_update_previous, local_update, min_rule_full, min_rule_partial, BeliefVector,
    SharedMessage,
};
use minrule::model::HypothesisId;

fn show(label: &str, b: &BeliefVector, expect: &[f64]) {
    let p = b.probs();
    let err = p.iter().zip(expect).map(|(a, e)| (a - e).abs()).fold(0.0, f64::max);
    println!("{label:<34} {p:.6?}   expected {expect:.6?}   max error {err:.1e}");
    assert!(err < 1e-12);
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let uniform = BeliefVector::uniform(2)?;
    show("local update, f = [0.8, 0.2]", &local_update(&uniform, &[0.8, 0.2])?, &[0.8, 0.2]);

    let alpha = local_update(&BeliefVector::uniform(3)?, &[0.2, 0.1, 0.3])?;
    show("local update, three hypotheses", &alpha, &[1.0 / 3.0, 1.0 / 6.0, 0.5]);
    let prior = BeliefVector::from_probs(&[0.5, 0.25, 0.25])?;
    show("local update, skewed prior", &local_update(&prior, &[0.2, 0.4, 0.6])?, &[2.0 / 7.0, 2.0 / 7.0, 3.0 / 7.0]);

    // Own previous [0.6, 0.4], neighbor [0.2, 0.8], fresh local [0.5, 0.5].
    let own = BeliefVector::from_probs(&[0.6, 0.4])?;
    let nb = BeliefVector::from_probs(&[0.2, 0.8])?;
    let local = BeliefVector::from_probs(&[0.5, 0.5])?;
    show("min-rule, full sharing", &min_rule_full(&own, std::slice::from_ref(&nb), &local)?, &[0.2 / 0.6, 0.4 / 0.6]);

    // Stored estimate of the neighbor [0.5, 0.5]; it now shares belief 0.2 on h0.
    let stored = BeliefVector::uniform(2)?;
    let msg = SharedMessage::from_belief(&nb, HypothesisId(0));
    let est_prev = estimate_update_previous(&stored, &msg)?;
    show("estimate from stored copy", &est_prev, &[0.2 / 0.7, 0.5 / 0.7]);

    // Memory-efficient rule fills the gap with the receiver's own belief.
    let est_own = estimate_update_own(&own, &msg)?;
    show("estimate from own belief", &est_own, &[0.2 / 0.6, 0.4 / 0.6]);

    let public = min_rule_partial(&own, &[est_prev], &local)?;
    show("min-rule with stored estimate", &public, &[(0.2 / 0.7) / (0.2 / 0.7 + 0.4), 0.4 / (0.2 / 0.7 + 0.4)]);

    // Everything lives in log space, so tiny beliefs do not underflow.
    let deep = BeliefVector::from_log_weights(vec![0.0, -2000.0, -5000.0])?;
    println!("log beliefs far below f64 range: {:?}", deep.log_probs());
    Ok(())
}
