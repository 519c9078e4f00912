//! Sharing one fixed hypothesis forever is not enough: an agent that cannot
//! tell the hypotheses apart on its own never learns.
//!
//! Agent 0 separates everything, agent 1 sees the same signal distribution
//! under every hypothesis, and the pair only ever talks about `h1`.
//!
//! ```bash
//! cargo run -p minrule --example fixed_hypothesis
//! ```

use minrule::engine::{run, SharingMode, SimulationConfig};
use minrule::graph::Network;
use minrule::metrics::learning_verdict;
use minrule::model::{HypothesisId, LikelihoodModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let flat = vec![0.25, 0.35, 0.4];
    let model = LikelihoodModel::from_columns(vec![
        vec![vec![0.7, 0.2, 0.1], vec![0.2, 0.6, 0.2], vec![0.1, 0.2, 0.7]],
        vec![flat.clone(), flat.clone(), flat],
    ])?;
    let network = Network::undirected(2, [(0, 1)])?;
    let h_true = HypothesisId(0);

    for mode in [SharingMode::Fixed(HypothesisId(1)), SharingMode::PartialPrevious] {
        let cfg = SimulationConfig::new(network.clone(), model.clone(), h_true, mode).with_horizon(5000).with_seed(3);
        let traj = run(&cfg)?;
        let last = traj.n_recorded() - 1;
        let b1: Vec<f64> = traj.public_log(last, 1).iter().map(|l| l.exp()).collect();
        println!(
            "{:<18} agent 1 final beliefs {:.6?}  everyone learned: {}",
            mode.to_string(),
            b1,
            learning_verdict(&traj, h_true, 0.01)
        );
    }
    Ok(())
}
