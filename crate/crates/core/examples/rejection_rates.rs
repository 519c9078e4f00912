//! Rejection rates `-ln β(h) / t` approach the network-wide bound
//! `max_j K_j(h*, h)`, set by the best-informed agent.
//!
//! ```bash
//! cargo run --release -p minrule --example rejection_rates
//! ```

use minrule::engine::{run, RecordFlags, SharingMode, SimulationConfig};
use minrule::graph::generate_k_regular;
use minrule::metrics::{discriminating_rate_bound, rejection_rate, theoretical_rate_bound};
use minrule::model::{generate_random_model, HypothesisId, ModelParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let network = generate_k_regular(10, 4, 5)?;
    let params = ModelParams::uniform_alphabet(10, 5, 20).with_discriminating(vec![0], 0.05);
    let model = generate_random_model(&params, 5)?;
    let h_true = HypothesisId(0);

    for mode in [SharingMode::Full, SharingMode::PartialPrevious, SharingMode::PartialOwn] {
        let cfg = SimulationConfig::new(network.clone(), model.clone(), h_true, mode)
            .with_horizon(20_000)
            .with_seed(1)
            .with_record(RecordFlags { every: 100, ..RecordFlags::default() });
        let traj = run(&cfg)?;
        println!("{mode}:");
        for h in (1..5).map(HypothesisId) {
            let bound = theoretical_rate_bound(&model, h_true, h)?;
            let own = discriminating_rate_bound(&model, 0, h_true, h)?;
            let r0 = rejection_rate(&traj, 0, h)?.tail_mean(0.1).unwrap();
            let r9 = rejection_rate(&traj, 9, h)?.tail_mean(0.1).unwrap();
            println!("  {h}: max_j K_j = {bound:.4}  K_0 = {own:.4}  agent 0 rate = {r0:.4}  agent 9 rate = {r9:.4}");
        }
    }
    Ok(())
}
