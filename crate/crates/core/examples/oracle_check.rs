//! The log-domain engine against the literal linear-domain formulas, on the
//! same random draws.
//!
//! ```bash
//! cargo run --release -p minrule --example oracle_check
//! ```

use minrule::engine::{run, RecordFlags, SharingMode, SimulationConfig};
use minrule::graph::generate_k_regular;
use minrule::model::{generate_random_model, HypothesisId, ModelParams};
use minrule::oracle::oracle_run;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let network = generate_k_regular(6, 2, 11)?;
    // Nearly uninformative signals keep every probability well inside f64 range.
    let params = ModelParams::uniform_alphabet(6, 4, 5).with_floor(0.15);
    let model = generate_random_model(&params, 11)?;

    for mode in
        [SharingMode::Full, SharingMode::PartialPrevious, SharingMode::PartialOwn, SharingMode::Fixed(HypothesisId(2))]
    {
        let cfg = SimulationConfig::new(network.clone(), model.clone(), HypothesisId(1), mode)
            .with_horizon(200)
            .with_seed(4)
            .with_record(RecordFlags::everything());
        let traj = run(&cfg)?;
        let oracle = oracle_run(&cfg)?;
        let mut worst = 0.0f64;
        for (idx, states) in oracle.iter().enumerate() {
            for (i, s) in states.iter().enumerate() {
                for (h, &p) in s.beta.p.iter().enumerate() {
                    let e = traj.log_belief(idx, i, HypothesisId(h)).exp();
                    worst = worst.max(((e - p) / p).abs());
                }
            }
        }
        let final_min = oracle.last().unwrap().iter().flat_map(|s| s.beta.p.iter().copied()).fold(1.0, f64::min);
        println!("{:<18} max relative deviation {worst:.2e} (smallest final belief {final_min:.2e})", mode.to_string());
    }
    Ok(())
}
