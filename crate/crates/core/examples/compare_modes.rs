//! Full sharing against the two partial-sharing rules on one small network,
//! all three fed the same graph, model and observation streams.
//!
//! ```bash
//! cargo run --release -p minrule --example compare_modes
//! ```

use std::path::Path;

use minrule::metrics::{convergence_time, median_convergence_time, rejection_rate, theoretical_rate_bound};
use minrule::runner::{compare_modes, ExperimentSpec};

const SPEC: &str = r#"
[graph]
family = "k_regular"
n_agents = 20
degree = 4

[model]
n_hypotheses = 6
alphabet_size = 30
discriminating_agents = [0]

[run]
horizon = 400
seeds = "1, 2, 3"
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ExperimentSpec::from_toml(SPEC, Path::new("."))?;
    let h_true = spec.h_true();
    for &seed in &spec.run.seeds {
        let cmp = compare_modes(&spec, seed)?;
        let h = spec.plot_hypothesis(6);
        let bound = theoretical_rate_bound(&cmp.instance.model, h_true, h)?;
        println!("seed {seed}: bound on the rejection rate of {h} = {bound:.4}");
        for (mode, traj) in &cmp.runs {
            let times = convergence_time(traj, 0.99, h_true)?;
            let med = median_convergence_time(&times);
            let tail = rejection_rate(traj, 5, h)?.tail_mean(0.1).unwrap();
            println!("  {:<18} median round to 0.99: {:>6?}   agent 5 tail rate: {tail:.4}", mode.to_string(), med);
        }
    }
    Ok(())
}
