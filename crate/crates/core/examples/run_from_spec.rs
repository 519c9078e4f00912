//! Spec-driven runs: parse a spec, export CSVs, read them back and recompute
//! the rejection rates from the file.
//!
//! ```bash
//! cargo run -p minrule --example run_from_spec
//! ```

use std::path::Path;

use minrule::runner::export::{read_metrics_file, read_trajectory_file};
use minrule::runner::{cmd_run, ExperimentSpec, Options};

const SPEC: &str = r#"
[graph]
family = "circulant"
n_agents = 12
degree = 4

[model]
n_hypotheses = 4
alphabet_size = 10

[run]
mode = "partial_own"
tau_mode = "per_agent"
horizon = 150
seeds = [7]
record_tau = true
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ExperimentSpec::from_toml(SPEC, Path::new("."))?;
    let out = std::env::temp_dir().join("minrule_run_from_spec");
    let report = cmd_run(&spec, &Options { out: Some(out.clone()), seed: None })?;
    print!("{report}");

    let traj = read_trajectory_file(&out.join("trajectory_seed7.csv"))?;
    let metrics = read_metrics_file(&out.join("metrics_seed7.csv"))?;
    let mut worst = 0.0f64;
    for (t, agent, h, rate) in &metrics {
        let idx = traj.index_of(*t).unwrap();
        let recomputed = -traj.log_belief(idx, *agent, *h) / *t as f64;
        worst = worst.max((recomputed - rate).abs());
    }
    println!("{} metric rows recomputed from the trajectory file, max difference {worst:e}", metrics.len());

    // Typos are caught with a line number.
    let err = ExperimentSpec::from_toml("[run]\nhorizon = 10\nmdoe = \"full\"\n", Path::new(".")).unwrap_err();
    println!("{err}");
    std::fs::remove_dir_all(out)?;
    Ok(())
}
