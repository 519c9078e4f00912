//! Likelihood models: KL divergences, discriminating agents, global
//! identifiability, random generation and the JSON model file.
//!
//! ```bash
//! cargo run -p minrule --example likelihood_model
//! ```

use minrule::model::{generate_random_model, HypothesisId, LikelihoodModel, ModelParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (h0, h1, h2) = (HypothesisId(0), HypothesisId(1), HypothesisId(2));

    // columns[agent][hypothesis][observation]
    let model = LikelihoodModel::from_columns(vec![
        vec![vec![0.8, 0.2], vec![0.5, 0.5], vec![0.5, 0.5]],
        vec![vec![0.3, 0.7], vec![0.3, 0.7], vec![0.6, 0.4]],
    ])?;
    println!("K_0(h0, h1) = {:.6} nats", model.kl_divergence(0, h0, h1));
    println!("K_1(h0, h1) = {:.6} nats", model.kl_divergence(1, h0, h1));
    for (a, b) in [(h0, h1), (h0, h2), (h1, h2)] {
        println!("D({a}, {b}) = {:?}", model.discriminating_set(a, b)?);
    }
    let report = model.check_global_identifiability();
    println!("identifiable: {} failing pairs: {:?}", report.identifiable, report.failing_pairs);

    // 30 agents, 6 hypotheses, 40 signals, agent 0 separates every pair.
    let params = ModelParams::uniform_alphabet(30, 6, 40).with_discriminating(vec![0], 0.05);
    let random = generate_random_model(&params, 2024)?;
    let worst = (0..6)
        .flat_map(|l| (0..6).filter(move |&k| k != l).map(move |k| (l, k)))
        .map(|(l, k)| random.kl_divergence(0, HypothesisId(l), HypothesisId(k)))
        .fold(f64::INFINITY, f64::min);
    println!("random model: agent 0 minimum pairwise KL {worst:.4}");
    println!("identifiable: {}", random.check_global_identifiability().identifiable);

    // A one-letter alphabet cannot separate anything.
    let hopeless = ModelParams::uniform_alphabet(1, 2, 1).with_discriminating(vec![0], 0.01);
    if let Err(e) = generate_random_model(&hopeless, 0) {
        println!("one-signal alphabet: {e}");
    }

    let path = std::env::temp_dir().join("minrule_example_model.json");
    random.save(&path)?;
    let back = LikelihoodModel::load(&path)?;
    assert_eq!(back, random);
    println!("saved and reloaded {} ({} bytes), identical", path.display(), std::fs::metadata(&path)?.len());
    std::fs::remove_file(path)?;
    Ok(())
}
