//! Randomized checks over small generated instances.

use minrule::engine::{run, Simulation};
use minrule::graph::{circulant, generate_k_regular, parse_edge_list};
use minrule::model::generate_random_model;
use minrule::oracle::oracle_run;
use minrule::{HypothesisId, LikelihoodModel, ModelParams, Network, SharingMode, SimulationConfig, TauMode};
use proptest::prelude::*;

fn mode_strategy(m: usize) -> impl Strategy<Value = SharingMode> {
    prop_oneof![
        Just(SharingMode::Full),
        Just(SharingMode::PartialPrevious),
        Just(SharingMode::PartialOwn),
        (0..m).prop_map(|h| SharingMode::Fixed(HypothesisId(h))),
    ]
}

/// Small random instance: even degree k-regular graph, random model, any mode.
fn instance() -> impl Strategy<Value = SimulationConfig> {
    (3usize..9, 2usize..5, 2usize..6, any::<bool>(), any::<u64>())
        .prop_flat_map(|(n, m, alphabet, per_agent, seed)| (Just((n, m, alphabet, per_agent, seed)), mode_strategy(m)))
        .prop_map(|((n, m, alphabet, per_agent, seed), mode)| {
            let k = 2 * (1 + seed as usize % ((n - 1) / 2));
            let network = generate_k_regular(n, k, seed).unwrap_or_else(|_| circulant(n, k).unwrap());
            let model = generate_random_model(&ModelParams::uniform_alphabet(n, m, alphabet), seed).unwrap();
            let tau = if per_agent { TauMode::PerAgent } else { TauMode::Global };
            SimulationConfig::new(network, model, HypothesisId(seed as usize % m), mode)
                .with_horizon(25)
                .with_seed(seed)
                .with_tau_mode(tau)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn public_beliefs_stay_on_the_simplex(config in instance()) {
        let traj = run(&config).unwrap();
        for idx in 0..traj.n_recorded() {
            for i in 0..traj.n_agents() {
                let total: f64 = traj.public_log(idx, i).iter().map(|v| v.exp()).sum();
                prop_assert!((total - 1.0).abs() < 1e-12, "agent {} round {}: {}", i, traj.rounds()[idx], total);
            }
        }
    }

    #[test]
    fn engine_matches_oracle(config in instance()) {
        let traj = run(&config).unwrap();
        let oracle = oracle_run(&config).unwrap();
        for (t, states) in oracle.iter().enumerate() {
            for (i, s) in states.iter().enumerate() {
                for (h, p) in s.beta.p.iter().enumerate() {
                    let e = traj.log_belief(t, i, HypothesisId(h)).exp();
                    prop_assert!((e - p).abs() <= 1e-9 * p.max(1e-300) + 1e-12, "t={} i={} h={}: {} vs {}", t, i, h, e, p);
                }
            }
        }
    }

    #[test]
    fn processing_order_is_irrelevant(config in instance(), key in any::<u64>()) {
        let n = config.network.n_agents();
        let mut order: Vec<usize> = (0..n).collect();
        // cheap deterministic shuffle from the key
        for i in (1..n).rev() {
            let j = (key.rotate_left(i as u32) as usize) % (i + 1);
            order.swap(i, j);
        }
        let mut a = Simulation::new(&config).unwrap();
        let mut b = Simulation::new(&config).unwrap().parallel(true);
        let mut c = Simulation::new(&config).unwrap();
        for _ in 0..config.horizon {
            let da = a.advance().unwrap();
            prop_assert_eq!(&da, &b.advance().unwrap());
            prop_assert_eq!(&da, &c.advance_in_order(&order).unwrap());
            prop_assert_eq!(a.states(), b.states());
            prop_assert_eq!(a.states(), c.states());
        }
    }

    #[test]
    fn edge_list_round_trip(n in 2usize..12, raw in proptest::collection::vec((0usize..12, 0usize..12), 0..40)) {
        let edges: Vec<_> = raw.into_iter().map(|(a, b)| (a % n, b % n)).filter(|(a, b)| a != b).collect();
        let net = Network::from_edges(n, edges).unwrap();
        let back = parse_edge_list(&net.to_edge_list(), Some(n), false).unwrap();
        prop_assert_eq!(back, net);
    }

    #[test]
    fn model_json_round_trip(n in 1usize..5, m in 2usize..6, alphabet in 1usize..7, seed in any::<u64>()) {
        let model = generate_random_model(&ModelParams::uniform_alphabet(n, m, alphabet), seed).unwrap();
        let back = LikelihoodModel::from_json(&model.to_json()).unwrap();
        prop_assert_eq!(back, model);
    }
}
