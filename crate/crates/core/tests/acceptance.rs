//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`). The process fails if any
//! criterion fails, except for those listed in [`KNOWN_FAILURES`], which are
//! still reported as FAIL.

use std::path::Path;
use std::time::Instant;

use minrule::belief::{
    estimate_update_own, estimate_update_previous, local_update, min_rule, BeliefVector, SharedMessage,
};
use minrule::engine::{run, run_parallel, RecordFlags, SharingMode, Simulation, SimulationConfig, TauMode, Trajectory};
use minrule::graph::{AgentId, Network};
use minrule::metrics::{convergence_time, learning_verdict, median_convergence_time, rejection_rate};
use minrule::model::{generate_random_model, HypothesisId, LikelihoodModel, ModelParams};
use minrule::oracle::{exhaustive_local_posterior, oracle_run, DenseBelief};
use minrule::runner::export::write_trajectory;
use minrule::runner::{cmd_run, compare_modes, ExperimentSpec, Options};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria that fail on the pinned setup; see the project notes.
const KNOWN_FAILURES: &[u32] = &[6];

const H0: HypothesisId = HypothesisId(0);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

/// The 10-agent, 4-regular, 5-hypothesis, 20-signal instance family.
fn small_spec(tau: &str, horizon: usize, every: usize) -> ExperimentSpec {
    let text = format!(
        "[graph]\nn_agents = 10\ndegree = 4\n\
         [model]\nn_hypotheses = 5\nalphabet_size = 20\ndiscriminating_agents = [0]\nmin_kl = 0.05\n\
         [run]\ntau_mode = \"{tau}\"\nhorizon = {horizon}\nrecord_every = {every}\nseeds = \"1,2,3,4,5,6,7,8,9,10\"\n"
    );
    ExperimentSpec::from_toml(&text, Path::new(".")).expect("valid spec")
}

fn all_modes_learn(tau: &str) -> Outcome {
    let spec = small_spec(tau, 3000, 3000);
    let mut failures = Vec::new();
    let mut worst = 1.0f64;
    for &seed in &spec.run.seeds {
        let inst = spec.instance(seed).expect("instance");
        for mode in SharingMode::COMPARED {
            let traj = run(&spec.config(&inst, seed, mode)).expect("run");
            let b = (0..10).map(|i| traj.final_public_log(i)[0].exp()).fold(1.0, f64::min);
            worst = worst.min(b);
            if !learning_verdict(&traj, H0, 0.01) {
                failures.push(format!("{mode}/seed {seed}"));
            }
        }
    }
    outcome(failures.is_empty(), format!("30 runs, lowest final belief on h* {worst:.6}; failures: {failures:?}"))
}

fn criterion_1() -> Outcome {
    all_modes_learn("global")
}

fn criterion_2() -> Outcome {
    let model = LikelihoodModel::from_columns(vec![vec![vec![0.8, 0.2], vec![0.5, 0.5]]]).unwrap();
    let k = 0.8 * 1.6f64.ln() + 0.2 * 0.4f64.ln();
    let network = Network::from_edges(1, []).unwrap();
    let t = 20_000usize;
    let mut values = Vec::new();
    for seed in 0..10 {
        let cfg = SimulationConfig::new(network.clone(), model.clone(), H0, SharingMode::Full)
            .with_horizon(t)
            .with_seed(seed)
            .with_record(RecordFlags { local: true, every: t, ..RecordFlags::default() });
        let traj = run(&cfg).unwrap();
        let alpha = traj.local_log(traj.n_recorded() - 1, 0).unwrap();
        values.push((alpha[1] - alpha[0]) / t as f64);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let rel = (mean + k).abs() / k;
    outcome(rel <= 0.10, format!("mean (1/t) ln(a(h1)/a(h*)) = {mean:.5}, -K = {:.5}, off by {:.2}%", -k, 100.0 * rel))
}

fn criterion_3() -> Outcome {
    let spec = small_spec("global", 20_000, 1);
    let seed = spec.run.seeds[0];
    let inst = spec.instance(seed).unwrap();
    let mut ok = true;
    let mut worst = f64::INFINITY;
    for mode in [SharingMode::Full, SharingMode::PartialPrevious] {
        let traj = run(&spec.config(&inst, seed, mode)).unwrap();
        for h in (1..5).map(HypothesisId) {
            let k0 = inst.model.kl_divergence(0, H0, h);
            let tail = rejection_rate(&traj, 0, h).unwrap().tail_mean(0.1).unwrap();
            worst = worst.min(tail / k0);
            ok &= tail >= 0.9 * k0;
        }
    }
    outcome(ok, format!("smallest tail rate / K_0 over 2 modes x 4 hypotheses: {worst:.4}"))
}

fn criterion_4() -> Outcome {
    let network = Network::undirected(2, [(0, 1)]).unwrap();
    let mut worst = 0.0f64;
    let mut learned = 0;
    for seed in 0..10u64 {
        let params = ModelParams::uniform_alphabet(2, 3, 4).with_discriminating(vec![0], 0.05);
        let random = generate_random_model(&params, seed).unwrap();
        let copied = random.column(1, H0);
        let columns = vec![
            (0..3).map(|h| random.column(0, HypothesisId(h))).collect(),
            vec![copied.clone(), copied.clone(), copied],
        ];
        let model = LikelihoodModel::from_columns(columns).unwrap();
        let cfg = SimulationConfig::new(network.clone(), model, H0, SharingMode::Fixed(HypothesisId(1)))
            .with_horizon(5000)
            .with_seed(seed);
        let traj = run(&cfg).unwrap();
        worst = worst.max(traj.final_public_log(1)[0].exp());
        learned += learning_verdict(&traj, H0, 0.01) as usize;
    }
    outcome(
        worst <= 0.5 + 1e-6 && learned == 0,
        format!("largest final belief of agent 1 on h*: {worst:.9}; runs that learned: {learned}"),
    )
}

/// Random strongly connected graph on `n <= 4` agents: a directed cycle plus extra edges.
fn random_small_network(n: usize, rng: &mut ChaCha8Rng) -> Network {
    let mut order: Vec<AgentId> = (0..n).collect();
    order.shuffle(rng);
    let mut edges: Vec<(AgentId, AgentId)> =
        if n > 1 { (0..n).map(|k| (order[k], order[(k + 1) % n])).collect() } else { vec![] };
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.random_bool(0.3) {
                edges.push((i, j));
            }
        }
    }
    Network::from_edges(n, edges).unwrap()
}

/// Random model whose columns are pulled toward uniform until every KL is at most 0.1.
fn random_small_model(n: usize, m: usize, rng: &mut ChaCha8Rng) -> LikelihoodModel {
    let columns: Vec<Vec<Vec<f64>>> = (0..n)
        .map(|_| {
            let size = rng.random_range(2..=6);
            let raw: Vec<Vec<f64>> = (0..m)
                .map(|_| {
                    let c: Vec<f64> = (0..size).map(|_| rng.random_range(0.05..1.0)).collect();
                    let s: f64 = c.iter().sum();
                    c.into_iter().map(|v| v / s).collect()
                })
                .collect();
            let mut w = 1.0;
            loop {
                let mixed: Vec<Vec<f64>> =
                    raw.iter().map(|c| c.iter().map(|v| w * v + (1.0 - w) / size as f64).collect()).collect();
                let max_kl = mixed
                    .iter()
                    .flat_map(|a| {
                        mixed.iter().map(move |b| a.iter().zip(b).map(|(p, q)| p * (p / q).ln()).sum::<f64>())
                    })
                    .fold(0.0, f64::max);
                if max_kl <= 0.1 {
                    break mixed;
                }
                w *= 0.8;
            }
        })
        .collect();
    LikelihoodModel::from_columns(columns).unwrap()
}

fn rel_dev(log_engine: &[f64], p: &[f64]) -> f64 {
    log_engine.iter().zip(p).map(|(l, p)| ((l.exp() - p) / p).abs()).fold(0.0, f64::max)
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let modes = [SharingMode::Full, SharingMode::PartialPrevious, SharingMode::PartialOwn];
    let mut worst = 0.0f64;
    let mut max_kl = 0.0f64;
    let mut count = 0;
    for mode in modes {
        for k in 0..20 {
            let n = rng.random_range(1..=4);
            let m = rng.random_range(2..=4);
            let network = random_small_network(n, &mut rng);
            let model = random_small_model(n, m, &mut rng);
            for i in 0..n {
                for a in 0..m {
                    for b in 0..m {
                        max_kl = max_kl.max(model.kl_divergence(i, HypothesisId(a), HypothesisId(b)));
                    }
                }
            }
            let h_true = HypothesisId(rng.random_range(0..m));
            let tau = if k % 2 == 0 { TauMode::Global } else { TauMode::PerAgent };
            let cfg = SimulationConfig::new(network, model, h_true, mode)
                .with_tau_mode(tau)
                .with_horizon(200)
                .with_seed(rng.random())
                .with_record(RecordFlags::everything());
            let traj = run(&cfg).unwrap();
            let oracle = oracle_run(&cfg).unwrap();
            for (idx, states) in oracle.iter().enumerate() {
                for (i, s) in states.iter().enumerate() {
                    worst = worst.max(rel_dev(traj.public_log(idx, i), &s.beta.p));
                    worst = worst.max(rel_dev(traj.local_log(idx, i).unwrap(), &s.alpha.p));
                    for (j, est) in traj.estimates(idx, i).unwrap() {
                        worst = worst.max(rel_dev(est.log_probs(), &s.estimates[j].p));
                    }
                }
            }
            count += 1;
        }
    }
    outcome(
        worst <= 1e-9,
        format!("{count} instances x 200 rounds, max relative deviation {worst:.3e} (largest KL {max_kl:.4})"),
    )
}

fn criterion_6() -> Outcome {
    let mut spec = ExperimentSpec::bundled();
    spec.run.seeds = vec![1, 2, 3, 4, 5];
    let mut all_learn = true;
    let mut ordered = 0;
    let mut rows = Vec::new();
    for &seed in &spec.run.seeds {
        let cmp = compare_modes(&spec, seed).expect("comparison");
        let mut med = Vec::new();
        for (_, traj) in &cmp.runs {
            all_learn &= learning_verdict(traj, H0, 0.01);
            med.push(median_convergence_time(&convergence_time(traj, 0.99, H0).unwrap()).unwrap_or(f64::INFINITY));
        }
        if med[0] <= med[1] && med[1] <= med[2] {
            ordered += 1;
        }
        rows.push(format!("seed {seed}: {}/{}/{}", med[0], med[1], med[2]));
    }
    outcome(
        all_learn && ordered >= 3,
        format!(
            "(a) all modes learn: {all_learn}; (b) full <= partial_previous <= partial_own in {ordered}/5 seeds; \
             median rounds to 0.99 (full/partial_previous/partial_own): {}",
            rows.join(", ")
        ),
    )
}

fn criterion_7() -> Outcome {
    all_modes_learn("per_agent")
}

fn csv_bytes(traj: &Trajectory) -> Vec<u8> {
    let mut buf = Vec::new();
    write_trajectory(traj, &mut buf).unwrap();
    buf
}

fn criterion_8() -> Outcome {
    let mut problems = Vec::new();
    let spec = small_spec("per_agent", 300, 1);
    let inst = spec.instance(3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for mode in
        [SharingMode::Full, SharingMode::PartialPrevious, SharingMode::PartialOwn, SharingMode::Fixed(HypothesisId(2))]
    {
        for tau in [TauMode::Global, TauMode::PerAgent] {
            let cfg = spec.config(&inst, 3, mode).with_tau_mode(tau).with_record(RecordFlags::everything());
            let (a, b) = (run(&cfg).unwrap(), run(&cfg).unwrap());
            if csv_bytes(&a) != csv_bytes(&b) {
                problems.push(format!("{mode}/{tau:?}: repeated runs differ"));
            }
            if csv_bytes(&run_parallel(&cfg).unwrap()) != csv_bytes(&a) {
                problems.push(format!("{mode}/{tau:?}: parallel run differs"));
            }
            let mut plain = Simulation::new(&cfg).unwrap();
            let mut shuffled = Simulation::new(&cfg).unwrap();
            let mut order: Vec<AgentId> = (0..10).collect();
            for _ in 0..cfg.horizon {
                order.shuffle(&mut rng);
                plain.advance().unwrap();
                shuffled.advance_in_order(&order).unwrap();
                if plain.states() != shuffled.states() {
                    problems.push(format!("{mode}/{tau:?}: permuted order differs at round {}", plain.round()));
                    break;
                }
            }
        }
    }
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut run_spec = small_spec("global", 200, 1);
    run_spec.run.mode = minrule::runner::spec::ModeName::PartialPrevious;
    run_spec.run.seeds = vec![4, 5];
    for d in &dirs {
        cmd_run(&run_spec, &Options { out: Some(d.path().to_path_buf()), seed: None }).unwrap();
    }
    for seed in [4, 5] {
        for name in [format!("trajectory_seed{seed}.csv"), format!("metrics_seed{seed}.csv")] {
            let a = std::fs::read(dirs[0].path().join(&name)).unwrap();
            let b = std::fs::read(dirs[1].path().join(&name)).unwrap();
            if a != b {
                problems.push(format!("exported {name} differs"));
            }
        }
    }
    outcome(
        problems.is_empty(),
        format!(
            "8 configurations repeated, parallel and order-permuted; 2 exported runs compared; problems: {problems:?}"
        ),
    )
}

fn runner(cases: u32, seed_tag: u8) -> TestRunner {
    let mut seed = [0u8; 32];
    seed[0] = seed_tag;
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(config, TestRng::from_seed(RngAlgorithm::ChaCha, &seed))
}

fn log_weights(m: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-40.0f64..0.0, m)
}

fn check_simplex(b: &BeliefVector) -> Result<(), TestCaseError> {
    prop_assert!(b.log_probs().iter().all(|l| l.is_finite() && *l <= 1e-12));
    prop_assert!(b.simplex_error() <= 1e-9, "simplex error {}", b.simplex_error());
    Ok(())
}

type RoundInput = (usize, Vec<f64>, Vec<f64>, Vec<Vec<f64>>, Vec<f64>, usize, Vec<usize>);

fn round_input() -> impl Strategy<Value = RoundInput> {
    (2usize..=6).prop_flat_map(|m| {
        (
            Just(m),
            log_weights(m),
            log_weights(m),
            prop::collection::vec(log_weights(m), 0..5),
            prop::collection::vec(1e-6f64..1.0, m),
            0..m,
            Just((0..m).collect::<Vec<usize>>()).prop_shuffle(),
        )
    })
}

fn bv(lw: &[f64]) -> BeliefVector {
    BeliefVector::from_log_weights(lw.to_vec()).unwrap()
}

fn permute<T: Clone>(v: &[T], perm: &[usize]) -> Vec<T> {
    // output position k holds input entry perm[k]
    perm.iter().map(|&p| v[p].clone()).collect()
}

fn close(a: &BeliefVector, b: &BeliefVector, tol: f64) -> bool {
    a.log_probs().iter().zip(b.log_probs()).all(|(x, y)| (x - y).abs() <= tol)
}

/// One full round of the per-agent rules on arbitrary inputs.
fn round(
    own: &BeliefVector,
    alpha_prev: &BeliefVector,
    nbs: &[BeliefVector],
    lik: &[f64],
    tau: usize,
) -> Vec<BeliefVector> {
    let alpha = local_update(alpha_prev, lik).unwrap();
    let msgs: Vec<SharedMessage> = nbs.iter().map(|b| SharedMessage::from_belief(b, HypothesisId(tau))).collect();
    let prev_est: Vec<BeliefVector> = msgs.iter().map(|m| estimate_update_previous(alpha_prev, m).unwrap()).collect();
    let own_est: Vec<BeliefVector> = msgs.iter().map(|m| estimate_update_own(own, m).unwrap()).collect();
    let full = min_rule(own, nbs, &alpha).unwrap();
    let pp = min_rule(own, &prev_est, &alpha).unwrap();
    let po = min_rule(own, &own_est, &alpha).unwrap();
    let mut out = vec![alpha, full, pp, po];
    out.extend(prev_est);
    out.extend(own_est);
    out
}

fn criterion_9() -> Outcome {
    let cases = 1000;
    let mut results = Vec::new();

    let simplex = runner(cases, 1).run(&round_input(), |(_, own, ap, nbs, lik, tau, _)| {
        let nbs: Vec<BeliefVector> = nbs.iter().map(|v| bv(v)).collect();
        for b in round(&bv(&own), &bv(&ap), &nbs, &lik, tau) {
            check_simplex(&b)?;
        }
        Ok(())
    });
    results.push(("simplex", simplex.map_err(|e| e.to_string())));

    let equivariance = runner(cases, 2).run(&round_input(), |(_, own, ap, nbs, lik, tau, perm)| {
        let nbv: Vec<BeliefVector> = nbs.iter().map(|v| bv(v)).collect();
        let base = round(&bv(&own), &bv(&ap), &nbv, &lik, tau);
        // relabel hypotheses
        let inv_tau = perm.iter().position(|&p| p == tau).unwrap();
        let pnbs: Vec<BeliefVector> = nbs.iter().map(|v| bv(&permute(v, &perm))).collect();
        let relabeled =
            round(&bv(&permute(&own, &perm)), &bv(&permute(&ap, &perm)), &pnbs, &permute(&lik, &perm), inv_tau);
        for (a, b) in base.iter().zip(&relabeled) {
            let expect = bv(&permute(a.log_probs(), &perm));
            prop_assert!(close(&expect, b, 1e-12), "{:?} vs {:?}", expect.log_probs(), b.log_probs());
        }
        // reorder neighbors
        let mut rev = nbv.clone();
        rev.reverse();
        let reordered = round(&bv(&own), &bv(&ap), &rev, &lik, tau);
        prop_assert_eq!(&base[..4], &reordered[..4]);
        Ok(())
    });
    results.push(("permutation equivariance", equivariance.map_err(|e| e.to_string())));

    let fixed_points = runner(cases, 3).run(&round_input(), |(m, own, ap, _, _, tau, _)| {
        let (own, stored) = (bv(&own), bv(&ap));
        let h = HypothesisId(tau);
        let same_prev = estimate_update_previous(&stored, &SharedMessage::from_belief(&stored, h)).unwrap();
        prop_assert!(close(&same_prev, &stored, 1e-12));
        let same_own = estimate_update_own(&own, &SharedMessage::from_belief(&own, h)).unwrap();
        prop_assert!(close(&same_own, &own, 1e-12));
        prop_assert!(close(&min_rule(&own, [&own], &own).unwrap(), &own, 1e-12));
        let flat = vec![1.0 / m as f64; m];
        prop_assert!(close(&local_update(&own, &flat).unwrap(), &own, 1e-12));
        Ok(())
    });
    results.push(("estimate fixed points", fixed_points.map_err(|e| e.to_string())));

    let telescoping_input = (2usize..=4, 2usize..=6).prop_flat_map(|(m, size)| {
        (
            prop::collection::vec(prop::collection::vec(0.05f64..1.0, size), m),
            prop::collection::vec(0.05f64..1.0, m),
            prop::collection::vec(0..size, 0..60),
        )
    });
    let telescoping = runner(cases, 4).run(&telescoping_input, |(raw, prior, obs)| {
        let cols: Vec<Vec<f64>> = raw
            .iter()
            .map(|c| {
                let s: f64 = c.iter().sum();
                c.iter().map(|v| v / s).collect()
            })
            .collect();
        let model = LikelihoodModel::from_columns(vec![cols]).unwrap();
        let total: f64 = prior.iter().sum();
        let prior = DenseBelief { p: prior.iter().map(|p| p / total).collect() };
        let mut alpha = BeliefVector::from_probs(&prior.p).unwrap();
        for &o in &obs {
            alpha = local_update(&alpha, model.row(0, o)).unwrap();
        }
        let direct = exhaustive_local_posterior(&model, 0, &obs, &prior).unwrap();
        let dev = rel_dev(alpha.log_probs(), &direct.p);
        prop_assert!(dev <= 1e-9, "relative deviation {dev:e}");
        Ok(())
    });
    results.push(("telescoping posterior", telescoping.map_err(|e| e.to_string())));

    let failed: Vec<String> =
        results.iter().filter_map(|(n, r)| r.as_ref().err().map(|e| format!("{n}: {e}"))).collect();
    let names: Vec<&str> = results.iter().map(|r| r.0).collect();
    outcome(failed.is_empty(), format!("{cases} cases each for {}; failures: {failed:?}", names.join(", ")))
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "true learning in every mode, 10 seeds", criterion_1),
        (2, "local belief rate matches the KL divergence", criterion_2),
        (3, "discriminating agent meets the rate bound", criterion_3),
        (4, "fixed shared hypothesis prevents learning", criterion_4),
        (5, "engine agrees with the linear-domain oracle", criterion_5),
        (6, "100-agent comparison of the three modes", criterion_6),
        (7, "per-agent shared hypotheses still learn", criterion_7),
        (8, "byte-identical and order-independent results", criterion_8),
        (9, "invariant property suite", criterion_9),
    ];
    let mut unexpected = Vec::new();
    let mut passed = 0;
    for (id, name, check) in criteria {
        let start = Instant::now();
        let o = check();
        let status = if o.passed { "PASS" } else { "FAIL" };
        let note = if !o.passed && KNOWN_FAILURES.contains(&id) { " [known failure]" } else { "" };
        println!("criterion {id}: {status}{note} {name} ({:.1}s): {}", start.elapsed().as_secs_f64(), o.detail);
        if o.passed {
            passed += 1;
        } else if !KNOWN_FAILURES.contains(&id) {
            unexpected.push(id);
        }
    }
    println!("acceptance: {passed}/9 criteria pass");
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
