//! Acceptance suite: every criterion runs at its stated tolerance and
//! prints one pass line. Criterion 10 (byte-identical CLI outputs) lives
//! in the CLI crate's own acceptance test because it drives the binary.
//!
//! Run with `cargo test -p gpata --test acceptance -- --nocapture`.

use gpata::balance::balance;
use gpata::game::{self, GameInstance};
use gpata::model::{DeviceId, DeviceState, Point, TaskId};
use gpata::negotiation::{
    audit_broadcast, negotiate, NegotiationContext, NegotiationParams,
};
use gpata::privacy::{cloak, estimate_conservative, GlobalBounds, PrivacyProfile};
use gpata::report::broadcast_log_jsonl;
use gpata::reward::{compute_rewards, update_weights, LossPairing, RewardWeights};
use gpata::rng::{stream, substream};
use gpata::scenario::PrivacyPreset;
use gpata::{dhr_at_deadline, run_scheme, ScenarioConfig, Scheme};
use rand::Rng;
use std::time::Instant;

fn pass(criterion: u32, detail: &str) {
    println!("criterion {criterion:02} PASS - {detail}");
}

/// Random negotiation instance with task-independent quality per device,
/// the shape the engine produces.
fn seeded_instance(seed: u64, max_devices: usize, max_tasks: usize) -> GameInstance {
    let mut gen = substream(seed, "acceptance_instance", 0, 0);
    let devices = gen.random_range(2..=max_devices);
    let tasks = gen.random_range(2..=max_tasks);
    let rewards = (0..tasks).map(|_| gen.random_range(1.0..10.0)).collect();
    let quality: Vec<Vec<f64>> = (0..devices)
        .map(|_| {
            let q = gen.random_range(0.2..2.5);
            vec![q; tasks]
        })
        .collect();
    let energy: Vec<Vec<f64>> = (0..devices)
        .map(|_| (0..tasks).map(|_| gen.random_range(0.5..3.0)).collect())
        .collect();
    let feasible: Vec<Vec<bool>> = (0..devices)
        .map(|_| (0..tasks).map(|_| gen.random::<f64>() > 0.15).collect())
        .collect();
    GameInstance {
        device_ids: (0..devices as u32).map(DeviceId).collect(),
        task_ids: (0..tasks as u32).map(TaskId).collect(),
        rewards,
        quality,
        energy,
        feasible,
    }
}

#[test]
fn criterion_01_converged_negotiations_are_equilibria() {
    let started = Instant::now();
    let params = NegotiationParams { decay: 0.5, inertia: 0.8, bound: 30 };
    let mut converged = 0;
    for seed in 0..50u64 {
        let instance = seeded_instance(seed, 5, 5);
        let mut log = Vec::new();
        let outcome = negotiate(
            &instance,
            &params,
            None,
            NegotiationContext::default(),
            &mut substream(seed, "inertia", 0, 0),
            &mut substream(seed, "tie_break", 0, 0),
            &mut log,
        );
        if outcome.converged {
            converged += 1;
            assert!(
                game::verify_equilibrium(&instance, &outcome.profile),
                "seed {seed}: converged profile fails the deviation scan"
            );
        }
    }
    assert!(converged >= 20, "only {converged}/50 runs converged");
    assert!(started.elapsed().as_secs_f64() < 5.0);
    pass(1, &format!("{converged}/50 converged runs all pass the exhaustive deviation scan"));
}

#[test]
fn criterion_02_tie_break_frequencies_match_probabilities() {
    let started = Instant::now();
    let draws = 100_000u32;
    for (case, scores) in [
        ("a", vec![3.0, 1.0]),
        ("b", vec![1.0, 1.0, 2.0]),
        ("c", vec![5.0]),
    ] {
        let claimants: Vec<(usize, f64)> = scores.iter().copied().enumerate().collect();
        let mut rng = stream(0xACCE97, case);
        let mut wins = vec![0u32; scores.len()];
        for _ in 0..draws {
            wins[game::tie_break(&claimants, &mut rng)] += 1;
        }
        let total: f64 = scores.iter().sum();
        for (i, q) in scores.iter().enumerate() {
            let expected = q / total;
            let observed = f64::from(wins[i]) / f64::from(draws);
            assert!(
                (observed - expected).abs() < 0.01,
                "set {case} claimant {i}: observed {observed:.4} expected {expected:.4}"
            );
        }
    }
    assert!(started.elapsed().as_secs_f64() < 2.0);
    pass(2, "winner frequencies within ±0.01 of quality shares on all three score sets");
}

#[test]
fn criterion_03_conservative_estimates_never_flatter() {
    let config = ScenarioConfig::reference();
    let hierarchy = &config.hierarchy;
    let pois = hierarchy.all_points();
    let bounds = GlobalBounds { freq_max: config.privacy.freq_max };
    let mut rng = stream(3, "dominance");
    for case in 0..1000u32 {
        let location = pois[rng.random_range(0..pois.len())];
        let state = DeviceState {
            id: DeviceId(case),
            cpu_freq: rng.random_range(0.1..bounds.freq_max),
            cpu_usage: rng.random_range(0.0..1.0),
            location,
            power_comp: 1.0,
            power_trans_per_byte: 0.0,
            utilization: 0.0,
        };
        let profile = PrivacyProfile {
            location: rng.random_range(0..=3),
            freq: rng.random_range(0..=3),
            usage: rng.random_range(0..=3),
        };
        let server = Point::new(rng.random_range(0.0..1.6), rng.random_range(0.0..1.6));
        let view = cloak(&state, &profile, hierarchy, &bounds).unwrap();
        let estimate = estimate_conservative(&view, server);
        let truth = gpata::privacy::Estimate {
            freq: state.cpu_freq,
            usage: state.cpu_usage,
            dist: state.location.distance(server),
        };
        assert!(estimate.freq <= truth.freq + 1e-12, "case {case}");
        assert!(estimate.usage >= truth.usage - 1e-12, "case {case}");
        assert!(estimate.dist >= truth.dist - 1e-12, "case {case}");
        for (l1, l2) in [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (2.0, 0.3)] {
            assert!(
                game::quality_score(&estimate, l1, l2)
                    <= game::quality_score(&truth, l1, l2) + 1e-12,
                "case {case} lambda ({l1},{l2})"
            );
        }
    }
    pass(3, "1000 cloak->estimate pairs: worst-case readings never beat the truth");
}

#[test]
fn criterion_04_every_broadcast_passes_the_privacy_audit() {
    let config = ScenarioConfig::reference();
    let result = run_scheme(&config, Scheme::Gpata);
    assert!(
        result.broadcasts.len() > 1000,
        "reference run should negotiate heavily, got {} broadcasts",
        result.broadcasts.len()
    );
    let log = broadcast_log_jsonl(&result);
    let mut audited = 0usize;
    for line in log.lines() {
        let value: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(audit_broadcast(&value), "broadcast leaked device-level data: {line}");
        audited += 1;
    }
    assert_eq!(audited, result.broadcasts.len());
    pass(4, &format!("{audited} broadcasts expose per-task aggregates only"));
}

#[test]
fn criterion_05_rewards_conserve_budget_and_weights_stay_positive() {
    let mut weights = RewardWeights::new(0.2, 100.0, 1.2, None);
    let mut rng = stream(5, "reward_conservation");
    for step in 0..10_000u32 {
        let tasks = rng.random_range(1..=40usize);
        let complexities: Vec<(f64, f64)> = (0..tasks)
            .map(|_| (rng.random_range(0.0..5.0), rng.random_range(0.0..5.0)))
            .collect();
        let budget = weights.budget;
        let rewards = compute_rewards(&complexities, &weights, budget);
        let total: f64 = rewards.iter().sum();
        assert!(
            (total - budget).abs() <= 1e-9 * budget,
            "step {step}: rewards sum {total} != budget {budget}"
        );
        assert!(rewards.iter().all(|r| *r >= 0.0));
        let misses: Vec<bool> = (0..tasks).map(|_| rng.random::<f64>() < 0.4).collect();
        let comp: Vec<f64> = complexities.iter().map(|c| c.0).collect();
        let trans: Vec<f64> = complexities.iter().map(|c| c.1).collect();
        update_weights(&mut weights, &misses, &comp, &trans, LossPairing::Literal);
        assert!(
            weights.alpha1 > 0.0 && weights.alpha2 > 0.0,
            "step {step}: weights collapsed"
        );
    }
    pass(5, "10^4 randomized steps: budget conserved to 1e-9, weights strictly positive");
}

#[test]
fn criterion_06_replayed_allocation_dhr_is_monotone_in_deadline() {
    let config = ScenarioConfig::reference();
    for seed in [42u64, 43, 44] {
        let mut scenario = config.clone();
        scenario.seed = seed;
        let result = run_scheme(&scenario, Scheme::Gpata);
        let mut previous = 0.0;
        for deadline in [0.5, 1.0, 2.0, 4.0, 8.0] {
            let dhr = dhr_at_deadline(&result.cycles, deadline);
            assert!(
                dhr >= previous,
                "seed {seed}: DHR fell from {previous} to {dhr} at deadline {deadline}"
            );
            previous = dhr;
        }
    }
    pass(6, "recorded allocations: DHR non-decreasing over deadlines 0.5..8 s on every seed");
}

#[test]
fn criterion_07_trends_favor_the_full_pipeline() {
    let started = Instant::now();
    let base = ScenarioConfig::reference();
    let mut means = std::collections::BTreeMap::new();
    for scheme in [Scheme::Gpata, Scheme::Random, Scheme::Gmxr, Scheme::Cog] {
        let mut dhr = 0.0;
        let mut payoff = 0.0;
        for i in 0..10u64 {
            let mut config = base.clone();
            config.seed = 1000 + i;
            config.privacy.preset = PrivacyPreset::Medium;
            let summary = run_scheme(&config, scheme).summary;
            dhr += summary.dhr;
            payoff += summary.mean_device_payoff;
        }
        means.insert(scheme.as_str(), (dhr / 10.0, payoff / 10.0));
    }
    let (gpata_dhr, gpata_payoff) = means["gpata"];
    let (random_dhr, _) = means["random"];
    let (gmxr_dhr, _) = means["gmxr"];
    let (_, cog_payoff) = means["cog"];
    assert!(
        gpata_dhr >= random_dhr,
        "mean DHR gpata {gpata_dhr:.4} < random {random_dhr:.4}"
    );
    assert!(
        gpata_dhr >= gmxr_dhr,
        "mean DHR gpata {gpata_dhr:.4} < gmxr {gmxr_dhr:.4}"
    );
    assert!(
        gpata_payoff >= cog_payoff,
        "mean payoff gpata {gpata_payoff:.2} < cog {cog_payoff:.2}"
    );
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "trend check took {elapsed:.1} s");
    pass(
        7,
        &format!(
            "10-seed means: DHR {gpata_dhr:.3} >= random {random_dhr:.3}, >= gmxr {gmxr_dhr:.3}; payoff {gpata_payoff:.1} >= cog {cog_payoff:.1} ({elapsed:.1} s)"
        ),
    );
}

#[test]
fn criterion_08_bound_one_degenerates_to_sealed_bidding() {
    let params = NegotiationParams { decay: 0.5, inertia: 0.8, bound: 1 };
    for seed in 100..140u64 {
        let instance = seeded_instance(seed, 6, 6);
        let mut log = Vec::new();
        let outcome = negotiate(
            &instance,
            &params,
            None,
            NegotiationContext::default(),
            &mut substream(seed, "inertia", 0, 0),
            &mut substream(seed, "tie_break", 0, 0),
            &mut log,
        );
        assert_eq!(outcome.iterations, 1, "seed {seed}");
        assert!(!outcome.converged);
    }
    pass(8, "bound 1 always yields exactly one claim round before tie-breaking");
}

#[test]
fn criterion_09_balancing_stays_even_and_subquadratic() {
    let started = Instant::now();
    // evenness on randomized rosters
    let mut rng = stream(9, "balance_rosters");
    for _ in 0..1000 {
        let devices = rng.random_range(0..60usize);
        let servers = rng.random_range(1..7usize);
        let distances: Vec<Vec<f64>> = (0..devices)
            .map(|_| (0..servers).map(|_| rng.random_range(0.0..10.0)).collect())
            .collect();
        let sizes = balance(&distances, servers).group_sizes();
        let spread = sizes.iter().max().unwrap() - sizes.iter().min().unwrap();
        assert!(spread <= 1);
    }

    // sub-quadratic growth in the device count at fixed server count
    let time_for = |devices: usize| {
        let mut gen = stream(devices as u64, "balance_scaling");
        let distances: Vec<Vec<f64>> = (0..devices)
            .map(|_| (0..3).map(|_| gen.random_range(0.0..10.0)).collect())
            .collect();
        let t0 = Instant::now();
        let reps = if devices <= 1000 { 20 } else { 5 };
        for _ in 0..reps {
            std::hint::black_box(balance(&distances, 3));
        }
        t0.elapsed().as_secs_f64() / f64::from(reps)
    };
    let _warmup = time_for(100);
    let t2 = time_for(100);
    let t3 = time_for(1000);
    let t4 = time_for(10_000);
    let ratio = t4 / t3.max(1e-7);
    assert!(
        ratio < 50.0,
        "10x devices cost {ratio:.1}x (quadratic would be ~100x); t={t2:.2e},{t3:.2e},{t4:.2e}"
    );
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 30.0);
    pass(
        9,
        &format!("1000 rosters within ±1; 10x devices cost {ratio:.1}x time ({elapsed:.1} s total)"),
    );
}
