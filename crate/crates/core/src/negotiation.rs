//! Decentralized negotiation engine: congestion-rate estimation, best
//! response with inertia, bounded iteration count, convergence detection,
//! and the aggregate-only broadcast discipline.
//!
//! Each iteration the server broadcasts per-task aggregates (rewards,
//! congestion estimates, and the previous iteration's actual congestion);
//! devices respond simultaneously with a single claim each. No device ever
//! observes another device's individual claim, score, or identity.
//!
//! A run is converged when the claim vector repeats across two consecutive
//! iterations *and* no device reports a strictly profitable unilateral
//! switch under the actual congestion of that repeated profile. The second
//! condition closes the gap left by inertia: a device that happened to
//! freeze while wanting to move does not mask an unstable profile.

use crate::game::{Claimants, GameInstance, StrategyProfile};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Schema version stamped on every negotiation message.
pub const MESSAGE_VERSION: u32 = 1;

/// Per-task congestion-rate estimates with exponential decay.
#[derive(Debug, Clone, PartialEq)]
pub struct CongestionState {
    pub rates: Vec<f64>,
    /// Decay factor in (0, 1]: weight of the previous estimate.
    pub decay: f64,
}

impl CongestionState {
    pub fn new(rates: Vec<f64>, decay: f64) -> Self {
        debug_assert!(decay > 0.0 && decay <= 1.0);
        Self { rates, decay }
    }

    /// Blends the previous estimates with the observed claimant quality:
    /// `rate <- decay * rate + (1 - decay) * actual`, for every task.
    pub fn update(&mut self, actual: &[f64]) {
        debug_assert_eq!(actual.len(), self.rates.len());
        for (rate, a) in self.rates.iter_mut().zip(actual) {
            debug_assert!(*a >= 0.0);
            *rate = self.decay * *rate + (1.0 - self.decay) * a;
        }
    }
}

/// Knobs of one negotiation run.
#[derive(Debug, Clone, Copy)]
pub struct NegotiationParams {
    /// Congestion decay factor, in (0, 1].
    pub decay: f64,
    /// Probability of refreshing the claim each iteration, in (0, 1].
    pub inertia: f64,
    /// Hard bound on iterations. 1 degenerates to sealed bidding.
    pub bound: u32,
}

/// Where in the run a broadcast was emitted; stamped into the message log.
#[derive(Debug, Clone, Copy, Default)]
pub struct NegotiationContext {
    pub cycle: u32,
    pub group: u32,
    pub round: u32,
}

/// What the server sends to every device at the start of an iteration.
/// Carries per-task aggregates only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServerBroadcast {
    pub version: u32,
    pub cycle: u32,
    pub group: u32,
    pub round: u32,
    pub iteration: u32,
    /// Reward of every task slot.
    pub rewards: Vec<f64>,
    /// Current congestion-rate estimate of every task slot.
    pub congestion: Vec<f64>,
    /// Actual claimant quality observed in the previous iteration.
    pub actual_congestion: Option<Vec<f64>>,
    /// Stop signal: the run has converged.
    pub converged: bool,
}

/// What one device sends back: its own claim plus whether it found no
/// profitable switch. Visible to the server only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimMessage {
    pub version: u32,
    pub device: crate::model::DeviceId,
    pub claim: Option<u32>,
    pub settled: bool,
}

/// Result of one negotiation run over a fixed task set.
#[derive(Debug, Clone)]
pub struct NegotiationOutcome {
    pub profile: StrategyProfile,
    /// Winner of every task slot after tie-breaking, if contested.
    pub winners: Vec<Option<usize>>,
    pub iterations: u32,
    pub converged: bool,
    /// Final congestion-rate estimates, reusable as the next cycle's seed.
    pub congestion: Vec<f64>,
}

/// Mutable state of a negotiation in flight.
#[derive(Debug, Clone)]
pub struct NegotiationState {
    pub iteration: u32,
    pub current: StrategyProfile,
    pub previous: Option<StrategyProfile>,
    /// Actual claimant quality of the previous iteration's profile.
    pub previous_actual: Option<Vec<f64>>,
    pub converged: bool,
    /// Iteration bound P.
    pub bound: u32,
}

/// One device's claim choice: with probability `inertia` the best response
/// to the broadcast congestion (the feasible task maximizing
/// `reward * quality / (energy * congestion)`, ties to the lowest slot),
/// otherwise the previous claim. Claims nothing when no task is feasible.
#[allow(clippy::too_many_arguments)]
pub fn best_response<R: Rng>(
    rewards: &[f64],
    quality: &[f64],
    energy: &[f64],
    feasible: &[bool],
    congestion: &[f64],
    previous: Option<usize>,
    inertia: f64,
    rng: &mut R,
) -> Option<usize> {
    debug_assert!(congestion.iter().all(|n| *n > 0.0));
    let refresh = rng.random::<f64>() < inertia;
    if !refresh {
        return previous;
    }
    let mut best: Option<(usize, f64)> = None;
    for task in 0..rewards.len() {
        if !feasible[task] {
            continue;
        }
        let value = rewards[task] * quality[task] / (energy[task] * congestion[task]);
        match best {
            Some((_, v)) if v >= value => {}
            _ => best = Some((task, value)),
        }
    }
    best.map(|(task, _)| task)
}

/// Uniform initial congestion rate: the mean over devices of their best
/// quality score, floored at the quality floor. Scales with the instance
/// so unclaimed tasks look averagely congested rather than irresistibly
/// free or hopelessly crowded.
pub fn initial_congestion(instance: &GameInstance) -> f64 {
    let devices = instance.devices();
    if devices == 0 {
        return crate::game::QUALITY_FLOOR;
    }
    let mean = instance
        .quality
        .iter()
        .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .sum::<f64>()
        / devices as f64;
    mean.max(crate::game::QUALITY_FLOOR)
}

/// Runs one bounded negotiation over `instance`, then resolves each
/// contested task once by quality-weighted tie-break.
///
/// `carry` seeds the congestion estimates (previous cycle's final rates);
/// missing slots fall back to [`initial_congestion`]. Every broadcast is
/// appended to `log`.
#[allow(clippy::too_many_arguments)]
pub fn negotiate<R: Rng>(
    instance: &GameInstance,
    params: &NegotiationParams,
    carry: Option<&[f64]>,
    ctx: NegotiationContext,
    inertia_rng: &mut R,
    tie_rng: &mut R,
    log: &mut Vec<ServerBroadcast>,
) -> NegotiationOutcome {
    let devices = instance.devices();
    let tasks = instance.tasks();
    debug_assert!(tasks > 0, "negotiate needs at least one task");

    let default_rate = initial_congestion(instance);
    let mut rates = vec![default_rate; tasks];
    if let Some(seed) = carry {
        for (slot, value) in seed.iter().enumerate().take(tasks) {
            rates[slot] = value.max(crate::game::QUALITY_FLOOR);
        }
    }
    let mut congestion = CongestionState::new(rates, params.decay);
    let mut state = NegotiationState {
        iteration: 0,
        current: StrategyProfile::empty(devices),
        previous: None,
        previous_actual: None,
        converged: false,
        bound: params.bound,
    };

    while state.iteration < state.bound {
        state.iteration += 1;
        log.push(ServerBroadcast {
            version: MESSAGE_VERSION,
            cycle: ctx.cycle,
            group: ctx.group,
            round: ctx.round,
            iteration: state.iteration,
            rewards: instance.rewards.clone(),
            congestion: congestion.rates.clone(),
            actual_congestion: state.previous_actual.clone(),
            converged: false,
        });

        // simultaneous responses: every device reads the same broadcast.
        // each claim message also reports whether the device found a
        // strictly profitable switch under the published actual congestion
        // of the profile it is already playing.
        let mut messages: Vec<ClaimMessage> = Vec::with_capacity(devices);
        for device in 0..devices {
            let settled = match (&state.previous, &state.previous_actual) {
                (Some(prev), Some(actual)) => {
                    let current = instance.profile_payoff(device, prev, actual);
                    !(0..tasks).any(|t| {
                        prev.0[device] != Some(t)
                            && instance.deviation_payoff(device, Some(t), prev, actual) > current
                    })
                }
                _ => false,
            };
            let previous = state.previous.as_ref().and_then(|p| p.0[device]);
            // the first iteration has no previous claim to keep
            let inertia = if state.iteration == 1 { 1.0 } else { params.inertia };
            let claim = best_response(
                &instance.rewards,
                &instance.quality[device],
                &instance.energy[device],
                &instance.feasible[device],
                &congestion.rates,
                previous,
                inertia,
                inertia_rng,
            );
            messages.push(ClaimMessage {
                version: MESSAGE_VERSION,
                device: instance.device_ids[device],
                claim: claim.map(|t| t as u32),
                settled,
            });
        }
        let profile_now =
            StrategyProfile(messages.iter().map(|m| m.claim.map(|t| t as usize)).collect());
        let actual = instance.congestion_of(&profile_now);

        // converged when the claim vector repeats and nobody would move
        if state.previous.as_ref() == Some(&profile_now) && messages.iter().all(|m| m.settled) {
            state.converged = true;
        }

        // blend estimates; tasks nobody claimed keep their previous rate
        let before = congestion.rates.clone();
        congestion.update(&actual);
        for (slot, rate) in congestion.rates.iter_mut().enumerate() {
            if actual[slot] == 0.0 {
                *rate = before[slot];
            }
        }

        state.current = profile_now;
        if state.converged {
            log.push(ServerBroadcast {
                version: MESSAGE_VERSION,
                cycle: ctx.cycle,
                group: ctx.group,
                round: ctx.round,
                iteration: state.iteration + 1,
                rewards: instance.rewards.clone(),
                congestion: congestion.rates.clone(),
                actual_congestion: Some(actual),
                converged: true,
            });
            break;
        }
        state.previous_actual = Some(actual);
        state.previous = Some(state.current.clone());
    }

    // one tie-break per contested task, in slot order
    let claimants = Claimants::from_profile(&state.current, tasks);
    let mut winners = vec![None; tasks];
    for (task, set) in claimants.0.iter().enumerate() {
        if set.is_empty() {
            continue;
        }
        let scored: Vec<(usize, f64)> = set
            .iter()
            .map(|device| (*device, instance.quality[*device][task]))
            .collect();
        winners[task] = Some(crate::game::tie_break(&scored, tie_rng));
    }

    NegotiationOutcome {
        profile: state.current,
        winners,
        iterations: state.iteration,
        converged: state.converged,
        congestion: congestion.rates,
    }
}

/// True iff a logged broadcast exposes only the allowed per-task aggregate
/// fields. Any extra key fails the audit, in particular anything
/// mapping individual devices to claims or scores.
pub fn audit_broadcast(message: &serde_json::Value) -> bool {
    let Some(object) = message.as_object() else {
        return false;
    };
    const SCALARS: [&str; 5] = ["version", "cycle", "group", "round", "iteration"];
    const ARRAYS: [&str; 2] = ["rewards", "congestion"];
    for key in SCALARS {
        if !object.get(key).is_some_and(serde_json::Value::is_u64) {
            return false;
        }
    }
    for key in ARRAYS {
        let Some(value) = object.get(key).and_then(serde_json::Value::as_array) else {
            return false;
        };
        if !value.iter().all(serde_json::Value::is_number) {
            return false;
        }
    }
    match object.get("actual_congestion") {
        Some(serde_json::Value::Null) | None => {}
        Some(serde_json::Value::Array(items)) => {
            if !items.iter().all(serde_json::Value::is_number) {
                return false;
            }
        }
        _ => return false,
    }
    if !object.get("converged").is_some_and(serde_json::Value::is_boolean) {
        return false;
    }
    let allowed = [
        "version",
        "cycle",
        "group",
        "round",
        "iteration",
        "rewards",
        "congestion",
        "actual_congestion",
        "converged",
    ];
    object.keys().all(|k| allowed.contains(&k.as_str()))
}
