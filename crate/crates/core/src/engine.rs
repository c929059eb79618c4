//! Sensing-cycle simulator: per-cycle orchestration (balancing, reward
//! assignment, negotiation or baseline allocation, execution, feedback)
//! and metrics accounting.
//!
//! Decisions run on disclosed estimates; execution runs on true device
//! state. The parametric network model stands in for a real network.

use crate::balance::{balance, ulb_distance, AssignmentRecord};
use crate::game::{self, GameInstance, QUALITY_FLOOR};
use crate::model::{
    CycleMetrics, DeviceId, DeviceRecord, DeviceState, Point, Task, TaskRecord,
};
use crate::negotiation::{
    negotiate, NegotiationContext, NegotiationParams, ServerBroadcast,
};
use crate::privacy::{cloak, AnchorDraws, DisclosedView, Estimate, GlobalBounds};
use crate::reward::{compute_rewards, ControllerRecord, RewardController, RewardWeights};
use crate::scenario::{EstimationMode, ScenarioConfig};
use crate::schemes;
use crate::rng::substream;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Parametric communication-delay model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkModel {
    /// Propagation delay per distance unit, seconds.
    pub latency_per_distance: f64,
    /// Transfer bandwidth, bytes per second.
    pub bandwidth: f64,
    /// Fixed per-transfer overhead, seconds.
    pub overhead: f64,
}

impl Default for NetworkModel {
    fn default() -> Self {
        Self { latency_per_distance: 0.01, bandwidth: 1e6, overhead: 0.005 }
    }
}

impl NetworkModel {
    /// Transfer time of `bytes` over `distance`.
    pub fn trans_time(&self, bytes: f64, distance: f64) -> f64 {
        self.overhead + self.latency_per_distance * distance + bytes / self.bandwidth
    }
}

/// Allocation scheme selecting who executes what. All schemes share the
/// grouping, reward, execution, and metrics stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Full pipeline: privacy-aware negotiation with adaptive rewards.
    Gpata,
    /// Fictitious play with zero server knowledge: uniform quality scores
    /// and a large iteration cap.
    Bgta,
    /// Congestion game on claimant counts.
    Cog,
    /// Every device greedily claims the highest-reward feasible task.
    Gmxr,
    /// Top-down assignment minimizing predicted misses under worst-case
    /// estimates.
    Tda,
    /// Uniform random feasible assignment (control).
    Random,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::Gpata,
        Scheme::Bgta,
        Scheme::Cog,
        Scheme::Gmxr,
        Scheme::Tda,
        Scheme::Random,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Gpata => "gpata",
            Scheme::Bgta => "bgta",
            Scheme::Cog => "cog",
            Scheme::Gmxr => "gmxr",
            Scheme::Tda => "tda",
            Scheme::Random => "random",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gpata" => Ok(Scheme::Gpata),
            "bgta" => Ok(Scheme::Bgta),
            "cog" => Ok(Scheme::Cog),
            "gmxr" => Ok(Scheme::Gmxr),
            "tda" => Ok(Scheme::Tda),
            "random" => Ok(Scheme::Random),
            other => Err(format!(
                "unknown scheme {other:?}; expected one of gpata, bgta, cog, gmxr, tda, random"
            )),
        }
    }
}

/// Aggregates of one full run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scheme: String,
    pub cycles: u32,
    pub tasks_total: u32,
    /// Hits over all tasks of all cycles (unassigned tasks count as misses).
    pub dhr: f64,
    /// Mean delay over executed tasks; 0 when nothing executed.
    pub mean_e2e_delay: f64,
    pub total_payoff: f64,
    pub mean_device_payoff: f64,
    pub total_energy: f64,
    /// Fraction of negotiation runs that converged before the bound;
    /// 1.0 for schemes that do not negotiate.
    pub converged_fraction: f64,
    pub device_payoffs: Vec<(DeviceId, f64)>,
    pub device_energy: Vec<(DeviceId, f64)>,
}

/// Everything one run produced.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub scheme: Scheme,
    pub cycles: Vec<CycleMetrics>,
    pub assignments: Vec<AssignmentRecord>,
    pub controller: Vec<ControllerRecord>,
    pub broadcasts: Vec<ServerBroadcast>,
    pub summary: RunSummary,
}

/// Deadline hit rate the recorded run would have had under a different
/// deadline: allocation and delays stay fixed, only the threshold moves.
pub fn dhr_at_deadline(cycles: &[CycleMetrics], deadline: f64) -> f64 {
    let mut total = 0usize;
    let mut hits = 0usize;
    for cycle in cycles {
        for task in &cycle.tasks {
            total += 1;
            if task.e2e_delay <= deadline {
                hits += 1;
            }
        }
    }
    if total == 0 {
        1.0
    } else {
        hits as f64 / total as f64
    }
}

/// Per-device claim bookkeeping within one cycle.
pub(crate) struct ClaimLedger {
    /// Won `(task_slot, feasible_at_claim)` pairs in claim order, per device.
    pub won: Vec<Vec<(usize, bool)>>,
    /// Utilization committed on top of the device baseline, per device.
    pub committed: Vec<f64>,
}

impl ClaimLedger {
    pub fn new(devices: usize) -> Self {
        Self { won: vec![Vec::new(); devices], committed: vec![0.0; devices] }
    }

    /// Effective usage figure a device reasons with at claim time.
    pub fn effective_usage(&self, state: &DeviceState, device: usize) -> f64 {
        state.cpu_usage + state.utilization + self.committed[device]
    }

    /// Records a win and consumes the task's utilization share.
    pub fn accept(&mut self, device: usize, slot: usize, state: &DeviceState, task: &Task, deadline: f64) {
        let usage = self.effective_usage(state, device);
        let feasible = game::feasible(task.comp_complexity, state.cpu_freq, usage, deadline);
        let wcet = game::wcet(task.comp_complexity, state.cpu_freq, usage);
        self.won[device].push((slot, feasible));
        if wcet.is_finite() {
            self.committed[device] += wcet / deadline;
        } else {
            self.committed[device] = f64::INFINITY;
        }
    }
}

/// Energy a task costs its device: compute power over the compute time
/// plus the transfer coefficient over the output bytes. Identical at claim
/// time and at execution because both use true device state.
pub(crate) fn task_energy(state: &DeviceState, task: &Task) -> f64 {
    let compute = game::wcet(task.comp_complexity, state.cpu_freq, state.cpu_usage);
    state.power_comp * compute + state.power_trans_per_byte * task.output_volume
}

/// Builds the game a group negotiates over: residual tasks, per-device
/// quality column, energy estimates, and claim-time feasibility.
#[allow(clippy::too_many_arguments)]
pub(crate) fn build_instance(
    device_indices: &[usize],
    slots: &[usize],
    tasks: &[Task],
    states: &[DeviceState],
    quality_of: &[f64],
    ledger: &ClaimLedger,
    deadline: f64,
) -> GameInstance {
    let rewards = slots.iter().map(|s| tasks[*s].reward).collect();
    let task_ids = slots.iter().map(|s| tasks[*s].id).collect();
    let device_ids = device_indices.iter().map(|d| states[*d].id).collect();
    let mut quality = Vec::with_capacity(device_indices.len());
    let mut energy = Vec::with_capacity(device_indices.len());
    let mut feasible = Vec::with_capacity(device_indices.len());
    for &device in device_indices {
        let state = &states[device];
        let usage = ledger.effective_usage(state, device);
        quality.push(vec![quality_of[device].max(QUALITY_FLOOR); slots.len()]);
        energy.push(slots.iter().map(|s| task_energy(state, &tasks[*s])).collect());
        feasible.push(
            slots
                .iter()
                .map(|s| game::feasible(tasks[*s].comp_complexity, state.cpu_freq, usage, deadline))
                .collect(),
        );
    }
    GameInstance { device_ids, task_ids, rewards, quality, energy, feasible }
}

/// Negotiation-based allocation for one group: repeated bounded runs over
/// the residual task set, winners accumulating work between rounds.
#[allow(clippy::too_many_arguments)]
fn allocate_by_negotiation(
    config: &ScenarioConfig,
    cycle: u32,
    group: u32,
    device_indices: &[usize],
    group_slots: &[usize],
    tasks: &[Task],
    states: &[DeviceState],
    quality_of: &[f64],
    bound: u32,
    carry: Option<Vec<f64>>,
    ledger: &mut ClaimLedger,
    log: &mut Vec<ServerBroadcast>,
    stats: &mut NegotiationStats,
) -> Option<Vec<f64>> {
    if device_indices.is_empty() || group_slots.is_empty() {
        return carry;
    }
    let params = NegotiationParams {
        decay: config.params.mu,
        inertia: config.params.rho,
        bound,
    };
    let cap = config
        .params
        .max_rounds
        .unwrap_or(group_slots.len() as u32)
        .max(1);
    let mut residual: Vec<usize> = group_slots.to_vec();
    let mut new_carry = carry;
    for round in 0..cap {
        if residual.is_empty() {
            break;
        }
        let instance = build_instance(
            device_indices,
            &residual,
            tasks,
            states,
            quality_of,
            ledger,
            config.deadline,
        );
        if !instance.feasible.iter().flatten().any(|f| *f) {
            break;
        }
        let slot_key = (u64::from(group) << 16) | u64::from(round);
        let mut inertia_rng = substream(config.seed, "inertia", u64::from(cycle), slot_key);
        let mut tie_rng = substream(config.seed, "tie_break", u64::from(cycle), slot_key);
        let outcome = negotiate(
            &instance,
            &params,
            if round == 0 { new_carry.as_deref() } else { None },
            NegotiationContext { cycle, group, round },
            &mut inertia_rng,
            &mut tie_rng,
            log,
        );
        stats.runs += 1;
        if outcome.converged {
            stats.converged += 1;
        }
        stats.iterations += u64::from(outcome.iterations);
        if round == 0 {
            new_carry = Some(outcome.congestion.clone());
        }
        let mut assigned = Vec::new();
        for (local, winner) in outcome.winners.iter().enumerate() {
            if let Some(device_local) = winner {
                let device = device_indices[*device_local];
                let slot = residual[local];
                ledger.accept(device, slot, &states[device], &tasks[slot], config.deadline);
                assigned.push(slot);
            }
        }
        if assigned.is_empty() {
            break;
        }
        residual.retain(|slot| !assigned.contains(slot));
    }
    new_carry
}

#[derive(Default)]
pub(crate) struct NegotiationStats {
    pub runs: u64,
    pub converged: u64,
    pub iterations: u64,
}

/// Runs every cycle of `config` under `scheme`.
///
/// Reward adaptation, budget feedback, and admission control belong to the
/// full pipeline; the baselines price tasks with fixed equal weights and a
/// fixed budget so only their allocation mechanics differ.
pub fn run_scheme(config: &ScenarioConfig, scheme: Scheme) -> RunResult {
    let states = config.device_states();
    let mut servers = config.edge_servers();
    let device_count = states.len();
    let server_count = servers.len();
    let bounds = GlobalBounds { freq_max: config.privacy.freq_max };
    let adaptive = scheme == Scheme::Gpata;

    let weights = RewardWeights::new(
        config.params.eta,
        config.params.initial_budget,
        config.params.beta,
        config.params.thres_high,
    );
    let mut controller =
        RewardController::new(weights, config.params.loss_pairing, config.params.admission_shed);

    let mut congestion_carry: Vec<Option<Vec<f64>>> = vec![None; server_count];
    let mut cycles = Vec::with_capacity(config.cycles as usize);
    let mut assignments = Vec::new();
    let mut broadcasts = Vec::new();
    let mut stats = NegotiationStats::default();

    for cycle in 0..config.cycles {
        let mut tasks = config.generate_tasks(cycle);
        if adaptive {
            tasks.truncate(controller.admitted(config.tasks_per_cycle) as usize);
        }
        let profiles = config.profiles_for_cycle(cycle);

        // disclosed views and estimation-mode readings
        let views: Vec<DisclosedView> = states
            .iter()
            .zip(&profiles)
            .map(|(state, profile)| {
                cloak(state, profile, &config.hierarchy, &bounds)
                    .expect("validated scenario cannot fail to cloak")
            })
            .collect();
        let mut estimation_rng = substream(config.seed, "estimation", u64::from(cycle), 0);
        let anchors: Vec<Option<AnchorDraws>> = match config.params.estimation {
            EstimationMode::Conservative => vec![None; device_count],
            EstimationMode::Anchor => views
                .iter()
                .map(|view| {
                    Some(AnchorDraws::draw(view, config.params.anchor_samples, &mut estimation_rng))
                })
                .collect(),
        };
        let scalar_estimate = |device: usize| -> (f64, f64) {
            match &anchors[device] {
                Some(draws) => (draws.freq, draws.usage.clamp(0.0, 1.0)),
                None => (views[device].freq_region.lb, views[device].usage_region.ub),
            }
        };
        let dist_estimate = |device: usize, location: Point| -> f64 {
            match &anchors[device] {
                Some(draws) => draws.estimate(location).dist,
                None => views[device].location_region.max_distance(location),
            }
        };

        // device-to-server balancing on expected distances
        let distances: Vec<Vec<f64>> = (0..device_count)
            .map(|device| {
                let (freq_hat, usage_hat) = scalar_estimate(device);
                servers
                    .iter()
                    .map(|server| ulb_distance(&views[device], server.location, freq_hat, usage_hat))
                    .collect()
            })
            .collect();
        let assignment = balance(&distances, server_count);
        for (server, group) in assignment.groups.iter().enumerate() {
            servers[server].assigned_devices = group.iter().map(|d| states[*d].id).collect();
        }
        for (device, server) in assignment.server_of.iter().enumerate() {
            assignments.push(AssignmentRecord {
                cycle,
                device: states[device].id,
                server: servers[*server].id,
                distance: distances[device][*server],
            });
        }

        // per-device quality against the assigned server
        let quality_of: Vec<f64> = (0..device_count)
            .map(|device| {
                let server = &servers[assignment.server_of[device]];
                let (freq, usage) = scalar_estimate(device);
                let dist = dist_estimate(device, server.location);
                game::quality_score(
                    &Estimate { freq, usage: usage.clamp(0.0, 1.0), dist },
                    config.params.lambda1,
                    config.params.lambda2,
                )
            })
            .collect();

        // tasks split round-robin; rewards normalized per group budget
        let group_slots: Vec<Vec<usize>> = (0..server_count)
            .map(|g| (0..tasks.len()).filter(|m| m % server_count == g).collect())
            .collect();
        let share = controller.weights.budget / server_count as f64;
        for slots in &group_slots {
            if slots.is_empty() {
                continue;
            }
            let complexities: Vec<(f64, f64)> = slots
                .iter()
                .map(|s| (tasks[*s].comp_complexity, tasks[*s].trans_complexity))
                .collect();
            let rewards = compute_rewards(&complexities, &controller.weights, share);
            for (slot, reward) in slots.iter().zip(rewards) {
                tasks[*slot].reward = reward;
            }
        }

        // scheme-specific allocation
        let mut ledger = ClaimLedger::new(device_count);
        for group in 0..server_count {
            let device_indices = &assignment.groups[group];
            let slots = &group_slots[group];
            match scheme {
                Scheme::Gpata => {
                    let carry = congestion_carry[group].take();
                    congestion_carry[group] = allocate_by_negotiation(
                        config,
                        cycle,
                        group as u32,
                        device_indices,
                        slots,
                        &tasks,
                        &states,
                        &quality_of,
                        config.params.negotiation_bound,
                        carry,
                        &mut ledger,
                        &mut broadcasts,
                        &mut stats,
                    );
                }
                Scheme::Bgta | Scheme::Cog => {
                    let ones = vec![1.0; device_count];
                    let bound = if scheme == Scheme::Bgta {
                        config.params.bgta_bound
                    } else {
                        config.params.negotiation_bound
                    };
                    allocate_by_negotiation(
                        config,
                        cycle,
                        group as u32,
                        device_indices,
                        slots,
                        &tasks,
                        &states,
                        &ones,
                        bound,
                        None,
                        &mut ledger,
                        &mut broadcasts,
                        &mut stats,
                    );
                }
                Scheme::Gmxr => schemes::allocate_greedy_max_reward(
                    config,
                    cycle,
                    group as u32,
                    device_indices,
                    slots,
                    &tasks,
                    &states,
                    &mut ledger,
                ),
                Scheme::Tda => schemes::allocate_top_down(
                    config,
                    device_indices,
                    slots,
                    &tasks,
                    &states,
                    &views,
                    &mut ledger,
                ),
                Scheme::Random => schemes::allocate_random(
                    config,
                    cycle,
                    group as u32,
                    device_indices,
                    slots,
                    &tasks,
                    &states,
                    &mut ledger,
                ),
            }
        }

        // execution on true state, sequential per device in claim order
        let mut task_records: Vec<TaskRecord> = tasks
            .iter()
            .map(|task| TaskRecord {
                task: task.id,
                device: None,
                e2e_delay: f64::INFINITY,
                deadline_hit: false,
                reward_paid: 0.0,
            })
            .collect();
        let mut device_records = Vec::with_capacity(device_count);
        for device in 0..device_count {
            let state = &states[device];
            let server = &servers[assignment.server_of[device]];
            let true_distance = state.location.distance(server.location);
            let mut timeline = 0.0;
            let mut payoff = 0.0;
            let mut energy = 0.0;
            for &(slot, feasible_at_claim) in &ledger.won[device] {
                let task = &tasks[slot];
                let compute = game::wcet(task.comp_complexity, state.cpu_freq, state.cpu_usage);
                let trans = config.network.trans_time(task.output_volume, true_distance);
                timeline += compute + trans;
                let hit = crate::model::deadline_indicator(timeline, config.deadline) == 0;
                let rate = if trans > 0.0 { task.output_volume / trans } else { 0.0 };
                let cost = crate::model::edge_cost(state, compute, trans, rate);
                energy += cost;
                if feasible_at_claim {
                    payoff += task.reward / task_energy(state, task);
                }
                task_records[slot] = TaskRecord {
                    task: task.id,
                    device: Some(state.id),
                    e2e_delay: timeline,
                    deadline_hit: hit,
                    reward_paid: if hit { task.reward } else { 0.0 },
                };
            }
            device_records.push(DeviceRecord { device: state.id, payoff, energy });
        }

        // controller feedback on this cycle's outcome (full pipeline only)
        if adaptive {
            let misses: Vec<bool> = task_records.iter().map(|r| !r.deadline_hit).collect();
            let comp: Vec<f64> = tasks.iter().map(|t| t.comp_complexity).collect();
            let trans: Vec<f64> = tasks.iter().map(|t| t.trans_complexity).collect();
            controller.feedback(cycle, &misses, &comp, &trans);
        }

        cycles.push(CycleMetrics::from_records(cycle, task_records, device_records));
    }

    let summary = summarize(scheme, &cycles, &states, &stats);
    RunResult {
        scheme,
        cycles,
        assignments,
        controller: controller.trace,
        broadcasts,
        summary,
    }
}

fn summarize(
    scheme: Scheme,
    cycles: &[CycleMetrics],
    states: &[DeviceState],
    stats: &NegotiationStats,
) -> RunSummary {
    let mut tasks_total = 0u32;
    let mut hits = 0u32;
    let mut delay_sum = 0.0;
    let mut executed = 0u32;
    let mut device_payoffs: Vec<(DeviceId, f64)> =
        states.iter().map(|s| (s.id, 0.0)).collect();
    let mut device_energy: Vec<(DeviceId, f64)> =
        states.iter().map(|s| (s.id, 0.0)).collect();
    for cycle in cycles {
        tasks_total += cycle.tasks.len() as u32;
        for task in &cycle.tasks {
            if task.deadline_hit {
                hits += 1;
            }
            if task.e2e_delay.is_finite() {
                delay_sum += task.e2e_delay;
                executed += 1;
            }
        }
        for (i, record) in cycle.devices.iter().enumerate() {
            device_payoffs[i].1 += record.payoff;
            device_energy[i].1 += record.energy;
        }
    }
    let total_payoff: f64 = device_payoffs.iter().map(|(_, p)| p).sum();
    let total_energy: f64 = device_energy.iter().map(|(_, e)| e).sum();
    RunSummary {
        scheme: scheme.to_string(),
        cycles: cycles.len() as u32,
        tasks_total,
        dhr: if tasks_total == 0 { 1.0 } else { f64::from(hits) / f64::from(tasks_total) },
        mean_e2e_delay: if executed == 0 { 0.0 } else { delay_sum / f64::from(executed) },
        total_payoff,
        mean_device_payoff: if states.is_empty() {
            0.0
        } else {
            total_payoff / states.len() as f64
        },
        total_energy,
        converged_fraction: if stats.runs == 0 {
            1.0
        } else {
            stats.converged as f64 / stats.runs as f64
        },
        device_payoffs,
        device_energy,
    }
}
