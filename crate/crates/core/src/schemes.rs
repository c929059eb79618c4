//! Baseline allocation strategies sharing the engine's execution path:
//! greedy reward chasing, top-down predicted-miss minimization, and
//! uniform random feasible assignment.

use crate::engine::ClaimLedger;
use crate::game;
use crate::model::{DeviceState, Task};
use crate::privacy::DisclosedView;
use crate::rng::substream;
use crate::scenario::ScenarioConfig;
use rand::Rng;

/// Every device repeatedly claims the highest-reward task still feasible
/// for it; contested tasks resolve by uniform tie-break.
#[allow(clippy::too_many_arguments)]
pub(crate) fn allocate_greedy_max_reward(
    config: &ScenarioConfig,
    cycle: u32,
    group: u32,
    device_indices: &[usize],
    slots: &[usize],
    tasks: &[Task],
    states: &[DeviceState],
    ledger: &mut ClaimLedger,
) {
    if device_indices.is_empty() || slots.is_empty() {
        return;
    }
    let mut tie_rng = substream(config.seed, "greedy_tie", u64::from(cycle), u64::from(group));
    let mut residual: Vec<usize> = slots.to_vec();
    for _round in 0..slots.len() {
        if residual.is_empty() {
            break;
        }
        let mut claims: Vec<(usize, usize)> = Vec::new(); // (device, slot)
        for &device in device_indices {
            let state = &states[device];
            let usage = ledger.effective_usage(state, device);
            let pick = residual
                .iter()
                .copied()
                .filter(|slot| {
                    game::feasible(tasks[*slot].comp_complexity, state.cpu_freq, usage, config.deadline)
                })
                .max_by(|a, b| {
                    tasks[*a]
                        .reward
                        .partial_cmp(&tasks[*b].reward)
                        .unwrap()
                        .then(b.cmp(a)) // ties to the lowest slot
                });
            if let Some(slot) = pick {
                claims.push((device, slot));
            }
        }
        if claims.is_empty() {
            break;
        }
        let mut assigned = Vec::new();
        for &slot in &residual {
            let claimants: Vec<(usize, f64)> = claims
                .iter()
                .filter(|(_, s)| *s == slot)
                .map(|(d, _)| (*d, 1.0))
                .collect();
            if claimants.is_empty() {
                continue;
            }
            let winner = game::tie_break(&claimants, &mut tie_rng);
            ledger.accept(winner, slot, &states[winner], &tasks[slot], config.deadline);
            assigned.push(slot);
        }
        residual.retain(|slot| !assigned.contains(slot));
    }
}

/// Predicted miss count of a candidate assignment under worst-case
/// estimates, walking tasks in slot order and consuming utilization as
/// they fit. Unassigned and non-fitting tasks count one miss each.
fn predicted_misses(
    choice: &[Option<usize>],
    comp: &[f64],
    freq_hat: &[f64],
    usage_start: &[f64],
    deadline: f64,
) -> u32 {
    let mut usage = usage_start.to_vec();
    let mut misses = 0;
    for (task, device) in choice.iter().enumerate() {
        match device {
            None => misses += 1,
            Some(d) => {
                let w = game::wcet(comp[task], freq_hat[*d], usage[*d]);
                if w.is_finite() && w / deadline + usage[*d] <= 1.0 {
                    usage[*d] += w / deadline;
                } else {
                    misses += 1;
                }
            }
        }
    }
    misses
}

/// Top-down assignment minimizing predicted misses with worst-case
/// (conservative) estimates: exhaustive search on small instances, a
/// regret-based greedy otherwise.
#[allow(clippy::too_many_arguments)]
pub(crate) fn allocate_top_down(
    config: &ScenarioConfig,
    device_indices: &[usize],
    slots: &[usize],
    tasks: &[Task],
    states: &[DeviceState],
    views: &[DisclosedView],
    ledger: &mut ClaimLedger,
) {
    if device_indices.is_empty() || slots.is_empty() {
        return;
    }
    let devices = device_indices.len();
    let count = slots.len();
    let comp: Vec<f64> = slots.iter().map(|s| tasks[*s].comp_complexity).collect();
    let freq_hat: Vec<f64> = device_indices
        .iter()
        .map(|d| views[*d].freq_region.lb)
        .collect();
    let usage_hat: Vec<f64> = device_indices
        .iter()
        .map(|d| views[*d].usage_region.ub)
        .collect();

    let choice = if (devices * count) as u32 <= config.params.tda_exhaustive_bound {
        exhaustive_min_miss(&comp, &freq_hat, &usage_hat, config.deadline)
    } else {
        regret_greedy(&comp, &freq_hat, &usage_hat, config.deadline)
    };

    // hand out in slot order so claim order is deterministic
    for (local, device_local) in choice.iter().enumerate() {
        if let Some(dl) = device_local {
            let device = device_indices[*dl];
            let slot = slots[local];
            ledger.accept(device, slot, &states[device], &tasks[slot], config.deadline);
        }
    }
}

/// Enumerates every task-to-device-or-none map and keeps the first one
/// attaining the minimum predicted miss count. Among equal-miss choices it
/// prefers assigning more tasks: a predicted miss may still hit in
/// reality, an unassigned task never does.
fn exhaustive_min_miss(
    comp: &[f64],
    freq_hat: &[f64],
    usage_hat: &[f64],
    deadline: f64,
) -> Vec<Option<usize>> {
    let devices = freq_hat.len();
    let count = comp.len();
    let base = devices + 1;
    let total = (base as u64).pow(count as u32);
    let mut best: Option<(u32, usize, Vec<Option<usize>>)> = None;
    for code in 0..total {
        let mut c = code;
        let choice: Vec<Option<usize>> = (0..count)
            .map(|_| {
                let digit = (c % base as u64) as usize;
                c /= base as u64;
                if digit == 0 {
                    None
                } else {
                    Some(digit - 1)
                }
            })
            .collect();
        let misses = predicted_misses(&choice, comp, freq_hat, usage_hat, deadline);
        let unassigned = choice.iter().filter(|d| d.is_none()).count();
        if best
            .as_ref()
            .is_none_or(|(m, u, _)| (misses, unassigned) < (*m, *u))
        {
            best = Some((misses, unassigned, choice));
        }
    }
    best.expect("at least the all-none assignment exists").2
}

/// Greedy with regret selection: repeatedly commit the task whose best and
/// second-best placements differ the most, assigning it to its best device.
fn regret_greedy(
    comp: &[f64],
    freq_hat: &[f64],
    usage_hat: &[f64],
    deadline: f64,
) -> Vec<Option<usize>> {
    let devices = freq_hat.len();
    let count = comp.len();
    let mut usage = usage_hat.to_vec();
    let mut choice: Vec<Option<usize>> = vec![None; count];
    let mut open: Vec<usize> = (0..count).collect();
    let mut spillover = 0usize;
    while !open.is_empty() {
        let mut pick: Option<(f64, usize, Option<usize>, f64)> = None; // (regret, task, device, cost)
        for &task in &open {
            let mut costs: Vec<(f64, usize)> = (0..devices)
                .map(|d| {
                    let w = game::wcet(comp[task], freq_hat[d], usage[d]);
                    let fits = w.is_finite() && w / deadline + usage[d] <= 1.0;
                    (if fits { w / deadline } else { f64::INFINITY }, d)
                })
                .collect();
            costs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let (best_cost, best_dev) = costs[0];
            let second_cost = costs.get(1).map_or(f64::INFINITY, |c| c.0);
            let regret = if best_cost.is_infinite() {
                -1.0 // nothing fits: decide last, predicted a miss anywhere
            } else if second_cost.is_infinite() {
                f64::MAX // only one viable placement: most urgent
            } else {
                second_cost - best_cost
            };
            let device = if best_cost.is_finite() { Some(best_dev) } else { None };
            if pick.as_ref().is_none_or(|(r, t, _, _)| regret > *r || (regret == *r && task < *t)) {
                pick = Some((regret, task, device, best_cost));
            }
        }
        let (_, task, device, cost) = pick.unwrap();
        match device {
            Some(d) => {
                usage[d] += cost;
                choice[task] = Some(d);
            }
            None => {
                // predicted to miss everywhere, but assigning still beats
                // dropping: spread such tasks round-robin without charging
                // the predictive utilization model
                choice[task] = Some(spillover % devices);
                spillover += 1;
            }
        }
        open.retain(|t| *t != task);
    }
    choice
}

/// Uniform random assignment over the devices a task is still feasible for.
#[allow(clippy::too_many_arguments)]
pub(crate) fn allocate_random(
    config: &ScenarioConfig,
    cycle: u32,
    group: u32,
    device_indices: &[usize],
    slots: &[usize],
    tasks: &[Task],
    states: &[DeviceState],
    ledger: &mut ClaimLedger,
) {
    if device_indices.is_empty() {
        return;
    }
    let mut rng = substream(config.seed, "random_alloc", u64::from(cycle), u64::from(group));
    for &slot in slots {
        let candidates: Vec<usize> = device_indices
            .iter()
            .copied()
            .filter(|device| {
                let state = &states[*device];
                let usage = ledger.effective_usage(state, *device);
                game::feasible(tasks[slot].comp_complexity, state.cpu_freq, usage, config.deadline)
            })
            .collect();
        if candidates.is_empty() {
            continue;
        }
        let device = candidates[rng.random_range(0..candidates.len())];
        ledger.accept(device, slot, &states[device], &tasks[slot], config.deadline);
    }
}
