//! Task-allocation game mathematics: quality scores, probabilistic
//! tie-breaking, feasibility-gated payoffs, and a brute-force equilibrium
//! check for small instances.

use crate::model::DeviceId;
use crate::privacy::Estimate;
use rand::Rng;

/// Floor applied to quality scores. The raw score can go negative for far
/// or slow devices, which would break the tie-break probabilities; the
/// floor keeps every score strictly positive while preserving the ordering
/// among positive scores.
pub const QUALITY_FLOOR: f64 = 1e-6;

/// Quality of a device as seen by its server:
/// `lambda1 * freq * (1 - usage) - lambda2 * dist`, floored at
/// [`QUALITY_FLOOR`].
pub fn quality_score(estimate: &Estimate, lambda1: f64, lambda2: f64) -> f64 {
    debug_assert!(lambda1 >= 0.0 && lambda2 >= 0.0);
    debug_assert!((0.0..=1.0).contains(&estimate.usage));
    let raw = lambda1 * estimate.freq * (1.0 - estimate.usage) - lambda2 * estimate.dist;
    raw.max(QUALITY_FLOOR)
}

/// Draws the winner of a contested task with probability proportional to
/// each claimant's quality score.
///
/// Panics on an empty claimant set or a non-positive score; both are
/// caller bugs.
pub fn tie_break<T: Copy, R: Rng>(claimants: &[(T, f64)], rng: &mut R) -> T {
    assert!(!claimants.is_empty(), "tie_break on an empty claimant set");
    let total: f64 = claimants.iter().map(|(_, q)| q).sum();
    assert!(total > 0.0, "tie_break needs positive scores");
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (id, q) in claimants {
        assert!(*q > 0.0, "tie_break needs positive scores");
        acc += q / total;
        if u < acc {
            return *id;
        }
    }
    claimants.last().unwrap().0
}

/// Winner probabilities under the tie-break rule, in claimant order.
pub fn tie_break_probabilities(scores: &[f64]) -> Vec<f64> {
    let total: f64 = scores.iter().sum();
    scores.iter().map(|q| q / total).collect()
}

/// Worst-case execution time of a task with `comp_complexity` giga-ops on
/// a device at `freq` GHz with fraction `usage` already busy. Infinite
/// when the device has no spare capacity.
pub fn wcet(comp_complexity: f64, freq: f64, usage: f64) -> f64 {
    let capacity = freq * (1.0 - usage);
    if capacity <= 0.0 {
        f64::INFINITY
    } else {
        comp_complexity / capacity
    }
}

/// Schedulability test: the task fits iff `wcet/deadline + usage <= 1`.
/// A saturated device (`usage >= 1`) is infeasible, not an error.
pub fn feasible(comp_complexity: f64, freq: f64, usage: f64, deadline: f64) -> bool {
    debug_assert!(deadline > 0.0);
    if usage >= 1.0 || freq <= 0.0 {
        return false;
    }
    wcet(comp_complexity, freq, usage) / deadline + usage <= 1.0
}

/// Payoff of a device that picked a task: its reward share per joule,
/// `reward * quality / (energy * quality_sum)` when the task is feasible
/// for it, zero otherwise. `quality_sum` is the total score of every
/// device picking the same task (including this one).
pub fn payoff(reward: f64, quality: f64, quality_sum: f64, energy: f64, is_feasible: bool) -> f64 {
    if !is_feasible {
        return 0.0;
    }
    assert!(energy > 0.0, "payoff with non-positive energy cost");
    debug_assert!(quality > 0.0 && quality_sum >= quality);
    reward * quality / (energy * quality_sum)
}

/// One claim per device: the task slot it picked this iteration, if any.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrategyProfile(pub Vec<Option<usize>>);

impl StrategyProfile {
    pub fn empty(devices: usize) -> Self {
        Self(vec![None; devices])
    }
}

/// Inverse of a strategy profile: the claimant set of every task slot,
/// in device-index order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Claimants(pub Vec<Vec<usize>>);

impl Claimants {
    pub fn from_profile(profile: &StrategyProfile, tasks: usize) -> Self {
        let mut sets = vec![Vec::new(); tasks];
        for (device, claim) in profile.0.iter().enumerate() {
            if let Some(task) = claim {
                sets[*task].push(device);
            }
        }
        Self(sets)
    }
}

/// One local game: the rewards, per-device-per-task scores, energy costs,
/// and feasibility flags a negotiation round operates on.
#[derive(Debug, Clone)]
pub struct GameInstance {
    pub device_ids: Vec<DeviceId>,
    pub task_ids: Vec<crate::model::TaskId>,
    pub rewards: Vec<f64>,
    /// `quality[device][task]`, every entry >= [`QUALITY_FLOOR`].
    pub quality: Vec<Vec<f64>>,
    /// `energy[device][task]` in joules, every entry > 0.
    pub energy: Vec<Vec<f64>>,
    /// `feasible[device][task]` under the device's own state.
    pub feasible: Vec<Vec<bool>>,
}

impl GameInstance {
    pub fn devices(&self) -> usize {
        self.device_ids.len()
    }

    pub fn tasks(&self) -> usize {
        self.task_ids.len()
    }

    /// Total claimant quality per task, summed in device-index order.
    pub fn congestion_of(&self, profile: &StrategyProfile) -> Vec<f64> {
        let mut sums = vec![0.0; self.tasks()];
        for (device, claim) in profile.0.iter().enumerate() {
            if let Some(task) = claim {
                sums[*task] += self.quality[device][*task];
            }
        }
        sums
    }

    /// Realized payoff of `device` under `profile`, with `congestion`
    /// already computed as [`Self::congestion_of`].
    pub fn profile_payoff(
        &self,
        device: usize,
        profile: &StrategyProfile,
        congestion: &[f64],
    ) -> f64 {
        match profile.0[device] {
            None => 0.0,
            Some(task) => payoff(
                self.rewards[task],
                self.quality[device][task],
                congestion[task],
                self.energy[device][task],
                self.feasible[device][task],
            ),
        }
    }

    /// Payoff `device` would get by unilaterally switching its claim to
    /// `target` (or dropping it), with the rest of `profile` fixed. The
    /// congestion of the target gains the deviator's own score unless it
    /// already claims that task.
    pub fn deviation_payoff(
        &self,
        device: usize,
        target: Option<usize>,
        profile: &StrategyProfile,
        congestion: &[f64],
    ) -> f64 {
        match target {
            None => 0.0,
            Some(task) => {
                let sum = if profile.0[device] == Some(task) {
                    congestion[task]
                } else {
                    congestion[task] + self.quality[device][task]
                };
                payoff(
                    self.rewards[task],
                    self.quality[device][task],
                    sum,
                    self.energy[device][task],
                    self.feasible[device][task],
                )
            }
        }
    }
}

/// Exhaustive unilateral-deviation scan: true iff no device can strictly
/// increase its payoff by switching (or dropping) its single claim.
///
/// Intended for small instances; panics above 10^4 device-task pairs.
pub fn verify_equilibrium(instance: &GameInstance, profile: &StrategyProfile) -> bool {
    assert!(
        instance.devices() * instance.tasks() <= 10_000,
        "equilibrium scan limited to 10^4 device-task pairs"
    );
    let congestion = instance.congestion_of(profile);
    for device in 0..instance.devices() {
        let current = instance.profile_payoff(device, profile, &congestion);
        for target in 0..instance.tasks() {
            if profile.0[device] == Some(target) {
                continue;
            }
            if instance.deviation_payoff(device, Some(target), profile, &congestion) > current {
                return false;
            }
        }
        // dropping the claim yields 0, which never strictly beats a
        // non-negative payoff
    }
    true
}
