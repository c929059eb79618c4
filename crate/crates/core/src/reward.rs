//! Dynamic reward control: per-task reward computation from complexity
//! weights, exponential-weight adaptation driven by deadline-miss
//! feedback, and budget growth with admission control as the last resort.

use serde::{Deserialize, Serialize};

/// Which loss drives which weight during adaptation. `Literal` pairs the
/// transfer-complexity loss with the compute weight (and vice versa);
/// `Swapped` crosses them the other way.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossPairing {
    Literal,
    Swapped,
}

impl std::str::FromStr for LossPairing {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "literal" => Ok(Self::Literal),
            "swapped" => Ok(Self::Swapped),
            other => Err(format!("unknown loss pairing {other:?}; expected literal or swapped")),
        }
    }
}

/// Adaptive weighting state of the reward controller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    pub alpha1: f64,
    pub alpha2: f64,
    /// Learning rate of the exponential update.
    pub eta: f64,
    pub budget: f64,
    /// Budget multiplier applied when misses reach the threshold.
    pub beta: f64,
    /// Miss-count threshold; `None` derives `ceil(0.2 * tasks)` per cycle.
    pub thres_high: Option<u32>,
}

impl RewardWeights {
    pub fn new(eta: f64, budget: f64, beta: f64, thres_high: Option<u32>) -> Self {
        Self { alpha1: 1.0, alpha2: 1.0, eta, budget, beta, thres_high }
    }

    fn threshold(&self, tasks: usize) -> u32 {
        self.thres_high
            .unwrap_or_else(|| (0.2 * tasks as f64).ceil() as u32)
    }
}

/// Unnormalized reward of one task: the weighted mean of its computation
/// and transfer complexities.
pub fn raw_reward(weights: &RewardWeights, comp: f64, trans: f64) -> f64 {
    let total = weights.alpha1 + weights.alpha2;
    weights.alpha1 / total * comp + weights.alpha2 / total * trans
}

/// Per-task rewards normalized so they sum to `budget` exactly. Tasks are
/// `(comp_complexity, trans_complexity)` pairs; an all-zero batch splits
/// the budget uniformly.
pub fn compute_rewards(complexities: &[(f64, f64)], weights: &RewardWeights, budget: f64) -> Vec<f64> {
    assert!(!complexities.is_empty(), "compute_rewards needs at least one task");
    let raw: Vec<f64> = complexities
        .iter()
        .map(|(comp, trans)| raw_reward(weights, *comp, *trans))
        .collect();
    let total: f64 = raw.iter().sum();
    if total <= 0.0 {
        return vec![budget / complexities.len() as f64; complexities.len()];
    }
    raw.into_iter().map(|r| budget * r / total).collect()
}

/// Mean of `values[i]` over indices where `select(i)` holds.
fn mean_where(values: &[f64], select: impl Fn(usize) -> bool) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (i, v) in values.iter().enumerate() {
        if select(i) {
            sum += v;
            count += 1;
        }
    }
    sum / count as f64
}

/// Loss pair `(trans-based, comp-based)` for a cycle: mean complexity over
/// missed tasks minus mean over hit tasks. Undefined (None) when every
/// task hit or every task missed.
pub fn losses(misses: &[bool], comp: &[f64], trans: &[f64]) -> Option<(f64, f64)> {
    let missed: usize = misses.iter().filter(|m| **m).count();
    if missed == 0 || missed == misses.len() {
        return None;
    }
    let l_trans = mean_where(trans, |i| misses[i]) - mean_where(trans, |i| !misses[i]);
    let l_comp = mean_where(comp, |i| misses[i]) - mean_where(comp, |i| !misses[i]);
    Some((l_trans, l_comp))
}

/// Exponential-weight step from one cycle's outcome, renormalized so
/// `alpha1 + alpha2 == 2` to prevent drift. Degenerate cycles (all hit or
/// all missed) leave the weights untouched. Returns the applied losses.
pub fn update_weights(
    weights: &mut RewardWeights,
    misses: &[bool],
    comp: &[f64],
    trans: &[f64],
    pairing: LossPairing,
) -> Option<(f64, f64)> {
    let (l_trans, l_comp) = losses(misses, comp, trans)?;
    let (l1, l2) = match pairing {
        LossPairing::Literal => (l_trans, l_comp),
        LossPairing::Swapped => (l_comp, l_trans),
    };
    weights.alpha1 *= (-weights.eta * l1).exp();
    weights.alpha2 *= (-weights.eta * l2).exp();
    let total = weights.alpha1 + weights.alpha2;
    weights.alpha1 *= 2.0 / total;
    weights.alpha2 *= 2.0 / total;
    Some((l_trans, l_comp))
}

/// Budget feedback: misses at or above the threshold grow the budget by
/// `beta`. Returns true when every task missed, in which case the caller
/// should shed admitted tasks for the next cycle.
pub fn update_budget(weights: &mut RewardWeights, miss_count: u32, tasks: usize) -> bool {
    if tasks == 0 {
        return false;
    }
    if miss_count >= weights.threshold(tasks) {
        weights.budget *= weights.beta;
    }
    miss_count as usize == tasks
}

/// One cycle of the controller trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerRecord {
    pub cycle: u32,
    pub alpha1: f64,
    pub alpha2: f64,
    pub budget: f64,
    pub loss_trans: Option<f64>,
    pub loss_comp: Option<f64>,
    pub misses: u32,
}

/// Owns the reward weights and the admission-control state across cycles.
#[derive(Debug, Clone)]
pub struct RewardController {
    pub weights: RewardWeights,
    pub pairing: LossPairing,
    /// Fraction of the task batch dropped per all-miss cycle.
    pub shed: f64,
    admitted_fraction: f64,
    pub trace: Vec<ControllerRecord>,
}

impl RewardController {
    pub fn new(weights: RewardWeights, pairing: LossPairing, shed: f64) -> Self {
        Self { weights, pairing, shed, admitted_fraction: 1.0, trace: Vec::new() }
    }

    /// How many of `offered` tasks are admitted this cycle.
    pub fn admitted(&self, offered: u32) -> u32 {
        if offered == 0 {
            return 0;
        }
        ((f64::from(offered) * self.admitted_fraction).floor() as u32).max(1)
    }

    pub fn admitted_fraction(&self) -> f64 {
        self.admitted_fraction
    }

    /// Applies the full end-of-cycle feedback: weight adaptation, budget
    /// control, and admission shedding on an all-miss cycle.
    pub fn feedback(&mut self, cycle: u32, misses: &[bool], comp: &[f64], trans: &[f64]) {
        let applied = update_weights(&mut self.weights, misses, comp, trans, self.pairing);
        let miss_count = misses.iter().filter(|m| **m).count() as u32;
        let all_missed = update_budget(&mut self.weights, miss_count, misses.len());
        if all_missed {
            self.admitted_fraction *= 1.0 - self.shed;
        }
        self.trace.push(ControllerRecord {
            cycle,
            alpha1: self.weights.alpha1,
            alpha2: self.weights.alpha2,
            budget: self.weights.budget,
            loss_trans: applied.map(|(t, _)| t),
            loss_comp: applied.map(|(_, c)| c),
            misses: miss_count,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn weights() -> RewardWeights {
        RewardWeights::new(0.1, 100.0, 1.2, Some(2))
    }

    #[test]
    fn raw_reward_equal_weights_is_the_mean() {
        assert_eq!(raw_reward(&weights(), 4.0, 2.0), 3.0);
    }

    #[test]
    fn raw_reward_collapses_when_one_weight_vanishes() {
        let mut w = weights();
        w.alpha2 = 1e-15;
        assert!((raw_reward(&w, 4.0, 2.0) - 4.0).abs() < 1e-9);
    }

    #[test]
    fn rewards_normalize_to_budget() {
        // raws {3, 1} -> rewards {75, 25}
        let r = compute_rewards(&[(4.0, 2.0), (1.0, 1.0)], &weights(), 100.0);
        assert!((r[0] - 75.0).abs() < 1e-12);
        assert!((r[1] - 25.0).abs() < 1e-12);
    }

    #[test]
    fn zero_complexities_split_uniformly() {
        let r = compute_rewards(&[(0.0, 0.0), (0.0, 0.0)], &weights(), 100.0);
        assert_eq!(r, vec![50.0, 50.0]);
    }

    #[test]
    fn all_hits_skip_the_update() {
        let mut w = weights();
        let before = w.clone();
        assert!(update_weights(&mut w, &[false, false], &[1.0, 2.0], &[1.0, 2.0], LossPairing::Literal).is_none());
        assert_eq!(w, before);
    }

    #[test]
    fn zero_losses_leave_weights_at_renormalized_values() {
        let mut w = weights();
        // identical complexity on hit and missed tasks -> both losses 0
        update_weights(&mut w, &[true, false], &[2.0, 2.0], &[3.0, 3.0], LossPairing::Literal);
        assert!((w.alpha1 - 1.0).abs() < 1e-12);
        assert!((w.alpha2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn loss_matches_hand_computation() {
        // miss mean O^t = 1, hit mean = (2+3)/2 -> loss_trans = -1.5
        let (l_trans, _) = losses(&[true, false, false], &[0.0; 3], &[1.0, 2.0, 3.0]).unwrap();
        assert!((l_trans - (-1.5)).abs() < 1e-12);
    }

    #[test]
    fn swapped_pairing_crosses_the_losses() {
        let misses = [true, false];
        let comp = [5.0, 1.0]; // loss_comp = 4
        let trans = [1.0, 1.0]; // loss_trans = 0
        let mut literal = weights();
        update_weights(&mut literal, &misses, &comp, &trans, LossPairing::Literal);
        let mut swapped = weights();
        update_weights(&mut swapped, &misses, &comp, &trans, LossPairing::Swapped);
        // literal: alpha2 shrinks on comp loss; swapped: alpha1 shrinks
        assert!(literal.alpha2 < literal.alpha1);
        assert!(swapped.alpha1 < swapped.alpha2);
    }

    #[test]
    fn budget_feedback_branches() {
        let mut w = weights();
        assert!(!update_budget(&mut w, 1, 10));
        assert_eq!(w.budget, 100.0);
        assert!(!update_budget(&mut w, 2, 10));
        assert!((w.budget - 120.0).abs() < 1e-12);
        assert!(update_budget(&mut w, 10, 10)); // all missed
    }

    #[test]
    fn all_miss_cycle_sheds_admitted_tasks() {
        let mut c = RewardController::new(weights(), LossPairing::Literal, 0.1);
        assert_eq!(c.admitted(30), 30);
        c.feedback(0, &[true; 5], &[1.0; 5], &[1.0; 5]);
        assert_eq!(c.admitted(30), 27);
        c.feedback(1, &[true, false], &[1.0, 1.0], &[1.0, 1.0]);
        assert_eq!(c.admitted(30), 27, "mixed cycles must not shed further");
    }

    #[test]
    fn derived_threshold_scales_with_task_count() {
        let w = RewardWeights::new(0.1, 100.0, 1.2, None);
        assert_eq!(w.threshold(30), 6);
        assert_eq!(w.threshold(3), 1);
    }

    proptest! {
        #[test]
        fn rewards_conserve_budget_and_stay_nonnegative(
            pairs in proptest::collection::vec((0.0..10.0f64, 0.0..10.0f64), 1..40),
            budget in 1.0..1000.0f64,
        ) {
            let r = compute_rewards(&pairs, &weights(), budget);
            prop_assert!(r.iter().all(|x| *x >= 0.0 && *x <= budget + 1e-9 * budget));
            prop_assert!((r.iter().sum::<f64>() - budget).abs() <= 1e-9 * budget);
        }

        #[test]
        fn weights_survive_random_update_sequences(
            steps in proptest::collection::vec(
                (proptest::collection::vec(proptest::bool::ANY, 4..12),
                 0.0..8.0f64, 0.0..8.0f64),
                1..60,
            ),
        ) {
            let mut w = RewardWeights::new(0.3, 100.0, 1.2, None);
            for (misses, c0, t0) in steps {
                let n = misses.len();
                let comp: Vec<f64> = (0..n).map(|i| c0 + i as f64).collect();
                let trans: Vec<f64> = (0..n).map(|i| t0 + (n - i) as f64).collect();
                update_weights(&mut w, &misses, &comp, &trans, LossPairing::Literal);
                prop_assert!(w.alpha1 > 0.0 && w.alpha2 > 0.0);
                prop_assert!((w.alpha1 + w.alpha2 - 2.0).abs() < 1e-9);
            }
        }

        #[test]
        fn rewards_are_permutation_equivariant(
            pairs in proptest::collection::vec((0.0..10.0f64, 0.0..10.0f64), 2..12),
        ) {
            let forward = compute_rewards(&pairs, &weights(), 50.0);
            let mut reversed = pairs.clone();
            reversed.reverse();
            let mut backward = compute_rewards(&reversed, &weights(), 50.0);
            backward.reverse();
            for (a, b) in forward.iter().zip(&backward) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn raising_comp_never_lowers_the_reward(
            pairs in proptest::collection::vec((0.1..10.0f64, 0.1..10.0f64), 2..10),
            bump in 0.1..5.0f64,
        ) {
            let before = compute_rewards(&pairs, &weights(), 100.0);
            let mut bumped = pairs.clone();
            bumped[0].0 += bump;
            let after = compute_rewards(&bumped, &weights(), 100.0);
            prop_assert!(after[0] >= before[0] - 1e-12);
        }
    }
}
