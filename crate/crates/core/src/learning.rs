//! Regret learning with Boltzmann-Gibbs smoothing.
//!
//! Each agent tracks three coupled stochastic-approximation estimates per
//! action, each on its own timescale:
//!
//! ```text
//! Υ̃_a ← Υ̃_a + Γ¹(t)·1{a = played}·(Υ̂ − Υ̃_a)      utility
//! r̃_a ← r̃_a + Γ²(t)·(Υ̃_a − Υ̂ − r̃_a)              regret
//! π_a ← π_a + Γ³(t)·(G_a(r̃) − π_a)                 policy
//! ```
//!
//! where `G` is the Boltzmann-Gibbs map over clipped regrets and
//! `Γⁱ(t) = t^(−eᵢ)`.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::scalar::{check_simplex, softmax};
use crate::{Error, Result, Scalar};

/// Tolerance used for every probability-vector check in this module.
pub const SIMPLEX_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearningSchedule<T> {
    pub exponents: [T; 3],
}

impl<T: Scalar> LearningSchedule<T> {
    pub fn new(exponents: [T; 3]) -> Result<Self> {
        let s = LearningSchedule { exponents };
        s.validate()?;
        Ok(s)
    }

    /// Requires `0.5 < e₁ < e₂ < e₃ ≤ 1`.
    pub fn validate(&self) -> Result<()> {
        let [e1, e2, e3] = self.exponents;
        if e1 > T::of(0.5) && e1 < e2 && e2 < e3 && e3 <= T::one() {
            Ok(())
        } else {
            Err(Error::param(
                "learning exponents",
                "need 0.5 < e1 < e2 < e3 <= 1",
            ))
        }
    }

    /// `[Γ¹(t), Γ²(t), Γ³(t)]`.
    pub fn rates(&self, t: u64) -> [T; 3] {
        let t = T::of(t as f64);
        self.exponents.map(|e| t.powf(-e))
    }
}

impl Default for LearningSchedule<f64> {
    fn default() -> Self {
        LearningSchedule {
            exponents: [0.6, 0.7, 0.8],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerState<T> {
    pub utility_est: Vec<T>,
    pub regret_est: Vec<T>,
    pub policy: Vec<T>,
    pub temperature: T,
    /// Index of the next update, starting at 1.
    pub step: u64,
}

impl<T: Scalar> LearnerState<T> {
    /// Zero estimates and a uniform policy.
    pub fn new(num_actions: usize, temperature: T) -> Result<Self> {
        if num_actions == 0 {
            return Err(Error::param("num_actions", "must be positive"));
        }
        if !(temperature > T::zero()) {
            return Err(Error::param("temperature", "must be positive"));
        }
        let uniform = T::one() / T::of_usize(num_actions);
        Ok(LearnerState {
            utility_est: vec![T::zero(); num_actions],
            regret_est: vec![T::zero(); num_actions],
            policy: vec![uniform; num_actions],
            temperature,
            step: 1,
        })
    }

    pub fn num_actions(&self) -> usize {
        self.policy.len()
    }

    fn check_action(&self, action: usize) -> Result<()> {
        if action >= self.num_actions() {
            return Err(Error::InvalidAction {
                action,
                num_actions: self.num_actions(),
            });
        }
        Ok(())
    }
}

/// Boltzmann-Gibbs distribution over the clipped regrets `max(0, r̃)/ξ`.
pub fn bg_distribution<T: Scalar>(regret_est: &[T], temperature: T) -> Result<Vec<T>> {
    if !(temperature > T::zero()) {
        return Err(Error::param("temperature", "must be positive"));
    }
    if regret_est.is_empty() {
        return Err(Error::param("regret_est", "no actions"));
    }
    let exps: Vec<T> = regret_est
        .iter()
        .map(|r| r.max(T::zero()) / temperature)
        .collect();
    Ok(softmax(&exps))
}

fn renormalize<T: Scalar>(p: &mut [T]) {
    let total: T = p.iter().copied().sum();
    if total > T::zero() {
        p.iter_mut().for_each(|x| *x = *x / total);
    }
}

/// Regret and policy recursions shared by the SBS and cloud learners, given
/// freshly updated utilities.
fn update_regret_and_policy<T: Scalar>(
    next: &mut LearnerState<T>,
    realized: T,
    g2: T,
    g3: T,
) -> Result<()> {
    for (r, &u) in next.regret_est.iter_mut().zip(&next.utility_est) {
        *r = *r + g2 * (u - realized - *r);
    }
    let target = bg_distribution(&next.regret_est, next.temperature)?;
    for (p, g) in next.policy.iter_mut().zip(target) {
        *p = (*p + g3 * (g - *p)).max(T::zero());
    }
    renormalize(&mut next.policy);
    next.step += 1;
    Ok(())
}

/// One step of the three coupled recursions. Pure: `state` is not modified.
pub fn learner_step<T: Scalar>(
    state: &LearnerState<T>,
    chosen_action: usize,
    observed_utility: T,
    schedule: &LearningSchedule<T>,
) -> Result<LearnerState<T>> {
    learner_step_joint(state, &[(chosen_action, observed_utility)], observed_utility, schedule)
}

/// Step for an agent whose play consists of several actions at once (one
/// per occupied cache slot class): every played action's utility estimate
/// moves toward its own observation, and regrets are measured against the
/// `realized` utility of the joint play.
pub fn learner_step_joint<T: Scalar>(
    state: &LearnerState<T>,
    observations: &[(usize, T)],
    realized: T,
    schedule: &LearningSchedule<T>,
) -> Result<LearnerState<T>> {
    if state.step == 0 {
        return Err(Error::param("step", "must start at 1"));
    }
    for &(a, _) in observations {
        state.check_action(a)?;
    }
    let [g1, g2, g3] = schedule.rates(state.step);
    let mut next = state.clone();
    for &(a, obs) in observations {
        let u = &mut next.utility_est[a];
        *u = *u + g1 * (obs - *u);
    }
    update_regret_and_policy(&mut next, realized, g2, g3)?;
    Ok(next)
}

/// Inverse-CDF draw from the policy; consumes one uniform.
pub fn sample_action<T: Scalar, R: Rng + ?Sized>(state: &LearnerState<T>, rng: &mut R) -> Result<usize> {
    sample_from(&state.policy, rng)
}

/// Inverse-CDF draw from a probability vector; consumes one uniform.
pub fn sample_from<T: Scalar, R: Rng + ?Sized>(p: &[T], rng: &mut R) -> Result<usize> {
    check_simplex(p, SIMPLEX_TOL)?;
    let u = T::of(rng.random::<f64>());
    let mut acc = T::zero();
    for (i, &pi) in p.iter().enumerate() {
        acc = acc + pi;
        if u < acc {
            return Ok(i);
        }
    }
    Ok(p.iter().rposition(|x| *x > T::zero()).unwrap_or(p.len() - 1))
}

/// What one SBS tells the cloud at an epoch boundary: the global classes it
/// played with the utility observed for each, and its realized utility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudReport<T> {
    pub sbs: usize,
    pub plays: Vec<(usize, T)>,
    pub realized: T,
}

impl<T: Scalar> CloudReport<T> {
    /// A report with one played class.
    pub fn single(sbs: usize, action: usize, utility: T) -> Self {
        CloudReport {
            sbs,
            plays: vec![(action, utility)],
            realized: utility,
        }
    }
}

/// Cloud update over the global classes.
///
/// The cloud's utility for class `k` is the network-wide total it would
/// collect if every reporting SBS played `k`, estimated as `R` times the mean
/// utility reported for `k` (`R` reports present). The realized network
/// utility is the sum of the SBS realized utilities, so the regret of `k`
/// equals the sum of per-SBS regrets. Missing reports (`None`) are skipped
/// and logged; with no report at all the state is returned unchanged.
pub fn cloud_learner_step<T: Scalar>(
    reports: &[Option<CloudReport<T>>],
    cloud_state: &LearnerState<T>,
    schedule: &LearningSchedule<T>,
) -> Result<LearnerState<T>> {
    let present: Vec<&CloudReport<T>> = reports.iter().flatten().collect();
    let missing = reports.len() - present.len();
    if missing > 0 {
        log::debug!("cloud epoch {}: {missing} SBS report(s) missing", cloud_state.step);
    }
    if present.is_empty() {
        return Ok(cloud_state.clone());
    }
    let k = cloud_state.num_actions();
    let mut sum = vec![T::zero(); k];
    let mut count = vec![0usize; k];
    for r in &present {
        for &(a, u) in &r.plays {
            cloud_state.check_action(a)?;
            sum[a] = sum[a] + u;
            count[a] += 1;
        }
    }
    let reporters = T::of_usize(present.len());
    let realized: T = present.iter().map(|r| r.realized).sum();
    let observations: Vec<(usize, T)> = (0..k)
        .filter(|&a| count[a] > 0)
        .map(|a| (a, reporters * sum[a] / T::of_usize(count[a])))
        .collect();
    learner_step_joint(cloud_state, &observations, realized, schedule)
}

/// CSV trajectory recorder: `t,action,observed,pi_0,…,pi_{K−1}`.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    rows: Vec<String>,
}

impl Trajectory {
    pub fn record<T: Scalar>(&mut self, state: &LearnerState<T>, action: usize, observed: T) {
        let mut row = format!("{},{},{}", state.step, action, observed);
        for p in &state.policy {
            row.push(',');
            row.push_str(&p.to_string());
        }
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,action,observed_utility,policy...")?;
        for r in &self.rows {
            writeln!(out, "{r}")?;
        }
        Ok(())
    }
}
