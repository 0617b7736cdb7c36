//! Bandit policies behind a single select/update interface.
//!
//! DMED keeps three arm lists: the pass currently being played (`L_C`), the
//! arms of that pass not yet pulled (`L_R`), and the next pass under
//! construction (`L_N`). After each pull, every arm `j` outside `L_R` and not
//! yet in `L_N` is admitted to `L_N` when
//!
//! ```text
//! (1 - r) * T_j(n) * D_inf(F_j, mu_hat*(n)) <= log n
//! ```
//!
//! When the pass is exhausted, `L_C` and `L_R` are reset to `L_N` and `L_N`
//! is cleared. An arm attaining the empirical maximum has index zero, so the
//! next pass is never empty.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::divergence::{dinf, DivergenceError};
use crate::empirical::{DistError, EmpiricalDist};
use crate::rng::RngStream;

/// Empirical best mean is clamped below 1 before the index is evaluated, so
/// the dual domain stays bounded; an arm attaining the maximum still has
/// index zero.
const MU_STAR_CLAMP: f64 = 1.0 - 1e-9;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("need at least two arms, got {k}")]
    TooFewArms { k: usize },
    #[error("r = {r} must lie strictly inside (0, 1)")]
    InvalidR { r: f64 },
    #[error("epsilon = {epsilon} must lie inside [0, 1]")]
    InvalidEpsilon { epsilon: f64 },
    #[error("update for arm {got} does not match the pending selection {expected:?}")]
    OutOfOrderUpdate { expected: Option<usize>, got: usize },
    #[error("arm index {arm} out of range for {k} arms")]
    ArmOutOfRange { arm: usize, k: usize },
    #[error("reward rejected: {0}")]
    InvalidReward(#[from] DistError),
    #[error("candidate list empty after pass {passes} at round {n}; liveness violated")]
    EmptyPassList { passes: u64, n: u64 },
    #[error(transparent)]
    Divergence(#[from] DivergenceError),
}

/// Which policy to run, as it appears in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum PolicySpec {
    Dmed {
        #[serde(default = "default_r")]
        r: f64,
    },
    Ucb1,
    Egreedy { epsilon: f64 },
}

fn default_r() -> f64 {
    0.1
}

impl PolicySpec {
    /// Instantiates the policy for `k` arms. `rng` is consumed only by
    /// policies with internal randomness (epsilon-greedy).
    pub fn build(&self, k: usize, rng: RngStream) -> Result<Box<dyn BanditPolicy>, PolicyError> {
        match *self {
            PolicySpec::Dmed { r } => Ok(Box::new(DmedPolicy::new(k, r)?)),
            PolicySpec::Ucb1 => Ok(Box::new(Ucb1Policy::new(k)?)),
            PolicySpec::Egreedy { epsilon } => {
                Ok(Box::new(EpsilonGreedyPolicy::new(k, epsilon, rng)?))
            }
        }
    }
}

/// One selected arm, optionally with the policy internals behind the choice.
#[derive(Debug, Clone)]
pub struct PolicyDecision {
    pub arm: usize,
    pub diagnostics: Option<DecisionDiagnostics>,
}

/// DMED internals snapshot (empirical index per arm and list memberships).
#[derive(Debug, Clone)]
pub struct DecisionDiagnostics {
    pub index_values: Vec<f64>,
    pub current: Vec<usize>,
    pub remaining: Vec<usize>,
    pub next: Vec<usize>,
}

pub trait BanditPolicy {
    fn select(&mut self) -> PolicyDecision;
    fn update(&mut self, arm: usize, reward: f64) -> Result<(), PolicyError>;
    fn pull_counts(&self) -> Vec<u64>;
    fn rounds(&self) -> u64;
}

struct ArmRecord {
    dist: EmpiricalDist,
    pulls: u64,
}

pub struct DmedPolicy {
    r: f64,
    n: u64,
    arms: Vec<ArmRecord>,
    current: Vec<usize>,
    cursor: usize,
    in_remaining: Vec<bool>,
    in_next: Vec<bool>,
    pending: Option<usize>,
    passes: u64,
    record_diagnostics: bool,
}

impl DmedPolicy {
    /// Requires `k >= 2` and `r` strictly inside `(0, 1)`. The first pass is
    /// the initialisation sweep: `L_C = L_R = {0..k}` and every arm is pulled
    /// once before any index is evaluated.
    pub fn new(k: usize, r: f64) -> Result<Self, PolicyError> {
        if k < 2 {
            return Err(PolicyError::TooFewArms { k });
        }
        if !(r > 0.0 && r < 1.0) {
            return Err(PolicyError::InvalidR { r });
        }
        Ok(Self {
            r,
            n: 0,
            arms: (0..k)
                .map(|_| ArmRecord {
                    dist: EmpiricalDist::new(),
                    pulls: 0,
                })
                .collect(),
            current: (0..k).collect(),
            cursor: 0,
            in_remaining: vec![true; k],
            in_next: vec![false; k],
            pending: None,
            passes: 0,
            record_diagnostics: false,
        })
    }

    /// When set, each `select` carries a [`DecisionDiagnostics`] snapshot.
    pub fn set_record_diagnostics(&mut self, on: bool) {
        self.record_diagnostics = on;
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// Completed list swaps so far.
    pub fn passes(&self) -> u64 {
        self.passes
    }

    pub fn current_list(&self) -> &[usize] {
        &self.current
    }

    pub fn remaining_list(&self) -> Vec<usize> {
        membership(&self.in_remaining)
    }

    pub fn next_list(&self) -> Vec<usize> {
        membership(&self.in_next)
    }

    pub fn arm_dist(&self, arm: usize) -> &EmpiricalDist {
        &self.arms[arm].dist
    }

    fn mu_star(&self) -> f64 {
        self.arms
            .iter()
            .filter(|a| a.pulls > 0)
            .map(|a| {
                use crate::divergence::DistView;
                a.dist.mean()
            })
            .fold(f64::NEG_INFINITY, f64::max)
            .min(MU_STAR_CLAMP)
    }

    fn index_value(&self, arm: usize, mu_star: f64) -> Result<f64, DivergenceError> {
        dinf(&self.arms[arm].dist, mu_star)
    }

    fn diagnostics(&self) -> DecisionDiagnostics {
        let all_pulled = self.arms.iter().all(|a| a.pulls > 0);
        let mu_star = if all_pulled { self.mu_star() } else { f64::NAN };
        let index_values = self
            .arms
            .iter()
            .enumerate()
            .map(|(j, a)| {
                if all_pulled && a.pulls > 0 {
                    self.index_value(j, mu_star).unwrap_or(f64::NAN)
                } else {
                    f64::NAN
                }
            })
            .collect();
        DecisionDiagnostics {
            index_values,
            current: self.current.clone(),
            remaining: self.remaining_list(),
            next: self.next_list(),
        }
    }
}

fn membership(flags: &[bool]) -> Vec<usize> {
    flags
        .iter()
        .enumerate()
        .filter_map(|(i, &b)| b.then_some(i))
        .collect()
}

impl BanditPolicy for DmedPolicy {
    fn select(&mut self) -> PolicyDecision {
        let arm = self.current[self.cursor];
        self.pending = Some(arm);
        PolicyDecision {
            arm,
            diagnostics: self.record_diagnostics.then(|| self.diagnostics()),
        }
    }

    fn update(&mut self, arm: usize, reward: f64) -> Result<(), PolicyError> {
        if self.pending != Some(arm) {
            return Err(PolicyError::OutOfOrderUpdate {
                expected: self.pending,
                got: arm,
            });
        }
        self.pending = None;
        self.n += 1;
        self.arms[arm].dist.push(reward)?;
        self.arms[arm].pulls += 1;
        self.in_remaining[arm] = false;

        // The admission test needs every arm sampled once; during the
        // initialisation sweep it first fires on the sweep's last update,
        // where L_R is already empty and all arms get screened.
        if self.arms.iter().all(|a| a.pulls > 0) {
            let mu_star = self.mu_star();
            let log_n = (self.n as f64).ln();
            for j in 0..self.arms.len() {
                if self.in_remaining[j] || self.in_next[j] {
                    continue;
                }
                let index = self.index_value(j, mu_star)?;
                if (1.0 - self.r) * (self.arms[j].pulls as f64) * index <= log_n {
                    self.in_next[j] = true;
                }
            }
        }

        self.cursor += 1;
        if self.cursor == self.current.len() {
            self.current = membership(&self.in_next);
            if self.current.is_empty() {
                return Err(PolicyError::EmptyPassList {
                    passes: self.passes,
                    n: self.n,
                });
            }
            self.in_remaining.copy_from_slice(&self.in_next);
            self.in_next.iter_mut().for_each(|b| *b = false);
            self.cursor = 0;
            self.passes += 1;
        }
        Ok(())
    }

    fn pull_counts(&self) -> Vec<u64> {
        self.arms.iter().map(|a| a.pulls).collect()
    }

    fn rounds(&self) -> u64 {
        self.n
    }
}

/// UCB1 with index `mean + sqrt(2 log n / T_i)`; a heuristic comparison
/// baseline (the index presumes bounded rewards, so it is not a principled
/// choice when rewards are unbounded below). Ties break to the lowest index.
pub struct Ucb1Policy {
    counts: Vec<u64>,
    sums: Vec<f64>,
    n: u64,
    pending: Option<usize>,
}

impl Ucb1Policy {
    pub fn new(k: usize) -> Result<Self, PolicyError> {
        if k < 2 {
            return Err(PolicyError::TooFewArms { k });
        }
        Ok(Self {
            counts: vec![0; k],
            sums: vec![0.0; k],
            n: 0,
            pending: None,
        })
    }

    fn choose(&self) -> usize {
        if let Some(unpulled) = self.counts.iter().position(|&c| c == 0) {
            return unpulled;
        }
        let log_n = (self.n as f64).ln();
        let mut best = 0;
        let mut best_index = f64::NEG_INFINITY;
        for i in 0..self.counts.len() {
            let t = self.counts[i] as f64;
            let index = self.sums[i] / t + (2.0 * log_n / t).sqrt();
            if index > best_index {
                best_index = index;
                best = i;
            }
        }
        best
    }
}

impl BanditPolicy for Ucb1Policy {
    fn select(&mut self) -> PolicyDecision {
        let arm = self.choose();
        self.pending = Some(arm);
        PolicyDecision {
            arm,
            diagnostics: None,
        }
    }

    fn update(&mut self, arm: usize, reward: f64) -> Result<(), PolicyError> {
        if self.pending != Some(arm) {
            return Err(PolicyError::OutOfOrderUpdate {
                expected: self.pending,
                got: arm,
            });
        }
        self.pending = None;
        self.n += 1;
        self.counts[arm] += 1;
        self.sums[arm] += reward;
        Ok(())
    }

    fn pull_counts(&self) -> Vec<u64> {
        self.counts.clone()
    }

    fn rounds(&self) -> u64 {
        self.n
    }
}

/// Epsilon-greedy baseline: explore uniformly with probability `epsilon`,
/// otherwise play the best empirical mean (ties to the lowest index).
pub struct EpsilonGreedyPolicy {
    epsilon: f64,
    counts: Vec<u64>,
    sums: Vec<f64>,
    n: u64,
    pending: Option<usize>,
    rng: RngStream,
}

impl EpsilonGreedyPolicy {
    pub fn new(k: usize, epsilon: f64, rng: RngStream) -> Result<Self, PolicyError> {
        if k < 2 {
            return Err(PolicyError::TooFewArms { k });
        }
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(PolicyError::InvalidEpsilon { epsilon });
        }
        Ok(Self {
            epsilon,
            counts: vec![0; k],
            sums: vec![0.0; k],
            n: 0,
            pending: None,
            rng,
        })
    }
}

impl BanditPolicy for EpsilonGreedyPolicy {
    fn select(&mut self) -> PolicyDecision {
        let arm = if let Some(unpulled) = self.counts.iter().position(|&c| c == 0) {
            unpulled
        } else if self.rng.random::<f64>() < self.epsilon {
            self.rng.random_range(0..self.counts.len())
        } else {
            let mut best = 0;
            let mut best_mean = f64::NEG_INFINITY;
            for i in 0..self.counts.len() {
                let mean = self.sums[i] / self.counts[i] as f64;
                if mean > best_mean {
                    best_mean = mean;
                    best = i;
                }
            }
            best
        };
        self.pending = Some(arm);
        PolicyDecision {
            arm,
            diagnostics: None,
        }
    }

    fn update(&mut self, arm: usize, reward: f64) -> Result<(), PolicyError> {
        if self.pending != Some(arm) {
            return Err(PolicyError::OutOfOrderUpdate {
                expected: self.pending,
                got: arm,
            });
        }
        self.pending = None;
        self.n += 1;
        self.counts[arm] += 1;
        self.sums[arm] += reward;
        Ok(())
    }

    fn pull_counts(&self) -> Vec<u64> {
        self.counts.clone()
    }

    fn rounds(&self) -> u64 {
        self.n
    }
}
