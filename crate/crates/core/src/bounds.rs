//! Non-asymptotic deviation bounds for the empirical index and the
//! finite-time pull-count bound assembled from them.
//!
//! The lower-deviation rate `u_I` controls `P[D_inf(F_t, mu) <= D_inf(F, mu) - v]`,
//! the upper-deviation bound controls the joint event
//! `{D_inf(F_t, mu) >= u, mean(F_t) <= mu}`, and the pull-count bound for a
//! suboptimal arm is `log n / ((1-eps)(1-r) D_inf(F_i, mu*)) + C` with the
//! constant `C` split into four named pieces.

use serde::Serialize;
use thiserror::Error;

use crate::divergence::{dinf, DivergenceError};
use crate::legendre::legendre;
use crate::models::ArmModel;

/// Smallest constant for which `(log y)^2 <= c0 y^{-1/2} + y` on `y > 0`.
pub const C0: f64 = 2.163;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundError {
    #[error("mu = {mu} must be finite and < 1")]
    MuOutOfRange { mu: f64 },
    #[error("lower deviation bound requires mu > mean, got mu = {mu}, mean = {mean}")]
    MuNotAboveMean { mu: f64, mean: f64 },
    #[error("largest model mean mu* = {mu_star} must be < 1")]
    MuStarNotBelowOne { mu_star: f64 },
    #[error("arm {arm} is optimal; the pull-count bound applies to suboptimal arms")]
    ArmNotSuboptimal { arm: usize },
    #[error("arm index {arm} out of range for {k} arms")]
    ArmOutOfRange { arm: usize, k: usize },
    #[error("need at least two arms, got {k}")]
    TooFewArms { k: usize },
    #[error("delta = {delta} must lie strictly inside (0, mu* - mu') = (0, {gap})")]
    DeltaOutOfRange { delta: f64, gap: f64 },
    #[error("epsilon = {epsilon} must lie strictly inside (0, 1)")]
    EpsilonOutOfRange { epsilon: f64 },
    #[error("r = {r} must lie strictly inside (0, 1)")]
    ROutOfRange { r: f64 },
    #[error("xi = epsilon * dinf - delta/(1 - mu*) = {xi} must be positive")]
    XiNotPositive { xi: f64 },
    #[error("no feasible (epsilon, delta) pair on the search grid")]
    NoFeasibleParameters,
    #[error(transparent)]
    Divergence(#[from] DivergenceError),
}

/// Piecewise lower-deviation rate (with `c0 = 2.163`):
/// `v^2 / (2s)` for `v <= s/2`, else `v/2 - s/8`, where
/// `s = c0 + (1 - mean)/(1 - mu)`.
pub fn rate_u_i(v: f64, mean_f: f64, mu: f64) -> Result<f64, BoundError> {
    if !mu.is_finite() || mu >= 1.0 {
        return Err(BoundError::MuOutOfRange { mu });
    }
    let s = C0 + (1.0 - mean_f) / (1.0 - mu);
    Ok(if v <= 0.5 * s {
        v * v / (2.0 * s)
    } else {
        0.5 * v - s / 8.0
    })
}

/// Bound on `P[D_inf(empirical of t samples, mu) <= D_inf(F, mu) - v]`,
/// clamped into `(0, 1]`. Requires `mean(F) < mu < 1`.
pub fn lower_dev_bound(t: u64, v: f64, mean_f: f64, mu: f64) -> Result<f64, BoundError> {
    if !mu.is_finite() || mu >= 1.0 {
        return Err(BoundError::MuOutOfRange { mu });
    }
    if mu <= mean_f {
        return Err(BoundError::MuNotAboveMean { mu, mean: mean_f });
    }
    let rate = rate_u_i(v, mean_f, mu)?;
    Ok((-(t as f64) * rate).exp().min(1.0))
}

/// Bound on `P[D_inf(empirical of t samples, mu) >= u  and  empirical mean <= mu]`
/// for `mu` below the true mean: `2 e^{-t L}` when `u <= L = Lambda*(mu)`,
/// else `2e (1+t) e^{-t u}`; clamped into `(0, 1]`.
pub fn upper_dev_bound(t: u64, u: f64, legendre_at_mu: f64) -> f64 {
    let tf = t as f64;
    let raw = if u <= legendre_at_mu {
        2.0 * (-tf * legendre_at_mu).exp()
    } else {
        2.0 * std::f64::consts::E * (1.0 + tf) * (-tf * u).exp()
    };
    raw.min(1.0)
}

/// Named pieces of the constant term; they re-sum to `constant_c` exactly.
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct BoundComponents {
    /// Rounds the suboptimal arm's own empirical index stays too low.
    pub index_deviation: f64,
    /// Rounds an optimal arm's empirical mean dips below `mu* - delta`.
    pub optimal_arm_dips: f64,
    /// Rounds a suboptimal arm's empirical mean holds the top spot above `mu' + delta`.
    pub suboptimal_arm_spikes: f64,
    /// Rounds every empirical mean sits below `mu' + delta` (best optimal arm).
    pub list_recurrence: f64,
}

impl BoundComponents {
    pub fn sum(&self) -> f64 {
        self.index_deviation
            + self.optimal_arm_dips
            + self.suboptimal_arm_spikes
            + self.list_recurrence
    }
}

/// Pull-count bound `E[T_i(n)] <= log_coeff * log n + constant_c` for a
/// suboptimal arm, with every intermediate quantity kept.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct BoundReport {
    pub arm_index: usize,
    pub n: u64,
    pub epsilon: f64,
    pub delta: f64,
    pub r: f64,
    pub mu_star: f64,
    pub mu_second: f64,
    pub dinf_true: f64,
    pub xi: f64,
    pub log_coeff: f64,
    pub constant_c: f64,
    pub components: BoundComponents,
    /// `log_coeff * ln(n) + constant_c`.
    pub total: f64,
}

fn arm_means(truth: &[ArmModel]) -> Result<(Vec<f64>, f64, f64, Vec<bool>), BoundError> {
    if truth.len() < 2 {
        return Err(BoundError::TooFewArms { k: truth.len() });
    }
    let means: Vec<f64> = truth.iter().map(ArmModel::mean).collect();
    let mu_star = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(mu_star < 1.0) {
        return Err(BoundError::MuStarNotBelowOne { mu_star });
    }
    let optimal: Vec<bool> = means.iter().map(|&m| m == mu_star).collect();
    let mu_second = means
        .iter()
        .zip(&optimal)
        .filter(|&(_, &opt)| !opt)
        .map(|(&m, _)| m)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok((means, mu_star, mu_second, optimal))
}

/// Evaluates the pull-count bound for suboptimal `arm` (0-based) at round `n`.
pub fn regret_bound(
    truth: &[ArmModel],
    arm: usize,
    n: u64,
    epsilon: f64,
    delta: f64,
    r: f64,
) -> Result<BoundReport, BoundError> {
    let (means, mu_star, mu_second, optimal) = arm_means(truth)?;
    if arm >= truth.len() {
        return Err(BoundError::ArmOutOfRange {
            arm,
            k: truth.len(),
        });
    }
    if optimal[arm] {
        return Err(BoundError::ArmNotSuboptimal { arm });
    }
    if !(r > 0.0 && r < 1.0) {
        return Err(BoundError::ROutOfRange { r });
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(BoundError::EpsilonOutOfRange { epsilon });
    }
    let gap = mu_star - mu_second;
    if !(delta > 0.0 && delta < gap) {
        return Err(BoundError::DeltaOutOfRange { delta, gap });
    }

    let dinf_true = dinf(&truth[arm].view(), mu_star)?;
    let xi = epsilon * dinf_true - delta / (1.0 - mu_star);
    if !(xi > 0.0) {
        return Err(BoundError::XiNotPositive { xi });
    }
    let log_coeff = 1.0 / ((1.0 - epsilon) * (1.0 - r) * dinf_true);

    let k = truth.len() as f64;
    let u = rate_u_i(xi, means[arm], mu_star)?;
    let index_deviation = 1.0 / (-(-u).exp_m1());

    let mut optimal_arm_dips = 0.0;
    let mut suboptimal_arm_spikes = 0.0;
    let mut list_recurrence = f64::INFINITY;
    for (idx, model) in truth.iter().enumerate() {
        if optimal[idx] {
            let rate_dip = legendre(model, mu_star - delta).value;
            optimal_arm_dips += k / (-(-rate_dip).exp_m1());
            let rate_low = legendre(model, mu_second + delta).value;
            let term = 2.0 * (1.0 + k) / (-(-rate_low).exp_m1())
                + 2.0 * std::f64::consts::E
                    / (r * (-(-r * rate_low).exp_m1()).powi(2));
            if term < list_recurrence {
                list_recurrence = term;
            }
        } else {
            let rate_spike = legendre(model, mu_second + delta).value;
            suboptimal_arm_spikes += k / (-(-rate_spike).exp_m1());
        }
    }

    let components = BoundComponents {
        index_deviation,
        optimal_arm_dips,
        suboptimal_arm_spikes,
        list_recurrence,
    };
    let constant_c = components.sum();
    let total = log_coeff * (n as f64).ln() + constant_c;
    Ok(BoundReport {
        arm_index: arm,
        n,
        epsilon,
        delta,
        r,
        mu_star,
        mu_second,
        dinf_true,
        xi,
        log_coeff,
        constant_c,
        components,
        total,
    })
}

/// Minimises the total bound at round `n` over explicit `(epsilon, delta)`
/// candidate lists, skipping infeasible pairs.
pub fn optimize_bound_over(
    truth: &[ArmModel],
    arm: usize,
    n: u64,
    r: f64,
    epsilons: &[f64],
    deltas: &[f64],
) -> Result<(f64, f64, BoundReport), BoundError> {
    let mut best: Option<(f64, f64, BoundReport)> = None;
    for &eps in epsilons {
        for &del in deltas {
            match regret_bound(truth, arm, n, eps, del, r) {
                Ok(report) => {
                    if best
                        .as_ref()
                        .map(|(_, _, b)| report.total < b.total)
                        .unwrap_or(true)
                    {
                        best = Some((eps, del, report));
                    }
                }
                Err(BoundError::XiNotPositive { .. })
                | Err(BoundError::DeltaOutOfRange { .. })
                | Err(BoundError::EpsilonOutOfRange { .. }) => continue,
                Err(other) => return Err(other),
            }
        }
    }
    best.ok_or(BoundError::NoFeasibleParameters)
}

/// Grid search for `(epsilon, delta)` minimising the total bound at round `n`.
///
/// `eps_steps` points span `[0.05, 0.95]` (default 19, step 0.05) and
/// `delta_steps` points are log-spaced inside `(0, mu* - mu')` (default 40).
pub fn optimize_bound_params(
    truth: &[ArmModel],
    arm: usize,
    n: u64,
    r: f64,
    eps_steps: usize,
    delta_steps: usize,
) -> Result<(f64, f64, BoundReport), BoundError> {
    let (_, mu_star, mu_second, _) = arm_means(truth)?;
    let gap = mu_star - mu_second;
    let epsilons: Vec<f64> = if eps_steps <= 1 {
        vec![0.5]
    } else {
        (0..eps_steps)
            .map(|i| 0.05 + (0.95 - 0.05) * (i as f64) / (eps_steps as f64 - 1.0))
            .collect()
    };
    let deltas: Vec<f64> = if delta_steps <= 1 {
        vec![0.5 * gap]
    } else {
        let lo = (gap * 1e-4).ln();
        let hi = (gap * 0.999).ln();
        (0..delta_steps)
            .map(|i| (lo + (hi - lo) * (i as f64) / (delta_steps as f64 - 1.0)).exp())
            .collect()
    };
    optimize_bound_over(truth, arm, n, r, &epsilons, &deltas)
}
