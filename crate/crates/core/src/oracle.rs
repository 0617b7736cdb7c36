//! Brute-force primal minimiser for `D_inf`, used to cross-check the dual.
//!
//! `D_inf(F, mu)` is the infimum of `D(F || G)` over distributions `G` with
//! `E(G) > mu`. For a finite-support `F` the minimiser lives on
//! `supp(F) ∪ {1}`, so sweeping the tilted candidate family
//! `G_i ∝ F_i / (1 - (x_i - mu') nu)` (leftover mass parked at 1, or the whole
//! vector renormalised when it over-fills) over a `(nu, mu')` grid plus a
//! dense one-dimensional `nu` sweep at `mu' = mu` reaches the infimum. The
//! sweep never touches the dual solver, which is the point: the two routes are
//! independent.

use thiserror::Error;

use crate::empirical::EmpiricalDist;

/// Largest atom count the sweep accepts.
pub const ORACLE_ATOM_CAP: usize = 12;

/// Mean-constraint slack; `E(G) > mu` has the same infimum as `E(G) >= mu`
/// and the slack only absorbs float noise in the candidate means.
const FEAS_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("primal oracle is capped at {cap} atoms, got {count}")]
    TooManyAtoms { count: usize, cap: usize },
    #[error("mu = {mu} is outside the valid range (finite mu < 1 required)")]
    MuOutOfRange { mu: f64 },
    #[error("grid step must be positive and finite, got {grid}")]
    BadGrid { grid: f64 },
}

struct Instance {
    xs: Vec<f64>,
    ps: Vec<f64>,
    mu: f64,
}

impl Instance {
    /// `D(F || G)` for the tilt candidate at `(nu, mu_tilt)`, or `+inf` when
    /// the candidate is malformed or misses the mean constraint.
    fn candidate(&self, nu: f64, mu_tilt: f64) -> f64 {
        let mut gs = Vec::with_capacity(self.xs.len());
        let mut total = 0.0;
        for (&x, &p) in self.xs.iter().zip(&self.ps) {
            let denom = 1.0 - (x - mu_tilt) * nu;
            if denom <= 0.0 {
                return f64::INFINITY;
            }
            let g = p / denom;
            if !g.is_finite() {
                return f64::INFINITY;
            }
            gs.push(g);
            total += g;
        }
        let mut extra_at_one = 0.0;
        if total <= 1.0 {
            extra_at_one = 1.0 - total;
        } else {
            for g in &mut gs {
                *g /= total;
            }
        }
        self.eval(&gs, extra_at_one)
    }

    /// Mixture candidate `(1-b) F + b δ_1`.
    fn mixture(&self, b: f64) -> f64 {
        let gs: Vec<f64> = self.ps.iter().map(|&p| (1.0 - b) * p).collect();
        self.eval(&gs, b)
    }

    /// `D(F || G)` with the feasibility check `E(G) >= mu - slack`.
    fn eval(&self, gs: &[f64], extra_at_one: f64) -> f64 {
        let mut mean = extra_at_one;
        for (&x, &g) in self.xs.iter().zip(gs) {
            mean += x * g;
        }
        if mean < self.mu - FEAS_SLACK {
            return f64::INFINITY;
        }
        let mut div = 0.0;
        for ((&x, &p), &g) in self.xs.iter().zip(&self.ps).zip(gs) {
            if p == 0.0 {
                continue;
            }
            let g_eff = if x == 1.0 { g + extra_at_one } else { g };
            if g_eff <= 0.0 {
                return f64::INFINITY;
            }
            div += p * (p / g_eff).ln();
        }
        div
    }
}

/// Minimum of `D(F || G)` found by the grid-and-refine sweep.
///
/// `grid` is the step of the dense `nu` sweep (1e-4 is the tested default).
/// Agreement of this value with [`crate::divergence::dinf`] within `1e-4` is
/// the primal-dual check; this function is deliberately slow and exhaustive.
pub fn dinf_primal_oracle(
    f: &EmpiricalDist,
    mu: f64,
    grid: f64,
) -> Result<f64, OracleError> {
    if f.len() > ORACLE_ATOM_CAP {
        return Err(OracleError::TooManyAtoms {
            count: f.len(),
            cap: ORACLE_ATOM_CAP,
        });
    }
    if !mu.is_finite() || mu >= 1.0 {
        return Err(OracleError::MuOutOfRange { mu });
    }
    if !(grid > 0.0) || !grid.is_finite() {
        return Err(OracleError::BadGrid { grid });
    }

    let total = f.total_weight();
    let inst = Instance {
        xs: f.atoms().iter().map(|&(x, _)| x).collect(),
        ps: f.atoms().iter().map(|&(_, w)| w / total).collect(),
        mu,
    };

    let mut best = f64::INFINITY;

    // Dense 1-D sweep at mu' = mu, endpoint included.
    let nu_max = 1.0 / (1.0 - mu);
    let steps = (nu_max / grid).ceil() as usize;
    let mut best_nu = 0.0;
    for j in 0..=steps {
        let nu = (j as f64 * grid).min(nu_max);
        let v = inst.candidate(nu, mu);
        if v < best {
            best = v;
            best_nu = nu;
        }
    }

    // Local refinement of the dense sweep: golden-section on nu around the
    // best grid point (the candidate value is +inf left of the feasibility
    // edge, which golden-section walks towards).
    {
        let mut lo = (best_nu - 2.0 * grid).max(0.0);
        let mut hi = (best_nu + 2.0 * grid).min(nu_max);
        let phi = 0.5 * (5.0f64.sqrt() - 1.0);
        for _ in 0..120 {
            let m1 = hi - phi * (hi - lo);
            let m2 = lo + phi * (hi - lo);
            let v1 = inst.candidate(m1, mu);
            let v2 = inst.candidate(m2, mu);
            if v1 <= v2 {
                hi = m2;
            } else {
                lo = m1;
            }
            let v = v1.min(v2);
            if v < best {
                best = v;
            }
        }
        let v = inst.candidate(0.5 * (lo + hi), mu);
        if v < best {
            best = v;
        }
    }

    // Coarse 2-D sweep over (nu, mu'), mu' >= mu.
    for i in 0..40 {
        let mu_tilt = mu + (1.0 - mu) * 0.95 * (i as f64) / 39.0;
        let tilt_max = 1.0 / (1.0 - mu_tilt);
        for j in 0..=240 {
            let nu = tilt_max * (j as f64) / 240.0;
            let v = inst.candidate(nu, mu_tilt);
            if v < best {
                best = v;
            }
        }
    }

    // Mixtures with a point mass at 1.
    for j in 0..=200 {
        let b = j as f64 / 200.0;
        let v = inst.mixture(b);
        if v < best {
            best = v;
        }
    }

    Ok(best.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::dinf;
    use approx::assert_abs_diff_eq;

    #[test]
    fn oracle_matches_dual_on_two_atoms() {
        let f = EmpiricalDist::from_weighted([(0.0, 0.5), (1.0, 0.5)]).unwrap();
        let primal = dinf_primal_oracle(&f, 0.75, 1e-4).unwrap();
        assert_abs_diff_eq!(primal, 0.143841036225890, epsilon = 1e-4);
        let dual = dinf(&f, 0.75).unwrap();
        assert!((primal - dual).abs() <= 1e-4);
    }

    #[test]
    fn oracle_single_atom_boundary_case() {
        // optimal G is Bernoulli(0.5) on {0, 1}
        let f = EmpiricalDist::from_samples([0.0]).unwrap();
        let primal = dinf_primal_oracle(&f, 0.5, 1e-4).unwrap();
        assert_abs_diff_eq!(primal, 2.0f64.ln(), epsilon = 1e-4);
    }

    #[test]
    fn oracle_zero_when_mean_reaches_mu() {
        let f = EmpiricalDist::from_weighted([(0.2, 1.0), (0.9, 1.0)]).unwrap();
        let primal = dinf_primal_oracle(&f, 0.5, 1e-4).unwrap();
        assert_abs_diff_eq!(primal, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn oracle_enforces_atom_cap() {
        let f = EmpiricalDist::from_samples((0..13).map(|i| i as f64 / 13.0)).unwrap();
        assert!(matches!(
            dinf_primal_oracle(&f, 0.99, 1e-3),
            Err(OracleError::TooManyAtoms { count: 13, cap: 12 })
        ));
    }

    #[test]
    fn oracle_rejects_bad_inputs() {
        let f = EmpiricalDist::from_samples([0.0]).unwrap();
        assert!(matches!(
            dinf_primal_oracle(&f, 1.0, 1e-4),
            Err(OracleError::MuOutOfRange { .. })
        ));
        assert!(matches!(
            dinf_primal_oracle(&f, 0.5, 0.0),
            Err(OracleError::BadGrid { .. })
        ));
    }
}
