//! The minimum-divergence index `D_inf(F, mu)` through its concave dual.
//!
//! For a distribution `F` on `(-inf, 1]` and a target mean `mu < 1`, the index
//! `D_inf(F, mu) = inf { D(F || G) : E(G) > mu }` equals the value of the
//! one-dimensional concave maximisation
//!
//! ```text
//! D_inf(F, mu) = max_{0 <= nu <= 1/(1-mu)} E_F[ log(1 - (X - mu) nu) ]
//! ```
//!
//! The maximiser `nu*` splits into three regimes: `nu* = 0` when
//! `E(F) >= mu`, the boundary `nu* = 1/(1-mu)` when `E_F[(1-mu)/(1-X)] <= 1`,
//! and otherwise the unique interior root of the first derivative, at which
//! `E_F[1/(1-(X-mu)nu*)] = 1`.

use thiserror::Error;

/// Expectations a distribution must expose for the dual solve.
///
/// Implementations must be exact for atom lists and high-accuracy for
/// parametric models. `expect_inv_gap` may legitimately be `+inf` (mass at 1,
/// or a divergent integral) and callers branch on that.
pub trait DistView {
    /// `E[X]`.
    fn mean(&self) -> f64;
    /// `E[log(1 - (X - mu) nu)]`; `-inf` when positive mass sits exactly at 1
    /// and `nu` is at the boundary `1/(1-mu)`.
    fn expect_log(&self, nu: f64, mu: f64) -> f64;
    /// `E[(X - mu) / (1 - (X - mu) nu)]` for `nu` strictly inside the domain.
    fn expect_ratio(&self, nu: f64, mu: f64) -> f64;
    /// `E[(X - mu)^2 / (1 - (X - mu) nu)^2]` for `nu` strictly inside.
    fn expect_ratio_sq(&self, nu: f64, mu: f64) -> f64;
    /// `E[(1 - mu) / (1 - X)]`, possibly `+inf`.
    fn expect_inv_gap(&self, mu: f64) -> f64;
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DivergenceError {
    #[error("mu = {mu} is outside the valid range (finite mu < 1 required)")]
    MuOutOfRange { mu: f64 },
    #[error("nu = {nu} is outside the dual domain [0, {max}]")]
    NuOutOfRange { nu: f64, max: f64 },
    #[error("derivative in mu is defined only for mu > mean, got mu = {mu}, mean = {mean}")]
    DerivativeUndefined { mu: f64, mean: f64 },
    #[error("dual root finder failed to converge within {iterations} iterations")]
    Convergence { iterations: u32 },
}

/// Solution of the dual maximisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualSolution {
    /// Maximiser in `[0, 1/(1-mu)]`.
    pub nu_star: f64,
    /// Value of the dual, `L(nu*; F, mu)`; equals `D_inf(F, mu)`.
    pub dinf: f64,
    /// True iff `nu*` sits at the boundary `1/(1-mu)` (within tolerance).
    pub at_boundary: bool,
    /// Root-finder iterations spent (0 for the closed-form regimes).
    pub iterations: u32,
}

const MAX_ITER: u32 = 200;
// Residual target for |nu * L'(nu)|, which equals |E[1/(1-(X-mu)nu)] - 1|.
const KKT_TOL: f64 = 1e-13;

fn check_mu(mu: f64) -> Result<(), DivergenceError> {
    if !mu.is_finite() || mu >= 1.0 {
        return Err(DivergenceError::MuOutOfRange { mu });
    }
    Ok(())
}

/// The dual objective `L(nu; F, mu) = E_F[log(1 - (X - mu) nu)]`.
pub fn lagrangian<F: DistView + ?Sized>(
    f: &F,
    mu: f64,
    nu: f64,
) -> Result<f64, DivergenceError> {
    check_mu(mu)?;
    let nu_max = 1.0 / (1.0 - mu);
    if !nu.is_finite() || nu < 0.0 || nu > nu_max * (1.0 + 1e-9) {
        return Err(DivergenceError::NuOutOfRange { nu, max: nu_max });
    }
    Ok(f.expect_log(nu.min(nu_max), mu))
}

/// First and second derivatives of the dual objective in `nu`.
///
/// Returns `(L', L'')` with `L'' <= 0` everywhere; `nu` must be strictly
/// interior to `(0, 1/(1-mu))`.
pub fn lagrangian_derivs<F: DistView + ?Sized>(
    f: &F,
    mu: f64,
    nu: f64,
) -> Result<(f64, f64), DivergenceError> {
    check_mu(mu)?;
    let nu_max = 1.0 / (1.0 - mu);
    if !nu.is_finite() || nu <= 0.0 || nu >= nu_max {
        return Err(DivergenceError::NuOutOfRange { nu, max: nu_max });
    }
    Ok((-f.expect_ratio(nu, mu), -f.expect_ratio_sq(nu, mu)))
}

/// Maximises the dual objective over `nu in [0, 1/(1-mu)]`.
pub fn solve_nu_star<F: DistView + ?Sized>(
    f: &F,
    mu: f64,
) -> Result<DualSolution, DivergenceError> {
    check_mu(mu)?;
    let mean = f.mean();
    if mean >= mu {
        return Ok(DualSolution {
            nu_star: 0.0,
            dinf: 0.0,
            at_boundary: false,
            iterations: 0,
        });
    }
    let nu_max = 1.0 / (1.0 - mu);
    if f.expect_inv_gap(mu) <= 1.0 {
        // L' stays nonnegative up to the right edge, so the maximum is there.
        let value = f.expect_log(nu_max, mu);
        return Ok(DualSolution {
            nu_star: nu_max,
            dinf: value.max(0.0),
            at_boundary: true,
            iterations: 0,
        });
    }

    // Interior regime: L'(0) = mu - mean > 0 and L' is strictly decreasing,
    // so bracket the unique root of L' and drive the KKT residual to zero.
    let hi = nu_max * (1.0 - 1e-12);
    let l1_hi = -f.expect_ratio(hi, mu);
    if l1_hi >= 0.0 {
        // Root pinched against the boundary beyond float resolution.
        let value = f.expect_log(hi, mu);
        return Ok(DualSolution {
            nu_star: hi,
            dinf: value.max(0.0),
            at_boundary: true,
            iterations: 0,
        });
    }

    let mut lo = 0.0;
    let mut hi = hi;
    let mut x = 0.5 * hi;
    let mut best = (x, f64::INFINITY);
    let mut iterations = 0;
    while iterations < MAX_ITER {
        iterations += 1;
        let l1 = -f.expect_ratio(x, mu);
        let residual = (x * l1).abs();
        if residual < best.1 {
            best = (x, residual);
        }
        if residual <= KKT_TOL {
            break;
        }
        if l1 > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= f64::EPSILON * nu_max {
            break;
        }
        let l2 = -f.expect_ratio_sq(x, mu);
        let newton = x - l1 / l2;
        x = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    if iterations >= MAX_ITER && best.1 > 1e-6 {
        return Err(DivergenceError::Convergence { iterations });
    }
    let nu_star = best.0;
    let value = f.expect_log(nu_star, mu);
    Ok(DualSolution {
        nu_star,
        dinf: value.max(0.0),
        at_boundary: false,
        iterations,
    })
}

/// `D_inf(F, mu)`: the value of the dual maximisation.
pub fn dinf<F: DistView + ?Sized>(f: &F, mu: f64) -> Result<f64, DivergenceError> {
    Ok(solve_nu_star(f, mu)?.dinf)
}

/// Derivative of `D_inf(F, mu)` in `mu`, which equals `nu*(F, mu)`.
///
/// Only defined for `mu > mean(F)`; the one-sided behaviour at `mu = mean(F)`
/// is deliberately not claimed.
pub fn dinf_deriv_mu<F: DistView + ?Sized>(f: &F, mu: f64) -> Result<f64, DivergenceError> {
    check_mu(mu)?;
    let mean = f.mean();
    if mu <= mean {
        return Err(DivergenceError::DerivativeUndefined { mu, mean });
    }
    Ok(solve_nu_star(f, mu)?.nu_star)
}
