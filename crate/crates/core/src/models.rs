//! Parametric reward distributions on `(-inf, 1]`.
//!
//! Every family keeps its moment generating function finite on an open
//! interval around the origin, which is the regularity the deviation bounds
//! need. The list covers bounded discrete support, bounded continuous
//! support, and genuinely semi-bounded support with a restricted MGF domain
//! (the shifted negated exponential/gamma families).

use std::fmt;

use rand::{Rng, RngCore};
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::divergence::DistView;
use crate::empirical::EmpiricalDist;
use crate::quad::integrate;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("probability p = {p} must lie in [0, 1]")]
    BadProbability { p: f64 },
    #[error("support value {value} must be finite and <= 1")]
    BadSupportValue { value: f64 },
    #[error("interval requires a < b <= 1, got a = {a}, b = {b}")]
    BadInterval { a: f64, b: f64 },
    #[error("{name} = {value} must be positive and finite")]
    BadPositiveParam { name: &'static str, value: f64 },
    #[error("finite support needs at least one atom")]
    EmptySupport,
    #[error("atom probabilities must sum to 1, got {sum}")]
    ProbabilitiesDontSum { sum: f64 },
}

/// A reward distribution supported on `(-inf, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ArmModel {
    /// Mass `p` at 1, mass `1-p` at 0.
    Bernoulli { p: f64 },
    /// Mass `p` at `x1`, mass `1-p` at `x0`.
    TwoPoint { x0: f64, x1: f64, p: f64 },
    /// Continuous uniform on `[a, b]`, `b <= 1`.
    UniformInterval { a: f64, b: f64 },
    /// `X = 1 - E` with `E ~ Exp(rate)`; log-MGF finite for `lambda > -rate`.
    ShiftedNegExponential { rate: f64 },
    /// `X = 1 - G` with `G ~ Gamma(shape, rate)`; log-MGF finite for `lambda > -rate`.
    ShiftedNegGamma { shape: f64, rate: f64 },
    /// Arbitrary finite support, `(value, probability)` pairs.
    FiniteSupport { atoms: Vec<(f64, f64)> },
}

impl ArmModel {
    pub fn validate(&self) -> Result<(), ModelError> {
        let check_prob = |p: f64| {
            if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                Err(ModelError::BadProbability { p })
            } else {
                Ok(())
            }
        };
        let check_value = |x: f64| {
            if !x.is_finite() || x > 1.0 {
                Err(ModelError::BadSupportValue { value: x })
            } else {
                Ok(())
            }
        };
        let check_positive = |name, v: f64| {
            if !(v > 0.0) || !v.is_finite() {
                Err(ModelError::BadPositiveParam { name, value: v })
            } else {
                Ok(())
            }
        };
        match self {
            ArmModel::Bernoulli { p } => check_prob(*p),
            ArmModel::TwoPoint { x0, x1, p } => {
                check_value(*x0)?;
                check_value(*x1)?;
                check_prob(*p)
            }
            ArmModel::UniformInterval { a, b } => {
                if !a.is_finite() || !b.is_finite() || !(a < b) || *b > 1.0 {
                    Err(ModelError::BadInterval { a: *a, b: *b })
                } else {
                    Ok(())
                }
            }
            ArmModel::ShiftedNegExponential { rate } => check_positive("rate", *rate),
            ArmModel::ShiftedNegGamma { shape, rate } => {
                check_positive("shape", *shape)?;
                check_positive("rate", *rate)
            }
            ArmModel::FiniteSupport { atoms } => {
                if atoms.is_empty() {
                    return Err(ModelError::EmptySupport);
                }
                let mut sum = 0.0;
                for &(x, p) in atoms {
                    check_value(x)?;
                    if !(p > 0.0) || !p.is_finite() {
                        return Err(ModelError::BadProbability { p });
                    }
                    sum += p;
                }
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(ModelError::ProbabilitiesDontSum { sum });
                }
                Ok(())
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            ArmModel::Bernoulli { p } => *p,
            ArmModel::TwoPoint { x0, x1, p } => (1.0 - p) * x0 + p * x1,
            ArmModel::UniformInterval { a, b } => 0.5 * (a + b),
            ArmModel::ShiftedNegExponential { rate } => 1.0 - 1.0 / rate,
            ArmModel::ShiftedNegGamma { shape, rate } => 1.0 - shape / rate,
            ArmModel::FiniteSupport { atoms } => {
                let total: f64 = atoms.iter().map(|&(_, p)| p).sum();
                atoms.iter().map(|&(x, p)| x * p).sum::<f64>() / total
            }
        }
    }

    /// `log E[e^{lambda X}]`, `+inf` outside the family's lambda-domain.
    pub fn log_mgf(&self, lambda: f64) -> f64 {
        match self {
            ArmModel::UniformInterval { a, b } => uniform_log_mgf(*a, *b, lambda),
            ArmModel::ShiftedNegExponential { rate } => {
                shifted_log_mgf(1.0, *rate, lambda)
            }
            ArmModel::ShiftedNegGamma { shape, rate } => {
                shifted_log_mgf(*shape, *rate, lambda)
            }
            _ => {
                // log-sum-exp over the atoms
                let atoms = self.discrete_atoms().expect("discrete family");
                let m = atoms
                    .iter()
                    .map(|&(x, _)| lambda * x)
                    .fold(f64::NEG_INFINITY, f64::max);
                let s: f64 = atoms
                    .iter()
                    .map(|&(x, p)| p * (lambda * x - m).exp())
                    .sum();
                m + s.ln()
            }
        }
    }

    /// Derivative of the log-MGF: the mean of the exponentially tilted law.
    /// Only meaningful strictly inside the lambda-domain.
    pub fn log_mgf_deriv(&self, lambda: f64) -> f64 {
        match self {
            ArmModel::UniformInterval { a, b } => {
                let h = 0.5 * lambda * (b - a);
                0.5 * (a + b) + 0.5 * (b - a) * coth_minus_inv(h)
            }
            ArmModel::ShiftedNegExponential { rate } => 1.0 - 1.0 / (rate + lambda),
            ArmModel::ShiftedNegGamma { shape, rate } => 1.0 - shape / (rate + lambda),
            _ => {
                let atoms = self.discrete_atoms().expect("discrete family");
                let m = atoms
                    .iter()
                    .map(|&(x, _)| lambda * x)
                    .fold(f64::NEG_INFINITY, f64::max);
                let mut num = 0.0;
                let mut den = 0.0;
                for &(x, p) in &atoms {
                    let w = p * (lambda * x - m).exp();
                    num += w * x;
                    den += w;
                }
                num / den
            }
        }
    }

    /// Open interval on which the log-MGF is finite.
    pub fn lambda_domain(&self) -> (f64, f64) {
        match self {
            ArmModel::ShiftedNegExponential { rate } | ArmModel::ShiftedNegGamma { rate, .. } => {
                (-rate, f64::INFINITY)
            }
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Closed convex hull of the support (lower end may be `-inf`).
    pub fn support_hull(&self) -> (f64, f64) {
        match self {
            ArmModel::UniformInterval { a, b } => (*a, *b),
            ArmModel::ShiftedNegExponential { .. } | ArmModel::ShiftedNegGamma { .. } => {
                (f64::NEG_INFINITY, 1.0)
            }
            _ => {
                let atoms = self.discrete_atoms().expect("discrete family");
                let lo = atoms.iter().map(|&(x, _)| x).fold(f64::INFINITY, f64::min);
                let hi = atoms
                    .iter()
                    .map(|&(x, _)| x)
                    .fold(f64::NEG_INFINITY, f64::max);
                (lo, hi)
            }
        }
    }

    /// Probability mass at exactly `x` (None for continuous families or when
    /// the mass is zero).
    pub fn point_mass(&self, x: f64) -> Option<f64> {
        match self {
            ArmModel::UniformInterval { .. }
            | ArmModel::ShiftedNegExponential { .. }
            | ArmModel::ShiftedNegGamma { .. } => None,
            _ => {
                let mass: f64 = self
                    .discrete_atoms()
                    .expect("discrete family")
                    .iter()
                    .filter(|&&(v, _)| v == x)
                    .map(|&(_, p)| p)
                    .sum();
                (mass > 0.0).then_some(mass)
            }
        }
    }

    /// One reward draw; advances the stream.
    pub fn sample<R: RngCore>(&self, rng: &mut R) -> f64 {
        match self {
            ArmModel::Bernoulli { p } => {
                if rng.random::<f64>() < *p {
                    1.0
                } else {
                    0.0
                }
            }
            ArmModel::TwoPoint { x0, x1, p } => {
                if rng.random::<f64>() < *p {
                    *x1
                } else {
                    *x0
                }
            }
            ArmModel::UniformInterval { a, b } => a + (b - a) * rng.random::<f64>(),
            ArmModel::ShiftedNegExponential { rate } => {
                1.0 - rand_distr::Exp::new(*rate)
                    .expect("validated rate")
                    .sample(rng)
            }
            ArmModel::ShiftedNegGamma { shape, rate } => {
                1.0 - rand_distr::Gamma::new(*shape, 1.0 / rate)
                    .expect("validated shape/rate")
                    .sample(rng)
            }
            ArmModel::FiniteSupport { atoms } => {
                let total: f64 = atoms.iter().map(|&(_, p)| p).sum();
                let mut u = rng.random::<f64>() * total;
                for &(x, p) in atoms {
                    if u < p {
                        return x;
                    }
                    u -= p;
                }
                atoms.last().expect("validated nonempty").0
            }
        }
    }

    /// Normalised `(value, probability)` atoms for the discrete families.
    fn discrete_atoms(&self) -> Option<Vec<(f64, f64)>> {
        let raw: Vec<(f64, f64)> = match self {
            ArmModel::Bernoulli { p } => vec![(0.0, 1.0 - p), (1.0, *p)],
            ArmModel::TwoPoint { x0, x1, p } => vec![(*x0, 1.0 - p), (*x1, *p)],
            ArmModel::FiniteSupport { atoms } => atoms.clone(),
            _ => return None,
        };
        let total: f64 = raw.iter().map(|&(_, p)| p).sum();
        Some(
            raw.into_iter()
                .filter(|&(_, p)| p > 0.0)
                .map(|(x, p)| (x, p / total))
                .collect(),
        )
    }

    /// Exact-expectation view used by the divergence solver.
    pub fn view(&self) -> ModelView {
        let imp = match self {
            ArmModel::UniformInterval { a, b } => ViewImpl::Uniform { a: *a, b: *b },
            ArmModel::ShiftedNegExponential { rate } => ViewImpl::HalfLine {
                shape: 1.0,
                rate: *rate,
            },
            ArmModel::ShiftedNegGamma { shape, rate } => ViewImpl::HalfLine {
                shape: *shape,
                rate: *rate,
            },
            _ => {
                let atoms = self.discrete_atoms().expect("discrete family");
                ViewImpl::Discrete(
                    EmpiricalDist::from_weighted(atoms).expect("validated atoms"),
                )
            }
        };
        ModelView {
            imp,
            mean: self.mean(),
        }
    }
}

impl fmt::Display for ArmModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArmModel::Bernoulli { p } => write!(f, "bernoulli(p={p})"),
            ArmModel::TwoPoint { x0, x1, p } => write!(f, "two_point(x0={x0} x1={x1} p={p})"),
            ArmModel::UniformInterval { a, b } => write!(f, "uniform_interval(a={a} b={b})"),
            ArmModel::ShiftedNegExponential { rate } => {
                write!(f, "shifted_neg_exponential(rate={rate})")
            }
            ArmModel::ShiftedNegGamma { shape, rate } => {
                write!(f, "shifted_neg_gamma(shape={shape} rate={rate})")
            }
            ArmModel::FiniteSupport { atoms } => {
                write!(f, "finite_support(")?;
                for (i, (x, p)) in atoms.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{x}:{p}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Expectation view over an [`ArmModel`].
///
/// Discrete families reduce to exact atom sums; the uniform family uses
/// closed antiderivatives; the shifted half-line families use adaptive
/// quadrature (absolute tolerance 1e-10) on the substitution `y = e^u` for
/// `Y = 1 - X`. A quadrature that cannot meet tolerance within the panel cap
/// panics: it cannot happen for validated models and is treated as a defect.
pub struct ModelView {
    imp: ViewImpl,
    mean: f64,
}

enum ViewImpl {
    Discrete(EmpiricalDist),
    Uniform { a: f64, b: f64 },
    HalfLine { shape: f64, rate: f64 },
}

const QUAD_TOL: f64 = 1e-10;
const QUAD_PANELS: usize = 4000;

/// `E[h(Y)]` for `Y = 1 - X ~ Gamma(shape, rate)` via `y = e^u`.
fn halfline_expect(shape: f64, rate: f64, h: impl Fn(f64) -> f64) -> f64 {
    let ln_norm = shape * rate.ln() - libm::lgamma(shape);
    let g = |u: f64| {
        let y = u.exp();
        h(y) * (ln_norm + shape * u - rate * y).exp()
    };
    let u_lo = -45.0 / shape.min(1.0);
    let u_hi = (745.0 / rate).ln().max(3.0);
    let r = integrate(&g, u_lo, u_hi, QUAD_TOL, QUAD_PANELS);
    assert!(
        r.converged,
        "half-line quadrature missed tolerance (shape={shape}, rate={rate}, err={})",
        r.abs_error
    );
    r.value
}

/// `E[(1-mu)/Y]`, detecting divergence by non-shrinking left-tail segments.
fn halfline_inv_gap(shape: f64, rate: f64, mu: f64) -> f64 {
    let ln_norm = shape * rate.ln() - libm::lgamma(shape);
    let g = |u: f64| {
        let y = u.exp();
        (1.0 - mu) / y * (ln_norm + shape * u - rate * y).exp()
    };
    let mut lo = -45.0 / shape.min(1.0);
    let u_hi = (745.0 / rate).ln().max(3.0);
    let main = integrate(&g, lo, u_hi, QUAD_TOL, QUAD_PANELS);
    if !main.converged {
        return f64::INFINITY;
    }
    let mut total = main.value;
    let mut prev = f64::INFINITY;
    for _ in 0..40 {
        let inc = integrate(&g, lo - 15.0, lo, 1e-12, 2000);
        if !inc.converged {
            return f64::INFINITY;
        }
        if inc.value <= 1e-12 {
            return total + inc.value;
        }
        if inc.value >= 0.9 * prev {
            return f64::INFINITY;
        }
        total += inc.value;
        prev = inc.value;
        lo -= 15.0;
    }
    f64::INFINITY
}

/// `E[(X-mu)^k]` for `X ~ U[a, b]`, `k = 1..=5`.
fn uniform_centered_moments(a: f64, b: f64, mu: f64) -> [f64; 6] {
    let ua = a - mu;
    let ub = b - mu;
    let mut m = [0.0; 6];
    m[0] = 1.0;
    for (k, slot) in m.iter_mut().enumerate().skip(1) {
        let kk = (k + 1) as i32;
        *slot = (ub.powi(kk) - ua.powi(kk)) / (f64::from(kk) * (b - a));
    }
    m
}

fn uniform_small_nu(a: f64, b: f64, mu: f64, nu: f64) -> bool {
    let m = (a - mu).abs().max((b - mu).abs());
    nu * m < 1e-4
}

fn uniform_expect_log(a: f64, b: f64, nu: f64, mu: f64) -> f64 {
    if uniform_small_nu(a, b, mu, nu) {
        let m = uniform_centered_moments(a, b, mu);
        return -(nu * m[1]
            + nu.powi(2) * m[2] / 2.0
            + nu.powi(3) * m[3] / 3.0
            + nu.powi(4) * m[4] / 4.0
            + nu.powi(5) * m[5] / 5.0);
    }
    // antiderivative of ln(1-(x-mu)nu): (d - d ln d)/nu, d = 1-(x-mu)nu
    let term = |x: f64| {
        let d = 1.0 - (x - mu) * nu;
        if d <= 0.0 {
            0.0 // limit of d - d ln d as d -> 0+
        } else {
            (d - d * d.ln()) / nu
        }
    };
    (term(b) - term(a)) / (b - a)
}

fn uniform_expect_ratio(a: f64, b: f64, nu: f64, mu: f64) -> f64 {
    if uniform_small_nu(a, b, mu, nu) {
        let m = uniform_centered_moments(a, b, mu);
        return m[1] + nu * m[2] + nu.powi(2) * m[3] + nu.powi(3) * m[4] + nu.powi(4) * m[5];
    }
    let term = |x: f64| {
        let d = 1.0 - (x - mu) * nu;
        -(x - mu) / nu - d.ln() / (nu * nu)
    };
    (term(b) - term(a)) / (b - a)
}

fn uniform_expect_ratio_sq(a: f64, b: f64, nu: f64, mu: f64) -> f64 {
    if uniform_small_nu(a, b, mu, nu) {
        let m = uniform_centered_moments(a, b, mu);
        return m[2]
            + 2.0 * nu * m[3]
            + 3.0 * nu.powi(2) * m[4]
            + 4.0 * nu.powi(3) * m[5];
    }
    let term = |x: f64| {
        let d = 1.0 - (x - mu) * nu;
        (1.0 / d + 2.0 * d.ln() - d) / nu.powi(3)
    };
    (term(b) - term(a)) / (b - a)
}

impl DistView for ModelView {
    fn mean(&self) -> f64 {
        self.mean
    }

    fn expect_log(&self, nu: f64, mu: f64) -> f64 {
        if nu == 0.0 {
            return 0.0;
        }
        match &self.imp {
            ViewImpl::Discrete(d) => d.expect_log(nu, mu),
            ViewImpl::Uniform { a, b } => uniform_expect_log(*a, *b, nu, mu),
            ViewImpl::HalfLine { shape, rate } => {
                let c = (1.0 - (1.0 - mu) * nu).max(0.0);
                halfline_expect(*shape, *rate, |y| (c + nu * y).ln())
            }
        }
    }

    fn expect_ratio(&self, nu: f64, mu: f64) -> f64 {
        match &self.imp {
            ViewImpl::Discrete(d) => d.expect_ratio(nu, mu),
            ViewImpl::Uniform { a, b } => uniform_expect_ratio(*a, *b, nu, mu),
            ViewImpl::HalfLine { shape, rate } => {
                let c = (1.0 - (1.0 - mu) * nu).max(0.0);
                let top = 1.0 - mu;
                halfline_expect(*shape, *rate, |y| (top - y) / (c + nu * y))
            }
        }
    }

    fn expect_ratio_sq(&self, nu: f64, mu: f64) -> f64 {
        match &self.imp {
            ViewImpl::Discrete(d) => d.expect_ratio_sq(nu, mu),
            ViewImpl::Uniform { a, b } => uniform_expect_ratio_sq(*a, *b, nu, mu),
            ViewImpl::HalfLine { shape, rate } => {
                let c = (1.0 - (1.0 - mu) * nu).max(0.0);
                let top = 1.0 - mu;
                halfline_expect(*shape, *rate, |y| {
                    let q = (top - y) / (c + nu * y);
                    q * q
                })
            }
        }
    }

    fn expect_inv_gap(&self, mu: f64) -> f64 {
        match &self.imp {
            ViewImpl::Discrete(d) => d.expect_inv_gap(mu),
            ViewImpl::Uniform { a, b } => {
                if *b >= 1.0 {
                    f64::INFINITY
                } else {
                    (1.0 - mu) * ((1.0 - a).ln() - (1.0 - b).ln()) / (b - a)
                }
            }
            ViewImpl::HalfLine { shape, rate } => halfline_inv_gap(*shape, *rate, mu),
        }
    }
}

fn shifted_log_mgf(shape: f64, rate: f64, lambda: f64) -> f64 {
    if lambda <= -rate {
        f64::INFINITY
    } else {
        lambda - shape * (lambda / rate).ln_1p()
    }
}

fn uniform_log_mgf(a: f64, b: f64, lambda: f64) -> f64 {
    let s = lambda * (b - a);
    if s.abs() < 1e-8 {
        lambda * 0.5 * (a + b) + s * s / 24.0
    } else if lambda > 0.0 {
        lambda * b + (-(-s).exp_m1()).ln() - s.ln()
    } else {
        lambda * a + (-s.exp_m1()).ln() - (-s).ln()
    }
}

fn coth_minus_inv(h: f64) -> f64 {
    if h.abs() < 1e-4 {
        h / 3.0 - h * h * h / 45.0
    } else if h.abs() > 19.0 {
        h.signum() - 1.0 / h
    } else {
        1.0 / h.tanh() - 1.0 / h
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use approx::assert_abs_diff_eq;

    fn families() -> Vec<ArmModel> {
        vec![
            ArmModel::Bernoulli { p: 0.5 },
            ArmModel::TwoPoint {
                x0: -2.0,
                x1: 0.75,
                p: 0.4,
            },
            ArmModel::UniformInterval { a: -1.5, b: 0.8 },
            ArmModel::ShiftedNegExponential { rate: 1.0 },
            ArmModel::ShiftedNegGamma {
                shape: 2.0,
                rate: 3.0,
            },
            ArmModel::FiniteSupport {
                atoms: vec![(-4.0, 0.25), (0.0, 0.25), (0.5, 0.5)],
            },
        ]
    }

    #[test]
    fn validate_accepts_the_standard_families() {
        for m in families() {
            m.validate().unwrap();
        }
    }

    #[test]
    fn validate_rejects_bad_parameters() {
        assert!(ArmModel::Bernoulli { p: 1.5 }.validate().is_err());
        assert!(ArmModel::UniformInterval { a: 0.5, b: 0.5 }.validate().is_err());
        assert!(ArmModel::UniformInterval { a: 0.0, b: 1.5 }.validate().is_err());
        assert!(ArmModel::ShiftedNegExponential { rate: 0.0 }.validate().is_err());
        assert!(ArmModel::FiniteSupport { atoms: vec![] }.validate().is_err());
        assert!(ArmModel::FiniteSupport {
            atoms: vec![(0.0, 0.4), (0.5, 0.4)]
        }
        .validate()
        .is_err());
        assert!(ArmModel::FiniteSupport {
            atoms: vec![(2.0, 1.0)]
        }
        .validate()
        .is_err());
    }

    #[test]
    fn log_mgf_at_zero_vanishes() {
        for m in families() {
            assert_abs_diff_eq!(m.log_mgf(0.0), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn log_mgf_shifted_exponential_closed_form() {
        let m = ArmModel::ShiftedNegExponential { rate: 1.0 };
        assert_abs_diff_eq!(m.log_mgf(1.0), 1.0 - 2.0f64.ln(), epsilon = 1e-12);
        assert_eq!(m.log_mgf(-1.0), f64::INFINITY);
        assert_eq!(m.log_mgf(-1.5), f64::INFINITY);
    }

    #[test]
    fn log_mgf_derivative_at_zero_is_the_mean() {
        let h = 1e-6;
        for m in families() {
            let fd = (m.log_mgf(h) - m.log_mgf(-h)) / (2.0 * h);
            assert_abs_diff_eq!(fd, m.mean(), epsilon = 1e-6);
            assert_abs_diff_eq!(m.log_mgf_deriv(0.0), m.mean(), epsilon = 1e-12);
        }
    }

    #[test]
    fn log_mgf_deriv_matches_finite_differences_away_from_zero() {
        let h = 1e-6;
        for m in families() {
            for &lam in &[-0.4f64, 0.3, 1.7] {
                let (lo, _) = m.lambda_domain();
                if lam <= lo + 2.0 * h {
                    continue;
                }
                let fd = (m.log_mgf(lam + h) - m.log_mgf(lam - h)) / (2.0 * h);
                assert_abs_diff_eq!(m.log_mgf_deriv(lam), fd, epsilon = 1e-5);
            }
        }
    }

    #[test]
    fn sampling_is_deterministic_per_stream() {
        for m in families() {
            let mut a = RngStream::new(9, 3);
            let mut b = RngStream::new(9, 3);
            for _ in 0..1000 {
                assert_eq!(m.sample(&mut a).to_bits(), m.sample(&mut b).to_bits());
            }
        }
    }

    #[test]
    fn degenerate_bernoulli_always_one() {
        let m = ArmModel::Bernoulli { p: 1.0 };
        let mut rng = RngStream::new(0, 0);
        for _ in 0..100 {
            assert_eq!(m.sample(&mut rng), 1.0);
        }
    }

    #[test]
    fn shifted_exponential_sample_mean_within_clt_band() {
        let m = ArmModel::ShiftedNegExponential { rate: 1.0 };
        let mut rng = RngStream::new(123, 0);
        let n = 1_000_000;
        let mean: f64 = (0..n).map(|_| m.sample(&mut rng)).sum::<f64>() / n as f64;
        // true mean 0, std 1: 3 sigma band of the sample mean
        assert!(mean.abs() < 3.0e-3, "sample mean {mean} outside CLT band");
    }

    #[test]
    fn view_expect_log_matches_two_atom_arithmetic() {
        let v = ArmModel::Bernoulli { p: 0.5 }.view();
        let expected = 0.5 * 0.75f64.ln() + 0.5 * 1.75f64.ln();
        assert_abs_diff_eq!(v.expect_log(1.0, 0.75), expected, epsilon = 1e-12);
        for m in families() {
            assert_eq!(m.view().expect_log(0.0, 0.3), 0.0);
        }
    }

    #[test]
    fn shifted_exponential_inv_gap_diverges() {
        let v = ArmModel::ShiftedNegExponential { rate: 1.0 }.view();
        assert_eq!(v.expect_inv_gap(0.5), f64::INFINITY);
        // gamma with shape 2 has E[1/Y] = rate/(shape-1)
        let g = ArmModel::ShiftedNegGamma {
            shape: 2.0,
            rate: 3.0,
        }
        .view();
        assert_abs_diff_eq!(g.expect_inv_gap(0.5), 0.5 * 3.0, epsilon = 1e-7);
        let g_half = ArmModel::ShiftedNegGamma {
            shape: 0.5,
            rate: 1.0,
        }
        .view();
        assert_eq!(g_half.expect_inv_gap(0.5), f64::INFINITY);
    }

    #[test]
    fn uniform_expectations_match_quadrature() {
        let (a, b) = (-1.5, 0.8);
        let v = ArmModel::UniformInterval { a, b }.view();
        let mu = 0.9;
        for &nu in &[1e-9, 1e-6, 0.05, 1.0, 4.0] {
            let log_ref = integrate(
                &|x: f64| (1.0 - (x - mu) * nu).ln() / (b - a),
                a,
                b,
                1e-12,
                2000,
            );
            assert_abs_diff_eq!(v.expect_log(nu, mu), log_ref.value, epsilon = 1e-9);
            let ratio_ref = integrate(
                &|x: f64| (x - mu) / (1.0 - (x - mu) * nu) / (b - a),
                a,
                b,
                1e-12,
                2000,
            );
            assert_abs_diff_eq!(v.expect_ratio(nu, mu), ratio_ref.value, epsilon = 1e-9);
            let sq_ref = integrate(
                &|x: f64| {
                    let u = x - mu;
                    let d = 1.0 - u * nu;
                    u * u / (d * d) / (b - a)
                },
                a,
                b,
                1e-12,
                2000,
            );
            assert_abs_diff_eq!(v.expect_ratio_sq(nu, mu), sq_ref.value, epsilon = 1e-9);
        }
        // closed form inv gap
        let ig = (1.0 - mu) * ((1.0 - a).ln() - (1.0 - b).ln()) / (b - a);
        assert_abs_diff_eq!(v.expect_inv_gap(mu), ig, epsilon = 1e-12);
        let at_one = ArmModel::UniformInterval { a: 0.0, b: 1.0 }.view();
        assert_eq!(at_one.expect_inv_gap(0.5), f64::INFINITY);
    }

    #[test]
    fn view_expectations_match_monte_carlo() {
        // 10^6 draws, 4 standard errors
        let n = 1_000_000usize;
        for (idx, m) in families().into_iter().enumerate() {
            let mu = 0.95;
            let nu = 0.5 / (1.0 - mu) * 0.5; // interior
            let v = m.view();
            let mut rng = RngStream::new(777, idx as u64);
            let mut sums = [0.0f64; 3];
            let mut sqs = [0.0f64; 3];
            for _ in 0..n {
                let x = m.sample(&mut rng);
                let u = x - mu;
                let d = 1.0 - u * nu;
                let vals = [d.ln(), u / d, (u * u) / (d * d)];
                for (k, val) in vals.iter().enumerate() {
                    sums[k] += val;
                    sqs[k] += val * val;
                }
            }
            let exact = [
                v.expect_log(nu, mu),
                v.expect_ratio(nu, mu),
                v.expect_ratio_sq(nu, mu),
            ];
            for k in 0..3 {
                let mean = sums[k] / n as f64;
                let var = (sqs[k] / n as f64 - mean * mean).max(0.0);
                let se = (var / n as f64).sqrt();
                assert!(
                    (mean - exact[k]).abs() <= 4.0 * se + 1e-9,
                    "{m}: expectation {k} off: mc {mean} vs exact {} (se {se})",
                    exact[k]
                );
            }
        }
    }

    #[test]
    fn serde_round_trip_through_toml() {
        #[derive(serde::Serialize, serde::Deserialize)]
        struct Doc {
            arms: Vec<ArmModel>,
        }
        let doc = Doc { arms: families() };
        let s = toml::to_string(&doc).unwrap();
        let back: Doc = toml::from_str(&s).unwrap();
        assert_eq!(back.arms, doc.arms);
    }
}
