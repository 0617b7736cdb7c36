//! Fenchel-Legendre transform of the log-MGF: the Chernoff rate
//! `Lambda*(x) = sup_lambda { lambda x - log E[e^{lambda X}] }`.

use serde::Serialize;

use crate::models::ArmModel;

/// Evaluated transform at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LegendrePoint {
    pub x: f64,
    /// Argmax; `+-inf` when the supremum is approached at a domain boundary.
    pub lambda_star: f64,
    /// `Lambda*(x) in [0, +inf]`; zero exactly at the model mean.
    pub value: f64,
}

/// Distance kept from an open edge of the lambda-domain.
const EDGE: f64 = 1e-10;

/// Computes `Lambda*(x)` for `model`.
///
/// Outside the closed convex hull of the support the value is `+inf`. At a
/// hull endpoint it is `-log P(X = endpoint)` for an atom there and `+inf`
/// otherwise. Interior points are solved by bracketing the stationarity
/// condition `d/dlambda log-MGF = x` (the tilted mean is strictly increasing)
/// and bisecting.
pub fn legendre(model: &ArmModel, x: f64) -> LegendrePoint {
    let (hull_lo, hull_hi) = model.support_hull();
    if x > hull_hi || x == hull_hi {
        let boundary = LegendrePoint {
            x,
            lambda_star: f64::INFINITY,
            value: f64::INFINITY,
        };
        if x > hull_hi {
            return boundary;
        }
        return match model.point_mass(x) {
            Some(p) => LegendrePoint {
                x,
                lambda_star: if hull_lo == hull_hi { 0.0 } else { f64::INFINITY },
                value: (-p.ln()).max(0.0),
            },
            None => boundary,
        };
    }
    if x < hull_lo || x == hull_lo {
        let boundary = LegendrePoint {
            x,
            lambda_star: f64::NEG_INFINITY,
            value: f64::INFINITY,
        };
        if x < hull_lo {
            return boundary;
        }
        return match model.point_mass(x) {
            Some(p) => LegendrePoint {
                x,
                lambda_star: f64::NEG_INFINITY,
                value: (-p.ln()).max(0.0),
            },
            None => boundary,
        };
    }

    // x strictly inside the hull: the tilted mean m(lambda) sweeps the open
    // hull, so a finite stationary lambda exists.
    let (dom_lo, _) = model.lambda_domain();
    let edge_lo = if dom_lo.is_finite() {
        dom_lo + EDGE
    } else {
        f64::NEG_INFINITY
    };

    let mean = model.mean();
    let (mut lo, mut hi);
    if x >= mean {
        lo = 0.0;
        hi = 1.0;
        while model.log_mgf_deriv(hi) < x {
            lo = hi;
            hi *= 2.0;
            if hi > 1e18 {
                break;
            }
        }
    } else {
        hi = 0.0;
        lo = if edge_lo.is_finite() {
            // walk towards the open edge; the tilted mean drops to -inf there
            let mut cand = 0.5 * (edge_lo + hi.min(0.0));
            while model.log_mgf_deriv(cand) > x && cand > edge_lo {
                cand = 0.5 * (edge_lo + cand);
            }
            cand.max(edge_lo)
        } else {
            let mut cand = -1.0;
            while model.log_mgf_deriv(cand) > x {
                cand *= 2.0;
                if cand < -1e18 {
                    break;
                }
            }
            cand
        };
    }

    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if model.log_mgf_deriv(mid) < x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda_star = 0.5 * (lo + hi);
    let value = (lambda_star * x - model.log_mgf(lambda_star)).max(0.0);
    LegendrePoint {
        x,
        lambda_star,
        value,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid_sup(model: &ArmModel, x: f64) -> f64 {
        // brute-force check over a dense lambda grid
        let (lo, _) = model.lambda_domain();
        let lam_lo = if lo.is_finite() { lo + 1e-6 } else { -60.0 };
        let mut best = f64::NEG_INFINITY;
        for j in 0..=600_000 {
            let lam = lam_lo + (60.0 - lam_lo) * (j as f64) / 600_000.0;
            let v = lam * x - model.log_mgf(lam);
            if v.is_finite() && v > best {
                best = v;
            }
        }
        best
    }

    #[test]
    fn value_zero_at_the_mean() {
        let models = [
            ArmModel::Bernoulli { p: 0.3 },
            ArmModel::TwoPoint {
                x0: -1.0,
                x1: 0.5,
                p: 0.25,
            },
            ArmModel::UniformInterval { a: -2.0, b: 1.0 },
            ArmModel::ShiftedNegExponential { rate: 2.0 },
            ArmModel::ShiftedNegGamma {
                shape: 1.5,
                rate: 2.0,
            },
        ];
        for m in models {
            let p = legendre(&m, m.mean());
            assert!(p.value <= 1e-10, "{m}: Lambda*(mean) = {}", p.value);
            assert_abs_diff_eq!(p.lambda_star, 0.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn bernoulli_matches_binary_divergence() {
        let m = ArmModel::Bernoulli { p: 0.7 };
        let p = legendre(&m, 0.5);
        let expected = 0.5 * (0.5f64 / 0.7).ln() + 0.5 * (0.5f64 / 0.3).ln();
        assert_abs_diff_eq!(p.value, expected, epsilon = 1e-9);
        assert_abs_diff_eq!(p.value, 0.087177, epsilon = 1e-6);
        assert_abs_diff_eq!(p.value, grid_sup(&m, 0.5), epsilon = 1e-7);
    }

    #[test]
    fn shifted_exponential_closed_form_point() {
        let m = ArmModel::ShiftedNegExponential { rate: 1.0 };
        let p = legendre(&m, -1.0);
        assert_abs_diff_eq!(p.lambda_star, -0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(p.value, 1.0 - 2.0f64.ln(), epsilon = 1e-9);
        assert_abs_diff_eq!(p.value, grid_sup(&m, -1.0), epsilon = 1e-6);
    }

    #[test]
    fn outside_hull_is_infinite() {
        let m = ArmModel::Bernoulli { p: 0.5 };
        assert_eq!(legendre(&m, 1.5).value, f64::INFINITY);
        assert_eq!(legendre(&m, -0.5).value, f64::INFINITY);
        let u = ArmModel::UniformInterval { a: 0.0, b: 1.0 };
        assert_eq!(legendre(&u, 1.0).value, f64::INFINITY);
        let e = ArmModel::ShiftedNegExponential { rate: 1.0 };
        assert_eq!(legendre(&e, 1.0).value, f64::INFINITY);
        assert!(legendre(&e, -100.0).value.is_finite());
    }

    #[test]
    fn hull_endpoint_atoms_give_log_mass() {
        let m = ArmModel::Bernoulli { p: 0.7 };
        assert_abs_diff_eq!(legendre(&m, 1.0).value, -(0.7f64.ln()), epsilon = 1e-12);
        assert_abs_diff_eq!(legendre(&m, 0.0).value, -(0.3f64.ln()), epsilon = 1e-12);
        let d = ArmModel::Bernoulli { p: 1.0 };
        assert_eq!(legendre(&d, 1.0).value, 0.0);
        assert_eq!(legendre(&d, 0.5).value, f64::INFINITY);
    }

    #[test]
    fn convex_and_monotone_around_the_mean() {
        let models = [
            ArmModel::Bernoulli { p: 0.6 },
            ArmModel::ShiftedNegGamma {
                shape: 2.0,
                rate: 4.0,
            },
            ArmModel::UniformInterval { a: -1.0, b: 0.5 },
        ];
        for m in models {
            let mean = m.mean();
            let (lo, hi) = m.support_hull();
            let lo = lo.max(mean - 3.0);
            let xs: Vec<f64> = (1..40)
                .map(|i| lo + (hi - lo) * (i as f64) / 40.0)
                .collect();
            let vals: Vec<f64> = xs.iter().map(|&x| legendre(&m, x).value).collect();
            for w in xs.windows(2).zip(vals.windows(2)) {
                let ((x0, x1), (v0, v1)) = ((w.0[0], w.0[1]), (w.1[0], w.1[1]));
                if x1 <= mean {
                    assert!(v1 <= v0 + 1e-8, "{m}: not decreasing at {x0}..{x1}");
                }
                if x0 >= mean {
                    assert!(v1 >= v0 - 1e-8, "{m}: not increasing at {x0}..{x1}");
                }
            }
            for i in 1..xs.len() - 1 {
                let mid = 0.5 * (vals[i - 1] + vals[i + 1]);
                assert!(vals[i] <= mid + 1e-8, "{m}: midpoint convexity fails");
            }
        }
    }
}
