//! Randomized property suite for the divergence solver, behind the CLI's
//! `verify-dinf`. Every property prints one pass/fail line; a failure carries
//! the offending instance verbatim so it can be replayed.

use rand::Rng;

use crate::divergence::{dinf, solve_nu_star, DistView};
use crate::empirical::EmpiricalDist;
use crate::oracle::dinf_primal_oracle;
use crate::rng::RngStream;

#[derive(Debug, Clone)]
pub struct PropertyOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub checked: u64,
    /// Worst observed residual for the property's tolerance.
    pub worst: f64,
    /// Offending instance, verbatim, when the property failed.
    pub failure: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub trials: u64,
    pub seed: u64,
    pub outcomes: Vec<PropertyOutcome>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }
}

struct Instance {
    dist: EmpiricalDist,
    mu: f64,
}

impl Instance {
    fn describe(&self) -> String {
        let atoms: Vec<String> = self
            .dist
            .atoms()
            .iter()
            .map(|(x, w)| format!("({x:?}, {w:?})"))
            .collect();
        format!("atoms = [{}], mu = {:?}", atoms.join(", "), self.mu)
    }
}

/// Atoms in `[-5, 1]`, 2..=8 of them, positive weights; `mu` above the mean.
fn random_instance(rng: &mut RngStream, min_gap: f64) -> Instance {
    loop {
        let k = rng.random_range(2..=8usize);
        let mut dist = EmpiricalDist::new();
        for _ in 0..k {
            let x = -5.0 + 6.0 * rng.random::<f64>();
            let w = 0.05 + 0.95 * rng.random::<f64>();
            dist.push_weighted(x, w).expect("generated atoms are valid");
        }
        let mean = dist.mean();
        if mean > 0.99 - 2.0 * min_gap {
            continue;
        }
        let lo = mean + min_gap;
        let mu = lo + (0.99 - lo) * rng.random::<f64>();
        return Instance { dist, mu };
    }
}

type PropertyFn = fn(&Instance) -> Result<f64, String>;

fn run_property(
    name: &'static str,
    trials: u64,
    seed: u64,
    stream: u64,
    min_gap: f64,
    tol: f64,
    prop: PropertyFn,
) -> PropertyOutcome {
    let mut rng = RngStream::new(seed, stream);
    let mut worst = 0.0f64;
    for i in 0..trials {
        let inst = random_instance(&mut rng, min_gap);
        match prop(&inst) {
            Ok(residual) => {
                worst = worst.max(residual);
                if residual > tol {
                    return PropertyOutcome {
                        name,
                        passed: false,
                        checked: i + 1,
                        worst,
                        failure: Some(format!(
                            "residual {residual:e} exceeds tolerance {tol:e} on {}",
                            inst.describe()
                        )),
                    };
                }
            }
            Err(message) => {
                return PropertyOutcome {
                    name,
                    passed: false,
                    checked: i + 1,
                    worst,
                    failure: Some(format!("{message} on {}", inst.describe())),
                }
            }
        }
    }
    PropertyOutcome {
        name,
        passed: true,
        checked: trials,
        worst,
        failure: None,
    }
}

fn primal_dual(inst: &Instance) -> Result<f64, String> {
    let dual = dinf(&inst.dist, inst.mu).map_err(|e| e.to_string())?;
    let primal = dinf_primal_oracle(&inst.dist, inst.mu, 1e-4).map_err(|e| e.to_string())?;
    Ok((dual - primal).abs())
}

fn kkt(inst: &Instance) -> Result<f64, String> {
    let s = solve_nu_star(&inst.dist, inst.mu).map_err(|e| e.to_string())?;
    if s.at_boundary {
        let inv_gap = inst.dist.expect_inv_gap(inst.mu);
        Ok((inv_gap - 1.0).max(0.0))
    } else if s.nu_star == 0.0 {
        Err("interior expected: mu is above the mean".into())
    } else {
        // E[1/(1-(X-mu)nu)] = 1 + nu E[(X-mu)/(1-(X-mu)nu)]
        let e_inv = 1.0 + s.nu_star * inst.dist.expect_ratio(s.nu_star, inst.mu);
        Ok((e_inv - 1.0).abs())
    }
}

fn concavity(inst: &Instance) -> Result<f64, String> {
    let nu_max = 1.0 / (1.0 - inst.mu);
    let mut worst = 0.0f64;
    for i in 1..8 {
        let nu = nu_max * (i as f64) / 8.0;
        let l2 = -inst.dist.expect_ratio_sq(nu, inst.mu);
        worst = worst.max(l2.max(0.0));
        // chord check on an equispaced triple
        let step = nu_max / 16.0;
        if nu - step > 0.0 && nu + step < nu_max {
            let left = inst.dist.expect_log(nu - step, inst.mu);
            let mid = inst.dist.expect_log(nu, inst.mu);
            let right = inst.dist.expect_log(nu + step, inst.mu);
            worst = worst.max((0.5 * (left + right) - mid).max(0.0));
        }
    }
    Ok(worst)
}

fn monotone_in_mu(inst: &Instance) -> Result<f64, String> {
    let h = 1e-5;
    if inst.mu + h >= 0.999 {
        return Ok(0.0);
    }
    let lo = dinf(&inst.dist, inst.mu - h).map_err(|e| e.to_string())?;
    let hi = dinf(&inst.dist, inst.mu + h).map_err(|e| e.to_string())?;
    let slope = (hi - lo) / (2.0 * h);
    let cap = 1.0 / (1.0 - (inst.mu + h));
    let below = (-slope).max(0.0);
    let above = (slope - cap - 1e-3 * cap).max(0.0);
    Ok(below.max(above))
}

fn scale_invariance(inst: &Instance) -> Result<f64, String> {
    let base = dinf(&inst.dist, inst.mu).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for &a in &[-5.0, -1.0, -0.1] {
        let mapped = EmpiricalDist::from_weighted(
            inst.dist
                .atoms()
                .iter()
                .map(|&(x, w)| (a + (1.0 - a) * x, w)),
        )
        .map_err(|e| e.to_string())?;
        let mu_mapped = a + (1.0 - a) * inst.mu;
        let v = dinf(&mapped, mu_mapped).map_err(|e| e.to_string())?;
        worst = worst.max((v - base).abs());
    }
    Ok(worst)
}

fn zero_iff_mean(inst: &Instance) -> Result<f64, String> {
    let mean = inst.dist.mean();
    let at_mean = dinf(&inst.dist, mean).map_err(|e| e.to_string())?;
    let below = dinf(&inst.dist, mean - 0.1).map_err(|e| e.to_string())?;
    if at_mean != 0.0 || below != 0.0 {
        return Err(format!(
            "dinf must vanish at and below the mean, got {at_mean:e} / {below:e}"
        ));
    }
    let above = dinf(&inst.dist, inst.mu).map_err(|e| e.to_string())?;
    if above <= 0.0 {
        return Err(format!("dinf must be positive above the mean, got {above:e}"));
    }
    Ok(0.0)
}

/// Runs every property on `trials` fresh random instances each.
pub fn dinf_property_suite(trials: u64, seed: u64) -> SuiteReport {
    let outcomes = vec![
        run_property("primal-dual", trials, seed, 0, 1e-3, 1e-4, primal_dual),
        run_property("kkt", trials, seed, 1, 1e-6, 1e-8, kkt),
        run_property("concavity", trials, seed, 2, 1e-6, 1e-9, concavity),
        run_property("monotone-in-mu", trials, seed, 3, 1e-3, 1e-3, monotone_in_mu),
        run_property(
            "scale-invariance",
            trials,
            seed,
            4,
            1e-6,
            1e-10,
            scale_invariance,
        ),
        run_property(
            "zero-iff-mean-reached",
            trials,
            seed,
            5,
            1e-3,
            0.0,
            zero_iff_mean,
        ),
    ];
    SuiteReport {
        trials,
        seed,
        outcomes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes_on_a_small_batch() {
        let report = dinf_property_suite(25, 99);
        for o in &report.outcomes {
            assert!(
                o.passed,
                "{} failed: {:?} (worst {:e})",
                o.name, o.failure, o.worst
            );
        }
        assert!(report.all_passed());
    }

    #[test]
    fn suite_is_deterministic_in_the_seed() {
        let a = dinf_property_suite(10, 4);
        let b = dinf_property_suite(10, 4);
        for (x, y) in a.outcomes.iter().zip(&b.outcomes) {
            assert_eq!(x.worst.to_bits(), y.worst.to_bits());
            assert_eq!(x.checked, y.checked);
        }
    }
}
