//! Subcommand implementations.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde_json::json;

use dmed_core::bounds::{optimize_bound_over, BoundReport};
use dmed_core::config::ExperimentConfig;
use dmed_core::divergence::{solve_nu_star, DistView};
use dmed_core::empirical::EmpiricalDist;
use dmed_core::policy::PolicySpec;
use dmed_core::selfcheck::dinf_property_suite;
use dmed_core::sim::{run_experiment, verify_lower_deviation, verify_upper_deviation, DeviationTrial};

use crate::output::{fmt_f64, quote};
use crate::{CliError, CliResult};

const SCHEMA_VERSION: u32 = 1;
/// Stream salt separating upper-deviation trials from lower ones.
const UPPER_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
    ExperimentConfig::from_toml_str(&text).map_err(|e| CliError::usage(e.to_string()))
}

pub fn simulate(config_path: &Path, out_dir: &Path) -> CliResult {
    let config = load_config(config_path)?;
    let (records, aggregate) =
        run_experiment(&config).map_err(|e| CliError::failure(e.to_string()))?;

    fs::create_dir_all(out_dir)
        .map_err(|e| CliError::failure(format!("cannot create {}: {e}", out_dir.display())))?;

    let k = config.arms.len();
    let mut csv = String::new();
    csv.push_str("replication,checkpoint_n,cum_pseudo_regret");
    for arm in 1..=k {
        csv.push_str(&format!(",T_{arm}"));
    }
    csv.push('\n');
    for record in &records {
        for row in &record.rows {
            csv.push_str(&format!(
                "{},{},{}",
                record.replication,
                row.n,
                fmt_f64(row.pseudo_regret)
            ));
            for &t in &row.pulls {
                csv.push_str(&format!(",{t}"));
            }
            csv.push('\n');
        }
    }
    write_file(&out_dir.join("regret.csv"), csv.as_bytes())?;

    let checkpoints: Vec<_> = aggregate
        .checkpoints
        .iter()
        .map(|cp| {
            json!({
                "checkpoint_n": cp.n,
                "pseudo_regret": {
                    "mean": cp.pseudo_regret.mean,
                    "std": cp.pseudo_regret.std,
                    "min": cp.pseudo_regret.min,
                    "max": cp.pseudo_regret.max,
                },
                "arm_pulls": cp.pulls.iter().enumerate().map(|(i, s)| json!({
                    "arm": i + 1,
                    "mean": s.mean,
                    "std": s.std,
                    "min": s.min,
                    "max": s.max,
                })).collect::<Vec<_>>(),
            })
        })
        .collect();
    let summary = json!({
        "schema_version": SCHEMA_VERSION,
        "library_version": env!("CARGO_PKG_VERSION"),
        "master_seed": config.seed,
        "config": config,
        "aggregates": checkpoints,
    });
    let pretty = serde_json::to_string_pretty(&summary)
        .map_err(|e| CliError::failure(e.to_string()))?;
    write_file(&out_dir.join("summary.json"), pretty.as_bytes())?;
    println!(
        "wrote {} rows to {}",
        records.len() * config.effective_checkpoints().len(),
        out_dir.join("regret.csv").display()
    );
    Ok(())
}

pub fn bound(
    config_path: &Path,
    arm: usize,
    n: u64,
    epsilon: Option<f64>,
    delta: Option<f64>,
    r: Option<f64>,
) -> CliResult {
    let config = load_config(config_path)?;
    let k = config.arms.len();
    if arm == 0 || arm > k {
        return Err(CliError::usage(format!(
            "arm must lie in 1..={k} (1-based config order), got {arm}"
        )));
    }
    let arm0 = arm - 1;
    let r = r.unwrap_or(match config.policy {
        PolicySpec::Dmed { r } => r,
        _ => 0.1,
    });

    let eps_grid: Vec<f64> = match epsilon {
        Some(e) => vec![e],
        None => (0..19).map(|i| 0.05 + 0.05 * i as f64).collect(),
    };
    let delta_grid: Vec<f64> = match delta {
        Some(d) => vec![d],
        None => {
            let means: Vec<f64> = config.arms.iter().map(|m| m.mean()).collect();
            let mu_star = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mu_second = means
                .iter()
                .cloned()
                .filter(|&m| m < mu_star)
                .fold(f64::NEG_INFINITY, f64::max);
            let gap = mu_star - mu_second;
            if !gap.is_finite() || gap <= 0.0 {
                return Err(CliError::usage(
                    "cannot build a delta grid: no positive optimality gap".to_string(),
                ));
            }
            let lo = (gap * 1e-4).ln();
            let hi = (gap * 0.999).ln();
            (0..40)
                .map(|i| (lo + (hi - lo) * i as f64 / 39.0).exp())
                .collect()
        }
    };

    let (eps, del, report) = optimize_bound_over(&config.arms, arm0, n, r, &eps_grid, &delta_grid)
        .map_err(|e| CliError::usage(e.to_string()))?;
    print_bound_report(arm, eps, del, epsilon.is_none(), delta.is_none(), &report);
    Ok(())
}

fn print_bound_report(
    arm_one_based: usize,
    epsilon: f64,
    delta: f64,
    epsilon_optimized: bool,
    delta_optimized: bool,
    report: &BoundReport,
) {
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "arm": arm_one_based,
        "n": report.n,
        "epsilon": epsilon,
        "delta": delta,
        "r": report.r,
        "optimized": { "epsilon": epsilon_optimized, "delta": delta_optimized },
        "mu_star": report.mu_star,
        "mu_second": report.mu_second,
        "dinf_true": report.dinf_true,
        "xi": report.xi,
        "log_coeff": report.log_coeff,
        "constant_c": report.constant_c,
        "components": report.components,
        "total_bound": report.total,
    });
    println!("{}", serde_json::to_string_pretty(&doc).expect("fixed schema"));
}

pub fn verify_dinf(trials: u64, seed: u64) -> CliResult {
    if trials == 0 {
        return Err(CliError::usage("trials must be at least 1"));
    }
    let report = dinf_property_suite(trials, seed);
    let mut failures = Vec::new();
    for outcome in &report.outcomes {
        if outcome.passed {
            println!(
                "PASS {}: {} instances, worst residual {:e}",
                outcome.name, outcome.checked, outcome.worst
            );
        } else {
            let detail = outcome.failure.as_deref().unwrap_or("unknown failure");
            println!("FAIL {}: {}", outcome.name, detail);
            failures.push(outcome.name);
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::failure(format!(
            "property failures: {}",
            failures.join(", ")
        )))
    }
}

pub fn verify_ldp(config_path: &Path, out_dir: &Path) -> CliResult {
    let config = load_config(config_path)?;
    let verify = config.verify.as_ref().ok_or_else(|| {
        CliError::usage("config key `verify`: section required for verify-ldp".to_string())
    })?;

    let mut cells: Vec<DeviationTrial> = Vec::new();
    for cell in &verify.lower {
        let batch = verify_lower_deviation(
            &cell.model,
            cell.mu,
            &cell.t,
            &cell.v,
            verify.trials,
            config.seed,
        )
        .map_err(|e| CliError::failure(e.to_string()))?;
        cells.extend(batch);
    }
    for cell in &verify.upper {
        let batch = verify_upper_deviation(
            &cell.model,
            cell.mu,
            &cell.t,
            &cell.u,
            verify.trials,
            config.seed ^ UPPER_SEED_SALT,
        )
        .map_err(|e| CliError::failure(e.to_string()))?;
        cells.extend(batch);
    }

    fs::create_dir_all(out_dir)
        .map_err(|e| CliError::failure(format!("cannot create {}: {e}", out_dir.display())))?;
    let mut csv = String::from("model,mu,t,threshold,empirical_freq,bound,slack,pass\n");
    let mut all_pass = true;
    for cell in &cells {
        let pass = cell.passes();
        all_pass &= pass;
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            quote(&cell.model),
            fmt_f64(cell.mu),
            cell.t,
            fmt_f64(cell.threshold),
            fmt_f64(cell.empirical_freq),
            fmt_f64(cell.bound),
            fmt_f64(cell.slack()),
            pass
        ));
        println!(
            "{} {} mu={} t={} threshold={}: freq {:.6} vs bound {:.6}",
            if pass { "PASS" } else { "FAIL" },
            cell.model,
            cell.mu,
            cell.t,
            cell.threshold,
            cell.empirical_freq,
            cell.bound
        );
    }
    write_file(&out_dir.join("ldp.csv"), csv.as_bytes())?;
    if all_pass {
        Ok(())
    } else {
        Err(CliError::failure(
            "at least one deviation cell exceeded its bound".to_string(),
        ))
    }
}

pub fn show_index(samples_path: &Path, mu: f64) -> CliResult {
    if !mu.is_finite() || mu >= 1.0 {
        return Err(CliError::usage(format!("mu must be finite and < 1, got {mu}")));
    }
    let text = fs::read_to_string(samples_path).map_err(|e| {
        CliError::usage(format!("cannot read samples {}: {e}", samples_path.display()))
    })?;
    let mut dist = EmpiricalDist::new();
    let mut count = 0u64;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let value: f64 = trimmed
            .parse()
            .map_err(|e| CliError::usage(format!("line {line_no}: {e}")))?;
        dist.push(value)
            .map_err(|e| CliError::usage(format!("line {line_no}: {e}")))?;
        count += 1;
    }
    if count == 0 {
        return Err(CliError::usage("samples file holds no values".to_string()));
    }
    let solution = solve_nu_star(&dist, mu).map_err(|e| CliError::usage(e.to_string()))?;
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "n_samples": count,
        "distinct_values": dist.len(),
        "mean": dist.mean(),
        "mu": mu,
        "dinf": solution.dinf,
        "nu_star": solution.nu_star,
        "at_boundary": solution.at_boundary,
    });
    println!("{}", serde_json::to_string_pretty(&doc).expect("fixed schema"));
    Ok(())
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult {
    let mut file = fs::File::create(path)
        .map_err(|e| CliError::failure(format!("cannot write {}: {e}", path.display())))?;
    file.write_all(bytes)
        .map_err(|e| CliError::failure(format!("cannot write {}: {e}", path.display())))
}
