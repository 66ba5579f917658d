//! Oracle-versus-engine verification suite.
//!
//! Every check compares the convolution engine with brute-force rational
//! enumeration, or verifies an exact dependence property of the enumerated
//! law. A check whose enumeration would exceed the term budget is skipped,
//! not failed.

use std::collections::HashMap;
use std::fmt;

use log::info;
use num_rational::BigRational;
use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::exact::{self, ConvolutionConfig};
use crate::model::OutcomeModel;
use crate::oracle::{self, big_to_f64, JointLaw};

/// Atomwise tolerance for oracle comparisons.
pub const ORACLE_TOL: f64 = 1e-12;
/// Tolerance for the conditional-decomposition identities.
pub const IDENTITY_TOL: f64 = 1e-13;
/// Tolerance for `E[Delta(Y)] = 0`.
pub const MEAN_DELTA_TOL: f64 = 1e-14;
/// Threshold points per `(model, n)` in the covariance and `W` checks.
pub const THRESHOLD_GRID_POINTS: usize = 20;
/// Random monotone function pairs per disjoint split in the NA spot check.
pub const NA_FUNCTIONS_PER_SPLIT: usize = 50;
pub const NA_SEED: u64 = 0x5eed_0f4a;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyOptions {
    pub budget: u128,
    /// Flip the sign of the engine covariance before comparing. The suite
    /// must then fail; used to show the checks have teeth.
    pub negate_covariance: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            budget: oracle::DEFAULT_BUDGET,
            negate_covariance: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIPPED",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub status: Status,
    pub grid_size: u64,
    /// Largest discrepancy (or violation), exact when available.
    pub max_violation_exact: Option<String>,
    pub max_violation: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub budget: u128,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn failed(&self) -> Vec<&CheckResult> {
        self.checks.iter().filter(|c| c.status == Status::Fail).collect()
    }

    /// Fixed-width pass/fail table.
    pub fn table(&self) -> String {
        let mut out = format!("{:<44} {:>8} {:>10} {:>12}  {}\n", "check", "status", "grid", "max error", "detail");
        for c in &self.checks {
            out.push_str(&format!(
                "{:<44} {:>8} {:>10} {:>12.3e}  {}\n",
                c.name, c.status, c.grid_size, c.max_violation, c.detail
            ));
        }
        out
    }
}

/// Models exercised by the suite.
pub fn suite_models() -> Vec<(&'static str, OutcomeModel)> {
    vec![("classical", OutcomeModel::classical()), ("chess", OutcomeModel::chess())]
}

/// `THRESHOLD_GRID_POINTS` raw thresholds spread over `[-1/4, n - 3/4]`,
/// covering every atom gap of the score range.
pub fn threshold_grid(n: usize) -> Vec<f64> {
    let lo = -0.25;
    let hi = n as f64 - 0.75;
    let m = THRESHOLD_GRID_POINTS;
    (0..m).map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64).collect()
}

struct Suite {
    opts: VerifyOptions,
    cfg: ConvolutionConfig,
    joints: HashMap<(String, usize), Option<JointLaw>>,
    checks: Vec<CheckResult>,
}

impl Suite {
    fn joint(&mut self, name: &str, model: &OutcomeModel, n: usize) -> Option<&JointLaw> {
        let key = (name.to_string(), n);
        if !self.joints.contains_key(&key) {
            let law = match oracle::enumerate_joint(model, n, self.opts.budget) {
                Ok(j) => Some(j),
                Err(e) => {
                    info!("{name} n={n}: {e}");
                    None
                }
            };
            self.joints.insert(key.clone(), law);
        }
        self.joints[&key].as_ref()
    }

    fn skip(&mut self, name: String, model: &OutcomeModel, n: usize) {
        let required = oracle::term_count(model, n);
        self.checks.push(CheckResult {
            name,
            status: Status::Skipped,
            grid_size: 0,
            max_violation_exact: None,
            max_violation: 0.0,
            tolerance: 0.0,
            detail: format!("needs {required} terms, budget {}", self.opts.budget),
        });
    }

    fn float_check(&mut self, name: String, grid: u64, worst: f64, tol: f64, detail: String) {
        self.checks.push(CheckResult {
            name,
            status: if worst <= tol { Status::Pass } else { Status::Fail },
            grid_size: grid,
            max_violation_exact: None,
            max_violation: worst,
            tolerance: tol,
            detail,
        });
    }

    fn exact_check(&mut self, check: &oracle::DependenceCheck, name: String) {
        let rec = check.record();
        self.checks.push(CheckResult {
            name,
            status: if rec.pass { Status::Pass } else { Status::Fail },
            grid_size: rec.grid_size,
            max_violation_exact: Some(rec.max_violation_exact),
            max_violation: rec.max_violation,
            tolerance: 0.0,
            detail: format!("{} violations", check.violations),
        });
    }

    fn engine_cov(&self, model: &OutcomeModel, n: u64, raw: f64) -> crate::Result<f64> {
        let (cov, _) = exact::pair_covariance(model, n, raw, &self.cfg)?;
        Ok(if self.opts.negate_covariance { -cov } else { cov })
    }

    fn marginals(&mut self, name: &str, model: &OutcomeModel, n: usize) -> crate::Result<()> {
        let label = format!("marginal {name} n={n}");
        let Some(joint) = self.joint(name, model, n).cloned() else {
            self.skip(label, model, n);
            return Ok(());
        };
        let engine = exact::score_pmf(model, n as u64, &self.cfg)?;
        let mut worst: f64 = 0.0;
        let mut atoms = 0;
        for player in 0..n {
            let exact = oracle::marginal_exact(&joint, player);
            for (idx, p) in exact.iter().enumerate() {
                worst = worst.max((big_to_f64(p) - engine.prob_at(idx as i64)).abs());
                atoms += 1;
            }
        }
        self.float_check(label, atoms, worst, ORACLE_TOL, format!("{n} players"));
        Ok(())
    }

    fn covariance_and_w(&mut self, name: &str, model: &OutcomeModel, n: usize) -> crate::Result<()> {
        let cov_label = format!("pair covariance {name} n={n}");
        let w_label = format!("W law {name} n={n}");
        let Some(joint) = self.joint(name, model, n).cloned() else {
            self.skip(cov_label, model, n);
            self.skip(w_label, model, n);
            return Ok(());
        };
        let nf = n as f64;
        let (mut cov_err, mut w_err, mut id_err, mut delta_err) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        let grid = threshold_grid(n);
        for &raw in &grid {
            let oracle_cov = big_to_f64(&oracle::pair_covariance(&joint, raw));
            let cov = self.engine_cov(model, n as u64, raw)?;
            cov_err = cov_err.max((cov - oracle_cov).abs());

            let (_, dec) = exact::pair_covariance(model, n as u64, raw, &self.cfg)?;
            id_err = id_err.max((dec.cov_via_product() - dec.cov_via_m_delta()).abs());
            delta_err = delta_err.max(dec.mean_delta().abs());

            // Exceedance count law: mean, second factorial moment, variance.
            let w_law = oracle::exact_w_distribution(&joint, raw);
            let mean = big_to_f64(&oracle::factorial_moment(&w_law, 1));
            let fact2 = big_to_f64(&oracle::factorial_moment(&w_law, 2));
            let var = fact2 + mean - mean * mean;
            let p = dec.p();
            let engine_mean = nf * p;
            let engine_fact2 = nf * (nf - 1.0) * (cov + p * p);
            let engine_var = nf * p * (1.0 - p) + nf * (nf - 1.0) * cov;
            let err = (mean - engine_mean)
                .abs()
                .max((fact2 - engine_fact2).abs())
                .max((var - engine_var).abs());
            w_err = w_err.max(err);
        }
        let g = grid.len() as u64;
        self.float_check(cov_label, g, cov_err, ORACLE_TOL, "engine vs enumeration".into());
        self.float_check(w_label, g, w_err, ORACLE_TOL, "mean, factorial moment, variance".into());
        self.float_check(
            format!("covariance identity {name} n={n}"),
            g,
            id_err,
            IDENTITY_TOL,
            "E[AB]-E[A]^2 vs Var(M)-E[D^2]".into(),
        );
        self.float_check(format!("mean Delta {name} n={n}"), g, delta_err, MEAN_DELTA_TOL, "E[Delta(Y)] = 0".into());
        Ok(())
    }

    fn stein(&mut self, name: &str, model: &OutcomeModel, n: usize) -> crate::Result<()> {
        let label = format!("Stein bound dominates TV {name} n={n}");
        let Some(joint) = self.joint(name, model, n).cloned() else {
            self.skip(label, model, n);
            return Ok(());
        };
        let mut worst = f64::NEG_INFINITY;
        let mut checked = 0;
        for &raw in &threshold_grid(n) {
            let report = exact::exceedance_report_at_threshold(model, n as u64, raw, &self.cfg)?;
            if report.degenerate || report.p_n >= 1.0 {
                continue;
            }
            let w_law = oracle::exact_w_distribution(&joint, raw);
            let tv = oracle::tv_to_poisson(&w_law, report.lambda_n)?;
            let cov = self.engine_cov(model, n as u64, raw)?;
            let p = report.p_n;
            let stein = (1.0 - (-report.lambda_n).exp()) * (p - (n as f64 - 1.0) * cov / p);
            worst = worst.max(tv - stein);
            checked += 1;
        }
        self.float_check(label, checked, worst.max(0.0), ORACLE_TOL, format!("largest TV - bound {worst:.3e}"));
        Ok(())
    }

    fn dependence(&mut self, name: &str, model: &OutcomeModel, n: usize) {
        let Some(joint) = self.joint(name, model, n).cloned() else {
            self.skip(format!("NLOD {name} n={n}"), model, n);
            self.skip(format!("NUOD {name} n={n}"), model, n);
            return;
        };
        let (lo, hi) = oracle::check_nlod_nuod(&joint);
        self.exact_check(&lo, format!("NLOD {name} n={n}"));
        self.exact_check(&hi, format!("NUOD {name} n={n}"));
    }

    fn association(&mut self, name: &str, model: &OutcomeModel, n: usize) {
        let label = format!("NA spot check {name} n={n}");
        let Some(joint) = self.joint(name, model, n).cloned() else {
            self.skip(label, model, n);
            return;
        };
        let check = oracle::na_spot_check(&joint, NA_FUNCTIONS_PER_SPLIT, NA_SEED);
        self.exact_check(&check, label);
    }

    fn report_fields(&mut self) -> crate::Result<()> {
        let model = OutcomeModel::chess();
        let label = "exceedance report chess n=5 t=0".to_string();
        let Some(joint) = self.joint("chess", &model, 5).cloned() else {
            self.skip(label, &model, 5);
            return Ok(());
        };
        let r = exact::exceedance_report(&model, 5, 0.0, &self.cfg)?;
        let p = big_to_f64(&oracle::joint_tail(&joint, &[0], r.raw_threshold));
        let cov_exact: BigRational = oracle::pair_covariance(&joint, r.raw_threshold);
        let cov = big_to_f64(&cov_exact);
        let w_law = oracle::exact_w_distribution(&joint, r.raw_threshold);
        let mean = big_to_f64(&oracle::factorial_moment(&w_law, 1));
        let fact2 = big_to_f64(&oracle::factorial_moment(&w_law, 2));
        let var = fact2 + mean - mean * mean;
        let engine_cov = if self.opts.negate_covariance { -r.pair_cov } else { r.pair_cov };
        let engine_var = 5.0 * r.p_n * (1.0 - r.p_n) + 20.0 * engine_cov;
        let err = [
            (r.p_n - p).abs(),
            (r.lambda_n - mean).abs(),
            (engine_cov - cov).abs(),
            (engine_var - var).abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        let sign = if cov_exact.is_negative() { "negative" } else { "nonnegative" };
        self.float_check(label, 4, err, ORACLE_TOL, format!("oracle covariance {sign}"));
        Ok(())
    }
}

/// Runs every check and returns the table.
pub fn run_suite(opts: &VerifyOptions) -> crate::Result<VerifyReport> {
    let mut suite = Suite {
        opts: *opts,
        cfg: ConvolutionConfig::default(),
        joints: HashMap::new(),
        checks: Vec::new(),
    };
    for (name, model) in suite_models() {
        for n in 2..=6 {
            suite.marginals(name, &model, n)?;
        }
        for n in 4..=5 {
            suite.covariance_and_w(name, &model, n)?;
            suite.stein(name, &model, n)?;
        }
        for n in 3..=5 {
            suite.dependence(name, &model, n);
        }
        for n in 3..=4 {
            suite.association(name, &model, n);
        }
        // Drop the n = 6 enumerations before the next model.
        suite.joints.retain(|(_, n), _| *n < 6);
    }
    suite.report_fields()?;
    Ok(VerifyReport {
        budget: opts.budget,
        checks: suite.checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_has_twenty_points() {
        let g = threshold_grid(4);
        assert_eq!(g.len(), 20);
        assert_eq!(g[0], -0.25);
        assert!((g[19] - 3.25).abs() < 1e-15);
    }

    #[test]
    fn small_budget_skips_rather_than_fails() {
        let report = run_suite(&VerifyOptions {
            budget: 1000,
            negate_covariance: false,
        })
        .unwrap();
        assert!(report.all_passed(), "{}", report.table());
        assert!(report.checks.iter().any(|c| c.status == Status::Skipped && c.name == "marginal chess n=6"));
        assert!(report.checks.iter().any(|c| c.status == Status::Pass && c.name == "marginal classical n=4"));
    }

    #[test]
    fn negated_covariance_fails() {
        let report = run_suite(&VerifyOptions {
            budget: 100_000,
            negate_covariance: true,
        })
        .unwrap();
        assert!(!report.all_passed());
        assert!(report.failed().iter().any(|c| c.name.starts_with("pair covariance")));
    }
}
