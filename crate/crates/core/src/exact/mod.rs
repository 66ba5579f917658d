//! Exact finite-`n` computation of the exceedance quantities.
//!
//! The marginal law of a score is the `(n - 1)`-fold convolution power of the
//! match law. The covariance of two exceedance indicators is obtained by
//! conditioning on the shared match `(1, 2)`: given its outcome, the two
//! remaining partial scores (sums over `n - 2` disjoint matches each) are
//! independent and identically distributed, so one tail table of that partial
//! sum answers every joint probability.

mod convolve;
mod lattice;

pub use convolve::{convolve, convolve_direct, convolve_fft, convolve_power, ConvolutionConfig};
pub use lattice::{LatticePmf, TailTable, ThresholdPosition, ATOM_EPSILON};

use serde::{Deserialize, Serialize};

use crate::asymptotics::{self, NormingConstants};
use crate::error::{Error, Result};
use crate::model::OutcomeModel;

/// Law of a single player's score `s_i(n)` in score units.
pub fn score_pmf(model: &OutcomeModel, n: u64, cfg: &ConvolutionConfig) -> Result<LatticePmf> {
    if n < 2 {
        return Err(Error::domain(format!("score law requires n >= 2, got {n}")));
    }
    convolve_power(&LatticePmf::from_model(model)?, n - 1, cfg)
}

/// Raw-score cutoff `(n-1) mu + sqrt(n-1) sigma x_n(t)`, so that
/// `{s* > x_n(t)} = {s > raw_threshold}`.
pub fn raw_threshold(model: &OutcomeModel, n: u64, t: f64) -> Result<f64> {
    let norming = asymptotics::norming(n)?;
    raw_threshold_with(model, &norming, t)
}

fn raw_threshold_with(model: &OutcomeModel, norming: &NormingConstants, t: f64) -> Result<f64> {
    let m = model.moments()?;
    let nm1 = (norming.n - 1) as f64;
    Ok(nm1 * m.mu + nm1.sqrt() * m.sigma * norming.x(t))
}

/// The `t` whose raw threshold is `raw`.
pub fn t_for_raw_threshold(model: &OutcomeModel, n: u64, raw: f64) -> Result<f64> {
    let norming = asymptotics::norming(n)?;
    let m = model.moments()?;
    let nm1 = (n - 1) as f64;
    Ok(norming.t_of((raw - nm1 * m.mu) / (nm1.sqrt() * m.sigma)))
}

/// Standardized score `s*` of a raw score.
pub fn standardize(model: &OutcomeModel, n: u64, raw: f64) -> Result<f64> {
    let m = model.moments()?;
    let nm1 = (n - 1) as f64;
    Ok((raw - nm1 * m.mu) / (nm1.sqrt() * m.sigma))
}

/// `P(X > u)` with strict inequality.
pub fn tail_prob(pmf: &LatticePmf, u: f64) -> f64 {
    pmf.tail_prob(u)
}

/// The conditional structure behind the indicator covariance.
///
/// For each outcome `y` of the standardized shared match,
/// `A(y) = P(player 1 exceeds | y)` and `B(y) = P(player 2 exceeds | y)`.
#[derive(Debug, Clone)]
pub struct PairDecomposition {
    pub n: u64,
    /// `sqrt((n-1)/(n-2))`, the rescaling between the full and partial sums.
    pub alpha_n: f64,
    /// Law of the partial score over the `n - 2` matches not involving the
    /// other player.
    pub partial: LatticePmf,
    /// Where the raw threshold falls on the lattice.
    pub threshold: ThresholdPosition,
    pub y_values: Vec<f64>,
    pub weights: Vec<f64>,
    pub a_values: Vec<f64>,
    pub b_values: Vec<f64>,
    pub m_values: Vec<f64>,
    pub delta_values: Vec<f64>,
}

impl PairDecomposition {
    /// Marginal exceedance probability `E[A(Y)]`.
    pub fn p(&self) -> f64 {
        self.expect(|i| self.a_values[i])
    }

    /// Joint exceedance probability `E[A(Y) B(Y)]`.
    pub fn joint(&self) -> f64 {
        self.expect(|i| self.a_values[i] * self.b_values[i])
    }

    pub fn mean_delta(&self) -> f64 {
        self.expect(|i| self.delta_values[i])
    }

    /// `E[A B] - E[A]^2`.
    pub fn cov_via_product(&self) -> f64 {
        let p = self.p();
        self.joint() - p * p
    }

    /// `Var(M(Y)) - E[Delta(Y)^2]`.
    pub fn cov_via_m_delta(&self) -> f64 {
        let mean_m = self.expect(|i| self.m_values[i]);
        let var_m = self.expect(|i| (self.m_values[i] - mean_m).powi(2));
        let d2 = self.expect(|i| self.delta_values[i].powi(2));
        var_m - d2
    }

    fn expect(&self, f: impl Fn(usize) -> f64) -> f64 {
        self.weights.iter().enumerate().map(|(i, w)| w * f(i)).sum()
    }
}

/// `Cov(I_1, I_2)` for the indicators `{s_i > threshold_raw}`, together with
/// its conditional decomposition.
pub fn pair_covariance(
    model: &OutcomeModel,
    n: u64,
    threshold_raw: f64,
    cfg: &ConvolutionConfig,
) -> Result<(f64, PairDecomposition)> {
    if n < 4 {
        return Err(Error::domain(format!("pair covariance requires n >= 4, got {n}")));
    }
    let partial = convolve_power(&LatticePmf::from_model(model)?, n - 2, cfg)?;
    let dec = decompose(model, n, threshold_raw, partial)?;
    Ok((dec.cov_via_product(), dec))
}

fn decompose(
    model: &OutcomeModel,
    n: u64,
    threshold_raw: f64,
    partial: LatticePmf,
) -> Result<PairDecomposition> {
    let moments = model.moments()?;
    let k = model.denominator;
    let threshold = ThresholdPosition::locate(threshold_raw, k);
    let tails = partial.tail_table();

    let len = model.len();
    let mut dec = PairDecomposition {
        n,
        alpha_n: ((n - 1) as f64 / (n - 2) as f64).sqrt(),
        partial,
        threshold,
        y_values: Vec::with_capacity(len),
        weights: Vec::with_capacity(len),
        a_values: Vec::with_capacity(len),
        b_values: Vec::with_capacity(len),
        m_values: Vec::with_capacity(len),
        delta_values: Vec::with_capacity(len),
    };
    for &(m, w) in &model.support {
        // Player 1 banks m/k from the shared match, player 2 banks (k-m)/k.
        let a = tails.above(threshold.shifted_down(i64::from(m)).cut);
        let b = tails.above(threshold.shifted_down(i64::from(k - m)).cut);
        dec.y_values
            .push((f64::from(m) / f64::from(k) - moments.mu) / moments.sigma);
        dec.weights.push(w);
        dec.a_values.push(a);
        dec.b_values.push(b);
        dec.m_values.push(0.5 * (a + b));
        dec.delta_values.push(0.5 * (a - b));
    }
    Ok(dec)
}

/// Exact exceedance quantities and Poisson-approximation bounds for one
/// `(model, n, t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExceedanceReport {
    pub model_id: String,
    pub n: u64,
    pub t: f64,
    pub x_n: f64,
    pub raw_threshold: f64,
    pub p_n: f64,
    pub lambda_n: f64,
    pub pair_cov: f64,
    pub var_w: f64,
    pub stein_bound: f64,
    pub mean_mismatch_bound: f64,
    pub combined_bound: f64,
    pub threshold_near_atom: bool,
    /// `P(s >= raw_threshold)`, emitted only when the threshold sits on an atom.
    pub p_n_inclusive: Option<f64>,
    /// Threshold above the largest attainable score; all quantities are zero.
    pub degenerate: bool,
    pub cleanup_mass: f64,
}

impl ExceedanceReport {
    pub const CSV_HEADER: [&'static str; 14] = [
        "model_id",
        "n",
        "t",
        "x_n",
        "raw_threshold",
        "p_n",
        "lambda_n",
        "pair_cov",
        "var_W",
        "stein_bound",
        "mean_mismatch_bound",
        "combined_bound",
        "threshold_near_atom",
        "cleanup_mass",
    ];

    pub fn csv_record(&self) -> Vec<String> {
        vec![
            self.model_id.clone(),
            self.n.to_string(),
            fmt_f64(self.t),
            fmt_f64(self.x_n),
            fmt_f64(self.raw_threshold),
            fmt_f64(self.p_n),
            fmt_f64(self.lambda_n),
            fmt_f64(self.pair_cov),
            fmt_f64(self.var_w),
            fmt_f64(self.stein_bound),
            fmt_f64(self.mean_mismatch_bound),
            fmt_f64(self.combined_bound),
            self.threshold_near_atom.to_string(),
            fmt_f64(self.cleanup_mass),
        ]
    }
}

/// Round-trippable float formatting for output files.
pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:e}")
}

pub fn exceedance_report(
    model: &OutcomeModel,
    n: u64,
    t: f64,
    cfg: &ConvolutionConfig,
) -> Result<ExceedanceReport> {
    let norming = asymptotics::norming(n)?;
    let raw = raw_threshold_with(model, &norming, t)?;
    report_at(model, &norming, t, raw, cfg)
}

/// As [`exceedance_report`], for an arbitrary raw threshold. `t` is derived.
pub fn exceedance_report_at_threshold(
    model: &OutcomeModel,
    n: u64,
    raw: f64,
    cfg: &ConvolutionConfig,
) -> Result<ExceedanceReport> {
    let norming = asymptotics::norming(n)?;
    let t = t_for_raw_threshold(model, n, raw)?;
    report_at(model, &norming, t, raw, cfg)
}

fn report_at(
    model: &OutcomeModel,
    norming: &NormingConstants,
    t: f64,
    raw: f64,
    cfg: &ConvolutionConfig,
) -> Result<ExceedanceReport> {
    let n = norming.n;
    if n < 4 {
        return Err(Error::domain(format!("exceedance report requires n >= 4, got {n}")));
    }
    let base = LatticePmf::from_model(model)?;
    let partial = convolve_power(&base, n - 2, cfg)?;
    let score = convolve(&partial, &base, cfg)?;
    let cleanup_mass = score.cleanup_mass();

    let pos = ThresholdPosition::locate(raw, model.denominator);
    let p_n = score.tail_at(pos);
    let p_n_inclusive = pos.near_atom.then(|| score.tail_prob_inclusive(raw));
    let nf = n as f64;
    let limit_mean = asymptotics::predicted_lambda(t);

    let mut report = ExceedanceReport {
        model_id: model.id(),
        n,
        t,
        x_n: norming.x(t),
        raw_threshold: raw,
        p_n,
        lambda_n: nf * p_n,
        pair_cov: 0.0,
        var_w: 0.0,
        stein_bound: 0.0,
        mean_mismatch_bound: limit_mean,
        combined_bound: limit_mean,
        threshold_near_atom: pos.near_atom,
        p_n_inclusive,
        degenerate: p_n == 0.0,
        cleanup_mass,
    };
    if report.degenerate {
        return Ok(report);
    }

    let dec = decompose(model, n, raw, partial)?;
    let cov = dec.cov_via_product();
    let lambda = report.lambda_n;
    report.pair_cov = cov;
    report.var_w = (nf * p_n * (1.0 - p_n) + nf * (nf - 1.0) * cov).max(0.0);
    // 1 - Var/lambda in the form p - (n-1) cov / p.
    let dispersion_gap = p_n - (nf - 1.0) * cov / p_n;
    report.stein_bound = ((1.0 - (-lambda).exp()) * dispersion_gap).max(0.0);
    report.mean_mismatch_bound = (lambda - limit_mean).abs();
    report.combined_bound = report.stein_bound + report.mean_mismatch_bound;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg() -> ConvolutionConfig {
        ConvolutionConfig::default()
    }

    #[test]
    fn score_pmf_small_cases() {
        let c = score_pmf(&OutcomeModel::classical(), 3, &cfg()).unwrap();
        assert_eq!(c.probs(), &[0.25, 0.5, 0.25]);
        let ch = score_pmf(&OutcomeModel::chess(), 3, &cfg()).unwrap();
        assert_eq!(ch.probs(), &[1.0 / 16.0, 0.25, 0.375, 0.25, 1.0 / 16.0]);
        assert!(score_pmf(&OutcomeModel::chess(), 1, &cfg()).is_err());
    }

    #[test]
    fn score_pmf_moments() {
        let models = [
            OutcomeModel::classical(),
            OutcomeModel::chess(),
            OutcomeModel::chess_with_decisive(0.1).unwrap(),
            OutcomeModel::new(4, vec![(0, 0.1), (1, 0.2), (2, 0.4), (3, 0.2), (4, 0.1)]).unwrap(),
        ];
        for model in &models {
            let sigma = model.moments().unwrap().sigma;
            for n in [2u64, 3, 10, 101, 3000] {
                let p = score_pmf(model, n, &cfg()).unwrap();
                let nm1 = (n - 1) as f64;
                assert!((p.mean() - nm1 / 2.0).abs() < 1e-10 * nm1.max(1.0));
                assert_relative_eq!(p.variance(), nm1 * sigma * sigma, max_relative = 1e-9);
                assert!(p.max_index() <= (n as i64 - 1) * i64::from(model.denominator));
            }
        }
    }

    #[test]
    fn raw_threshold_values() {
        assert_relative_eq!(
            raw_threshold(&OutcomeModel::classical(), 100, 0.0).unwrap(),
            61.271_968_959_675_94,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            raw_threshold(&OutcomeModel::chess(), 100, 0.0).unwrap(),
            57.824_039_079_304_41,
            max_relative = 1e-14
        );
        let mut prev = f64::NEG_INFINITY;
        for i in -20..20 {
            let r = raw_threshold(&OutcomeModel::chess(), 50, f64::from(i) * 0.2).unwrap();
            assert!(r > prev);
            prev = r;
        }
        assert!(raw_threshold(&OutcomeModel::chess(), 2, 0.0).is_err());
    }

    #[test]
    fn classical_n4_threshold_two_and_a_half() {
        let model = OutcomeModel::classical();
        let t = t_for_raw_threshold(&model, 4, 2.5).unwrap();
        assert_relative_eq!(t, 0.578_943_046_701_848_7, max_relative = 1e-12);
        let r = exceedance_report(&model, 4, t, &cfg()).unwrap();
        assert_relative_eq!(r.raw_threshold, 2.5, max_relative = 1e-14);
        assert_eq!(r.p_n, 0.125);
        assert_eq!(r.lambda_n, 0.5);
        // Two players cannot both win all three games.
        assert_eq!(r.pair_cov, -1.0 / 64.0);
        assert!(!r.threshold_near_atom);
    }

    #[test]
    fn pair_covariance_requires_four_players() {
        assert!(pair_covariance(&OutcomeModel::classical(), 3, 1.5, &cfg()).is_err());
        let (cov, dec) = pair_covariance(&OutcomeModel::classical(), 4, 2.5, &cfg()).unwrap();
        assert_eq!(cov, -0.015625);
        assert_eq!(dec.p(), 0.125);
    }

    #[test]
    fn decomposition_identities() {
        for model in [OutcomeModel::classical(), OutcomeModel::chess(), OutcomeModel::chess_with_decisive(0.15).unwrap()] {
            for n in [4u64, 7, 40, 500] {
                for t in [-1.5, 0.0, 0.8] {
                    let raw = raw_threshold(&model, n, t).unwrap();
                    let (cov, dec) = pair_covariance(&model, n, raw, &cfg()).unwrap();
                    assert!(dec.mean_delta().abs() < 1e-14);
                    assert!((dec.cov_via_m_delta() - cov).abs() < 1e-13);
                    assert!(cov <= 1e-15);
                    for i in 0..dec.y_values.len() {
                        assert!((0.0..=1.0).contains(&dec.a_values[i]));
                        assert!((0.0..=1.0).contains(&dec.b_values[i]));
                        if dec.y_values[i] >= 0.0 {
                            assert!(dec.a_values[i] >= dec.b_values[i]);
                        }
                    }
                    let p = score_pmf(&model, n, &cfg()).unwrap().tail_prob(raw);
                    assert!((dec.p() - p).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn report_invariants() {
        let model = OutcomeModel::chess();
        for n in [5u64, 30, 300, 3000] {
            let mut prev_p = 1.0;
            for i in -8..=8 {
                let t = f64::from(i) * 0.25;
                let r = exceedance_report(&model, n, t, &cfg()).unwrap();
                assert!(r.p_n <= prev_p);
                prev_p = r.p_n;
                assert_eq!(r.lambda_n, n as f64 * r.p_n);
                if r.p_n > 0.0 && r.p_n < 1.0 {
                    assert!(r.var_w < r.lambda_n);
                    let direct = (1.0 - (-r.lambda_n).exp()) * (1.0 - r.var_w / r.lambda_n);
                    assert!((direct - r.stein_bound).abs() < 1e-12);
                }
                assert!(r.stein_bound >= 0.0 && r.var_w >= 0.0);
                assert!(r.combined_bound >= r.stein_bound);
            }
        }
    }

    #[test]
    fn degenerate_threshold_is_flagged() {
        let r = exceedance_report(&OutcomeModel::classical(), 5, 40.0, &cfg()).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.lambda_n, 0.0);
        assert_eq!(r.stein_bound, 0.0);
        assert_eq!(r.pair_cov, 0.0);
    }

    #[test]
    fn near_atom_threshold_emits_both_tails() {
        let model = OutcomeModel::classical();
        let r = exceedance_report_at_threshold(&model, 4, 2.0, &cfg()).unwrap();
        assert!(r.threshold_near_atom);
        assert_eq!(r.p_n, 0.125);
        assert_eq!(r.p_n_inclusive, Some(0.5));
    }
}
