//! Closed-form limits and leading-order predictions.
//!
//! Every function here returns the leading term of an asymptotic formula.
//! Error-term constants are unknown and are never estimated; callers compare
//! trends, not absolute agreement. Logarithms are natural throughout.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Smallest `n` for which `ln ln n` is defined and `b_n` is real-valued.
pub const MIN_NORMING_N: u64 = 3;
/// Smallest `n` for which the rate envelope is positive.
pub const MIN_ENVELOPE_N: u64 = 16;

/// Gumbel-type norming sequences `a_n`, `b_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormingConstants {
    pub n: u64,
    pub a_n: f64,
    pub b_n: f64,
}

impl NormingConstants {
    /// Threshold `x_n(t) = b_n + a_n t` on the standardized scale.
    pub fn x(&self, t: f64) -> f64 {
        self.b_n + self.a_n * t
    }

    /// Inverse of [`NormingConstants::x`].
    pub fn t_of(&self, x: f64) -> f64 {
        (x - self.b_n) / self.a_n
    }
}

/// Order-statistic depth and Gumbel coordinate; `j = 0` is the maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitSpec {
    pub t: f64,
    pub j: u32,
}

fn require_n(n: u64, min: u64, what: &str) -> Result<f64> {
    if n < min {
        return Err(Error::domain(format!("{what} requires n >= {min}, got {n}")));
    }
    Ok(n as f64)
}

pub fn norming(n: u64) -> Result<NormingConstants> {
    let nf = require_n(n, MIN_NORMING_N, "norming constants")?;
    let two_log = 2.0 * nf.ln();
    let root = two_log.sqrt();
    let a_n = 1.0 / root;
    let b_n = root - (nf.ln().ln() + (4.0 * PI).ln()) / (2.0 * root);
    Ok(NormingConstants { n, a_n, b_n })
}

pub fn x_n(n: u64, t: f64) -> Result<f64> {
    Ok(norming(n)?.x(t))
}

/// Limiting `P(M_{n,j} <= t) = exp(-e^{-t}) sum_{k<=j} e^{-tk}/k!`.
pub fn order_stat_limit_cdf(spec: LimitSpec) -> f64 {
    let lambda = (-spec.t).exp();
    if lambda == 0.0 {
        return 1.0;
    }
    if !lambda.is_finite() {
        return 0.0;
    }
    let total: f64 = (0..=u64::from(spec.j))
        .map(|k| poisson_pmf_unchecked(lambda, k))
        .sum();
    total.min(1.0)
}

/// `e^{-lambda} lambda^k / k!`.
pub fn poisson_pmf(lambda: f64, k: i64) -> Result<f64> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::domain(format!("Poisson mean must be finite and >= 0, got {lambda}")));
    }
    if k < 0 {
        return Err(Error::domain(format!("Poisson count must be >= 0, got {k}")));
    }
    Ok(poisson_pmf_unchecked(lambda, k as u64))
}

pub(crate) fn poisson_pmf_unchecked(lambda: f64, k: u64) -> f64 {
    if lambda == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let kf = k as f64;
    if k < 20 && lambda < 50.0 {
        let mut p = (-lambda).exp();
        for i in 1..=k {
            p *= lambda / i as f64;
        }
        return p;
    }
    (-lambda + kf * lambda.ln() - ln_gamma(kf + 1.0)).exp()
}

/// Poisson probabilities for `k = 0..=k_max`.
pub fn poisson_pmf_table(lambda: f64, k_max: usize) -> Result<Vec<f64>> {
    poisson_pmf(lambda, 0)?;
    Ok((0..=k_max as u64)
        .map(|k| poisson_pmf_unchecked(lambda, k))
        .collect())
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Two-term Mills approximation `phi(x)/x (1 - 1/x^2)` to the normal tail
/// `1 - Phi(x)`. This is an approximation, not the exact tail.
pub fn mills_tail(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain(format!("Mills approximation requires x > 0, got {x}")));
    }
    Ok(normal_pdf(x) / x * (1.0 - 1.0 / (x * x)))
}

/// Leading-order mean of the exceedance count, `e^{-t}`.
pub fn predicted_lambda(t: f64) -> f64 {
    (-t).exp()
}

/// Leading-order covariance of two exceedance indicators,
/// `-2 e^{-2t} ln n / n^3`.
pub fn predicted_pair_cov(n: u64, t: f64) -> Result<f64> {
    let nf = require_n(n, MIN_NORMING_N, "pair covariance prediction")?;
    Ok(-2.0 * (-2.0 * t).exp() * nf.ln() / (nf * nf * nf))
}

/// Total-variation rate envelope `(ln ln n)^2 / ln n`.
pub fn rate_envelope(n: u64) -> Result<f64> {
    let nf = require_n(n, MIN_ENVELOPE_N, "rate envelope")?;
    let l = nf.ln();
    let ll = l.ln();
    Ok(ll * ll / l)
}

/// Centering `sqrt(2 ln(n - 1))` of the maximal standardized score.
pub fn huber_centering(n: u64) -> Result<f64> {
    let nf = require_n(n, MIN_NORMING_N, "Huber centering")?;
    Ok((2.0 * (nf - 1.0).ln()).sqrt())
}

/// Leading term of `phi(x_n(t))`: `e^{-t} sqrt(2 ln n) / n`.
pub fn phi_xn_asymptotic(n: u64, t: f64) -> Result<f64> {
    let nf = require_n(n, MIN_NORMING_N, "phi(x_n) asymptotic")?;
    Ok((-t).exp() * (2.0 * nf.ln()).sqrt() / nf)
}
