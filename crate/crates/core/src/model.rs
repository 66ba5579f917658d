//! Match-outcome law for round-robin tournaments of equally strong players.
//!
//! Each match between `i` and `j` awards `X_ij = m/k` to `i` and `1 - m/k`
//! to `j`, where the numerator `m` is drawn from a finite symmetric law on
//! `{0, 1, ..., k}`. Symmetry about `1/2` is what makes the players equally
//! strong.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

const FLOAT_TOL: f64 = 1e-12;

/// A finite, symmetric outcome law on the lattice `{0, 1/k, ..., 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeModel {
    /// Common denominator `k` of every support point.
    pub denominator: u32,
    /// `(m, w)` pairs: the row player scores `m/k` with probability `w`.
    pub support: Vec<(u32, f64)>,
    /// Optional exact weights, aligned with `support`.
    pub weights_exact: Option<Vec<BigRational>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelMoments {
    pub mu: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelViolation {
    #[error("ZeroDenominator: denominator must be positive")]
    ZeroDenominator,
    #[error("NumeratorOutOfRange: numerator {numerator} exceeds denominator {denominator}")]
    NumeratorOutOfRange { numerator: u32, denominator: u32 },
    #[error("UnsortedSupport: numerators must be strictly increasing")]
    UnsortedSupport,
    #[error("NonpositiveWeight: weight {weight} at numerator {numerator}")]
    NonpositiveWeight { numerator: u32, weight: f64 },
    #[error("WeightsNotNormalized: weights sum to {sum}")]
    WeightsNotNormalized { sum: f64 },
    #[error("AsymmetricSupport: numerator {numerator} has no matching mirror {mirror}")]
    AsymmetricSupport { numerator: u32, mirror: u32 },
    #[error("DegenerateSupport: {size} support point(s), need at least 2")]
    DegenerateSupport { size: usize },
    #[error("ExactWeightMismatch: {0}")]
    ExactWeightMismatch(String),
}

impl ModelViolation {
    pub fn name(&self) -> &'static str {
        match self {
            ModelViolation::ZeroDenominator => "ZeroDenominator",
            ModelViolation::NumeratorOutOfRange { .. } => "NumeratorOutOfRange",
            ModelViolation::UnsortedSupport => "UnsortedSupport",
            ModelViolation::NonpositiveWeight { .. } => "NonpositiveWeight",
            ModelViolation::WeightsNotNormalized { .. } => "WeightsNotNormalized",
            ModelViolation::AsymmetricSupport { .. } => "AsymmetricSupport",
            ModelViolation::DegenerateSupport { .. } => "DegenerateSupport",
            ModelViolation::ExactWeightMismatch(_) => "ExactWeightMismatch",
        }
    }
}

/// Every violated invariant, by name. Empty means valid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationOutcome {
    pub violations: Vec<ModelViolation>,
}

impl ValidationOutcome {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.violations.iter().map(ModelViolation::name).collect()
    }

    pub fn has(&self, name: &str) -> bool {
        self.names().contains(&name)
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidModel(self.violations))
        }
    }
}

impl OutcomeModel {
    /// Builds a model from float weights and validates it.
    pub fn new(denominator: u32, support: Vec<(u32, f64)>) -> Result<Self> {
        let model = OutcomeModel {
            denominator,
            support,
            weights_exact: None,
        };
        model.validate().into_result()?;
        Ok(model)
    }

    /// Builds a model from exact rational weights; float weights are derived.
    pub fn from_exact(denominator: u32, support: Vec<(u32, BigRational)>) -> Result<Self> {
        let floats = support
            .iter()
            .map(|(m, w)| (*m, w.to_f64().unwrap_or(f64::NAN)))
            .collect();
        let model = OutcomeModel {
            denominator,
            support: floats,
            weights_exact: Some(support.into_iter().map(|(_, w)| w).collect()),
        };
        model.validate().into_result()?;
        Ok(model)
    }

    /// Win/loss tournament: `X_ij` in `{0, 1}` with probability 1/2 each.
    pub fn classical() -> Self {
        Self::binomial(1)
    }

    /// Chess tournament with `P(0) = P(1) = 1/4`, `P(1/2) = 1/2`.
    pub fn chess() -> Self {
        Self::binomial(2)
    }

    /// Chess-style law with `P(0) = P(1) = p` and draw probability `1 - 2p`.
    pub fn chess_with_decisive(p: f64) -> Result<Self> {
        Self::new(2, vec![(0, p), (1, 1.0 - 2.0 * p), (2, p)])
    }

    /// `m ~ Bin(k, 1/2)` on `D_k`: the sum of `k` fair half-games.
    pub fn binomial(k: u32) -> Self {
        assert!((1..=60).contains(&k), "binomial model needs 1 <= k <= 60");
        let total = BigInt::one() << k as usize;
        let mut coef = BigInt::one();
        let mut support = Vec::with_capacity(k as usize + 1);
        for m in 0..=k {
            support.push((m, BigRational::new(coef.clone(), total.clone())));
            coef = coef * BigInt::from(k - m) / BigInt::from(m + 1);
        }
        Self::from_exact(k, support).expect("binomial law is a valid model")
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn validate(&self) -> ValidationOutcome {
        let mut violations = Vec::new();
        let k = self.denominator;
        if k == 0 {
            violations.push(ModelViolation::ZeroDenominator);
        }
        if self.support.len() < 2 {
            violations.push(ModelViolation::DegenerateSupport {
                size: self.support.len(),
            });
        }
        for &(m, _) in &self.support {
            if k > 0 && m > k {
                violations.push(ModelViolation::NumeratorOutOfRange {
                    numerator: m,
                    denominator: k,
                });
            }
        }
        if self.support.windows(2).any(|w| w[0].0 >= w[1].0) {
            violations.push(ModelViolation::UnsortedSupport);
        }
        for &(m, w) in &self.support {
            if !(w > 0.0) {
                violations.push(ModelViolation::NonpositiveWeight {
                    numerator: m,
                    weight: w,
                });
            }
        }

        match &self.weights_exact {
            Some(exact) => self.validate_exact(exact, &mut violations),
            None => {
                let sum: f64 = self.support.iter().map(|&(_, w)| w).sum();
                if !((sum - 1.0).abs() <= FLOAT_TOL) {
                    violations.push(ModelViolation::WeightsNotNormalized { sum });
                }
                if k > 0 {
                    for &(m, w) in &self.support {
                        if m > k {
                            continue;
                        }
                        let mirror = k - m;
                        let ok = self
                            .weight_of(mirror)
                            .is_some_and(|wm| (wm - w).abs() <= FLOAT_TOL);
                        if !ok {
                            violations.push(ModelViolation::AsymmetricSupport {
                                numerator: m,
                                mirror,
                            });
                        }
                    }
                }
            }
        }
        ValidationOutcome { violations }
    }

    fn validate_exact(&self, exact: &[BigRational], violations: &mut Vec<ModelViolation>) {
        if exact.len() != self.support.len() {
            violations.push(ModelViolation::ExactWeightMismatch(format!(
                "{} exact weights for {} support points",
                exact.len(),
                self.support.len()
            )));
            return;
        }
        let k = self.denominator;
        for (w, &(m, wf)) in exact.iter().zip(&self.support) {
            if !w.is_positive() {
                violations.push(ModelViolation::NonpositiveWeight {
                    numerator: m,
                    weight: wf,
                });
            }
            let wx = w.to_f64().unwrap_or(f64::NAN);
            if !((wx - wf).abs() <= FLOAT_TOL) {
                violations.push(ModelViolation::ExactWeightMismatch(format!(
                    "numerator {m}: float weight {wf} vs exact {w}"
                )));
            }
        }
        let sum: BigRational = exact.iter().cloned().sum();
        if !sum.is_one() {
            violations.push(ModelViolation::WeightsNotNormalized {
                sum: sum.to_f64().unwrap_or(f64::NAN),
            });
        }
        if k > 0 {
            for (i, &(m, _)) in self.support.iter().enumerate() {
                if m > k {
                    continue;
                }
                let mirror = k - m;
                let ok = self
                    .support
                    .iter()
                    .position(|&(x, _)| x == mirror)
                    .is_some_and(|j| exact[j] == exact[i]);
                if !ok {
                    violations.push(ModelViolation::AsymmetricSupport {
                        numerator: m,
                        mirror,
                    });
                }
            }
        }
    }

    pub fn weight_of(&self, numerator: u32) -> Option<f64> {
        self.support
            .iter()
            .find(|&&(m, _)| m == numerator)
            .map(|&(_, w)| w)
    }

    /// Exact weights when present.
    pub fn exact_weights(&self) -> Option<&[BigRational]> {
        self.weights_exact.as_deref()
    }

    /// Mean and standard deviation of `X_ij` in score units.
    pub fn moments(&self) -> Result<ModelMoments> {
        self.validate().into_result()?;
        let k = f64::from(self.denominator);
        // Centered second moment.
        let var: f64 = self
            .support
            .iter()
            .map(|&(m, w)| {
                let d = (2.0 * f64::from(m) - k) / (2.0 * k);
                w * d * d
            })
            .sum();
        Ok(ModelMoments {
            mu: 0.5,
            sigma: var.sqrt(),
        })
    }

    /// Exact variance of `X_ij` when rational weights are available.
    pub fn exact_variance(&self) -> Option<BigRational> {
        let exact = self.weights_exact.as_ref()?;
        let two_k = BigInt::from(2 * self.denominator);
        let k = BigInt::from(self.denominator);
        let mut var = BigRational::zero();
        for (w, &(m, _)) in exact.iter().zip(&self.support) {
            let d = BigRational::new(BigInt::from(2 * m) - &k, two_k.clone());
            var += w * &d * &d;
        }
        Some(var)
    }

    /// Same law on the finer lattice `D_{c k}`.
    pub fn rescaled(&self, factor: u32) -> Self {
        OutcomeModel {
            denominator: self.denominator * factor,
            support: self.support.iter().map(|&(m, w)| (m * factor, w)).collect(),
            weights_exact: self.weights_exact.clone(),
        }
    }

    /// Relabels `a -> 1 - a`. A valid model is mapped onto itself.
    pub fn mirrored(&self) -> Self {
        let k = self.denominator;
        let mut support: Vec<(u32, f64)> = self.support.iter().map(|&(m, w)| (k - m, w)).collect();
        let mut exact = self.weights_exact.clone();
        support.reverse();
        if let Some(e) = exact.as_mut() {
            e.reverse();
        }
        OutcomeModel {
            denominator: k,
            support,
            weights_exact: exact,
        }
    }

    /// `Some(k)` when the law is exactly `Bin(k, 1/2)` on `D_k`, i.e. a match
    /// is the sum of `k` independent fair half-games.
    pub fn fair_bit_layers(&self) -> Option<u32> {
        let k = self.denominator;
        if k == 0 || k > 52 || self.support.len() != k as usize + 1 {
            return None;
        }
        let scale = (k as f64).exp2();
        let mut coef = 1.0f64;
        for (m, &(num, w)) in self.support.iter().enumerate() {
            if num != m as u32 || w != coef / scale {
                return None;
            }
            if let Some(exact) = &self.weights_exact {
                let target = BigRational::new(
                    BigInt::from(coef as u64),
                    BigInt::one() << k as usize,
                );
                if exact[m] != target {
                    return None;
                }
            }
            coef = coef * f64::from(k - m as u32) / f64::from(m as u32 + 1);
        }
        Some(k)
    }

    /// Short identifier used in output files.
    pub fn id(&self) -> String {
        match self.fair_bit_layers() {
            Some(1) => "classical".to_string(),
            Some(2) => "chess".to_string(),
            Some(k) => format!("binomial{k}"),
            None => {
                let body = self
                    .support
                    .iter()
                    .map(|(m, w)| format!("{m}:{w}"))
                    .collect::<Vec<_>>()
                    .join(",");
                format!("k{}[{}]", self.denominator, body)
            }
        }
    }
}

impl fmt::Display for OutcomeModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}
