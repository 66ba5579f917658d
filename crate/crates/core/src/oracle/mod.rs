//! Brute-force rational enumeration of whole tournaments at tiny `n`.
//!
//! Every one of the `|D|^(n(n-1)/2)` outcome vectors is visited with a
//! mixed-radix odometer over the matches. With `D` the least common
//! denominator of the exact match weights, each outcome has probability
//! `(product of integer weights) / D^E` for `E = n(n-1)/2` matches, so the
//! whole law is kept as integer numerators over one shared denominator.

mod dependence;

use std::collections::{BTreeMap, HashMap};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use dependence::{check_nlod_nuod, na_spot_check, DependenceCheck, DependenceReport};

use crate::error::{Error, Result};
use crate::exact::{LatticePmf, ThresholdPosition};
use crate::model::OutcomeModel;

/// Default cap on the number of enumerated weighted tournaments.
pub const DEFAULT_BUDGET: u128 = 100_000_000;

/// Exact law of the score vector `(s_1, ..., s_n)` on the `1/k` lattice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointLaw {
    pub n: usize,
    pub k: u32,
    /// Common denominator of every probability.
    pub denominator: BigUint,
    /// `k`-scaled score vector -> probability numerator.
    pub probs: BTreeMap<Vec<u32>, BigUint>,
}

/// Number of weighted terms enumerated for `model` at `n`.
pub fn term_count(model: &OutcomeModel, n: usize) -> u128 {
    let matches = (n * n.saturating_sub(1) / 2) as u32;
    (model.len() as u128).checked_pow(matches).unwrap_or(u128::MAX)
}

/// Integer weights over their least common denominator.
fn integer_weights(model: &OutcomeModel) -> Result<(Vec<u64>, u64)> {
    let exact = model
        .exact_weights()
        .ok_or_else(|| Error::domain("the oracle needs exact rational weights"))?;
    let mut lcm = BigInt::one();
    for w in exact {
        lcm = lcm.lcm(w.denom());
    }
    let to_u64 = |x: &BigInt| {
        x.to_u64()
            .ok_or_else(|| Error::domain("exact weight denominators are too large for enumeration"))
    };
    let weights = exact
        .iter()
        .map(|w| to_u64(&(w.numer() * (&lcm / w.denom()))))
        .collect::<Result<Vec<_>>>()?;
    Ok((weights, to_u64(&lcm)?))
}

/// Exact joint law of all `n` scores by full enumeration.
pub fn enumerate_joint(model: &OutcomeModel, n: usize, budget: u128) -> Result<JointLaw> {
    model.validate().into_result()?;
    if n < 2 {
        return Err(Error::domain(format!("enumeration needs n >= 2, got {n}")));
    }
    let required = term_count(model, n);
    if required > budget {
        return Err(Error::BudgetExceeded { required, budget });
    }
    let (weights, d) = integer_weights(model)?;
    let matches: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let e = matches.len() as u32;
    let denominator = BigUint::from(d).pow(e);
    let numerators: Vec<u32> = model.support.iter().map(|s| s.0).collect();
    let k = model.denominator;

    let fits = BigUint::from(d).pow(e) < (BigUint::one() << 120u32);
    let parts: Vec<HashMap<Vec<u32>, BigUint>> = (0..weights.len())
        .into_par_iter()
        .map(|first| {
            if fits {
                enumerate_branch::<u128>(n, k, &matches, &numerators, &weights, first)
            } else {
                enumerate_branch::<BigUint>(n, k, &matches, &numerators, &weights, first)
            }
        })
        .collect();

    let mut probs = BTreeMap::new();
    for part in parts {
        for (s, p) in part {
            *probs.entry(s).or_insert_with(BigUint::zero) += p;
        }
    }
    Ok(JointLaw {
        n,
        k,
        denominator,
        probs,
    })
}

trait Weight: Clone + Zero + One + for<'a> std::ops::AddAssign<&'a Self> {
    fn times(&self, w: u64) -> Self;
    fn into_big(self) -> BigUint;
}

impl Weight for u128 {
    fn times(&self, w: u64) -> Self {
        self * u128::from(w)
    }
    fn into_big(self) -> BigUint {
        BigUint::from(self)
    }
}

impl Weight for BigUint {
    fn times(&self, w: u64) -> Self {
        self * w
    }
    fn into_big(self) -> BigUint {
        self
    }
}

/// Enumerates every tournament whose first match takes outcome `first`.
fn enumerate_branch<W: Weight>(
    n: usize,
    k: u32,
    matches: &[(usize, usize)],
    numerators: &[u32],
    weights: &[u64],
    first: usize,
) -> HashMap<Vec<u32>, BigUint> {
    let e = matches.len();
    let radix = numerators.len();
    let mut digits = vec![0usize; e];
    digits[0] = first;
    let mut scores = vec![0u32; n];
    for (idx, &(i, j)) in matches.iter().enumerate() {
        let m = numerators[digits[idx]];
        scores[i] += m;
        scores[j] += k - m;
    }
    // prefix[p] = product of the weights of matches 0..p.
    let mut prefix = vec![W::one(); e + 1];
    for p in 0..e {
        prefix[p + 1] = prefix[p].times(weights[digits[p]]);
    }

    let mut acc: HashMap<Vec<u32>, W> = HashMap::new();
    loop {
        match acc.get_mut(scores.as_slice()) {
            Some(v) => *v += &prefix[e],
            None => {
                acc.insert(scores.clone(), prefix[e].clone());
            }
        }
        // Advance the odometer over matches 1..e, last digit fastest.
        let mut p = e;
        loop {
            if p <= 1 {
                return acc.into_iter().map(|(s, w)| (s, w.into_big())).collect();
            }
            p -= 1;
            let (i, j) = matches[p];
            let old = numerators[digits[p]];
            if digits[p] + 1 < radix {
                digits[p] += 1;
                let new = numerators[digits[p]];
                scores[i] = scores[i] + new - old;
                scores[j] = scores[j] + old - new;
                break;
            }
            digits[p] = 0;
            let new = numerators[0];
            scores[i] = scores[i] + new - old;
            scores[j] = scores[j] + old - new;
        }
        for q in p..e {
            prefix[q + 1] = prefix[q].times(weights[digits[q]]);
        }
    }
}

impl JointLaw {
    /// Total probability numerator; equals `denominator` for a valid law.
    pub fn total(&self) -> BigUint {
        self.probs.values().sum()
    }

    /// Largest lattice score of a single coordinate.
    pub fn max_score(&self) -> u32 {
        self.probs.keys().flat_map(|s| s.iter().copied()).max().unwrap_or(0)
    }

    pub fn probability(&self, scores: &[u32]) -> BigRational {
        let num = self.probs.get(scores).cloned().unwrap_or_default();
        ratio(num, self.denominator.clone())
    }

    /// Law of the score multiset, keyed by scores sorted in decreasing order.
    pub fn sorted_law(&self) -> BTreeMap<Vec<u32>, BigUint> {
        let mut out = BTreeMap::new();
        for (s, p) in &self.probs {
            let mut key = s.clone();
            key.sort_unstable_by(|a, b| b.cmp(a));
            *out.entry(key).or_insert_with(BigUint::zero) += p;
        }
        out
    }

    /// Exact marginal numerators of one player, indexed by lattice score.
    pub fn marginal_numerators(&self, player: usize) -> Vec<BigUint> {
        let mut out = vec![BigUint::zero(); self.max_score() as usize + 1];
        for (s, p) in &self.probs {
            out[s[player] as usize] += p;
        }
        out
    }

    /// Law of a product of independent coordinates, each given by integer
    /// numerators over `denominator`. Score vectors need not conserve the
    /// total; this exists to exercise the dependence checks.
    pub fn independent(k: u32, marginals: &[Vec<BigUint>], denominator: &BigUint) -> Self {
        let mut probs = BTreeMap::new();
        probs.insert(Vec::new(), BigUint::one());
        for m in marginals {
            let mut next = BTreeMap::new();
            for (s, p) in &probs {
                for (v, q) in m.iter().enumerate() {
                    if q.is_zero() {
                        continue;
                    }
                    let mut key: Vec<u32> = s.clone();
                    key.push(v as u32);
                    next.insert(key, p * q);
                }
            }
            probs = next;
        }
        JointLaw {
            n: marginals.len(),
            k,
            denominator: denominator.pow(marginals.len() as u32),
            probs,
        }
    }
}

fn ratio(num: BigUint, den: BigUint) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub(crate) fn big_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Marginal law of `player` as a float lattice pmf.
pub fn marginal_from_joint(joint: &JointLaw, player: usize) -> Result<LatticePmf> {
    if player >= joint.n {
        return Err(Error::domain(format!("player {player} out of range for n = {}", joint.n)));
    }
    let probs = marginal_exact(joint, player)
        .iter()
        .map(big_to_f64)
        .collect();
    LatticePmf::new(joint.k, 0, probs)
}

/// Exact marginal probabilities of `player`, indexed by lattice score.
pub fn marginal_exact(joint: &JointLaw, player: usize) -> Vec<BigRational> {
    joint
        .marginal_numerators(player)
        .into_iter()
        .map(|p| ratio(p, joint.denominator.clone()))
        .collect()
}

fn cut_of(joint: &JointLaw, raw_threshold: f64) -> i64 {
    ThresholdPosition::locate(raw_threshold, joint.k).cut
}

/// Exact law of `W = #{i : s_i > raw_threshold}` over `0..=n`.
pub fn exact_w_distribution(joint: &JointLaw, raw_threshold: f64) -> Vec<BigRational> {
    let cut = cut_of(joint, raw_threshold);
    let mut nums = vec![BigUint::zero(); joint.n + 1];
    for (s, p) in &joint.probs {
        let w = s.iter().filter(|&&x| i64::from(x) > cut).count();
        nums[w] += p;
    }
    nums.into_iter()
        .map(|p| ratio(p, joint.denominator.clone()))
        .collect()
}

/// `E[W (W-1) ... (W-r+1)]` of a law on `0..=n`.
pub fn factorial_moment(w_law: &[BigRational], r: u32) -> BigRational {
    let mut total = BigRational::zero();
    for (w, p) in w_law.iter().enumerate() {
        let mut falling = BigInt::one();
        for i in 0..r {
            falling *= BigInt::from(w as i64 - i64::from(i));
        }
        total += p * BigRational::from_integer(falling);
    }
    total
}

/// `P(s_i > T for every i in players)`.
pub fn joint_tail(joint: &JointLaw, players: &[usize], raw_threshold: f64) -> BigRational {
    let cut = cut_of(joint, raw_threshold);
    let num: BigUint = joint
        .probs
        .iter()
        .filter(|(s, _)| players.iter().all(|&i| i64::from(s[i]) > cut))
        .map(|(_, p)| p)
        .sum();
    ratio(num, joint.denominator.clone())
}

/// `Cov(I_1, I_2)` for the exceedance indicators of players 0 and 1.
pub fn pair_covariance(joint: &JointLaw, raw_threshold: f64) -> BigRational {
    let p = joint_tail(joint, &[0], raw_threshold);
    joint_tail(joint, &[0, 1], raw_threshold) - &p * &p
}

/// Total variation distance between an exact law on `0..=n` and
/// `Poisson(lambda)`, with the Poisson mass beyond `n` counted in full.
pub fn tv_to_poisson(w_law: &[BigRational], lambda: f64) -> Result<f64> {
    let pmf = crate::asymptotics::poisson_pmf_table(lambda, w_law.len() - 1)?;
    let mut dist = 0.0;
    let mut covered = 0.0;
    for (p, q) in w_law.iter().zip(&pmf) {
        dist += (big_to_f64(p) - q).abs();
        covered += q;
    }
    Ok(0.5 * (dist + (1.0 - covered).max(0.0)))
}

/// Serializable record of one oracle-backed check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub grid_size: u64,
    pub max_violation_exact: String,
    pub max_violation: f64,
    pub pass: bool,
}
