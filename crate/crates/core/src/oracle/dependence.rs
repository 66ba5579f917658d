//! Exact negative-dependence checks on an enumerated joint law.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{big_to_f64, CheckRecord, JointLaw};

/// Largest value of `joint - product` (or of a covariance) over a family of
/// cases. A check passes when no case is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct DependenceCheck {
    pub name: String,
    pub grid_size: u64,
    pub violations: u64,
    pub max_violation: BigRational,
}

impl DependenceCheck {
    fn new(name: &str) -> Self {
        DependenceCheck {
            name: name.to_string(),
            grid_size: 0,
            violations: 0,
            max_violation: BigRational::zero(),
        }
    }

    fn observe(&mut self, value: BigRational, first: bool) {
        self.grid_size += 1;
        if value.is_positive() {
            self.violations += 1;
        }
        if first || value > self.max_violation {
            self.max_violation = value;
        }
    }

    pub fn pass(&self) -> bool {
        self.violations == 0
    }

    pub fn record(&self) -> CheckRecord {
        CheckRecord {
            name: self.name.clone(),
            grid_size: self.grid_size,
            max_violation_exact: self.max_violation.to_string(),
            max_violation: big_to_f64(&self.max_violation),
            pass: self.pass(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependenceReport {
    pub lower: CheckRecord,
    pub upper: CheckRecord,
}

/// Dense array over `{0..=K}^n` with row-major strides.
struct Grid {
    n: usize,
    side: usize,
    cells: Vec<BigUint>,
}

impl Grid {
    fn from_joint(joint: &JointLaw, side: usize) -> Self {
        let n = joint.n;
        let mut cells = vec![BigUint::zero(); side.pow(n as u32)];
        for (s, p) in &joint.probs {
            let idx = s.iter().fold(0, |acc, &x| acc * side + x as usize);
            cells[idx] += p;
        }
        Grid { n, side, cells }
    }

    /// Prefix (`forward`) or suffix sums along every axis.
    fn accumulate(&mut self, forward: bool) {
        let side = self.side;
        for axis in 0..self.n {
            let stride = side.pow((self.n - 1 - axis) as u32);
            let len = self.cells.len();
            for base in 0..len {
                let pos = (base / stride) % side;
                if forward && pos > 0 {
                    let prev = self.cells[base - stride].clone();
                    self.cells[base] += prev;
                }
                let rbase = len - 1 - base;
                let rpos = (rbase / stride) % side;
                if !forward && rpos + 1 < side {
                    let next = self.cells[rbase + stride].clone();
                    self.cells[rbase] += next;
                }
            }
        }
    }
}

/// Verifies `P(s <= c) <= prod P(s_i <= c_i)` (lower orthants) and
/// `P(s > c) <= prod P(s_i > c_i)` (upper orthants) for every threshold
/// vector `c` in `{-1, ..., K}^n`, exactly.
pub fn check_nlod_nuod(joint: &JointLaw) -> (DependenceCheck, DependenceCheck) {
    let n = joint.n;
    let side = joint.max_score() as usize + 1;
    let den = &joint.denominator;
    let den_pow = den.pow(n.saturating_sub(1) as u32);
    let scale = BigInt::from(den.pow(n as u32));

    let mut cdf = Grid::from_joint(joint, side);
    cdf.accumulate(true);
    let mut sf = Grid::from_joint(joint, side);
    sf.accumulate(false);

    // Marginal cumulative and survival numerators per player.
    let marg: Vec<Vec<BigUint>> = (0..n).map(|i| joint.marginal_numerators(i)).collect();
    let marg_cdf: Vec<Vec<BigUint>> = marg
        .iter()
        .map(|m| {
            let mut acc = BigUint::zero();
            (0..side)
                .map(|v| {
                    if let Some(x) = m.get(v) {
                        acc += x;
                    }
                    acc.clone()
                })
                .collect()
        })
        .collect();
    // marg_sf[i][v] = P(s_i >= v), v in 0..=side.
    let marg_sf: Vec<Vec<BigUint>> = marg_cdf
        .iter()
        .map(|c| {
            let mut out = vec![den.clone()];
            out.extend(c.iter().map(|x| den - x));
            out
        })
        .collect();

    let mut lower = DependenceCheck::new("NLOD");
    let mut upper = DependenceCheck::new("NUOD");
    let grid_side = side + 1;
    let total = grid_side.pow(n as u32);
    let mut c = vec![0usize; n];
    for flat in 0..total {
        let mut rest = flat;
        for slot in c.iter_mut().rev() {
            *slot = rest % grid_side;
            rest /= grid_side;
        }
        // Slot value v encodes the threshold v - 1.
        let first = flat == 0;

        let (joint_lo, prod_lo) = if c.contains(&0) {
            (BigUint::zero(), BigUint::zero())
        } else {
            let idx = c.iter().fold(0, |acc, &v| acc * side + (v - 1));
            let prod = c
                .iter()
                .enumerate()
                .fold(BigUint::from(1u32), |acc, (i, &v)| acc * &marg_cdf[i][v - 1]);
            (cdf.cells[idx].clone(), prod)
        };
        lower.observe(slack(&joint_lo, &den_pow, &prod_lo, &scale), first);

        let (joint_hi, prod_hi) = if c.contains(&side) {
            (BigUint::zero(), BigUint::zero())
        } else {
            let idx = c.iter().fold(0, |acc, &v| acc * side + v);
            let prod = c
                .iter()
                .enumerate()
                .fold(BigUint::from(1u32), |acc, (i, &v)| acc * &marg_sf[i][v]);
            (sf.cells[idx].clone(), prod)
        };
        upper.observe(slack(&joint_hi, &den_pow, &prod_hi, &scale), first);
    }
    (lower, upper)
}

fn slack(joint: &BigUint, den_pow: &BigUint, product: &BigUint, scale: &BigInt) -> BigRational {
    let diff = BigInt::from(joint * den_pow) - BigInt::from(product.clone());
    BigRational::new(diff, scale.clone())
}

/// A nondecreasing integer-valued function of the coordinates in `vars`.
#[derive(Debug, Clone)]
enum Monotone {
    /// Sum over coordinates of `sum_t h_t 1{x > c_t}`.
    StepSum(Vec<(usize, Vec<(i64, i64)>)>),
    /// `1{x_i > c_i for all i}`.
    UpperOrthant(Vec<(usize, i64)>),
    /// `1{x_i > c_i for some i}`.
    AnyAbove(Vec<(usize, i64)>),
    /// `max_i x_i` with coordinates clipped at `c_i`.
    ClippedMax(Vec<(usize, i64)>),
}

impl Monotone {
    fn random(vars: &[usize], max: i64, rng: &mut ChaCha8Rng) -> Self {
        let cut = |rng: &mut ChaCha8Rng| rng.random_range(-1..=max);
        match rng.random_range(0..4u32) {
            0 => Monotone::StepSum(
                vars.iter()
                    .map(|&i| {
                        let steps = rng.random_range(1..=3usize);
                        (i, (0..steps).map(|_| (cut(rng), rng.random_range(1..=3i64))).collect())
                    })
                    .collect(),
            ),
            1 => Monotone::UpperOrthant(vars.iter().map(|&i| (i, cut(rng))).collect()),
            2 => Monotone::AnyAbove(vars.iter().map(|&i| (i, cut(rng))).collect()),
            _ => Monotone::ClippedMax(vars.iter().map(|&i| (i, cut(rng).max(0))).collect()),
        }
    }

    fn eval(&self, s: &[u32]) -> i64 {
        let x = |i: usize| i64::from(s[i]);
        match self {
            Monotone::StepSum(parts) => parts
                .iter()
                .map(|(i, steps)| steps.iter().filter(|(c, _)| x(*i) > *c).map(|(_, h)| h).sum::<i64>())
                .sum(),
            Monotone::UpperOrthant(c) => i64::from(c.iter().all(|&(i, t)| x(i) > t)),
            Monotone::AnyAbove(c) => i64::from(c.iter().any(|&(i, t)| x(i) > t)),
            Monotone::ClippedMax(c) => c.iter().map(|&(i, t)| x(i).min(t)).max().unwrap_or(0),
        }
    }
}

/// Nonempty disjoint index sets `(A, B)`, each unordered pair once.
fn disjoint_splits(n: usize) -> Vec<(Vec<usize>, Vec<usize>)> {
    let members = |mask: u32| (0..n).filter(|&i| mask >> i & 1 == 1).collect::<Vec<_>>();
    let mut out = Vec::new();
    for a in 1u32..(1 << n) {
        for b in (a + 1)..(1 << n) {
            if a & b == 0 {
                out.push((members(a), members(b)));
            }
        }
    }
    out
}

/// Partial check of negative association: for every disjoint split and
/// `functions_per_split` random pairs of nondecreasing functions `f(s_A)`,
/// `g(s_B)`, verifies `Cov(f, g) <= 0` exactly. This samples the defining
/// family; it does not certify negative association.
pub fn na_spot_check(joint: &JointLaw, functions_per_split: usize, seed: u64) -> DependenceCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max = i64::from(joint.max_score());
    let den = BigInt::from(joint.denominator.clone());
    let scale = &den * &den;
    let mut check = DependenceCheck::new("NA spot check");
    let mut first = true;
    for (a, b) in disjoint_splits(joint.n) {
        for _ in 0..functions_per_split {
            let f = Monotone::random(&a, max, &mut rng);
            let g = Monotone::random(&b, max, &mut rng);
            let (mut sf, mut sg, mut sfg) = (BigInt::zero(), BigInt::zero(), BigInt::zero());
            for (s, p) in &joint.probs {
                let p = BigInt::from(p.clone());
                let (fv, gv) = (f.eval(s), g.eval(s));
                sf += &p * fv;
                sg += &p * gv;
                sfg += &p * (fv * gv);
            }
            let cov = BigRational::new(sfg * &den - sf * sg, scale.clone());
            check.observe(cov, first);
            first = false;
        }
    }
    check
}

#[cfg(test)]
mod tests {
    use super::super::{enumerate_joint, DEFAULT_BUDGET};
    use super::*;
    use crate::model::OutcomeModel;

    #[test]
    fn classical_three_has_no_violations() {
        let j = enumerate_joint(&OutcomeModel::classical(), 3, DEFAULT_BUDGET).unwrap();
        let (lo, hi) = check_nlod_nuod(&j);
        assert!(lo.pass() && hi.pass());
        assert_eq!(lo.grid_size, 4u64.pow(3));
        assert!(!lo.max_violation.is_positive());
    }

    #[test]
    fn product_law_attains_equality() {
        let m = vec![BigUint::from(1u32), BigUint::from(2u32), BigUint::from(1u32)];
        let j = JointLaw::independent(1, &[m.clone(), m.clone(), m], &BigUint::from(4u32));
        assert_eq!(j.total(), j.denominator);
        let (lo, hi) = check_nlod_nuod(&j);
        assert_eq!(lo.violations + hi.violations, 0);
        assert!(lo.max_violation.is_zero());
        assert!(hi.max_violation.is_zero());
        let na = na_spot_check(&j, 20, 1);
        assert!(na.max_violation.is_zero());
    }

    #[test]
    fn positively_dependent_law_is_caught() {
        // Two perfectly correlated fair coins.
        let mut probs = std::collections::BTreeMap::new();
        probs.insert(vec![0, 0], BigUint::from(2u32));
        probs.insert(vec![1, 1], BigUint::from(2u32));
        let j = JointLaw {
            n: 2,
            k: 1,
            denominator: BigUint::from(4u32),
            probs,
        };
        let (lo, hi) = check_nlod_nuod(&j);
        assert!(!lo.pass());
        assert!(!hi.pass());
        assert_eq!(lo.max_violation, BigRational::new(1.into(), 4.into()));
        assert!(!na_spot_check(&j, 50, 3).pass());
    }

    #[test]
    fn split_count() {
        assert_eq!(disjoint_splits(3).len(), 6);
        assert_eq!(disjoint_splits(4).len(), 25);
    }

    #[test]
    fn grid_accumulation_matches_direct_sums() {
        let j = enumerate_joint(&OutcomeModel::chess(), 3, DEFAULT_BUDGET).unwrap();
        let side = j.max_score() as usize + 1;
        let mut cdf = Grid::from_joint(&j, side);
        cdf.accumulate(true);
        let mut sf = Grid::from_joint(&j, side);
        sf.accumulate(false);
        for c0 in 0..side {
            for c1 in 0..side {
                for c2 in 0..side {
                    let idx = (c0 * side + c1) * side + c2;
                    let c = [c0 as u32, c1 as u32, c2 as u32];
                    let below: BigUint = j.probs.iter().filter(|(s, _)| s.iter().zip(&c).all(|(x, t)| x <= t)).map(|(_, p)| p).sum();
                    let above: BigUint = j.probs.iter().filter(|(s, _)| s.iter().zip(&c).all(|(x, t)| x >= t)).map(|(_, p)| p).sum();
                    assert_eq!(cdf.cells[idx], below);
                    assert_eq!(sf.cells[idx], above);
                }
            }
        }
    }
}
