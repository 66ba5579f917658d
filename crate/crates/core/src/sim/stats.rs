//! Histograms and distances used by the experiment summaries.

use serde::{Deserialize, Serialize};

use crate::asymptotics::poisson_pmf_table;
use crate::error::{Error, Result};

/// Largest exceedance count with its own histogram bucket.
pub const W_K_MAX: usize = 64;

/// `½ Σ_k |hist_k / N − Poi(λ)(k)|`, where counts beyond the histogram
/// (`overflow`) and the Poisson mass beyond it both enter in full.
pub fn empirical_tv(hist: &[u64], overflow: u64, lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::domain(format!("Poisson mean must be finite and nonnegative, got {lambda}")));
    }
    let total = hist.iter().sum::<u64>() + overflow;
    if total == 0 {
        return Err(Error::domain("empirical distribution has no observations"));
    }
    let n = total as f64;
    let pmf = poisson_pmf_table(lambda, hist.len().saturating_sub(1))?;
    let mut covered = 0.0;
    let mut dist = 0.0;
    for (&h, &p) in hist.iter().zip(&pmf) {
        dist += (h as f64 / n - p).abs();
        covered += p;
    }
    let tail = (1.0 - covered).max(0.0);
    dist += tail + overflow as f64 / n;
    Ok((0.5 * dist).clamp(0.0, 1.0))
}

/// Counts of an integer statistic over `0..=W_K_MAX` plus an overflow bucket.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountHistogram {
    pub counts: Vec<u64>,
    pub overflow: u64,
    pub sum: u128,
    pub sum_squares: u128,
}

impl Default for CountHistogram {
    fn default() -> Self {
        CountHistogram {
            counts: vec![0; W_K_MAX + 1],
            overflow: 0,
            sum: 0,
            sum_squares: 0,
        }
    }
}

impl CountHistogram {
    pub fn record(&mut self, value: u64) {
        match self.counts.get_mut(value as usize) {
            Some(c) => *c += 1,
            None => self.overflow += 1,
        }
        self.sum += u128::from(value);
        self.sum_squares += u128::from(value) * u128::from(value);
    }

    pub fn merge(&mut self, other: &CountHistogram) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.overflow += other.overflow;
        self.sum += other.sum;
        self.sum_squares += other.sum_squares;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.overflow
    }

    pub fn mean(&self) -> f64 {
        self.sum as f64 / self.total() as f64
    }

    /// Unbiased sample variance; zero for a single observation.
    pub fn variance(&self) -> f64 {
        let n = self.total();
        if n < 2 {
            return 0.0;
        }
        let nf = n as f64;
        // Exact integer numerator n Σx² − (Σx)².
        let num = (u128::from(n) * self.sum_squares - self.sum * self.sum) as f64;
        num / (nf * (nf - 1.0))
    }

    /// Empirical `P(X <= j)`.
    pub fn cdf(&self, j: usize) -> f64 {
        let below: u64 = self.counts.iter().take(j + 1).sum();
        below as f64 / self.total() as f64
    }

    pub fn tv_to_poisson(&self, lambda: f64) -> Result<f64> {
        empirical_tv(&self.counts, self.overflow, lambda)
    }
}

/// Fixed-width histogram on `[lo, lo + width * bins)` with under- and
/// overflow buckets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedHistogram {
    pub lo: f64,
    pub width: f64,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
}

impl BinnedHistogram {
    pub fn new(lo: f64, hi: f64, width: f64) -> Self {
        let bins = ((hi - lo) / width).round() as usize;
        BinnedHistogram {
            lo,
            width,
            counts: vec![0; bins],
            underflow: 0,
            overflow: 0,
        }
    }

    pub fn add(&mut self, x: f64, count: u64) {
        let pos = ((x - self.lo) / self.width).floor();
        if pos < 0.0 {
            self.underflow += count;
        } else if pos >= self.counts.len() as f64 {
            self.overflow += count;
        } else {
            self.counts[pos as usize] += count;
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow
    }

    /// Left edge of bin `i`.
    pub fn edge(&self, i: usize) -> f64 {
        self.lo + self.width * i as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotics::poisson_pmf;

    #[test]
    fn tv_point_mass_at_zero() {
        let mut h = vec![0u64; 65];
        h[0] = 10;
        assert_eq!(empirical_tv(&h, 0, 0.0).unwrap(), 0.0);
        let tv = empirical_tv(&h, 0, 1.0).unwrap();
        assert!((tv - (1.0 - (-1.0f64).exp())).abs() < 1e-15, "{tv}");
    }

    #[test]
    fn tv_of_proportional_histogram() {
        let lambda = 2.3;
        let scale = 1e15;
        let h: Vec<u64> = (0..=64).map(|k| (poisson_pmf(lambda, k).unwrap() * scale).round() as u64).collect();
        assert!(empirical_tv(&h, 0, lambda).unwrap() < 1e-9);
    }

    #[test]
    fn tv_rejects_bad_input() {
        assert!(empirical_tv(&[1, 2], 0, -1.0).is_err());
        assert!(empirical_tv(&[0, 0], 0, 1.0).is_err());
    }

    #[test]
    fn overflow_counts_as_disagreement() {
        let tv = empirical_tv(&[0, 0], 5, 0.0).unwrap();
        assert_eq!(tv, 1.0);
    }

    #[test]
    fn count_histogram_moments() {
        let mut h = CountHistogram::default();
        for v in [0u64, 1, 1, 2, 70] {
            h.record(v);
        }
        assert_eq!(h.total(), 5);
        assert_eq!(h.overflow, 1);
        assert!((h.mean() - 74.0 / 5.0).abs() < 1e-12);
        let xs = [0.0, 1.0, 1.0, 2.0, 70.0];
        let m = xs.iter().sum::<f64>() / 5.0;
        let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / 4.0;
        assert!((h.variance() - v).abs() < 1e-9);
        assert_eq!(h.cdf(1), 0.6);
    }

    #[test]
    fn binned_edges() {
        let mut h = BinnedHistogram::new(-10.0, 10.0, 0.01);
        assert_eq!(h.counts.len(), 2000);
        h.add(-10.5, 1);
        h.add(10.0, 2);
        h.add(0.0, 3);
        h.add(-10.0, 4);
        assert_eq!((h.underflow, h.overflow, h.counts[1000], h.counts[0]), (1, 2, 3, 4));
        assert_eq!(h.total(), 10);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn tv_in_unit_interval(h in prop::collection::vec(0u64..1000, 1..70), over in 0u64..50, lambda in 0.0f64..30.0) {
                prop_assume!(h.iter().sum::<u64>() + over > 0);
                let tv = empirical_tv(&h, over, lambda).unwrap();
                prop_assert!((0.0..=1.0).contains(&tv));
            }
        }
    }
}
