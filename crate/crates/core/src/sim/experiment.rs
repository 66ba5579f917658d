use std::collections::BTreeMap;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng::Stream;
use super::sampler::TournamentSampler;
use super::stats::{BinnedHistogram, CountHistogram};
use crate::asymptotics::{self, LimitSpec, NormingConstants};
use crate::error::{Error, Result};
use crate::exact::{self, ExceedanceReport, ThresholdPosition};
use crate::model::OutcomeModel;

/// Replicates per work unit. Fixed so that the aggregation order, and hence
/// every floating-point summary, does not depend on the worker count.
pub const CHUNK_REPLICATES: u64 = 64;

pub const ORDER_HIST_LO: f64 = -10.0;
pub const ORDER_HIST_HI: f64 = 10.0;
pub const ORDER_HIST_WIDTH: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub model: OutcomeModel,
    pub n: u64,
    pub t_grid: Vec<f64>,
    pub j_max: u32,
    pub replicates: u64,
    pub seed: u64,
    pub workers: usize,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.model
            .validate()
            .into_result()
            .map_err(|e| Error::Config(e.to_string()))?;
        if self.n < asymptotics::MIN_NORMING_N {
            return Err(Error::config(format!("n must be at least 3, got {}", self.n)));
        }
        if self.n > u64::from(u32::MAX) {
            return Err(Error::config(format!("n = {} is too large to simulate", self.n)));
        }
        if self.replicates == 0 {
            return Err(Error::config("replicates must be at least 1"));
        }
        if self.t_grid.is_empty() {
            return Err(Error::config("t grid must not be empty"));
        }
        if let Some(t) = self.t_grid.iter().find(|t| !t.is_finite()) {
            return Err(Error::config(format!("t grid value {t} is not finite")));
        }
        if u64::from(self.j_max) >= self.n {
            return Err(Error::config(format!("j_max = {} must be below n = {}", self.j_max, self.n)));
        }
        if self.workers == 0 {
            return Err(Error::config("workers must be at least 1"));
        }
        Ok(())
    }
}

/// Summary of `W_n(t)` at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExceedanceSummary {
    pub t: f64,
    pub x_n: f64,
    pub raw_threshold: f64,
    pub threshold_near_atom: bool,
    /// Replicate counts of `W_n(t) = k` for `k = 0..=64`.
    pub histogram: Vec<u64>,
    pub overflow: u64,
    pub mean: f64,
    pub variance: f64,
    pub limit_lambda: f64,
    pub tv_limit: f64,
    pub exact_lambda: Option<f64>,
    pub tv_exact: Option<f64>,
    /// `P(M_{n,j} <= t) = P(W_n(t) <= j)` for `j = 0..=j_max`.
    pub order_stat_cdf: Vec<f64>,
    pub limit_order_stat_cdf: Vec<f64>,
}

/// Summary of `M_{n,j} = (s*_{(n-j)} - b_n) / a_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderStatSummary {
    pub j: u32,
    pub count: u64,
    pub mean: f64,
    pub variance: f64,
    pub histogram: BinnedHistogram,
}

/// `s*_{(n)} - sqrt(2 ln(n-1))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HuberSummary {
    pub centering: f64,
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub model_id: String,
    pub denominator: u32,
    pub support: Vec<(u32, f64)>,
    pub n: u64,
    pub j_max: u32,
    pub replicates: u64,
    pub seed: u64,
    pub sampler: String,
    pub a_n: f64,
    pub b_n: f64,
    pub sigma: f64,
    pub exceedances: Vec<ExceedanceSummary>,
    pub order_stats: Vec<OrderStatSummary>,
    pub huber: HuberSummary,
    /// Replicate counts of the `(j+1)`-th largest lattice score, for each `j`.
    pub order_stat_scores: Vec<BTreeMap<u32, u64>>,
}

/// Players whose score strictly exceeds `raw_threshold`.
pub fn exceedance_count(scores: &[u32], denominator: u32, raw_threshold: f64) -> usize {
    let cut = ThresholdPosition::locate(raw_threshold, denominator).cut;
    count_above(scores, cut)
}

fn count_above(scores: &[u32], cut: i64) -> usize {
    if cut < 0 {
        return scores.len();
    }
    scores.iter().filter(|&&s| i64::from(s) > cut).count()
}

#[derive(Debug, Clone)]
struct ChunkStats {
    w: Vec<CountHistogram>,
    top: Vec<BTreeMap<u32, u64>>,
}

impl ChunkStats {
    fn new(t_count: usize, j_count: usize) -> Self {
        ChunkStats {
            w: vec![CountHistogram::default(); t_count],
            top: vec![BTreeMap::new(); j_count],
        }
    }

    fn merge(&mut self, other: &ChunkStats) {
        for (a, b) in self.w.iter_mut().zip(&other.w) {
            a.merge(b);
        }
        for (a, b) in self.top.iter_mut().zip(&other.top) {
            for (&s, &c) in b {
                *a.entry(s).or_insert(0) += c;
            }
        }
    }
}

struct Plan {
    sampler: TournamentSampler,
    n: usize,
    k: u32,
    cuts: Vec<i64>,
    j_count: usize,
    seed: u64,
}

impl Plan {
    fn run_chunk(&self, chunk: u64, replicates: u64) -> ChunkStats {
        let mut stats = ChunkStats::new(self.cuts.len(), self.j_count);
        let mut scores = Vec::with_capacity(self.n);
        let mut top = Vec::with_capacity(self.n);
        let first = chunk * CHUNK_REPLICATES;
        let last = (first + CHUNK_REPLICATES).min(replicates);
        let total = u64::from(self.k) * (self.n as u64 * (self.n as u64 - 1) / 2);
        for rep in first..last {
            self.sampler.sample_into(self.n, &Stream::new(self.seed, rep), &mut scores);
            if cfg!(debug_assertions) || rep == first {
                let sum: u64 = scores.iter().map(|&s| u64::from(s)).sum();
                assert_eq!(sum, total, "score conservation failed in replicate {rep}");
            }
            for (h, &cut) in stats.w.iter_mut().zip(&self.cuts) {
                h.record(count_above(&scores, cut) as u64);
            }
            top.clear();
            top.extend_from_slice(&scores);
            let j_count = self.j_count;
            top.select_nth_unstable_by(j_count - 1, |a, b| b.cmp(a));
            top[..j_count].sort_unstable_by(|a, b| b.cmp(a));
            for (j, &s) in top[..j_count].iter().enumerate() {
                *stats.top[j].entry(s).or_insert(0) += 1;
            }
        }
        stats
    }
}

/// Runs `cfg.replicates` independent tournaments and summarizes them.
///
/// Replicate `r` draws from the stream keyed by `(cfg.seed, r)`, so the
/// report is a function of the configuration alone. `exact_refs` entries with
/// matching `n` and `t` supply `λ_n(t)` for the second distance.
pub fn run_experiment(cfg: &SimConfig, exact_refs: Option<&[ExceedanceReport]>) -> Result<SimReport> {
    cfg.validate()?;
    let norming = asymptotics::norming(cfg.n)?;
    let moments = cfg.model.moments()?;
    let sampler = TournamentSampler::for_model(&cfg.model)?;
    let k = cfg.model.denominator;

    let mut raws = Vec::with_capacity(cfg.t_grid.len());
    let mut positions = Vec::with_capacity(cfg.t_grid.len());
    for &t in &cfg.t_grid {
        let raw = exact::raw_threshold(&cfg.model, cfg.n, t)?;
        raws.push(raw);
        positions.push(ThresholdPosition::locate(raw, k));
    }
    let plan = Plan {
        sampler,
        n: cfg.n as usize,
        k,
        cuts: positions.iter().map(|p| p.cut).collect(),
        j_count: cfg.j_max as usize + 1,
        seed: cfg.seed,
    };

    let chunks = cfg.replicates.div_ceil(CHUNK_REPLICATES);
    info!(
        "simulating {} replicates of n = {} ({}, {} sampler) on {} workers",
        cfg.replicates,
        cfg.n,
        cfg.model.id(),
        plan.sampler.name(),
        cfg.workers
    );
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))?;
    let progress_every = (chunks / 20).max(1);
    let parts: Vec<ChunkStats> = pool.install(|| {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let s = plan.run_chunk(c, cfg.replicates);
                if c % progress_every == 0 {
                    info!("chunk {}/{} done", c + 1, chunks);
                }
                s
            })
            .collect()
    });
    let mut total = ChunkStats::new(cfg.t_grid.len(), plan.j_count);
    for p in &parts {
        total.merge(p);
    }

    let standardize = |s: u32| -> f64 {
        let nm1 = (cfg.n - 1) as f64;
        (f64::from(s) / f64::from(k) - nm1 * moments.mu) / (nm1.sqrt() * moments.sigma)
    };

    let mut exceedances = Vec::with_capacity(cfg.t_grid.len());
    for (i, &t) in cfg.t_grid.iter().enumerate() {
        let h = &total.w[i];
        let limit_lambda = asymptotics::predicted_lambda(t);
        let exact_lambda = exact_refs.and_then(|refs| {
            refs.iter()
                .find(|r| r.n == cfg.n && (r.t - t).abs() <= 1e-12)
                .map(|r| r.lambda_n)
        });
        exceedances.push(ExceedanceSummary {
            t,
            x_n: norming.x(t),
            raw_threshold: raws[i],
            threshold_near_atom: positions[i].near_atom,
            histogram: h.counts.clone(),
            overflow: h.overflow,
            mean: h.mean(),
            variance: h.variance(),
            limit_lambda,
            tv_limit: h.tv_to_poisson(limit_lambda)?,
            exact_lambda,
            tv_exact: exact_lambda.map(|l| h.tv_to_poisson(l)).transpose()?,
            order_stat_cdf: (0..plan.j_count).map(|j| h.cdf(j)).collect(),
            limit_order_stat_cdf: (0..=cfg.j_max)
                .map(|j| asymptotics::order_stat_limit_cdf(LimitSpec { t, j }))
                .collect(),
        });
    }

    let order_stats = total
        .top
        .iter()
        .enumerate()
        .map(|(j, counts)| order_stat_summary(j as u32, counts, &norming, &standardize))
        .collect();

    let centering = asymptotics::huber_centering(cfg.n)?;
    let (mean, variance) = weighted_moments(total.top[0].iter().map(|(&s, &c)| (standardize(s) - centering, c)));

    Ok(SimReport {
        model_id: cfg.model.id(),
        denominator: k,
        support: cfg.model.support.clone(),
        n: cfg.n,
        j_max: cfg.j_max,
        replicates: cfg.replicates,
        seed: cfg.seed,
        sampler: plan.sampler.name().to_string(),
        a_n: norming.a_n,
        b_n: norming.b_n,
        sigma: moments.sigma,
        exceedances,
        order_stats,
        huber: HuberSummary {
            centering,
            mean,
            variance,
        },
        order_stat_scores: total.top,
    })
}

fn order_stat_summary(
    j: u32,
    counts: &BTreeMap<u32, u64>,
    norming: &NormingConstants,
    standardize: &impl Fn(u32) -> f64,
) -> OrderStatSummary {
    let gumbel = |s: u32| norming.t_of(standardize(s));
    let mut histogram = BinnedHistogram::new(ORDER_HIST_LO, ORDER_HIST_HI, ORDER_HIST_WIDTH);
    for (&s, &c) in counts {
        histogram.add(gumbel(s), c);
    }
    let (mean, variance) = weighted_moments(counts.iter().map(|(&s, &c)| (gumbel(s), c)));
    OrderStatSummary {
        j,
        count: counts.values().sum(),
        mean,
        variance,
        histogram,
    }
}

/// Mean and unbiased variance of a sample given as `(value, multiplicity)`.
fn weighted_moments(items: impl Iterator<Item = (f64, u64)> + Clone) -> (f64, f64) {
    let count: u64 = items.clone().map(|(_, c)| c).sum();
    if count == 0 {
        return (f64::NAN, f64::NAN);
    }
    let n = count as f64;
    let mean = items.clone().map(|(x, c)| x * c as f64).sum::<f64>() / n;
    if count < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = items.map(|(x, c)| (x - mean) * (x - mean) * c as f64).sum();
    (mean, ss / (n - 1.0))
}

impl SimReport {
    /// Empirical `P(M_{n,j} <= t)` for any `t`, from the retained order
    /// statistics.
    pub fn order_stat_cdf(&self, j: u32, t: f64) -> Result<f64> {
        let counts = self
            .order_stat_scores
            .get(j as usize)
            .ok_or_else(|| Error::domain(format!("order statistic {j} was not retained (j_max = {})", self.j_max)))?;
        let norming = asymptotics::norming(self.n)?;
        let nm1 = (self.n - 1) as f64;
        let raw = nm1 * 0.5 + nm1.sqrt() * self.sigma * norming.x(t);
        let cut = ThresholdPosition::locate(raw, self.denominator).cut;
        let at_or_below: u64 = if cut < 0 {
            0
        } else {
            let cut = cut.min(i64::from(u32::MAX)) as u32;
            counts.range(..=cut).map(|(_, c)| c).sum()
        };
        Ok(at_or_below as f64 / self.replicates as f64)
    }

    pub fn exceedance(&self, t: f64) -> Option<&ExceedanceSummary> {
        self.exceedances.iter().find(|e| (e.t - t).abs() <= 1e-12)
    }

    /// Tidy CSV rows `(section, t_or_j, key, value)`: one row per `(t, k)`
    /// of every exceedance histogram and per `(j, bin)` of every order
    /// statistic histogram.
    pub fn tidy_rows(&self) -> Vec<[String; 4]> {
        let f = exact_fmt;
        let mut rows = Vec::new();
        for e in &self.exceedances {
            for (k, c) in e.histogram.iter().enumerate() {
                rows.push(["W".to_string(), f(e.t), k.to_string(), c.to_string()]);
            }
            rows.push(["W".to_string(), f(e.t), "overflow".to_string(), e.overflow.to_string()]);
        }
        for o in &self.order_stats {
            let h = &o.histogram;
            rows.push(["M".to_string(), o.j.to_string(), "underflow".to_string(), h.underflow.to_string()]);
            for (i, c) in h.counts.iter().enumerate() {
                if *c > 0 {
                    rows.push(["M".to_string(), o.j.to_string(), f(h.edge(i)), c.to_string()]);
                }
            }
            rows.push(["M".to_string(), o.j.to_string(), "overflow".to_string(), h.overflow.to_string()]);
        }
        rows
    }
}

fn exact_fmt(x: f64) -> String {
    format!("{x}")
}
