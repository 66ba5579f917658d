//! Full-tournament samplers.
//!
//! Scores are kept on the integer lattice: a score of `s` means `s/k` points.

use super::rng::Stream;
use crate::error::Result;
use crate::model::OutcomeModel;

/// Walker/Vose alias table over the support numerators, with 64-bit
/// acceptance thresholds.
#[derive(Debug, Clone)]
pub struct AliasTable {
    numerators: Vec<u32>,
    accept: Vec<u64>,
    alias: Vec<u32>,
}

impl AliasTable {
    pub fn new(model: &OutcomeModel) -> Result<Self> {
        model.validate().into_result()?;
        let len = model.len();
        let total: f64 = model.support.iter().map(|s| s.1).sum();
        let mut scaled: Vec<f64> = model
            .support
            .iter()
            .map(|&(_, w)| w / total * len as f64)
            .collect();
        let mut accept = vec![u64::MAX; len];
        let mut alias: Vec<u32> = (0..len as u32).collect();
        let (mut small, mut large): (Vec<usize>, Vec<usize>) =
            (0..len).partition(|&i| scaled[i] < 1.0);
        while let (Some(s), Some(&l)) = (small.pop(), large.last()) {
            accept[s] = to_threshold(scaled[s]);
            alias[s] = l as u32;
            scaled[l] -= 1.0 - scaled[s];
            if scaled[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // Leftovers are 1 up to rounding.
        for i in small.into_iter().chain(large) {
            accept[i] = u64::MAX;
        }
        Ok(AliasTable {
            numerators: model.support.iter().map(|s| s.0).collect(),
            accept,
            alias,
        })
    }

    /// Maps one uniform word to a support numerator.
    #[inline(always)]
    pub fn sample(&self, u: u64) -> u32 {
        let prod = u128::from(u) * self.numerators.len() as u128;
        let column = (prod >> 64) as usize;
        let frac = prod as u64;
        let thr = self.accept[column];
        let pick = if thr == u64::MAX || frac < thr {
            column
        } else {
            self.alias[column] as usize
        };
        self.numerators[pick]
    }
}

fn to_threshold(p: f64) -> u64 {
    if p >= 1.0 {
        u64::MAX
    } else {
        (p * 18_446_744_073_709_551_616.0) as u64
    }
}

/// How a tournament is drawn.
#[derive(Debug, Clone)]
pub enum TournamentSampler {
    /// The match law is `Bin(k, 1/2)`: each match is `k` fair half-games and
    /// the tournament is `k` independent win/loss tournaments on bit planes.
    FairLayers { layers: u32 },
    /// One alias draw per match.
    Alias { table: AliasTable, denominator: u32 },
}

impl TournamentSampler {
    /// Fastest exact sampler for the model.
    pub fn for_model(model: &OutcomeModel) -> Result<Self> {
        match model.fair_bit_layers() {
            Some(layers) => Ok(TournamentSampler::FairLayers { layers }),
            None => Self::alias(model),
        }
    }

    /// Per-match alias sampling regardless of model structure.
    pub fn alias(model: &OutcomeModel) -> Result<Self> {
        Ok(TournamentSampler::Alias {
            table: AliasTable::new(model)?,
            denominator: model.denominator,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            TournamentSampler::FairLayers { .. } => "fair-layers",
            TournamentSampler::Alias { .. } => "alias",
        }
    }

    pub fn denominator(&self) -> u32 {
        match self {
            TournamentSampler::FairLayers { layers } => *layers,
            TournamentSampler::Alias { denominator, .. } => *denominator,
        }
    }

    /// Overwrites `scores` with the lattice scores of one tournament.
    pub fn sample_into(&self, n: usize, stream: &Stream, scores: &mut Vec<u32>) {
        scores.clear();
        scores.resize(n, 0);
        match self {
            TournamentSampler::FairLayers { layers } => {
                for layer in 0..*layers {
                    fair_layer(n, stream, u64::from(layer), scores);
                }
            }
            TournamentSampler::Alias { table, denominator } => {
                alias_tournament(n, stream, table, *denominator, scores)
            }
        }
    }
}

/// Draws one tournament and returns its lattice score vector.
pub fn simulate_tournament(model: &OutcomeModel, n: usize, stream: &Stream) -> Result<Vec<u32>> {
    let sampler = TournamentSampler::for_model(model)?;
    let mut scores = Vec::with_capacity(n);
    sampler.sample_into(n, stream, &mut scores);
    Ok(scores)
}

fn alias_tournament(n: usize, stream: &Stream, table: &AliasTable, k: u32, scores: &mut [u32]) {
    let n64 = n as u64;
    for i in 0..n {
        let row = i as u64 * n64;
        for j in i + 1..n {
            let m = table.sample(stream.word(row + j as u64));
            scores[i] += m;
            scores[j] += k - m;
        }
    }
}

#[inline(always)]
fn csa(a: u64, b: u64, c: u64) -> (u64, u64) {
    let u = a ^ b;
    ((a & b) | (u & c), u ^ c)
}

/// Bit-sliced per-column counters fed 16 words at a time. Carries out of
/// the 8s plane ripple into `high`, where plane `b` holds bit `b` of each
/// column's count of sixteens.
struct ColumnCounter {
    ones: u64,
    twos: u64,
    fours: u64,
    eights: u64,
    high: [u64; 32],
}

impl ColumnCounter {
    fn new() -> Self {
        ColumnCounter {
            ones: 0,
            twos: 0,
            fours: 0,
            eights: 0,
            high: [0; 32],
        }
    }

    #[inline(always)]
    fn add16(&mut self, w: &[u64; 16]) {
        let (twos_a, ones) = csa(self.ones, w[0], w[1]);
        let (twos_b, ones) = csa(ones, w[2], w[3]);
        let (fours_a, twos) = csa(self.twos, twos_a, twos_b);
        let (twos_a, ones) = csa(ones, w[4], w[5]);
        let (twos_b, ones) = csa(ones, w[6], w[7]);
        let (fours_b, twos) = csa(twos, twos_a, twos_b);
        let (eights_a, fours) = csa(self.fours, fours_a, fours_b);
        let (twos_a, ones) = csa(ones, w[8], w[9]);
        let (twos_b, ones) = csa(ones, w[10], w[11]);
        let (fours_a, twos) = csa(twos, twos_a, twos_b);
        let (twos_a, ones) = csa(ones, w[12], w[13]);
        let (twos_b, ones) = csa(ones, w[14], w[15]);
        let (fours_b, twos) = csa(twos, twos_a, twos_b);
        let (eights_b, fours) = csa(fours, fours_a, fours_b);
        let (sixteens, eights) = csa(self.eights, eights_a, eights_b);
        self.ones = ones;
        self.twos = twos;
        self.fours = fours;
        self.eights = eights;
        let mut carry = sixteens;
        let mut plane = 0;
        while carry != 0 {
            let sum = self.high[plane] ^ carry;
            carry &= self.high[plane];
            self.high[plane] = sum;
            plane += 1;
        }
    }

    fn count(&self, bit: usize) -> u32 {
        let b = |w: u64| ((w >> bit) & 1) as u32;
        let sixteens: u32 = self.high.iter().enumerate().map(|(p, &w)| b(w) << p).sum();
        16 * sixteens + 8 * b(self.eights) + 4 * b(self.fours) + 2 * b(self.twos) + b(self.ones)
    }
}

/// Adds one fair win/loss tournament to `scores`.
///
/// Bit `c` of word `(row i, column block b)` decides match `(i, 64 b + c)`
/// for `64 b + c > i`: set means `i` wins. Blocks are walked column-major so
/// each block's column counts stay in registers.
fn fair_layer(n: usize, stream: &Stream, layer: u64, scores: &mut [u32]) {
    let blocks = n.div_ceil(64);
    let base = layer * (n * blocks) as u64;
    let row_step = stream.weyl_step(blocks as u64);

    for block in 0..blocks {
        let col0 = block * 64;
        let width = (n - col0).min(64);
        let valid = if width == 64 { u64::MAX } else { (1u64 << width) - 1 };
        let mut counter = ColumnCounter::new();
        let mut x = stream.weyl(base + block as u64);
        let mut batch = [0u64; 16];

        // Rows above the block see every column in it.
        let mut row = 0;
        while row + 16 <= col0 {
            for (slot, s) in batch.iter_mut().zip(&mut scores[row..row + 16]) {
                let w = Stream::finish(x) & valid;
                x = x.wrapping_add(row_step);
                *s += w.count_ones();
                *slot = w;
            }
            counter.add16(&batch);
            row += 16;
        }
        // The remainder and the rows inside the block, whose masks exclude
        // the diagonal and everything left of it.
        let rows = (col0 + width - 1).min(n - 1);
        let mut filled = 0;
        while row < rows {
            let mut mask = valid;
            if row >= col0 {
                let pos = row - col0;
                mask &= if pos == 63 { 0 } else { u64::MAX << (pos + 1) };
            }
            let w = Stream::finish(x) & mask;
            x = x.wrapping_add(row_step);
            scores[row] += w.count_ones();
            batch[filled] = w;
            filled += 1;
            if filled == 16 {
                counter.add16(&batch);
                filled = 0;
            }
            row += 1;
        }
        if filled > 0 {
            batch[filled..].fill(0);
            counter.add16(&batch);
        }
        for c in 0..width {
            let j = col0 + c;
            // Column j played rows 0..j and won every match whose bit is clear.
            scores[j] += j as u32 - counter.count(c);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_layer(n: usize, stream: &Stream, layer: u64) -> Vec<u32> {
        let blocks = n.div_ceil(64);
        let base = layer * (n * blocks) as u64;
        let mut s = vec![0u32; n];
        for i in 0..n {
            for j in i + 1..n {
                let w = stream.word(base + (i * blocks + j / 64) as u64);
                if (w >> (j % 64)) & 1 == 1 {
                    s[i] += 1;
                } else {
                    s[j] += 1;
                }
            }
        }
        s
    }

    #[test]
    fn bit_sliced_layer_matches_bitwise_reference() {
        for n in [2usize, 3, 17, 63, 64, 65, 130, 200, 321] {
            for rep in 0..3 {
                let stream = Stream::new(99, rep);
                let mut fast = vec![0u32; n];
                fair_layer(n, &stream, 1, &mut fast);
                assert_eq!(fast, brute_layer(n, &stream, 1), "n={n}");
            }
        }
    }

    #[test]
    fn scores_are_conserved() {
        for model in [OutcomeModel::classical(), OutcomeModel::chess(), OutcomeModel::chess_with_decisive(0.2).unwrap()] {
            let k = model.denominator;
            for n in [2usize, 3, 10, 99, 257] {
                for rep in 0..5 {
                    let s = simulate_tournament(&model, n, &Stream::new(5, rep)).unwrap();
                    let total: u64 = s.iter().map(|&x| u64::from(x)).sum();
                    assert_eq!(total, u64::from(k) * (n * (n - 1) / 2) as u64);
                    assert!(s.iter().all(|&x| x <= k * (n as u32 - 1)));
                }
            }
        }
    }

    #[test]
    fn two_players_single_match() {
        let model = OutcomeModel::chess();
        let mut seen = [0u32; 3];
        for rep in 0..4000 {
            let s = simulate_tournament(&model, 2, &Stream::new(1, rep)).unwrap();
            assert_eq!(s[0] + s[1], 2);
            seen[s[0] as usize] += 1;
        }
        // 1/4, 1/2, 1/4 with 4000 draws
        assert!((seen[1] as f64 / 4000.0 - 0.5).abs() < 0.04);
        assert!((seen[0] as f64 / 4000.0 - 0.25).abs() < 0.04);
    }

    #[test]
    fn alias_table_frequencies() {
        let model = OutcomeModel::new(4, vec![(0, 0.05), (1, 0.2), (2, 0.5), (3, 0.2), (4, 0.05)]).unwrap();
        let table = AliasTable::new(&model).unwrap();
        let stream = Stream::new(3, 0);
        let draws = 400_000;
        let mut counts = [0u32; 5];
        for c in 0..draws {
            counts[table.sample(stream.word(c)) as usize] += 1;
        }
        for (m, w) in model.support {
            let f = f64::from(counts[m as usize]) / draws as f64;
            assert!((f - w).abs() < 4.0 * (w * (1.0 - w) / draws as f64).sqrt() + 1e-4, "m={m}: {f} vs {w}");
        }
    }

    #[test]
    fn classical_three_player_max() {
        let model = OutcomeModel::classical();
        let reps = 1_000_000u64;
        let mut hits = 0u64;
        let mut scores = Vec::new();
        let sampler = TournamentSampler::for_model(&model).unwrap();
        for rep in 0..reps {
            sampler.sample_into(3, &Stream::new(11, rep), &mut scores);
            if scores.contains(&2) {
                hits += 1;
            }
        }
        let p = hits as f64 / reps as f64;
        assert!((p - 0.75).abs() < 0.002, "{p}");
    }
}
