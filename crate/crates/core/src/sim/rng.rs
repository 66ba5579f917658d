//! Counter-based random streams.
//!
//! A stream is a Weyl sequence `key + (c + 1) * gamma` whose starting point
//! and odd increment are both derived from `(seed, replicate)`, passed
//! through a multiply-fold finalizer. Any word can be produced without
//! generating its predecessors, so results cannot depend on scheduling.

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline(always)]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

// Multiply-fold finalizer: the high and low halves of `x * (x ^ c)`.
#[inline(always)]
fn fold64(x: u64) -> u64 {
    let r = u128::from(x) * u128::from(x ^ 0xe703_7ed1_a0b4_28db);
    (r >> 64) as u64 ^ r as u64
}

// Variant mixer used only for deriving keys and increments.
fn mix64_variant(mut z: u64) -> u64 {
    z = (z ^ (z >> 33)).wrapping_mul(0xff51_afd7_ed55_8ccd);
    z = (z ^ (z >> 33)).wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    z ^ (z >> 33)
}

fn mix_gamma(z: u64) -> u64 {
    let g = mix64_variant(z) | 1;
    // Reject increments with too few bit transitions.
    if (g ^ (g >> 1)).count_ones() < 24 {
        g ^ 0xaaaa_aaaa_aaaa_aaaa
    } else {
        g
    }
}

/// Random-access stream for one replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stream {
    key: u64,
    gamma: u64,
}

impl Stream {
    pub fn new(seed: u64, replicate: u64) -> Self {
        let state = seed.wrapping_add(GOLDEN_GAMMA.wrapping_mul(replicate.wrapping_mul(2).wrapping_add(1)));
        let root = mix64(state);
        Stream {
            key: mix64(root ^ mix64_variant(replicate)),
            gamma: mix_gamma(root.wrapping_add(GOLDEN_GAMMA)),
        }
    }

    /// Word number `counter` of the stream.
    #[inline(always)]
    pub fn word(&self, counter: u64) -> u64 {
        fold64(self.weyl(counter))
    }

    /// Weyl state behind word `counter`; `finish(weyl(c)) == word(c)`.
    #[inline(always)]
    pub(crate) fn weyl(&self, counter: u64) -> u64 {
        self.key.wrapping_add(counter.wrapping_add(1).wrapping_mul(self.gamma))
    }

    /// Weyl state increment for a counter stride.
    #[inline(always)]
    pub(crate) fn weyl_step(&self, stride: u64) -> u64 {
        stride.wrapping_mul(self.gamma)
    }

    #[inline(always)]
    pub(crate) fn finish(x: u64) -> u64 {
        fold64(x)
    }

    /// Sequential reader starting at `counter`.
    pub fn reader(&self, counter: u64) -> StreamReader {
        StreamReader {
            stream: *self,
            counter,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StreamReader {
    stream: Stream,
    counter: u64,
}

impl StreamReader {
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let w = self.stream.word(self.counter);
        self.counter += 1;
        w
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}
