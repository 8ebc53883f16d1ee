//! Seeded random number generation.
//!
//! Every stochastic step in the toolkit (weight sampling, synthetic data,
//! batch selection) draws from [`CounterRng`], a SplitMix64 generator: a
//! 64-bit Weyl counter advanced by `0x9E3779B97F4A7C15` whose state is
//! passed through a fixed avalanche mix. The constants are the ones from
//! Vigna's reference `splitmix64.c`, so streams can be reproduced in any
//! language from the seed alone.
//!
//! Independent streams are derived with [`SeedMix`], which hashes a base
//! seed together with domain tags (layer index, init index, batch index,
//! architecture string) through SHA-256. Derivation is order-independent
//! of evaluation: stream `k` is the same whether or not streams `0..k`
//! were ever drawn from.

use sha2::{Digest, Sha256};

const WEYL: u64 = 0x9E37_79B9_7F4A_7C15;
const MIX1: u64 = 0xBF58_476D_1CE4_E5B9;
const MIX2: u64 = 0x94D0_49BB_1331_11EB;

/// SplitMix64 counter-based generator.
#[derive(Debug, Clone)]
pub struct CounterRng {
    state: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(WEYL);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(MIX1);
        z = (z ^ (z >> 27)).wrapping_mul(MIX2);
        z ^ (z >> 31)
    }

    /// Uniform draw from the open interval (0, 1).
    ///
    /// Uses the top 53 bits offset by half an ulp, so neither endpoint is
    /// reachable and the mapping stays exactly representable.
    pub fn next_f64(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    }

    /// Uniform draw from the open interval (lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        debug_assert!(lo < hi);
        lo + (hi - lo) * self.next_f64()
    }

    /// Unbiased integer draw from `0..n` via Lemire's widening multiply
    /// with rejection.
    pub fn next_below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        loop {
            let x = self.next_u64();
            let m = (x as u128) * (n as u128);
            let low = m as u64;
            if low >= n {
                return (m >> 64) as u64;
            }
            // Slow path: reject the biased region.
            let threshold = n.wrapping_neg() % n;
            if low >= threshold {
                return (m >> 64) as u64;
            }
        }
    }

    /// Standard normal draw via Box-Muller on two uniform variates.
    pub fn normal(&mut self) -> f64 {
        let u1 = self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Sample `k` distinct indices from `0..n`, ascending.
    ///
    /// Floyd's algorithm; the output set depends only on the stream, not
    /// on `n - k`.
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n, "cannot sample {k} of {n} indices");
        let mut chosen = std::collections::BTreeSet::new();
        for j in (n - k)..n {
            let t = self.next_below(j as u64 + 1) as usize;
            if !chosen.insert(t) {
                chosen.insert(j);
            }
        }
        chosen.into_iter().collect()
    }
}

/// Derives child seeds by hashing a base seed with domain tags.
#[derive(Debug, Clone)]
pub struct SeedMix {
    hasher: Sha256,
}

impl SeedMix {
    pub fn new(base: u64) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(base.to_le_bytes());
        SeedMix { hasher }
    }

    pub fn str(mut self, s: &str) -> Self {
        self.hasher.update([0x01]);
        self.hasher.update((s.len() as u64).to_le_bytes());
        self.hasher.update(s.as_bytes());
        self
    }

    pub fn u64(mut self, v: u64) -> Self {
        self.hasher.update([0x02]);
        self.hasher.update(v.to_le_bytes());
        self
    }

    /// First eight digest bytes, little-endian.
    pub fn finish(self) -> u64 {
        let digest = self.hasher.finalize();
        u64::from_le_bytes(digest[..8].try_into().unwrap())
    }

    pub fn rng(self) -> CounterRng {
        CounterRng::new(self.finish())
    }
}
