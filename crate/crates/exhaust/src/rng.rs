//! Small counter-based random generator.
//!
//! Streams are keyed by an arbitrary list of integers (seed, frame, entity
//! id, ...), so any part of a scene can be regenerated independently of
//! iteration order. The same key always yields the same byte-identical
//! stream on every platform, which is what makes generated corpora
//! reproducible.

/// SplitMix64 finalizer; a well-tested 64-bit mixing function.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Counter-mode generator: output `i` is `mix(key + i)` for a key derived
/// from the seed and stream identifiers.
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    /// Derive an independent stream from a seed and a stream key.
    pub fn keyed(seed: u64, parts: &[u64]) -> Self {
        let mut key = mix(seed ^ 0x6a09_e667_f3bc_c908);
        for &p in parts {
            key = mix(key ^ mix(p));
        }
        CounterRng { key, counter: 0 }
    }

    pub fn next_u64(&mut self) -> u64 {
        let out = mix(self
            .key
            .wrapping_add(self.counter.wrapping_mul(0xd134_2543_de82_ef95)));
        self.counter += 1;
        out
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal via Box-Muller.
    pub fn normal(&mut self) -> f64 {
        let u1 = (self.next_u64() >> 11).max(1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}
