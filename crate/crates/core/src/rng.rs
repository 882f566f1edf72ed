//! Counter-based deterministic random streams.
//!
//! The generator is fully specified here so other implementations can
//! reproduce its output:
//!
//! ```text
//! mix(z)   = z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
//!            z ^= z >> 27; z *= 0x94D049BB133111EB; z ^ (z >> 31)     (wrapping)
//! key      = mix(seed * 0x9E3779B97F4A7C15 ^ mix(stream ^ 0x243F6A8885A308D3))
//! draw_k   = mix(key + k * 0x9E3779B97F4A7C15)    for k = 1, 2, ...
//! below(n) = first draw d with d >= (2^64 - n) mod n, reduced as d mod n
//! unit()   = (draw >> 11) * 2^-53
//! ```
//!
//! Distinct `stream_index` values give independent streams for the same seed,
//! which is how parallel consumers stay deterministic.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const STREAM_SALT: u64 = 0x243F_6A88_85A3_08D3;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeededSampler {
    seed: u64,
    stream_index: u64,
    key: u64,
    counter: u64,
}

impl SeededSampler {
    pub fn new(seed: u64, stream_index: u64) -> SeededSampler {
        let key = mix(seed.wrapping_mul(GOLDEN) ^ mix(stream_index ^ STREAM_SALT));
        SeededSampler {
            seed,
            stream_index,
            key,
            counter: 0,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    /// Uniform integer in `[0, n)`. Panics if `n == 0`.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        let n = n as u64;
        let threshold = n.wrapping_neg() % n;
        loop {
            let draw = self.next_u64();
            if draw >= threshold {
                return (draw % n) as usize;
            }
        }
    }

    /// Uniform float in `[0, 1)` with 53 bits of precision.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Index drawn with probability proportional to `weights[i]`.
    /// Returns `None` when no weight is positive.
    pub fn weighted(&mut self, weights: &[f64]) -> Option<usize> {
        let total: f64 = weights.iter().filter(|w| **w > 0.0).sum();
        if !total.is_finite() || total <= 0.0 {
            return None;
        }
        let target = self.unit() * total;
        let mut acc = 0.0;
        let mut last = None;
        for (i, &w) in weights.iter().enumerate() {
            if w > 0.0 {
                acc += w;
                last = Some(i);
                if target < acc {
                    return Some(i);
                }
            }
        }
        last
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}
