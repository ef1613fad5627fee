//! Seed-portable uniform stream used by the instance generator.
//!
//! The generator state is xoshiro256** seeded through splitmix64:
//!
//! ```text
//! splitmix64:  x += 0x9e3779b97f4a7c15
//!              z = x
//!              z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9
//!              z = (z ^ (z >> 27)) * 0x94d049bb133111eb
//!              return z ^ (z >> 31)
//!
//! seeding:     s[0..4] = four successive splitmix64 outputs, x starting at `seed`
//!
//! xoshiro256**: out = rotl(s[1] * 5, 7) * 9
//!               t = s[1] << 17
//!               s[2] ^= s[0]; s[3] ^= s[1]; s[1] ^= s[2]; s[0] ^= s[3]
//!               s[2] ^= t;    s[3] = rotl(s[3], 45)
//! ```
//!
//! All arithmetic is wrapping on 64 bits. A uniform draw on `[0, 1)` is
//! `(out >> 11) * 2^-53`, which is exact in binary64, so any language with
//! 64-bit integers reproduces the same sequence of doubles.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

pub struct UniformStream {
    inner: Xoshiro256StarStar,
}

impl UniformStream {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: Xoshiro256StarStar::seed_from_u64(seed),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn next_unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[lo, hi)`.
    pub fn next_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_unit()
    }
}
