//! Small deterministic PRNG used everywhere randomness is needed.
//!
//! Reproducibility across platforms and library versions is a hard requirement
//! for the corpus splits and the synthetic corpora (their outputs are compared
//! byte-for-byte in tests), so instead of depending on an external generator
//! whose stream may change between releases, we pin two tiny well-known
//! algorithms with fixed constants:
//!
//! * seeding / seed mixing: SplitMix64, the finalizer from Steele et al.'s
//!   "Fast splittable pseudorandom number generators" (constants
//!   `0x9E37_79B9_7F4A_7C15`, `0xBF58_476D_1CE4_E5B9`, `0x94D0_49BB_1331_11EB`);
//! * the stream itself: Marsaglia's xorshift64* (shifts 12/25/27, multiplier
//!   `0x2545_F491_4F6C_DD1D`).
//!
//! Both are statistically fine for shuffling and for sampling test signals,
//! which is all we use them for.

/// One SplitMix64 step: advances `state` and returns the mixed output.
///
/// Used both as a stand-alone mixer (seed derivation) and to expand a user
/// seed into a non-zero xorshift state.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mix several values into one 64-bit seed. Order matters: each part is
/// XORed into the state and then run through one SplitMix64 step.
pub fn mix_seed(parts: &[u64]) -> u64 {
    let mut state: u64 = 0;
    for &p in parts {
        state ^= p;
        state = splitmix64(&mut state);
    }
    state
}

/// FNV-1a 64-bit hash, used to turn stratum labels and attack names into seed
/// material. Fixed constants per the FNV reference (offset basis
/// `0xCBF2_9CE4_8422_2325`, prime `0x0000_0100_0000_01B3`).
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Marsaglia xorshift64* generator.
///
/// The raw xorshift state must never be zero, so the constructor runs the seed
/// through SplitMix64 (which also decorrelates small consecutive seeds).
#[derive(Debug, Clone)]
pub struct XorShift64 {
    state: u64,
}

impl XorShift64 {
    pub fn new(seed: u64) -> Self {
        let mut s = seed;
        let mut state = splitmix64(&mut s);
        if state == 0 {
            state = 0x9E37_79B9_7F4A_7C15;
        }
        XorShift64 { state }
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform in [0, 1), using the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in [0, n). `n` must be non-zero.
    ///
    /// Plain modulo reduction: the bias for the n values we use (corpus sizes,
    /// segment counts) is on the order of n / 2^64 and irrelevant here, and
    /// keeping the reduction branch-free keeps the stream easy to describe.
    pub fn next_below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        self.next_u64() % n
    }

    /// Standard normal deviate via the Box-Muller transform.
    ///
    /// Draws two uniforms per call and discards the second output value; a
    /// little wasteful, but it keeps each deviate a pure function of the
    /// stream position, which makes the sampling order easy to reason about.
    pub fn next_gaussian(&mut self) -> f64 {
        // Guard against ln(0).
        let mut u1 = self.next_f64();
        if u1 < 1e-300 {
            u1 = 1e-300;
        }
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

/// In-place Fisher-Yates shuffle driven by `rng`.
///
/// Iterates from the back: `j = rng.next_below(i + 1)`, swap(i, j). Combined
/// with a sorted input this makes the permutation a pure function of the seed.
pub fn fisher_yates<T>(items: &mut [T], rng: &mut XorShift64) {
    for i in (1..items.len()).rev() {
        let j = rng.next_below(i as u64 + 1) as usize;
        items.swap(i, j);
    }
}
