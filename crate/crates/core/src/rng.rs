//! Seed-derived random streams with a pinned, documented layout.
//!
//! Reproducibility contract (stream layout v1):
//! * every stream is a ChaCha8 generator keyed by a splitmix64 chain
//!   over `(seed, tag...)`, so independent units of work (replicate r,
//!   site i, ...) own independent streams and can run in any order;
//! * bounded integers use Lemire's multiply-shift rejection on raw
//!   `next_u64` draws;
//! * unit-interval doubles take the top 53 bits of one `next_u64`;
//! * Gaussian variates come from the Marsaglia polar method (two
//!   uniforms per accepted pair, second value cached).
//!
//! None of this delegates to distribution code in external crates, so
//! byte-identical streams survive dependency upgrades.

use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent ChaCha8 stream from a base seed and a list of
/// domain tags (replicate index, site index, stream role, ...).
pub fn stream(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    let mut state = seed ^ 0x6A09_E667_F3BC_C908;
    let _ = splitmix64(&mut state);
    for &t in tags {
        state ^= t.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let _ = splitmix64(&mut state);
    }
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Uniform integer in `[0, bound)` via Lemire's method (unbiased).
pub fn uniform_below(rng: &mut ChaCha8Rng, bound: u64) -> u64 {
    debug_assert!(bound > 0);
    let mut x = rng.next_u64();
    let mut m = (x as u128) * (bound as u128);
    let mut lo = m as u64;
    if lo < bound {
        let threshold = bound.wrapping_neg() % bound;
        while lo < threshold {
            x = rng.next_u64();
            m = (x as u128) * (bound as u128);
            lo = m as u64;
        }
    }
    (m >> 64) as u64
}

/// Uniform double in `[0, 1)` from the top 53 bits of one draw.
pub fn unit_f64(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// In-place Fisher-Yates shuffle.
pub fn shuffle<T>(rng: &mut ChaCha8Rng, slice: &mut [T]) {
    for i in (1..slice.len()).rev() {
        let j = uniform_below(rng, (i + 1) as u64) as usize;
        slice.swap(i, j);
    }
}

/// Shuffles the first `take` positions of `slice` (forward partial
/// Fisher-Yates) and records the swaps so the caller can undo them.
///
/// After the call, `slice[..take]` is a uniform ordered sample without
/// replacement from the whole slice.
pub fn partial_shuffle<T>(
    rng: &mut ChaCha8Rng,
    slice: &mut [T],
    take: usize,
    swaps: &mut Vec<(usize, usize)>,
) {
    swaps.clear();
    let n = slice.len();
    for t in 0..take.min(n) {
        let j = t + uniform_below(rng, (n - t) as u64) as usize;
        swaps.push((t, j));
        slice.swap(t, j);
    }
}

/// Reverts a [`partial_shuffle`] using its swap record.
pub fn undo_swaps<T>(slice: &mut [T], swaps: &[(usize, usize)]) {
    for &(a, b) in swaps.iter().rev() {
        slice.swap(a, b);
    }
}

/// `n!` if it fits below `cap`, else `None`.
pub fn factorial_capped(n: usize, cap: u64) -> Option<u64> {
    let mut acc: u64 = 1;
    for k in 2..=n as u64 {
        acc = acc.checked_mul(k)?;
        if acc > cap {
            return None;
        }
    }
    Some(acc)
}

/// The `rank`-th permutation of `0..len` in lexicographic order
/// (factorial number system unranking). Requires `rank < len!`.
pub fn unrank_permutation(mut rank: u64, len: usize) -> Vec<usize> {
    let mut factorials = Vec::with_capacity(len);
    let mut f: u64 = 1;
    factorials.push(1u64);
    for k in 1..len as u64 {
        f *= k;
        factorials.push(f);
    }
    let mut pool: Vec<usize> = (0..len).collect();
    let mut out = Vec::with_capacity(len);
    for pos in 0..len {
        let f = factorials[len - 1 - pos];
        let idx = (rank / f) as usize;
        rank %= f;
        out.push(pool.remove(idx));
    }
    out
}

/// Marsaglia polar Gaussian stream over ChaCha8 (stream layout v1).
pub struct GaussianStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl GaussianStream {
    pub fn new(rng: ChaCha8Rng) -> Self {
        Self { rng, spare: None }
    }

    /// One standard normal variate.
    pub fn sample(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        loop {
            let u = 2.0 * unit_f64(&mut self.rng) - 1.0;
            let v = 2.0 * unit_f64(&mut self.rng) - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let factor = libm::sqrt(-2.0 * libm::log(s) / s);
                self.spare = Some(v * factor);
                return u * factor;
            }
        }
    }

    /// Fills a vector with `n` variates scaled by `sd`.
    pub fn fill(&mut self, n: usize, sd: f64) -> Vec<f64> {
        (0..n).map(|_| sd * self.sample()).collect()
    }
}
