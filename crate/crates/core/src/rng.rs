//! Counter-based random streams.
//!
//! Every subsystem draws from its own labelled stream. A stream is the pair
//! `(key, counter)`: the key is derived from the run seed and the label, and
//! output `i` is a SplitMix64 finalisation of `key + i * GOLDEN`. Output is a
//! pure function of `(seed, label, counter)`, so toggling one subsystem never
//! shifts the draws of another.

use crate::hash::fnv1a64;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline(always)]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RngStream {
    label: String,
    seed: u64,
    key: u64,
    counter: u64,
}

impl RngStream {
    pub fn new(seed: u64, label: &str) -> Self {
        let key = mix64(seed ^ mix64(fnv1a64(label.as_bytes())));
        Self {
            label: label.to_owned(),
            seed,
            key,
            counter: 0,
        }
    }

    /// Rebuilds a stream at a given position (checkpoint restore).
    pub fn at(seed: u64, label: &str, counter: u64) -> Self {
        let mut s = Self::new(seed, label);
        s.counter = counter;
        s
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    #[inline(always)]
    pub fn next_u64(&mut self) -> u64 {
        let out = mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)));
        self.counter = self.counter.wrapping_add(1);
        out
    }

    /// Uniform fraction in `[0, 1)`: the top 53 bits scaled by 2^-53.
    #[inline(always)]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Integer in `[0, bound)` by 64x64->128 multiply-high. `bound` must be > 0.
    #[inline(always)]
    pub fn below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        ((self.next_u64() as u128 * bound as u128) >> 64) as u64
    }

    /// `true` with probability `p` (`next_f64() < p`).
    #[inline(always)]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// Number of failures before the next success of a Bernoulli(p) process,
    /// used to skip over long runs of untouched cells. Returns `u64::MAX` for
    /// `p <= 0`. Consumes exactly one draw when `0 < p < 1`, none otherwise.
    pub fn geometric_skip(&mut self, p: f64) -> u64 {
        if p <= 0.0 {
            return u64::MAX;
        }
        if p >= 1.0 {
            return 0;
        }
        // 1 - u lies in (0, 1], so the log is finite.
        let u = 1.0 - self.next_f64();
        let k = (u.ln() / (1.0 - p).ln()).floor();
        if k >= u64::MAX as f64 {
            u64::MAX
        } else {
            k as u64
        }
    }

    /// Fisher-Yates shuffle driven by `below`.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_and_label_repeat() {
        let mut a = RngStream::new(1, "soup");
        let mut b = RngStream::new(1, "soup");
        let xs: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        assert_eq!(xs, ys);
    }

    #[test]
    fn labels_separate_streams() {
        let mut a = RngStream::new(1, "soup");
        let mut b = RngStream::new(1, "chem");
        let xs: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        assert!(xs.iter().zip(&ys).all(|(x, y)| x != y));
    }

    #[test]
    fn fraction_range() {
        let mut r = RngStream::new(9, "range");
        for _ in 0..1_000_000 {
            let f = r.next_f64();
            assert!((0.0..1.0).contains(&f));
        }
    }

    #[test]
    fn restore_continues_sequence() {
        let mut a = RngStream::new(5, "x");
        for _ in 0..17 {
            a.next_u64();
        }
        let mut b = RngStream::at(5, "x", a.counter());
        assert_eq!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn below_stays_in_bounds() {
        let mut r = RngStream::new(3, "b");
        for bound in 1..200u64 {
            for _ in 0..50 {
                assert!(r.below(bound) < bound);
            }
        }
    }

    #[test]
    fn geometric_skip_mean() {
        // Mean of Geometric(p) failures is (1-p)/p.
        let mut r = RngStream::new(11, "g");
        let p = 0.01;
        let n = 200_000;
        let total: u64 = (0..n).map(|_| r.geometric_skip(p)).sum();
        let mean = total as f64 / n as f64;
        assert!((mean - 99.0).abs() < 1.5, "mean {mean}");
        assert_eq!(r.geometric_skip(1.0), 0);
        assert_eq!(r.geometric_skip(0.0), u64::MAX);
    }
}
