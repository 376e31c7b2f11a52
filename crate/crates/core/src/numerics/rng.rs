//! Counter-based random stream with splittable substreams.
//!
//! Every stage of a run (design, training shuffle, test set, ...) draws from
//! its own substream derived from the master seed, so changing how much
//! randomness one stage consumes never perturbs the others. The generator is
//! a Weyl counter pushed through the SplitMix64 finalizer: pure `u64`
//! arithmetic, identical output on every platform.

const WEYL: u64 = 0x9E37_79B9_7F4A_7C15;
const SPLIT: u64 = 0xD134_2543_DE82_EF95;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngStream {
    key: u64,
    counter: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            key: mix(seed ^ WEYL),
            counter: 0,
        }
    }

    /// Pure derivation of an independent child stream; does not consume
    /// draws from `self`.
    pub fn substream(&self, label: u64) -> Self {
        Self {
            key: mix(self.key ^ label.wrapping_add(1).wrapping_mul(SPLIT)),
            counter: 0,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix(self.key.wrapping_add(self.counter.wrapping_mul(WEYL)))
    }

    /// Uniform draw in `[0, 1)` with 53-bit resolution.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Unbiased uniform draw in `[0, n)` by rejection.
    pub fn next_below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "next_below needs n > 0");
        let zone = u64::MAX - (u64::MAX - n + 1) % n;
        loop {
            let v = self.next_u64();
            if v <= zone {
                return v % n;
            }
        }
    }

    /// Fisher-Yates shuffle driven by this stream.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.next_below(i as u64 + 1) as usize;
            xs.swap(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_sequence() {
        let mut a = RngStream::new(123);
        let mut b = RngStream::new(123);
        for _ in 0..100_000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn substreams_are_independent_of_parent_position() {
        let parent = RngStream::new(9);
        let early = parent.substream(3);
        let mut consumed = parent.clone();
        for _ in 0..57 {
            consumed.next_u64();
        }
        assert_eq!(early, consumed.substream(3));
        assert_ne!(parent.substream(3).key, parent.substream(4).key);
    }

    #[test]
    fn f64_in_unit_interval() {
        let mut rng = RngStream::new(2);
        let mut lo = 1.0f64;
        let mut hi = 0.0f64;
        for _ in 0..10_000 {
            let v = rng.next_f64();
            assert!((0.0..1.0).contains(&v));
            lo = lo.min(v);
            hi = hi.max(v);
        }
        assert!(lo < 0.01 && hi > 0.99, "draws cover the interval");
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut rng = RngStream::new(5);
        let mut xs: Vec<u32> = (0..100).collect();
        rng.shuffle(&mut xs);
        let mut sorted = xs.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..100).collect::<Vec<_>>());
        assert_ne!(xs, (0..100).collect::<Vec<_>>());
    }
}
