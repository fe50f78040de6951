//! Labeled, seeded random streams.
//!
//! A stream is identified by `(seed, label)`. Its xoshiro256** state is the
//! next four outputs of splitmix64 seeded with `seed ^ hash64(label)`, where
//! `hash64` is 64-bit FNV-1a over the UTF-8 label. Both algorithms are part of
//! file-format version 1 and must not change without bumping it.

use alloc::format;
use alloc::string::String;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a.
pub fn hash64(label: &str) -> u64 {
    label.bytes().fold(FNV_OFFSET, |h, b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

fn splitmix64(x: &mut u64) -> u64 {
    *x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A deterministic random stream. Deliberately not `Clone`: concurrent tasks
/// derive their own stream with [`RngStream::substream`].
#[derive(Debug)]
pub struct RngStream {
    seed: u64,
    label: String,
    s: [u64; 4],
}

impl RngStream {
    pub fn new(seed: u64, label: &str) -> Self {
        let mut x = seed ^ hash64(label);
        let s = [
            splitmix64(&mut x),
            splitmix64(&mut x),
            splitmix64(&mut x),
            splitmix64(&mut x),
        ];
        RngStream {
            seed,
            label: String::from(label),
            s,
        }
    }

    /// Child stream labeled `"<parent>/<name>"`, independent of how much of
    /// the parent has been consumed.
    pub fn substream(&self, name: &str) -> Self {
        if self.label.is_empty() {
            RngStream::new(self.seed, name)
        } else {
            RngStream::new(self.seed, &format!("{}/{}", self.label, name))
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.s;
        let out = s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        out
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[lo, hi)`.
    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `[0, n)`, unbiased (Lemire's multiply-and-reject).
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let mut m = (self.next_u64() as u128) * (n as u128);
        if (m as u64) < n {
            let threshold = n.wrapping_neg() % n;
            while (m as u64) < threshold {
                m = (self.next_u64() as u128) * (n as u128);
            }
        }
        (m >> 64) as u64
    }

    /// Standard normal via Box-Muller; consumes exactly two outputs.
    pub fn standard_normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform(); // (0, 1]
        let u2 = self.uniform();
        libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(core::f64::consts::TAU * u2)
    }

    pub fn normal(&mut self, mean: f64, sd: f64) -> f64 {
        mean + sd * self.standard_normal()
    }

    /// Poisson variate. Knuth's product method on chunks of mean <= 30; the sum
    /// of independent Poisson chunks is Poisson with the total mean.
    pub fn poisson(&mut self, lambda: f64) -> u64 {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return 0;
        }
        const CHUNK: f64 = 30.0;
        let mut remaining = lambda;
        let mut total = 0;
        while remaining > 0.0 {
            let l = remaining.min(CHUNK);
            remaining -= l;
            let limit = libm::exp(-l);
            let mut p = 1.0;
            loop {
                p *= self.uniform();
                if p <= limit {
                    break;
                }
                total += 1;
            }
        }
        total
    }

    /// Fisher-Yates shuffle.
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
    use alloc::vec::Vec;
    use rand_core::{Rng, SeedableRng};
    use rand_xoshiro::Xoshiro256StarStar;

    #[test]
    fn fnv1a_reference_values() {
        assert_eq!(hash64(""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(hash64("a"), 0xaf63_dc4c_8601_ec8c);
        assert_eq!(hash64("foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn matches_reference_xoshiro256starstar() {
        for seed in [0u64, 1, 42, u64::MAX, 0xdead_beef] {
            for label in ["", "field", "perm:17"] {
                let mut ours = RngStream::new(seed, label);
                let mut reference = Xoshiro256StarStar::seed_from_u64(seed ^ hash64(label));
                for _ in 0..1000 {
                    assert_eq!(ours.next_u64(), reference.next_u64());
                }
            }
        }
    }

    #[test]
    fn identical_streams_for_a_million_draws() {
        let mut a = RngStream::new(7, "run:3");
        let mut b = RngStream::new(7, "run:3");
        assert!((0..1_000_000).all(|_| a.next_u64() == b.next_u64()));
    }

    #[test]
    fn label_changes_stream() {
        for seed in 0..64u64 {
            let first = |l: &str| RngStream::new(seed, l).next_u64();
            assert_ne!(first("run:0"), first("run:1"));
            assert_ne!(first("field"), first("field/patch"));
        }
    }

    #[test]
    fn substream_label_is_hierarchical() {
        let parent = RngStream::new(3, "exp2");
        let mut child = parent.substream("run:4");
        assert_eq!(child.label(), "exp2/run:4");
        assert_eq!(child.next_u64(), RngStream::new(3, "exp2/run:4").next_u64());
    }

    #[test]
    fn below_is_in_range_and_covers() {
        let mut r = RngStream::new(1, "below");
        let mut seen = [0u32; 7];
        for _ in 0..7000 {
            seen[r.below(7) as usize] += 1;
        }
        assert!(seen.iter().all(|&c| c > 800 && c < 1200), "{seen:?}");
    }

    #[test]
    fn distribution_moments() {
        let mut r = RngStream::new(11, "moments");
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| r.standard_normal()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.01 && (var - 1.0).abs() < 0.02, "{mean} {var}");

        for lambda in [0.3, 8.0, 75.0] {
            let ks: Vec<f64> = (0..50_000).map(|_| r.poisson(lambda) as f64).collect();
            let m = ks.iter().sum::<f64>() / ks.len() as f64;
            let v = ks.iter().map(|k| (k - m) * (k - m)).sum::<f64>() / ks.len() as f64;
            assert!((m - lambda).abs() < 0.05 * lambda.max(1.0), "{lambda}: {m}");
            assert!((v - lambda).abs() < 0.1 * lambda.max(1.0), "{lambda}: {v}");
        }
        assert_eq!(r.poisson(0.0), 0);
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut r = RngStream::new(5, "shuffle");
        let mut v: Vec<u32> = (0..50).collect();
        r.shuffle(&mut v);
        let mut sorted = v.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..50).collect::<Vec<_>>());
        assert_ne!(v, sorted);
    }
}
