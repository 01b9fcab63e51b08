//! Splittable pseudo-random seeds.
//!
//! A [`Seed`] is an immutable SplitMix64 state: a 64-bit counter plus an odd
//! increment ("gamma"). Every operation is pure and returns the successor seed,
//! so testers and shrink workers can each own a private stream derived by
//! [`Seed::split`] without ever sharing mutable random state.
//!
//! The mixing functions follow the SplitMix64 reference generator
//! (<https://prng.di.unimi.it/splitmix64.c>) and the gamma derivation of
//! `java.util.SplittableRandom`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Increment used for root seeds (2^64 / phi, forced odd).
pub const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// A splittable SplitMix64 state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Seed {
    state: u64,
    gamma: u64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SeedError {
    #[error("gamma must be odd, got {0}")]
    EvenGamma(u64),
    #[error("malformed seed {0:?}, expected \"<state>:<gamma>\"")]
    Malformed(String),
    #[error("empty range: lo {lo} > hi {hi}")]
    EmptyRange { lo: i64, hi: i64 },
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn mix_gamma(z: u64) -> u64 {
    let mut z = (z ^ (z >> 33)).wrapping_mul(0xff51_afd7_ed55_8ccd);
    z = (z ^ (z >> 33)).wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    z = (z ^ (z >> 33)) | 1;
    // Gammas with too few bit transitions make weak streams.
    if (z ^ (z >> 1)).count_ones() < 24 {
        z ^ 0xaaaa_aaaa_aaaa_aaaa
    } else {
        z
    }
}

impl Seed {
    /// Root seed with the golden gamma.
    pub fn new(state: u64) -> Self {
        Seed { state, gamma: GOLDEN_GAMMA }
    }

    pub fn from_parts(state: u64, gamma: u64) -> Result<Self, SeedError> {
        if gamma & 1 == 0 {
            return Err(SeedError::EvenGamma(gamma));
        }
        Ok(Seed { state, gamma })
    }

    /// A root seed derived from the wall clock and process id.
    pub fn from_entropy() -> Self {
        let nanos = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_nanos() as u64)
            .unwrap_or(0);
        Seed::new(mix64(nanos ^ (u64::from(std::process::id()) << 32)))
    }

    pub fn state(&self) -> u64 {
        self.state
    }

    pub fn gamma(&self) -> u64 {
        self.gamma
    }

    fn advance(self) -> (u64, Seed) {
        let state = self.state.wrapping_add(self.gamma);
        (state, Seed { state, gamma: self.gamma })
    }

    pub fn next_u64(self) -> (u64, Seed) {
        let (z, next) = self.advance();
        (mix64(z), next)
    }

    /// Splits into two seeds with independent streams.
    pub fn split(self) -> (Seed, Seed) {
        let (state, s1) = self.next_u64();
        let (g, s2) = s1.advance();
        let right = Seed { state, gamma: mix_gamma(g) };
        (s2, right)
    }

    /// Uniform integer in `[lo, hi]`, by rejection sampling.
    pub fn bounded(self, lo: i64, hi: i64) -> Result<(i64, Seed), SeedError> {
        if lo > hi {
            return Err(SeedError::EmptyRange { lo, hi });
        }
        let span = (hi as u64).wrapping_sub(lo as u64).wrapping_add(1);
        let mut seed = self;
        if span == 0 {
            // The full 64-bit range.
            let (v, next) = seed.next_u64();
            return Ok((v as i64, next));
        }
        // Values below the threshold would bias the modulo.
        let threshold = span.wrapping_neg() % span;
        loop {
            let (v, next) = seed.next_u64();
            seed = next;
            if v >= threshold {
                return Ok(((lo as u64).wrapping_add(v % span) as i64, seed));
            }
        }
    }

    /// An endless iterator of child seeds, each split off the one before.
    pub fn children(self) -> impl Iterator<Item = Seed> {
        std::iter::successors(Some(self.split()), |(_, rest)| Some(rest.split()))
            .map(|(child, _)| child)
    }
}

impl fmt::Display for Seed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.state, self.gamma)
    }
}

impl FromStr for Seed {
    type Err = SeedError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let malformed = || SeedError::Malformed(s.to_string());
        let (state, gamma) = s.trim().split_once(':').ok_or_else(malformed)?;
        let state = state.parse::<u64>().map_err(|_| malformed())?;
        let gamma = gamma.parse::<u64>().map_err(|_| malformed())?;
        Seed::from_parts(state, gamma)
    }
}
