//! Sized generators and shrink functions.

use std::fmt;
use std::sync::Arc;

use crate::rng::{Seed, SeedError};

/// A generator: a pure function from a seed and a size to a value.
///
/// Generators may use the size as an upper bound on the magnitude of what
/// they produce, or ignore it entirely.
pub struct Gen<T> {
    run: Arc<dyn Fn(Seed, usize) -> T + Send + Sync>,
}

impl<T> Clone for Gen<T> {
    fn clone(&self) -> Self {
        Gen { run: Arc::clone(&self.run) }
    }
}

impl<T> fmt::Debug for Gen<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Gen")
    }
}

impl<T: 'static> Gen<T> {
    pub fn new(run: impl Fn(Seed, usize) -> T + Send + Sync + 'static) -> Self {
        Gen { run: Arc::new(run) }
    }

    pub fn run(&self, seed: Seed, size: usize) -> T {
        (self.run)(seed, size)
    }

    pub fn constant(value: T) -> Self
    where
        T: Clone + Send + Sync,
    {
        Gen::new(move |_, _| value.clone())
    }

    pub fn map<U: 'static>(self, f: impl Fn(T) -> U + Send + Sync + 'static) -> Gen<U> {
        Gen::new(move |seed, size| f(self.run(seed, size)))
    }

    /// Runs with a seed but a size computed from the incoming one.
    pub fn resize(self, f: impl Fn(usize) -> usize + Send + Sync + 'static) -> Gen<T> {
        Gen::new(move |seed, size| self.run(seed, f(size)))
    }
}

/// Uniform integers in `[lo, hi]`, ignoring the size.
pub fn gen_int(lo: i64, hi: i64) -> Result<Gen<i64>, SeedError> {
    if lo > hi {
        return Err(SeedError::EmptyRange { lo, hi });
    }
    Ok(Gen::new(move |seed, _| {
        seed.bounded(lo, hi).expect("range checked at construction").0
    }))
}

/// Lists whose length is at most the size.
pub fn gen_list<T: 'static>(elem: Gen<T>) -> Gen<Vec<T>> {
    Gen::new(move |seed, size| {
        let (len, mut seed) = seed
            .bounded(0, size as i64)
            .expect("size is non-negative");
        (0..len)
            .map(|_| {
                let (here, rest) = seed.split();
                seed = rest;
                elem.run(here, size)
            })
            .collect()
    })
}

type ShrinkFn<T> = dyn Fn(&T) -> Vec<T> + Send + Sync;

/// A shrink function: a finite, ordered list of smaller candidates.
pub struct Shrinker<T> {
    shrink: Arc<ShrinkFn<T>>,
}

impl<T> Clone for Shrinker<T> {
    fn clone(&self) -> Self {
        Shrinker { shrink: Arc::clone(&self.shrink) }
    }
}

impl<T> fmt::Debug for Shrinker<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Shrinker")
    }
}

impl<T: 'static> Shrinker<T> {
    pub fn new(shrink: impl Fn(&T) -> Vec<T> + Send + Sync + 'static) -> Self {
        Shrinker { shrink: Arc::new(shrink) }
    }

    /// A shrinker that never proposes anything.
    pub fn none() -> Self {
        Shrinker::new(|_| Vec::new())
    }

    pub fn candidates(&self, value: &T) -> Vec<T> {
        (self.shrink)(value)
    }
}

impl Shrinker<i64> {
    pub fn int() -> Self {
        Shrinker::new(|n| shrink_int(*n))
    }
}

impl<T: Clone + 'static> Shrinker<Vec<T>> {
    pub fn list(elem: Shrinker<T>) -> Self {
        Shrinker::new(move |xs: &Vec<T>| shrink_list(xs, &elem))
    }
}

/// Candidates for an integer: zero first, then `n - n/2`, `n - n/4`, ...
/// ending at `n - 1` (or `n + 1` when negative).
pub fn shrink_int(n: i64) -> Vec<i64> {
    if n == 0 {
        return Vec::new();
    }
    let mut out = vec![0];
    let mut step = n / 2;
    while step != 0 {
        out.push(n - step);
        step /= 2;
    }
    out
}

/// Candidates for a list: chunk removals from largest to smallest, then
/// element-wise shrinks from left to right.
pub fn shrink_list<T: Clone + 'static>(xs: &[T], elem: &Shrinker<T>) -> Vec<Vec<T>> {
    let n = xs.len();
    let mut out = Vec::new();
    let mut k = n;
    while k > 0 {
        let mut start = 0;
        while start < n {
            let end = (start + k).min(n);
            let mut shorter = Vec::with_capacity(n - (end - start));
            shorter.extend_from_slice(&xs[..start]);
            shorter.extend_from_slice(&xs[end..]);
            out.push(shorter);
            start += k;
        }
        k /= 2;
    }
    for (i, x) in xs.iter().enumerate() {
        for smaller in elem.candidates(x) {
            let mut next = xs.to_vec();
            next[i] = smaller;
            out.push(next);
        }
    }
    out
}

/// Number of constructors in a value, the size measure used for
/// counterexamples.
pub trait Constructors {
    fn constructors(&self) -> usize;
}

impl Constructors for () {
    fn constructors(&self) -> usize {
        1
    }
}

impl Constructors for i64 {
    fn constructors(&self) -> usize {
        1
    }
}

impl<T: Constructors> Constructors for Vec<T> {
    // One cons cell per element plus the terminating nil.
    fn constructors(&self) -> usize {
        1 + self.iter().map(|x| 1 + x.constructors()).sum::<usize>()
    }
}
