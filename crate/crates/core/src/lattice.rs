//! Lattice points of the discrete simplex `{k in N_0^d : |k|_1 <= n}`.
//!
//! Points are ordered colexicographically: the last coordinate is the most
//! significant, the first one varies fastest. `SimplexLattice::unrank` maps an
//! index back to its point so any contiguous index range can be walked
//! independently of the others.

use std::ops::Range;

use crate::error::{Error, Result};

/// Upper bound on the number of lattice points any single enumeration may visit.
pub const ENUMERATION_LIMIT: u128 = 1_000_000_000;

/// Counts of a multinomial cell, one per free category.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticePoint(pub Vec<u64>);

impl LatticePoint {
    pub fn new(counts: Vec<u64>) -> Self {
        Self(counts)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn counts(&self) -> &[u64] {
        &self.0
    }
}

impl From<Vec<u64>> for LatticePoint {
    fn from(v: Vec<u64>) -> Self {
        Self(v)
    }
}

impl<const D: usize> From<[u64; D]> for LatticePoint {
    fn from(v: [u64; D]) -> Self {
        Self(v.to_vec())
    }
}

/// `C(n + d, d)` saturating at `u128::MAX`.
pub fn simplex_count(d: usize, n: u64) -> u128 {
    // C(n+d, d) = prod_{j=1..d} (n + j) / j, exact at every step.
    let mut acc: u128 = 1;
    for j in 1..=d as u128 {
        acc = match acc.checked_mul(n as u128 + j) {
            Some(v) => v / j,
            None => return u128::MAX,
        };
    }
    acc
}

fn guarded(count: u128) -> Result<u64> {
    if count > ENUMERATION_LIMIT {
        Err(Error::TooLarge {
            count,
            limit: ENUMERATION_LIMIT,
        })
    } else {
        Ok(count as u64)
    }
}

/// The full simplex lattice of width `n` in `d` dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimplexLattice {
    d: usize,
    n: u64,
    len: u64,
}

impl SimplexLattice {
    pub fn new(d: usize, n: u64) -> Result<Self> {
        if d == 0 {
            return Err(Error::EmptyProbabilities);
        }
        let len = guarded(simplex_count(d, n))?;
        Ok(Self { d, n, len })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn width(&self) -> u64 {
        self.n
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Point at colexicographic position `idx`.
    pub fn unrank(&self, mut idx: u64) -> LatticePoint {
        debug_assert!(idx < self.len);
        let mut k = vec![0u64; self.d];
        let mut bound = self.n;
        for j in (1..self.d).rev() {
            // points with k_j = v fill a (j)-dimensional simplex of width bound - v
            let mut v = 0u64;
            loop {
                let block = simplex_count(j, bound - v) as u64;
                if idx < block {
                    break;
                }
                idx -= block;
                v += 1;
            }
            k[j] = v;
            bound -= v;
        }
        k[0] = idx;
        LatticePoint(k)
    }

    pub fn iter(&self) -> SimplexIter {
        self.iter_range(0..self.len)
    }

    /// Walks the points with colexicographic positions in `range`.
    pub fn iter_range(&self, range: Range<u64>) -> SimplexIter {
        let remaining = range.end.saturating_sub(range.start);
        let current = if remaining > 0 {
            self.unrank(range.start).0
        } else {
            vec![0; self.d]
        };
        let sum = current.iter().sum();
        SimplexIter {
            n: self.n,
            current,
            sum,
            remaining,
        }
    }
}

impl IntoIterator for &SimplexLattice {
    type Item = LatticePoint;
    type IntoIter = SimplexIter;

    fn into_iter(self) -> SimplexIter {
        self.iter()
    }
}

#[derive(Debug, Clone)]
pub struct SimplexIter {
    n: u64,
    current: Vec<u64>,
    sum: u64,
    remaining: u64,
}

impl SimplexIter {
    fn advance(&mut self) {
        for j in 0..self.current.len() {
            if self.sum < self.n {
                self.current[j] += 1;
                self.sum += 1;
                return;
            }
            // carry: reset coordinate j and bump the next one
            self.sum -= self.current[j];
            self.current[j] = 0;
        }
    }
}

impl Iterator for SimplexIter {
    type Item = LatticePoint;

    fn next(&mut self) -> Option<LatticePoint> {
        if self.remaining == 0 {
            return None;
        }
        let out = LatticePoint(self.current.clone());
        self.remaining -= 1;
        if self.remaining > 0 {
            self.advance();
        }
        Some(out)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let r = self.remaining as usize;
        (r, Some(r))
    }
}

impl ExactSizeIterator for SimplexIter {}

/// Every integer point of the box `lo ..= hi` (coordinate-wise), first coordinate fastest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoxLattice {
    lo: Vec<u64>,
    hi: Vec<u64>,
}

impl BoxLattice {
    pub fn new(lo: Vec<u64>, hi: Vec<u64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                actual: hi.len(),
            });
        }
        let mut count: u128 = 1;
        for (a, b) in lo.iter().zip(&hi) {
            let side = if b >= a { (b - a) as u128 + 1 } else { 0 };
            count = count.saturating_mul(side);
        }
        guarded(count)?;
        Ok(Self { lo, hi })
    }

    pub fn len(&self) -> u64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| if b >= a { b - a + 1 } else { 0 })
            .product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = LatticePoint> + '_ {
        let empty = self.is_empty();
        let mut current = self.lo.clone();
        let mut done = empty;
        std::iter::from_fn(move || {
            if done {
                return None;
            }
            let out = LatticePoint(current.clone());
            done = true;
            for ((c, &lo), &hi) in current.iter_mut().zip(&self.lo).zip(&self.hi) {
                if *c < hi {
                    *c += 1;
                    done = false;
                    break;
                }
                *c = lo;
            }
            Some(out)
        })
    }
}
