//! Short bit vectors (at most 64 coordinates) with the coordinatewise order,
//! fixed-weight ranking in colexicographic order, and enumeration of the
//! words lying above a given word within a weight budget.

use std::fmt;

use crate::{Error, Result};

pub const MAX_LEN: u32 = 64;

/// A word of `len` bits; bit `i` of the mask is coordinate `i`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitWord {
    len: u32,
    bits: u64,
}

#[inline]
pub(crate) fn low_mask(len: u32) -> u64 {
    if len >= 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

impl BitWord {
    pub fn new(len: u32, bits: u64) -> Result<Self> {
        if len > MAX_LEN {
            return Err(Error::usage(format!("word length {len} exceeds {MAX_LEN}")));
        }
        if bits & !low_mask(len) != 0 {
            return Err(Error::usage(format!("bits {bits:#x} do not fit in {len} coordinates")));
        }
        Ok(BitWord { len, bits })
    }

    /// Builds a word from bits that are already known to fit.
    #[inline]
    pub(crate) fn from_raw(len: u32, bits: u64) -> Self {
        debug_assert!(len <= MAX_LEN && bits & !low_mask(len) == 0);
        BitWord { len, bits }
    }

    pub fn zeros(len: u32) -> Result<Self> {
        Self::new(len, 0)
    }

    pub fn from_indices(len: u32, indices: &[u32]) -> Result<Self> {
        let mut bits = 0u64;
        for &i in indices {
            if i >= len {
                return Err(Error::usage(format!("index {i} out of range for length {len}")));
            }
            bits |= 1 << i;
        }
        Self::new(len, bits)
    }

    pub fn len(&self) -> u32 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn weight(&self) -> u32 {
        self.bits.count_ones()
    }

    pub fn get(&self, i: u32) -> bool {
        i < self.len && self.bits >> i & 1 == 1
    }

    /// Indices of set coordinates in ascending order.
    pub fn support(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.len).filter(move |&i| self.get(i))
    }

    /// True iff `other <= self` coordinatewise.
    pub fn dominates(&self, other: &BitWord) -> Result<bool> {
        if self.len != other.len {
            return Err(Error::usage(format!("length mismatch: {} vs {}", self.len, other.len)));
        }
        Ok(other.bits & self.bits == other.bits)
    }

    /// The first `k` coordinates.
    pub fn truncate(&self, k: u32) -> BitWord {
        let k = k.min(self.len);
        BitWord { len: k, bits: self.bits & low_mask(k) }
    }
}

impl fmt::Debug for BitWord {
    // coordinate 0 first
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("BitWord(")?;
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        f.write_str(")")
    }
}

/// Free-function form of [`BitWord::dominates`].
pub fn dominates(y: &BitWord, w: &BitWord) -> Result<bool> {
    y.dominates(w)
}

/// Binomial coefficient C(n, k) for n <= 64; saturates at `u64::MAX`
/// only for arguments outside that range.
pub fn binomial(n: u32, k: u32) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    u64::try_from(acc).unwrap_or(u64::MAX)
}

/// |{ y : y >= w, weight(y) <= max_weight }| without enumerating.
pub fn count_above(w: &BitWord, max_weight: u32) -> u64 {
    let base = w.weight();
    if base > max_weight {
        return 0;
    }
    let zeros = w.len - base;
    (0..=(max_weight - base).min(zeros))
        .map(|j| binomial(zeros, j))
        .fold(0u64, |acc, c| acc.saturating_add(c))
}

/// Parallel bit deposit: spreads the low bits of `src` onto the set bits of
/// `mask`, lowest first. Monotone in `src`.
#[inline]
fn deposit(mut src: u64, mut mask: u64) -> u64 {
    let mut out = 0;
    while mask != 0 && src != 0 {
        let low = mask & mask.wrapping_neg();
        if src & 1 == 1 {
            out |= low;
        }
        src >>= 1;
        mask ^= low;
    }
    out
}

/// Next integer with the same popcount (Gosper's hack); `None` past `limit`.
#[inline]
fn next_same_weight(x: u64, limit: u64) -> Option<u64> {
    let c = x & x.wrapping_neg();
    let r = x.checked_add(c)?;
    let next = (((r ^ x) >> 2) / c) | r;
    (next < limit).then_some(next)
}

/// All `y >= w` with `weight(y) <= max_weight`, ascending by integer value.
/// Empty when `w` already exceeds the budget.
pub fn enumerate_above(w: &BitWord, max_weight: u32) -> Vec<BitWord> {
    let base = w.weight();
    if base > max_weight {
        return Vec::new();
    }
    let free = !w.bits & low_mask(w.len);
    let zeros = free.count_ones();
    let extra = (max_weight - base).min(zeros);
    let limit = if zeros == 64 { u64::MAX } else { 1u64 << zeros };

    let mut subsets = Vec::with_capacity(count_above(w, max_weight) as usize);
    subsets.push(0u64);
    for size in 1..=extra {
        let mut s = low_mask(size);
        loop {
            subsets.push(s);
            match next_same_weight(s, limit) {
                Some(next) => s = next,
                None => break,
            }
        }
    }
    // deposit is monotone, so sorting the subset codes sorts the words
    subsets.sort_unstable();
    subsets.into_iter().map(|s| BitWord::from_raw(w.len, w.bits | deposit(s, free))).collect()
}

/// Colexicographic rank of a weight-`weight` word.
pub fn subset_rank(word: &BitWord, weight: u32) -> Result<u64> {
    if word.weight() != weight {
        return Err(Error::usage(format!("word has weight {}, expected {weight}", word.weight())));
    }
    Ok(word.support().enumerate().map(|(i, c)| binomial(c, i as u32 + 1)).sum())
}

/// Inverse of [`subset_rank`].
pub fn subset_unrank(rank: u64, len: u32, weight: u32) -> Result<BitWord> {
    if len > MAX_LEN || weight > len {
        return Err(Error::usage(format!("no weight-{weight} words of length {len}")));
    }
    let total = binomial(len, weight);
    if rank >= total {
        return Err(Error::usage(format!("rank {rank} out of range for C({len}, {weight}) = {total}")));
    }
    let mut rank = rank;
    let mut bits = 0u64;
    let mut c = len;
    for i in (1..=weight).rev() {
        // largest c with C(c, i) <= rank
        c -= 1;
        while binomial(c, i) > rank {
            c -= 1;
        }
        rank -= binomial(c, i);
        bits |= 1 << c;
    }
    Ok(BitWord::from_raw(len, bits))
}
