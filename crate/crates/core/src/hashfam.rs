//! The truncated affine family `H_{a,b}(x) = (a x + b)` keeping the first
//! `k - l` bits, plus exhaustive audits of how well it spreads small sets.
//!
//! Both audits use the fact that for a fixed `a`, changing `b` only XORs a
//! constant into every output, which permutes the output space. Image sizes
//! and distances from uniform therefore depend on `a` alone, so the loops
//! run over `2^n` values instead of all `2^{2n}` pairs.

use std::collections::HashSet;

use crate::bitwords::{low_mask, BitWord};
use crate::gf2n::{FieldElement, FieldSpec};
use crate::{Error, Result};

/// Largest field degree for [`image_fraction_audit`].
pub const AUDIT_MAX_N: u32 = 12;
/// Largest field degree for [`lhl_exact_distance`].
pub const DISTANCE_MAX_N: u32 = 6;

/// One member of the family: the pair `(a, b)` and the output shape.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HashIndex {
    a: FieldElement,
    b: FieldElement,
    k: u32,
    l: u32,
}

impl HashIndex {
    pub fn new(a: FieldElement, b: FieldElement, k: u32, l: u32) -> Result<Self> {
        if a.spec() != b.spec() {
            return Err(Error::usage("hash coefficients live in different fields"));
        }
        let n = a.spec().degree();
        if l > k || k > n {
            return Err(Error::usage(format!("need l <= k <= n, got l={l} k={k} n={n}")));
        }
        Ok(HashIndex { a, b, k, l })
    }

    pub fn a(&self) -> FieldElement {
        self.a
    }

    pub fn b(&self) -> FieldElement {
        self.b
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    pub fn spec(&self) -> FieldSpec {
        self.a.spec()
    }

    /// Output length `k - l`.
    pub fn output_len(&self) -> u32 {
        self.k - self.l
    }

    /// `(a x + b)` truncated to coordinates `0..k-l`.
    pub fn apply(&self, x: &BitWord) -> Result<BitWord> {
        let n = self.spec().degree();
        if x.len() != n {
            return Err(Error::usage(format!("hash input has {} bits, expected {n}", x.len())));
        }
        let out =
            apply_raw(self.spec(), self.a.coeffs(), self.b.coeffs(), x.bits() as u32, self.output_len());
        Ok(BitWord::from_raw(self.output_len(), out))
    }

    /// The 2n-bit side-block encoding: `a` in coordinates `0..n`, `b` in `n..2n`.
    pub fn to_side_word(&self) -> BitWord {
        let n = self.spec().degree();
        BitWord::from_raw(2 * n, self.a.coeffs() as u64 | (self.b.coeffs() as u64) << n)
    }

    pub fn from_side_word(spec: FieldSpec, word: &BitWord, k: u32, l: u32) -> Result<Self> {
        let n = spec.degree();
        if word.len() != 2 * n {
            return Err(Error::usage(format!("side word has {} bits, expected {}", word.len(), 2 * n)));
        }
        let a = spec.element((word.bits() & low_mask(n)) as u32)?;
        let b = spec.element((word.bits() >> n) as u32)?;
        HashIndex::new(a, b, k, l)
    }
}

/// Raw-mask form of [`HashIndex::apply`].
#[inline]
pub(crate) fn apply_raw(spec: FieldSpec, a: u32, b: u32, x: u32, out_len: u32) -> u64 {
    ((spec.mul_raw(a, x) ^ b) as u64) & low_mask(out_len)
}

pub fn hash_apply(h: &HashIndex, x: &BitWord) -> Result<BitWord> {
    h.apply(x)
}

/// Checks `H_{a,b}(x) == H_{a,0}(x) XOR b_[k-l]`.
pub fn affine_shift_identity_check(h: &HashIndex, x: &BitWord) -> Result<bool> {
    let linear = HashIndex::new(h.a, h.spec().zero(), h.k, h.l)?;
    let shift = h.b.coeffs() as u64 & low_mask(h.output_len());
    Ok(h.apply(x)?.bits() == linear.apply(x)?.bits() ^ shift)
}

fn check_shape(n: u32, k: u32, l: u32, max_n: u32) -> Result<FieldSpec> {
    if n > max_n {
        return Err(Error::usage(format!("audit limited to n <= {max_n}, got {n}")));
    }
    if l > k || k > n {
        return Err(Error::usage(format!("need l <= k <= n, got l={l} k={k} n={n}")));
    }
    FieldSpec::canonical(n)
}

fn check_set(set: &[BitWord], n: u32) -> Result<Vec<u32>> {
    let mut seen = HashSet::with_capacity(set.len());
    set.iter()
        .map(|y| {
            if y.len() != n {
                return Err(Error::usage(format!("set element has {} bits, expected {n}", y.len())));
            }
            if !seen.insert(y.bits()) {
                return Err(Error::usage(format!("duplicate set element {y:?}")));
            }
            Ok(y.bits() as u32)
        })
        .collect()
}

/// Size of `{ a y truncated : y in set }`.
fn image_size(spec: FieldSpec, a: u32, set: &[u32], out_len: u32, seen: &mut [bool]) -> usize {
    seen.fill(false);
    let mut size = 0;
    for &y in set {
        let z = apply_raw(spec, a, 0, y, out_len) as usize;
        if !seen[z] {
            seen[z] = true;
            size += 1;
        }
    }
    size
}

/// Largest fraction, over the given sets, of family members whose image of
/// the set has at most `2^{k-l} (1 - 2^{-l/4})` elements. Exact over all
/// `2^{2n}` members.
pub fn image_fraction_audit(n: u32, k: u32, l: u32, sets: &[Vec<BitWord>]) -> Result<f64> {
    let spec = check_shape(n, k, l, AUDIT_MAX_N)?;
    let out_len = k - l;
    let threshold = bad_image_threshold(k, l);
    let mut seen = vec![false; 1 << out_len];
    let mut worst = 0.0f64;
    for set in sets {
        let set = check_set(set, n)?;
        if (set.len() as u64) < 1 << k {
            return Err(Error::usage(format!("set of size {} is smaller than 2^{k}", set.len())));
        }
        let bad = (0..spec.order() as u32)
            .filter(|&a| image_size(spec, a, &set, out_len, &mut seen) as f64 <= threshold)
            .count();
        // each bad a accounts for all 2^n values of b
        worst = worst.max(bad as f64 / spec.order() as f64);
    }
    Ok(worst)
}

/// The image-size cutoff `2^{k-l} (1 - 2^{-l/4})`.
pub fn bad_image_threshold(k: u32, l: u32) -> f64 {
    2f64.powi((k - l) as i32) * (1.0 - 2f64.powf(-(l as f64) / 4.0))
}

/// Exact statistical distance between `(a, b, H_{a,b}(y))` for uniform
/// `a, b` and `y` uniform on `set`, and the uniform distribution on
/// `GF(2^n)^2 x {0,1}^{k-l}`.
pub fn lhl_exact_distance(n: u32, k: u32, l: u32, set: &[BitWord]) -> Result<f64> {
    let spec = check_shape(n, k, l, DISTANCE_MAX_N)?;
    let set = check_set(set, n)?;
    if set.len() as u64 != 1 << k {
        return Err(Error::usage(format!("set has {} elements, expected 2^{k}", set.len())));
    }
    let out_len = k - l;
    let outputs = 1usize << out_len;
    let uniform = 1.0 / outputs as f64;
    let mut counts = vec![0u64; outputs];
    let mut total = 0.0;
    for a in 0..spec.order() as u32 {
        counts.fill(0);
        for &y in &set {
            counts[apply_raw(spec, a, 0, y, out_len) as usize] += 1;
        }
        let l1: f64 = counts.iter().map(|&c| (c as f64 / set.len() as f64 - uniform).abs()).sum();
        total += 0.5 * l1;
    }
    Ok(total / spec.order() as f64)
}
