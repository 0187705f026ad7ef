//! Arithmetic in GF(2^n) for 2 <= n <= 24.
//!
//! Elements are stored as coefficient masks: bit `i` is the coefficient of
//! `z^i`. The same mask is the element's n-bit vector view, so the map
//! between field elements and bit words is the identity on masks.

use std::fmt;
use std::sync::OnceLock;

use crate::{Error, Result};

pub const MIN_DEGREE: u32 = 2;
pub const MAX_DEGREE: u32 = 24;

/// A field GF(2^n) given by its degree and defining polynomial.
///
/// Construct through [`FieldSpec::canonical`]; the modulus is the irreducible
/// polynomial of degree `n` with the smallest mask, so equal degrees always
/// give equal specs.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldSpec {
    n: u32,
    modulus: u32,
}

impl FieldSpec {
    pub fn canonical(n: u32) -> Result<Self> {
        if !(MIN_DEGREE..=MAX_DEGREE).contains(&n) {
            return Err(Error::usage(format!("field degree {n} outside {MIN_DEGREE}..={MAX_DEGREE}")));
        }
        let modulus = canonical_moduli()[n as usize];
        Ok(FieldSpec { n, modulus })
    }

    pub fn degree(&self) -> u32 {
        self.n
    }

    /// Modulus mask including the leading `z^n` term.
    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    pub fn order(&self) -> u64 {
        1u64 << self.n
    }

    pub fn mask(&self) -> u32 {
        (1u32 << self.n) - 1
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement { spec: *self, coeffs: 0 }
    }

    pub fn one(&self) -> FieldElement {
        FieldElement { spec: *self, coeffs: 1 }
    }

    pub fn element(&self, coeffs: u32) -> Result<FieldElement> {
        if coeffs > self.mask() {
            return Err(Error::usage(format!("coefficient mask {coeffs:#x} does not fit GF(2^{})", self.n)));
        }
        Ok(FieldElement { spec: *self, coeffs })
    }

    /// Multiplies two raw masks; both must already be reduced.
    #[inline]
    pub fn mul_raw(&self, x: u32, y: u32) -> u32 {
        reduce(clmul(x, y), self.modulus as u64, self.n)
    }
}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF(2^{}) mod {:#b}", self.n, self.modulus)
    }
}

/// Shorthand for [`FieldSpec::canonical`].
pub fn canonical_spec(n: u32) -> Result<FieldSpec> {
    FieldSpec::canonical(n)
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    spec: FieldSpec,
    coeffs: u32,
}

impl FieldElement {
    pub fn spec(&self) -> FieldSpec {
        self.spec
    }

    pub fn coeffs(&self) -> u32 {
        self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs == 0
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.spec != other.spec {
            return Err(Error::usage(format!("field mismatch: {:?} vs {:?}", self.spec, other.spec)));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(FieldElement { spec: self.spec, coeffs: self.coeffs ^ other.coeffs })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(FieldElement { spec: self.spec, coeffs: self.spec.mul_raw(self.coeffs, other.coeffs) })
    }

    /// Square-and-multiply exponentiation.
    pub fn pow(&self, mut exp: u64) -> Self {
        let spec = self.spec;
        let mut base = self.coeffs;
        let mut acc = 1u32;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = spec.mul_raw(acc, base);
            }
            base = spec.mul_raw(base, base);
            exp >>= 1;
        }
        FieldElement { spec, coeffs: acc }
    }

    /// Multiplicative inverse via x^(2^n - 2); `None` for zero.
    pub fn inverse(&self) -> Option<Self> {
        if self.is_zero() {
            None
        } else {
            Some(self.pow(self.spec.order() - 2))
        }
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#0width$b}", self.coeffs, width = self.spec.n as usize + 2)
    }
}

/// Carry-less product of two polynomials of degree < 32.
#[inline]
fn clmul(x: u32, y: u32) -> u64 {
    let (x, mut y) = (x as u64, y);
    let mut acc = 0u64;
    let mut shift = 0;
    while y != 0 {
        let tz = y.trailing_zeros();
        shift += tz;
        acc ^= x << shift;
        y >>= tz;
        y >>= 1;
        shift += 1;
    }
    acc
}

/// Reduces `value` modulo a degree-`n` polynomial.
#[inline]
fn reduce(mut value: u64, modulus: u64, n: u32) -> u32 {
    while value >> n != 0 {
        let top = 63 - value.leading_zeros();
        value ^= modulus << (top - n);
    }
    value as u32
}

fn poly_degree(p: u64) -> i32 {
    63 - p.leading_zeros() as i32
}

fn poly_mod(mut a: u64, b: u64) -> u64 {
    let db = poly_degree(b);
    while a != 0 && poly_degree(a) >= db {
        a ^= b << (poly_degree(a) - db);
    }
    a
}

fn poly_gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let r = poly_mod(a, b);
        a = b;
        b = r;
    }
    a
}

/// Ben-Or irreducibility test: `f` of degree `n` is irreducible iff
/// gcd(z^(2^i) - z, f) = 1 for every 1 <= i <= n/2.
pub(crate) fn is_irreducible(f: u64) -> bool {
    let n = poly_degree(f);
    if n < 1 {
        return false;
    }
    let n = n as u32;
    let z = 0b10u64;
    let mut power = z;
    for _ in 0..n / 2 {
        power = reduce(clmul(power as u32, power as u32), f, n) as u64;
        if poly_gcd(f, power ^ z) != 1 {
            return false;
        }
    }
    true
}

fn canonical_moduli() -> &'static [u32; MAX_DEGREE as usize + 1] {
    static TABLE: OnceLock<[u32; MAX_DEGREE as usize + 1]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = [0u32; MAX_DEGREE as usize + 1];
        for n in MIN_DEGREE..=MAX_DEGREE {
            let lead = 1u32 << n;
            table[n as usize] = (lead..lead << 1)
                .find(|&f| is_irreducible(f as u64))
                .expect("an irreducible polynomial exists in every degree");
        }
        table
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Shift-and-add multiplication with reduction at every step.
    fn peasant_mul(mut x: u32, mut y: u32, modulus: u32, n: u32) -> u32 {
        let mut acc = 0;
        while y != 0 {
            if y & 1 == 1 {
                acc ^= x;
            }
            y >>= 1;
            x <<= 1;
            if x >> n & 1 == 1 {
                x ^= modulus;
            }
        }
        acc
    }

    /// Trial division by every polynomial of degree 1..=n/2.
    fn irreducible_by_trial_division(f: u64) -> bool {
        let n = poly_degree(f) as u32;
        (2u64..1 << (n / 2 + 1)).all(|d| poly_mod(f, d) != 0)
    }

    fn el(spec: FieldSpec, c: u32) -> FieldElement {
        spec.element(c).unwrap()
    }

    #[test]
    fn add_examples() {
        let f = canonical_spec(3).unwrap();
        assert_eq!(el(f, 0b101).add(&el(f, 0b101)).unwrap().coeffs(), 0);
        assert_eq!(el(f, 0b101).add(&el(f, 0)).unwrap().coeffs(), 0b101);
        assert_eq!(el(f, 0b011).add(&el(f, 0b110)).unwrap().coeffs(), 0b101);
    }

    #[test]
    fn mul_examples() {
        let f = canonical_spec(3).unwrap();
        for y in 0..8 {
            assert_eq!(f.one().mul(&el(f, y)).unwrap().coeffs(), y);
        }
        assert_eq!(peasant_mul(0b010, 0b100, 0b1011, 3), 0b011);
        assert_eq!(peasant_mul(0b010, 0b110, 0b1011, 3), 0b111);
        assert_eq!(el(f, 0b010).mul(&el(f, 0b100)).unwrap().coeffs(), 0b011);
        assert_eq!(el(f, 0b010).mul(&el(f, 0b110)).unwrap().coeffs(), 0b111);
    }

    #[test]
    fn canonical_small_degrees() {
        assert_eq!(canonical_spec(2).unwrap().modulus(), 0b111);
        assert_eq!(canonical_spec(3).unwrap().modulus(), 0b1011);
        assert_eq!(canonical_spec(4).unwrap().modulus(), 0b10011);
        // the smallest irreducible found by the oracle alone
        for n in 2..=10u32 {
            let lead = 1u64 << n;
            let first = (lead..lead << 1).find(|&f| irreducible_by_trial_division(f)).unwrap();
            assert_eq!(canonical_spec(n).unwrap().modulus() as u64, first, "n={n}");
        }
    }

    #[test]
    fn canonical_moduli_pass_trial_division() {
        for n in MIN_DEGREE..=MAX_DEGREE {
            let spec = canonical_spec(n).unwrap();
            assert_eq!(poly_degree(spec.modulus() as u64), n as i32);
            assert!(irreducible_by_trial_division(spec.modulus() as u64), "n={n}");
        }
    }

    #[test]
    fn ben_or_agrees_with_trial_division() {
        for f in 2u64..1 << 11 {
            assert_eq!(is_irreducible(f), irreducible_by_trial_division(f), "f={f:#b}");
        }
    }

    #[test]
    fn degree_out_of_range() {
        assert!(matches!(canonical_spec(1), Err(Error::Usage(_))));
        assert!(matches!(canonical_spec(25), Err(Error::Usage(_))));
    }

    #[test]
    fn mismatched_fields_rejected() {
        let a = canonical_spec(3).unwrap().one();
        let b = canonical_spec(4).unwrap().one();
        assert!(matches!(a.add(&b), Err(Error::Usage(_))));
        assert!(matches!(a.mul(&b), Err(Error::Usage(_))));
    }

    #[test]
    fn mul_matches_peasant_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in MIN_DEGREE..=MAX_DEGREE {
            let f = canonical_spec(n).unwrap();
            for _ in 0..2000 {
                let (x, y) = (rng.gen::<u32>() & f.mask(), rng.gen::<u32>() & f.mask());
                assert_eq!(f.mul_raw(x, y), peasant_mul(x, y, f.modulus(), n));
            }
        }
    }

    #[test]
    fn field_axioms_and_fermat() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [3u32, 8, 12, 16] {
            let f = canonical_spec(n).unwrap();
            for _ in 0..10_000 {
                let [x, y, z] = [0; 3].map(|_| el(f, rng.gen::<u32>() & f.mask()));
                assert_eq!(x.mul(&y).unwrap(), y.mul(&x).unwrap());
                assert_eq!(x.mul(&y).unwrap().mul(&z).unwrap(), x.mul(&y.mul(&z).unwrap()).unwrap());
                assert_eq!(
                    x.mul(&y.add(&z).unwrap()).unwrap(),
                    x.mul(&y).unwrap().add(&x.mul(&z).unwrap()).unwrap()
                );
                if !x.is_zero() {
                    assert_eq!(x.pow(f.order() - 1), f.one());
                    assert_eq!(x.mul(&x.inverse().unwrap()).unwrap(), f.one());
                }
            }
        }
    }
}
