//! Prime field arithmetic.
//!
//! [`FieldSpec`] carries the modulus and does arithmetic on raw canonical
//! representatives (`u64` in `[0, p)`); the matrix and code layers use this
//! form directly. [`FieldElement`] is the checked, self-describing element
//! type used at API boundaries.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The prime field F_p.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct FieldSpec {
    p: u64,
}

impl FieldSpec {
    /// Builds F_p, rejecting composite or oversized moduli.
    pub fn new(p: u64) -> Result<Self> {
        if p >= 1 << 32 {
            return Err(Error::ModulusTooLarge(p));
        }
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        Ok(FieldSpec { p })
    }

    /// Smallest prime field with at least `n` elements.
    pub fn smallest_at_least(n: u64) -> Result<Self> {
        let mut p = n.max(2);
        while !is_prime(p) {
            p += 1;
        }
        Self::new(p)
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.p
    }

    /// Wraps a canonical value, rejecting anything outside `[0, p)`.
    pub fn element(&self, value: u64) -> Result<FieldElement> {
        if value >= self.p {
            return Err(Error::OutOfRange { value, p: self.p });
        }
        Ok(FieldElement { value, field: *self })
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement { value: 0, field: *self }
    }

    pub fn one(&self) -> FieldElement {
        FieldElement { value: 1 % self.p, field: *self }
    }

    /// Reduces an arbitrary signed integer.
    #[inline]
    pub fn reduce(&self, v: i64) -> u64 {
        v.rem_euclid(self.p as i64) as u64
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        // p < 2^32 so the product fits in u64
        (a * b) % self.p
    }

    /// Square-and-multiply exponentiation.
    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1 % self.p;
        base %= self.p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via Fermat's little theorem.
    pub fn inv(&self, a: u64) -> Result<u64> {
        if a.is_multiple_of(self.p) {
            return Err(Error::DivisionByZero);
        }
        Ok(self.pow(a, self.p - 2))
    }

    pub(crate) fn check_same(&self, other: &FieldSpec) -> Result<()> {
        if self.p != other.p {
            return Err(Error::FieldMismatch { left: self.p, right: other.p });
        }
        Ok(())
    }
}

impl<'de> Deserialize<'de> for FieldSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            p: u64,
        }
        let raw = Raw::deserialize(d)?;
        FieldSpec::new(raw.p).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}", self.p)
    }
}

/// Deterministic trial division; moduli are below 2^32 so this is at most
/// 2^16 iterations.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n.is_multiple_of(2) {
        return false;
    }
    let mut d = 3;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// An element of F_p tagged with its field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u64,
    field: FieldSpec,
}

impl FieldElement {
    #[inline]
    pub fn value(&self) -> u64 {
        self.value
    }

    #[inline]
    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    pub fn add(&self, other: &FieldElement) -> Result<FieldElement> {
        self.field.check_same(&other.field)?;
        Ok(self.with(self.field.add(self.value, other.value)))
    }

    pub fn sub(&self, other: &FieldElement) -> Result<FieldElement> {
        self.field.check_same(&other.field)?;
        Ok(self.with(self.field.sub(self.value, other.value)))
    }

    pub fn mul(&self, other: &FieldElement) -> Result<FieldElement> {
        self.field.check_same(&other.field)?;
        Ok(self.with(self.field.mul(self.value, other.value)))
    }

    pub fn neg(&self) -> FieldElement {
        self.with(self.field.neg(self.value))
    }

    pub fn inv(&self) -> Result<FieldElement> {
        Ok(self.with(self.field.inv(self.value)?))
    }

    pub fn pow(&self, exp: u64) -> FieldElement {
        self.with(self.field.pow(self.value, exp))
    }

    fn with(&self, value: u64) -> FieldElement {
        FieldElement { value, field: self.field }
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(p: u64) -> FieldSpec {
        FieldSpec::new(p).unwrap()
    }

    fn e(field: FieldSpec, v: u64) -> FieldElement {
        field.element(v).unwrap()
    }

    #[test]
    fn construction() {
        assert!(FieldSpec::new(5).is_ok());
        assert_eq!(FieldSpec::new(4), Err(Error::NotPrime(4)));
        assert_eq!(FieldSpec::new(1), Err(Error::NotPrime(1)));
        assert_eq!(FieldSpec::new(0), Err(Error::NotPrime(0)));
        assert!(matches!(FieldSpec::new(1 << 33), Err(Error::ModulusTooLarge(_))));
        assert_eq!(FieldSpec::smallest_at_least(12).unwrap().p(), 13);
        assert_eq!(FieldSpec::smallest_at_least(5).unwrap().p(), 5);
        assert_eq!(FieldSpec::smallest_at_least(1).unwrap().p(), 2);
        assert!(f(5).element(5).is_err());
    }

    #[test]
    fn add_examples() {
        let f5 = f(5);
        assert_eq!(e(f5, 4).add(&e(f5, 3)).unwrap().value(), 2);
        for x in 0..5 {
            assert_eq!(f5.zero().add(&e(f5, x)).unwrap().value(), x);
        }
        let f2 = f(2);
        assert_eq!(e(f2, 1).add(&e(f2, 1)).unwrap().value(), 0);
    }

    #[test]
    fn mul_examples() {
        let f5 = f(5);
        assert_eq!(e(f5, 4).mul(&e(f5, 2)).unwrap().value(), 3);
        for x in 0..5 {
            assert_eq!(f5.one().mul(&e(f5, x)).unwrap().value(), x);
            assert_eq!(f5.zero().mul(&e(f5, x)).unwrap().value(), 0);
        }
    }

    #[test]
    fn inv_examples() {
        let f5 = f(5);
        assert_eq!(e(f5, 2).inv().unwrap().value(), 3);
        assert_eq!(e(f5, 1).inv().unwrap().value(), 1);
        assert_eq!(e(f5, 4).inv().unwrap().value(), 4);
        assert_eq!(f5.zero().inv(), Err(Error::DivisionByZero));
    }

    #[test]
    fn neg_examples() {
        let f5 = f(5);
        assert_eq!(e(f5, 1).neg().value(), 4);
        assert_eq!(e(f5, 0).neg().value(), 0);
        assert_eq!(e(f(2), 1).neg().value(), 1);
    }

    #[test]
    fn mismatched_fields_rejected() {
        let a = e(f(5), 1);
        let b = e(f(7), 1);
        assert_eq!(a.add(&b), Err(Error::FieldMismatch { left: 5, right: 7 }));
        assert!(a.mul(&b).is_err());
        assert!(a.sub(&b).is_err());
    }

    #[test]
    fn field_axioms_exhaustive() {
        for p in [2u64, 3, 5, 7, 11, 13] {
            let fs = f(p);
            for a in 0..p {
                assert_eq!(fs.add(a, fs.neg(a)), 0);
                assert_eq!(fs.pow(a, p), a, "Fermat a^p = a");
                if a != 0 {
                    let ia = fs.inv(a).unwrap();
                    assert_eq!(fs.mul(a, ia), 1);
                    assert_eq!(fs.inv(ia).unwrap(), a);
                }
                for b in 0..p {
                    assert_eq!(fs.add(a, b), fs.add(b, a));
                    assert_eq!(fs.mul(a, b), fs.mul(b, a));
                    assert_eq!(fs.sub(fs.add(a, b), b), a);
                    for c in 0..p {
                        assert_eq!(fs.add(fs.add(a, b), c), fs.add(a, fs.add(b, c)));
                        assert_eq!(fs.mul(fs.mul(a, b), c), fs.mul(a, fs.mul(b, c)));
                        assert_eq!(fs.mul(a, fs.add(b, c)), fs.add(fs.mul(a, b), fs.mul(a, c)));
                    }
                }
            }
        }
    }

    #[test]
    fn large_prime_arithmetic() {
        let fs = f(4_294_967_291); // largest prime below 2^32
        let a = fs.p() - 1;
        assert_eq!(fs.mul(a, a), 1);
        assert_eq!(fs.mul(a, fs.inv(a).unwrap()), 1);
    }

    #[test]
    fn field_spec_deserialize_validates() {
        let ok: FieldSpec = serde_json::from_str(r#"{"p":7}"#).unwrap();
        assert_eq!(ok.p(), 7);
        assert!(serde_json::from_str::<FieldSpec>(r#"{"p":9}"#).is_err());
    }
}
