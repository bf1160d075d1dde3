//! Exact scalars: arbitrary-precision rationals and prime fields.
//!
//! Every document works over a single field, fixed up front. Mixing scalars
//! from different fields is a programming error and panics; field agreement
//! is validated once at load time.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use crate::error::CoreError;

/// The coefficient field of a document: `ℚ` or `𝔽_p` for a prime `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    Rationals,
    Prime(u64),
}

impl Field {
    /// Validates that a prime-field modulus really is prime.
    pub fn validate(self) -> Result<Field, CoreError> {
        match self {
            Field::Rationals => Ok(self),
            Field::Prime(p) => {
                if is_prime(p) {
                    Ok(self)
                } else {
                    Err(CoreError::Field(format!("{p} is not prime")))
                }
            }
        }
    }

    pub fn zero(self) -> Scalar {
        match self {
            Field::Rationals => Scalar::Rat(BigRational::zero()),
            Field::Prime(p) => Scalar::Mod(0, p),
        }
    }

    pub fn one(self) -> Scalar {
        match self {
            Field::Rationals => Scalar::Rat(BigRational::one()),
            Field::Prime(p) => Scalar::Mod(1 % p, p),
        }
    }

    pub fn from_i64(self, n: i64) -> Scalar {
        match self {
            Field::Rationals => Scalar::Rat(BigRational::from_integer(BigInt::from(n))),
            Field::Prime(p) => Scalar::Mod(n.rem_euclid(p as i64) as u64, p),
        }
    }

    /// Parses `"a"` or `"a/b"` with decimal integers (`b` nonzero, and
    /// invertible mod `p` for prime fields).
    pub fn parse(self, s: &str) -> Result<Scalar, CoreError> {
        let bad = |_| CoreError::Field(format!("cannot parse scalar {s:?}"));
        let (num, den) = match s.split_once('/') {
            Some((a, b)) => (
                a.trim().parse::<BigInt>().map_err(bad)?,
                b.trim().parse::<BigInt>().map_err(bad)?,
            ),
            None => (s.trim().parse::<BigInt>().map_err(bad)?, BigInt::one()),
        };
        if den.is_zero() {
            return Err(CoreError::Field(format!("zero denominator in {s:?}")));
        }
        match self {
            Field::Rationals => Ok(Scalar::Rat(BigRational::new(num, den))),
            Field::Prime(p) => {
                let pi = BigInt::from(p);
                let n = ((num % &pi) + &pi) % &pi;
                let d = ((den % &pi) + &pi) % &pi;
                let n: u64 = n.try_into().expect("reduced residue fits in u64");
                let d: u64 = d.try_into().expect("reduced residue fits in u64");
                let dinv = mod_inverse(d, p).ok_or_else(|| {
                    CoreError::Field(format!("denominator of {s:?} is zero mod {p}"))
                })?;
                Ok(Scalar::Mod(mod_mul(n, dinv, p), p))
            }
        }
    }
}

/// An element of the coefficient field.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Scalar {
    Rat(BigRational),
    /// A residue `0 <= value < p` together with the modulus `p`.
    Mod(u64, u64),
}

impl Scalar {
    pub fn field(&self) -> Field {
        match self {
            Scalar::Rat(_) => Field::Rationals,
            Scalar::Mod(_, p) => Field::Prime(*p),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Rat(r) => r.is_zero(),
            Scalar::Mod(v, _) => *v == 0,
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Scalar::Rat(r) => r.is_one(),
            Scalar::Mod(v, p) => *v == 1 % p,
        }
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inverse(&self) -> Option<Scalar> {
        match self {
            Scalar::Rat(r) => {
                if r.is_zero() {
                    None
                } else {
                    Some(Scalar::Rat(r.recip()))
                }
            }
            Scalar::Mod(v, p) => mod_inverse(*v, *p).map(|w| Scalar::Mod(w, *p)),
        }
    }

    /// Canonical decimal rendering: `a` or `a/b` in lowest terms (rationals)
    /// or the least nonnegative residue (prime fields).
    pub fn render(&self) -> String {
        match self {
            Scalar::Rat(r) => {
                if r.denom().is_one() {
                    r.numer().to_string()
                } else {
                    format!("{}/{}", r.numer(), r.denom())
                }
            }
            Scalar::Mod(v, _) => v.to_string(),
        }
    }

    /// `(-1)^e` in this scalar's field.
    pub fn sign_pow(field: Field, e: i64) -> Scalar {
        if e.rem_euclid(2) == 0 {
            field.one()
        } else {
            -field.one()
        }
    }
}

fn check_same(a: &Scalar, b: &Scalar) {
    match (a, b) {
        (Scalar::Rat(_), Scalar::Rat(_)) => {}
        (Scalar::Mod(_, p), Scalar::Mod(_, q)) if p == q => {}
        _ => panic!("mixed scalar fields: {:?} vs {:?}", a.field(), b.field()),
    }
}

impl Add for Scalar {
    type Output = Scalar;
    fn add(self, rhs: Scalar) -> Scalar {
        check_same(&self, &rhs);
        match (self, rhs) {
            (Scalar::Rat(a), Scalar::Rat(b)) => Scalar::Rat(a + b),
            (Scalar::Mod(a, p), Scalar::Mod(b, _)) => Scalar::Mod((a + b) % p, p),
            _ => unreachable!(),
        }
    }
}

impl Sub for Scalar {
    type Output = Scalar;
    fn sub(self, rhs: Scalar) -> Scalar {
        self + (-rhs)
    }
}

impl Mul for Scalar {
    type Output = Scalar;
    fn mul(self, rhs: Scalar) -> Scalar {
        check_same(&self, &rhs);
        match (self, rhs) {
            (Scalar::Rat(a), Scalar::Rat(b)) => Scalar::Rat(a * b),
            (Scalar::Mod(a, p), Scalar::Mod(b, _)) => Scalar::Mod(mod_mul(a, b, p), p),
            _ => unreachable!(),
        }
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Rat(a) => Scalar::Rat(-a),
            Scalar::Mod(a, p) => Scalar::Mod(if a == 0 { 0 } else { p - a }, p),
        }
    }
}

impl AddAssign for Scalar {
    fn add_assign(&mut self, rhs: Scalar) {
        *self = std::mem::replace(self, rhs.field().zero()) + rhs;
    }
}

impl SubAssign for Scalar {
    fn sub_assign(&mut self, rhs: Scalar) {
        *self = std::mem::replace(self, rhs.field().zero()) - rhs;
    }
}

impl MulAssign for Scalar {
    fn mul_assign(&mut self, rhs: Scalar) {
        *self = std::mem::replace(self, rhs.field().zero()) * rhs;
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl Scalar {
    /// Numerator/denominator bit size, used only for coefficient-growth
    /// sanity assertions in tests.
    pub fn bit_size(&self) -> u64 {
        match self {
            Scalar::Rat(r) => r.numer().abs().bits() + r.denom().bits(),
            Scalar::Mod(_, _) => 64,
        }
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn mod_mul(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn mod_inverse(a: u64, p: u64) -> Option<u64> {
    if a % p == 0 {
        return None;
    }
    // Extended Euclid on (a, p).
    let (mut r0, mut r1) = (a as i128 % p as i128, p as i128);
    let (mut s0, mut s1) = (1i128, 0i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    debug_assert_eq!(r0, 1, "modulus must be prime");
    Some(s0.rem_euclid(p as i128) as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_parse_and_arithmetic() {
        let f = Field::Rationals;
        let a = f.parse("2/3").unwrap();
        let b = f.parse("-1/6").unwrap();
        assert_eq!((a.clone() + b).render(), "1/2");
        assert_eq!((a.clone() * a.clone()).render(), "4/9");
        assert_eq!(a.inverse().unwrap().render(), "3/2");
        assert!(f.parse("1/0").is_err());
        assert!(f.parse("x").is_err());
    }

    #[test]
    fn prime_field_arithmetic() {
        let f = Field::Prime(7).validate().unwrap();
        let a = f.parse("10").unwrap();
        assert_eq!(a.render(), "3");
        let b = f.parse("1/3").unwrap();
        assert!((b * f.from_i64(3)).is_one());
        assert!((f.from_i64(5) + f.from_i64(2)).is_zero());
        assert!(Field::Prime(6).validate().is_err());
        assert!(f.parse("2/7").is_err());
    }

    #[test]
    fn sign_pow() {
        let f = Field::Rationals;
        assert!(Scalar::sign_pow(f, 0).is_one());
        assert_eq!(Scalar::sign_pow(f, -3).render(), "-1");
        assert_eq!(Scalar::sign_pow(f, 4).render(), "1");
    }

    #[test]
    #[should_panic(expected = "mixed scalar fields")]
    fn mixed_fields_panic() {
        let _ = Field::Rationals.one() + Field::Prime(5).one();
    }
}
