//! Truncated arithmetic in Q_p, Hilbert symbols, characters, Gauss integrals.

mod characters;
mod cyclo;
mod gauss;

pub use characters::{eval_chi, eval_psi, AdditiveCharacter, QuadraticCharacter, UnitRoot};
pub use cyclo::CycloSum;
pub use gauss::{gauss_integral, weil_gamma, weil_index, GaussIntegral};

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ThetaError};

pub const DEFAULT_PRECISION: u32 = 12;
pub const MIN_PRECISION: u32 = 4;

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

pub(crate) fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub(crate) fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    r
}

/// Legendre symbol (n|p) for odd prime p; 0 when p divides n.
pub fn legendre(n: u64, p: u64) -> i8 {
    let n = n % p;
    if n == 0 {
        return 0;
    }
    if pow_mod(n, (p - 1) / 2, p) == 1 {
        1
    } else {
        -1
    }
}

/// Smallest quadratic non-residue mod an odd prime.
pub fn least_nonresidue(p: u64) -> u64 {
    (2..p).find(|&u| legendre(u, p) == -1).unwrap_or(2)
}

fn big_pow(p: u64, k: u32) -> BigUint {
    num_traits::pow(BigUint::from(p), k as usize)
}

fn mod_inverse(a: &BigUint, m: &BigUint) -> BigUint {
    let a = BigInt::from(a.clone());
    let m = BigInt::from(m.clone());
    let g = a.extended_gcd(&m);
    debug_assert!(g.gcd.is_one());
    g.x.mod_floor(&m).to_biguint().unwrap()
}

/// Splits a nonzero integer into (v_p, n / p^v).
pub fn split_int(n: &BigInt, p: u64) -> (i64, BigInt) {
    assert!(!n.is_zero());
    let pb = BigInt::from(p);
    let mut v = 0;
    let mut m = n.clone();
    loop {
        let (q, r) = m.div_rem(&pb);
        if !r.is_zero() {
            return (v, m);
        }
        m = q;
        v += 1;
    }
}

/// Splits a nonzero rational into (v_p, unit numerator, unit denominator).
pub fn split_rational(x: &BigRational, p: u64) -> (i64, BigInt, BigInt) {
    let (vn, n) = split_int(x.numer(), p);
    let (vd, d) = split_int(x.denom(), p);
    (vn - vd, n, d)
}

/// The field Q_p together with a working precision.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LocalField {
    p: u64,
    precision: u32,
}

impl LocalField {
    pub fn new(p: u64, precision: u32) -> Result<Self> {
        if !is_prime(p) {
            return Err(ThetaError::NotPrime(p));
        }
        if precision < MIN_PRECISION {
            return Err(ThetaError::PrecisionTooLow(precision));
        }
        Ok(Self { p, precision })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn require_odd(&self) -> Result<()> {
        if self.p == 2 {
            Err(ThetaError::EvenPrime(2))
        } else {
            Ok(())
        }
    }

    pub fn zero(&self) -> TruncatedPadic {
        TruncatedPadic::zero(self)
    }

    pub fn one(&self) -> TruncatedPadic {
        TruncatedPadic::from_i64(self, 1)
    }

    pub fn uniformizer(&self) -> TruncatedPadic {
        TruncatedPadic::from_i64(self, self.p as i64)
    }

    pub fn int(&self, n: i64) -> TruncatedPadic {
        TruncatedPadic::from_i64(self, n)
    }

    pub fn rational(&self, x: &BigRational) -> TruncatedPadic {
        TruncatedPadic::from_rational(self, x)
    }

    pub fn ratio(&self, n: i64, d: i64) -> TruncatedPadic {
        self.rational(&BigRational::new(n.into(), d.into()))
    }

    /// p^v times `unit`; `unit` must be prime to p.
    pub fn element(&self, v: i64, unit: i64) -> Result<TruncatedPadic> {
        TruncatedPadic::new(self, v, &BigInt::from(unit))
    }

    /// Representatives {1, u, p, u p} of the square classes (odd p).
    pub fn square_class_reps(&self) -> [TruncatedPadic; 4] {
        let u = least_nonresidue(self.p) as i64;
        let p = self.p as i64;
        [self.int(1), self.int(u), self.int(p), self.int(u * p)]
    }
}

/// An element of Q_p stored as p^valuation times a unit known mod p^precision.
///
/// Zero is exact. Addition tracks absolute precision, so cancellation lowers
/// the relative precision of the result.
#[derive(Clone, Debug)]
pub struct TruncatedPadic {
    p: u64,
    prec: u32,
    val: Option<i64>,
    unit: BigUint,
}

impl TruncatedPadic {
    pub fn zero(field: &LocalField) -> Self {
        Self {
            p: field.p,
            prec: field.precision,
            val: None,
            unit: BigUint::zero(),
        }
    }

    pub fn new(field: &LocalField, val: i64, unit: &BigInt) -> Result<Self> {
        if unit.is_zero() || (unit % BigInt::from(field.p)).is_zero() {
            return Err(ThetaError::Invalid(format!(
                "unit {unit} is divisible by {}",
                field.p
            )));
        }
        Ok(Self::from_parts(field.p, field.precision, val, unit))
    }

    fn from_parts(p: u64, prec: u32, val: i64, unit: &BigInt) -> Self {
        let m = BigInt::from(big_pow(p, prec));
        let unit = unit.mod_floor(&m).to_biguint().unwrap();
        Self {
            p,
            prec,
            val: Some(val),
            unit,
        }
    }

    pub fn from_i64(field: &LocalField, n: i64) -> Self {
        Self::from_bigint(field, &BigInt::from(n))
    }

    pub fn from_bigint(field: &LocalField, n: &BigInt) -> Self {
        if n.is_zero() {
            return Self::zero(field);
        }
        let (v, u) = split_int(n, field.p);
        Self::from_parts(field.p, field.precision, v, &u)
    }

    pub fn from_rational(field: &LocalField, x: &BigRational) -> Self {
        if x.is_zero() {
            return Self::zero(field);
        }
        let (v, n, d) = split_rational(x, field.p);
        let m = big_pow(field.p, field.precision);
        let d = d.mod_floor(&BigInt::from(m.clone())).to_biguint().unwrap();
        let dinv = BigInt::from(mod_inverse(&d, &m));
        Self::from_parts(field.p, field.precision, v, &(n * dinv))
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn field(&self) -> LocalField {
        LocalField {
            p: self.p,
            precision: self.prec.max(MIN_PRECISION),
        }
    }

    /// Valuation, `None` standing for +infinity.
    pub fn valuation(&self) -> Option<i64> {
        self.val
    }

    pub fn is_zero(&self) -> bool {
        self.val.is_none()
    }

    pub fn unit(&self) -> &BigUint {
        &self.unit
    }

    /// Number of significant p-adic digits carried by the unit.
    pub fn relative_precision(&self) -> u32 {
        self.prec
    }

    /// Unit residue mod p^k as a machine integer.
    pub fn unit_mod(&self, k: u32) -> Result<u64> {
        if k > self.prec {
            return Err(ThetaError::Precision(format!(
                "unit needed mod p^{k}, known mod p^{}",
                self.prec
            )));
        }
        (&self.unit % big_pow(self.p, k))
            .to_u64()
            .ok_or_else(|| ThetaError::Precision("unit residue exceeds 64 bits".into()))
    }

    pub fn unit_residue(&self) -> u64 {
        (&self.unit % BigUint::from(self.p)).to_u64().unwrap_or(0)
    }

    fn check(&self, other: &Self) {
        assert_eq!(self.p, other.p, "mixed primes in p-adic arithmetic");
    }

    pub fn inv(&self) -> Result<Self> {
        let v = self
            .val
            .ok_or(ThetaError::ZeroArgument("inverse of zero"))?;
        let m = big_pow(self.p, self.prec);
        Ok(Self {
            p: self.p,
            prec: self.prec,
            val: Some(-v),
            unit: mod_inverse(&self.unit, &m),
        })
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self * &other.inv()?)
    }

    pub fn pow(&self, e: i64) -> Result<Self> {
        if e < 0 {
            return self.inv()?.pow(-e);
        }
        let Some(v) = self.val else {
            return Ok(if e == 0 {
                self.with_unit_one()
            } else {
                self.clone()
            });
        };
        let m = big_pow(self.p, self.prec);
        Ok(Self {
            p: self.p,
            prec: self.prec,
            val: Some(v * e),
            unit: self.unit.modpow(&BigUint::from(e as u64), &m),
        })
    }

    fn with_unit_one(&self) -> Self {
        Self {
            p: self.p,
            prec: self.prec,
            val: Some(0),
            unit: BigUint::one(),
        }
    }

    /// Multiplies by p^k.
    pub fn shift(&self, k: i64) -> Self {
        let mut out = self.clone();
        if let Some(v) = out.val.as_mut() {
            *v += k;
        }
        out
    }

    /// Truncates the unit to `k` digits (no-op if fewer are known).
    pub fn with_precision(&self, k: u32) -> Self {
        if k >= self.prec || self.is_zero() {
            return self.clone();
        }
        Self {
            p: self.p,
            prec: k,
            val: self.val,
            unit: &self.unit % big_pow(self.p, k),
        }
    }

    /// True when self is a nonzero square (needs 3 digits at p = 2).
    pub fn is_square(&self) -> bool {
        let Some(v) = self.val else {
            return true;
        };
        if v.rem_euclid(2) != 0 {
            return false;
        }
        if self.p == 2 {
            (&self.unit % 8u32).to_u64() == Some(1)
        } else {
            legendre(self.unit_residue(), self.p) == 1
        }
    }

    /// A square root for odd p, or `None` when self is not a square.
    pub fn sqrt(&self) -> Option<Self> {
        if self.p == 2 || !self.is_square() {
            return None;
        }
        let Some(v) = self.val else {
            return Some(self.clone());
        };
        let u0 = self.unit_residue();
        let r0 = (1..self.p).find(|&r| mul_mod(r, r, self.p) == u0)?;
        let m = big_pow(self.p, self.prec);
        let two_inv = mod_inverse(&BigUint::from(2u32), &m);
        let mut r = BigUint::from(r0);
        // Newton steps double the number of correct digits
        let mut known = 1;
        while known < self.prec {
            let rinv = mod_inverse(&r, &m);
            r = ((&r + &self.unit * rinv) % &m * &two_inv) % &m;
            known *= 2;
        }
        Some(Self {
            p: self.p,
            prec: self.prec,
            val: Some(v / 2),
            unit: r,
        })
    }

    /// The rational p^v * unit, using the least nonnegative unit residue.
    pub fn to_rational(&self) -> BigRational {
        let Some(v) = self.val else {
            return BigRational::zero();
        };
        let u = BigRational::from_integer(BigInt::from(self.unit.clone()));
        let pk = BigRational::from_integer(BigInt::from(big_pow(self.p, v.unsigned_abs() as u32)));
        if v >= 0 {
            u * pk
        } else {
            u / pk
        }
    }

    /// The fractional part in [0, 1) as (numerator, p^k) with 0 <= numerator < p^k.
    pub fn fractional_part(&self) -> Result<(BigUint, u32)> {
        let v = match self.val {
            Some(v) if v < 0 => v,
            _ => return Ok((BigUint::zero(), 0)),
        };
        let k = (-v) as u32;
        if k > self.prec {
            return Err(ThetaError::Precision(format!(
                "fractional part needs {k} digits, {} known",
                self.prec
            )));
        }
        Ok((&self.unit % big_pow(self.p, k), k))
    }

    /// Sum with absolute-precision accounting.
    fn add_impl(&self, other: &Self) -> Self {
        self.check(other);
        let (Some(v1), Some(v2)) = (self.val, other.val) else {
            return if self.is_zero() {
                other.clone()
            } else {
                self.clone()
            };
        };
        let abs = (v1 + self.prec as i64).min(v2 + other.prec as i64);
        let vmin = v1.min(v2);
        let width = (abs - vmin) as u32;
        if width == 0 {
            return Self {
                p: self.p,
                prec: 0,
                val: None,
                unit: BigUint::zero(),
            };
        }
        let m = big_pow(self.p, width);
        let a = &self.unit * big_pow(self.p, (v1 - vmin) as u32);
        let b = &other.unit * big_pow(other.p, (v2 - vmin) as u32);
        let s = (a + b) % &m;
        if s.is_zero() {
            let mut z = self.clone();
            z.val = None;
            z.unit = BigUint::zero();
            return z;
        }
        let (extra, u) = split_int(&BigInt::from(s), self.p);
        let prec = width - extra as u32;
        Self {
            p: self.p,
            prec,
            val: Some(vmin + extra),
            unit: u.to_biguint().unwrap() % big_pow(self.p, prec),
        }
    }

    fn mul_impl(&self, other: &Self) -> Self {
        self.check(other);
        match (self.val, other.val) {
            (Some(v1), Some(v2)) => {
                let prec = self.prec.min(other.prec);
                Self {
                    p: self.p,
                    prec,
                    val: Some(v1 + v2),
                    unit: (&self.unit * &other.unit) % big_pow(self.p, prec),
                }
            }
            _ => Self {
                p: self.p,
                prec: self.prec.min(other.prec),
                val: None,
                unit: BigUint::zero(),
            },
        }
    }

    fn neg_impl(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let m = big_pow(self.p, self.prec);
        Self {
            p: self.p,
            prec: self.prec,
            val: self.val,
            unit: (&m - &self.unit) % &m,
        }
    }
}

impl PartialEq for TruncatedPadic {
    fn eq(&self, other: &Self) -> bool {
        if self.p != other.p || self.val != other.val {
            return false;
        }
        if self.is_zero() {
            return true;
        }
        let m = big_pow(self.p, self.prec.min(other.prec));
        &self.unit % &m == &other.unit % &m
    }
}

impl fmt::Display for TruncatedPadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.val {
            None => write!(f, "0"),
            Some(v) => write!(f, "{}^{} * {} (+O(p^{}))", self.p, v, self.unit, self.prec),
        }
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $imp:expr) => {
        impl $tr<&TruncatedPadic> for &TruncatedPadic {
            type Output = TruncatedPadic;
            fn $method(self, rhs: &TruncatedPadic) -> TruncatedPadic {
                $imp(self, rhs)
            }
        }
        impl $tr<TruncatedPadic> for TruncatedPadic {
            type Output = TruncatedPadic;
            fn $method(self, rhs: TruncatedPadic) -> TruncatedPadic {
                $imp(&self, &rhs)
            }
        }
        impl $tr<&TruncatedPadic> for TruncatedPadic {
            type Output = TruncatedPadic;
            fn $method(self, rhs: &TruncatedPadic) -> TruncatedPadic {
                $imp(&self, rhs)
            }
        }
    };
}

forward_binop!(Add, add, TruncatedPadic::add_impl);
forward_binop!(Mul, mul, TruncatedPadic::mul_impl);
forward_binop!(Sub, sub, |a: &TruncatedPadic, b: &TruncatedPadic| a
    .add_impl(&b.neg_impl()));

impl Neg for &TruncatedPadic {
    type Output = TruncatedPadic;
    fn neg(self) -> TruncatedPadic {
        self.neg_impl()
    }
}

impl Neg for TruncatedPadic {
    type Output = TruncatedPadic;
    fn neg(self) -> TruncatedPadic {
        self.neg_impl()
    }
}

/// A place of Q: a finite prime or the real place.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Place {
    Finite(u64),
    Infinity,
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Place::Finite(p) => write!(f, "{p}"),
            Place::Infinity => write!(f, "inf"),
        }
    }
}

impl FromStr for Place {
    type Err = ThetaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "oo" | "∞" => Ok(Place::Infinity),
            t => {
                let p: u64 = t
                    .parse()
                    .map_err(|_| ThetaError::Invalid(format!("bad place '{s}'")))?;
                if is_prime(p) {
                    Ok(Place::Finite(p))
                } else {
                    Err(ThetaError::NotPrime(p))
                }
            }
        }
    }
}

fn mod8(n: &BigInt, d: &BigInt) -> u64 {
    // d is odd, so d^{-1} = d mod 8
    (n * d).mod_floor(&BigInt::from(8)).to_u64().unwrap()
}

fn eps2(u: u64) -> u64 {
    ((u - 1) / 2) % 2
}

fn omega2(u: u64) -> u64 {
    ((u * u - 1) / 8) % 2
}

fn sign_of_parity(e: u64) -> i8 {
    if e.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Hilbert symbol (a, b)_v of nonzero rationals.
pub fn hilbert_symbol(a: &BigRational, b: &BigRational, place: Place) -> Result<i8> {
    if a.is_zero() || b.is_zero() {
        return Err(ThetaError::ZeroArgument("hilbert symbol"));
    }
    match place {
        Place::Infinity => Ok(if a.is_negative() && b.is_negative() {
            -1
        } else {
            1
        }),
        Place::Finite(p) => {
            if !is_prime(p) {
                return Err(ThetaError::NotPrime(p));
            }
            let (al, un, ud) = split_rational(a, p);
            let (be, vn, vd) = split_rational(b, p);
            if p == 2 {
                Ok(hilbert_two(al, mod8(&un, &ud), be, mod8(&vn, &vd)))
            } else {
                let pb = BigInt::from(p);
                let ru = (&un * &ud).mod_floor(&pb).to_u64().unwrap();
                let rv = (&vn * &vd).mod_floor(&pb).to_u64().unwrap();
                Ok(hilbert_odd(p, al, ru, be, rv))
            }
        }
    }
}

/// (p^al u, p^be v)_p for odd p, with u and v given mod p.
pub fn hilbert_odd(p: u64, al: i64, u: u64, be: i64, v: u64) -> i8 {
    let mut s = sign_of_parity((al.rem_euclid(2) * be.rem_euclid(2)) as u64 * ((p - 1) / 2));
    if be.rem_euclid(2) == 1 {
        s *= legendre(u, p);
    }
    if al.rem_euclid(2) == 1 {
        s *= legendre(v, p);
    }
    s
}

/// (2^al u, 2^be v)_2 with u and v odd residues mod 8.
pub fn hilbert_two(al: i64, u: u64, be: i64, v: u64) -> i8 {
    let e = eps2(u) * eps2(v)
        + al.rem_euclid(2) as u64 * omega2(v)
        + be.rem_euclid(2) as u64 * omega2(u);
    sign_of_parity(e)
}

/// Hilbert symbol of two nonzero p-adic elements.
pub fn hilbert_padic(a: &TruncatedPadic, b: &TruncatedPadic) -> Result<i8> {
    let (Some(al), Some(be)) = (a.valuation(), b.valuation()) else {
        return Err(ThetaError::ZeroArgument("hilbert symbol"));
    };
    a.check(b);
    if a.p == 2 {
        Ok(hilbert_two(al, a.unit_mod(3)?, be, b.unit_mod(3)?))
    } else {
        Ok(hilbert_odd(a.p, al, a.unit_residue(), be, b.unit_residue()))
    }
}

/// Parses "n", "-n" or "n/d" into a rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let bad = || ThetaError::Invalid(format!("bad rational '{s}'"));
    let t = s.trim();
    let (n, d) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (t, "1"),
    };
    let n = BigInt::from_str(n).map_err(|_| bad())?;
    let d = BigInt::from_str(d).map_err(|_| bad())?;
    if d.is_zero() {
        return Err(bad());
    }
    Ok(BigRational::new(n, d))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    #[test]
    fn valuation_basics() {
        let f = LocalField::new(5, 12).unwrap();
        assert_eq!(f.int(1).valuation(), Some(0));
        assert_eq!(f.zero().valuation(), None);
        assert_eq!(f.int(50).valuation(), Some(2));
        assert_eq!(f.ratio(3, 25).valuation(), Some(-2));
    }

    #[test]
    fn field_validation() {
        assert_eq!(LocalField::new(9, 12), Err(ThetaError::NotPrime(9)));
        assert_eq!(LocalField::new(3, 3), Err(ThetaError::PrecisionTooLow(3)));
    }

    #[test]
    fn arithmetic_round_trips() {
        let f = LocalField::new(3, 10).unwrap();
        let a = f.ratio(7, 9);
        let b = f.ratio(-5, 2);
        assert_eq!((&a + &b).to_rational(), (&a + &b).to_rational());
        assert_eq!(&(&a * &b) * &b.inv().unwrap(), a);
        assert_eq!(&(&a + &b) - &b, a);
        assert!((&a - &a).is_zero());
    }

    #[test]
    fn cancellation_loses_precision() {
        let f = LocalField::new(5, 6).unwrap();
        let a = f.int(1);
        let b = f.int(1 - 5i64.pow(3));
        let d = &a - &b;
        assert_eq!(d.valuation(), Some(3));
        assert_eq!(d.relative_precision(), 3);
    }

    #[test]
    fn equality_uses_common_precision() {
        let f = LocalField::new(3, 8).unwrap();
        let a = f.int(10).with_precision(2);
        let b = f.int(1);
        assert_eq!(a, b);
        assert_ne!(f.int(10), b);
    }

    #[test]
    fn hilbert_examples() {
        for pl in [Place::Finite(2), Place::Finite(3), Place::Infinity] {
            assert_eq!(hilbert_symbol(&q(1), &q(-7), pl), Ok(1));
        }
        assert_eq!(hilbert_symbol(&q(-1), &q(-1), Place::Finite(2)), Ok(-1));
        assert_eq!(hilbert_symbol(&q(5), &q(2), Place::Finite(5)), Ok(-1));
        assert_eq!(hilbert_symbol(&q(-1), &q(-1), Place::Infinity), Ok(-1));
        assert!(hilbert_symbol(&q(0), &q(3), Place::Finite(3)).is_err());
    }

    #[test]
    fn parse_forms() {
        assert_eq!(
            parse_rational("-3/6").unwrap(),
            BigRational::new((-1).into(), 2.into())
        );
        assert!(parse_rational("1/0").is_err());
        assert_eq!("inf".parse::<Place>().unwrap(), Place::Infinity);
        assert!("4".parse::<Place>().is_err());
    }

    #[test]
    fn square_roots() {
        let f = LocalField::new(7, 10).unwrap();
        let x = f.int(2);
        let r = x.sqrt().unwrap();
        assert_eq!(&r * &r, x);
        assert!(f.int(3).sqrt().is_none());
        assert!(f.int(7).sqrt().is_none());
        let y = f.ratio(9 * 2, 49);
        let s = y.sqrt().unwrap();
        assert_eq!(&s * &s, y);
    }
}
