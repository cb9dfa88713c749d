use std::fmt;

use num_complex::Complex64;
use num_integer::Integer;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use super::{hilbert_odd, hilbert_padic, LocalField, TruncatedPadic};
use crate::error::{Result, ThetaError};

/// An exact root of unity exp(2 pi i num / den), 0 <= num < den.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UnitRoot {
    num: u64,
    den: u64,
}

impl UnitRoot {
    pub const ONE: UnitRoot = UnitRoot { num: 0, den: 1 };
    pub const MINUS_ONE: UnitRoot = UnitRoot { num: 1, den: 2 };
    pub const I: UnitRoot = UnitRoot { num: 1, den: 4 };

    pub fn new(num: i128, den: u64) -> Self {
        assert!(den > 0);
        let n = num.rem_euclid(den as i128) as u64;
        let g = n.gcd(&den);
        Self {
            num: n / g,
            den: den / g,
        }
    }

    /// i^k.
    pub fn fourth(k: i64) -> Self {
        Self::new(k as i128, 4)
    }

    pub fn from_sign(s: i8) -> Self {
        if s < 0 {
            Self::MINUS_ONE
        } else {
            Self::ONE
        }
    }

    pub fn numerator(&self) -> u64 {
        self.num
    }

    pub fn denominator(&self) -> u64 {
        self.den
    }

    pub fn inv(self) -> Self {
        Self::new(-(self.num as i128), self.den)
    }

    pub fn pow(self, e: i64) -> Self {
        Self::new(self.num as i128 * e as i128, self.den)
    }

    /// The exponent k with self = i^k, if self is a fourth root of unity.
    pub fn as_fourth(&self) -> Option<u8> {
        match self.den {
            1 | 2 | 4 => Some((self.num * (4 / self.den)) as u8),
            _ => None,
        }
    }

    pub fn to_complex(&self) -> Complex64 {
        match self.as_fourth() {
            Some(0) => Complex64::new(1.0, 0.0),
            Some(1) => Complex64::new(0.0, 1.0),
            Some(2) => Complex64::new(-1.0, 0.0),
            Some(3) => Complex64::new(0.0, -1.0),
            _ => {
                let t = std::f64::consts::TAU * self.num as f64 / self.den as f64;
                Complex64::new(t.cos(), t.sin())
            }
        }
    }

    /// Snaps a nonzero complex number to the nearest fourth root of its phase.
    pub fn snap_fourth(z: Complex64, tol: f64) -> Result<Self> {
        let n = z.norm();
        if n == 0.0 {
            return Err(ThetaError::Precision("phase of zero".into()));
        }
        let w = z / n;
        for k in 0..4 {
            let r = Self::fourth(k);
            if (w - r.to_complex()).norm() <= tol {
                return Ok(r);
            }
        }
        Err(ThetaError::Precision(format!(
            "phase of {z} is not a fourth root of unity"
        )))
    }
}

impl std::ops::Mul for UnitRoot {
    type Output = UnitRoot;

    fn mul(self, rhs: UnitRoot) -> UnitRoot {
        let den = self.den.lcm(&rhs.den);
        let a = self.num as i128 * (den / self.den) as i128;
        let b = rhs.num as i128 * (den / rhs.den) as i128;
        UnitRoot::new(a + b, den)
    }
}

impl fmt::Display for UnitRoot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.as_fourth() {
            Some(0) => write!(f, "1"),
            Some(1) => write!(f, "i"),
            Some(2) => write!(f, "-1"),
            Some(3) => write!(f, "-i"),
            _ => write!(f, "e(2pi i {}/{})", self.num, self.den),
        }
    }
}

/// psi(x) = exp(-2 pi i lambda(eps p^d x)).
#[derive(Clone, Debug, PartialEq)]
pub struct AdditiveCharacter {
    epsilon: TruncatedPadic,
    d: i64,
}

impl AdditiveCharacter {
    pub fn new(epsilon: TruncatedPadic, d: i64) -> Result<Self> {
        if epsilon.is_zero() {
            return Err(ThetaError::ZeroArgument("character parameter epsilon"));
        }
        Ok(Self { epsilon, d })
    }

    /// eps = 1, d = 0.
    pub fn standard(field: &LocalField) -> Self {
        Self {
            epsilon: field.one(),
            d: 0,
        }
    }

    pub fn field(&self) -> LocalField {
        self.epsilon.field()
    }

    pub fn epsilon(&self) -> &TruncatedPadic {
        &self.epsilon
    }

    pub fn diff_exponent(&self) -> i64 {
        self.d
    }

    /// eps * p^d, the element whose fractional part pairing defines psi.
    pub fn scale(&self) -> TruncatedPadic {
        self.epsilon.shift(self.d)
    }

    /// Least c with psi trivial on p^c O.
    pub fn conductor_exponent(&self) -> i64 {
        -self.d - self.epsilon.valuation().unwrap()
    }

    /// The character x -> psi(t x).
    pub fn twist(&self, t: &TruncatedPadic) -> Result<Self> {
        Self::new(&self.epsilon * t, self.d)
    }

    pub fn eval(&self, x: &TruncatedPadic) -> Result<UnitRoot> {
        let y = &self.scale() * x;
        let (n, k) = y.fractional_part()?;
        if k == 0 {
            return Ok(UnitRoot::ONE);
        }
        let den = (self.epsilon.p() as u128).pow(k);
        if den > u64::MAX as u128 {
            return Err(ThetaError::Precision(
                "character denominator exceeds 64 bits".into(),
            ));
        }
        let num = n.to_u64().unwrap();
        Ok(UnitRoot::new(-(num as i128), den as u64))
    }
}

/// chi(x) = (x, -kappa), with chi(0) = 0.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticCharacter {
    kappa: TruncatedPadic,
}

impl QuadraticCharacter {
    pub fn new(kappa: TruncatedPadic) -> Result<Self> {
        if kappa.is_zero() {
            return Err(ThetaError::ZeroArgument("kappa"));
        }
        Ok(Self { kappa })
    }

    pub fn kappa(&self) -> &TruncatedPadic {
        &self.kappa
    }

    pub fn eval(&self, x: &TruncatedPadic) -> Result<i8> {
        if x.is_zero() {
            return Ok(0);
        }
        hilbert_padic(x, &-&self.kappa)
    }

    /// chi(p^v u) for a unit with residue `u` mod p (odd p).
    pub fn eval_parts(&self, v: i64, u: u64) -> i8 {
        let mk = -&self.kappa;
        hilbert_odd(
            self.kappa.p(),
            v,
            u,
            mk.valuation().unwrap(),
            mk.unit_residue(),
        )
    }

    pub fn is_trivial(&self) -> bool {
        (-&self.kappa).is_square()
    }

    pub fn is_unramified(&self) -> bool {
        self.kappa.valuation().unwrap().rem_euclid(2) == 0
    }

    /// chi(p).
    pub fn at_uniformizer(&self) -> i8 {
        self.eval_parts(1, 1)
    }
}

pub fn eval_chi(chi: &QuadraticCharacter, x: &TruncatedPadic) -> Result<i8> {
    chi.eval(x)
}

pub fn eval_psi(psi: &AdditiveCharacter, x: &TruncatedPadic) -> Result<UnitRoot> {
    psi.eval(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_root_arithmetic() {
        let a = UnitRoot::new(1, 6);
        let b = UnitRoot::new(1, 3);
        assert_eq!(a * b, UnitRoot::MINUS_ONE);
        assert_eq!(UnitRoot::I.pow(4), UnitRoot::ONE);
        assert_eq!(a * a.inv(), UnitRoot::ONE);
        assert_eq!(UnitRoot::fourth(3).as_fourth(), Some(3));
    }

    #[test]
    fn psi_examples() {
        let f = LocalField::new(5, 12).unwrap();
        let psi = AdditiveCharacter::standard(&f);
        assert_eq!(psi.eval(&f.int(17)).unwrap(), UnitRoot::ONE);
        assert_eq!(psi.eval(&f.ratio(1, 5)).unwrap(), UnitRoot::new(-1, 5));
        let x = f.ratio(3, 25);
        let y = f.ratio(7, 5);
        assert_eq!(
            psi.eval(&(&x + &y)).unwrap(),
            psi.eval(&x).unwrap() * psi.eval(&y).unwrap()
        );
    }

    #[test]
    fn psi_precision_error() {
        let f = LocalField::new(3, 4).unwrap();
        let psi = AdditiveCharacter::standard(&f);
        assert!(psi.eval(&f.ratio(1, 3i64.pow(6))).is_err());
    }

    #[test]
    fn chi_examples() {
        let f = LocalField::new(3, 12).unwrap();
        let chi = QuadraticCharacter::new(f.int(1)).unwrap();
        assert_eq!(chi.eval(&f.zero()).unwrap(), 0);
        assert_eq!(chi.eval(&f.uniformizer()).unwrap(), -1);
        assert_eq!(chi.eval(&f.int(49)).unwrap(), 1);
        assert!(!chi.is_trivial());
        assert!(chi.is_unramified());
    }
}
