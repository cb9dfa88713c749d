use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use super::UnitRoot;

/// An exact element of Q(zeta) with zeta = exp(2 pi i / p^m), stored as
/// rational coefficients on all powers zeta^0 .. zeta^(p^m - 1).
#[derive(Clone, Debug)]
pub struct CycloSum {
    p: u64,
    m: u32,
    coeffs: Vec<BigRational>,
}

impl CycloSum {
    pub fn zero(p: u64, m: u32) -> Self {
        Self {
            p,
            m,
            coeffs: vec![BigRational::zero(); p.pow(m) as usize],
        }
    }

    pub fn rational(p: u64, m: u32, c: BigRational) -> Self {
        let mut s = Self::zero(p, m);
        s.coeffs[0] = c;
        s
    }

    pub fn level(&self) -> u32 {
        self.m
    }

    fn order(&self) -> u64 {
        self.p.pow(self.m)
    }

    /// Adds c * zeta^k.
    pub fn add_power(&mut self, k: u64, c: &BigRational) {
        let n = self.order();
        self.coeffs[(k % n) as usize] += c;
    }

    /// Adds c * root; the root's order must divide p^m.
    pub fn add_root(&mut self, r: UnitRoot, c: &BigRational) {
        let n = self.order();
        assert_eq!(n % r.denominator(), 0, "root order does not divide p^m");
        self.add_power(r.numerator() * (n / r.denominator()), c);
    }

    /// Adds scale * sum_k counts[k] zeta^(k * p^(m - level)) where counts has length p^level.
    pub fn add_counts(&mut self, counts: &[i64], scale: &BigRational) {
        let step = self.order() / counts.len() as u64;
        for (k, &c) in counts.iter().enumerate() {
            if c != 0 {
                self.coeffs[k * step as usize] += scale * BigRational::from_integer(c.into());
            }
        }
    }

    pub fn lift(&self, m: u32) -> Self {
        assert!(m >= self.m);
        let mut out = Self::zero(self.p, m);
        let step = self.p.pow(m - self.m) as usize;
        for (k, c) in self.coeffs.iter().enumerate() {
            out.coeffs[k * step] = c.clone();
        }
        out
    }

    pub fn add_assign(&mut self, other: &CycloSum) {
        assert_eq!(self.p, other.p);
        if other.m > self.m {
            *self = self.lift(other.m);
        }
        let step = self.p.pow(self.m - other.m) as usize;
        for (k, c) in other.coeffs.iter().enumerate() {
            if !c.is_zero() {
                self.coeffs[k * step] += c;
            }
        }
    }

    /// Coefficients in the power basis 1, zeta, ..., zeta^(phi - 1).
    pub fn reduced(&self) -> Vec<BigRational> {
        let mut c = self.coeffs.clone();
        if self.m == 0 {
            return c;
        }
        let block = self.p.pow(self.m - 1) as usize;
        let phi = (self.p as usize - 1) * block;
        for e in phi..c.len() {
            let v = std::mem::take(&mut c[e]);
            if v.is_zero() {
                continue;
            }
            let j = e - phi;
            for i in 0..(self.p as usize - 1) {
                c[j + i * block] -= &v;
            }
        }
        c.truncate(phi);
        c
    }

    pub fn is_zero(&self) -> bool {
        self.reduced().iter().all(|c| c.is_zero())
    }

    pub fn to_complex(&self) -> Complex64 {
        let n = self.order() as f64;
        let mut z = Complex64::new(0.0, 0.0);
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let t = std::f64::consts::TAU * k as f64 / n;
            z += Complex64::new(t.cos(), t.sin()) * c.to_f64().unwrap();
        }
        z
    }
}

impl PartialEq for CycloSum {
    fn eq(&self, other: &Self) -> bool {
        if self.p != other.p {
            return false;
        }
        let m = self.m.max(other.m);
        self.lift(m).reduced() == other.lift(m).reduced()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one() -> BigRational {
        BigRational::from_integer(1.into())
    }

    #[test]
    fn sum_of_all_roots_vanishes() {
        let mut s = CycloSum::zero(3, 2);
        for k in 0..9 {
            s.add_power(k, &one());
        }
        assert!(s.is_zero());
        let mut t = CycloSum::zero(5, 1);
        for k in 1..5 {
            t.add_power(k, &one());
        }
        assert_eq!(t, CycloSum::rational(5, 0, -one()));
    }

    #[test]
    fn lift_preserves_value() {
        let mut s = CycloSum::zero(3, 1);
        s.add_power(1, &one());
        let l = s.lift(3);
        assert_eq!(s, l);
        assert!((s.to_complex() - l.to_complex()).norm() < 1e-12);
    }
}
