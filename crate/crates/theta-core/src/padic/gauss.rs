use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::One;

use super::{AdditiveCharacter, CycloSum, QuadraticCharacter, TruncatedPadic, UnitRoot};
use crate::error::{Result, ThetaError};

const MAX_TERMS: u64 = 20_000_000;
const PHASE_TOL: f64 = 1e-9;

/// A stabilized Gauss integral together with its truncation history.
#[derive(Clone, Debug)]
pub struct GaussIntegral {
    pub value: Complex64,
    pub exact: CycloSum,
    /// First n with I_n = I_{n+1} exactly.
    pub stabilized_at: u32,
    pub partials: Vec<Complex64>,
}

/// q^e as an exact rational, e of any sign.
pub(crate) fn q_pow(q: u64, e: i64) -> BigRational {
    let b = BigRational::from_integer(BigInt::from(q));
    num_traits::pow::Pow::pow(&b, e as i32)
}

fn check_terms(p: u64, m: u32) -> Result<u64> {
    let n = (p as u128).pow(m);
    if n > MAX_TERMS as u128 {
        return Err(ThetaError::Precision(format!(
            "shell of size {p}^{m} is too large"
        )));
    }
    Ok(n as u64)
}

fn to_pairs(zs: &[Complex64]) -> Vec<[f64; 2]> {
    zs.iter().map(|z| [z.re, z.im]).collect()
}

/// I_n = integral over p^{-n} O of psi(-x) chi(x) dx, exactly.
fn gauss_partial(psi: &AdditiveCharacter, chi: &QuadraticCharacter, n: i64) -> Result<CycloSum> {
    let p = psi.field().p();
    let c0 = psi.conductor_exponent();
    let scale = psi.scale();
    let chi_p = chi.at_uniformizer() as i64;
    let k1 = c0.max(-n);
    let mut total = CycloSum::zero(p, 0);
    if chi.is_unramified() {
        let r = BigRational::new(chi_p.into(), BigInt::from(p));
        let one = BigRational::one();
        let head = (&one - BigRational::new(1.into(), BigInt::from(p)))
            * num_traits::pow::Pow::pow(&r, k1 as i32)
            / (&one - &r);
        total.add_power(0, &head);
    }
    let weight = q_pow(p, -c0);
    for k in -n..c0 {
        let m = (c0 - k) as u32;
        let pm = check_terms(p, m)?;
        let uu = scale.unit_mod(m)?;
        let signs: Vec<i64> = (0..p).map(|r| chi.eval_parts(k, r) as i64).collect();
        let mut counts = vec![0i64; pm as usize];
        for u in 0..pm {
            if u % p == 0 {
                continue;
            }
            let e = ((uu as u128 * u as u128) % pm as u128) as usize;
            counts[e] += signs[(u % p) as usize];
        }
        let mut shell = CycloSum::zero(p, m);
        shell.add_counts(&counts, &weight);
        total.add_assign(&shell);
    }
    Ok(total)
}

/// The Gauss integral lim_n of the integral over p^{-n} O of psi(-x) chi(x) dx.
pub fn gauss_integral(
    psi: &AdditiveCharacter,
    chi: &QuadraticCharacter,
    n_max: u32,
) -> Result<GaussIntegral> {
    psi.field().require_odd()?;
    let mut sums = Vec::new();
    let mut partials = Vec::new();
    for n in 0..=n_max {
        let s = gauss_partial(psi, chi, n as i64)?;
        partials.push(s.to_complex());
        if let Some(prev) = sums.last() {
            if *prev == s {
                return Ok(GaussIntegral {
                    value: s.to_complex(),
                    exact: s,
                    stabilized_at: n - 1,
                    partials,
                });
            }
        }
        sums.push(s);
    }
    Err(ThetaError::NotStabilized {
        what: "gauss integral".into(),
        limit: n_max,
        partials: to_pairs(&partials),
    })
}

/// Integral of psi(t x^2) over p^{-k} O.
fn quadratic_partial(psi: &AdditiveCharacter, t: &TruncatedPadic, k: i64) -> Result<CycloSum> {
    let p = psi.field().p();
    let y = &psi.scale() * t;
    let w = y
        .valuation()
        .ok_or(ThetaError::ZeroArgument("weil index argument"))?;
    // psi(y p^{2j} u^2) = 1 once 2j + w >= 0
    let jt = (-w).div_euclid(2) + (-w).rem_euclid(2);
    let j1 = jt.max(-k);
    let mut total = CycloSum::rational(p, 0, q_pow(p, -j1));
    for j in -k..jt {
        let m = (-(2 * j + w)) as u32;
        let pm = check_terms(p, m)?;
        let uu = y.unit_mod(m)? as u128;
        let mut counts = vec![0i64; pm as usize];
        for u in 0..pm {
            if u % p == 0 {
                continue;
            }
            let sq = (u as u128 * u as u128) % pm as u128;
            let e = (pm as u128 - (uu * sq) % pm as u128) % pm as u128;
            counts[e as usize] += 1;
        }
        let mut shell = CycloSum::zero(p, m);
        shell.add_counts(&counts, &q_pow(p, -j - m as i64));
        total.add_assign(&shell);
    }
    Ok(total)
}

/// gamma(psi^t): the phase of the stabilized integral of psi(t x^2).
pub fn weil_gamma(t: &TruncatedPadic, psi: &AdditiveCharacter, k_max: u32) -> Result<UnitRoot> {
    psi.field().require_odd()?;
    if t.is_zero() {
        return Err(ThetaError::ZeroArgument("weil index argument"));
    }
    let mut prev: Option<CycloSum> = None;
    let mut partials = Vec::new();
    for k in 0..=k_max {
        let s = quadratic_partial(psi, t, k as i64)?;
        partials.push(s.to_complex());
        if prev.as_ref() == Some(&s) {
            return UnitRoot::snap_fourth(s.to_complex(), PHASE_TOL);
        }
        prev = Some(s);
    }
    Err(ThetaError::NotStabilized {
        what: "quadratic gauss integral".into(),
        limit: k_max,
        partials: to_pairs(&partials),
    })
}

/// gamma(a, psi^{1/2}) = gamma(psi^{a/2}) / gamma(psi^{1/2}).
pub fn weil_index(a: &TruncatedPadic, psi: &AdditiveCharacter, k_max: u32) -> Result<UnitRoot> {
    if a.is_zero() {
        return Err(ThetaError::ZeroArgument("weil index argument"));
    }
    let half = psi.field().ratio(1, 2);
    let num = weil_gamma(&(a * &half), psi, k_max)?;
    let den = weil_gamma(&half, psi, k_max)?;
    Ok(num * den.inv())
}

#[cfg(test)]
mod tests {
    use super::super::LocalField;
    use super::*;

    #[test]
    fn trivial_chi_gives_zero() {
        let f = LocalField::new(3, 12).unwrap();
        let psi = AdditiveCharacter::standard(&f);
        let chi = QuadraticCharacter::new(f.int(-1)).unwrap();
        let g = gauss_integral(&psi, &chi, 4).unwrap();
        assert!(g.value.norm() < 1e-12);
    }

    #[test]
    fn unramified_value() {
        let f = LocalField::new(3, 12).unwrap();
        let psi = AdditiveCharacter::standard(&f);
        let chi = QuadraticCharacter::new(f.int(1)).unwrap();
        let g = gauss_integral(&psi, &chi, 4).unwrap();
        assert!((g.value - Complex64::new(1.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn weil_index_on_squares() {
        let f = LocalField::new(5, 12).unwrap();
        let psi = AdditiveCharacter::standard(&f);
        assert_eq!(weil_index(&f.int(1), &psi, 6).unwrap(), UnitRoot::ONE);
        assert_eq!(weil_index(&f.int(4), &psi, 6).unwrap(), UnitRoot::ONE);
        assert_eq!(weil_index(&f.int(25 * 9), &psi, 6).unwrap(), UnitRoot::ONE);
    }
}
