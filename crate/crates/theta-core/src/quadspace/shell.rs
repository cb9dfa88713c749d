//! Brute-force residue enumeration of the quadric, used as an independent
//! check on the adaptive engine.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;

use super::engine::q_pow;
use super::{BasePoint, QuadSpaceV, Vec3};
use crate::error::{Result, ThetaError};
use crate::padic::{QuadraticCharacter, TruncatedPadic};

/// A primitive residue Z mod p^M; the orbit point is x = p^(scale - window) Z.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ShellPoint {
    pub residue: [u64; 3],
    pub scale: u32,
}

/// Smooth residue solutions of nu(x) = kappa for x in p^{-window} O^3.
#[derive(Clone, Debug)]
pub struct OrbitShell {
    pub p: u64,
    pub modulus: u32,
    pub window: u32,
    pub points: Vec<ShellPoint>,
}

impl OrbitShell {
    /// Leray measure carried by one point: q^{-2M} q^{window - scale}.
    pub fn point_weight(&self, pt: &ShellPoint) -> BigRational {
        q_pow(
            self.p,
            -2 * self.modulus as i64 + self.window as i64 - pt.scale as i64,
        )
    }

    pub fn measure(&self) -> BigRational {
        self.points.iter().map(|pt| self.point_weight(pt)).sum()
    }

    /// Measure by min valuation of x, i.e. scale - window.
    pub fn stratum_masses(&self) -> BTreeMap<i64, BigRational> {
        let mut out: BTreeMap<i64, BigRational> = BTreeMap::new();
        for pt in &self.points {
            *out.entry(pt.scale as i64 - self.window as i64).or_default() += self.point_weight(pt);
        }
        out
    }

    /// The representative x as p-adic coordinates.
    pub fn point(&self, v: &QuadSpaceV, pt: &ShellPoint) -> Vec3 {
        let f = v.algebra().field();
        pt.residue.map(|z| {
            TruncatedPadic::from_bigint(&f, &BigInt::from(z))
                .shift(pt.scale as i64 - self.window as i64)
        })
    }
}

fn residue(x: &TruncatedPadic, m: u64) -> Result<u64> {
    let Some(v) = x.valuation() else {
        return Ok(0);
    };
    if v < 0 {
        return Err(ThetaError::Invalid("shell data must be p-integral".into()));
    }
    let p = x.p();
    let pv = (p as u128).checked_pow(v as u32).unwrap_or(u128::MAX);
    if pv >= m as u128 {
        return Ok(0);
    }
    let k = (0..)
        .find(|&k| (p as u128).pow(k) >= m as u128 / pv)
        .unwrap();
    let u = x.unit_mod(k.min(x.relative_precision()))? as u128;
    Ok(((pv * u) % m as u128) as u64)
}

/// Enumerates the quadric mod p^M over all scales p^{j - window} O^3.
///
/// Errors if some primitive solution is not smooth, since its residue count
/// would not give the measure.
pub fn orbit_shell(
    v: &QuadSpaceV,
    kappa: &TruncatedPadic,
    modulus: u32,
    window: u32,
) -> Result<OrbitShell> {
    let p = v.p();
    v.algebra().field().require_odd()?;
    let m = (p as u128)
        .checked_pow(modulus)
        .filter(|&m| m < (1u128 << 40))
        .ok_or_else(|| {
            ThetaError::Precision(format!("modulus {p}^{modulus} too large to enumerate"))
        })? as u64;
    let g: Vec<u64> = v
        .gram()
        .iter()
        .map(|x| residue(x, m))
        .collect::<Result<_>>()?;
    let mut points = Vec::new();
    for j in 0..=window {
        let t = kappa.shift(2 * (window as i64 - j as i64));
        if t.valuation().unwrap() < 0 {
            continue;
        }
        let t = residue(&t, m)?;
        for z0 in 0..m {
            for z1 in 0..m {
                let partial = (g[0] as u128 * ((z0 as u128 * z0 as u128) % m as u128)
                    + g[1] as u128 * ((z1 as u128 * z1 as u128) % m as u128))
                    % m as u128;
                for z2 in 0..m {
                    let n = (partial + g[2] as u128 * ((z2 as u128 * z2 as u128) % m as u128))
                        % m as u128;
                    if n as u64 != t {
                        continue;
                    }
                    let z = [z0, z1, z2];
                    if z.iter().all(|c| c % p == 0) {
                        continue;
                    }
                    let smooth = (0..3).any(|i| !g[i].is_multiple_of(p) && z[i] % p != 0);
                    if !smooth {
                        return Err(ThetaError::Precision(format!(
                            "non-smooth residue point {z:?} at modulus {modulus}"
                        )));
                    }
                    points.push(ShellPoint {
                        residue: z,
                        scale: j,
                    });
                }
            }
        }
    }
    Ok(OrbitShell {
        p,
        modulus,
        window,
        points,
    })
}

/// Sum over the shell of f(x) chi(2(alpha(x) + 1)) times the point weight and
/// the normalization constant. The weight is read at the residue
/// representative, so the modulus must resolve it.
pub fn orbital_integral(
    v: &QuadSpaceV,
    base: &BasePoint,
    f: &dyn Fn(&Vec3) -> Complex64,
    chi: &QuadraticCharacter,
    shell: &OrbitShell,
    normalization: f64,
) -> Result<Complex64> {
    let field = v.algebra().field();
    let one = field.one();
    let mut acc = Complex64::new(0.0, 0.0);
    for pt in &shell.points {
        let x = shell.point(v, pt);
        let fx = f(&x);
        if fx == Complex64::new(0.0, 0.0) {
            continue;
        }
        let w = if chi.is_trivial() {
            1
        } else {
            let a = v.alpha(&x, base);
            let s = &a + &one;
            chi.eval(&(&s + &s))?
        };
        let wt = super::engine::rational_to_f64(&shell.point_weight(pt));
        acc += fx * (w as f64 * wt);
    }
    Ok(acc * normalization)
}
