//! Pointwise evaluation of omega(g) phi for Borel words, without building
//! the refined grid that op_n would need for very negative ord(b).

use std::f64::consts::PI;

use num_complex::Complex64;

use super::weil::{Letter, WeilContext};
use super::SchwartzFn;
use crate::error::{Result, ThetaError};
use crate::padic::TruncatedPadic;

#[derive(Clone, Debug)]
enum Op {
    /// y -> a y with the prefactor; unit part of a mod p^digits.
    Dilate {
        va: i64,
        unit: u128,
        pref: Complex64,
    },
    /// psi(b nu(y)); per coordinate (v(s b g_i), unit mod p^digits).
    Phase {
        terms: Vec<(i64, u128)>,
    },
    Flip,
}

/// omega(g_1 ... g_k) phi for Borel letters g_i, evaluated on demand.
#[derive(Clone, Debug)]
pub struct BorelImage {
    base: SchwartzFn,
    ops: Vec<Op>,
    letters: Vec<Letter>,
    n: i64,
    m: i64,
    digits: u32,
}

fn pow_u128(p: u64, e: u32) -> u128 {
    (p as u128).pow(e)
}

impl BorelImage {
    pub fn identity(base: SchwartzFn) -> Self {
        let digits = Self::digit_cap(base.p());
        Self {
            n: base.outer_level(),
            m: base.inner_level(),
            base,
            ops: Vec::new(),
            letters: Vec::new(),
            digits,
        }
    }

    /// Largest k with p^k < 2^63, so products of residues fit.
    fn digit_cap(p: u64) -> u32 {
        let mut k = 0;
        while pow_u128(p, k + 1) < (1u128 << 63) {
            k += 1;
        }
        k
    }

    fn unit_digits(&self, x: &TruncatedPadic) -> Result<u128> {
        let k = self.digits.min(x.relative_precision());
        Ok(x.unit_mod(k)? as u128)
    }

    /// Applies the letters (rightmost first) to `base`.
    pub fn new(ctx: &WeilContext, letters: &[Letter], base: SchwartzFn) -> Result<Self> {
        let mut img = Self::identity(base);
        if img.base.rank() != ctx.rank() || img.base.p() != ctx.p() {
            return Err(ThetaError::Invalid(
                "function does not match the context".into(),
            ));
        }
        let c0 = ctx.psi().conductor_exponent();
        let min_vg = ctx
            .coeffs()
            .iter()
            .map(|g| g.valuation().unwrap())
            .min()
            .unwrap();
        let scale = ctx.psi().scale();
        let mut ops_rev = Vec::new();
        for letter in letters.iter().rev() {
            match letter {
                Letter::M(a) => {
                    let va = a.valuation().ok_or(ThetaError::ZeroArgument("m(a)"))?;
                    ops_rev.push(Op::Dilate {
                        va,
                        unit: img.unit_digits(a)?,
                        pref: ctx.m_prefactor(a)?,
                    });
                    img.n += va;
                    img.m -= va;
                }
                Letter::N(b) => {
                    if b.is_zero() {
                        continue;
                    }
                    let need = c0 - b.valuation().unwrap() - min_vg;
                    img.m = img
                        .m
                        .max(img.n + need)
                        .max(need.div_euclid(2) + need.rem_euclid(2));
                    let mut terms = Vec::new();
                    for g in ctx.coeffs() {
                        let c = &(&scale * b) * g;
                        terms.push((c.valuation().unwrap(), img.unit_digits(&c)?));
                    }
                    ops_rev.push(Op::Phase { terms });
                }
                Letter::EpsFlip => ops_rev.push(Op::Flip),
                Letter::W => return Err(ThetaError::Invalid("w is not a Borel letter".into())),
            }
        }
        ops_rev.reverse();
        img.ops = ops_rev;
        img.letters = letters.to_vec();
        Ok(img)
    }

    pub fn base(&self) -> &SchwartzFn {
        &self.base
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn is_plain(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn outer_level(&self) -> i64 {
        self.n
    }

    pub fn inner_level(&self) -> i64 {
        self.m
    }

    pub fn p(&self) -> u64 {
        self.base.p()
    }

    /// Value at y = p^{-s} z where z is known mod p^{s + M}.
    pub fn eval_scaled(&self, z: &[u64], s: i64) -> Complex64 {
        let p = self.p();
        let known = (s + self.m).max(0) as u32;
        if known > self.digits {
            return Complex64::new(f64::NAN, f64::NAN);
        }
        let modulus = pow_u128(p, known);
        let mut y: Vec<u128> = z.iter().map(|&c| c as u128 % modulus).collect();
        let mut e = -s;
        let mut factor = Complex64::new(1.0, 0.0);
        for op in &self.ops {
            match op {
                Op::Dilate { va, unit, pref } => {
                    let u = unit % modulus.max(1);
                    for c in y.iter_mut() {
                        *c = (*c * u) % modulus.max(1);
                    }
                    e += va;
                    factor *= pref;
                }
                Op::Phase { terms } => {
                    let mut frac = 0.0;
                    for ((w, u), c) in terms.iter().zip(&y) {
                        let k = -(w + 2 * e);
                        if k <= 0 {
                            continue;
                        }
                        let k = k as u32;
                        if k > self.digits {
                            return Complex64::new(f64::NAN, f64::NAN);
                        }
                        let mk = pow_u128(p, k);
                        let num = (u % mk) * ((c * c) % mk) % mk;
                        frac += num as f64 / mk as f64;
                    }
                    factor *= Complex64::from_polar(1.0, -2.0 * PI * frac.fract());
                }
                Op::Flip => factor = -factor,
            }
        }
        let nb = self.base.outer_level();
        let levels = (nb + self.base.inner_level()) as u32;
        let side = pow_u128(p, levels);
        let shift = nb + e;
        let mut t = Vec::with_capacity(y.len());
        for c in &y {
            if shift >= 0 {
                t.push(((pow_u128(p, shift.min(levels as i64) as u32) * c) % side) as u64);
            } else {
                let d = pow_u128(p, (-shift) as u32);
                if c % d != 0 {
                    return Complex64::new(0.0, 0.0);
                }
                t.push(((c / d) % side) as u64);
            }
        }
        factor * self.base.value_at(&t)
    }

    /// The same function as a grid at levels (max(N, 0), M).
    pub fn materialize(&self) -> Result<SchwartzFn> {
        let n = self.n.max(0);
        let rank = self.base.rank();
        SchwartzFn::from_fn(rank, self.p(), n, self.m, |t| self.eval_scaled(t, n))
    }
}
