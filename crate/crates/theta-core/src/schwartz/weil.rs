//! Generators of the Weil representation on S(F^rank) for the diagonal form
//! Q(x) = sum g_i x_i^2 with pairing B(x, y) = 2 sum g_i x_i y_i.

use std::f64::consts::PI;
use std::fmt;
use std::sync::OnceLock;

use num_complex::Complex64;

use super::{checked_pow, grid_len, SchwartzFn};
use crate::error::{Result, ThetaError};
use crate::exec::{self, Exec};
use crate::padic::{
    hilbert_padic, weil_gamma, weil_index, AdditiveCharacter, TruncatedPadic, UnitRoot,
};
use crate::quadspace::QuadSpaceV;

/// Weil representation data for one quadratic space.
#[derive(Debug)]
pub struct WeilContext {
    psi: AdditiveCharacter,
    coeffs: Vec<TruncatedPadic>,
    /// Second argument of the Hilbert symbol in the m(a) prefactor.
    symbol_arg: TruncatedPadic,
    gamma_form: UnitRoot,
    k_max: u32,
    measure: OnceLock<f64>,
    exec: Exec,
}

impl WeilContext {
    /// The space V with Q = nu. gamma(psi o V) is taken as
    /// gamma(2, psi^{1/2}) gamma(psi^{1/2})^3 times the Hasse invariant.
    pub fn for_space(
        psi: &AdditiveCharacter,
        v: &QuadSpaceV,
        k_max: u32,
        exec: Exec,
    ) -> Result<Self> {
        let f = psi.field();
        f.require_odd()?;
        if f.p() != v.p() {
            return Err(ThetaError::FieldMismatch(f.p(), v.p()));
        }
        let half = f.ratio(1, 2);
        let g_half = weil_gamma(&half, psi, k_max)?;
        let gamma_form = weil_index(&f.int(2), psi, k_max)?
            * g_half.pow(3)
            * UnitRoot::from_sign(v.hasse_invariant());
        Ok(Self {
            psi: psi.clone(),
            coeffs: v.gram().to_vec(),
            symbol_arg: f.int(-2),
            gamma_form,
            k_max,
            measure: OnceLock::new(),
            exec,
        })
    }

    /// The line U with Q(x) = kappa x^2.
    pub fn for_line(
        psi: &AdditiveCharacter,
        kappa: &TruncatedPadic,
        k_max: u32,
        exec: Exec,
    ) -> Result<Self> {
        let f = psi.field();
        f.require_odd()?;
        if kappa.is_zero() {
            return Err(ThetaError::ZeroArgument("kappa"));
        }
        Ok(Self {
            psi: psi.clone(),
            coeffs: vec![kappa.clone()],
            symbol_arg: &f.int(2) * kappa,
            gamma_form: weil_gamma(kappa, psi, k_max)?,
            k_max,
            measure: OnceLock::new(),
            exec,
        })
    }

    pub fn rank(&self) -> usize {
        self.coeffs.len()
    }

    pub fn p(&self) -> u64 {
        self.psi.field().p()
    }

    pub fn psi(&self) -> &AdditiveCharacter {
        &self.psi
    }

    pub fn coeffs(&self) -> &[TruncatedPadic] {
        &self.coeffs
    }

    pub fn k_max(&self) -> u32 {
        self.k_max
    }

    pub fn exec(&self) -> Exec {
        self.exec
    }

    /// The Weil index used by the w-operator.
    pub fn gamma_form(&self) -> UnitRoot {
        self.gamma_form
    }

    /// prod_i gamma(psi^{g_i}), computed coordinate by coordinate.
    pub fn gamma_form_direct(&self) -> Result<UnitRoot> {
        self.coeffs.iter().try_fold(UnitRoot::ONE, |acc, g| {
            Ok(acc * weil_gamma(g, &self.psi, self.k_max)?)
        })
    }

    /// Self-dual measure constant, found from the inversion formula applied
    /// to the characteristic function of the standard lattice.
    pub fn measure_constant(&self) -> Result<f64> {
        if let Some(c) = self.measure.get() {
            return Ok(*c);
        }
        let unit = SchwartzFn::char_lattice(self.rank(), self.p(), 0);
        let twice = raw_fourier(self, &raw_fourier(self, &unit)?)?;
        let at0 = twice.value_at(&vec![0; self.rank()]);
        if at0.re <= 0.0 || at0.im.abs() > 1e-12 * at0.re {
            return Err(ThetaError::Precision(format!(
                "inversion constant {at0} is not positive"
            )));
        }
        let c = 1.0 / at0.re.sqrt();
        Ok(*self.measure.get_or_init(|| c))
    }

    /// prod_i |2 g_i eps p^d|^{1/2}, the closed form of the measure constant.
    pub fn measure_constant_formula(&self) -> f64 {
        let vs = self.psi.scale().valuation().unwrap();
        let total: i64 = self
            .coeffs
            .iter()
            .map(|g| g.valuation().unwrap() + vs)
            .sum();
        (self.p() as f64).powf(-(total as f64) / 2.0)
    }

    /// |a|^{rank/2} (a, s) gamma(a, psi^{1/2})^{-1}.
    pub fn m_prefactor(&self, a: &TruncatedPadic) -> Result<Complex64> {
        if a.is_zero() {
            return Err(ThetaError::ZeroArgument("m(a)"));
        }
        let va = a.valuation().unwrap();
        let abs = (self.p() as f64).powf(-(va as f64) * self.rank() as f64 / 2.0);
        let sym = hilbert_padic(a, &self.symbol_arg)?;
        let gamma = weil_index(a, &self.psi, self.k_max)?;
        Ok((gamma.inv() * UnitRoot::from_sign(sym)).to_complex() * abs)
    }

    fn check(&self, phi: &SchwartzFn) -> Result<()> {
        if phi.p() != self.p() {
            return Err(ThetaError::FieldMismatch(self.p(), phi.p()));
        }
        if phi.rank() != self.rank() {
            return Err(ThetaError::Invalid(format!(
                "function of rank {} given to a rank {} context",
                phi.rank(),
                self.rank()
            )));
        }
        Ok(())
    }
}

/// A generator of the metaplectic group.
#[derive(Clone, Debug, PartialEq)]
pub enum Letter {
    M(TruncatedPadic),
    N(TruncatedPadic),
    W,
    EpsFlip,
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Letter::M(a) => write!(f, "m({})", a.to_rational()),
            Letter::N(b) => write!(f, "n({})", b.to_rational()),
            Letter::W => write!(f, "w"),
            Letter::EpsFlip => write!(f, "eps"),
        }
    }
}

/// The product g_1 g_2 ... g_k of generators; acting on functions the
/// rightmost letter is applied first.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetaplecticWord {
    pub letters: Vec<Letter>,
}

impl MetaplecticWord {
    pub fn new(letters: Vec<Letter>) -> Self {
        Self { letters }
    }

    pub fn identity() -> Self {
        Self::default()
    }

    pub fn m(a: TruncatedPadic) -> Self {
        Self::new(vec![Letter::M(a)])
    }

    pub fn n(b: TruncatedPadic) -> Self {
        Self::new(vec![Letter::N(b)])
    }

    pub fn w() -> Self {
        Self::new(vec![Letter::W])
    }

    pub fn contains_w(&self) -> bool {
        self.letters.contains(&Letter::W)
    }

    /// Borel words only contain m, n and eps.
    pub fn is_borel(&self) -> bool {
        !self.contains_w()
    }
}

impl fmt::Display for MetaplecticWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self.letters.iter().map(|l| l.to_string()).collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Numerators of psi(c x^2) on the grid x = t p^{-n}, over the common
/// denominator p^k: psi = exp(-2 pi i num / p^k).
fn quadratic_phases(
    psi: &AdditiveCharacter,
    coeff: &TruncatedPadic,
    n: i64,
    side: u64,
) -> Result<(Vec<u64>, u32)> {
    let c = &psi.scale() * coeff;
    let Some(w) = c.valuation() else {
        return Ok((vec![0; side as usize], 0));
    };
    let k = 2 * n - w;
    if k <= 0 {
        return Ok((vec![0; side as usize], 0));
    }
    let k = k as u32;
    if k > c.relative_precision() {
        return Err(ThetaError::Precision(
            "multiplier known to too few digits".into(),
        ));
    }
    let modulus = checked_pow(psi.field().p(), k as i64)? as u128;
    let u = c.unit_mod(k)? as u128;
    let nums = (0..side as u128)
        .map(|t| (u * ((t * t) % modulus) % modulus) as u64)
        .collect();
    Ok((nums, k))
}

/// omega(n(b)): multiplication by psi(b Q(x)).
pub fn op_n(ctx: &WeilContext, b: &TruncatedPadic, phi: &SchwartzFn) -> Result<SchwartzFn> {
    ctx.check(phi)?;
    if b.is_zero() {
        return Ok(phi.clone());
    }
    let c0 = ctx.psi.conductor_exponent();
    let vb = b.valuation().unwrap();
    let min_vg = ctx
        .coeffs
        .iter()
        .map(|g| g.valuation().unwrap())
        .min()
        .unwrap();
    let n = phi.outer_level();
    let need = c0 - vb - min_vg;
    let m = phi
        .inner_level()
        .max(n + need)
        .max(need.div_euclid(2) + need.rem_euclid(2));
    let phi = phi.refine(n, m)?;
    let side = phi.side();
    let tables: Vec<(Vec<u64>, u32)> = ctx
        .coeffs
        .iter()
        .map(|g| quadratic_phases(&ctx.psi, &(b * g), n, side))
        .collect::<Result<_>>()?;
    let kmax = tables.iter().map(|t| t.1).max().unwrap();
    let p = ctx.p();
    let modulus = checked_pow(p, kmax as i64)? as u128;
    let lifts: Vec<u128> = tables
        .iter()
        .map(|t| checked_pow(p, (kmax - t.1) as i64).map(|x| x as u128))
        .collect::<Result<_>>()?;
    let rank = ctx.rank();
    let vals = phi.values();
    let out = exec::map_range(ctx.exec, vals.len(), |flat| {
        let z = vals[flat];
        if z.re == 0.0 && z.im == 0.0 {
            return z;
        }
        let mut r = flat as u64;
        let mut num = 0u128;
        for i in (0..rank).rev() {
            let t = (r % side) as usize;
            r /= side;
            num = (num + tables[i].0[t] as u128 * lifts[i]) % modulus;
        }
        z * Complex64::from_polar(1.0, -2.0 * PI * num as f64 / modulus as f64)
    });
    SchwartzFn::new(rank, p, n, m, out)
}

/// omega(m(a)): phi -> prefactor * phi(a x).
pub fn op_m(ctx: &WeilContext, a: &TruncatedPadic, phi: &SchwartzFn) -> Result<SchwartzFn> {
    ctx.check(phi)?;
    let pref = ctx.m_prefactor(a)?;
    let va = a.valuation().unwrap();
    let (n, m) = (phi.outer_level(), phi.inner_level());
    let side = phi.side();
    let levels = (n + m) as u32;
    let u = if levels == 0 {
        0
    } else {
        if levels > a.relative_precision() {
            return Err(ThetaError::Precision(
                "dilation known to too few digits".into(),
            ));
        }
        a.unit_mod(levels)? as u128
    };
    let rank = ctx.rank();
    let vals = phi.values();
    let out = exec::map_range(ctx.exec, vals.len(), |flat| {
        let mut r = flat as u64;
        let mut src = 0u64;
        let mut mult = 1u64;
        for _ in 0..rank {
            let t = r % side;
            r /= side;
            src += mult * ((u * t as u128) % side as u128) as u64;
            mult = mult.wrapping_mul(side);
        }
        vals[src as usize] * pref
    });
    SchwartzFn::new(rank, ctx.p(), n + va, m - va, out)
}

/// Fourier transform along one axis of a row-major array.
fn axis_transform(
    exec: Exec,
    data: &[Complex64],
    dims: &[usize],
    axis: usize,
    kernel: &[Complex64],
    dout: usize,
) -> Vec<Complex64> {
    let din = dims[axis];
    let outer: usize = dims[..axis].iter().product();
    let inner: usize = dims[axis + 1..].iter().product();
    let rows = exec::map_range(exec, outer * dout, |ok| {
        let (o, k) = (ok / dout, ok % dout);
        let krow = &kernel[k * din..(k + 1) * din];
        let mut acc = vec![Complex64::new(0.0, 0.0); inner];
        for (j, kv) in krow.iter().enumerate() {
            let src = &data[(o * din + j) * inner..(o * din + j + 1) * inner];
            if src.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
                continue;
            }
            for (a, s) in acc.iter_mut().zip(src) {
                *a += kv * s;
            }
        }
        acc
    });
    rows.concat()
}

/// phi -> int phi(y) psi(-B(x, y)) dy with dy giving O^rank volume 1.
fn raw_fourier(ctx: &WeilContext, phi: &SchwartzFn) -> Result<SchwartzFn> {
    let p = ctx.p();
    let (n, m) = (phi.outer_level(), phi.inner_level());
    let scale = ctx.psi.scale();
    let two = ctx.psi.field().int(2);
    let cs: Vec<TruncatedPadic> = ctx.coeffs.iter().map(|g| &(&two * g) * &scale).collect();
    let vc: Vec<i64> = cs.iter().map(|c| c.valuation().unwrap()).collect();
    let n2 = vc.iter().map(|v| m + v).max().unwrap();
    let m2 = vc.iter().map(|v| n - v).max().unwrap();
    let rank = ctx.rank();
    grid_len(p, rank, n2 + m2)?;
    let din = checked_pow(p, n + m)? as usize;
    let dout = checked_pow(p, n2 + m2)? as usize;
    let cell = (p as f64).powi(-(m as i32));
    let mut dims = vec![din; rank];
    let mut data = phi.values().to_vec();
    for axis in 0..rank {
        let k = n + n2 - vc[axis];
        // outputs with |x| too large see a nontrivial character on each cell
        let support = checked_pow(p, n2 - m - vc[axis])? as usize;
        let mut kernel: Vec<Complex64> = if k <= 0 {
            vec![Complex64::new(cell, 0.0); din * dout]
        } else {
            if k as u32 > cs[axis].relative_precision() {
                return Err(ThetaError::Precision(
                    "form coefficient known to too few digits".into(),
                ));
            }
            let modulus = checked_pow(p, k)? as u128;
            let u = cs[axis].unit_mod(k as u32)? as u128;
            let mut kern = Vec::with_capacity(din * dout);
            for x in 0..dout as u128 {
                let ux = u * (x % modulus) % modulus;
                for y in 0..din as u128 {
                    let num = ux * (y % modulus) % modulus;
                    kern.push(Complex64::from_polar(
                        cell,
                        2.0 * PI * num as f64 / modulus as f64,
                    ));
                }
            }
            kern
        };
        for x in (0..dout).filter(|x| x % support != 0) {
            kernel[x * din..(x + 1) * din].fill(Complex64::new(0.0, 0.0));
        }
        data = axis_transform(ctx.exec, &data, &dims, axis, &kernel, dout);
        dims[axis] = dout;
    }
    SchwartzFn::new(rank, p, n2, m2, data)
}

/// omega(w): gamma^{-1} times the self-dual Fourier transform for psi(-B).
pub fn op_w(ctx: &WeilContext, phi: &SchwartzFn) -> Result<SchwartzFn> {
    ctx.check(phi)?;
    let c = ctx.measure_constant()?;
    let out = raw_fourier(ctx, phi)?;
    Ok(out.scale(ctx.gamma_form.inv().to_complex() * c))
}

/// Applies the word, rightmost letter first.
pub fn apply_word(
    ctx: &WeilContext,
    word: &MetaplecticWord,
    phi: &SchwartzFn,
) -> Result<SchwartzFn> {
    ctx.check(phi)?;
    let mut cur = phi.clone();
    for letter in word.letters.iter().rev() {
        cur = match letter {
            Letter::M(a) => op_m(ctx, a, &cur)?,
            Letter::N(b) => op_n(ctx, b, &cur)?,
            Letter::W => op_w(ctx, &cur)?,
            Letter::EpsFlip => cur.scale(Complex64::new(-1.0, 0.0)),
        };
    }
    Ok(cur)
}
