//! The transform phi -> phi_0 from S(V) to S(U), Whittaker functions on
//! both sides and the verification batteries built on them.

mod battery;
mod verify;

pub use battery::{norm_class_function, random_function, Battery};
pub use verify::{
    bigcell_words, borel_words, equivariance_units, run_suite, square_class_samples,
    valuation_samples, verify_bigcell, verify_borel, verify_equivariance, verify_fundamental_lemma,
    verify_gauss, verify_parity, verify_square_class_vanishing, MatchReport, Moduli, Suite,
    SuiteResult,
};

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ThetaError};
use crate::exec::Exec;
use crate::padic::{AdditiveCharacter, LocalField, QuadraticCharacter, TruncatedPadic};
use crate::quadspace::{
    find_base_point, BasePoint, NormalizationEntry, NormalizationLedger, OrbitEngine, OrbitQuery,
    OrbitValue, QuadSpaceV, QuaternionAlgebra, StratumMass,
};
use crate::schwartz::{apply_word, BorelImage, Letter, MetaplecticWord, SchwartzFn, WeilContext};

/// Relative agreement required between two cell levels of a float integral.
const STABLE_TOL: f64 = 1e-12;

/// A complex number with exact rational parts.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExactComplex {
    pub re: BigRational,
    pub im: BigRational,
}

impl ExactComplex {
    pub fn from_complex(z: Complex64) -> Result<Self> {
        let conv = |x: f64| {
            BigRational::from_float(x)
                .ok_or_else(|| ThetaError::Invalid(format!("non-finite function value {x}")))
        };
        Ok(Self {
            re: conv(z.re)?,
            im: conv(z.im)?,
        })
    }

    pub fn real(x: BigRational) -> Self {
        Self {
            re: x,
            im: <BigRational as Zero>::zero(),
        }
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }

    pub fn scaled(&self, c: &BigRational) -> Self {
        Self {
            re: &self.re * c,
            im: &self.im * c,
        }
    }
}

impl OrbitValue for ExactComplex {
    fn zero() -> Self {
        Self::default()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(&self.re) && Zero::is_zero(&self.im)
    }
    fn add_signed(&mut self, x: &Self, sign: i8) {
        if sign > 0 {
            self.re += &x.re;
            self.im += &x.im;
        } else if sign < 0 {
            self.re -= &x.re;
            self.im -= &x.im;
        }
    }
    fn add(&mut self, x: &Self) {
        self.re += &x.re;
        self.im += &x.im;
    }
    fn scaled_q(&self, q: u64, e: i64) -> Self {
        let b = BigRational::from_integer(BigInt::from(q));
        self.scaled(&num_traits::pow::Pow::pow(&b, e as i32))
    }
}

/// Exact input data for a matching context.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContextSpec {
    pub p: u64,
    pub a: BigRational,
    pub b: BigRational,
    pub kappa: BigRational,
    pub psi_epsilon: BigRational,
    pub psi_d: i64,
}

impl ContextSpec {
    pub fn new(p: u64, a: i64, b: i64, kappa: i64) -> Self {
        let r = |x: i64| BigRational::from_integer(x.into());
        Self {
            p,
            a: r(a),
            b: r(b),
            kappa: r(kappa),
            psi_epsilon: r(1),
            psi_d: 0,
        }
    }
}

pub const DEFAULT_PRECISION: u32 = 20;
pub const MIN_PRECISION: u32 = 4;

/// Truncation caps and tolerances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchSettings {
    /// Relative p-adic precision of field elements.
    pub precision: u32,
    /// Cap on Gauss-integral shells for Weil indices.
    pub k_max: u32,
    /// Valuation window for sampled r.
    pub r_window: (i64, i64),
    pub tol: f64,
    pub tol_bigcell: f64,
}

impl Default for MatchSettings {
    fn default() -> Self {
        Self {
            precision: DEFAULT_PRECISION,
            k_max: 8,
            r_window: (-4, 6),
            tol: 1e-9,
            tol_bigcell: 1e-6,
        }
    }
}

/// Near-zero behaviour of phi_0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtensionMode {
    Constant,
    Vanishing,
}

/// Result of the transform.
#[derive(Clone, Debug)]
pub struct Phi0 {
    pub function: SchwartzFn,
    pub mode: ExtensionMode,
    /// phi_0 is constant (or zero) on p^onset O.
    pub onset: i64,
    /// Exact values at r = p^n u for the computed valuations.
    pub samples: BTreeMap<(i64, u64), ExactComplex>,
}

/// One Whittaker value on the V side with its stabilization check.
#[derive(Clone, Debug)]
pub struct WhittakerValue {
    pub value: Complex64,
    pub stabilized: bool,
    pub level: u32,
}

/// Everything needed to compare the two sides for one (B, kappa, psi).
pub struct MatchingContext {
    spec: ContextSpec,
    settings: MatchSettings,
    field: LocalField,
    v: QuadSpaceV,
    chi: QuadraticCharacter,
    psi: AdditiveCharacter,
    base: BasePoint,
    engine: OrbitEngine,
    weil_v: WeilContext,
    weil_u: WeilContext,
    normalization: NormalizationEntry,
    norm: BigRational,
}

impl MatchingContext {
    pub fn new(spec: ContextSpec, settings: MatchSettings, exec: Exec) -> Result<Self> {
        if settings.precision < MIN_PRECISION {
            return Err(ThetaError::Invalid(format!(
                "precision {} is below the minimum {MIN_PRECISION}",
                settings.precision
            )));
        }
        let field = LocalField::new(
            spec.p,
            settings
                .precision
                .min(OrbitEngine::native_precision(spec.p)),
        )?;
        field.require_odd()?;
        let a = field.rational(&spec.a);
        let b = field.rational(&spec.b);
        let kappa = field.rational(&spec.kappa);
        let v = QuadSpaceV::new(QuaternionAlgebra::new(a, b)?);
        let chi = QuadraticCharacter::new(kappa.clone())?;
        let inv = v.algebra().invariant();
        if inv == -1 && chi.is_trivial() {
            return Err(ThetaError::Inadmissible(
                "division algebra with trivial character: the lift vanishes".into(),
            ));
        }
        let psi = AdditiveCharacter::new(field.rational(&spec.psi_epsilon), spec.psi_d)?;
        let base = find_base_point(&v, &kappa, 100_000)?;
        let engine = OrbitEngine::new(&v, &base, &chi, exec)?;
        let weil_v = WeilContext::for_space(&psi, &v, settings.k_max, exec)?;
        let weil_u = WeilContext::for_line(&psi, &kappa, settings.k_max, exec)?;
        let labels = [
            spec.a.to_string(),
            spec.b.to_string(),
            spec.kappa.to_string(),
        ];
        let (normalization, norm) = NormalizationLedger::compute(&v, &chi, &engine, labels)?;
        Ok(Self {
            spec,
            settings,
            field,
            v,
            chi,
            psi,
            base,
            engine,
            weil_v,
            weil_u,
            normalization,
            norm,
        })
    }

    pub fn spec(&self) -> &ContextSpec {
        &self.spec
    }

    pub fn settings(&self) -> &MatchSettings {
        &self.settings
    }

    pub fn field(&self) -> &LocalField {
        &self.field
    }

    pub fn space(&self) -> &QuadSpaceV {
        &self.v
    }

    pub fn chi(&self) -> &QuadraticCharacter {
        &self.chi
    }

    pub fn psi(&self) -> &AdditiveCharacter {
        &self.psi
    }

    pub fn base_point(&self) -> &BasePoint {
        &self.base
    }

    pub fn kappa(&self) -> &TruncatedPadic {
        &self.base.kappa
    }

    pub fn engine(&self) -> &OrbitEngine {
        &self.engine
    }

    pub fn weil_v(&self) -> &WeilContext {
        &self.weil_v
    }

    pub fn weil_u(&self) -> &WeilContext {
        &self.weil_u
    }

    pub fn normalization(&self) -> &NormalizationEntry {
        &self.normalization
    }

    pub fn normalization_constant(&self) -> &BigRational {
        &self.norm
    }

    pub fn invariant(&self) -> i8 {
        self.v.algebra().invariant()
    }

    pub fn p(&self) -> u64 {
        self.spec.p
    }

    /// Least valuation of r with Omega_{r^2 kappa} meeting p^{-n} O^3.
    fn lowest_valuation(&self, n: i64) -> i64 {
        let min_vg = self
            .v
            .gram()
            .iter()
            .map(|g| g.valuation().unwrap())
            .min()
            .unwrap();
        let vk = self.kappa().valuation().unwrap();
        let d = min_vg - vk;
        d.div_euclid(2) + d.rem_euclid(2) - n
    }

    fn prepare(&self, phi: &SchwartzFn) -> Result<SchwartzFn> {
        if phi.rank() != 3 {
            return Err(ThetaError::Invalid(
                "the transform takes a rank 3 function".into(),
            ));
        }
        if phi.p() != self.p() {
            return Err(ThetaError::FieldMismatch(self.p(), phi.p()));
        }
        let n = phi.outer_level().max(0);
        phi.refine(n, phi.inner_level())
    }

    fn exact_values(phi: &SchwartzFn) -> Result<Vec<ExactComplex>> {
        phi.values()
            .iter()
            .map(|z| ExactComplex::from_complex(*z))
            .collect()
    }

    fn integrate(
        &self,
        phi: &SchwartzFn,
        vals: &[ExactComplex],
        r: &TruncatedPadic,
        min_level: u32,
        strata: bool,
    ) -> Result<(ExactComplex, BTreeMap<i64, StratumMass>)> {
        let n = phi.outer_level() as u32;
        let f_level = (phi.outer_level() + phi.inner_level()) as u32;
        let q = OrbitQuery {
            scale: n,
            f_level,
            min_level,
            strata,
            weighted: true,
        };
        let res = self
            .engine
            .integrate(r, &q, &|z: &[u64; 3]| vals[phi.flat_index(z)].clone())?;
        let sign = self.chi.eval(r)?;
        let c = &self.norm * BigRational::from_integer(sign.into());
        Ok((res.value.scaled(&c), res.strata))
    }

    /// phi_0(r) in exact arithmetic, with the per-stratum masses.
    pub fn phi0_at_exact(
        &self,
        phi: &SchwartzFn,
        r: &TruncatedPadic,
    ) -> Result<(ExactComplex, BTreeMap<i64, StratumMass>)> {
        let phi = self.prepare(phi)?;
        let vals = Self::exact_values(&phi)?;
        self.integrate(&phi, &vals, r, 0, true)
    }

    pub fn phi0_at(&self, phi: &SchwartzFn, r: &TruncatedPadic) -> Result<Complex64> {
        Ok(self.phi0_at_exact(phi, r)?.0.to_complex())
    }

    /// The full transform as a rank-1 function.
    pub fn transform_phi0(&self, phi: &SchwartzFn) -> Result<Phi0> {
        let phi = self.prepare(phi)?;
        let mode = if self.invariant() == 1 {
            ExtensionMode::Constant
        } else {
            ExtensionMode::Vanishing
        };
        let p = self.p();
        if phi.is_zero() {
            return Ok(Phi0 {
                function: SchwartzFn::zero(1, p),
                mode,
                onset: 0,
                samples: BTreeMap::new(),
            });
        }
        let vals = Self::exact_values(&phi)?;
        let n_lo = self.lowest_valuation(phi.outer_level());
        let m1 = (phi.outer_level() + phi.inner_level()).max(1);
        let modulus = (p as u128).pow(m1 as u32) as u64;
        let units: Vec<u64> = (1..modulus).filter(|u| u % p != 0).collect();
        let n_hi = self.settings.r_window.1.max(n_lo + 2);
        let mut samples = BTreeMap::new();
        let mut rows: Vec<Vec<ExactComplex>> = Vec::new();
        let mut onset = None;
        for n in n_lo..=n_hi {
            let mut row = Vec::with_capacity(units.len());
            for &u in &units {
                let r = self.field.element(n, u as i64)?;
                let (val, _) = self.integrate(&phi, &vals, &r, 0, false)?;
                samples.insert((n, u), val.clone());
                row.push(val);
            }
            rows.push(row);
            if rows.len() >= 2 {
                let prev = &rows[rows.len() - 2];
                let cur = &rows[rows.len() - 1];
                let c = &prev[0];
                let flat = prev.iter().chain(cur.iter()).all(|x| x == c);
                let ok = match mode {
                    ExtensionMode::Constant => flat,
                    ExtensionMode::Vanishing => flat && OrbitValue::is_zero(c),
                };
                if ok {
                    onset = Some(n - 1);
                    break;
                }
            }
        }
        let Some(m0) = onset else {
            return Err(ThetaError::Extension(format!(
                "phi_0 did not become {} near 0 for valuations {n_lo}..={n_hi}",
                match mode {
                    ExtensionMode::Constant => "constant",
                    ExtensionMode::Vanishing => "zero",
                }
            )));
        };
        let near = rows[(m0 - n_lo) as usize][0].to_complex();
        let n0 = -n_lo;
        let m0_level = m0 - 1 + m1;
        let row_of = |n: i64, u: u64| -> Complex64 {
            let idx = units.binary_search(&(u % modulus)).unwrap();
            rows[(n - n_lo) as usize][idx].to_complex()
        };
        let function = SchwartzFn::from_fn(1, p, n0, m0_level, |t| {
            let t = t[0];
            if t == 0 {
                return near;
            }
            let mut vt = 0i64;
            let mut u = t;
            while u % p == 0 {
                u /= p;
                vt += 1;
            }
            let n = vt - n0;
            if n >= m0 {
                near
            } else {
                row_of(n, u)
            }
        })?;
        Ok(Phi0 {
            function,
            mode,
            onset: m0,
            samples,
        })
    }

    /// Float orbit integral of a lazily evaluated function at r, scaled by
    /// c chi(r).
    fn integrate_image(
        &self,
        img: &BorelImage,
        r: &TruncatedPadic,
        min_level: u32,
    ) -> Result<(Complex64, u32)> {
        let scale = img.outer_level().max(0);
        let f_level = scale + img.inner_level();
        if f_level < 0 {
            return Err(ThetaError::Invalid("image has negative total level".into()));
        }
        let q = OrbitQuery {
            scale: scale as u32,
            f_level: f_level as u32,
            min_level,
            strata: false,
            weighted: true,
        };
        let res = self
            .engine
            .integrate(r, &q, &|z: &[u64; 3]| img.eval_scaled(z, scale))?;
        if !res.value.re.is_finite() || !res.value.im.is_finite() {
            return Err(ThetaError::Precision(
                "lazy evaluation ran out of residue digits".into(),
            ));
        }
        let c = self.norm.to_f64().unwrap_or(f64::NAN) * self.chi.eval(r)? as f64;
        Ok((res.value * c, f_level as u32))
    }

    /// omega(g) phi with g a Borel word, kept lazy.
    pub fn borel_image(&self, phi: &SchwartzFn, word: &MetaplecticWord) -> Result<BorelImage> {
        if !word.is_borel() {
            return Err(ThetaError::Invalid(format!("{word} is not a Borel word")));
        }
        BorelImage::new(&self.weil_v, &word.letters, phi.clone())
    }

    /// phi_0(r) of a lazily evaluated function; exact when no letters act.
    pub fn phi0_image_at(&self, img: &BorelImage, r: &TruncatedPadic) -> Result<Complex64> {
        if img.is_plain() {
            return self.phi0_at(img.base(), r);
        }
        Ok(self.integrate_image(img, r, 0)?.0)
    }

    /// Least valuation of r at which phi_0 of the image can be nonzero.
    pub fn image_lowest_valuation(&self, img: &BorelImage) -> i64 {
        self.lowest_valuation(img.outer_level().max(0))
    }

    /// W_phi(g): the weighted orbit integral of omega(g) phi at r = 1,
    /// checked at two consecutive cell levels. Letters left of the first w
    /// are applied lazily.
    pub fn whittaker_v(&self, phi: &SchwartzFn, word: &MetaplecticWord) -> Result<WhittakerValue> {
        let split = word
            .letters
            .iter()
            .position(|l| matches!(l, Letter::W))
            .unwrap_or(word.letters.len());
        let (prefix, rest) = word.letters.split_at(split);
        let dense = if rest.is_empty() {
            phi.clone()
        } else {
            apply_word(&self.weil_v, &MetaplecticWord::new(rest.to_vec()), phi)?
        };
        let floor = dense.max_abs();
        let img = BorelImage::new(&self.weil_v, prefix, dense)?;
        let one = self.field.one();
        let (a, level) = self.integrate_image(&img, &one, 0)?;
        let (b, _) = self.integrate_image(&img, &one, level + 1)?;
        let tol = STABLE_TOL * a.norm().max(b.norm()).max(floor);
        Ok(WhittakerValue {
            value: a,
            stabilized: (a - b).norm() <= tol,
            level,
        })
    }

    /// W_{phi_0}(g) = (omega_0(g) phi_0)(1).
    pub fn whittaker_u(&self, phi0: &SchwartzFn, word: &MetaplecticWord) -> Result<Complex64> {
        apply_word(&self.weil_u, word, phi0)?.eval(&[self.field.one()])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_division_with_trivial_character() {
        // (-1, 3)_3 = -1 and -(-1) = 1 is a square
        let r = MatchingContext::new(
            ContextSpec::new(3, -1, 3, -1),
            MatchSettings::default(),
            Exec::Sequential,
        );
        assert!(matches!(
            r,
            Err(ThetaError::NotRepresented) | Err(ThetaError::Inadmissible(_))
        ));
    }

    #[test]
    fn fundamental_lemma_small() {
        let ctx = MatchingContext::new(
            ContextSpec::new(3, 1, 1, 1),
            MatchSettings::default(),
            Exec::Sequential,
        )
        .unwrap();
        let phi = SchwartzFn::char_lattice(3, 3, 0);
        let out = ctx.transform_phi0(&phi).unwrap();
        assert_eq!(out.function, SchwartzFn::char_lattice(1, 3, 0));
        assert_eq!(out.mode, ExtensionMode::Constant);
    }

    #[test]
    fn zero_maps_to_zero() {
        let ctx = MatchingContext::new(
            ContextSpec::new(5, 1, 2, 2),
            MatchSettings::default(),
            Exec::Sequential,
        )
        .unwrap();
        let out = ctx.transform_phi0(&SchwartzFn::zero(3, 5)).unwrap();
        assert!(out.function.is_zero());
    }
}
