//! Verification batteries producing one report per compared quantity.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Battery, ContextSpec, ExactComplex, MatchSettings, MatchingContext};
use crate::error::{Result, ThetaError};
use crate::exec::{self, Exec};
use crate::padic::{
    gauss_integral, hilbert_symbol, weil_index, AdditiveCharacter, LocalField, Place,
    QuadraticCharacter,
};
use crate::schwartz::{apply_word, Letter, MetaplecticWord, SchwartzFn};

/// Truncation data attached to a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Moduli {
    #[serde(rename = "M")]
    pub m: u32,
    pub n_gauss: u32,
    pub window: [i64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub identity: String,
    pub params: BTreeMap<String, String>,
    pub lhs: [f64; 2],
    pub rhs: [f64; 2],
    pub abs_err: f64,
    pub rel_err: f64,
    pub ratio: Option<[f64; 2]>,
    pub moduli: Moduli,
    pub pass: bool,
}

impl MatchReport {
    /// Compares lhs with rhs; passes when stabilized and either the relative
    /// error is within `tol` or the absolute error is within `tol * floor`.
    #[allow(clippy::too_many_arguments)]
    pub fn compare(
        identity: &str,
        params: BTreeMap<String, String>,
        lhs: Complex64,
        rhs: Complex64,
        tol: f64,
        floor: f64,
        stabilized: bool,
        moduli: Moduli,
    ) -> Self {
        let abs_err = (lhs - rhs).norm();
        let scale = lhs.norm().max(rhs.norm());
        let rel_err = if scale == 0.0 { 0.0 } else { abs_err / scale };
        let ratio = (rhs.norm() > 0.0).then(|| {
            let r = lhs / rhs;
            [r.re, r.im]
        });
        let pass = stabilized && abs_err.is_finite() && (rel_err <= tol || abs_err <= tol * floor);
        Self {
            identity: identity.into(),
            params,
            lhs: [lhs.re, lhs.im],
            rhs: [rhs.re, rhs.im],
            abs_err,
            rel_err,
            ratio,
            moduli,
            pass,
        }
    }

    /// Exact comparison.
    pub fn exact(
        identity: &str,
        params: BTreeMap<String, String>,
        lhs: &ExactComplex,
        rhs: &ExactComplex,
        moduli: Moduli,
    ) -> Self {
        let mut r = Self::compare(
            identity,
            params,
            lhs.to_complex(),
            rhs.to_complex(),
            0.0,
            0.0,
            true,
            moduli,
        );
        r.pass = lhs == rhs;
        r
    }

    /// Reports marked non-blocking do not affect the exit status.
    pub fn blocking(&self) -> bool {
        self.params
            .get("blocking")
            .map(|s| s != "false")
            .unwrap_or(true)
    }

    pub fn line(&self) -> String {
        let params: Vec<String> = self
            .params
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        format!(
            "{} {} [{}] rel_err={:.3e}",
            if self.pass { "PASS" } else { "FAIL" },
            self.identity,
            params.join(" "),
            self.rel_err
        )
    }
}

/// Named verification batteries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Fl,
    Borel,
    Bigcell,
    Equivariance,
    Parity,
    Gauss,
    All,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Fl,
        Suite::Borel,
        Suite::Bigcell,
        Suite::Equivariance,
        Suite::Parity,
        Suite::Gauss,
        Suite::All,
    ];
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Suite::Fl => "fl",
            Suite::Borel => "borel",
            Suite::Bigcell => "bigcell",
            Suite::Equivariance => "equivariance",
            Suite::Parity => "parity",
            Suite::Gauss => "gauss",
            Suite::All => "all",
        };
        f.write_str(s)
    }
}

impl FromStr for Suite {
    type Err = ThetaError;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.to_string() == s)
            .ok_or_else(|| ThetaError::Invalid(format!("unknown suite {s}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub failed_blocking: usize,
}

/// Reports of one run with a summary and the configuration echo.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub suite: String,
    pub reports: Vec<MatchReport>,
    pub summary: Summary,
    pub config: serde_json::Value,
    pub version: String,
}

impl SuiteResult {
    pub fn new(suite: Suite, reports: Vec<MatchReport>, config: serde_json::Value) -> Self {
        let passed = reports.iter().filter(|r| r.pass).count();
        let failed_blocking = reports.iter().filter(|r| !r.pass && r.blocking()).count();
        Self {
            suite: suite.to_string(),
            summary: Summary {
                total: reports.len(),
                passed,
                failed: reports.len() - passed,
                failed_blocking,
            },
            reports,
            config,
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }

    pub fn success(&self) -> bool {
        self.summary.failed_blocking == 0
    }
}

fn params(ctx: &MatchingContext, extra: &[(&str, String)]) -> BTreeMap<String, String> {
    let s = ctx.spec();
    let mut m = BTreeMap::new();
    m.insert("p".into(), s.p.to_string());
    m.insert("a".into(), s.a.to_string());
    m.insert("b".into(), s.b.to_string());
    m.insert("kappa".into(), s.kappa.to_string());
    for (k, v) in extra {
        m.insert((*k).into(), v.clone());
    }
    m
}

fn moduli(ctx: &MatchingContext, m: u32) -> Moduli {
    let w = ctx.settings().r_window;
    Moduli {
        m,
        n_gauss: ctx.settings().k_max,
        window: [w.0, w.1],
    }
}

fn exact_int(n: i64) -> ExactComplex {
    ExactComplex::real(BigRational::from_integer(n.into()))
}

fn q_pow(q: u64, e: i64) -> BigRational {
    let b = BigRational::from_integer(BigInt::from(q));
    num_traits::pow::Pow::pow(&b, e as i32)
}

/// phi_0 of the standard lattice function equals Char(O) exactly, and the
/// per-stratum masses follow (q +- 1) q^{i-1} with signs (-1)^i or 1.
pub fn verify_fundamental_lemma(
    p: u64,
    kappa: i64,
    settings: &MatchSettings,
    exec: Exec,
) -> Result<Vec<MatchReport>> {
    let ctx = MatchingContext::new(ContextSpec::new(p, 1, kappa, kappa), settings.clone(), exec)?;
    if ctx.kappa().valuation() != Some(0) || !ctx.chi().is_unramified() || ctx.invariant() != 1 {
        return Err(ThetaError::Inadmissible(
            "the fundamental lemma needs a unit kappa, unramified chi and a split algebra".into(),
        ));
    }
    let phi = SchwartzFn::char_lattice(3, p, 0);
    let field = *ctx.field();
    let q = p;
    let trivial = ctx.chi().is_trivial();
    let mut out = Vec::new();
    let c = ctx.normalization_constant().clone();
    for n in -4i64..=4 {
        for u in 1..p {
            let r = field.element(n, u as i64)?;
            let (val, strata) = ctx.phi0_at_exact(&phi, &r)?;
            let expect = exact_int(if n >= 0 { 1 } else { 0 });
            let extra = [("r", format!("{p}^{n}*{u}")), ("chi", chi_label(ctx.chi()))];
            out.push(MatchReport::exact(
                "fundamental_lemma",
                params(&ctx, &extra),
                &val,
                &expect,
                moduli(&ctx, 0),
            ));
            if u != 1 || n < 0 {
                continue;
            }
            // strata keyed by v_min(y) = j; in x = y / r this is i = n - j
            let qn = q_pow(q, n);
            for (j, sm) in &strata {
                let i = n - j;
                let mass = &sm.mass * &c * &qn;
                let expect_mass = if i == 0 {
                    BigRational::one()
                } else {
                    let base = if trivial { q - 1 } else { q + 1 };
                    BigRational::from_integer(BigInt::from(base)) * q_pow(q, i - 1)
                };
                let sign: i64 = if trivial || i % 2 == 0 { 1 } else { -1 };
                let weight_ok = sm.weighted == &sm.mass * BigRational::from_integer(sign.into());
                let extra = [
                    ("n", n.to_string()),
                    ("stratum", i.to_string()),
                    ("sign", sign.to_string()),
                    ("weight_ok", weight_ok.to_string()),
                ];
                let mut rep = MatchReport::exact(
                    "fl_stratum_mass",
                    params(&ctx, &extra),
                    &ExactComplex::real(mass.clone()),
                    &ExactComplex::real(expect_mass.clone()),
                    moduli(&ctx, 0),
                );
                rep.pass = rep.pass && weight_ok;
                out.push(rep);
            }
        }
    }
    let full = ctx.transform_phi0(&phi)?;
    let target = SchwartzFn::char_lattice(1, p, 0);
    let mut rep = MatchReport::compare(
        "fundamental_lemma_function",
        params(&ctx, &[("onset", full.onset.to_string())]),
        Complex64::new(full.function.max_abs(), 0.0),
        Complex64::new(1.0, 0.0),
        0.0,
        0.0,
        true,
        moduli(&ctx, 0),
    );
    rep.abs_err = full.function.max_abs_diff(&target)?;
    rep.rel_err = rep.abs_err;
    rep.pass = full.function == target;
    out.push(rep);
    Ok(out)
}

fn chi_label(chi: &QuadraticCharacter) -> String {
    if chi.is_trivial() {
        "trivial".into()
    } else if chi.is_unramified() {
        "unramified".into()
    } else {
        "ramified".into()
    }
}

/// Square-class representatives {1, u, p, u p}.
pub fn square_class_samples(field: &LocalField) -> Vec<crate::padic::TruncatedPadic> {
    field.square_class_reps().to_vec()
}

/// b = p^k for k in -2..=2.
pub fn valuation_samples(field: &LocalField) -> Vec<crate::padic::TruncatedPadic> {
    (-2..=2).map(|k| field.one().shift(k)).collect()
}

/// W_phi and W_{phi_0} on m(a) and n(b).
pub fn verify_borel(
    ctx: &MatchingContext,
    phis: &[SchwartzFn],
    a_samples: &[crate::padic::TruncatedPadic],
    b_samples: &[crate::padic::TruncatedPadic],
) -> Result<Vec<MatchReport>> {
    let mut words: Vec<MetaplecticWord> = a_samples
        .iter()
        .map(|a| MetaplecticWord::m(a.clone()))
        .collect();
    words.extend(b_samples.iter().map(|b| MetaplecticWord::n(b.clone())));
    let per_phi = exec::try_map(ctx.engine().exec(), phis, |phi| {
        let phi0 = ctx.transform_phi0(phi)?;
        let mut reps = Vec::new();
        for word in &words {
            let lhs = ctx.whittaker_v(phi, word)?;
            let rhs = ctx.whittaker_u(&phi0.function, word)?;
            reps.push(MatchReport::compare(
                "borel",
                params(ctx, &[("word", word.to_string())]),
                lhs.value,
                rhs,
                ctx.settings().tol,
                phi.max_abs(),
                lhs.stabilized,
                moduli(ctx, lhs.level),
            ));
        }
        Ok::<_, ThetaError>(reps)
    })?;
    Ok(per_phi.into_iter().flatten().collect())
}

/// Default big-cell words.
pub fn bigcell_words(field: &LocalField) -> Vec<MetaplecticWord> {
    let u = field.square_class_reps()[1].clone();
    vec![
        MetaplecticWord::w(),
        MetaplecticWord::new(vec![Letter::N(field.one().shift(-1)), Letter::W]),
        MetaplecticWord::new(vec![Letter::M(u), Letter::W]),
        MetaplecticWord::new(vec![Letter::W, Letter::N(field.one())]),
    ]
}

/// W_phi(g) / W_{phi_0}(g) on words containing w: constant over the
/// battery, and equal to 1 (blocking only when chi is nontrivial).
pub fn verify_bigcell(
    ctx: &MatchingContext,
    phis: &[SchwartzFn],
    words: &[MetaplecticWord],
) -> Result<Vec<MatchReport>> {
    let tol = ctx.settings().tol_bigcell;
    let rows = exec::try_map(ctx.engine().exec(), phis, |phi| {
        let phi0 = ctx.transform_phi0(phi)?;
        words
            .iter()
            .map(|word| {
                let lhs = ctx.whittaker_v(phi, word)?;
                let rhs = ctx.whittaker_u(&phi0.function, word)?;
                Ok((word.to_string(), lhs, rhs, phi.max_abs()))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let rows: Vec<_> = rows.into_iter().flatten().collect();
    let mut out = Vec::new();
    let usable: Vec<_> = rows
        .iter()
        .filter(|(_, l, r, s)| r.norm() > 1e-6 * s && l.value.norm() > 1e-6 * s)
        .collect();
    let reference = usable.first().map(|(_, l, r, _)| l.value / r);
    for (word, lhs, rhs, scale) in &rows {
        let mut rep = MatchReport::compare(
            "bigcell_value",
            params(ctx, &[("word", word.clone()), ("blocking", "false".into())]),
            lhs.value,
            *rhs,
            tol,
            *scale,
            lhs.stabilized,
            moduli(ctx, lhs.level),
        );
        rep.pass = lhs.stabilized;
        out.push(rep);
    }
    let Some(c) = reference else {
        return Err(ThetaError::Invalid(
            "every big-cell value in the battery vanished".into(),
        ));
    };
    for (word, lhs, rhs, _) in &usable {
        out.push(MatchReport::compare(
            "bigcell_ratio_constancy",
            params(ctx, &[("word", word.clone())]),
            lhs.value / rhs,
            c,
            tol,
            0.0,
            lhs.stabilized,
            moduli(ctx, lhs.level),
        ));
    }
    let mean = usable
        .iter()
        .map(|(_, l, r, _)| l.value / r)
        .sum::<Complex64>()
        / usable.len() as f64;
    let blocking = !ctx.chi().is_trivial();
    out.push(MatchReport::compare(
        "bigcell_ratio_unity",
        params(
            ctx,
            &[
                ("blocking", blocking.to_string()),
                ("chi", chi_label(ctx.chi())),
                ("normalization", ctx.normalization().constant.clone()),
                ("samples", usable.len().to_string()),
            ],
        ),
        mean,
        Complex64::new(1.0, 0.0),
        tol,
        0.0,
        true,
        moduli(ctx, 0),
    ));
    Ok(out)
}

/// Default Borel words for equivariance.
pub fn borel_words(field: &LocalField) -> Vec<MetaplecticWord> {
    let p = field.uniformizer();
    let u = field.square_class_reps()[1].clone();
    vec![
        MetaplecticWord::identity(),
        MetaplecticWord::n(field.one().shift(-1)),
        MetaplecticWord::m(p.clone()),
        MetaplecticWord::new(vec![Letter::N(field.one()), Letter::M(u)]),
    ]
}

/// Units at which equivariance is compared: all units mod p^2 and a few
/// with deeper digits.
pub fn equivariance_units(p: u64) -> Vec<i64> {
    let p = p as i64;
    let mut us: Vec<i64> = (1..p * p).filter(|u| u % p != 0).collect();
    us.extend([1 + p.pow(3), 2 + p.pow(4) * (p - 1), p - 1 + p.pow(5)]);
    us
}

/// transform(omega(g) phi) = omega_0(g) transform(phi), compared pointwise
/// at r = p^n u over the computed valuation window.
pub fn verify_equivariance(
    ctx: &MatchingContext,
    phis: &[SchwartzFn],
    words: &[MetaplecticWord],
) -> Result<Vec<MatchReport>> {
    if let Some(w) = words.iter().find(|w| !w.is_borel()) {
        return Err(ThetaError::Invalid(format!("{w} is not a Borel word")));
    }
    let field = ctx.field();
    let units = equivariance_units(ctx.p());
    let tol = ctx.settings().tol;
    let rows = exec::try_map(ctx.engine().exec(), phis, |phi| {
        let phi0 = ctx.transform_phi0(phi)?.function;
        words
            .iter()
            .map(|word| {
                let img = ctx.borel_image(phi, word)?;
                let rhs_fn = apply_word(ctx.weil_u(), word, &phi0)?;
                let n_lo = ctx.image_lowest_valuation(&img) - 1;
                let n_hi = ctx.settings().r_window.1;
                let (mut diff, mut a, mut b, mut points) = (0.0f64, 0.0f64, 0.0f64, 0usize);
                for n in n_lo..=n_hi {
                    for &u in &units {
                        let r = field.element(n, u)?;
                        let lhs = ctx.phi0_image_at(&img, &r)?;
                        let rhs = rhs_fn.eval(&[r])?;
                        diff = diff.max((lhs - rhs).norm());
                        a = a.max(lhs.norm());
                        b = b.max(rhs.norm());
                        points += 1;
                    }
                }
                let scale = a.max(b);
                let extra = [
                    ("word", word.to_string()),
                    ("points", points.to_string()),
                    ("valuations", format!("{n_lo}..={n_hi}")),
                ];
                let mut rep = MatchReport::compare(
                    "equivariance",
                    params(ctx, &extra),
                    Complex64::new(a, 0.0),
                    Complex64::new(b, 0.0),
                    tol,
                    0.0,
                    true,
                    moduli(ctx, (img.outer_level().max(0) + img.inner_level()) as u32),
                );
                rep.abs_err = diff;
                rep.rel_err = if scale == 0.0 { 0.0 } else { diff / scale };
                rep.pass = diff <= tol * scale.max(phi.max_abs());
                Ok(rep)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(rows.into_iter().flatten().collect())
}

/// phi_0 has parity Inv(B), and the projection of phi to the parity
/// -chi(-1) Inv(B) transforms to zero.
pub fn verify_parity(ctx: &MatchingContext, phis: &[SchwartzFn]) -> Result<Vec<MatchReport>> {
    let inv = ctx.invariant();
    let minus_one = ctx.field().int(-1);
    let s = ctx.chi().eval(&minus_one)? * inv;
    let tol = ctx.settings().tol;
    let rows = exec::try_map(ctx.engine().exec(), phis, |phi| {
        let t = ctx.transform_phi0(phi)?;
        let f = &t.function;
        let diff = f
            .reflect()
            .max_abs_diff(&f.scale(Complex64::new(inv as f64, 0.0)))?;
        let scale = f.max_abs();
        let extra = [
            ("inv", inv.to_string()),
            ("mode", format!("{:?}", t.mode).to_lowercase()),
            ("onset", t.onset.to_string()),
        ];
        let mut a = MatchReport::compare(
            "parity_of_phi0",
            params(ctx, &extra),
            Complex64::new(scale, 0.0),
            Complex64::new(scale, 0.0),
            tol,
            0.0,
            true,
            moduli(ctx, (f.outer_level() + f.inner_level()) as u32),
        );
        a.abs_err = diff;
        a.rel_err = if scale == 0.0 { 0.0 } else { diff / scale };
        a.pass = diff <= tol * scale.max(phi.max_abs());
        let wrong = ctx.transform_phi0(&phi.parity_project(-s))?.function;
        let w = wrong.max_abs();
        let mut b = MatchReport::compare(
            "parity_wrong_projection",
            params(ctx, &[("killed_parity", (-s).to_string())]),
            Complex64::new(w, 0.0),
            Complex64::new(0.0, 0.0),
            tol,
            phi.max_abs(),
            true,
            moduli(ctx, 0),
        );
        b.pass = w <= tol * phi.max_abs().max(scale);
        Ok::<_, ThetaError>(vec![a, b])
    })?;
    Ok(rows.into_iter().flatten().collect())
}

/// W_phi vanishes when phi lives on norms outside the square class of kappa.
pub fn verify_square_class_vanishing(
    ctx: &MatchingContext,
    phis: &[SchwartzFn],
    words: &[MetaplecticWord],
) -> Result<Vec<MatchReport>> {
    let rows = exec::try_map(ctx.engine().exec(), phis, |phi| {
        words
            .iter()
            .map(|word| {
                let lhs = ctx.whittaker_v(phi, word)?;
                let mut rep = MatchReport::compare(
                    "square_class_vanishing",
                    params(ctx, &[("word", word.to_string())]),
                    lhs.value,
                    Complex64::new(0.0, 0.0),
                    ctx.settings().tol,
                    phi.max_abs(),
                    lhs.stabilized,
                    moduli(ctx, lhs.level),
                );
                rep.pass = lhs.stabilized && rep.abs_err <= ctx.settings().tol * phi.max_abs();
                Ok(rep)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(rows.into_iter().flatten().collect())
}

const HILBERT_PRIMES: [u64; 5] = [2, 3, 5, 7, 11];

fn random_supported<R: Rng>(rng: &mut R) -> BigRational {
    let mut num = BigInt::from(if rng.gen_bool(0.5) { 1 } else { -1 });
    let mut den = BigInt::from(1);
    for &p in &HILBERT_PRIMES {
        let e = rng.gen_range(-2i32..=2);
        if e > 0 {
            num *= BigInt::from(p).pow(e as u32);
        } else if e < 0 {
            den *= BigInt::from(p).pow((-e) as u32);
        }
    }
    BigRational::new(num, den)
}

/// Product formula, Gauss integrals and Weil-index square-class invariance.
pub fn verify_gauss(p: u64, settings: &MatchSettings, seed: u64) -> Result<Vec<MatchReport>> {
    let moduli = Moduli {
        m: 0,
        n_gauss: settings.k_max,
        window: [settings.r_window.0, settings.r_window.1],
    };
    let mut base = BTreeMap::new();
    base.insert("p".to_string(), p.to_string());
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut places: Vec<Place> = HILBERT_PRIMES.iter().map(|&q| Place::Finite(q)).collect();
    places.push(Place::Infinity);
    let mut good = 0;
    let trials = 100;
    for _ in 0..trials {
        let a = random_supported(&mut rng);
        let b = random_supported(&mut rng);
        let prod: i8 = places
            .iter()
            .map(|&pl| hilbert_symbol(&a, &b, pl))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .product();
        if prod == 1 {
            good += 1;
        }
    }
    let mut params = base.clone();
    params.insert("pairs".into(), trials.to_string());
    params.insert("seed".into(), seed.to_string());
    out.push(MatchReport::exact(
        "hilbert_product_formula",
        params,
        &exact_int(good),
        &exact_int(trials as i64),
        moduli.clone(),
    ));

    let field = LocalField::new(p, 20)?;
    let psi = AdditiveCharacter::standard(&field);
    let n_max = settings.k_max.max(4);
    let reps = field.square_class_reps();
    for kappa in reps.iter() {
        let chi = QuadraticCharacter::new(kappa.clone())?;
        let g = gauss_integral(&psi, &chi, n_max)?;
        let q = p as f64;
        let (identity, lhs, rhs) = if chi.is_trivial() {
            ("gauss_trivial", g.value, Complex64::new(0.0, 0.0))
        } else if chi.is_unramified() {
            (
                "gauss_unramified",
                g.value,
                Complex64::new(2.0 * q / (q + 1.0), 0.0),
            )
        } else {
            (
                "gauss_ramified_modulus",
                Complex64::new(g.value.norm_sqr() / q, 0.0),
                Complex64::new(1.0, 0.0),
            )
        };
        let mut params = base.clone();
        params.insert("kappa".into(), kappa.to_rational().to_string());
        params.insert("stabilized_at".into(), g.stabilized_at.to_string());
        out.push(MatchReport::compare(
            identity,
            params,
            lhs,
            rhs,
            settings.tol,
            1.0,
            true,
            moduli.clone(),
        ));
    }

    let squares = [
        field.int(4),
        field.int(9),
        field.int(p as i64 * p as i64),
        field.ratio(1, (p * p) as i64),
    ];
    let mut ok = true;
    for a in reps.iter() {
        let g = weil_index(a, &psi, settings.k_max)?;
        for c2 in &squares {
            ok &= weil_index(&(a * c2), &psi, settings.k_max)? == g;
        }
    }
    out.push(MatchReport::exact(
        "weil_index_square_class_invariance",
        base,
        &exact_int(ok as i64),
        &exact_int(1),
        moduli,
    ));
    Ok(out)
}

/// Runs a named suite against the context.
pub fn run_suite(
    ctx: &MatchingContext,
    suite: Suite,
    battery: &Battery,
) -> Result<Vec<MatchReport>> {
    let p = ctx.p();
    let field = *ctx.field();
    let settings = ctx.settings();
    let exec = ctx.engine().exec();
    let phis = || battery.generate(3, p);
    Ok(match suite {
        Suite::Fl => {
            let kappa = ctx.spec().kappa.to_integer();
            let kappa = i64::try_from(&kappa)
                .map_err(|_| ThetaError::Invalid("kappa out of range".into()))?;
            verify_fundamental_lemma(p, kappa, settings, exec)?
        }
        Suite::Borel => verify_borel(
            ctx,
            &phis()?,
            &square_class_samples(&field),
            &valuation_samples(&field),
        )?,
        Suite::Bigcell => verify_bigcell(ctx, &phis()?, &bigcell_words(&field))?,
        Suite::Equivariance => verify_equivariance(ctx, &phis()?, &borel_words(&field))?,
        Suite::Parity => verify_parity(ctx, &phis()?)?,
        Suite::Gauss => verify_gauss(p, settings, battery.seed)?,
        Suite::All => {
            let mut all = Vec::new();
            let fl_ok = ctx.kappa().valuation() == Some(0)
                && ctx.chi().is_unramified()
                && ctx.invariant() == 1
                && ctx.spec().kappa.is_integer();
            for s in [
                Suite::Fl,
                Suite::Borel,
                Suite::Bigcell,
                Suite::Equivariance,
                Suite::Parity,
                Suite::Gauss,
            ] {
                if s == Suite::Fl && !fl_ok {
                    continue;
                }
                all.extend(run_suite(ctx, s, battery)?);
            }
            all
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.to_string().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn compare_tolerances() {
        let m = Moduli {
            m: 0,
            n_gauss: 0,
            window: [0, 0],
        };
        let r = MatchReport::compare(
            "x",
            BTreeMap::new(),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0 + 1e-12, 0.0),
            1e-9,
            0.0,
            true,
            m.clone(),
        );
        assert!(r.pass);
        let r = MatchReport::compare(
            "x",
            BTreeMap::new(),
            Complex64::new(1e-14, 0.0),
            Complex64::new(0.0, 0.0),
            1e-9,
            1.0,
            true,
            m.clone(),
        );
        assert!(r.pass);
        let r = MatchReport::compare(
            "x",
            BTreeMap::new(),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
            1e-9,
            1.0,
            false,
            m,
        );
        assert!(!r.pass);
    }
}
