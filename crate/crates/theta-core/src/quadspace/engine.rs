//! Adaptive integration over the quadric nu(y) = c.
//!
//! Coordinates are scaled to Z = p^S y so the search region is O^3. A cell is
//! Y + p^J O^3 with its own level per coordinate. Writing
//! nu(Y + d) - T = D + sum 2 g_i Y_i d_i + sum g_i d_i^2 with T = p^{2S} c,
//! let L be the least valuation any of the correction terms can reach. If
//! v(D) < L the cell misses the quadric. If L is reached only by linear
//! terms, d -> nu(Y + d) - T maps the cell onto p^L O with uniform
//! pushforward, so the Leray measure of the quadric inside the cell is
//! q^(L - sum J + S). Other cells are split along one coordinate.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::{BasePoint, QuadSpaceV};
use crate::error::{Result, ThetaError};
use crate::exec::{self, Exec};
use crate::padic::{QuadraticCharacter, TruncatedPadic};

const INF: u32 = u32::MAX / 4;
const FRONTIER: usize = 512;

/// Values that can be accumulated over cells.
pub trait OrbitValue: Clone + Send + Sync {
    fn zero() -> Self;
    fn is_zero(&self) -> bool;
    fn add_signed(&mut self, x: &Self, sign: i8);
    fn add(&mut self, x: &Self);
    /// self * q^e.
    fn scaled_q(&self, q: u64, e: i64) -> Self;
}

impl OrbitValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn add_signed(&mut self, x: &Self, sign: i8) {
        *self += x * sign as f64;
    }
    fn add(&mut self, x: &Self) {
        *self += x;
    }
    fn scaled_q(&self, q: u64, e: i64) -> Self {
        self * (q as f64).powi(e as i32)
    }
}

impl OrbitValue for BigRational {
    fn zero() -> Self {
        <BigRational as Zero>::zero()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add_signed(&mut self, x: &Self, sign: i8) {
        if sign > 0 {
            *self += x;
        } else if sign < 0 {
            *self -= x;
        }
    }
    fn add(&mut self, x: &Self) {
        *self += x;
    }
    fn scaled_q(&self, q: u64, e: i64) -> Self {
        self * q_pow(q, e)
    }
}

pub(crate) fn q_pow(q: u64, e: i64) -> BigRational {
    let b = BigRational::from_integer(BigInt::from(q));
    num_traits::pow::Pow::pow(&b, e as i32)
}

/// Arithmetic in Z / p^P with p^P < 2^62.
#[derive(Clone, Debug)]
struct Ring {
    p: u64,
    prec: u32,
    m: u64,
    pow: Vec<u64>,
}

impl Ring {
    fn new(p: u64, prec: u32) -> Self {
        let mut pow = vec![1u64];
        while pow.len() <= prec as usize {
            let last = *pow.last().unwrap();
            pow.push(last * p);
        }
        Self {
            p,
            prec,
            m: pow[prec as usize],
            pow,
        }
    }

    fn max_precision(p: u64) -> u32 {
        let mut k = 0;
        let mut x: u128 = 1;
        while x * (p as u128) < (1u128 << 62) {
            x *= p as u128;
            k += 1;
        }
        k
    }

    fn mul(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.m as u128) as u64
    }

    fn add(&self, a: u64, b: u64) -> u64 {
        ((a as u128 + b as u128) % self.m as u128) as u64
    }

    fn sub(&self, a: u64, b: u64) -> u64 {
        self.add(a, self.m - b % self.m)
    }

    /// Valuation capped at the precision.
    fn val(&self, x: u64) -> u32 {
        let x = x % self.m;
        if x == 0 {
            return self.prec;
        }
        let mut v = 0;
        let mut y = x;
        while y.is_multiple_of(self.p) {
            y /= self.p;
            v += 1;
        }
        v
    }

    fn pw(&self, k: i64) -> u64 {
        if k >= self.prec as i64 {
            0
        } else {
            self.pow[k as usize]
        }
    }

    /// Residue of a p-integral element and its absolute precision.
    fn reduce_padic(&self, x: &TruncatedPadic) -> Result<(u64, u32)> {
        let Some(v) = x.valuation() else {
            return Ok((0, self.prec));
        };
        if v < 0 {
            return Err(ThetaError::Invalid(format!("{x} is not integral")));
        }
        let abs = (v as u64 + x.relative_precision() as u64).min(self.prec as u64) as u32;
        if v as u32 >= self.prec {
            return Ok((0, self.prec));
        }
        let k = self.prec - v as u32;
        let u = x.unit_mod(k.min(x.relative_precision()))?;
        Ok((self.mul(self.pow[v as usize], u), abs))
    }

    fn inv_unit_mod_p(&self, u: u64) -> u64 {
        let r = u % self.p;
        (1..self.p).find(|&t| (t * r) % self.p == 1).unwrap()
    }
}

/// Per-stratum measure data; strata are keyed by min_i v(Z_i).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StratumMass {
    /// Leray measure of the stratum.
    pub mass: BigRational,
    /// Same, weighted by chi(2(1 + alpha)).
    pub weighted: BigRational,
}

#[derive(Clone, Debug)]
pub struct OrbitResult<V> {
    pub value: V,
    pub strata: BTreeMap<i64, StratumMass>,
    pub cells: u64,
}

/// Parameters of one orbit integral.
#[derive(Clone, Debug)]
pub struct OrbitQuery {
    /// Scale S: the integrand lives on p^{-S} O^3.
    pub scale: u32,
    /// Integrand is constant on cells with every level at least this.
    pub f_level: u32,
    /// Forced minimum level, used for two-level stabilization checks.
    pub min_level: u32,
    pub strata: bool,
    pub weighted: bool,
}

impl OrbitQuery {
    pub fn new(scale: u32, f_level: u32) -> Self {
        Self {
            scale,
            f_level,
            min_level: 0,
            strata: false,
            weighted: true,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Cell {
    y: [u64; 3],
    j: [u32; 3],
}

enum Action {
    Prune,
    Refine(usize),
    Leaf { stratum: i64, exp: i64, sign: i8 },
}

struct ChiTables {
    /// sign[parity][residue] = chi(p^parity * residue)
    sign: [Vec<i8>; 2],
    chi2: i8,
    chi_e0: i8,
}

impl ChiTables {
    fn eval(&self, v: i64, u: u64, p: u64) -> i8 {
        self.sign[v.rem_euclid(2) as usize][(u % p) as usize]
    }
}

/// Per-call data derived from r.
struct Run<'a> {
    t: u64,
    prec: u32,
    e0: i64,
    k: i64,
    base: u64,
    ud_inv: u64,
    q: &'a OrbitQuery,
}

/// Adaptive integrator for the family of quadrics nu = r^2 kappa.
pub struct OrbitEngine {
    ring: Ring,
    g: [u64; 3],
    vg: [u32; 3],
    e: [u64; 3],
    ve: [u32; 3],
    kappa: TruncatedPadic,
    chi: Option<ChiTables>,
    exec: Exec,
}

impl OrbitEngine {
    /// Native residue precision for p.
    pub fn native_precision(p: u64) -> u32 {
        Ring::max_precision(p)
    }

    pub fn new(
        v: &QuadSpaceV,
        base: &BasePoint,
        chi: &QuadraticCharacter,
        exec: Exec,
    ) -> Result<Self> {
        let p = v.p();
        if p == 2 {
            return Err(ThetaError::EvenPrime(2));
        }
        let mut ring = Ring::new(p, Ring::max_precision(p));
        let mut prec = ring.prec;
        let mut g = [0u64; 3];
        let mut e = [0u64; 3];
        let mut gs = Vec::new();
        for i in 0..3 {
            let (gi, ai) = ring.reduce_padic(&v.gram()[i]).map_err(|_| {
                ThetaError::Inadmissible("structure constants must be p-integral".into())
            })?;
            let (ei, bi) = ring
                .reduce_padic(&(&v.gram()[i] * &base.x0[i]))
                .map_err(|_| ThetaError::Inadmissible("base point must be p-integral".into()))?;
            prec = prec.min(ai).min(bi);
            g[i] = gi;
            e[i] = ei;
            gs.push(v.gram()[i].clone());
        }
        ring = Ring::new(p, prec);
        let vg = g.map(|x| if x == 0 { INF } else { ring.val(x) });
        let ve = e.map(|x| if x == 0 { INF } else { ring.val(x) });
        let chi_tab = if chi.is_trivial() {
            None
        } else {
            let e0 = orthogonal_norm(v, base)?;
            let sign = [0i64, 1].map(|par| (0..p).map(|u| chi.eval_parts(par, u)).collect());
            let f = v.algebra().field();
            Some(ChiTables {
                sign,
                chi2: chi.eval(&f.int(2))?,
                chi_e0: chi.eval(&e0)?,
            })
        };
        Ok(Self {
            ring,
            g,
            vg,
            e,
            ve,
            kappa: base.kappa.clone(),
            chi: chi_tab,
            exec,
        })
    }

    pub fn p(&self) -> u64 {
        self.ring.p
    }

    pub fn precision(&self) -> u32 {
        self.ring.prec
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn exec(&self) -> Exec {
        self.exec
    }

    /// Integral of f(y) chi(2(1 + alpha_r(y))) over nu(y) = r^2 kappa against the
    /// Leray measure, where alpha_r(y) = B(y, r x0) / (2 r^2 kappa).
    ///
    /// `f` receives Z = p^S y reduced mod p^{f_level}.
    pub fn integrate<V, F>(
        &self,
        r: &TruncatedPadic,
        q: &OrbitQuery,
        f: &F,
    ) -> Result<OrbitResult<V>>
    where
        V: OrbitValue,
        F: Fn(&[u64; 3]) -> V + Sync,
    {
        let ring = &self.ring;
        if r.is_zero() {
            return Err(ThetaError::ZeroArgument("r"));
        }
        let c = &(r * r) * &self.kappa;
        let tv = c.shift(2 * q.scale as i64);
        let empty = OrbitResult {
            value: V::zero(),
            strata: BTreeMap::new(),
            cells: 0,
        };
        if tv.valuation().unwrap() < 0 {
            return Ok(empty);
        }
        let (t, tprec) = ring.reduce_padic(&tv)?;
        let dn = &r.shift(q.scale as i64) * &self.kappa;
        let e0 = dn.valuation().unwrap();
        let k = (-e0).max(0);
        let pos = e0.max(0);
        let ud = dn.unit_mod(dn.relative_precision().min(ring.prec))?;
        let ud_prec = dn.relative_precision() as i64 + pos;
        let prec = (tprec as i64).min(ud_prec).min(ring.prec as i64) as u32;
        let base = ring.mul(ring.pw(pos), ud % ring.m);
        let run = Run {
            t,
            prec,
            e0,
            k,
            base,
            ud_inv: ring.inv_unit_mod_p(ud),
            q,
        };

        // breadth-first expansion to build a frontier for parallel work
        let mut acc = Acc::<V>::default();
        let mut frontier = vec![Cell {
            y: [0; 3],
            j: [0; 3],
        }];
        while !frontier.is_empty() && frontier.len() < FRONTIER {
            let mut next = Vec::with_capacity(frontier.len() * ring.p as usize);
            for cell in &frontier {
                self.step(&run, cell, f, &mut acc, &mut next)?;
            }
            frontier = next;
        }
        let parts = exec::try_map(self.exec, &frontier, |cell| {
            let mut a = Acc::<V>::default();
            let mut stack = vec![*cell];
            while let Some(c) = stack.pop() {
                self.step(&run, &c, f, &mut a, &mut stack)?;
            }
            Ok::<_, ThetaError>(a)
        })?;
        for a in parts {
            acc.merge(a);
        }
        Ok(acc.finish(ring.p, q.scale))
    }

    fn step<V, F>(
        &self,
        run: &Run,
        cell: &Cell,
        f: &F,
        acc: &mut Acc<V>,
        out: &mut Vec<Cell>,
    ) -> Result<()>
    where
        V: OrbitValue,
        F: Fn(&[u64; 3]) -> V + Sync,
    {
        acc.cells += 1;
        match self.classify(run, cell)? {
            Action::Prune => {}
            Action::Refine(i) => {
                let step = self.ring.pw(cell.j[i] as i64);
                if cell.j[i] + 1 > self.ring.prec {
                    return Err(ThetaError::Precision(
                        "cell refinement beyond residue precision".into(),
                    ));
                }
                for t in 0..self.ring.p {
                    let mut c = *cell;
                    c.y[i] += t * step;
                    c.j[i] += 1;
                    out.push(c);
                }
            }
            Action::Leaf { stratum, exp, sign } => {
                let fl = run.q.f_level as usize;
                let z = cell
                    .y
                    .map(|y| y % self.ring.pow[fl.min(self.ring.prec as usize)]);
                let val = f(&z);
                let b = acc.buckets.entry((stratum, exp)).or_default();
                b.value.add_signed(&val, sign);
                b.mass += 1;
                b.wmass += sign as i64;
            }
        }
        Ok(())
    }

    fn classify(&self, run: &Run, c: &Cell) -> Result<Action> {
        let ring = &self.ring;
        let vy = c.y.map(|y| if y == 0 { INF } else { ring.val(y) });
        let mut l = INF;
        let mut a = [INF; 3];
        let mut qv = [INF; 3];
        for i in 0..3 {
            if self.vg[i] >= INF {
                continue;
            }
            a[i] = (c.j[i] + self.vg[i]).saturating_add(vy[i]).min(INF);
            qv[i] = 2 * c.j[i] + self.vg[i];
            l = l.min(a[i]).min(qv[i]);
        }
        if l > run.prec {
            return Err(ThetaError::Precision(format!(
                "cell equation needs {l} digits, {} available",
                run.prec
            )));
        }
        let mut d = 0u64;
        for i in 0..3 {
            d = ring.add(d, ring.mul(self.g[i], ring.mul(c.y[i], c.y[i])));
        }
        d = ring.sub(d, run.t);
        if !d.is_multiple_of(ring.pow[l as usize]) {
            return Ok(Action::Prune);
        }
        let jmin = c.j.iter().copied().min().unwrap();
        let need = run.q.f_level.max(run.q.min_level);
        if jmin < need {
            return Ok(Action::Refine(argmin(&c.j, |_| true)));
        }
        if (0..3).any(|i| qv[i] <= l) {
            let i = argmin(&c.j, |i| qv[i] <= l);
            return Ok(Action::Refine(i));
        }
        let sign = if run.q.weighted {
            match self.weight(run, c)? {
                Ok(s) => s,
                Err(i) => return Ok(Action::Refine(i)),
            }
        } else {
            1
        };
        let stratum = if run.q.strata {
            match stratum_of(&vy, &c.j) {
                Some(s) => s as i64,
                None => return Ok(Action::Refine(argmin(&c.j, |_| true))),
            }
        } else {
            0
        };
        let sum_j: i64 = c.j.iter().map(|&x| x as i64).sum();
        Ok(Action::Leaf {
            stratum,
            exp: l as i64 - sum_j,
            sign,
        })
    }

    /// Ok(Ok(sign)) when chi(2(1 + alpha)) is constant on the cell,
    /// Ok(Err(i)) when coordinate i must be refined.
    fn weight(&self, run: &Run, c: &Cell) -> Result<std::result::Result<i8, usize>> {
        let Some(chi) = &self.chi else {
            return Ok(Ok(1));
        };
        let ring = &self.ring;
        let p = ring.p;
        let mut ev = 0u64;
        for i in 0..3 {
            ev = ring.add(ev, ring.mul(self.e[i], c.y[i]));
        }
        let mut smin = INF as i64;
        let mut arg = 0;
        for i in 0..3 {
            if self.ve[i] >= INF {
                continue;
            }
            let s = (c.j[i] + self.ve[i]) as i64;
            if s < smin {
                smin = s;
                arg = i;
            }
        }
        // variation of alpha over the cell has valuation >= s
        let s = smin - run.e0;
        let pos = run.e0.max(0);
        let thr = s + pos;
        let pk_e = ring.mul(ring.pw(run.k), ev);
        let eval = |x: u64| -> Result<Option<(i64, u64)>> {
            let vx = ring.val(x) as i64;
            if vx >= run.prec as i64 {
                if thr > run.prec as i64 {
                    return Err(ThetaError::Precision(
                        "weight undetermined at residue precision".into(),
                    ));
                }
                return Ok(None);
            }
            if vx < thr {
                let unit = (x / ring.pw(vx)) % p;
                Ok(Some((vx - pos, unit * run.ud_inv % p)))
            } else {
                Ok(None)
            }
        };
        let plus = ring.add(run.base, pk_e);
        if let Some((v, u)) = eval(plus)? {
            return Ok(Ok(chi.eval(v, 2 * u, p)));
        }
        let minus = ring.sub(run.base, pk_e);
        if let Some((v, u)) = eval(minus)? {
            return Ok(Ok(chi.chi2 * chi.chi_e0 * chi.eval(v, u, p)));
        }
        Ok(Err(arg))
    }
}

/// nu of a nonzero vector orthogonal to x0.
fn orthogonal_norm(v: &QuadSpaceV, base: &BasePoint) -> Result<TruncatedPadic> {
    let g = v.gram();
    let x = &base.x0;
    let f = v.algebra().field();
    let gx: Vec<TruncatedPadic> = (0..3).map(|i| &g[i] * &x[i]).collect();
    for (i, j) in [(0usize, 1usize), (0, 2), (1, 2)] {
        let mut z = [f.zero(), f.zero(), f.zero()];
        z[i] = gx[j].clone();
        z[j] = -&gx[i];
        if !(z[i].is_zero() && z[j].is_zero()) {
            let n = v.nu(&z);
            if !n.is_zero() {
                return Ok(n);
            }
        }
    }
    Err(ThetaError::Precision(
        "no anisotropic vector orthogonal to x0".into(),
    ))
}

fn argmin(j: &[u32; 3], ok: impl Fn(usize) -> bool) -> usize {
    (0..3).filter(|&i| ok(i)).min_by_key(|&i| j[i]).unwrap()
}

/// min_i v(Z_i) if it is constant on the cell.
fn stratum_of(vy: &[u32; 3], j: &[u32; 3]) -> Option<u32> {
    let determined = (0..3).filter(|&i| vy[i] < j[i]).map(|i| vy[i]).min();
    let jmin = *j.iter().min().unwrap();
    match determined {
        Some(m) if m <= jmin => Some(m),
        _ => None,
    }
}

struct Bucket<V> {
    value: V,
    mass: i64,
    wmass: i64,
}

impl<V: OrbitValue> Default for Bucket<V> {
    fn default() -> Self {
        Self {
            value: V::zero(),
            mass: 0,
            wmass: 0,
        }
    }
}

struct Acc<V> {
    buckets: BTreeMap<(i64, i64), Bucket<V>>,
    cells: u64,
}

impl<V: OrbitValue> Default for Acc<V> {
    fn default() -> Self {
        Self {
            buckets: BTreeMap::new(),
            cells: 0,
        }
    }
}

impl<V: OrbitValue> Acc<V> {
    fn merge(&mut self, o: Acc<V>) {
        self.cells += o.cells;
        for (k, b) in o.buckets {
            let e = self.buckets.entry(k).or_default();
            e.value.add(&b.value);
            e.mass += b.mass;
            e.wmass += b.wmass;
        }
    }

    fn finish(self, q: u64, scale: u32) -> OrbitResult<V> {
        let mut value = V::zero();
        let mut strata: BTreeMap<i64, StratumMass> = BTreeMap::new();
        for ((st, exp), b) in self.buckets {
            let e = exp + scale as i64;
            value.add(&b.value.scaled_q(q, e));
            let w = q_pow(q, e);
            let s = strata.entry(st).or_default();
            s.mass += &w * BigRational::from_integer(b.mass.into());
            s.weighted += &w * BigRational::from_integer(b.wmass.into());
        }
        OrbitResult {
            value,
            strata,
            cells: self.cells,
        }
    }
}

/// Orbit-measure normalization for one (V, kappa, chi) case.
///
/// The constant is 1 / mu(Omega_kappa meet p^{-k} O^3) for the least k >= 0
/// making the mass nonzero; k = 0 whenever kappa is represented integrally.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizationEntry {
    pub p: u64,
    pub a: String,
    pub b: String,
    pub kappa: String,
    pub chi_case: String,
    pub lattice_shift: u32,
    pub reference_mass: String,
    pub constant: String,
}

impl NormalizationEntry {
    pub fn constant_f64(&self) -> f64 {
        let (n, d) = self
            .constant
            .split_once('/')
            .unwrap_or((&self.constant, "1"));
        n.parse::<f64>().unwrap() / d.parse::<f64>().unwrap()
    }
}

/// All normalization entries produced in a session.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NormalizationLedger {
    pub entries: Vec<NormalizationEntry>,
}

impl NormalizationLedger {
    pub fn record(&mut self, e: NormalizationEntry) {
        if !self.entries.contains(&e) {
            self.entries.push(e);
        }
    }

    /// Computes the entry for the given data.
    pub fn compute(
        v: &QuadSpaceV,
        chi: &QuadraticCharacter,
        engine: &OrbitEngine,
        labels: [String; 3],
    ) -> Result<(NormalizationEntry, BigRational)> {
        let f = v.algebra().field();
        for k in 0..8u32 {
            let q = OrbitQuery {
                scale: k,
                f_level: 0,
                min_level: 0,
                strata: false,
                weighted: false,
            };
            let res: OrbitResult<BigRational> =
                engine.integrate(&f.one(), &q, &|_| BigRational::from_integer(1.into()))?;
            if !Zero::is_zero(&res.value) {
                let c = BigRational::from_integer(1.into()) / &res.value;
                let case = if chi.is_trivial() {
                    "trivial"
                } else if chi.is_unramified() {
                    "unramified"
                } else {
                    "ramified"
                };
                let [a, b, kappa] = labels;
                let e = NormalizationEntry {
                    p: f.p(),
                    a,
                    b,
                    kappa,
                    chi_case: case.into(),
                    lattice_shift: k,
                    reference_mass: res.value.to_string(),
                    constant: c.to_string(),
                };
                return Ok((e, c));
            }
        }
        Err(ThetaError::NotRepresented)
    }
}

pub(crate) fn rational_to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
