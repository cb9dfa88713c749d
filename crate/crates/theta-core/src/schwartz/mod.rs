//! Schwartz-Bruhat functions on F^rank stored as lattice-quotient data, and
//! the Weil representation operators acting on them.

mod lazy;
mod weil;

pub use lazy::BorelImage;
pub use weil::{apply_word, op_m, op_n, op_w, Letter, MetaplecticWord, WeilContext};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ThetaError};
use crate::padic::TruncatedPadic;

/// Largest number of stored values in one function.
pub const MAX_ENTRIES: u64 = 1 << 24;

/// A function supported on p^{-N} O^rank and invariant under p^M O^rank.
///
/// The value at index t (one residue mod p^{N+M} per coordinate) is the value
/// on the coset p^{-N} t + p^M O^rank. Indices are row-major with coordinate 0
/// slowest.
#[derive(Clone, Debug, PartialEq)]
pub struct SchwartzFn {
    rank: usize,
    p: u64,
    n: i64,
    m: i64,
    values: Vec<Complex64>,
}

fn checked_pow(p: u64, e: i64) -> Result<u64> {
    if e < 0 {
        return Err(ThetaError::Invalid(format!("negative level {e}")));
    }
    (p as u128)
        .checked_pow(e as u32)
        .filter(|&x| x < (1u128 << 62))
        .map(|x| x as u64)
        .ok_or_else(|| ThetaError::Precision(format!("{p}^{e} exceeds the index range")))
}

fn grid_len(p: u64, rank: usize, levels: i64) -> Result<usize> {
    let side = checked_pow(p, levels)? as u128;
    let len = side.pow(rank as u32);
    if len > MAX_ENTRIES as u128 {
        return Err(ThetaError::Precision(format!(
            "grid of {len} entries at p={p}, rank {rank}, level {levels} is too large"
        )));
    }
    Ok(len as usize)
}

#[derive(Serialize, Deserialize)]
struct Repr {
    rank: usize,
    p: u64,
    #[serde(rename = "N")]
    n: i64,
    #[serde(rename = "M")]
    m: i64,
    entries: Vec<(Vec<u64>, f64, f64)>,
}

impl SchwartzFn {
    pub fn new(rank: usize, p: u64, n: i64, m: i64, values: Vec<Complex64>) -> Result<Self> {
        if rank != 1 && rank != 3 {
            return Err(ThetaError::Invalid(format!(
                "rank must be 1 or 3, got {rank}"
            )));
        }
        let len = grid_len(p, rank, n + m)?;
        if values.len() != len {
            return Err(ThetaError::Invalid(format!(
                "expected {len} values, got {}",
                values.len()
            )));
        }
        Ok(Self {
            rank,
            p,
            n,
            m,
            values,
        })
    }

    pub fn zero(rank: usize, p: u64) -> Self {
        Self::new(rank, p, 0, 0, vec![Complex64::new(0.0, 0.0)]).unwrap()
    }

    /// Char(p^k O^rank).
    pub fn char_lattice(rank: usize, p: u64, k: i64) -> Self {
        Self::new(rank, p, -k, k, vec![Complex64::new(1.0, 0.0)]).unwrap()
    }

    pub fn from_fn<F: Fn(&[u64]) -> Complex64>(
        rank: usize,
        p: u64,
        n: i64,
        m: i64,
        f: F,
    ) -> Result<Self> {
        let len = grid_len(p, rank, n + m)?;
        let side = checked_pow(p, n + m)?;
        let mut idx = vec![0u64; rank];
        let mut values = Vec::with_capacity(len);
        for flat in 0..len as u64 {
            let mut r = flat;
            for i in (0..rank).rev() {
                idx[i] = r % side;
                r /= side;
            }
            values.push(f(&idx));
        }
        Self::new(rank, p, n, m, values)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn outer_level(&self) -> i64 {
        self.n
    }

    pub fn inner_level(&self) -> i64 {
        self.m
    }

    /// p^{N+M}, the number of residues per coordinate.
    pub fn side(&self) -> u64 {
        checked_pow(self.p, self.n + self.m).unwrap()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn flat_index(&self, t: &[u64]) -> usize {
        let side = self.side();
        t.iter().fold(0u64, |acc, &x| acc * side + x % side) as usize
    }

    /// Value on the coset with index t (reduced mod p^{N+M}).
    pub fn value_at(&self, t: &[u64]) -> Complex64 {
        self.values[self.flat_index(t)]
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Evaluates at a point given by p-adic coordinates.
    pub fn eval(&self, x: &[TruncatedPadic]) -> Result<Complex64> {
        if x.len() != self.rank {
            return Err(ThetaError::Invalid(
                "point has the wrong number of coordinates".into(),
            ));
        }
        let levels = self.n + self.m;
        let side = self.side();
        let mut t = Vec::with_capacity(self.rank);
        for xi in x {
            if xi.p() != self.p {
                return Err(ThetaError::FieldMismatch(self.p, xi.p()));
            }
            let Some(v) = xi.valuation() else {
                t.push(0);
                continue;
            };
            if v < -self.n {
                return Ok(Complex64::new(0.0, 0.0));
            }
            let shift = v + self.n;
            if shift >= levels {
                t.push(0);
                continue;
            }
            let k = (levels - shift) as u32;
            if k > xi.relative_precision() {
                return Err(ThetaError::Precision(
                    "point known to too few digits".into(),
                ));
            }
            let u = xi.unit_mod(k)?;
            t.push((checked_pow(self.p, shift)? as u128 * u as u128 % side as u128) as u64);
        }
        Ok(self.value_at(&t))
    }

    /// The same function at levels (n, m) with n >= N and m >= M.
    pub fn refine(&self, n: i64, m: i64) -> Result<Self> {
        if n < self.n || m < self.m {
            return Err(ThetaError::Invalid(format!(
                "cannot refine ({}, {}) to ({n}, {m})",
                self.n, self.m
            )));
        }
        if n == self.n && m == self.m {
            return Ok(self.clone());
        }
        let stride = checked_pow(self.p, n - self.n)?;
        let old_side = self.side();
        Self::from_fn(self.rank, self.p, n, m, |t| {
            if t.iter().any(|&x| x % stride != 0) {
                return Complex64::new(0.0, 0.0);
            }
            let mut flat = 0u64;
            for &x in t {
                flat = flat * old_side + (x / stride) % old_side;
            }
            self.values[flat as usize]
        })
    }

    /// Refines both to their joint levels.
    pub fn common_refinement(&self, other: &Self) -> Result<(Self, Self)> {
        if self.p != other.p {
            return Err(ThetaError::FieldMismatch(self.p, other.p));
        }
        if self.rank != other.rank {
            return Err(ThetaError::Invalid("rank mismatch".into()));
        }
        let n = self.n.max(other.n);
        let m = self.m.max(other.m);
        Ok((self.refine(n, m)?, other.refine(n, m)?))
    }

    /// Largest pointwise difference after common refinement.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        let (a, b) = self.common_refinement(other)?;
        Ok(a.values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max))
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.max_abs_diff(other).map(|d| d <= tol).unwrap_or(false)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            values: self.values.iter().map(|z| z * c).collect(),
            ..self.clone()
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let (mut a, b) = self.common_refinement(other)?;
        for (x, y) in a.values.iter_mut().zip(&b.values) {
            *x += y;
        }
        Ok(a)
    }

    /// x -> phi(-x).
    pub fn reflect(&self) -> Self {
        let side = self.side();
        let mut out = self.clone();
        let mut idx = vec![0u64; self.rank];
        for flat in 0..self.values.len() as u64 {
            let mut r = flat;
            for i in (0..self.rank).rev() {
                idx[i] = (side - r % side) % side;
                r /= side;
            }
            out.values[self.flat_index(&idx)] = self.values[flat as usize];
        }
        out
    }

    /// (phi(x) + sign phi(-x)) / 2.
    pub fn parity_project(&self, sign: i8) -> Self {
        let r = self.reflect();
        let s = sign as f64;
        Self {
            values: self
                .values
                .iter()
                .zip(&r.values)
                .map(|(x, y)| (x + y * s) * 0.5)
                .collect(),
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> String {
        let levels = (self.n + self.m) as usize;
        let side = self.side();
        let mut entries = Vec::new();
        for (flat, z) in self.values.iter().enumerate() {
            if z.re == 0.0 && z.im == 0.0 {
                continue;
            }
            let mut coords = vec![0u64; self.rank];
            let mut r = flat as u64;
            for i in (0..self.rank).rev() {
                coords[i] = r % side;
                r /= side;
            }
            let mut digits = Vec::with_capacity(self.rank * levels);
            for mut c in coords {
                for _ in 0..levels {
                    digits.push(c % self.p);
                    c /= self.p;
                }
            }
            entries.push((digits, z.re, z.im));
        }
        let repr = Repr {
            rank: self.rank,
            p: self.p,
            n: self.n,
            m: self.m,
            entries,
        };
        serde_json::to_string_pretty(&repr).unwrap()
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let repr: Repr = serde_json::from_str(s)
            .map_err(|e| ThetaError::Invalid(format!("bad function file: {e}")))?;
        let levels = repr.n + repr.m;
        let len = grid_len(repr.p, repr.rank, levels)?;
        let mut out = Self::new(
            repr.rank,
            repr.p,
            repr.n,
            repr.m,
            vec![Complex64::new(0.0, 0.0); len],
        )?;
        let levels = levels as usize;
        for (digits, re, im) in repr.entries {
            if digits.len() != repr.rank * levels || digits.iter().any(|&d| d >= repr.p) {
                return Err(ThetaError::Invalid("malformed digit string".into()));
            }
            let coords: Vec<u64> = digits
                .chunks(levels.max(1))
                .take(repr.rank)
                .map(|ch| {
                    if levels == 0 {
                        0
                    } else {
                        ch.iter().rev().fold(0, |acc, &d| acc * repr.p + d)
                    }
                })
                .collect();
            let coords = if levels == 0 {
                vec![0; repr.rank]
            } else {
                coords
            };
            let k = out.flat_index(&coords);
            out.values[k] = Complex64::new(re, im);
        }
        Ok(out)
    }
}
