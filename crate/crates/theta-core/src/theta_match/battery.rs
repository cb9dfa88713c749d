//! Seeded random test functions.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ThetaError};
use crate::padic::{legendre, TruncatedPadic};
use crate::quadspace::QuadSpaceV;
use crate::schwartz::SchwartzFn;

/// Parameters of a reproducible family of random functions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Battery {
    pub seed: u64,
    pub size: usize,
    /// Outer and inner levels of the generated functions.
    pub n: i64,
    pub m: i64,
    /// Number of residue classes given a nonzero value.
    pub classes: usize,
    /// Symmetrize to this parity when set.
    pub parity: Option<i8>,
}

impl Default for Battery {
    fn default() -> Self {
        Self {
            seed: 0,
            size: 10,
            n: 1,
            m: 0,
            classes: 6,
            parity: None,
        }
    }
}

impl Battery {
    pub fn generate(&self, rank: usize, p: u64) -> Result<Vec<SchwartzFn>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.size)
            .map(|_| random_function(&mut rng, rank, p, self.n, self.m, self.classes, self.parity))
            .collect()
    }
}

fn small_rational<R: Rng>(rng: &mut R) -> f64 {
    let num = rng.gen_range(-6i32..=6);
    let num = if num == 0 { 1 } else { num };
    let den = [1.0, 2.0, 4.0, 8.0][rng.gen_range(0..4)];
    num as f64 / den
}

/// Random small dyadic values on `classes` random cells at levels (n, m).
pub fn random_function<R: Rng>(
    rng: &mut R,
    rank: usize,
    p: u64,
    n: i64,
    m: i64,
    classes: usize,
    parity: Option<i8>,
) -> Result<SchwartzFn> {
    let zero = SchwartzFn::from_fn(rank, p, n, m, |_| Complex64::new(0.0, 0.0))?;
    let len = zero.values().len();
    let mut values = zero.values().to_vec();
    for _ in 0..classes.max(1) {
        let k = rng.gen_range(0..len);
        values[k] = Complex64::new(
            small_rational(rng),
            small_rational(rng) * rng.gen_range(0..2) as f64,
        );
    }
    let f = SchwartzFn::new(rank, p, n, m, values)?;
    Ok(match parity {
        Some(s) => f.parity_project(s),
        None => f,
    })
}

/// (valuation mod 2, residue symbol of the unit part).
fn square_class(x: &TruncatedPadic) -> (i64, i8) {
    (
        x.valuation().unwrap().rem_euclid(2),
        legendre(x.unit_residue(), x.p()),
    )
}

/// A random function on V supported where nu lies in a fixed square class
/// other than that of kappa. Cells are kept only when nu has constant
/// square class on them.
pub fn norm_class_function<R: Rng>(
    rng: &mut R,
    v: &QuadSpaceV,
    kappa: &TruncatedPadic,
    n: i64,
    m: i64,
    classes: usize,
) -> Result<SchwartzFn> {
    let p = v.p();
    let field = v.algebra().field();
    let target = square_class(kappa);
    let vg: Vec<i64> = v.gram().iter().map(|g| g.valuation().unwrap()).collect();
    let grid = SchwartzFn::from_fn(3, p, n, m, |_| Complex64::new(0.0, 0.0))?;
    let side = grid.side();
    let mut eligible = Vec::new();
    for flat in 0..grid.values().len() as u64 {
        let t = [flat / (side * side), (flat / side) % side, flat % side];
        let x = t.map(|c| TruncatedPadic::from_i64(&field, c as i64).shift(-n));
        let nu = v.nu(&x);
        let Some(vn) = nu.valuation() else { continue };
        // least valuation of nu(x + d) - nu(x) over d in p^m O^3
        let drift = (0..3)
            .map(|i| {
                let lin = x[i].valuation().map_or(i64::MAX, |vx| vx + m);
                vg[i] + lin.min(2 * m)
            })
            .min()
            .unwrap();
        if drift > vn && square_class(&nu) != target {
            eligible.push(flat as usize);
        }
    }
    if eligible.is_empty() {
        return Err(ThetaError::Invalid(
            "no cells with a foreign norm class at these levels".into(),
        ));
    }
    eligible.shuffle(rng);
    let mut values = grid.values().to_vec();
    for &k in eligible.iter().take(classes.max(1)) {
        values[k] = Complex64::new(small_rational(rng), small_rational(rng));
    }
    SchwartzFn::new(3, p, n, m, values)
}
