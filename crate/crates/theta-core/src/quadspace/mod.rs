//! Quaternion algebras, the ternary space of pure quaternions and the quadric
//! nu(x) = kappa with its invariant (Leray) measure.

mod engine;
mod shell;

pub use engine::{
    NormalizationEntry, NormalizationLedger, OrbitEngine, OrbitQuery, OrbitResult, OrbitValue,
    StratumMass,
};
pub use shell::{orbit_shell, orbital_integral, OrbitShell, ShellPoint};

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ThetaError};
use crate::padic::{hilbert_padic, LocalField, TruncatedPadic};

pub type Vec3 = [TruncatedPadic; 3];

/// The algebra with i^2 = a, j^2 = b, ij = -ji.
#[derive(Clone, Debug, PartialEq)]
pub struct QuaternionAlgebra {
    a: TruncatedPadic,
    b: TruncatedPadic,
}

impl QuaternionAlgebra {
    pub fn new(a: TruncatedPadic, b: TruncatedPadic) -> Result<Self> {
        if a.is_zero() || b.is_zero() {
            return Err(ThetaError::ZeroArgument("structure constant"));
        }
        if a.p() != b.p() {
            return Err(ThetaError::FieldMismatch(a.p(), b.p()));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> &TruncatedPadic {
        &self.a
    }

    pub fn b(&self) -> &TruncatedPadic {
        &self.b
    }

    pub fn field(&self) -> LocalField {
        self.a.field()
    }

    /// +1 when split, -1 for the division algebra.
    pub fn invariant(&self) -> i8 {
        hilbert_padic(&self.a, &self.b).unwrap()
    }
}

pub fn invariant(b: &QuaternionAlgebra) -> i8 {
    b.invariant()
}

/// Pure quaternions x1 i + x2 j + x3 ij with nu = -a x1^2 - b x2^2 + ab x3^2.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadSpaceV {
    algebra: QuaternionAlgebra,
    gram: Vec3,
}

impl QuadSpaceV {
    pub fn new(algebra: QuaternionAlgebra) -> Self {
        let a = algebra.a();
        let b = algebra.b();
        let gram = [-a, -b, a * b];
        Self { algebra, gram }
    }

    pub fn algebra(&self) -> &QuaternionAlgebra {
        &self.algebra
    }

    /// Diagonal coefficients (-a, -b, ab).
    pub fn gram(&self) -> &Vec3 {
        &self.gram
    }

    pub fn p(&self) -> u64 {
        self.algebra.a().p()
    }

    pub fn nu(&self, x: &Vec3) -> TruncatedPadic {
        let mut acc = self.algebra.field().zero();
        for (g, xi) in self.gram.iter().zip(x.iter()) {
            acc = acc + &(g * &(xi * xi));
        }
        acc
    }

    /// B(x, y) = nu(x + y) - nu(x) - nu(y).
    pub fn bform(&self, x: &Vec3, y: &Vec3) -> TruncatedPadic {
        let mut acc = self.algebra.field().zero();
        for i in 0..3 {
            acc = acc + &(&self.gram[i] * &(&x[i] * &y[i]));
        }
        &acc + &acc
    }

    /// Determinant of the Gram matrix of B, equal to 8 a^2 b^2.
    pub fn gram_determinant(&self) -> TruncatedPadic {
        let eight = self.algebra.field().int(8);
        &eight * &(&self.gram[0] * &(&self.gram[1] * &self.gram[2]))
    }

    /// Hasse invariant prod_{i<j} (g_i, g_j) of the diagonal form.
    pub fn hasse_invariant(&self) -> i8 {
        let g = &self.gram;
        let h = |x: &TruncatedPadic, y: &TruncatedPadic| hilbert_padic(x, y).unwrap();
        h(&g[0], &g[1]) * h(&g[0], &g[2]) * h(&g[1], &g[2])
    }

    /// alpha(x) = B(x, x0) / (2 kappa).
    pub fn alpha(&self, x: &Vec3, base: &BasePoint) -> TruncatedPadic {
        let two_k = &base.kappa + &base.kappa;
        self.bform(x, &base.x0).div(&two_k).unwrap()
    }
}

pub fn nu(v: &QuadSpaceV, x: &Vec3) -> TruncatedPadic {
    v.nu(x)
}

pub fn bform(v: &QuadSpaceV, x: &Vec3, y: &Vec3) -> TruncatedPadic {
    v.bform(x, y)
}

/// A point x0 with nu(x0) = kappa.
#[derive(Clone, Debug, PartialEq)]
pub struct BasePoint {
    pub x0: Vec3,
    pub kappa: TruncatedPadic,
}

impl BasePoint {
    /// The coordinate index when x0 lies on a coordinate axis.
    pub fn axis(&self) -> Option<usize> {
        let nz: Vec<usize> = (0..3).filter(|&i| !self.x0[i].is_zero()).collect();
        (nz.len() == 1).then(|| nz[0])
    }

    pub fn scaled(&self, r: &TruncatedPadic) -> BasePoint {
        BasePoint {
            x0: [r * &self.x0[0], r * &self.x0[1], r * &self.x0[2]],
            kappa: &(r * r) * &self.kappa,
        }
    }
}

/// Coordinate summary used in reports.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasePointSummary {
    pub valuations: [Option<i64>; 3],
    pub axis: Option<usize>,
}

/// Finds x0 with nu(x0) = kappa.
///
/// Candidates put small integers (or p-power multiples of them) in two
/// coordinates and solve for the third with a p-adic square root, so axis
/// points come first. `max_search` bounds the number of candidates tried.
pub fn find_base_point(
    v: &QuadSpaceV,
    kappa: &TruncatedPadic,
    max_search: usize,
) -> Result<BasePoint> {
    if kappa.is_zero() {
        return Err(ThetaError::ZeroArgument("kappa"));
    }
    let field = v.algebra.field();
    field.require_odd()?;
    if v.algebra.invariant() == -1 && (-kappa).is_square() {
        return Err(ThetaError::NotRepresented);
    }
    let p = field.p() as i64;
    let mut tried = 0usize;
    let mut bound = 0i64;
    let scales: Vec<i64> = vec![0, 1, -1, 2, -2];
    while tried < max_search {
        for &sc in &scales {
            for i in 0..3 {
                let (j, k) = ((i + 1) % 3, (i + 2) % 3);
                for s in 0..=bound {
                    for t in 0..=bound {
                        if s.max(t) != bound {
                            continue;
                        }
                        tried += 1;
                        if tried > max_search {
                            return Err(ThetaError::SearchExhausted(max_search));
                        }
                        let xs = TruncatedPadic::from_bigint(&field, &BigInt::from(s)).shift(sc);
                        let xt = TruncatedPadic::from_bigint(&field, &BigInt::from(t)).shift(sc);
                        let rest =
                            kappa - &(&(&v.gram[j] * &(&xs * &xs)) + &(&v.gram[k] * &(&xt * &xt)));
                        if rest.is_zero() {
                            continue;
                        }
                        let Some(xi) = rest.div(&v.gram[i])?.sqrt() else {
                            continue;
                        };
                        let mut x0 = [field.zero(), field.zero(), field.zero()];
                        x0[i] = xi;
                        x0[j] = xs;
                        x0[k] = xt;
                        let bp = BasePoint {
                            x0,
                            kappa: kappa.clone(),
                        };
                        if v.nu(&bp.x0) == *kappa {
                            return Ok(bp);
                        }
                    }
                }
            }
            if bound == 0 {
                break;
            }
        }
        bound += 1;
        if bound > p * p + 2 {
            break;
        }
    }
    Err(ThetaError::SearchExhausted(tried))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(p: u64, a: i64, b: i64) -> QuadSpaceV {
        let f = LocalField::new(p, 12).unwrap();
        QuadSpaceV::new(QuaternionAlgebra::new(f.int(a), f.int(b)).unwrap())
    }

    #[test]
    fn invariants() {
        let f5 = LocalField::new(5, 12).unwrap();
        let f3 = LocalField::new(3, 12).unwrap();
        assert_eq!(
            QuaternionAlgebra::new(f5.int(1), f5.int(1))
                .unwrap()
                .invariant(),
            1
        );
        assert_eq!(
            QuaternionAlgebra::new(f3.int(2), f3.int(3))
                .unwrap()
                .invariant(),
            -1
        );
        assert_eq!(
            QuaternionAlgebra::new(f5.int(5), f5.int(5))
                .unwrap()
                .invariant(),
            1
        );
    }

    #[test]
    fn nu_and_bform() {
        let v = space(5, 1, 1);
        let f = LocalField::new(5, 12).unwrap();
        let e3 = [f.zero(), f.zero(), f.int(1)];
        assert_eq!(v.nu(&e3), f.int(1));
        let z = [f.zero(), f.zero(), f.zero()];
        assert!(v.nu(&z).is_zero());
        let e1 = [f.int(1), f.zero(), f.zero()];
        let e2 = [f.zero(), f.int(1), f.zero()];
        assert!(v.bform(&e1, &e2).is_zero());
        let x = [f.int(2), f.ratio(1, 5), f.int(-3)];
        assert_eq!(v.bform(&x, &x), &v.nu(&x) + &v.nu(&x));
    }

    #[test]
    fn hasse_matches_invariant_at_odd_p() {
        for (p, a, b) in [(3, 1, 1), (3, 2, 3), (5, 2, 5), (7, 3, 7), (5, 5, 5)] {
            let v = space(p, a, b);
            assert_eq!(
                v.hasse_invariant(),
                v.algebra().invariant(),
                "p={p} a={a} b={b}"
            );
        }
    }

    #[test]
    fn base_points() {
        let v = space(5, 1, 1);
        let f = LocalField::new(5, 12).unwrap();
        let bp = find_base_point(&v, &f.int(1), 1000).unwrap();
        assert!(bp.axis().is_some());
        let bp = find_base_point(&v, &f.int(5), 1000).unwrap();
        assert_eq!(v.nu(&bp.x0), f.int(5));
        let v3 = space(3, 2, 3);
        let f3 = LocalField::new(3, 12).unwrap();
        assert_eq!(
            find_base_point(&v3, &f3.int(-1), 1000),
            Err(ThetaError::NotRepresented)
        );
        let bp = find_base_point(&v3, &f3.int(1), 1000).unwrap();
        assert_eq!(v3.nu(&bp.x0), f3.int(1));
    }

    #[test]
    fn alpha_at_base_point() {
        let v = space(3, 1, 1);
        let f = LocalField::new(3, 12).unwrap();
        let bp = find_base_point(&v, &f.int(2), 1000).unwrap();
        assert_eq!(v.alpha(&bp.x0, &bp), f.int(1));
        let neg = [-&bp.x0[0], -&bp.x0[1], -&bp.x0[2]];
        assert_eq!(v.alpha(&neg, &bp), f.int(-1));
    }
}
