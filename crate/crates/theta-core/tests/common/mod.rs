//! Brute-force oracles shared by the integration tests. Nothing here calls
//! into the library's symbol, character or orbit code.
#![allow(dead_code)]

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;

/// Primitive solubility of z^2 = a x^2 + b y^2 modulo p^k. For odd p and
/// coefficients of valuation at most 1, k = 3 decides p-adic solubility;
/// for p = 2, k = 5 does.
pub fn soluble_mod(a: i64, b: i64, p: u64, k: u32) -> bool {
    let m = p.pow(k) as i64;
    let red = |x: i64| x.rem_euclid(m);
    let mut all_sq = vec![false; m as usize];
    let mut unit_sq = vec![false; m as usize];
    for z in 0..m {
        let s = red(z * z) as usize;
        all_sq[s] = true;
        if z % p as i64 != 0 {
            unit_sq[s] = true;
        }
    }
    for x in 0..m {
        for y in 0..m {
            let t = red(red(a) * red(x * x) + red(b) * red(y * y)) as usize;
            let prim = x % p as i64 != 0 || y % p as i64 != 0;
            if (prim && all_sq[t]) || unit_sq[t] {
                return true;
            }
        }
    }
    false
}

/// (a, b)_p by solubility; `p = 0` stands for the real place.
pub fn hilbert_oracle(a: i64, b: i64, p: u64) -> i8 {
    let ok = if p == 0 {
        a > 0 || b > 0
    } else {
        soluble_mod(a, b, p, if p == 2 { 5 } else { 3 })
    };
    if ok {
        1
    } else {
        -1
    }
}

/// Inverse of a modulo m by the extended Euclidean algorithm.
pub fn inv_mod(a: i64, m: i64) -> i64 {
    let (mut r0, mut r1) = (a.rem_euclid(m) as i128, m as i128);
    let (mut s0, mut s1) = (1i128, 0i128);
    while r1 != 0 {
        let t = r0 / r1;
        (r0, r1) = (r1, r0 - t * r1);
        (s0, s1) = (s1, s0 - t * s1);
    }
    assert_eq!(r0, 1, "{a} is not invertible mod {m}");
    s0.rem_euclid(m as i128) as i64
}

/// p-adic fractional part of n / (d p^e) with d prime to p, as a real in [0, 1).
pub fn frac_p(n: i64, d: i64, p: u64, e: u32) -> f64 {
    if e == 0 {
        return 0.0;
    }
    let m = (p as i64).pow(e);
    let r = (n.rem_euclid(m) as i128 * inv_mod(d, m) as i128).rem_euclid(m as i128);
    r as f64 / m as f64
}

/// psi(x) = exp(-2 pi i frac(x)) at x = n / (d p^e).
pub fn psi(n: i64, d: i64, p: u64, e: u32) -> Complex64 {
    Complex64::from_polar(1.0, -2.0 * PI * frac_p(n, d, p, e))
}

fn vp(mut n: i64, p: i64) -> u32 {
    let mut v = 0;
    while n != 0 && n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

/// chi(x) = (x, -kappa)_p on p^e u, tabulated by the solubility oracle.
pub fn chi_table(kappa: i64, p: u64) -> HashMap<(u32, i64), i8> {
    let mut t = HashMap::new();
    for e in 0..2u32 {
        for u in 1..p as i64 {
            t.insert((e, u), hilbert_oracle((p as i64).pow(e) * u, -kappa, p));
        }
    }
    t
}

/// The integral of psi(-x) chi(x) over p^{-n} O with cells p^m O; the
/// cell p^m O itself is summed in closed form from chi on valuations.
pub fn gauss_direct(kappa: i64, p: u64, n: u32, m: u32) -> Complex64 {
    let chi = chi_table(kappa, p);
    let q = p as f64;
    let pi = p as i64;
    let side = pi.pow(n + m);
    let cell = q.powi(-(m as i32));
    let mut acc = Complex64::new(0.0, 0.0);
    for t in 1..side {
        let v = vp(t, pi);
        let u = (t / pi.pow(v)) % pi;
        let val = v as i64 - n as i64;
        let c = chi[&((val.rem_euclid(2)) as u32, u)] as f64;
        // psi(-x) with x = t p^{-n}
        acc += psi(-t, 1, p, n) * (c * cell);
    }
    let at_p = chi[&(1, 1)] as f64;
    let unramified = (1..pi).all(|u| chi[&(0, u)] == 1);
    let near = if !unramified {
        0.0
    } else if at_p == 1.0 {
        cell
    } else {
        (-1f64).powi(m as i32) * cell * (1.0 - 1.0 / q) / (1.0 + 1.0 / q)
    };
    acc + near
}

/// The integral of psi(t x^2) over p^{-k} O with t = tn / (td p^te),
/// td prime to p, using cells fine enough that the phase is constant.
pub fn quadratic_direct(tn: i64, td: i64, te: u32, p: u64, k: u32) -> Complex64 {
    let pi = p as i64;
    let m = k + te + 1;
    let side = pi.pow(k + m);
    let cell = (p as f64).powi(-(m as i32));
    let mut acc = Complex64::new(0.0, 0.0);
    for s in 0..side {
        // t x^2 = tn s^2 / (td p^{te + 2k})
        let num =
            (tn as i128 * (s as i128 * s as i128)).rem_euclid((pi as i128).pow(te + 2 * k)) as i64;
        acc += psi(num, td, p, te + 2 * k) * cell;
    }
    acc
}

/// Leray volume of {nu = kappa} inside p^{-n} L for the diagonal form
/// g0 x0^2 + g1 x1^2 + g2 x2^2, where L = O + p^l1 O + O. Counts z in L mod
/// p^K with nu(z) = p^{2n} kappa mod p^K, and returns (numerator, exponent)
/// with volume = numerator * q^exponent.
pub fn orbit_volume(g: [i64; 3], kappa: i64, p: u64, n: u32, l1: u32, big_k: u32) -> (u128, i64) {
    let pi = p as i64;
    let m = pi.pow(big_k);
    let red = |x: i64| x.rem_euclid(m);
    let hist = |gi: i64, step: i64| {
        let mut h: HashMap<i64, u64> = HashMap::new();
        let mut z = 0;
        while z < m {
            *h.entry(red(red(gi) * red(z * z))).or_default() += 1;
            z += step;
        }
        h
    };
    let h0 = hist(g[0], 1);
    let h1 = hist(g[1], pi.pow(l1));
    let h2 = hist(g[2], 1);
    let t = red(pi.pow(2 * n) * kappa);
    let mut count: u128 = 0;
    for (s0, c0) in &h0 {
        for (s1, c1) in &h1 {
            if let Some(c2) = h2.get(&red(t - s0 - s1)) {
                count += (*c0 as u128) * (*c1 as u128) * (*c2 as u128);
            }
        }
    }
    (count, n as i64 - 2 * big_k as i64)
}
