//! Quadrature checks of the shifted Legendre basis, shared with the
//! acceptance suite.

#![allow(dead_code)]

use resetcert_core::legendre::LegendreBasis;

/// Composite Simpson rule, exact enough for polynomials of degree <= 10.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let dx = (b - a) / (2 * panels) as f64;
    let mut sum = f(a) + f(b);
    for j in 1..2 * panels {
        let w = if j % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + j as f64 * dx);
    }
    sum * dx / 3.0
}

/// `max_{j,k <= kmax} |∫ L_j L_k - δ_jk h/(2k+1)|` on `[-h, 0]`.
pub fn orthogonality_error(h: f64, kmax: usize) -> f64 {
    let basis = LegendreBasis::new(h, kmax).unwrap();
    let mut worst = 0.0_f64;
    for j in 0..=kmax {
        for k in 0..=kmax {
            let integral = simpson(|u| basis.eval(j, u).unwrap() * basis.eval(k, u).unwrap(), -h, 0.0, 2000);
            let expected = if j == k { h / (2 * k + 1) as f64 } else { 0.0 };
            worst = worst.max((integral - expected).abs());
        }
    }
    worst
}

/// `max_k max(|L_k(0) - 1|, |L_k(-h) - (-1)^k|)`.
pub fn boundary_error(h: f64, kmax: usize) -> f64 {
    let basis = LegendreBasis::new(h, kmax).unwrap();
    (0..=kmax)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let at0 = (basis.eval(k, 0.0).unwrap() - 1.0).abs();
            let at_h = (basis.eval(k, -h).unwrap() - sign).abs();
            at0.max(at_h)
        })
        .fold(0.0, f64::max)
}
