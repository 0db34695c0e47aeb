//! Oracles shared by the integration tests. None of them call into the
//! spectral or propagation code they are used to check.

#![allow(dead_code)]

use adiacycle_core::HermitianMatrix;
use num_complex::Complex64 as C64;

/// Eigenvalues of a real-symmetric-or-Hermitian 2x2 block, ascending.
pub fn eig2(a: f64, d: f64, b: C64) -> (f64, f64) {
    let mean = 0.5 * (a + d);
    let radius = (0.25 * (a - d).powi(2) + b.norm_sqr()).sqrt();
    (mean - radius, mean + radius)
}

/// Eigenvalues of a Hermitian 3x3 matrix from its characteristic cubic.
///
/// `det(lambda - H) = lambda^3 - c2 lambda^2 + c1 lambda - c0` has real
/// coefficients. The eigenvalues `mu1 <= mu2` of the leading 2x2 block
/// interlace the roots, so `[-R, mu1]`, `[mu1, mu2]`, `[mu2, R]` bracket one
/// root each (`R` a Gershgorin bound) and plain bisection finds them.
pub fn cubic_eigenvalues(h: &HermitianMatrix) -> [f64; 3] {
    let m = |i: usize, j: usize| h[(i, j)];
    let c2 = m(0, 0).re + m(1, 1).re + m(2, 2).re;
    let minor = |i: usize, j: usize| (m(i, i) * m(j, j) - m(i, j) * m(j, i)).re;
    let c1 = minor(0, 1) + minor(0, 2) + minor(1, 2);
    let c0 = (m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
        + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0)))
    .re;
    let p = |x: f64| ((x - c2) * x + c1) * x - c0;
    let radius = (0..3)
        .map(|i| (0..3).map(|j| m(i, j).norm()).sum::<f64>())
        .fold(0.0, f64::max)
        + 1.0;
    let (mu1, mu2) = eig2(m(0, 0).re, m(1, 1).re, m(0, 1));
    let bisect = |mut lo: f64, mut hi: f64| {
        let mut plo = p(lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let pm = p(mid);
            if pm == 0.0 {
                return mid;
            }
            if (pm < 0.0) == (plo < 0.0) {
                lo = mid;
                plo = pm;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    [bisect(-radius, mu1), bisect(mu1, mu2), bisect(mu2, radius)]
}

/// Dense Taylor-series `exp(-i H dt)` with scaling and squaring.
pub fn expm_taylor(h: &HermitianMatrix, dt: f64) -> Vec<Vec<C64>> {
    let n = h.dim();
    let norm: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| h[(i, j)].norm()).sum::<f64>() * dt.abs();
    let squarings = (norm.max(1e-300).log2().ceil().max(0.0) as u32) + 4;
    let scale = dt / 2f64.powi(squarings as i32);
    let a: Vec<Vec<C64>> = (0..n).map(|i| (0..n).map(|j| C64::new(0.0, -scale) * h[(i, j)]).collect()).collect();
    let mul = |x: &Vec<Vec<C64>>, y: &Vec<Vec<C64>>| -> Vec<Vec<C64>> {
        (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| x[i][k] * y[k][j]).sum()).collect()).collect()
    };
    let mut result: Vec<Vec<C64>> = (0..n).map(|i| (0..n).map(|j| C64::from(if i == j { 1.0 } else { 0.0 })).collect()).collect();
    let mut term = result.clone();
    for k in 1..30 {
        term = mul(&term, &a);
        for row in term.iter_mut() {
            for z in row.iter_mut() {
                *z /= k as f64;
            }
        }
        for i in 0..n {
            for j in 0..n {
                result[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        result = mul(&result, &result);
    }
    result
}
