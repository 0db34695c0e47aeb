//! Fixed-capacity complex vectors and matrices for the 2- and 3-level models,
//! plus a Jacobi eigensolver for Hermitian matrices.
//!
//! Everything here is `Copy` and stack allocated. The propagators call the
//! eigensolver once or twice per time step, so avoiding heap traffic matters
//! more than generality.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// Largest Hilbert-space dimension handled by this crate.
pub const MAX_DIM: usize = 3;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Complex column vector of dimension 2 or 3.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CVector {
    dim: usize,
    data: [C64; MAX_DIM],
}

impl CVector {
    pub fn zeros(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "unsupported dimension {dim}");
        Self { dim, data: [ZERO; MAX_DIM] }
    }

    /// Unit vector along bare state `index`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.data[index] = ONE;
        v
    }

    pub fn from_slice(values: &[C64]) -> Self {
        let mut v = Self::zeros(values.len());
        v.data[..values.len()].copy_from_slice(values);
        v
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data[..self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &C64> {
        self.as_slice().iter()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Inner product `<self|other>` (antilinear in `self`).
    pub fn inner(&self, other: &CVector) -> C64 {
        debug_assert_eq!(self.dim, other.dim);
        self.iter().zip(other.iter()).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn scale(&self, factor: C64) -> CVector {
        let mut out = *self;
        for z in out.data[..self.dim].iter_mut() {
            *z *= factor;
        }
        out
    }

    pub fn normalized(&self) -> CVector {
        self.scale(C64::from(1.0 / self.norm()))
    }

    /// Index of the component with the largest modulus (first one on ties).
    pub fn dominant_index(&self) -> usize {
        let mut best = 0;
        let mut best_mag = -1.0;
        for (i, z) in self.iter().enumerate() {
            let mag = z.norm();
            if mag > best_mag * (1.0 + 1e-12) {
                best = i;
                best_mag = mag;
            }
        }
        best
    }
}

impl Index<usize> for CVector {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.as_slice()[i]
    }
}

impl IndexMut<usize> for CVector {
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        let dim = self.dim;
        &mut self.data[..dim][i]
    }
}

impl Sub for CVector {
    type Output = CVector;
    fn sub(self, rhs: CVector) -> CVector {
        let mut out = self;
        for i in 0..self.dim {
            out.data[i] -= rhs.data[i];
        }
        out
    }
}

impl fmt::Debug for CVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.iter()).finish()
    }
}

/// Dense complex square matrix of dimension 2 or 3.
#[derive(Clone, Copy, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: [[C64; MAX_DIM]; MAX_DIM],
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "unsupported dimension {dim}");
        Self { dim, data: [[ZERO; MAX_DIM]; MAX_DIM] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i][i] = ONE;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.data[i][j] = f(i, j);
            }
        }
        m
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[CVector]) -> Self {
        let dim = columns.len();
        Self::from_fn(dim, |i, j| columns[j][i])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn column(&self, j: usize) -> CVector {
        let mut v = CVector::zeros(self.dim);
        for i in 0..self.dim {
            v[i] = self.data[i][j];
        }
        v
    }

    pub fn set_column(&mut self, j: usize, v: &CVector) {
        for i in 0..self.dim {
            self.data[i][j] = v[i];
        }
    }

    pub fn adjoint(&self) -> CMatrix {
        CMatrix::from_fn(self.dim, |i, j| self.data[j][i].conj())
    }

    pub fn scale(&self, factor: C64) -> CMatrix {
        CMatrix::from_fn(self.dim, |i, j| self.data[i][j] * factor)
    }

    pub fn mul_vec(&self, v: &CVector) -> CVector {
        let mut out = CVector::zeros(self.dim);
        for i in 0..self.dim {
            out[i] = (0..self.dim).map(|j| self.data[i][j] * v[j]).sum();
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.entries().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.entries().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.data[i][i]).sum()
    }

    pub fn determinant(&self) -> C64 {
        let a = &self.data;
        match self.dim {
            1 => a[0][0],
            2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
            _ => {
                a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                    - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                    + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
            }
        }
    }

    /// `max |A - A^dagger|` over all entries.
    pub fn hermiticity_residual(&self) -> f64 {
        (*self - self.adjoint()).max_abs()
    }

    /// Largest deviation of `A^dagger A` from the identity.
    pub fn unitarity_residual(&self) -> f64 {
        (self.adjoint() * *self - CMatrix::identity(self.dim)).max_abs()
    }

    fn entries(&self) -> impl Iterator<Item = &C64> {
        let dim = self.dim;
        self.data[..dim].iter().flat_map(move |row| row[..dim].iter())
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        assert!(i < self.dim && j < self.dim);
        &self.data[i][j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        assert!(i < self.dim && j < self.dim);
        &mut self.data[i][j]
    }
}

impl Add for CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim);
        CMatrix::from_fn(self.dim, |i, j| self.data[i][j] + rhs.data[i][j])
    }
}

impl Sub for CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim);
        CMatrix::from_fn(self.dim, |i, j| self.data[i][j] - rhs.data[i][j])
    }
}

impl Mul for CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim);
        CMatrix::from_fn(self.dim, |i, j| {
            (0..self.dim).map(|k| self.data[i][k] * rhs.data[k][j]).sum()
        })
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[C64]> = self.data[..self.dim].iter().map(|r| &r[..self.dim]).collect();
        f.debug_list().entries(rows).finish()
    }
}

/// A Hermitian matrix. The lower triangle is always the conjugate of the
/// upper triangle and the diagonal is real, so Hermiticity holds exactly.
#[derive(Clone, Copy, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self(CMatrix::zeros(dim))
    }

    /// Builds the matrix from its upper triangle (`i <= j`); the imaginary
    /// part of diagonal entries is discarded.
    pub fn from_upper(dim: usize, mut upper: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = CMatrix::zeros(dim);
        for i in 0..dim {
            m.data[i][i] = C64::from(upper(i, i).re);
            for j in i + 1..dim {
                let z = upper(i, j);
                m.data[i][j] = z;
                m.data[j][i] = z.conj();
            }
        }
        Self(m)
    }

    /// Hermitian part taken from the upper triangle of `m`.
    pub fn from_matrix_upper(m: &CMatrix) -> Self {
        Self::from_upper(m.dim(), |i, j| m[(i, j)])
    }

    pub fn diagonal(values: &[f64]) -> Self {
        Self::from_upper(values.len(), |i, j| if i == j { C64::from(values[i]) } else { ZERO })
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn scale(&self, factor: f64) -> HermitianMatrix {
        Self(self.0.scale(C64::from(factor)))
    }

    pub fn mul_vec(&self, v: &CVector) -> CVector {
        self.0.mul_vec(v)
    }

    /// Expectation-like sandwich `<a|H|b>`.
    pub fn braket(&self, a: &CVector, b: &CVector) -> C64 {
        a.inner(&self.0.mul_vec(b))
    }

    pub fn is_zero(&self) -> bool {
        self.0.max_abs() == 0.0
    }
}

impl Index<(usize, usize)> for HermitianMatrix {
    type Output = C64;
    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.0[idx]
    }
}

impl Add for HermitianMatrix {
    type Output = HermitianMatrix;
    fn add(self, rhs: HermitianMatrix) -> HermitianMatrix {
        Self(self.0 + rhs.0)
    }
}

impl Sub for HermitianMatrix {
    type Output = HermitianMatrix;
    fn sub(self, rhs: HermitianMatrix) -> HermitianMatrix {
        Self(self.0 - rhs.0)
    }
}

impl fmt::Debug for HermitianMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Eigendecomposition `H = V diag(values) V^dagger`, eigenvalues ascending.
#[derive(Clone, Copy, Debug)]
pub struct Eigh {
    pub values: [f64; MAX_DIM],
    pub vectors: CMatrix,
}

impl Eigh {
    pub fn dim(&self) -> usize {
        self.vectors.dim()
    }

    pub fn values(&self) -> &[f64] {
        &self.values[..self.dim()]
    }
}

const JACOBI_MAX_SWEEPS: usize = 64;

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
///
/// For dimension 2 a single rotation diagonalizes the matrix exactly, which
/// is the usual closed form. Eigenvector phases are left as produced by the
/// rotations; callers fix their own gauge.
pub fn eigh(h: &HermitianMatrix) -> Eigh {
    let dim = h.dim();
    let mut a = h.0;
    let mut v = CMatrix::identity(dim);
    let scale = a.frobenius();

    if scale > 0.0 {
        for _ in 0..JACOBI_MAX_SWEEPS {
            let off: f64 = (0..dim)
                .flat_map(|i| (i + 1..dim).map(move |j| (i, j)))
                .map(|(i, j)| a.data[i][j].norm_sqr())
                .sum::<f64>()
                .sqrt();
            if off <= 1e-17 * scale || off < f64::MIN_POSITIVE {
                break;
            }
            for p in 0..dim {
                for q in p + 1..dim {
                    jacobi_rotate(&mut a, &mut v, p, q);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| a.data[i][i].re.total_cmp(&a.data[j][j].re));
    let mut values = [0.0; MAX_DIM];
    let mut vectors = CMatrix::zeros(dim);
    for (col, &src) in order.iter().enumerate() {
        values[col] = a.data[src][src].re;
        vectors.set_column(col, &v.column(src));
    }
    Eigh { values, vectors }
}

fn jacobi_rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let apq = a.data[p][q];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let phase = apq / mag;
    let app = a.data[p][p].re;
    let aqq = a.data[q][q].re;
    let theta = (aqq - app) / (2.0 * mag);
    let t = if theta.is_infinite() {
        0.0
    } else {
        let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
        sign / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // U = diag(1, e^{-i alpha}) on (p, q), followed by a real rotation.
    let mut u = CMatrix::identity(a.dim);
    u.data[p][p] = C64::from(c);
    u.data[p][q] = C64::from(s);
    u.data[q][p] = -phase.conj() * s;
    u.data[q][q] = phase.conj() * c;

    let mut rotated = u.adjoint() * *a * u;
    for i in 0..a.dim {
        rotated.data[i][i] = C64::from(rotated.data[i][i].re);
        for j in i + 1..a.dim {
            rotated.data[j][i] = rotated.data[i][j].conj();
        }
    }
    rotated.data[p][q] = ZERO;
    rotated.data[q][p] = ZERO;
    *a = rotated;
    *v = *v * u;
}

/// Time-evolution operator `exp(-i dt H)` via the spectral decomposition.
pub fn expm_minus_i(h: &HermitianMatrix, dt: f64) -> CMatrix {
    let eig = eigh(h);
    let dim = h.dim();
    let mut phased = eig.vectors;
    for j in 0..dim {
        let factor = C64::from_polar(1.0, -eig.values[j] * dt);
        for i in 0..dim {
            phased[(i, j)] *= factor;
        }
    }
    phased * eig.vectors.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_hermitian(dim: usize, entries: &[f64]) -> HermitianMatrix {
        HermitianMatrix::from_upper(dim, |i, j| {
            let k = 2 * (i * MAX_DIM + j);
            C64::new(entries[k], if i == j { 0.0 } else { entries[k + 1] })
        })
    }

    #[test]
    fn two_level_symmetric_coupling() {
        let g = 0.37;
        let h = HermitianMatrix::from_upper(2, |i, j| if i == j { ZERO } else { C64::from(g) });
        let eig = eigh(&h);
        assert!((eig.values[0] + g).abs() < 1e-15);
        assert!((eig.values[1] - g).abs() < 1e-15);
        let lower = eig.vectors.column(0);
        assert!((lower[0].norm() - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((lower[0] + lower[1]).norm() < 1e-15);
    }

    #[test]
    fn zero_matrix_decomposes() {
        let eig = eigh(&HermitianMatrix::zeros(3));
        assert_eq!(eig.values(), &[0.0, 0.0, 0.0]);
        assert!(eig.vectors.unitarity_residual() < 1e-15);
    }

    #[test]
    fn exponential_is_unitary_and_composes() {
        let h = HermitianMatrix::from_upper(3, |i, j| C64::new((i + 2 * j) as f64 * 0.3, (j as f64 - i as f64) * 0.1));
        let u1 = expm_minus_i(&h, 0.4);
        let u2 = expm_minus_i(&h, 0.8);
        assert!(u1.unitarity_residual() < 1e-14);
        assert!((u1 * u1 - u2).max_abs() < 1e-13);
    }

    proptest! {
        #[test]
        fn eigh_reconstructs(entries in prop::collection::vec(-20.0f64..20.0, 18), dim in 2usize..=3) {
            let h = random_hermitian(dim, &entries);
            let eig = eigh(&h);
            prop_assert!(eig.vectors.unitarity_residual() < 1e-12);
            let norm = h.as_matrix().frobenius().max(1.0);
            for n in 0..dim {
                let v = eig.vectors.column(n);
                let residual = (h.mul_vec(&v) - v.scale(C64::from(eig.values[n]))).norm();
                prop_assert!(residual < 1e-12 * norm, "residual {residual}");
            }
            prop_assert!(eig.values().windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
