//! Instantaneous eigenframes and their continuation along a `tau` grid.
//!
//! Levels are identified by eigenvector overlap between neighbouring samples,
//! and each matched eigenvector is re-phased so that its overlap with the
//! predecessor is real and positive (discrete parallel transport). Columns
//! stay in ascending eigenvalue order; the identity of the followed level is
//! carried in `followed_index`.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{eigh, CMatrix, CVector, HermitianMatrix, MAX_DIM};

/// Eigenvalue spacing (ns^-1) below which levels count as degenerate.
pub const DEGENERACY_TOLERANCE: f64 = 1e-9;

/// Minimum margin between the best and second-best overlap when matching.
pub const AMBIGUITY_MARGIN: f64 = 0.1;

#[derive(Clone, Copy, Debug)]
pub struct EigenFrame {
    pub tau: f64,
    eigenvalues: [f64; MAX_DIM],
    /// Eigenvectors as columns, ordered like the eigenvalues.
    pub eigenvectors: CMatrix,
    pub followed_index: usize,
}

impl EigenFrame {
    pub fn dim(&self) -> usize {
        self.eigenvectors.dim()
    }

    /// Ascending eigenvalues (ns^-1).
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues[..self.dim()]
    }

    pub fn vector(&self, n: usize) -> CVector {
        self.eigenvectors.column(n)
    }

    pub fn followed_vector(&self) -> CVector {
        self.vector(self.followed_index)
    }

    pub fn followed_energy(&self) -> f64 {
        self.eigenvalues[self.followed_index]
    }

    /// Smallest spacing between consecutive eigenvalues.
    pub fn min_gap(&self) -> f64 {
        self.eigenvalues()
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn check_gaps(&self) -> Result<()> {
        let gap = self.min_gap();
        if gap < DEGENERACY_TOLERANCE {
            return Err(Error::DegenerateGap { tau: self.tau, gap });
        }
        Ok(())
    }

    /// Multiplies eigenvector `n` by `phase` (unit modulus).
    pub fn rephase(&mut self, n: usize, phase: C64) {
        let v = self.vector(n).scale(phase);
        self.eigenvectors.set_column(n, &v);
    }
}

/// Rotates `v` so that its largest-magnitude component is real positive.
pub fn local_gauge(v: &CVector) -> CVector {
    let pivot = v[v.dominant_index()];
    if pivot.norm() == 0.0 {
        return *v;
    }
    v.scale(pivot.conj() / pivot.norm())
}

/// Eigendecomposition of `h` in the local gauge. `followed_index` is 0.
pub fn eigen_frame(h: &HermitianMatrix, tau: f64) -> EigenFrame {
    let eig = eigh(h);
    let mut vectors = eig.vectors;
    for n in 0..h.dim() {
        vectors.set_column(n, &local_gauge(&eig.vectors.column(n)));
    }
    EigenFrame { tau, eigenvalues: eig.values, eigenvectors: vectors, followed_index: 0 }
}

/// Index of the eigenvector with the largest overlap with `state`.
pub fn best_overlap_level(frame: &EigenFrame, state: &CVector) -> usize {
    let mut best = 0;
    let mut best_overlap = -1.0;
    for n in 0..frame.dim() {
        let overlap = frame.vector(n).inner(state).norm();
        if overlap > best_overlap {
            best = n;
            best_overlap = overlap;
        }
    }
    best
}

/// Continues `prev` to the decomposition `next`: matches levels by overlap,
/// parallel-transports phases and propagates the followed index.
pub fn continue_frame(prev: &EigenFrame, mut next: EigenFrame) -> Result<EigenFrame> {
    let dim = prev.dim();
    if next.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: next.dim() });
    }
    let mut matched = [usize::MAX; MAX_DIM];
    let mut taken = [false; MAX_DIM];
    for i in 0..dim {
        let old = prev.vector(i);
        let mut overlaps: Vec<(usize, f64)> =
            (0..dim).map(|j| (j, old.inner(&next.vector(j)).norm())).collect();
        overlaps.sort_by(|a, b| b.1.total_cmp(&a.1));
        let (best_j, best) = overlaps[0];
        let second = overlaps[1].1;
        if best - second < AMBIGUITY_MARGIN || taken[best_j] {
            return Err(Error::AmbiguousTracking { tau: next.tau, best, second });
        }
        taken[best_j] = true;
        matched[i] = best_j;
    }
    for i in 0..dim {
        let j = matched[i];
        let overlap = prev.vector(i).inner(&next.vector(j));
        next.rephase(j, overlap.conj() / overlap.norm());
    }
    next.followed_index = matched[prev.followed_index];
    Ok(next)
}

/// Tracks the eigenframes of `h_path` along `grid`, following the level that
/// initially overlaps most with `initial`.
pub fn track_frames<F>(h_path: F, grid: &[f64], initial: &CVector) -> Result<Vec<EigenFrame>>
where
    F: Fn(f64) -> HermitianMatrix,
{
    validate_grid(grid)?;
    let mut frames: Vec<EigenFrame> = Vec::with_capacity(grid.len());
    for &tau in grid {
        let h = h_path(tau);
        if h.dim() != initial.dim() {
            return Err(Error::DimensionMismatch { expected: initial.dim(), found: h.dim() });
        }
        let frame = eigen_frame(&h, tau);
        frame.check_gaps()?;
        let frame = match frames.last() {
            None => {
                let mut first = frame;
                first.followed_index = best_overlap_level(&first, initial);
                first
            }
            Some(prev) => continue_frame(prev, frame)?,
        };
        frames.push(frame);
    }
    Ok(frames)
}

pub(crate) fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InsufficientData("empty tau grid".into()));
    }
    if grid.iter().any(|t| !(-1e-12..=1.0 + 1e-12).contains(t)) {
        return Err(Error::InvalidParameter("tau grid must lie in [0, 1]".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("tau grid must be strictly increasing".into()));
    }
    Ok(())
}

/// `n` equidistant points covering `[0, 1]`.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    assert!(n >= 2, "grid needs at least two points");
    let last = (n - 1) as f64;
    (0..n).map(|i| i as f64 / last).collect()
}
