//! Fidelities, Bloch-sphere reduction, Berry phases and solid angles.
//!
//! Sign convention: `gamma = -Im log prod_j <n_j|n_{j+1}>`, which is the
//! continuum `i oint <n|dn>`. Only magnitudes are compared with reference
//! values, so the overall sign is a convention.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CVector;
use crate::model::{ModelKind, ModelParams};
use crate::propagate::{QuantumState, Trajectory};
use crate::spectral::{track_frames, uniform_grid, EigenFrame};
use crate::sweeps::SweepSpec;

/// Largest `1 - |<n(1)|n(0)>|^2` accepted as a closed loop.
pub const LOOP_CLOSURE_TOLERANCE: f64 = 1e-4;

/// Largest Euclidean gap between the ends of a Bloch loop.
pub const BLOCH_CLOSURE_TOLERANCE: f64 = 1e-3;

/// Minimum population of the two-level subspace for a Bloch reduction.
pub const SUBSPACE_POPULATION_FLOOR: f64 = 1e-6;

/// Default number of samples along a Berry loop.
pub const BERRY_SAMPLES: usize = 4001;

const REFERENCE_COMPONENT_FLOOR: f64 = 1e-12;

/// `|<target|state>|^2`.
pub fn fidelity(state: &QuantumState, target: &QuantumState) -> Result<f64> {
    if state.dim() != target.dim() {
        return Err(Error::DimensionMismatch { expected: target.dim(), found: state.dim() });
    }
    Ok(target.amplitudes.inner(&state.amplitudes).norm_sqr().min(1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochPoint {
    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn distance(&self, other: &BlochPoint) -> f64 {
        let d = [self.x - other.x, self.y - other.y, self.z - other.z];
        (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
    }

    pub const NORTH: BlochPoint = BlochPoint { x: 0.0, y: 0.0, z: 1.0 };
}

/// Pauli expectation values of the state restricted to `(up, down)` and
/// renormalized; `up` maps to the north pole.
pub fn bloch_reduce(state: &QuantumState, subspace: (usize, usize)) -> Result<BlochPoint> {
    let (up, down) = subspace;
    let dim = state.dim();
    if up >= dim || down >= dim || up == down {
        return Err(Error::InvalidParameter(format!("invalid subspace {subspace:?} for dimension {dim}")));
    }
    let a = state.amplitudes[up];
    let b = state.amplitudes[down];
    let population = a.norm_sqr() + b.norm_sqr();
    if population < SUBSPACE_POPULATION_FLOOR {
        return Err(Error::NegligibleSubspace(population));
    }
    let coherence = a.conj() * b / population;
    Ok(BlochPoint {
        x: 2.0 * coherence.re,
        y: 2.0 * coherence.im,
        z: (a.norm_sqr() - b.norm_sqr()) / population,
    })
}

/// Bloch loop of a trajectory together with the smallest subspace population.
pub fn bloch_loop(traj: &Trajectory, subspace: (usize, usize)) -> Result<(Vec<BlochPoint>, f64)> {
    let mut min_population = f64::INFINITY;
    let points = traj
        .states
        .iter()
        .map(|s| {
            min_population = min_population.min(s.population(subspace.0) + s.population(subspace.1));
            bloch_reduce(s, subspace)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((points, min_population))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BerryMethod {
    WilsonLoop,
    ConnectionIntegral,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BerryResult {
    /// Accumulated phase in the gauge regular at the loop start.
    pub gamma_unwrapped: f64,
    /// `gamma_unwrapped` reduced to `[0, 2 pi)`.
    pub gamma_mod2pi: f64,
    /// Principal value of the Wilson loop, in `(-pi, pi]`.
    pub wilson_principal: f64,
    /// Integral of the Berry connection, for cross-validation.
    pub connection_integral: f64,
    pub method: BerryMethod,
    pub loop_closed: bool,
    /// `1 - |<n_last|n_first>|^2`.
    pub closure_mismatch: f64,
    pub solid_angle: Option<f64>,
}

impl BerryResult {
    /// `|wilson - connection|`, compared modulo `2 pi`.
    pub fn method_delta(&self) -> f64 {
        wrap_to_pi(self.gamma_unwrapped - self.connection_integral).abs()
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_to_pi(angle: f64) -> f64 {
    let wrapped = (angle + PI).rem_euclid(TAU) - PI;
    if wrapped == -PI {
        PI
    } else {
        wrapped
    }
}

/// Berry phase of the followed level over a tracked, closed loop of frames.
///
/// The loop is closed with a final bracket onto the first frame, so the
/// Wilson value does not depend on the phase of any individual eigenvector.
pub fn berry_phase_wilson(frames: &[EigenFrame]) -> Result<BerryResult> {
    if frames.len() < 3 {
        return Err(Error::InsufficientData("a Berry loop needs at least three frames".into()));
    }
    let vectors: Vec<CVector> = frames.iter().map(EigenFrame::followed_vector).collect();
    let first = vectors[0];
    let last = *vectors.last().unwrap();
    let closure_mismatch = 1.0 - last.inner(&first).norm_sqr();
    if closure_mismatch > LOOP_CLOSURE_TOLERANCE {
        return Err(Error::OpenLoop { mismatch: closure_mismatch, tolerance: LOOP_CLOSURE_TOLERANCE });
    }

    let mut product = C64::new(1.0, 0.0);
    for w in vectors.windows(2) {
        product *= w[0].inner(&w[1]);
        product /= product.norm();
    }
    product *= last.inner(&first);
    let wilson_principal = -product.arg();

    let taus: Vec<f64> = frames.iter().map(|f| f.tau).collect();
    let reference = first.dominant_index();
    let regular = vectors.iter().all(|v| v[reference].norm() > REFERENCE_COMPONENT_FLOOR);
    let gauged: Vec<CVector> = if regular {
        vectors
            .iter()
            .map(|v| v.scale(v[reference].conj() / v[reference].norm()))
            .collect()
    } else {
        vectors.clone()
    };

    let closing = -gauged.last().unwrap().inner(&gauged[0]).arg();
    let gamma_unwrapped = if regular {
        -gauged.windows(2).map(|w| w[0].inner(&w[1]).arg()).sum::<f64>() + closing
    } else {
        wilson_principal
    };
    let connection_integral = connection_integral(&taus, &gauged) + closing;

    Ok(BerryResult {
        gamma_unwrapped,
        gamma_mod2pi: gamma_unwrapped.rem_euclid(TAU),
        wilson_principal,
        connection_integral,
        method: BerryMethod::WilsonLoop,
        loop_closed: true,
        closure_mismatch,
        solid_angle: None,
    })
}

/// `i int <n|dn/dtau> dtau = -int Im<n|dn/dtau> dtau`, central differences
/// and trapezoidal quadrature.
fn connection_integral(taus: &[f64], vectors: &[CVector]) -> f64 {
    let n = vectors.len();
    let connection: Vec<f64> = (0..n)
        .map(|j| {
            let (lo, hi) = (j.saturating_sub(1), (j + 1).min(n - 1));
            let derivative = (vectors[hi] - vectors[lo]).scale(C64::from(1.0 / (taus[hi] - taus[lo])));
            vectors[j].inner(&derivative).im
        })
        .collect();
    -taus
        .windows(2)
        .zip(connection.windows(2))
        .map(|(t, a)| 0.5 * (t[1] - t[0]) * (a[0] + a[1]))
        .sum::<f64>()
}

/// Signed solid angle (sr) enclosed by a closed loop on the unit sphere,
/// summed as spherical triangles fanned out from `reference`.
pub fn solid_angle(points: &[BlochPoint], reference: BlochPoint, closure_tolerance: f64) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::InsufficientData("empty Bloch loop".into()));
    }
    let gap = points[0].distance(points.last().unwrap());
    if gap > closure_tolerance {
        return Err(Error::OpenLoop { mismatch: gap, tolerance: closure_tolerance });
    }
    let r = unit(reference.as_array());
    let unit_points: Vec<[f64; 3]> = points.iter().map(|p| unit(p.as_array())).collect();
    let n = unit_points.len();
    Ok((0..n)
        .map(|j| triangle_excess(&r, &unit_points[j], &unit_points[(j + 1) % n]))
        .sum())
}

/// Signed area of the spherical triangle `(r, a, b)`.
fn triangle_excess(r: &[f64; 3], a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let cross = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
    let numerator = dot(r, &cross);
    let denominator = 1.0 + dot(r, a) + dot(r, b) + dot(a, b);
    if numerator == 0.0 && denominator <= 0.0 {
        return 0.0;
    }
    2.0 * numerator.atan2(denominator)
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn unit(v: [f64; 3]) -> [f64; 3] {
    let n = dot(&v, &v).sqrt();
    if n == 0.0 {
        return v;
    }
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Berry phase of the level that starts closest to bare state `initial_bare`,
/// over `n_samples` uniformly spaced frames of the chosen model.
pub fn berry_phase_of_model(
    model: ModelKind,
    params: &ModelParams,
    sweep: &SweepSpec,
    initial_bare: usize,
    n_samples: usize,
) -> Result<BerryResult> {
    let grid = uniform_grid(n_samples);
    let frames = track_frames(
        |tau| model.hamiltonian(tau, params, sweep),
        &grid,
        &CVector::basis(model.dim(), initial_bare),
    )?;
    berry_phase_wilson(&frames)
}

/// `max |H(1) - H(0)|` entrywise: how far the parameter loop is from closing.
pub fn h0_endpoint_mismatch(model: ModelKind, params: &ModelParams, sweep: &SweepSpec) -> f64 {
    (*model.hamiltonian(1.0, params, sweep).as_matrix() - *model.hamiltonian(0.0, params, sweep).as_matrix()).max_abs()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BerryEquivalence {
    pub three_level: BerryResult,
    pub effective: BerryResult,
    /// `|gamma_3 - gamma_2|` of the unwrapped values.
    pub difference: f64,
}

/// Berry phase of the level starting in |1>, in the three-level and the
/// effective two-level model with the same drive.
pub fn berry_equivalence_check(params: &ModelParams, sweep: &SweepSpec, n_samples: usize) -> Result<BerryEquivalence> {
    let three_level = berry_phase_of_model(ModelKind::ThreeLevel, params, sweep, ModelKind::ThreeLevel.level_1(), n_samples)?;
    let effective = berry_phase_of_model(ModelKind::Effective, params, sweep, ModelKind::Effective.level_1(), n_samples)?;
    Ok(BerryEquivalence {
        difference: (three_level.gamma_unwrapped - effective.gamma_unwrapped).abs(),
        three_level,
        effective,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::HermitianMatrix;
    use crate::spectral::eigen_frame;
    use proptest::prelude::*;

    fn state(amps: &[C64]) -> QuantumState {
        QuantumState::new(CVector::from_slice(amps).normalized(), 0.0).unwrap()
    }

    #[test]
    fn fidelity_basics() {
        let one = QuantumState::bare(3, 0);
        let t = QuantumState::bare(3, 2);
        assert_eq!(fidelity(&one, &one).unwrap(), 1.0);
        assert_eq!(fidelity(&one, &t).unwrap(), 0.0);
        assert!(fidelity(&one, &QuantumState::bare(2, 0)).is_err());
    }

    #[test]
    fn bloch_conventions() {
        let north = bloch_reduce(&QuantumState::bare(3, 0), (0, 2)).unwrap();
        assert_eq!(north, BlochPoint { x: 0.0, y: 0.0, z: 1.0 });
        let s = 0.5f64.sqrt();
        let p = bloch_reduce(&state(&[C64::from(s), C64::from(0.0), C64::from(s)]), (0, 2)).unwrap();
        assert!(p.distance(&BlochPoint { x: 1.0, y: 0.0, z: 0.0 }) < 1e-15);
        let p = bloch_reduce(&state(&[C64::from(s), C64::new(0.0, s)]), (0, 1)).unwrap();
        assert!(p.distance(&BlochPoint { x: 0.0, y: 1.0, z: 0.0 }) < 1e-15);
        assert!(matches!(
            bloch_reduce(&QuantumState::bare(3, 1), (0, 2)),
            Err(Error::NegligibleSubspace(_))
        ));
    }

    #[test]
    fn equatorial_circle_is_a_hemisphere() {
        let loop_: Vec<BlochPoint> = (0..=1000)
            .map(|i| {
                let phi = TAU * i as f64 / 1000.0;
                BlochPoint { x: phi.cos(), y: phi.sin(), z: 0.0 }
            })
            .collect();
        let omega = solid_angle(&loop_, BlochPoint::NORTH, BLOCH_CLOSURE_TOLERANCE).unwrap();
        assert!((omega.abs() - TAU).abs() < 1e-3);
    }

    #[test]
    fn degenerate_loop_has_no_area() {
        let p = BlochPoint { x: 0.6, y: 0.0, z: 0.8 };
        assert_eq!(solid_angle(&[p; 10], BlochPoint::NORTH, BLOCH_CLOSURE_TOLERANCE).unwrap(), 0.0);
    }

    #[test]
    fn open_bloch_loop_rejected() {
        let a = BlochPoint { x: 1.0, y: 0.0, z: 0.0 };
        let b = BlochPoint { x: 0.0, y: 1.0, z: 0.0 };
        assert!(matches!(solid_angle(&[a, b], BlochPoint::NORTH, 1e-3), Err(Error::OpenLoop { .. })));
    }

    fn equator_loop_frames(n: usize) -> Vec<EigenFrame> {
        // Field in the x-y plane rotating once: the eigenvector's Bloch vector
        // traces the equator, enclosing 2 pi.
        let grid = uniform_grid(n);
        let h = |tau: f64| {
            HermitianMatrix::from_upper(2, |i, j| if i == j { C64::from(0.0) } else { C64::from_polar(1.0, TAU * tau) })
        };
        track_frames(h, &grid, &CVector::basis(2, 0)).unwrap()
    }

    #[test]
    fn equator_loop_berry_phase_is_pi() {
        let result = berry_phase_wilson(&equator_loop_frames(2001)).unwrap();
        assert!((result.wilson_principal.abs() - PI).abs() < 1e-3, "{result:?}");
        assert!((result.gamma_unwrapped.abs() - PI).abs() < 1e-3);
    }

    #[test]
    fn constant_loop_has_zero_phase() {
        let h = HermitianMatrix::diagonal(&[0.0, 1.0, 2.0]);
        let frames = track_frames(|_| h, &uniform_grid(50), &CVector::basis(3, 0)).unwrap();
        let r = berry_phase_wilson(&frames).unwrap();
        assert_eq!(r.gamma_unwrapped, 0.0);
        assert_eq!(r.wilson_principal.abs(), 0.0);
    }

    #[test]
    fn open_parameter_loop_rejected() {
        let h = |tau: f64| HermitianMatrix::from_upper(2, |i, j| match (i, j) {
            (0, 0) => C64::from(-1.0),
            (1, 1) => C64::from(1.0),
            _ => C64::from(2.0 * tau),
        });
        let frames = track_frames(h, &uniform_grid(100), &CVector::basis(2, 0)).unwrap();
        assert!(matches!(berry_phase_wilson(&frames), Err(Error::OpenLoop { .. })));
    }

    #[test]
    fn wrap_to_pi_range() {
        assert_eq!(wrap_to_pi(PI), PI);
        assert_eq!(wrap_to_pi(-PI), PI);
        assert!((wrap_to_pi(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn wilson_loop_is_gauge_invariant(seed_phases in prop::collection::vec(0.0f64..TAU, 64)) {
            let sweep = SweepSpec::polynomial(50.0).with_k(1);
            let grid = uniform_grid(801);
            let frames: Vec<EigenFrame> = grid
                .iter()
                .map(|&tau| {
                    let mut f = eigen_frame(&crate::model::build_h_eff(tau, &ModelParams::PAPER, &sweep), tau);
                    f.followed_index = 0;
                    f
                })
                .collect();
            let base = berry_phase_wilson(&frames).unwrap();
            let shuffled: Vec<EigenFrame> = frames
                .iter()
                .enumerate()
                .map(|(j, f)| {
                    let mut g = *f;
                    g.rephase(0, C64::from_polar(1.0, seed_phases[j % 64] * (1.0 + j as f64 * 0.37)));
                    g
                })
                .collect();
            let other = berry_phase_wilson(&shuffled).unwrap();
            prop_assert!(wrap_to_pi(base.wilson_principal - other.wilson_principal).abs() < 1e-10);
            prop_assert!((base.gamma_unwrapped - other.gamma_unwrapped).abs() < 1e-10);
        }
    }
}
