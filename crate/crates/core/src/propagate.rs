//! Unitary time stepping of `i d/dt psi = H(t) psi` on a `tau` grid.
//!
//! Each step is a product of exponentials of Hermitian matrices, computed
//! through their spectral decomposition, so the norm is conserved up to
//! rounding. Norm drift is measured and reported, never renormalized away.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cd::DriveAssembly;
use crate::error::{Error, Result};
use crate::linalg::{expm_minus_i, CVector, HermitianMatrix};
use crate::spectral::{best_overlap_level, eigen_frame, local_gauge, track_frames, validate_grid};

/// Largest tolerated one-step change of the state norm.
pub const STEP_NORM_TOLERANCE: f64 = 1e-8;

/// Tolerance on the norm of a state handed to the propagator.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-10;

/// A time-dependent Hamiltonian on the rescaled interval `tau in [0, 1]`.
pub trait Drive {
    fn dim(&self) -> usize;

    /// Physical duration `t_f` (ns) of one pass over `[0, 1]`.
    fn duration(&self) -> f64;

    /// Hamiltonian that generates the dynamics (ns^-1).
    fn hamiltonian(&self, tau: f64) -> Result<HermitianMatrix>;

    /// Hamiltonian whose eigenstates define the followed level.
    fn reference(&self, tau: f64) -> HermitianMatrix;

    /// Stable text identifying the drive, hashed into run fingerprints.
    fn describe(&self) -> String {
        String::from("anonymous drive")
    }
}

impl Drive for DriveAssembly {
    fn dim(&self) -> usize {
        DriveAssembly::dim(self)
    }

    fn duration(&self) -> f64 {
        self.t_f()
    }

    fn hamiltonian(&self, tau: f64) -> Result<HermitianMatrix> {
        self.total_hamiltonian(tau)
    }

    fn reference(&self, tau: f64) -> HermitianMatrix {
        self.h0_at(tau)
    }

    fn describe(&self) -> String {
        serde_json::to_string(self).expect("drive assembly serializes")
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Fourth-order commutator-free exponential: two Hermitian exponentials
    /// per step, Hamiltonian sampled at the Gauss-Legendre nodes.
    #[default]
    CommutatorFree4,
    /// `psi <- exp(-i h H(t + h/2)) psi`, second order.
    ExponentialMidpoint,
}

/// Normalized state vector at time `t` (ns).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantumState {
    pub amplitudes: CVector,
    pub t: f64,
}

impl QuantumState {
    pub fn new(amplitudes: CVector, t: f64) -> Result<Self> {
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::InvalidParameter(format!("state norm {norm} is not 1")));
        }
        Ok(Self { amplitudes, t })
    }

    pub fn bare(dim: usize, index: usize) -> Self {
        Self { amplitudes: CVector::basis(dim, index), t: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.dim()
    }

    pub fn population(&self, index: usize) -> f64 {
        self.amplitudes[index].norm_sqr()
    }
}

/// How the initial state of a run is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "bare_index")]
pub enum InitialCondition {
    /// A bare basis state.
    Bare(usize),
    /// The eigenstate of `H0(0)` with the largest weight on this bare state.
    Eigenstate(usize),
}

impl Default for InitialCondition {
    fn default() -> Self {
        InitialCondition::Bare(0)
    }
}

impl InitialCondition {
    pub fn resolve<D: Drive + ?Sized>(&self, drive: &D) -> Result<QuantumState> {
        let dim = drive.dim();
        let index = match *self {
            InitialCondition::Bare(i) | InitialCondition::Eigenstate(i) => i,
        };
        if index >= dim {
            return Err(Error::InvalidParameter(format!("bare index {index} out of range for dimension {dim}")));
        }
        match *self {
            InitialCondition::Bare(i) => Ok(QuantumState::bare(dim, i)),
            InitialCondition::Eigenstate(i) => {
                let frame = eigen_frame(&drive.reference(0.0), 0.0);
                let level = best_overlap_level(&frame, &CVector::basis(dim, i));
                Ok(QuantumState { amplitudes: local_gauge(&frame.vector(level)), t: 0.0 })
            }
        }
    }
}

/// Sampled evolution over one or more protocol cycles.
#[derive(Clone, Debug)]
pub struct Trajectory {
    /// Rescaled time within the current cycle.
    pub grid: Vec<f64>,
    pub states: Vec<QuantumState>,
    /// `populations[b][j]`: population of bare state `b` at sample `j`.
    pub populations: Vec<Vec<f64>>,
    /// `|<n_f(tau_j)|psi_j>|^2` for the followed instantaneous level of `H0`.
    pub followed_overlap: Vec<f64>,
    pub cycle_index: Vec<usize>,
    /// Sample index at which each cycle starts.
    pub cycle_starts: Vec<usize>,
    /// Largest `| ||psi|| - 1 |` seen along the run.
    pub max_norm_drift: f64,
    pub fingerprint: String,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, QuantumState::dim)
    }

    pub fn final_state(&self) -> Option<&QuantumState> {
        self.states.last()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.states.iter().map(|s| s.t)
    }

    /// Index of the sample closest to `tau` within cycle `cycle`.
    pub fn sample_at(&self, cycle: usize, tau: f64) -> Option<usize> {
        let start = *self.cycle_starts.get(cycle)?;
        let end = self.cycle_starts.get(cycle + 1).map_or(self.len(), |&s| s + 1);
        (start..end).min_by(|&a, &b| (self.grid[a] - tau).abs().total_cmp(&(self.grid[b] - tau).abs()))
    }
}

/// Advances `psi` across `[tau0, tau1]`.
fn step<D: Drive + ?Sized>(
    drive: &D,
    integrator: Integrator,
    psi: &CVector,
    tau0: f64,
    tau1: f64,
) -> Result<CVector> {
    let dtau = tau1 - tau0;
    let dt = dtau * drive.duration();
    match integrator {
        Integrator::ExponentialMidpoint => {
            let h = drive.hamiltonian(tau0 + 0.5 * dtau)?;
            Ok(expm_minus_i(&h, dt).mul_vec(psi))
        }
        Integrator::CommutatorFree4 => {
            let offset = 3f64.sqrt() / 6.0;
            let h1 = drive.hamiltonian(tau0 + (0.5 - offset) * dtau)?;
            let h2 = drive.hamiltonian(tau0 + (0.5 + offset) * dtau)?;
            let (a1, a2) = ((3.0 - 2.0 * 3f64.sqrt()) / 12.0, (3.0 + 2.0 * 3f64.sqrt()) / 12.0);
            let first = h1.scale(a2) + h2.scale(a1);
            let second = h1.scale(a1) + h2.scale(a2);
            let half = expm_minus_i(&first, dt).mul_vec(psi);
            Ok(expm_minus_i(&second, dt).mul_vec(&half))
        }
    }
}

pub fn propagate<D: Drive + ?Sized>(drive: &D, initial: &QuantumState, grid: &[f64]) -> Result<Trajectory> {
    repeat_cycles_with(drive, initial, grid, 1, Integrator::default())
}

pub fn propagate_with<D: Drive + ?Sized>(
    drive: &D,
    initial: &QuantumState,
    grid: &[f64],
    integrator: Integrator,
) -> Result<Trajectory> {
    repeat_cycles_with(drive, initial, grid, 1, integrator)
}

pub fn repeat_cycles<D: Drive + ?Sized>(
    drive: &D,
    initial: &QuantumState,
    grid: &[f64],
    n_cycles: usize,
) -> Result<Trajectory> {
    repeat_cycles_with(drive, initial, grid, n_cycles, Integrator::default())
}

/// Runs `n_cycles` back-to-back passes over `grid`, each starting from the
/// final state of the previous one. Shared boundary samples appear once.
pub fn repeat_cycles_with<D: Drive + ?Sized>(
    drive: &D,
    initial: &QuantumState,
    grid: &[f64],
    n_cycles: usize,
    integrator: Integrator,
) -> Result<Trajectory> {
    if n_cycles == 0 {
        return Err(Error::InvalidParameter("n_cycles must be at least 1".into()));
    }
    validate_grid(grid)?;
    if grid.len() < 2 {
        return Err(Error::InsufficientData("propagation needs at least two grid points".into()));
    }
    let dim = drive.dim();
    if initial.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: initial.dim() });
    }
    QuantumState::new(initial.amplitudes, initial.t)?;

    let frames = track_frames(|tau| drive.reference(tau), grid, &initial.amplitudes)?;
    let t_f = drive.duration();
    let capacity = n_cycles * (grid.len() - 1) + 1;

    let mut traj = Trajectory {
        grid: Vec::with_capacity(capacity),
        states: Vec::with_capacity(capacity),
        populations: vec![Vec::with_capacity(capacity); dim],
        followed_overlap: Vec::with_capacity(capacity),
        cycle_index: Vec::with_capacity(capacity),
        cycle_starts: Vec::with_capacity(n_cycles),
        max_norm_drift: (initial.amplitudes.norm() - 1.0).abs(),
        fingerprint: fingerprint(drive, initial, grid, n_cycles, integrator),
    };
    let record = |traj: &mut Trajectory, j: usize, cycle: usize, psi: CVector, t: f64| {
        traj.grid.push(grid[j]);
        for (b, pops) in traj.populations.iter_mut().enumerate() {
            pops.push(psi[b].norm_sqr());
        }
        traj.followed_overlap.push(frames[j].followed_vector().inner(&psi).norm_sqr().min(1.0));
        traj.cycle_index.push(cycle);
        traj.states.push(QuantumState { amplitudes: psi, t });
    };

    let mut psi = initial.amplitudes;
    let t0 = initial.t;
    record(&mut traj, 0, 0, psi, t0);
    for cycle in 0..n_cycles {
        traj.cycle_starts.push(traj.len() - 1);
        let cycle_t0 = t0 + cycle as f64 * t_f;
        for j in 0..grid.len() - 1 {
            let before = psi.norm();
            let next = step(drive, integrator, &psi, grid[j], grid[j + 1])?;
            let after = next.norm();
            let t = cycle_t0 + grid[j + 1] * t_f;
            let drift = (after - before).abs();
            if !(drift <= STEP_NORM_TOLERANCE) {
                return Err(Error::StepTooCoarse { t, drift });
            }
            traj.max_norm_drift = traj.max_norm_drift.max((after - 1.0).abs());
            psi = next;
            record(&mut traj, j + 1, cycle, psi, t);
        }
    }
    Ok(traj)
}

fn fingerprint<D: Drive + ?Sized>(
    drive: &D,
    initial: &QuantumState,
    grid: &[f64],
    n_cycles: usize,
    integrator: Integrator,
) -> String {
    let mut hasher = Sha256::new();
    hasher.update(drive.describe().as_bytes());
    hasher.update(format!("{integrator:?}/{n_cycles}/{}", initial.t).as_bytes());
    for z in initial.amplitudes.iter() {
        hasher.update(z.re.to_le_bytes());
        hasher.update(z.im.to_le_bytes());
    }
    for tau in grid {
        hasher.update(tau.to_le_bytes());
    }
    hex::encode(&hasher.finalize()[..16])
}

/// `|<target|state>|^2`.
pub fn overlap_probability(a: &CVector, b: &CVector) -> f64 {
    a.inner(b).norm_sqr()
}
