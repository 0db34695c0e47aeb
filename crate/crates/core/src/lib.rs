//! Counterdiabatic cyclic state transfer in a driven three-level system.
//!
//! The crate builds the three-level Hamiltonian and its effective two-level
//! reduction, adds the counterdiabatic correction, propagates the
//! Schrödinger equation, and measures fidelities, Bloch-sphere loops and
//! Berry phases.

pub mod cd;
pub mod error;
pub mod experiments;
pub mod io;
pub mod linalg;
pub mod model;
pub mod observables;
pub mod propagate;
pub mod selfcheck;
pub mod spectral;
pub mod sweeps;

pub use cd::{cd_hamiltonian, DriveAssembly};
pub use error::{Error, Result};
pub use experiments::{FitResult, RunSettings, ScanRecord, ScanResult, SimulationConfig, VScanConfig};
pub use linalg::{CMatrix, CVector, HermitianMatrix};
pub use model::{derive_couplings, ModelKind, ModelParams, RawFourLevelParams};
pub use observables::{BerryMethod, BerryResult, BlochPoint};
pub use propagate::{InitialCondition, Integrator, QuantumState, Trajectory};
pub use spectral::EigenFrame;
pub use sweeps::{PhaseTarget, SweepProfile, SweepSpec};
