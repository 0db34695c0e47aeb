//! Quick invariant checks run by the `check` command.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::cd::{cd_hamiltonian, DriveAssembly};
use crate::error::Result;
use crate::experiments::SimulationConfig;
use crate::linalg::{eigh, expm_minus_i, CMatrix, CVector, HermitianMatrix};
use crate::model::{ModelKind, ModelParams};
use crate::observables::berry_phase_wilson;
use crate::spectral::{eigen_frame, track_frames, uniform_grid};
use crate::sweeps::SweepSpec;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl CheckOutcome {
    fn at_most(name: &'static str, value: f64, threshold: f64) -> Self {
        Self { name, value, threshold, passed: value <= threshold }
    }
}

fn probe_drives() -> Vec<DriveAssembly> {
    let mut drives = Vec::new();
    for model in [ModelKind::ThreeLevel, ModelKind::Effective] {
        for sweep in [
            SweepSpec::polynomial(50.0),
            SweepSpec::polynomial(50.0).with_k(1),
            SweepSpec::polynomial(50.0).with_k(2),
            SweepSpec::polynomial(50.0).with_sign_mode(true),
        ] {
            drives.push(DriveAssembly::new(model, ModelParams::PAPER, sweep, true));
        }
    }
    drives
}

fn probe_taus() -> Vec<f64> {
    // Avoids tau = 0.5, where the sign-switched coupling vanishes.
    (0..40).map(|i| (i as f64 + 0.37) / 40.0).collect()
}

fn hermiticity() -> Result<CheckOutcome> {
    let mut worst: f64 = 0.0;
    for drive in probe_drives() {
        for tau in probe_taus() {
            for h in [drive.h0_at(tau), drive.cd_at(tau)?] {
                let m = h.as_matrix();
                worst = worst.max(m.hermiticity_residual() / m.max_abs().max(1e-300));
            }
        }
    }
    Ok(CheckOutcome::at_most("hermiticity (relative)", worst, 1e-12))
}

fn eigen_reconstruction() -> CheckOutcome {
    let mut worst: f64 = 0.0;
    for drive in probe_drives() {
        for tau in probe_taus() {
            let h = drive.h0_at(tau);
            let e = eigh(&h);
            let lambda = CMatrix::from_fn(h.dim(), |i, j| if i == j { C64::from(e.values()[i]) } else { C64::from(0.0) });
            let rebuilt = e.vectors * lambda * e.vectors.adjoint();
            worst = worst.max((rebuilt - *h.as_matrix()).max_abs() / h.as_matrix().max_abs());
        }
    }
    CheckOutcome::at_most("eigendecomposition residual (relative)", worst, 1e-12)
}

fn step_unitarity() -> Result<CheckOutcome> {
    let mut worst: f64 = 0.0;
    for drive in probe_drives() {
        for tau in probe_taus() {
            let u = expm_minus_i(&drive.total_hamiltonian(tau)?, 0.025);
            worst = worst.max(u.unitarity_residual());
        }
    }
    Ok(CheckOutcome::at_most("step unitarity", worst, 1e-12))
}

fn cd_run() -> Result<Vec<CheckOutcome>> {
    let traj = SimulationConfig::default().run()?;
    let worst_following = traj.followed_overlap.iter().fold(1.0f64, |m, &o| m.min(o));
    Ok(vec![
        CheckOutcome::at_most("norm drift over a CD cycle", traj.max_norm_drift, 1e-10),
        CheckOutcome::at_most("CD diabatic leakage (1 - min overlap)", 1.0 - worst_following, 1e-4),
    ])
}

fn landau_zener() -> Result<CheckOutcome> {
    let mut worst: f64 = 0.0;
    for (eps, eps_dot, delta) in [(0.0, 1.0, 0.5), (1.3, -2.0, 0.2), (-3.0, 7.5, 1.1)] {
        let h0 = HermitianMatrix::from_upper(2, |i, j| match (i, j) {
            (0, 0) => C64::from(eps / 2.0),
            (1, 1) => C64::from(-eps / 2.0),
            _ => C64::from(delta),
        });
        let dh = HermitianMatrix::diagonal(&[eps_dot / 2.0, -eps_dot / 2.0]);
        let hcd = cd_hamiltonian(&eigen_frame(&h0, 0.0), &dh)?;
        let coef = -delta * eps_dot / (eps * eps + 4.0 * delta * delta);
        let expected = CMatrix::from_fn(2, |i, j| match (i, j) {
            (0, 1) => C64::new(0.0, -coef),
            (1, 0) => C64::new(0.0, coef),
            _ => C64::from(0.0),
        });
        worst = worst.max((*hcd.as_matrix() - expected).max_abs());
    }
    Ok(CheckOutcome::at_most("two-level CD closed form", worst, 1e-12))
}

fn wilson_gauge_invariance() -> Result<CheckOutcome> {
    let sweep = SweepSpec::polynomial(50.0).with_k(1);
    let params = ModelParams::PAPER;
    let frames = track_frames(
        |tau| ModelKind::Effective.hamiltonian(tau, &params, &sweep),
        &uniform_grid(1001),
        &CVector::basis(2, 0),
    )?;
    let base = berry_phase_wilson(&frames)?;
    let rephased: Vec<_> = frames
        .iter()
        .enumerate()
        .map(|(j, f)| {
            let mut g = *f;
            for n in 0..g.dim() {
                // Deterministic, equidistributed phases.
                let theta = std::f64::consts::TAU * ((j * 3 + n) as f64 * 0.618_033_988_749_895).fract();
                g.rephase(n, C64::from_polar(1.0, theta));
            }
            g
        })
        .collect();
    let other = berry_phase_wilson(&rephased)?;
    let change = crate::observables::wrap_to_pi(base.wilson_principal - other.wilson_principal).abs();
    Ok(CheckOutcome::at_most("Wilson loop gauge invariance", change, 1e-10))
}

/// Runs all checks; numerical failures inside a check propagate.
pub fn run_all() -> Result<Vec<CheckOutcome>> {
    let mut out = vec![hermiticity()?, eigen_reconstruction(), step_unitarity()?, landau_zener()?, wilson_gauge_invariance()?];
    out.extend(cd_run()?);
    Ok(out)
}
