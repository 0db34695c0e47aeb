//! Counterdiabatic (transitionless) driving term.
//!
//! For `H0(t) = sum_n E_n |n><n|` the auxiliary term
//!
//! ```text
//! H_CD = i sum_{m != n} |m><m| dH0/dt |n><n| / (E_n - E_m)
//! ```
//!
//! cancels the non-adiabatic couplings, so `H0 + H_CD` transports every
//! instantaneous eigenstate of `H0` exactly.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{CMatrix, HermitianMatrix};
use crate::model::{ModelKind, ModelParams};
use crate::spectral::{eigen_frame, EigenFrame};
use crate::sweeps::SweepSpec;

/// Builds `H_CD` from an eigenframe of `H0` and `dH0/dt` (ns^-2).
pub fn cd_hamiltonian(frame: &EigenFrame, dh0_dt: &HermitianMatrix) -> Result<HermitianMatrix> {
    frame.check_gaps()?;
    let dim = frame.dim();
    if dh0_dt.is_zero() {
        return Ok(HermitianMatrix::zeros(dim));
    }
    let v = frame.eigenvectors;
    let energies = frame.eigenvalues();
    let coupling = v.adjoint() * *dh0_dt.as_matrix() * v;
    let generator = CMatrix::from_fn(dim, |m, n| {
        if m == n {
            C64::from(0.0)
        } else {
            C64::i() * coupling[(m, n)] / (energies[n] - energies[m])
        }
    });
    Ok(HermitianMatrix::from_matrix_upper(&(v * generator * v.adjoint())))
}

/// A model plus drive, optionally with the counterdiabatic term switched on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveAssembly {
    pub model: ModelKind,
    pub params: ModelParams,
    pub sweep: SweepSpec,
    pub cd_enabled: bool,
}

impl DriveAssembly {
    pub fn new(model: ModelKind, params: ModelParams, sweep: SweepSpec, cd_enabled: bool) -> Self {
        if cd_enabled && sweep.has_kink() {
            log::warn!(
                "counterdiabatic driving with the arctan sweep: dH0/dt jumps at tau = 0.5, \
                 the left limit is used there"
            );
        }
        Self { model, params, sweep, cd_enabled }
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn t_f(&self) -> f64 {
        self.sweep.t_f
    }

    pub fn h0_at(&self, tau: f64) -> HermitianMatrix {
        self.model.hamiltonian(tau, &self.params, &self.sweep)
    }

    /// `dH0/dt = (1 / t_f) dH0/dtau`.
    pub fn dh0_dt_at(&self, tau: f64) -> HermitianMatrix {
        self.model
            .hamiltonian_tau_derivative(tau, &self.params, &self.sweep)
            .scale(1.0 / self.sweep.t_f)
    }

    pub fn cd_at(&self, tau: f64) -> Result<HermitianMatrix> {
        let frame = eigen_frame(&self.h0_at(tau), tau);
        cd_hamiltonian(&frame, &self.dh0_dt_at(tau))
    }

    /// `H0(tau)`, plus `H_CD(tau)` when enabled.
    pub fn total_hamiltonian(&self, tau: f64) -> Result<HermitianMatrix> {
        let h0 = self.h0_at(tau);
        if !self.cd_enabled {
            return Ok(h0);
        }
        let frame = eigen_frame(&h0, tau);
        Ok(h0 + cd_hamiltonian(&frame, &self.dh0_dt_at(tau))?)
    }

    /// Frobenius norm of `H_CD` on a grid, for pulse-intensity diagnostics.
    pub fn cd_norm_profile(&self, grid: &[f64]) -> Result<Vec<(f64, f64)>> {
        grid.iter()
            .map(|&tau| Ok((tau, self.cd_at(tau)?.as_matrix().frobenius())))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::linalg::CVector;
    use crate::sweeps::SweepProfile;
    use proptest::prelude::*;

    fn sigma(axis: usize) -> CMatrix {
        let z = C64::from(0.0);
        let one = C64::from(1.0);
        let i = C64::i();
        match axis {
            0 => CMatrix::from_fn(2, |a, b| if a != b { one } else { z }),
            1 => CMatrix::from_fn(2, |a, b| match (a, b) {
                (0, 1) => -i,
                (1, 0) => i,
                _ => z,
            }),
            _ => CMatrix::from_fn(2, |a, b| match (a, b) {
                (0, 0) => one,
                (1, 1) => -one,
                _ => z,
            }),
        }
    }

    #[test]
    fn static_hamiltonian_has_no_cd_term() {
        let frame = eigen_frame(&HermitianMatrix::diagonal(&[0.0, 1.0, 3.0]), 0.0);
        let hcd = cd_hamiltonian(&frame, &HermitianMatrix::zeros(3)).unwrap();
        assert!(hcd.is_zero());
    }

    #[test]
    fn degenerate_frame_rejected() {
        let frame = eigen_frame(&HermitianMatrix::diagonal(&[1.0, 1.0]), 0.0);
        let dh = HermitianMatrix::diagonal(&[1.0, 0.0]);
        assert!(matches!(cd_hamiltonian(&frame, &dh), Err(Error::DegenerateGap { .. })));
    }

    proptest! {
        // Two-level sweep H0 = (eps/2) sigma_z + delta sigma_x. The eigenbasis
        // rotates about y by theta = atan2(2 delta, eps), so
        // H_CD = (theta_dot / 2) sigma_y = -delta eps_dot / (eps^2 + 4 delta^2) sigma_y.
        #[test]
        fn landau_zener_closed_form(eps in -5.0f64..5.0, eps_dot in -10.0f64..10.0, delta in 0.05f64..2.0) {
            let h0 = HermitianMatrix::from_matrix_upper(
                &(sigma(2).scale(C64::from(eps / 2.0)) + sigma(0).scale(C64::from(delta))),
            );
            let dh = HermitianMatrix::from_matrix_upper(&sigma(2).scale(C64::from(eps_dot / 2.0)));
            let hcd = cd_hamiltonian(&eigen_frame(&h0, 0.0), &dh).unwrap();
            let coef = -delta * eps_dot / (eps * eps + 4.0 * delta * delta);
            let expected = sigma(1).scale(C64::from(coef));
            prop_assert!((*hcd.as_matrix() - expected).max_abs() < 1e-12 * (1.0 + coef.abs()));
        }

        #[test]
        fn gauge_independent_and_traceless_in_eigenbasis(
            tau in 0.0f64..=1.0, phases in prop::collection::vec(0.0f64..6.3, 3), k in 0i64..=2,
        ) {
            let assembly = DriveAssembly::new(
                ModelKind::ThreeLevel, ModelParams::PAPER, SweepSpec::polynomial(50.0).with_k(k), true,
            );
            let frame = eigen_frame(&assembly.h0_at(tau), tau);
            let dh = assembly.dh0_dt_at(tau);
            let hcd = cd_hamiltonian(&frame, &dh).unwrap();
            let mut rephased = frame;
            for (n, &theta) in phases.iter().enumerate() {
                rephased.rephase(n, C64::from_polar(1.0, theta));
            }
            let again = cd_hamiltonian(&rephased, &dh).unwrap();
            prop_assert!((*hcd.as_matrix() - *again.as_matrix()).max_abs() < 1e-12);
            prop_assert!(hcd.as_matrix().hermiticity_residual() <= 1e-12 * hcd.as_matrix().max_abs());
            let norm = hcd.as_matrix().frobenius();
            for n in 0..3 {
                let v: CVector = frame.vector(n);
                prop_assert!(hcd.braket(&v, &v).norm() <= 1e-10 * norm.max(1e-300));
            }
        }

        #[test]
        fn cd_term_scales_inversely_with_duration(tau in 0.0f64..=1.0) {
            let short = DriveAssembly::new(ModelKind::ThreeLevel, ModelParams::PAPER, SweepSpec::polynomial(50.0), true);
            let long = DriveAssembly { sweep: short.sweep.with_t_f(100.0), ..short };
            let a = short.cd_at(tau).unwrap();
            let b = long.cd_at(tau).unwrap();
            prop_assert!((*a.as_matrix() - b.as_matrix().scale(C64::from(2.0))).max_abs() < 1e-13 * a.as_matrix().max_abs().max(1e-300));
        }
    }

    #[test]
    fn tau_derivative_matches_finite_difference() {
        for (model, sweep) in [
            (ModelKind::ThreeLevel, SweepSpec::polynomial(50.0).with_k(1)),
            (ModelKind::Effective, SweepSpec::polynomial(50.0).with_k(2)),
            (ModelKind::Effective, SweepSpec::polynomial(50.0).with_sign_mode(true)),
            (ModelKind::ThreeLevel, SweepSpec { k: 1, phase_target: crate::sweeps::PhaseTarget::Omega1TAndST, ..SweepSpec::default() }),
        ] {
            let a = DriveAssembly::new(model, ModelParams::PAPER, sweep, true);
            for tau in [0.1, 0.3, 0.62, 0.9] {
                let h = 1e-6;
                let fd = (*a.h0_at(tau + h).as_matrix() - *a.h0_at(tau - h).as_matrix())
                    .scale(C64::from(1.0 / (2.0 * h * sweep.t_f)));
                let exact = *a.dh0_dt_at(tau).as_matrix();
                assert!((fd - exact).max_abs() < 1e-6 * exact.max_abs().max(1.0));
            }
        }
    }

    #[test]
    fn total_hamiltonian_switch() {
        let sweep = SweepSpec::polynomial(50.0).with_k(1);
        let off = DriveAssembly::new(ModelKind::ThreeLevel, ModelParams::PAPER, sweep, false);
        assert_eq!(off.total_hamiltonian(0.3).unwrap(), crate::model::build_h0(0.3, &ModelParams::PAPER, &sweep));

        let flat = SweepSpec {
            profile: SweepProfile::Polynomial { coefficients: [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -10.0] },
            ..SweepSpec::default()
        };
        let on = DriveAssembly::new(ModelKind::ThreeLevel, ModelParams::PAPER, flat, true);
        assert_eq!(on.total_hamiltonian(0.3).unwrap(), on.h0_at(0.3));
    }
}
