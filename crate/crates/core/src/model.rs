//! Three-level Hamiltonian in the bare basis {|1>, |S>, |T>}, the effective
//! two-level Hamiltonian on {|1>, |T>}, and coupling constants derived from
//! the raw four-level parameters.
//!
//! Units: energies in ns^-1, time in ns, hbar = 1.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::HermitianMatrix;
use crate::sweeps::{PhaseTarget, SweepSpec};

/// Bare-state indices in the three-level basis.
pub const LEVEL_1: usize = 0;
pub const LEVEL_S: usize = 1;
pub const LEVEL_T: usize = 2;

/// Bare-state indices in the effective two-level basis.
pub const EFF_LEVEL_1: usize = 0;
pub const EFF_LEVEL_T: usize = 1;

const DENOMINATOR_TOLERANCE: f64 = 1e-12;

/// Constant part of the three-level Hamiltonian.
///
/// `omega_1t_abs` is a magnitude; the sign and phase of the 1-T coupling come
/// from the sweep's modulation law, with `Omega_1T = -omega_1t_abs * m(tau)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    #[serde(rename = "eps_S")]
    pub eps_s: f64,
    #[serde(rename = "eps_T")]
    pub eps_t: f64,
    #[serde(rename = "omega_1S")]
    pub omega_1s: f64,
    #[serde(rename = "omega_ST")]
    pub omega_st: f64,
    #[serde(rename = "omega_1T_abs")]
    pub omega_1t_abs: f64,
}

impl ModelParams {
    /// Values used throughout the reference study.
    pub const PAPER: ModelParams = ModelParams {
        eps_s: 0.00447,
        eps_t: -4.74001,
        omega_1s: 0.11196,
        omega_st: 0.01158,
        omega_1t_abs: 0.0432,
    };

    pub fn validate(&self) -> Result<()> {
        let all = [self.eps_s, self.eps_t, self.omega_1s, self.omega_st, self.omega_1t_abs];
        if !all.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidParameter("model parameters must be finite".into()));
        }
        if self.omega_1t_abs < 0.0 {
            return Err(Error::InvalidParameter("omega_1T_abs must be nonnegative".into()));
        }
        Ok(())
    }

    /// Parameters from the raw four-level description, with the sign of
    /// `Omega_1T` folded into the bare-state gauge.
    ///
    /// When `-beta Omega_p / 2` is positive the state |T> is redefined as
    /// `-|T>`, which flips the sign of both couplings into |T>. This keeps the
    /// `-omega_1t_abs` convention of [`build_h0`] without changing any
    /// population.
    pub fn from_raw(raw: &RawFourLevelParams) -> Result<Self> {
        let derived = derive_couplings(raw)?;
        let mut params = derived.params;
        if derived.omega_1t_sign > 0.0 {
            params.omega_st = -params.omega_st;
        }
        Ok(params)
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::PAPER
    }
}

/// Raw parameters of the four-level system before adiabatic elimination.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawFourLevelParams {
    pub delta_c: f64,
    #[serde(rename = "Delta_so")]
    pub delta_so: f64,
    #[serde(rename = "Omega_c")]
    pub omega_c: f64,
    #[serde(rename = "Omega_p")]
    pub omega_p: f64,
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DerivedCouplings {
    pub params: ModelParams,
    /// Sign of `-beta Omega_p / 2` (`0` when it vanishes).
    pub omega_1t_sign: f64,
}

pub fn derive_couplings(raw: &RawFourLevelParams) -> Result<DerivedCouplings> {
    let denom = raw.delta_c + raw.delta_so;
    let scale = raw.delta_c.abs().max(raw.delta_so.abs()).max(1.0);
    if !denom.is_finite() || denom.abs() < DENOMINATOR_TOLERANCE * scale {
        return Err(Error::DegenerateDenominator(denom.abs()));
    }
    let oc2 = raw.omega_c * raw.omega_c;
    let omega_1t = -raw.beta * raw.omega_p / 2.0;
    let params = ModelParams {
        eps_s: raw.beta * raw.beta * oc2 / (4.0 * denom),
        eps_t: -raw.delta_so + raw.alpha * raw.alpha * oc2 / (4.0 * denom),
        omega_1s: raw.alpha * raw.omega_p / 2.0,
        omega_st: raw.alpha * raw.beta * oc2 / (4.0 * denom),
        omega_1t_abs: omega_1t.abs(),
    };
    let omega_1t_sign = if omega_1t == 0.0 { 0.0 } else { omega_1t.signum() };
    Ok(DerivedCouplings { params, omega_1t_sign })
}

/// Which Hamiltonian a run drives.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    #[default]
    ThreeLevel,
    Effective,
}

impl ModelKind {
    pub fn dim(self) -> usize {
        match self {
            ModelKind::ThreeLevel => 3,
            ModelKind::Effective => 2,
        }
    }

    /// Index of the bare state |1>.
    pub fn level_1(self) -> usize {
        match self {
            ModelKind::ThreeLevel => LEVEL_1,
            ModelKind::Effective => EFF_LEVEL_1,
        }
    }

    /// Index of the bare state |T>.
    pub fn level_t(self) -> usize {
        match self {
            ModelKind::ThreeLevel => LEVEL_T,
            ModelKind::Effective => EFF_LEVEL_T,
        }
    }

    pub fn hamiltonian(self, tau: f64, params: &ModelParams, sweep: &SweepSpec) -> HermitianMatrix {
        match self {
            ModelKind::ThreeLevel => build_h0(tau, params, sweep),
            ModelKind::Effective => build_h_eff(tau, params, sweep),
        }
    }

    /// `dH/dtau` (not yet divided by `t_f`).
    pub fn hamiltonian_tau_derivative(
        self,
        tau: f64,
        params: &ModelParams,
        sweep: &SweepSpec,
    ) -> HermitianMatrix {
        match self {
            ModelKind::ThreeLevel => h0_tau_derivative(tau, params, sweep),
            ModelKind::Effective => h_eff_tau_derivative(tau, params, sweep),
        }
    }
}

/// Three-level Hamiltonian at rescaled time `tau`.
pub fn build_h0(tau: f64, params: &ModelParams, sweep: &SweepSpec) -> HermitianMatrix {
    let eps_1 = sweep.value(tau);
    let m = sweep.modulation(tau);
    let omega_st = match sweep.phase_target {
        PhaseTarget::Omega1T => C64::from(params.omega_st),
        PhaseTarget::Omega1TAndST => m.phase * params.omega_st,
    };
    let omega_1t = -params.omega_1t_abs * m.value;
    HermitianMatrix::from_upper(3, |i, j| match (i, j) {
        (0, 0) => C64::from(eps_1),
        (1, 1) => C64::from(params.eps_s),
        (2, 2) => C64::from(params.eps_t),
        (0, 1) => C64::from(params.omega_1s),
        (0, 2) => omega_1t,
        (1, 2) => omega_st,
        _ => unreachable!(),
    })
}

fn h0_tau_derivative(tau: f64, params: &ModelParams, sweep: &SweepSpec) -> HermitianMatrix {
    let d_eps = sweep.derivative(tau).value;
    let m = sweep.modulation(tau);
    let d_st = match sweep.phase_target {
        PhaseTarget::Omega1T => C64::from(0.0),
        PhaseTarget::Omega1TAndST => m.phase_derivative * params.omega_st,
    };
    HermitianMatrix::from_upper(3, |i, j| match (i, j) {
        (0, 0) => C64::from(d_eps),
        (0, 2) => -params.omega_1t_abs * m.derivative,
        (1, 2) => d_st,
        _ => C64::from(0.0),
    })
}

/// Effective Hamiltonian on {|1>, |T>}; the off-diagonal is
/// `-|Omega_1T| m(tau)`, matching the (1,3) block of [`build_h0`].
pub fn build_h_eff(tau: f64, params: &ModelParams, sweep: &SweepSpec) -> HermitianMatrix {
    let eps_1 = sweep.value(tau);
    let coupling = -params.omega_1t_abs * sweep.modulation(tau).value;
    HermitianMatrix::from_upper(2, |i, j| match (i, j) {
        (0, 0) => C64::from(eps_1),
        (1, 1) => C64::from(params.eps_t),
        _ => coupling,
    })
}

fn h_eff_tau_derivative(tau: f64, params: &ModelParams, sweep: &SweepSpec) -> HermitianMatrix {
    let d_eps = sweep.derivative(tau).value;
    let d_coupling = -params.omega_1t_abs * sweep.modulation(tau).derivative;
    HermitianMatrix::from_upper(2, |i, j| match (i, j) {
        (0, 0) => C64::from(d_eps),
        (1, 1) => C64::from(0.0),
        _ => d_coupling,
    })
}
