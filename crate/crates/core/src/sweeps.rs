//! Drive profiles for the level |1>: the mirrored arctan ramp, its degree-8
//! polynomial fit, the constant shift `v`, and the modulation applied to the
//! 1-T coupling (smoothed sign change and/or phase winding `2 pi k tau`).
//!
//! All derivatives are taken with respect to the rescaled time `tau = t / t_f`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Degree-8 polynomial coefficients `a8, a7, ..., a0` (ns^-1) fitted to the
/// arctan ramp with `a = 10`, `b = 20`, `c = 18.6`.
pub const POLYNOMIAL_COEFFICIENTS: [f64; 9] = [
    -6.95332e3, 2.78132e4, -4.71818e4, 4.41991e4, -2.49587e4, 8.70096e3, -1.85047e3, 2.30968e2,
    -1.86840e1,
];

pub const ARCTAN_A: f64 = 10.0;
pub const ARCTAN_B: f64 = 20.0;
pub const ARCTAN_C: f64 = 18.6;

/// Steepness of the logistic sign approximation.
pub const SIGN_STEEPNESS: f64 = 20.0;

/// Shape of `epsilon_1(tau)` before the shift `v` is added.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SweepProfile {
    /// `a arctan(b tau) - c` for `tau < 1/2`, mirrored about `tau = 1/2`.
    Arctan { a: f64, b: f64, c: f64 },
    /// Coefficients in descending order `a8 .. a0`.
    Polynomial { coefficients: [f64; 9] },
}

impl SweepProfile {
    pub fn paper_arctan() -> Self {
        SweepProfile::Arctan { a: ARCTAN_A, b: ARCTAN_B, c: ARCTAN_C }
    }

    pub fn paper_polynomial() -> Self {
        SweepProfile::Polynomial { coefficients: POLYNOMIAL_COEFFICIENTS }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SweepProfile::Arctan { .. } => "arctan",
            SweepProfile::Polynomial { .. } => "polynomial",
        }
    }
}

/// Which couplings carry the winding phase `e^{i phi_k}`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseTarget {
    /// Only `Omega_1T` (sign smoothing and phase).
    #[default]
    Omega1T,
    /// `Omega_1T` as above, and `Omega_ST` picks up the phase as well.
    Omega1TAndST,
}

/// A complete time-dependent drive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub profile: SweepProfile,
    /// Constant shift added to `epsilon_1` (ns^-1).
    pub v: f64,
    /// Winding number of the coupling phase.
    pub k: i64,
    /// Multiply the 1-T coupling by the smooth sign of `tau - 1/2`.
    pub sign_mode: bool,
    /// Logistic steepness used when `sign_mode` is on.
    pub d: f64,
    /// Protocol duration (ns).
    pub t_f: f64,
    pub phase_target: PhaseTarget,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            profile: SweepProfile::paper_polynomial(),
            v: 0.0,
            k: 0,
            sign_mode: false,
            d: SIGN_STEEPNESS,
            t_f: 50.0,
            phase_target: PhaseTarget::Omega1T,
        }
    }
}

/// Analytic `d epsilon_1 / d tau`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepDerivative {
    pub value: f64,
    /// Set at the arctan inversion point, where `value` is the left limit.
    pub non_smooth: bool,
}

/// Coupling modulation `m(tau) = s(tau) e^{i 2 pi k tau}` with its
/// `tau`-derivative. `phase` and `phase_derivative` carry the bare winding
/// factor for couplings that take the phase but not the sign.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Modulation {
    pub value: C64,
    pub derivative: C64,
    pub phase: C64,
    pub phase_derivative: C64,
}

impl SweepSpec {
    pub fn polynomial(t_f: f64) -> Self {
        Self { t_f, ..Self::default() }
    }

    pub fn arctan(t_f: f64) -> Self {
        Self { profile: SweepProfile::paper_arctan(), t_f, ..Self::default() }
    }

    pub fn with_v(self, v: f64) -> Self {
        Self { v, ..self }
    }

    pub fn with_k(self, k: i64) -> Self {
        Self { k, ..self }
    }

    pub fn with_sign_mode(self, sign_mode: bool) -> Self {
        Self { sign_mode, ..self }
    }

    pub fn with_t_f(self, t_f: f64) -> Self {
        Self { t_f, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_f.is_finite() && self.t_f > 0.0) {
            return Err(Error::InvalidParameter(format!("t_f must be positive, got {}", self.t_f)));
        }
        if !self.v.is_finite() {
            return Err(Error::InvalidParameter("v must be finite".into()));
        }
        if self.sign_mode && !(self.d.is_finite() && self.d > 0.0) {
            return Err(Error::InvalidParameter(format!("d must be positive, got {}", self.d)));
        }
        let finite = match self.profile {
            SweepProfile::Arctan { a, b, c } => [a, b, c].iter().all(|x| x.is_finite()),
            SweepProfile::Polynomial { coefficients } => coefficients.iter().all(|x| x.is_finite()),
        };
        if !finite {
            return Err(Error::InvalidParameter("sweep coefficients must be finite".into()));
        }
        Ok(())
    }

    /// True when `d epsilon_1 / d tau` has a kink inside the protocol.
    pub fn has_kink(&self) -> bool {
        matches!(self.profile, SweepProfile::Arctan { .. })
    }

    /// `epsilon_1(tau)` including the shift `v` (ns^-1).
    pub fn value(&self, tau: f64) -> f64 {
        check_tau(tau);
        let base = match self.profile {
            SweepProfile::Arctan { a, b, c } => {
                let arg = if tau < 0.5 { tau } else { 1.0 - tau };
                a * (b * arg).atan() - c
            }
            SweepProfile::Polynomial { coefficients } => {
                coefficients.iter().fold(0.0, |acc, &coef| acc * tau + coef)
            }
        };
        base + self.v
    }

    pub fn derivative(&self, tau: f64) -> SweepDerivative {
        check_tau(tau);
        match self.profile {
            SweepProfile::Arctan { a, b, .. } => {
                // Left limit at the inversion point.
                if tau <= 0.5 {
                    let x = b * tau;
                    SweepDerivative { value: a * b / (1.0 + x * x), non_smooth: tau == 0.5 }
                } else {
                    let x = b * (1.0 - tau);
                    SweepDerivative { value: -a * b / (1.0 + x * x), non_smooth: false }
                }
            }
            SweepProfile::Polynomial { coefficients } => {
                let value = coefficients[..8]
                    .iter()
                    .enumerate()
                    .fold(0.0, |acc, (i, &coef)| acc * tau + (8 - i) as f64 * coef);
                SweepDerivative { value, non_smooth: false }
            }
        }
    }

    /// Smooth sign `s(tau) = 2 / (1 + exp(-d (tau - 1/2))) - 1` and `ds/dtau`,
    /// or `(1, 0)` when sign mode is off.
    pub fn smooth_sign(&self, tau: f64) -> (f64, f64) {
        if !self.sign_mode {
            return (1.0, 0.0);
        }
        // Same logistic, written as tanh for accuracy near the midpoint.
        let half = 0.5 * self.d * (tau - 0.5);
        let s = half.tanh();
        (s, 0.5 * self.d * (1.0 - s * s))
    }

    pub fn modulation(&self, tau: f64) -> Modulation {
        check_tau(tau);
        let omega = 2.0 * PI * self.k as f64;
        let phase = C64::from_polar(1.0, omega * tau);
        let phase_derivative = C64::i() * omega * phase;
        let (s, ds) = self.smooth_sign(tau);
        Modulation {
            value: phase * s,
            derivative: phase * ds + phase_derivative * s,
            phase,
            phase_derivative,
        }
    }
}

fn check_tau(tau: f64) {
    debug_assert!((-1e-12..=1.0 + 1e-12).contains(&tau), "tau = {tau} outside [0, 1]");
}
