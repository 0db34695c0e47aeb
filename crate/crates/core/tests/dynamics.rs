mod common;

use adiacycle_core::experiments::{half_cycle_fidelity, SimulationConfig};
use adiacycle_core::linalg::{expm_minus_i, eigh};
use adiacycle_core::propagate::{propagate_with, QuantumState};
use adiacycle_core::spectral::uniform_grid;
use adiacycle_core::{DriveAssembly, HermitianMatrix, Integrator, ModelKind, ModelParams, SweepSpec};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn hermitian3(re: &[f64], im: &[f64]) -> HermitianMatrix {
    HermitianMatrix::from_upper(3, |i, j| {
        let k = i * 3 + j;
        if i == j {
            C64::from(re[k])
        } else {
            C64::new(re[k], im[k])
        }
    })
}

proptest! {
    #[test]
    fn eigenvalues_match_characteristic_cubic(
        re in prop::collection::vec(-20.0f64..20.0, 9),
        im in prop::collection::vec(-5.0f64..5.0, 9),
    ) {
        let h = hermitian3(&re, &im);
        let ours = eigh(&h);
        let oracle = common::cubic_eigenvalues(&h);
        let scale = 1.0 + h.as_matrix().max_abs();
        for n in 0..3 {
            prop_assert!((ours.values()[n] - oracle[n]).abs() <= 1e-11 * scale, "{:?} vs {:?}", ours.values(), oracle);
        }
    }

    #[test]
    fn spectral_exponential_matches_taylor(
        re in prop::collection::vec(-3.0f64..3.0, 9),
        im in prop::collection::vec(-3.0f64..3.0, 9),
        dt in 0.001f64..2.0,
    ) {
        let h = hermitian3(&re, &im);
        let u = expm_minus_i(&h, dt);
        let taylor = common::expm_taylor(&h, dt);
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!((u[(i, j)] - taylor[i][j]).norm() < 1e-11);
            }
        }
    }
}

#[test]
fn paper_hamiltonian_eigenvalues_match_cubic() {
    for k in [0, 1, 2] {
        let drive = DriveAssembly::new(ModelKind::ThreeLevel, ModelParams::PAPER, SweepSpec::polynomial(50.0).with_k(k), true);
        for tau in uniform_grid(401) {
            let h = drive.h0_at(tau);
            let ours = eigh(&h);
            let oracle = common::cubic_eigenvalues(&h);
            for n in 0..3 {
                assert!((ours.values()[n] - oracle[n]).abs() < 1e-12 * (1.0 + oracle[n].abs()));
            }
        }
    }
}

fn final_error(drive: &DriveAssembly, integrator: Integrator, n: usize, exact: &adiacycle_core::CVector) -> f64 {
    let traj = propagate_with(drive, &QuantumState::bare(3, 0), &uniform_grid(n), integrator).unwrap();
    (traj.final_state().unwrap().amplitudes - *exact).norm()
}

#[test]
fn integrator_convergence_orders() {
    let drive = DriveAssembly::new(ModelKind::ThreeLevel, ModelParams::PAPER, SweepSpec::polynomial(50.0).with_k(1), true);
    let reference = propagate_with(&drive, &QuantumState::bare(3, 0), &uniform_grid(64_001), Integrator::CommutatorFree4).unwrap();
    let exact = reference.final_state().unwrap().amplitudes;

    let mid = final_error(&drive, Integrator::ExponentialMidpoint, 1001, &exact)
        / final_error(&drive, Integrator::ExponentialMidpoint, 2001, &exact);
    assert!((3.5..4.5).contains(&mid), "midpoint halving ratio {mid}");

    let cf4 = final_error(&drive, Integrator::CommutatorFree4, 501, &exact)
        / final_error(&drive, Integrator::CommutatorFree4, 1001, &exact);
    assert!((13.0..19.0).contains(&cf4), "fourth-order halving ratio {cf4}");
}

#[test]
fn cd_run_follows_the_adiabatic_level() {
    for k in [0, 1, 2] {
        let config = SimulationConfig { sweep: SweepSpec::polynomial(50.0).with_k(k), ..Default::default() };
        let traj = config.run().unwrap();
        let worst = traj.followed_overlap.iter().fold(1.0f64, |m, &o| m.min(o));
        assert!(worst >= 1.0 - 1e-4, "k={k}: min overlap {worst}");
        assert!(traj.max_norm_drift < 1e-10);
    }
}

#[test]
fn half_cycle_fidelity_is_grid_invariant() {
    let coarse = SimulationConfig::default();
    let mut fine = coarse;
    fine.run.n_samples = Some(4001);
    let a = half_cycle_fidelity(&coarse.run().unwrap()).unwrap();
    let b = half_cycle_fidelity(&fine.run().unwrap()).unwrap();
    assert!((a - b).abs() < 1e-7, "{a} vs {b}");
}

/// `H_CD = (i/2) sum_n [dP_n/dt, P_n]` from eigenprojectors differentiated by
/// central differences. Projectors carry no phase, so no gauge enters.
fn projector_cd(drive: &DriveAssembly, tau: f64) -> Vec<Vec<C64>> {
    let projectors = |tau: f64| {
        let e = eigh(&drive.h0_at(tau));
        (0..3)
            .map(|n| {
                let v = e.vectors.column(n);
                (0..3).map(|i| (0..3).map(|j| v[i] * v[j].conj()).collect::<Vec<_>>()).collect::<Vec<_>>()
            })
            .collect::<Vec<_>>()
    };
    let h = 1e-5;
    let (p, plus, minus) = (projectors(tau), projectors(tau + h), projectors(tau - h));
    let dt = 2.0 * h * drive.t_f();
    let mut out = vec![vec![C64::from(0.0); 3]; 3];
    for n in 0..3 {
        let dp: Vec<Vec<C64>> = (0..3).map(|i| (0..3).map(|j| (plus[n][i][j] - minus[n][i][j]) / dt).collect()).collect();
        for i in 0..3 {
            for j in 0..3 {
                let comm: C64 = (0..3).map(|k| dp[i][k] * p[n][k][j] - p[n][i][k] * dp[k][j]).sum();
                out[i][j] += 0.5 * C64::i() * comm;
            }
        }
    }
    out
}

#[test]
fn cd_term_matches_projector_formula() {
    for sweep in [SweepSpec::polynomial(50.0), SweepSpec::polynomial(50.0).with_k(2), SweepSpec::arctan(50.0).with_k(1)] {
        let drive = DriveAssembly::new(ModelKind::ThreeLevel, ModelParams::PAPER, sweep, true);
        for tau in [0.05, 0.2, 0.26, 0.31, 0.6, 0.74, 0.93] {
            let ours = drive.cd_at(tau).unwrap();
            let oracle = projector_cd(&drive, tau);
            let scale = ours.as_matrix().max_abs().max(1e-12);
            for i in 0..3 {
                for j in 0..3 {
                    let diff = (ours[(i, j)] - oracle[i][j]).norm();
                    assert!(diff < 1e-5 * scale.max(1.0), "tau {tau} ({i},{j}): {} vs {}", ours[(i, j)], oracle[i][j]);
                }
            }
        }
    }
}
