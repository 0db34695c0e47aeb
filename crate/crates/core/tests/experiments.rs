use adiacycle_core::experiments::{
    fidelity_vs_tf, fit_degree8, linspace, peak_average, peak_avg_population, reference_curve,
    v_scan_correlation, SimulationConfig, VScanConfig, BREAKDOWN_THRESHOLD, REFERENCE_FIT_COEFFICIENTS,
};
use adiacycle_core::SweepSpec;
use std::f64::consts::PI;

#[test]
fn fit_recovers_reference_coefficients() {
    let points: Vec<(f64, f64)> = linspace(0.0, 3.0, 200).into_iter().map(|g| (g, reference_curve(g))).collect();
    let fit = fit_degree8(&points).unwrap();
    for (got, want) in fit.coefficients.iter().zip(REFERENCE_FIT_COEFFICIENTS) {
        assert!((got - want).abs() <= 1e-6 * want.abs(), "{got} vs {want}");
    }
    assert!(!fit.rank_deficient);
    for (x, y) in &points {
        assert!((fit.evaluate(*x) - y).abs() <= fit.residual_norm + 1e-12);
    }
}

#[test]
fn synthetic_oscillation_peaks_average_to_amplitude() {
    let series: Vec<f64> = linspace(0.0, 1.0, 8001).into_iter().map(|t| 0.5 + 0.1 * (40.0 * PI * t).sin()).collect();
    assert!((peak_average(&series, 20).unwrap() - 0.6).abs() < 1e-6);
}

#[test]
fn clean_cd_transfer_peak_is_its_maximum() {
    let traj = SimulationConfig::default().run().unwrap();
    let p = peak_avg_population(&traj, 20).unwrap();
    let max = traj.populations[2].iter().copied().fold(0.0, f64::max);
    assert_eq!(p, max);
    assert!(p >= 0.996, "{p}");
}

#[test]
fn uncorrected_fidelity_refines_consistently() {
    let mut base = SimulationConfig { sweep: SweepSpec::polynomial(5000.0), ..Default::default() };
    base.run.cd_enabled = false;
    let scan = fidelity_vs_tf(&base, &[5000.0]).unwrap();
    let coarse = scan.records[0].fidelity_half.unwrap();
    let mut fine = base;
    fine.run.n_samples = Some(2 * base.samples() - 1);
    let refined = adiacycle_core::experiments::half_cycle_fidelity(&fine.run().unwrap()).unwrap();
    assert!((coarse - refined).abs() < 1e-6, "{coarse} vs {refined}");
    assert!(coarse > 0.95);
}

#[test]
fn short_uncorrected_protocol_breaks_down() {
    let base = SimulationConfig::default();
    let scan = fidelity_vs_tf(&base, &[100.0]).unwrap();
    assert!(scan.records[0].fidelity_half.unwrap() < 0.5);
}

#[test]
fn shift_scan_endpoints_flags_and_determinism() {
    let config = VScanConfig { v_grid: vec![-10.0, -6.0, -3.5, 0.0], ..Default::default() };
    let a = v_scan_correlation(&config).unwrap();
    let b = v_scan_correlation(&config).unwrap();
    assert_eq!(a, b);
    let records = &a.scan.records;
    assert!(records.iter().all(|r| r.succeeded()));
    for r in records {
        if r.breakdown.unwrap() {
            assert!(r.peak_avg_population.unwrap() < BREAKDOWN_THRESHOLD);
        }
    }
    let far = &records[0];
    assert!(far.peak_avg_population.unwrap() < 0.9 && far.gamma_unwrapped.unwrap().abs() < 0.5);
    let reference = &records[3];
    assert!(reference.peak_avg_population.unwrap() > 0.99);
    assert!((reference.gamma_unwrapped.unwrap().abs() - 2.8).abs() < 0.2);
    assert!(records[2].peak_avg_population.unwrap() < 1.0 - 1e-3);
}
