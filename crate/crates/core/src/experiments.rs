//! Protocol runs and parameter scans behind each figure: fidelity against
//! protocol duration, population traces, repeated cycles, Bloch loops, and the
//! shift scan correlating transfer quality with the Berry phase.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cd::DriveAssembly;
use crate::error::{Error, Result};
use crate::model::{ModelKind, ModelParams};
use crate::observables::{
    berry_phase_of_model, bloch_loop, solid_angle, BerryResult, BlochPoint, BERRY_SAMPLES,
    BLOCH_CLOSURE_TOLERANCE,
};
use crate::propagate::{repeat_cycles_with, InitialCondition, Integrator, Trajectory};
use crate::spectral::uniform_grid;
use crate::sweeps::{SweepProfile, SweepSpec};

/// Fewest samples per protocol cycle.
pub const MIN_SAMPLES: usize = 2001;

/// Samples per ns of protocol time for long runs.
pub const SAMPLES_PER_NS: f64 = 40.0;

/// Peak-averaged populations below this count as broken transfer.
pub const BREAKDOWN_THRESHOLD: f64 = 0.99;

/// Maxima averaged by [`peak_avg_population`].
pub const DEFAULT_PEAKS: usize = 20;

/// Closure allowance for sign-switched loops, whose 1-T coupling flips sign
/// between the two ends of the protocol.
pub const SIGN_MODE_CLOSURE_TOLERANCE: f64 = 2e-2;

/// Coefficients `b0..b8` of the reference population-versus-phase curve.
pub const REFERENCE_FIT_COEFFICIENTS: [f64; 9] =
    [-0.00435, 0.74855, 2.41404, -5.60260, 5.62913, -3.26138, 1.12098, -0.21196, 0.01696];

/// Samples per cycle for a protocol of `t_f` ns.
pub fn default_samples(t_f: f64) -> usize {
    MIN_SAMPLES.max((SAMPLES_PER_NS * t_f).ceil() as usize + 1)
}

/// `n` log-spaced values from `lo` to `hi` inclusive.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// `n` equally spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Default shift grid of the correlation scan.
pub fn default_v_grid() -> Vec<f64> {
    linspace(-10.0, -0.25, 40)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSettings {
    /// Samples per cycle; `None` picks [`default_samples`].
    pub n_samples: Option<usize>,
    pub n_cycles: usize,
    pub cd_enabled: bool,
    pub initial: InitialCondition,
    pub model: ModelKind,
    pub integrator: Integrator,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            n_samples: None,
            n_cycles: 1,
            cd_enabled: true,
            initial: InitialCondition::default(),
            model: ModelKind::default(),
            integrator: Integrator::default(),
        }
    }
}

/// Everything needed to reproduce one protocol run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub params: ModelParams,
    pub sweep: SweepSpec,
    pub run: RunSettings,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.sweep.validate()?;
        if self.run.n_cycles == 0 {
            return Err(Error::InvalidParameter("n_cycles must be at least 1".into()));
        }
        if matches!(self.run.n_samples, Some(n) if n < 3) {
            return Err(Error::InvalidParameter("n_samples must be at least 3".into()));
        }
        Ok(())
    }

    pub fn samples(&self) -> usize {
        self.run.n_samples.unwrap_or_else(|| default_samples(self.sweep.t_f))
    }

    pub fn drive(&self) -> DriveAssembly {
        DriveAssembly::new(self.run.model, self.params, self.sweep, self.run.cd_enabled)
    }

    pub fn run(&self) -> Result<Trajectory> {
        self.validate()?;
        let drive = self.drive();
        let initial = self.run.initial.resolve(&drive)?;
        repeat_cycles_with(&drive, &initial, &uniform_grid(self.samples()), self.run.n_cycles, self.run.integrator)
    }

    /// Hash of the serialized configuration.
    pub fn fingerprint(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        hex::encode(&Sha256::digest(text.as_bytes())[..16])
    }
}

/// Population of |T> (the last bare level in either model).
pub fn target_population(traj: &Trajectory) -> &[f64] {
    &traj.populations[traj.dim() - 1]
}

/// `P_T` at the middle of the first cycle.
pub fn half_cycle_fidelity(traj: &Trajectory) -> Result<f64> {
    let j = traj.sample_at(0, 0.5).ok_or(Error::EmptyTrajectory)?;
    Ok(target_population(traj)[j])
}

/// `P_1` at the end of the run.
pub fn return_fidelity(traj: &Trajectory) -> Result<f64> {
    Ok(traj.final_state().ok_or(Error::EmptyTrajectory)?.population(0))
}

/// Mean of the `n_peaks` largest local maxima of `series`, or its maximum if
/// fewer maxima exist.
pub fn peak_average(series: &[f64], n_peaks: usize) -> Result<f64> {
    if series.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let mut maxima: Vec<f64> = series
        .windows(3)
        .filter(|w| w[1] > w[0] && w[1] >= w[2])
        .map(|w| w[1])
        .collect();
    if n_peaks == 0 || maxima.len() < n_peaks {
        return Ok(series.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    }
    maxima.sort_by(|a, b| b.total_cmp(a));
    Ok(maxima[..n_peaks].iter().sum::<f64>() / n_peaks as f64)
}

/// Peak-averaged population of |T> along a trajectory.
pub fn peak_avg_population(traj: &Trajectory, n_peaks: usize) -> Result<f64> {
    if traj.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    peak_average(target_population(traj), n_peaks)
}

/// One point of a scan. Observables not measured by the scan are `None`;
/// failed points keep their configuration and carry the error text.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub value: f64,
    pub fidelity_half: Option<f64>,
    pub return_fidelity: Option<f64>,
    pub peak_avg_population: Option<f64>,
    pub gamma_unwrapped: Option<f64>,
    pub gamma_mod2pi: Option<f64>,
    pub breakdown: Option<bool>,
    pub n_samples: usize,
    pub max_norm_drift: Option<f64>,
    pub fingerprint: String,
    pub error: Option<String>,
}

impl ScanRecord {
    fn new(value: f64, config: &SimulationConfig) -> Self {
        Self {
            value,
            fidelity_half: None,
            return_fidelity: None,
            peak_avg_population: None,
            gamma_unwrapped: None,
            gamma_mod2pi: None,
            breakdown: None,
            n_samples: config.samples(),
            max_norm_drift: None,
            fingerprint: config.fingerprint(),
            error: None,
        }
    }

    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    /// Name of the scanned parameter.
    pub axis: String,
    /// Free-form tag, e.g. the sweep profile.
    pub label: String,
    pub records: Vec<ScanRecord>,
}

impl ScanResult {
    pub fn values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.value).collect()
    }
}

fn run_points<F>(axis: &str, label: &str, values: &[f64], point: F) -> ScanResult
where
    F: Fn(f64) -> ScanRecord + Sync,
{
    ScanResult {
        axis: axis.into(),
        label: label.into(),
        records: values.par_iter().map(|&v| point(v)).collect(),
    }
}

fn record_failure(mut record: ScanRecord, err: Error) -> ScanRecord {
    log::warn!("scan point {} failed: {err}", record.value);
    record.error = Some(err.to_string());
    record
}

/// `F(t_f / 2)` without counterdiabatic driving, for each protocol duration.
pub fn fidelity_vs_tf(base: &SimulationConfig, tf_values: &[f64]) -> Result<ScanResult> {
    if let Some(bad) = tf_values.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(Error::InvalidParameter(format!("t_f must be positive, got {bad}")));
    }
    let mut base = *base;
    base.run.cd_enabled = false;
    base.run.n_cycles = 1;
    base.run.n_samples = None;
    base.validate()?;
    Ok(run_points("t_f", base.sweep.profile.name(), tf_values, |t_f| {
        let config = SimulationConfig { sweep: base.sweep.with_t_f(t_f), ..base };
        let record = ScanRecord::new(t_f, &config);
        let measure = || -> Result<ScanRecord> {
            let traj = config.run()?;
            Ok(ScanRecord {
                fidelity_half: Some(half_cycle_fidelity(&traj)?),
                return_fidelity: Some(return_fidelity(&traj)?),
                max_norm_drift: Some(traj.max_norm_drift),
                ..record.clone()
            })
        };
        measure().unwrap_or_else(|e| record_failure(record.clone(), e))
    }))
}

/// Settings of the shift scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VScanConfig {
    pub base: SimulationConfig,
    pub v_grid: Vec<f64>,
    pub n_peaks: usize,
    pub berry_samples: usize,
}

impl Default for VScanConfig {
    fn default() -> Self {
        let mut base = SimulationConfig::default();
        base.sweep.k = 1;
        Self { base, v_grid: default_v_grid(), n_peaks: DEFAULT_PEAKS, berry_samples: BERRY_SAMPLES }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VScanResult {
    pub scan: ScanResult,
    /// Rank correlation of peak-averaged `P_T` with `|gamma_B|`.
    pub spearman: Option<f64>,
}

impl VScanResult {
    /// `(|gamma_B|, P_T)` of every successful point.
    pub fn phase_population_pairs(&self) -> Vec<(f64, f64)> {
        self.scan
            .records
            .iter()
            .filter_map(|r| Some((r.gamma_unwrapped?.abs(), r.peak_avg_population?)))
            .collect()
    }
}

/// Peak-averaged `P_T` and Berry phase for each shift `v`.
pub fn v_scan_correlation(config: &VScanConfig) -> Result<VScanResult> {
    config.base.validate()?;
    if config.v_grid.is_empty() {
        return Err(Error::InsufficientData("empty v grid".into()));
    }
    let base = config.base;
    let scan = run_points("v", base.sweep.profile.name(), &config.v_grid, |v| {
        let point = SimulationConfig { sweep: base.sweep.with_v(v), ..base };
        let record = ScanRecord::new(v, &point);
        let measure = || -> Result<ScanRecord> {
            let traj = point.run()?;
            let population = peak_avg_population(&traj, config.n_peaks)?;
            let berry = berry_phase_of_model(
                point.run.model,
                &point.params,
                &point.sweep,
                point.run.model.level_1(),
                config.berry_samples,
            )?;
            Ok(ScanRecord {
                fidelity_half: Some(half_cycle_fidelity(&traj)?),
                return_fidelity: Some(return_fidelity(&traj)?),
                peak_avg_population: Some(population),
                gamma_unwrapped: Some(berry.gamma_unwrapped),
                gamma_mod2pi: Some(berry.gamma_mod2pi),
                breakdown: Some(population < BREAKDOWN_THRESHOLD),
                max_norm_drift: Some(traj.max_norm_drift),
                ..record.clone()
            })
        };
        measure().unwrap_or_else(|e| record_failure(record.clone(), e))
    });
    let mut result = VScanResult { scan, spearman: None };
    let (phases, populations): (Vec<f64>, Vec<f64>) = result.phase_population_pairs().into_iter().unzip();
    result.spearman = spearman(&populations, &phases);
    Ok(result)
}

/// Spearman rank correlation, with tied values given their mean rank.
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 3 {
        return None;
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    if va == 0.0 || vb == 0.0 {
        return None;
    }
    Some(cov / (va * vb).sqrt())
}

fn ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&i, &j| x[i].total_cmp(&x[j]));
    let mut ranks = vec![0.0; x.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && x[order[end + 1]] == x[order[start]] {
            end += 1;
        }
        let rank = 0.5 * (start + end) as f64 + 1.0;
        for &i in &order[start..=end] {
            ranks[i] = rank;
        }
        start = end + 1;
    }
    ranks
}

/// Polynomial fit `y = sum_j b_j x^j`, `j = 0..=8`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// `b0..b8`, lowest order first.
    pub coefficients: [f64; 9],
    /// Euclidean norm of the residual vector.
    pub residual_norm: f64,
    /// Ratio of extreme singular values of the column-scaled design matrix.
    pub condition_number: f64,
    pub rank_deficient: bool,
    pub n_points: usize,
}

impl FitResult {
    pub fn evaluate(&self, x: f64) -> f64 {
        horner(&self.coefficients, x)
    }
}

/// Condition number above which a fit is flagged rank-deficient.
pub const FIT_CONDITION_LIMIT: f64 = 1e12;

/// Evaluates `sum_j c[j] x^j`.
pub fn horner(coefficients: &[f64], x: f64) -> f64 {
    coefficients.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// The reference population-versus-phase curve.
pub fn reference_curve(gamma: f64) -> f64 {
    horner(&REFERENCE_FIT_COEFFICIENTS, gamma)
}

/// Least-squares degree-8 fit through `(x, y)` points via SVD of the
/// column-normalized Vandermonde matrix.
pub fn fit_degree8(points: &[(f64, f64)]) -> Result<FitResult> {
    use nalgebra::{DMatrix, DVector};

    const DEGREE: usize = 8;
    if points.len() < 10 {
        return Err(Error::InsufficientData(format!("degree-8 fit needs at least 10 points, got {}", points.len())));
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::InvalidParameter("fit points must be finite".into()));
    }
    let x0 = points[0].0;
    if points.iter().all(|p| p.0 == x0) {
        return Err(Error::InvalidParameter("fit abscissae are all equal".into()));
    }
    let n = points.len();
    let mut design = DMatrix::from_fn(n, DEGREE + 1, |i, j| points[i].0.powi(j as i32));
    let scales: Vec<f64> = (0..=DEGREE).map(|j| design.column(j).norm()).collect();
    for (j, s) in scales.iter().enumerate() {
        if *s > 0.0 {
            design.column_mut(j).scale_mut(1.0 / s);
        }
    }
    let rhs = DVector::from_iterator(n, points.iter().map(|p| p.1));
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition_number = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    let rank_deficient = !(condition_number < FIT_CONDITION_LIMIT);
    if rank_deficient {
        log::warn!("degree-8 fit is ill-conditioned (condition number {condition_number:.3e})");
    }
    let scaled = svd
        .solve(&rhs, smax * f64::EPSILON * n as f64)
        .map_err(|e| Error::InvalidParameter(format!("least-squares solve failed: {e}")))?;
    let residual_norm = (&design * &scaled - &rhs).norm();
    let mut coefficients = [0.0; 9];
    for j in 0..=DEGREE {
        coefficients[j] = if scales[j] > 0.0 { scaled[j] / scales[j] } else { 0.0 };
    }
    Ok(FitResult { coefficients, residual_norm, condition_number, rank_deficient, n_points: n })
}

/// Durations of the fidelity curve: 15 log-spaced values over 0.1-10 us.
pub fn default_tf_grid() -> Vec<f64> {
    logspace(100.0, 10_000.0, 15)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityCurves {
    pub arctan: ScanResult,
    pub polynomial: ScanResult,
}

/// Fidelity at half cycle against duration, for both sweep profiles.
pub fn fig2(base: &SimulationConfig, tf_values: &[f64]) -> Result<FidelityCurves> {
    let with = |profile: SweepProfile| SimulationConfig { sweep: SweepSpec { profile, ..base.sweep }, ..*base };
    Ok(FidelityCurves {
        arctan: fidelity_vs_tf(&with(SweepProfile::paper_arctan()), tf_values)?,
        polynomial: fidelity_vs_tf(&with(SweepProfile::paper_polynomial()), tf_values)?,
    })
}

/// Uncorrected population traces at `t_f`, arctan then polynomial.
pub fn fig3(base: &SimulationConfig, t_f: f64) -> Result<Vec<(SimulationConfig, Trajectory)>> {
    [SweepProfile::paper_arctan(), SweepProfile::paper_polynomial()]
        .par_iter()
        .map(|&profile| {
            let mut config = *base;
            config.sweep = SweepSpec { profile, ..base.sweep.with_t_f(t_f) };
            config.run.cd_enabled = false;
            config.run.n_cycles = 1;
            Ok((config, config.run()?))
        })
        .collect()
}

/// Default run of the repeated-cycle experiment.
pub fn fig4_config() -> SimulationConfig {
    let mut config = SimulationConfig::default();
    config.run.n_cycles = 3;
    config
}

/// One Bloch-sphere loop with its enclosed solid angle and Berry phase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochPanel {
    pub label: String,
    pub config: SimulationConfig,
    pub taus: Vec<f64>,
    pub points: Vec<BlochPoint>,
    /// Smallest population of the `(|1>, |T>)` subspace along the run.
    pub min_subspace_population: f64,
    /// Distance between the first and last Bloch vectors.
    pub closure_gap: f64,
    pub solid_angle: Option<f64>,
    pub berry: BerryResult,
}

impl BlochPanel {
    /// `| |gamma_B| - |Omega| / 2 |`.
    pub fn solid_angle_mismatch(&self) -> Option<f64> {
        Some((self.berry.gamma_unwrapped.abs() - 0.5 * self.solid_angle?.abs()).abs())
    }
}

/// Runs `config` and reduces it to the `(|1>, |T>)` Bloch sphere.
pub fn bloch_panel(label: &str, config: &SimulationConfig, closure_tolerance: f64) -> Result<BlochPanel> {
    let traj = config.run()?;
    let model = config.run.model;
    let (points, min_population) = bloch_loop(&traj, (model.level_1(), model.level_t()))?;
    let closure_gap = points[0].distance(points.last().unwrap());
    let omega = match solid_angle(&points, BlochPoint::NORTH, closure_tolerance) {
        Ok(omega) => Some(omega),
        Err(Error::OpenLoop { mismatch, .. }) => {
            log::warn!("Bloch loop '{label}' is open by {mismatch:.3e}; solid angle not reported");
            None
        }
        Err(e) => return Err(e),
    };
    let berry = berry_phase_of_model(model, &config.params, &config.sweep, model.level_1(), BERRY_SAMPLES)?;
    Ok(BlochPanel {
        label: label.into(),
        config: *config,
        taus: traj.grid.clone(),
        points,
        min_subspace_population: min_population,
        closure_gap,
        solid_angle: omega,
        berry: BerryResult { solid_angle: omega, ..berry },
    })
}

/// The three Bloch loops: sign switch without phase, then windings 1 and 2.
pub fn fig5(base: &SimulationConfig) -> Result<Vec<BlochPanel>> {
    let mut base = *base;
    base.run.initial = InitialCondition::Eigenstate(base.run.model.level_1());
    base.run.n_cycles = 1;
    let panels = [
        ("a", base.sweep.with_k(0).with_sign_mode(true), SIGN_MODE_CLOSURE_TOLERANCE),
        ("b", base.sweep.with_k(1).with_sign_mode(false), BLOCH_CLOSURE_TOLERANCE),
        ("c", base.sweep.with_k(2).with_sign_mode(false), BLOCH_CLOSURE_TOLERANCE),
    ];
    panels
        .par_iter()
        .map(|(label, sweep, tol)| bloch_panel(label, &SimulationConfig { sweep: *sweep, ..base }, *tol))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationFigure {
    pub scan: VScanResult,
    pub fit: Option<FitResult>,
    /// Reference curve sampled over the scanned `|gamma_B|` range.
    pub reference: Vec<(f64, f64)>,
}

/// Shift scan, degree-8 fit of `P_T` against `|gamma_B|`, and the reference
/// curve over the same phase range.
pub fn fig6(config: &VScanConfig) -> Result<CorrelationFigure> {
    let scan = v_scan_correlation(config)?;
    let pairs = scan.phase_population_pairs();
    let fit = match fit_degree8(&pairs) {
        Ok(fit) => Some(fit),
        Err(e) => {
            log::warn!("fit skipped: {e}");
            None
        }
    };
    let (lo, hi) = pairs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.0), hi.max(p.0)));
    let reference = if lo.is_finite() && hi > lo {
        linspace(lo, hi, 101).into_iter().map(|g| (g, reference_curve(g))).collect()
    } else {
        Vec::new()
    };
    Ok(CorrelationFigure { scan, fit, reference })
}
