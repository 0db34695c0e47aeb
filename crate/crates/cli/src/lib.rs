//! Command-line front end: configuration resolution, experiment dispatch and
//! output files.

pub mod config;
pub mod error;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use adiacycle_core::experiments::{
    self, half_cycle_fidelity, peak_avg_population, return_fidelity, REFERENCE_FIT_COEFFICIENTS,
};
use adiacycle_core::observables::{berry_equivalence_check, h0_endpoint_mismatch, BerryEquivalence};
use adiacycle_core::{io, selfcheck, Integrator, ModelKind, SweepProfile, Trajectory};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::{RunConfig, OUT_DIR_ENV};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "adiacycle", version, about = "Counterdiabatic cyclic transfer in a driven three-level system")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Single protocol run; writes the trajectory.
    Propagate,
    /// Back-to-back protocol cycles (3 by default).
    Cycles,
    /// Half-cycle fidelity against duration, CD off, both sweeps.
    Fig2,
    /// Uncorrected population traces for both sweeps.
    Fig3,
    /// Three CD cycles at 50 ns.
    Fig4,
    /// Bloch-sphere loops with solid angles and Berry phases.
    Fig5,
    /// Shift scan, rank correlation and degree-8 fit.
    Fig6,
    /// Berry phase of the followed level in both models.
    Berry,
    /// Invariant self-test.
    Check,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Propagate => "propagate",
            Command::Cycles => "cycles",
            Command::Fig2 => "fig2",
            Command::Fig3 => "fig3",
            Command::Fig4 => "fig4",
            Command::Fig5 => "fig5",
            Command::Fig6 => "fig6",
            Command::Berry => "berry",
            Command::Check => "check",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    ThreeLevel,
    Effective,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProfileArg {
    Polynomial,
    Arctan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum IntegratorArg {
    Cf4,
    Midpoint,
}

/// Flags; each one overrides the configuration file.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    /// JSON configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (also settable through ADIACYCLE_OUT).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for parallel scans.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Protocol duration in ns.
    #[arg(long = "t-f", global = true, allow_hyphen_values = true)]
    pub t_f: Option<f64>,
    /// Winding number of the coupling phase.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub k: Option<i64>,
    /// Constant shift of the sweep (ns^-1).
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub v: Option<f64>,
    /// Replace the phase factor by the smoothed sign of the sweep
    #[arg(long, global = true)]
    pub sign_mode: Option<bool>,
    /// Counterdiabatic term on or off.
    #[arg(long, global = true)]
    pub cd: Option<bool>,
    /// Number of back-to-back cycles
    #[arg(long, global = true)]
    pub cycles: Option<usize>,
    /// Samples per cycle.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Three-level or effective two-level Hamiltonian
    #[arg(long, global = true, value_enum)]
    pub model: Option<ModelArg>,
    /// Sweep shape (keeps the default coefficients)
    #[arg(long, global = true, value_enum)]
    pub profile: Option<ProfileArg>,
    /// Time stepper
    #[arg(long, global = true, value_enum)]
    pub integrator: Option<IntegratorArg>,
    /// More log output; repeat for debug.
    #[arg(long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

impl Overrides {
    pub fn apply(&self, config: &mut RunConfig) {
        if let Some(t_f) = self.t_f {
            config.sweep.t_f = t_f;
        }
        if let Some(k) = self.k {
            config.sweep.k = k;
        }
        if let Some(v) = self.v {
            config.sweep.v = v;
        }
        if let Some(s) = self.sign_mode {
            config.sweep.sign_mode = s;
        }
        if let Some(cd) = self.cd {
            config.run.cd_enabled = cd;
        }
        if let Some(n) = self.cycles {
            config.run.n_cycles = n;
        }
        if let Some(n) = self.samples {
            config.run.n_samples = Some(n);
        }
        if let Some(m) = self.model {
            config.run.model = match m {
                ModelArg::ThreeLevel => ModelKind::ThreeLevel,
                ModelArg::Effective => ModelKind::Effective,
            };
        }
        if let Some(p) = self.profile {
            config.sweep.profile = match p {
                ProfileArg::Polynomial => SweepProfile::paper_polynomial(),
                ProfileArg::Arctan => SweepProfile::paper_arctan(),
            };
        }
        if let Some(i) = self.integrator {
            config.run.integrator = match i {
                IntegratorArg::Cf4 => Integrator::CommutatorFree4,
                IntegratorArg::Midpoint => Integrator::ExponentialMidpoint,
            };
        }
    }
}

/// Defaults, then file, then environment, then flags.
pub fn resolve(command: Command, overrides: &Overrides) -> Result<RunConfig, CliError> {
    let mut config = match &overrides.config {
        Some(path) => RunConfig::load(command.name(), path)?,
        None => RunConfig::defaults_for(command.name()),
    };
    if let Some(dir) = std::env::var_os(OUT_DIR_ENV).filter(|d| !d.is_empty()) {
        config.output_dir = PathBuf::from(dir);
    }
    if let Some(dir) = &overrides.out {
        config.output_dir = dir.clone();
    }
    overrides.apply(&mut config);
    config.params()?;
    Ok(config)
}

/// Parses `argv`, runs the command, and returns the process exit code.
pub fn run<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let level = match cli.overrides.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match execute(cli.command, &cli.overrides) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("adiacycle: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command, overrides: &Overrides) -> Result<(), CliError> {
    let config = resolve(command, overrides)?;
    if let Some(n) = overrides.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let out = Output::create(&config.output_dir)?;
    out.text("resolved_config.json", &config.to_pretty_json())?;
    match command {
        Command::Propagate | Command::Cycles | Command::Fig4 => run_trajectory(&config, &out, command),
        Command::Fig2 => run_fig2(&config, &out),
        Command::Fig3 => run_fig3(&config, &out),
        Command::Fig5 => run_fig5(&config, &out),
        Command::Fig6 => run_fig6(&config, &out),
        Command::Berry => run_berry(&config, &out),
        Command::Check => run_check(&out),
    }
}

struct Output {
    dir: PathBuf,
}

impl Output {
    fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("creating {}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    fn writer(&self, name: &str) -> Result<BufWriter<File>, CliError> {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|e| CliError::Io(format!("creating {}: {e}", path.display())))?;
        Ok(BufWriter::new(file))
    }

    fn text(&self, name: &str, text: &str) -> Result<(), CliError> {
        let mut w = self.writer(name)?;
        w.write_all(text.as_bytes())?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }

    fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        self.text(name, &serde_json::to_string_pretty(value).expect("report serializes"))
    }

    fn trajectory(&self, name: &str, traj: &Trajectory, max_rows: usize) -> Result<(), CliError> {
        let stride = traj.len().div_ceil(max_rows.max(2) - 1).max(1);
        io::write_trajectory(self.writer(name)?, traj, stride)?;
        Ok(())
    }
}

#[derive(Debug, Serialize)]
struct RunSummary {
    fingerprint: String,
    samples: usize,
    n_cycles: usize,
    fidelity_half: f64,
    return_fidelity: f64,
    peak_avg_population: f64,
    min_followed_overlap: f64,
    max_norm_drift: f64,
}

fn summarize(traj: &Trajectory, n_peaks: usize, n_cycles: usize) -> Result<RunSummary, CliError> {
    Ok(RunSummary {
        fingerprint: traj.fingerprint.clone(),
        samples: traj.len(),
        n_cycles,
        fidelity_half: half_cycle_fidelity(traj)?,
        return_fidelity: return_fidelity(traj)?,
        peak_avg_population: peak_avg_population(traj, n_peaks)?,
        min_followed_overlap: traj.followed_overlap.iter().copied().fold(1.0, f64::min),
        max_norm_drift: traj.max_norm_drift,
    })
}

fn run_trajectory(config: &RunConfig, out: &Output, command: Command) -> Result<(), CliError> {
    let sim = config.simulation()?;
    let traj = sim.run()?;
    out.trajectory(&format!("{}_trajectory.csv", command.name()), &traj, config.experiment.max_rows)?;
    let summary = summarize(&traj, config.experiment.n_peaks, sim.run.n_cycles)?;
    println!(
        "{}: F(t_f/2) = {:.6}, final P_1 = {:.6}, cycles = {}",
        command.name(),
        summary.fidelity_half,
        summary.return_fidelity,
        summary.n_cycles
    );
    out.json("summary.json", &summary)
}

fn run_fig2(config: &RunConfig, out: &Output) -> Result<(), CliError> {
    let curves = experiments::fig2(&config.simulation()?, &config.experiment.tf_values)?;
    for scan in [&curves.arctan, &curves.polynomial] {
        io::write_scan(out.writer(&format!("fig2_{}.csv", scan.label))?, scan)?;
        for r in &scan.records {
            match r.fidelity_half {
                Some(f) => println!("fig2 {:<10} t_f = {:>10.3} ns  F(t_f/2) = {f:.6}", scan.label, r.value),
                None => println!("fig2 {:<10} t_f = {:>10.3} ns  failed", scan.label, r.value),
            }
        }
    }
    Ok(())
}

fn run_fig3(config: &RunConfig, out: &Output) -> Result<(), CliError> {
    let runs = experiments::fig3(&config.simulation()?, config.experiment.trace_t_f)?;
    for (sim, traj) in &runs {
        let name = sim.sweep.profile.name();
        out.trajectory(&format!("fig3_{name}.csv"), traj, config.experiment.max_rows)?;
        let s = summarize(traj, config.experiment.n_peaks, 1)?;
        println!("fig3 {name}: F(t_f/2) = {:.6}, final P_1 = {:.6}", s.fidelity_half, s.return_fidelity);
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct PanelReport<'a> {
    label: &'a str,
    k: i64,
    sign_mode: bool,
    min_subspace_population: f64,
    closure_gap: f64,
    solid_angle: Option<f64>,
    half_solid_angle_mismatch: Option<f64>,
    berry: adiacycle_core::BerryResult,
}

fn run_fig5(config: &RunConfig, out: &Output) -> Result<(), CliError> {
    let panels = experiments::fig5(&config.simulation()?)?;
    let mut reports = Vec::new();
    for p in &panels {
        io::write_bloch_loop(out.writer(&format!("fig5_{}.csv", p.label))?, &p.taus, &p.points)?;
        println!(
            "fig5 ({}) k = {}, sign = {}: gamma_B = {:.6}, Omega/2 = {}",
            p.label,
            p.config.sweep.k,
            p.config.sweep.sign_mode,
            p.berry.gamma_unwrapped,
            p.solid_angle.map_or("n/a".to_string(), |o| format!("{:.6}", 0.5 * o)),
        );
        reports.push(PanelReport {
            label: &p.label,
            k: p.config.sweep.k,
            sign_mode: p.config.sweep.sign_mode,
            min_subspace_population: p.min_subspace_population,
            closure_gap: p.closure_gap,
            solid_angle: p.solid_angle,
            half_solid_angle_mismatch: p.solid_angle_mismatch(),
            berry: p.berry,
        });
    }
    out.json("fig5_report.json", &reports)
}

#[derive(Debug, Serialize)]
struct FitReport {
    spearman: Option<f64>,
    fit: Option<experiments::FitResult>,
    reference_coefficients: [f64; 9],
    failed_points: usize,
}

fn run_fig6(config: &RunConfig, out: &Output) -> Result<(), CliError> {
    let figure = experiments::fig6(&config.v_scan()?)?;
    io::write_scan(out.writer("fig6_scan.csv")?, &figure.scan.scan)?;
    io::write_pairs(out.writer("fig6_reference.csv")?, ["gamma_abs", "population"], &figure.reference)?;
    let failed_points = figure.scan.scan.records.iter().filter(|r| !r.succeeded()).count();
    println!(
        "fig6: {} points ({failed_points} failed), spearman = {}",
        figure.scan.scan.records.len(),
        figure.scan.spearman.map_or("n/a".to_string(), |r| format!("{r:.4}"))
    );
    out.json(
        "fig6_fit.json",
        &FitReport {
            spearman: figure.scan.spearman,
            fit: figure.fit,
            reference_coefficients: REFERENCE_FIT_COEFFICIENTS,
            failed_points,
        },
    )
}

#[derive(Debug, Serialize)]
struct BerryReport {
    k: i64,
    model: ModelKind,
    gamma_unwrapped: f64,
    gamma_mod2pi: f64,
    wilson_principal: f64,
    connection_integral: f64,
    method_delta: f64,
    closure_mismatch: f64,
    h0_endpoint_mismatch: f64,
    samples: usize,
    equivalence: BerryEquivalence,
}

fn run_berry(config: &RunConfig, out: &Output) -> Result<(), CliError> {
    let sim = config.simulation()?;
    let samples = config.experiment.berry_samples;
    let equivalence = berry_equivalence_check(&sim.params, &sim.sweep, samples)?;
    let primary = match sim.run.model {
        ModelKind::ThreeLevel => equivalence.three_level,
        ModelKind::Effective => equivalence.effective,
    };
    let report = BerryReport {
        k: sim.sweep.k,
        model: sim.run.model,
        gamma_unwrapped: primary.gamma_unwrapped,
        gamma_mod2pi: primary.gamma_mod2pi,
        wilson_principal: primary.wilson_principal,
        connection_integral: primary.connection_integral,
        method_delta: primary.method_delta(),
        closure_mismatch: primary.closure_mismatch,
        h0_endpoint_mismatch: h0_endpoint_mismatch(sim.run.model, &sim.params, &sim.sweep),
        samples,
        equivalence,
    };
    println!(
        "berry k = {}: gamma_B = {:.6} (mod 2pi {:.6}), three-level vs effective difference {:.3e}",
        report.k, report.gamma_unwrapped, report.gamma_mod2pi, equivalence.difference
    );
    out.json("berry_report.json", &report)
}

fn run_check(out: &Output) -> Result<(), CliError> {
    let outcomes = selfcheck::run_all()?;
    for c in &outcomes {
        println!(
            "{} {}: {:.3e} (limit {:.1e})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.threshold
        );
    }
    out.json("check_report.json", &outcomes)?;
    let failed = outcomes.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(CliError::Numerical(format!("{failed} self-checks failed")));
    }
    Ok(())
}
