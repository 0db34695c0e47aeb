//! CSV output. Floats are written with 17 significant digits so that every
//! value reads back to the same double.

use std::io::Write;

use crate::error::Result;
use crate::experiments::ScanResult;
use crate::observables::BlochPoint;
use crate::propagate::Trajectory;

/// `x` in scientific notation with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub const TRAJECTORY_HEADER: [&str; 13] = [
    "tau", "t_ns", "re_1", "im_1", "re_S", "im_S", "re_T", "im_T", "P_1", "P_S", "P_T", "followed_overlap",
    "cycle_index",
];

/// Writes every `stride`-th sample plus the last one. Two-level runs leave
/// the |S> columns at zero.
pub fn write_trajectory<W: Write>(out: W, traj: &Trajectory, stride: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAJECTORY_HEADER)?;
    let dim = traj.dim();
    let slots: [Option<usize>; 3] = if dim == 3 { [Some(0), Some(1), Some(2)] } else { [Some(0), None, Some(1)] };
    let stride = stride.max(1);
    let last = traj.len().saturating_sub(1);
    for (j, state) in traj.states.iter().enumerate() {
        if j % stride != 0 && j != last {
            continue;
        }
        let mut row = vec![fmt_f64(traj.grid[j]), fmt_f64(state.t)];
        for slot in slots {
            let z = slot.map_or(Default::default(), |b| state.amplitudes[b]);
            row.push(fmt_f64(z.re));
            row.push(fmt_f64(z.im));
        }
        for slot in slots {
            row.push(fmt_f64(slot.map_or(0.0, |b| traj.populations[b][j])));
        }
        row.push(fmt_f64(traj.followed_overlap[j]));
        row.push(traj.cycle_index[j].to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_bloch_loop<W: Write>(out: W, taus: &[f64], points: &[BlochPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["tau", "x", "y", "z"])?;
    for (tau, p) in taus.iter().zip(points) {
        w.write_record([fmt_f64(*tau), fmt_f64(p.x), fmt_f64(p.y), fmt_f64(p.z)])?;
    }
    w.flush()?;
    Ok(())
}

pub const SCAN_HEADER: [&str; 12] = [
    "value", "fidelity_half", "return_fidelity", "peak_avg_population", "gamma_unwrapped", "gamma_mod2pi",
    "breakdown", "n_samples", "max_norm_drift", "fingerprint", "error", "label",
];

/// One row per scan point; unmeasured observables are empty cells.
pub fn write_scan<W: Write>(out: W, scan: &ScanResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = SCAN_HEADER.to_vec();
    header[0] = scan.axis.as_str();
    w.write_record(&header)?;
    for r in &scan.records {
        w.write_record([
            fmt_f64(r.value),
            fmt_opt(r.fidelity_half),
            fmt_opt(r.return_fidelity),
            fmt_opt(r.peak_avg_population),
            fmt_opt(r.gamma_unwrapped),
            fmt_opt(r.gamma_mod2pi),
            r.breakdown.map(|b| b.to_string()).unwrap_or_default(),
            r.n_samples.to_string(),
            fmt_opt(r.max_norm_drift),
            r.fingerprint.clone(),
            r.error.clone().unwrap_or_default(),
            scan.label.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Two named float columns.
pub fn write_pairs<W: Write>(out: W, names: [&str; 2], rows: &[(f64, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(names)?;
    for (a, b) in rows {
        w.write_record([fmt_f64(*a), fmt_f64(*b)])?;
    }
    w.flush()?;
    Ok(())
}
