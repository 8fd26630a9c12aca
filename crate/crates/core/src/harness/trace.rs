use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

pub const TRACE_HEADER: &str = "t,theta,omega,omega_dot,tau_desired,tau_achieved,saturated";

/// One control tick. `omega` and `omega_dot` are the sensed values the
/// impedance law saw; `theta` is the prescribed hand angle.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    pub theta: f64,
    pub omega: f64,
    pub omega_dot: f64,
    pub tau_desired: f64,
    pub tau_achieved: f64,
    pub saturated: bool,
}

/// Actuator-side detail kept alongside each sample (not exported).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GimbalSample {
    pub phi: f64,
    pub phi_rate: f64,
    pub envelope: f64,
    pub elastic_torque: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConditionTrace {
    pub condition: String,
    pub samples: Vec<TraceSample>,
    /// Same length as `samples` for simulated traces, empty when re-imported.
    pub gimbal: Vec<GimbalSample>,
    /// Start of the post-swing ring segment, for elastic conditions.
    pub ring_start: Option<f64>,
    /// The run stopped early (elastic divergence).
    pub truncated: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct TrackingMetrics {
    /// N·m, over samples with |τ_desired| > 1% of the peak
    pub rms_error: f64,
    pub peak_desired: f64,
    pub normalized_rmse: f64,
    pub dominant_oscillation_hz: Option<f64>,
    /// Envelope time constant of the post-swing ring, s
    pub ring_decay_s: Option<f64>,
    pub saturated_samples: usize,
}

pub fn tracking_metrics(trace: &ConditionTrace) -> Result<TrackingMetrics> {
    if trace.samples.is_empty() {
        return Err(Error::invalid("trace", "no samples"));
    }
    let peak = trace
        .samples
        .iter()
        .map(|s| s.tau_desired.abs())
        .fold(0.0, f64::max);
    let threshold = 0.01 * peak;
    let (sum_sq, count) = trace
        .samples
        .iter()
        .filter(|s| peak > 0.0 && s.tau_desired.abs() > threshold)
        .fold((0.0, 0usize), |(acc, n), s| {
            let e = s.tau_achieved - s.tau_desired;
            (acc + e * e, n + 1)
        });
    let rms_error = if count > 0 {
        (sum_sq / count as f64).sqrt()
    } else {
        0.0
    };
    let normalized_rmse = if peak > 0.0 { rms_error / peak } else { 0.0 };

    let (dominant_oscillation_hz, ring_decay_s) = match trace.ring_start {
        Some(start) => {
            let (times, values): (Vec<f64>, Vec<f64>) = trace
                .samples
                .iter()
                .filter(|s| s.t >= start)
                .map(|s| (s.t, s.tau_desired))
                .unzip();
            (
                dominant_frequency(&times, &values),
                decay_time_constant(&times, &values),
            )
        }
        None => (None, None),
    };

    Ok(TrackingMetrics {
        rms_error,
        peak_desired: peak,
        normalized_rmse,
        dominant_oscillation_hz,
        ring_decay_s,
        saturated_samples: trace.samples.iter().filter(|s| s.saturated).count(),
    })
}

/// Linearly interpolated zero-crossing times. Samples within `1e-9` of the
/// signal's peak magnitude are treated as zero and skipped.
pub fn zero_crossings(times: &[f64], values: &[f64]) -> Vec<f64> {
    let peak = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let floor = 1e-9 * peak;
    let mut crossings = Vec::new();
    let mut last: Option<(f64, f64)> = None;
    for (&t, &v) in times.iter().zip(values) {
        if v.abs() <= floor {
            continue;
        }
        if let Some((t0, v0)) = last {
            if v0.signum() != v.signum() {
                crossings.push(t0 + (t - t0) * v0 / (v0 - v));
            }
        }
        last = Some((t, v));
    }
    crossings
}

/// Oscillation frequency from zero crossings: `(n − 1) / (2·span)`.
pub fn dominant_frequency(times: &[f64], values: &[f64]) -> Option<f64> {
    let z = zero_crossings(times, values);
    if z.len() < 2 {
        return None;
    }
    let span = z[z.len() - 1] - z[0];
    (span > 0.0).then(|| (z.len() - 1) as f64 / (2.0 * span))
}

/// Time constant of an exponentially decaying oscillation, from a
/// least-squares line through `ln|peak|` of each complete half-cycle.
pub fn decay_time_constant(times: &[f64], values: &[f64]) -> Option<f64> {
    let z = zero_crossings(times, values);
    let mut peaks = Vec::new();
    for w in z.windows(2) {
        let best = times
            .iter()
            .zip(values)
            .filter(|(&t, _)| t > w[0] && t < w[1])
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()));
        if let Some((&t, &v)) = best {
            if v != 0.0 {
                peaks.push((t, v.abs().ln()));
            }
        }
    }
    if peaks.len() < 3 {
        return None;
    }
    let n = peaks.len() as f64;
    let mt = peaks.iter().map(|p| p.0).sum::<f64>() / n;
    let my = peaks.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = peaks.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = peaks.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
    let slope = sxy / sxx;
    (slope < 0.0).then(|| -1.0 / slope)
}

/// Write the trace as CSV (`t,theta,omega,omega_dot,tau_desired,tau_achieved,saturated`).
/// Floats use the shortest decimal form that round-trips exactly.
pub fn write_trace<W: Write>(trace: &ConditionTrace, out: W) -> std::io::Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "{TRACE_HEADER}")?;
    for s in &trace.samples {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            s.t,
            s.theta,
            s.omega,
            s.omega_dot,
            s.tau_desired,
            s.tau_achieved,
            u8::from(s.saturated)
        )?;
    }
    out.flush()
}

pub fn export_trace(trace: &ConditionTrace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_trace(trace, file).map_err(|e| Error::io(path, e))
}

/// Export each trace to `<dir>/<condition>.csv`.
pub fn export_batch(traces: &[ConditionTrace], dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    traces
        .iter()
        .map(|trace| {
            let path = dir.join(format!("{}.csv", trace.condition));
            export_trace(trace, &path).map(|_| path)
        })
        .collect()
}

/// Read a trace CSV back. The condition name is taken from the file stem.
pub fn import_trace(path: impl AsRef<Path>) -> Result<ConditionTrace> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == TRACE_HEADER => {}
        _ => {
            return Err(Error::invalid(
                "trace",
                format!("{}: expected header `{TRACE_HEADER}`", path.display()),
            ))
        }
    }
    let bad = |line: usize, what: &str| {
        Error::invalid("trace", format!("{} line {}: {what}", path.display(), line + 1))
    };
    let mut samples = Vec::new();
    for (line, row) in lines {
        if row.is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 7 {
            return Err(bad(line, "expected 7 fields"));
        }
        let mut nums = [0.0; 6];
        for (slot, field) in nums.iter_mut().zip(&fields) {
            *slot = field.parse().map_err(|_| bad(line, "bad number"))?;
        }
        let saturated = match fields[6] {
            "0" => false,
            "1" => true,
            _ => return Err(bad(line, "saturated must be 0 or 1")),
        };
        samples.push(TraceSample {
            t: nums[0],
            theta: nums[1],
            omega: nums[2],
            omega_dot: nums[3],
            tau_desired: nums[4],
            tau_achieved: nums[5],
            saturated,
        });
    }
    Ok(ConditionTrace {
        condition: path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
        samples,
        ..Default::default()
    })
}
