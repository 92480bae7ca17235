//! Event-driven transient simulation of one column over the PWM window.
//!
//! Segment boundaries are the pulse edges, so there is no timestep. A CuLD
//! column charges its two capacitors with constant mirror-copied currents
//! inside each segment (exact linear ramps). A conventional column lets each
//! precharged bit-line capacitor discharge through its active cells (exact
//! exponentials).

use serde::{Deserialize, Serialize};

use crate::devices::{CapacitorSpec, CurrentSourceSpec, PwmDrive, ResistancePair, SenseSpec};
use crate::error::{Error, Result};
use crate::network::{ideal_lines, nonideal_lines, LineCurrents};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// Four cells per weight, WL/WLB drive, shared current-limited tail.
    Culd,
    /// Two cells per weight on precharged bit lines, WL drive only.
    Conventional,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightColumn {
    rows: Vec<ResistancePair>,
    source: CurrentSourceSpec,
    sense: SenseSpec,
    cap: CapacitorSpec,
    topology: Topology,
}

impl WeightColumn {
    /// The matching constraint is not enforced here; unmatched columns are
    /// legal and simply stop obeying the 1/N law.
    pub fn new(
        rows: Vec<ResistancePair>,
        source: CurrentSourceSpec,
        sense: SenseSpec,
        cap: CapacitorSpec,
        topology: Topology,
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyColumn);
        }
        sense.validate()?;
        Ok(Self { rows, source, sense, cap, topology })
    }

    pub fn rows(&self) -> &[ResistancePair] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn source(&self) -> &CurrentSourceSpec {
        &self.source
    }

    pub fn sense(&self) -> &SenseSpec {
        &self.sense
    }

    pub fn cap(&self) -> &CapacitorSpec {
        &self.cap
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn with_topology(&self, topology: Topology) -> Self {
        Self { topology, ..self.clone() }
    }

    pub fn with_rows(&self, rows: Vec<ResistancePair>) -> Result<Self> {
        Self::new(rows, self.source, self.sense, self.cap, self.topology)
    }

    pub fn with_source(&self, source: CurrentSourceSpec) -> Self {
        Self { source, ..self.clone() }
    }

    pub fn with_sense(&self, sense: SenseSpec) -> Result<Self> {
        sense.validate()?;
        Ok(Self { sense, ..self.clone() })
    }

    pub fn with_cap(&self, cap: CapacitorSpec) -> Self {
        Self { cap, ..self.clone() }
    }
}

/// Repeats rows and pulses `k` times, keeping each row paired with its pulse.
pub fn replicate(column: &WeightColumn, drive: &PwmDrive, k: usize) -> Result<(WeightColumn, PwmDrive)> {
    let rows = column.rows().repeat(k);
    let pulses = drive.pulses().repeat(k);
    Ok((column.with_rows(rows)?, PwmDrive::new(pulses, drive.x_max(), drive.mode())?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSegment {
    pub t_start: f64,
    pub t_end: f64,
    /// Positive-line current. Constant within a CuLD segment; the
    /// charge-averaged discharge current for conventional columns.
    pub i_p: f64,
    pub i_n: f64,
    pub v_p_end: f64,
    pub v_n_end: f64,
    /// Discharge rates `1/τ` of each line (conventional only, else zero).
    pub rate_p: f64,
    pub rate_n: f64,
}

/// A CuLD capacitor exceeded the supply. The integrator is not clamped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RailWarning {
    pub positive_line: bool,
    pub t: f64,
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransientTrace {
    pub topology: Topology,
    pub c: f64,
    pub v_init: f64,
    pub segments: Vec<TraceSegment>,
    pub final_v_diff: f64,
    pub warnings: Vec<RailWarning>,
}

impl TransientTrace {
    pub fn x_max(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.t_end)
    }

    /// Voltages `(v_p, v_n)` at time `t`.
    pub fn voltages_at(&self, t: f64) -> Result<(f64, f64)> {
        let t_max = self.x_max();
        if !(0.0..=t_max).contains(&t) {
            return Err(Error::TimeOutOfRange { t, t_max });
        }
        let (mut v_p, mut v_n) = (self.v_init, self.v_init);
        for seg in &self.segments {
            if t >= seg.t_end {
                v_p = seg.v_p_end;
                v_n = seg.v_n_end;
                continue;
            }
            let dt = t - seg.t_start;
            return Ok(match self.topology {
                Topology::Culd => (v_p + seg.i_p * dt / self.c, v_n + seg.i_n * dt / self.c),
                Topology::Conventional => (v_p * (-seg.rate_p * dt).exp(), v_n * (-seg.rate_n * dt).exp()),
            });
        }
        Ok((v_p, v_n))
    }
}

/// Differential output `v_p - v_n` at time `t`.
pub fn readout(trace: &TransientTrace, t: f64) -> Result<f64> {
    if t == trace.x_max() {
        return Ok(trace.final_v_diff);
    }
    let (v_p, v_n) = trace.voltages_at(t)?;
    Ok(v_p - v_n)
}

/// Runs the column over `[0, x_max]`.
pub fn simulate(column: &WeightColumn, drive: &PwmDrive) -> Result<TransientTrace> {
    if drive.len() != column.len() {
        return Err(Error::LengthMismatch { expected: column.len(), got: drive.len() });
    }
    let trace = match column.topology() {
        Topology::Culd => simulate_culd(column, drive),
        Topology::Conventional => simulate_conventional(column, drive),
    };
    if !trace.final_v_diff.is_finite() {
        return Err(Error::Numeric(format!("final v_diff = {}", trace.final_v_diff)));
    }
    Ok(trace)
}

fn simulate_culd(column: &WeightColumn, drive: &PwmDrive) -> TransientTrace {
    let source = column.source();
    let ideal = column.sense().is_ideal() && source.g_out() == 0.0;
    let r_s = column.sense().resolve(source.i_bias);
    let complementary = drive.mode() == crate::devices::DriveMode::Complementary;
    let c = column.cap().c;
    let v_init = column.cap().v_init;
    let v_rail = source.v_supply;

    let edges = drive.edges();
    let mut segments = Vec::with_capacity(edges.len() - 1);
    let mut warnings = Vec::new();
    let (mut v_p, mut v_n) = (v_init, v_init);
    for w in edges.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let (mut a, mut b) = (0.0, 0.0);
        for (pair, &x) in column.rows().iter().zip(drive.pulses()) {
            if t0 < x {
                a += pair.g_p();
                b += pair.g_n();
            } else if complementary {
                a += pair.g_n();
                b += pair.g_p();
            }
        }
        let LineCurrents { i_p, i_n, .. } =
            if ideal { ideal_lines(a, b, source.i_bias) } else { nonideal_lines(a, b, source, r_s) };
        let dt = t1 - t0;
        v_p += i_p * dt / c;
        v_n += i_n * dt / c;
        for (positive_line, v) in [(true, v_p), (false, v_n)] {
            if v.abs() > v_rail && !warnings.iter().any(|w: &RailWarning| w.positive_line == positive_line) {
                warnings.push(RailWarning { positive_line, t: t1, v });
            }
        }
        segments.push(TraceSegment {
            t_start: t0,
            t_end: t1,
            i_p,
            i_n,
            v_p_end: v_p,
            v_n_end: v_n,
            rate_p: 0.0,
            rate_n: 0.0,
        });
    }
    TransientTrace { topology: Topology::Culd, c, v_init, segments, final_v_diff: v_p - v_n, warnings }
}

fn simulate_conventional(column: &WeightColumn, drive: &PwmDrive) -> TransientTrace {
    let c = column.cap().c;
    let v_init = column.cap().v_init;
    let edges = drive.edges();
    let mut segments = Vec::with_capacity(edges.len() - 1);
    let (mut v_p, mut v_n) = (v_init, v_init);
    for w in edges.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let dt = t1 - t0;
        // 1/R_eq of each line over the cells whose WL is still high.
        let (g_p, g_n) = column
            .rows()
            .iter()
            .zip(drive.pulses())
            .filter(|(_, &x)| t0 < x)
            .fold((0.0, 0.0), |(gp, gn), (pair, _)| (gp + pair.g_p(), gn + pair.g_n()));
        let (rate_p, rate_n) = (g_p / c, g_n / c);
        let (p_end, n_end) = (v_p * (-rate_p * dt).exp(), v_n * (-rate_n * dt).exp());
        segments.push(TraceSegment {
            t_start: t0,
            t_end: t1,
            i_p: c * (v_p - p_end) / dt,
            i_n: c * (v_n - n_end) / dt,
            v_p_end: p_end,
            v_n_end: n_end,
            rate_p,
            rate_n,
        });
        v_p = p_end;
        v_n = n_end;
    }
    TransientTrace { topology: Topology::Conventional, c, v_init, segments, final_v_diff: v_p - v_n, warnings: Vec::new() }
}
