//! Closed-form MAC law, figure-style parameter sweeps, linearity fits and the
//! end-to-end MAC pipeline.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::devices::{effective_weight, CapacitorSpec, CurrentSourceSpec, PwmDrive, ResistancePair, RowState, SenseSpec};
use crate::engine::{simulate, Topology, WeightColumn};
use crate::error::{Error, Result};
use crate::mapping::{build_column, check_matching, input_to_pulse, InputCodec, Matching, WeightCodec};
use crate::network::solve_segment;

/// Matching tolerance required before the closed form is trusted.
pub const ORACLE_MATCHING_TOL: f64 = 1e-9;

/// `(1/C) Σ (2 X_i - X_max)(I_p,i - I_n,i)` with `I_p,i - I_n,i = (I_bias/N) w_i`.
pub fn eq1_oracle(rows: &[ResistancePair], drive: &PwmDrive, i_bias: f64, c: f64) -> Result<f64> {
    if rows.len() != drive.len() {
        return Err(Error::LengthMismatch { expected: rows.len(), got: drive.len() });
    }
    if let Matching::Violation(report) = check_matching(rows, ORACLE_MATCHING_TOL)? {
        return Err(Error::MatchingViolated(report));
    }
    let per_row = i_bias / rows.len() as f64;
    let x_max = drive.x_max();
    let charge: f64 = rows
        .iter()
        .zip(drive.pulses())
        .map(|(pair, &x)| (2.0 * x - x_max) * per_row * effective_weight(pair))
        .sum();
    Ok(charge / c)
}

/// Bit-line current difference with every one of `n` copies of `pair` on WL.
pub fn max_idiff_n(pair: &ResistancePair, n: usize, source: &CurrentSourceSpec, sense: &SenseSpec) -> Result<f64> {
    let rows = vec![*pair; n];
    let states = vec![RowState::P; n];
    Ok(solve_segment(&rows, &states, source, sense)?.i_diff())
}

/// Single-row dynamic range: `I_p - I_n` with WL held for the whole window.
pub fn max_idiff(pair: &ResistancePair, source: &CurrentSourceSpec, sense: &SenseSpec) -> Result<f64> {
    max_idiff_n(pair, 1, source, sense)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares over `(x, y)` points.
pub fn linear_fit(points: &[(f64, f64)]) -> Result<LinearFit> {
    if points.len() < 3 {
        return Err(Error::DegenerateInput(format!("need at least 3 points, got {}", points.len())));
    }
    let n = points.len() as f64;
    let x_mean = points.iter().map(|p| p.0).sum::<f64>() / n;
    let y_mean = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (sxx, sxy) = points.iter().fold((0.0, 0.0), |(sxx, sxy), &(x, y)| {
        let dx = x - x_mean;
        (sxx + dx * dx, sxy + dx * (y - y_mean))
    });
    if sxx == 0.0 {
        return Err(Error::DegenerateInput("all x values equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let (ss_res, ss_tot) = points.iter().fold((0.0, 0.0), |(res, tot), &(x, y)| {
        let e = y - (slope * x + intercept);
        let d = y - y_mean;
        (res + e * e, tot + d * d)
    });
    // A constant series sits exactly on its (flat) fit.
    let r2 = if ss_tot == 0.0 { 1.0 } else { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) };
    Ok(LinearFit { slope, intercept, r2 })
}

/// Coefficient of determination of the least-squares line.
pub fn linearity_r2(points: &[(f64, f64)]) -> Result<f64> {
    Ok(linear_fit(points)?.r2)
}

/// How a small template of rows and pulses is stretched to `n` rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DrivePattern {
    /// Every row copies template row 0 and its pulse.
    Uniform,
    /// Odd rows follow template row 0, even rows template row 1 (1-based).
    Alternating,
}

/// Expands a template column/drive to `n` rows.
pub fn expand(column: &WeightColumn, drive: &PwmDrive, pattern: DrivePattern, n: usize) -> Result<(WeightColumn, PwmDrive)> {
    if n == 0 {
        return Err(Error::EmptyColumn);
    }
    if drive.len() != column.len() {
        return Err(Error::LengthMismatch { expected: column.len(), got: drive.len() });
    }
    let period = match pattern {
        DrivePattern::Uniform => 1,
        DrivePattern::Alternating => {
            if column.len() < 2 {
                return Err(Error::Config("alternating pattern needs two template rows".into()));
            }
            if !n.is_multiple_of(2) {
                return Err(Error::Config(format!("alternating pattern needs even N, got {n}")));
            }
            2
        }
    };
    let rows = (0..n).map(|i| column.rows()[i % period]).collect();
    let pulses = (0..n).map(|i| drive.pulses()[i % period]).collect();
    Ok((column.with_rows(rows)?, PwmDrive::new(pulses, drive.x_max(), drive.mode())?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub param: f64,
    pub metrics: Vec<f64>,
}

/// Fit of one metric column against the swept parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesFit {
    pub column: String,
    pub fit: LinearFit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis_name: String,
    pub columns: Vec<String>,
    pub rows: Vec<SweepRow>,
    pub fits: Vec<SeriesFit>,
    /// Configuration snapshot, emitted as comment lines.
    pub metadata: Vec<(String, String)>,
}

impl SweepResult {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r.metrics[idx]).collect())
    }

    pub fn params(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.param).collect()
    }
}

fn check_increasing(values: &[f64], axis: &str) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Config(format!("{axis} sweep has no values")));
    }
    if values.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Config(format!("{axis} sweep values must be strictly increasing")));
    }
    Ok(())
}

/// `final_v_diff` against row count for both topologies.
///
/// The conventional run precharges both bit lines to the supply.
pub fn sweep_n(column: &WeightColumn, drive: &PwmDrive, pattern: DrivePattern, n_values: &[usize]) -> Result<SweepResult> {
    check_increasing(&n_values.iter().map(|&n| n as f64).collect::<Vec<_>>(), "n")?;
    let v_supply = column.source().v_supply;
    let conv_cap = CapacitorSpec::new(column.cap().c, v_supply, v_supply)?;
    let rows = n_values
        .par_iter()
        .map(|&n| {
            let (col, drv) = expand(column, drive, pattern, n)?;
            let culd = simulate(&col.with_topology(Topology::Culd), &drv)?.final_v_diff;
            let conv = simulate(&col.with_topology(Topology::Conventional).with_cap(conv_cap), &drv)?.final_v_diff;
            Ok(SweepRow { param: n as f64, metrics: vec![culd, conv] })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        axis_name: "n".into(),
        columns: vec!["v_diff_culd_V".into(), "v_diff_conventional_V".into()],
        rows,
        fits: Vec::new(),
        metadata: Vec::new(),
    })
}

/// `final_v_diff` against the common pulse width, one series per row count.
///
/// All rows are driven with the same pulse. Each series gets a least-squares
/// fit (slope in V/s).
pub fn sweep_input(column: &WeightColumn, x_values: &[f64], n_values: &[usize], x_max: f64) -> Result<SweepResult> {
    check_increasing(x_values, "x")?;
    let template = column.with_rows(vec![column.rows()[0]])?;
    let series = n_values
        .par_iter()
        .map(|&n| {
            let col = template.with_rows(vec![template.rows()[0]; n])?;
            x_values
                .iter()
                .map(|&x| Ok(simulate(&col, &PwmDrive::complementary(vec![x; n], x_max)?)?.final_v_diff))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let columns: Vec<String> = n_values.iter().map(|n| format!("v_diff_n{n}_V")).collect();
    let fits = columns
        .iter()
        .zip(&series)
        .map(|(name, ys)| {
            let points: Vec<_> = x_values.iter().copied().zip(ys.iter().copied()).collect();
            Ok(SeriesFit { column: name.clone(), fit: linear_fit(&points)? })
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = x_values
        .iter()
        .enumerate()
        .map(|(i, &x)| SweepRow { param: x, metrics: series.iter().map(|s| s[i]).collect() })
        .collect();
    Ok(SweepResult { axis_name: "x_s".into(), columns, rows, fits, metadata: Vec::new() })
}

/// `max_idiff / i_bias` against bias current, one series per row count.
pub fn sweep_ibias(
    pair: &ResistancePair,
    i_bias_values: &[f64],
    n_values: &[usize],
    source: &CurrentSourceSpec,
    sense: &SenseSpec,
) -> Result<SweepResult> {
    check_increasing(i_bias_values, "ibias")?;
    let rows = i_bias_values
        .par_iter()
        .map(|&i_bias| {
            let src = source.with_i_bias(i_bias)?;
            let metrics = n_values
                .iter()
                .map(|&n| Ok(max_idiff_n(pair, n, &src, sense)? / i_bias))
                .collect::<Result<Vec<_>>>()?;
            Ok(SweepRow { param: i_bias, metrics })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        axis_name: "i_bias_A".into(),
        columns: n_values.iter().map(|n| format!("idiff_norm_n{n}")).collect(),
        rows,
        fits: Vec::new(),
        metadata: Vec::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacConfig {
    pub weight_codec: WeightCodec,
    pub input_codec: InputCodec,
    pub source: CurrentSourceSpec,
    pub sense: SenseSpec,
    pub cap: CapacitorSpec,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacResult {
    pub v_diff: f64,
    pub decoded: f64,
    pub exact: f64,
    pub abs_error: f64,
}

/// Maps, simulates and decodes one dot product.
///
/// Decoding inverts the MAC law: `decoded = v_diff N C / (x_max I_bias)`.
pub fn mac_pipeline(weights: &[f64], inputs: &[f64], config: &MacConfig) -> Result<MacResult> {
    if weights.len() != inputs.len() {
        return Err(Error::LengthMismatch { expected: weights.len(), got: inputs.len() });
    }
    let column = build_column(weights, &config.weight_codec, config.source, config.sense, config.cap)?;
    let pulses = inputs
        .iter()
        .map(|&s| input_to_pulse(s, &config.input_codec))
        .collect::<Result<Vec<_>>>()?;
    let x_max = config.input_codec.x_max;
    let drive = PwmDrive::complementary(pulses, x_max)?;
    let v_diff = simulate(&column, &drive)?.final_v_diff;
    let n = weights.len() as f64;
    let decoded = v_diff * n * config.cap.c / (x_max * config.source.i_bias);
    let exact: f64 = weights.iter().zip(inputs).map(|(w, s)| w * s).sum();
    Ok(MacResult { v_diff, decoded, exact, abs_error: (decoded - exact).abs() })
}
