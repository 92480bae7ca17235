//! Weight and input codecs.
//!
//! Weights map to resistance pairs with a fixed row conductance sum
//! `G_p + G_n = g_total`, so every row of a column has the same parallel
//! resistance. Inputs map to PWM pulse widths with `s = 0` at `x_max / 2`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::devices::{effective_weight, CapacitorSpec, CurrentSourceSpec, ResistancePair, SenseSpec};
use crate::engine::{Topology, WeightColumn};
use crate::error::{Error, Result};

/// Row conductance sum read off the 10 MΩ / 100 kΩ operating point.
pub const DEFAULT_G_TOTAL: f64 = 10.1e-6;
pub const DEFAULT_R_MIN: f64 = 100e3;
pub const DEFAULT_R_MAX: f64 = 10e6;

// Slack for float overshoot when a weight sits exactly on the range limit.
const BOUND_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightCodec {
    pub g_total: f64,
    pub r_min: f64,
    pub r_max: f64,
}

impl Default for WeightCodec {
    fn default() -> Self {
        Self { g_total: DEFAULT_G_TOTAL, r_min: DEFAULT_R_MIN, r_max: DEFAULT_R_MAX }
    }
}

impl WeightCodec {
    pub fn new(g_total: f64, r_min: f64, r_max: f64) -> Result<Self> {
        let codec = Self { g_total, r_min, r_max };
        codec.validate()?;
        Ok(codec)
    }

    pub fn validate(&self) -> Result<()> {
        let Self { g_total, r_min, r_max } = *self;
        if !(g_total > 0.0 && g_total.is_finite()) {
            return Err(Error::InvalidCodec(format!("g_total = {g_total} must be positive")));
        }
        if !(r_min > 0.0 && r_min < r_max && r_max.is_finite()) {
            return Err(Error::InvalidCodec(format!("need 0 < r_min < r_max, got [{r_min}, {r_max}]")));
        }
        let half = g_total / 2.0;
        if !(1.0 / r_max <= half && half <= 1.0 / r_min) {
            return Err(Error::InvalidCodec(format!(
                "g_total/2 = {half} S not within [1/r_max, 1/r_min] = [{}, {}] S",
                1.0 / r_max,
                1.0 / r_min
            )));
        }
        Ok(())
    }

    /// Largest representable |w|.
    ///
    /// The `r_max` bound on the weaker cell gives `1 - 2/(r_max g)`; the
    /// `r_min` bound on the stronger cell gives `2/(r_min g) - 1`. Both
    /// coincide when `g_total = 1/r_min + 1/r_max`.
    pub fn w_lim(&self) -> f64 {
        let from_r_max = 1.0 - 2.0 / (self.r_max * self.g_total);
        let from_r_min = 2.0 / (self.r_min * self.g_total) - 1.0;
        from_r_max.min(from_r_min)
    }

    fn clamp_r(&self, r: f64) -> f64 {
        if r > self.r_max && r <= self.r_max * (1.0 + BOUND_SLACK) {
            self.r_max
        } else if r < self.r_min && r >= self.r_min * (1.0 - BOUND_SLACK) {
            self.r_min
        } else {
            r
        }
    }
}

/// Splits `g_total` as `G_p = g(1+w)/2`, `G_n = g(1-w)/2`.
pub fn weight_to_pair(w: f64, codec: &WeightCodec) -> Result<ResistancePair> {
    codec.validate()?;
    let limit = codec.w_lim();
    if !(w.abs() <= limit + BOUND_SLACK) {
        return Err(Error::WeightOutOfRange { weight: w, limit });
    }
    let r_p = codec.clamp_r(2.0 / (codec.g_total * (1.0 + w)));
    let r_n = codec.clamp_r(2.0 / (codec.g_total * (1.0 - w)));
    ResistancePair::with_bounds(r_p, r_n, codec.r_min, codec.r_max)
}

pub fn pair_to_weight(pair: &ResistancePair) -> f64 {
    effective_weight(pair)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Resolution {
    Continuous,
    Bits(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputCodec {
    pub x_max: f64,
    pub resolution: Resolution,
}

impl InputCodec {
    pub fn new(x_max: f64, resolution: Resolution) -> Result<Self> {
        if !(x_max > 0.0 && x_max.is_finite()) {
            return Err(Error::InvalidDrive(format!("x_max = {x_max} must be positive")));
        }
        if let Resolution::Bits(b) = resolution {
            if !(1..=52).contains(&b) {
                return Err(Error::InvalidDrive(format!("resolution_bits = {b} must be in 1..=52")));
            }
        }
        Ok(Self { x_max, resolution })
    }

    pub fn continuous(x_max: f64) -> Result<Self> {
        Self::new(x_max, Resolution::Continuous)
    }

    /// Number of intervals between the quantizer's levels (`2^b - 1`).
    pub fn intervals(&self) -> Option<f64> {
        match self.resolution {
            Resolution::Continuous => None,
            Resolution::Bits(b) => Some(((1u64 << b) - 1) as f64),
        }
    }
}

/// `X = x_max (1 + s) / 2`, optionally snapped to the nearest of `2^b` levels
/// spanning `[0, x_max]` (ties away from zero).
pub fn input_to_pulse(s: f64, codec: &InputCodec) -> Result<f64> {
    if !(s.abs() <= 1.0) {
        return Err(Error::InputOutOfRange(s));
    }
    let frac = (1.0 + s) / 2.0;
    let x = match codec.intervals() {
        None => codec.x_max * frac,
        Some(levels) => (frac * levels).round() / levels * codec.x_max,
    };
    Ok(x.clamp(0.0, codec.x_max))
}

/// Inverse map `(2x - x_max) / x_max`.
pub fn pulse_to_input(x: f64, codec: &InputCodec) -> Result<f64> {
    if !(0.0..=codec.x_max).contains(&x) {
        return Err(Error::InputOutOfRange(x));
    }
    Ok((2.0 * x - codec.x_max) / codec.x_max)
}

/// Maps weights through `codec` and assembles a current-limited column.
pub fn build_column(
    weights: &[f64],
    codec: &WeightCodec,
    source: CurrentSourceSpec,
    sense: SenseSpec,
    cap: CapacitorSpec,
) -> Result<WeightColumn> {
    if weights.is_empty() {
        return Err(Error::EmptyColumn);
    }
    let rows = weights
        .iter()
        .map(|&w| weight_to_pair(w, codec))
        .collect::<Result<Vec<_>>>()?;
    WeightColumn::new(rows, source, sense, cap, Topology::Culd)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchingReport {
    pub mean_g_sum: f64,
    pub tol: f64,
    /// `(row, relative deviation)` for every row above tolerance.
    pub offenders: Vec<(usize, f64)>,
    pub max_deviation: f64,
}

impl fmt::Display for MatchingReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "mean row conductance sum {:.9e} S, tolerance {:.3e}, max deviation {:.6e}",
            self.mean_g_sum, self.tol, self.max_deviation
        )?;
        for (row, dev) in &self.offenders {
            writeln!(f, "  row {row}: relative deviation {dev:.6e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Matching {
    Ok { max_deviation: f64 },
    Violation(MatchingReport),
}

impl Matching {
    pub fn is_ok(&self) -> bool {
        matches!(self, Matching::Ok { .. })
    }
}

/// Checks that every row has the same conductance sum, within relative `tol`
/// of the column mean.
pub fn check_matching(rows: &[ResistancePair], tol: f64) -> Result<Matching> {
    if rows.is_empty() {
        return Err(Error::EmptyColumn);
    }
    let sums: Vec<f64> = rows.iter().map(ResistancePair::g_sum).collect();
    let mean = sums.iter().sum::<f64>() / sums.len() as f64;
    let deviations: Vec<f64> = sums.iter().map(|g| (g - mean).abs() / mean).collect();
    let max_deviation = deviations.iter().copied().fold(0.0, f64::max);
    // A single row is its own mean; rounding in the division must not trip tol = 0.
    if rows.len() == 1 || max_deviation <= tol {
        return Ok(Matching::Ok { max_deviation });
    }
    let offenders = deviations
        .iter()
        .enumerate()
        .filter(|(_, &d)| d > tol)
        .map(|(i, &d)| (i, d))
        .collect();
    Ok(Matching::Violation(MatchingReport { mean_g_sum: mean, tol, offenders, max_deviation }))
}
