//! Element models: memory-cell resistance pairs, the tail current source,
//! the bit-line sense model, integrating capacitors and PWM word-line drive.
//!
//! Everything here is an immutable value type. Quantities are plain SI `f64`s.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Resistances of one signed weight.
///
/// A weight is realized by four cells: (WL, BLP) = `r_p`, (WL, BLN) = `r_n`,
/// (WLB, BLP) = `r_n`, (WLB, BLN) = `r_p`. Only the two distinct values are
/// stored since the diagonal cells are programmed identically.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResistancePair {
    pub r_p: f64,
    pub r_n: f64,
}

impl ResistancePair {
    pub fn new(r_p: f64, r_n: f64) -> Result<Self> {
        for (name, r) in [("r_p", r_p), ("r_n", r_n)] {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::InvalidDevice(format!("{name} = {r} must be positive and finite")));
            }
        }
        Ok(Self { r_p, r_n })
    }

    /// Like [`ResistancePair::new`] but also enforces device bounds.
    pub fn with_bounds(r_p: f64, r_n: f64, r_min: f64, r_max: f64) -> Result<Self> {
        let pair = Self::new(r_p, r_n)?;
        if !pair.within(r_min, r_max) {
            return Err(Error::InvalidDevice(format!(
                "pair ({r_p}, {r_n}) outside device bounds [{r_min}, {r_max}]"
            )));
        }
        Ok(pair)
    }

    pub fn within(&self, r_min: f64, r_max: f64) -> bool {
        [self.r_p, self.r_n].iter().all(|&r| r >= r_min && r <= r_max)
    }

    pub fn g_p(&self) -> f64 {
        1.0 / self.r_p
    }

    pub fn g_n(&self) -> f64 {
        1.0 / self.r_n
    }

    /// Row conductance sum `G_p + G_n` (the inverse of the row parallel resistance).
    pub fn g_sum(&self) -> f64 {
        self.g_p() + self.g_n()
    }

    pub fn r_sum(&self) -> f64 {
        self.r_p + self.r_n
    }

    pub fn swapped(&self) -> Self {
        Self { r_p: self.r_n, r_n: self.r_p }
    }
}

/// Signed weight realized by a pair: `(r_n - r_p) / (r_p + r_n)`.
///
/// Under current limiting with matched rows this equals
/// `(I_p,i - I_n,i) * N / I_bias`.
pub fn effective_weight(pair: &ResistancePair) -> f64 {
    (pair.r_n - pair.r_p) / (pair.r_p + pair.r_n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriveMode {
    /// WL high for `t < x_i`, WLB high for the rest of the window.
    Complementary,
    /// WL only; the row is disconnected after `x_i`.
    WlOnly,
}

/// Connection of a row's cells to the bit lines during one segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowState {
    /// WL active: `r_p` on the positive line, `r_n` on the negative line.
    P,
    /// WLB active: paths swapped.
    Neg,
    Off,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PwmDrive {
    x: Vec<f64>,
    x_max: f64,
    mode: DriveMode,
}

impl PwmDrive {
    pub fn new(x: Vec<f64>, x_max: f64, mode: DriveMode) -> Result<Self> {
        if !(x_max.is_finite() && x_max > 0.0) {
            return Err(Error::InvalidDrive(format!("x_max = {x_max} must be positive")));
        }
        if let Some((row, &xi)) = x
            .iter()
            .enumerate()
            .find(|(_, &xi)| !(xi.is_finite() && (0.0..=x_max).contains(&xi)))
        {
            return Err(Error::InvalidDrive(format!(
                "row {row}: pulse width {xi} s outside [0, {x_max}] s"
            )));
        }
        Ok(Self { x, x_max, mode })
    }

    pub fn complementary(x: Vec<f64>, x_max: f64) -> Result<Self> {
        Self::new(x, x_max, DriveMode::Complementary)
    }

    pub fn pulses(&self) -> &[f64] {
        &self.x
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn mode(&self) -> DriveMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn with_mode(&self, mode: DriveMode) -> Self {
        Self { mode, ..self.clone() }
    }

    /// Sorted, deduplicated segment boundaries `{0, x_max} ∪ {x_i : 0 < x_i < x_max}`.
    ///
    /// Within each consecutive pair every row holds a constant WL/WLB state.
    pub fn edges(&self) -> Vec<f64> {
        let mut edges = Vec::with_capacity(self.x.len() + 2);
        edges.push(0.0);
        edges.extend(self.x.iter().copied().filter(|&xi| xi > 0.0 && xi < self.x_max));
        edges.push(self.x_max);
        edges.sort_by(f64::total_cmp);
        edges.dedup();
        edges
    }

    /// State of `row` at time `t`, for `0 <= t < x_max`.
    pub fn row_state(&self, row: usize, t: f64) -> RowState {
        debug_assert!((0.0..self.x_max).contains(&t), "t = {t} outside [0, x_max)");
        if t < self.x[row] {
            RowState::P
        } else {
            match self.mode {
                DriveMode::Complementary => RowState::Neg,
                DriveMode::WlOnly => RowState::Off,
            }
        }
    }

    /// All row states for the segment starting at `t`.
    pub fn states_at(&self, t: f64) -> Vec<RowState> {
        (0..self.x.len()).map(|row| self.row_state(row, t)).collect()
    }
}

/// Free-function form of [`PwmDrive::edges`].
pub fn pwm_edges(drive: &PwmDrive) -> Vec<f64> {
    drive.edges()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurrentSourceSpec {
    pub i_bias: f64,
    /// Shunt output resistance of the tail source; `None` is an ideal source.
    pub r_out: Option<f64>,
    /// Rail that the bit-line sense elements hang from.
    pub v_supply: f64,
}

impl CurrentSourceSpec {
    pub fn new(i_bias: f64, r_out: Option<f64>, v_supply: f64) -> Result<Self> {
        if !(i_bias.is_finite() && i_bias > 0.0) {
            return Err(Error::InvalidDevice(format!("i_bias = {i_bias} must be positive")));
        }
        if let Some(r) = r_out {
            if !(r > 0.0) {
                return Err(Error::InvalidDevice(format!("r_out = {r} must be positive")));
            }
        }
        if !v_supply.is_finite() {
            return Err(Error::InvalidDevice(format!("v_supply = {v_supply}")));
        }
        Ok(Self { i_bias, r_out, v_supply })
    }

    pub fn ideal(i_bias: f64) -> Result<Self> {
        Self::new(i_bias, None, 0.8)
    }

    pub fn with_i_bias(&self, i_bias: f64) -> Result<Self> {
        Self::new(i_bias, self.r_out, self.v_supply)
    }

    /// Output conductance; zero for an ideal source.
    pub fn g_out(&self) -> f64 {
        self.r_out.map_or(0.0, |r| if r.is_infinite() { 0.0 } else { 1.0 / r })
    }
}

/// Behavioral stand-in for the current mirrors that sense each bit line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SenseSpec {
    /// Bit lines held at a perfect virtual ground.
    Ideal,
    /// Fixed series resistance between each bit line and the sense rail.
    ConstantR(f64),
    /// Resistance `1 / (k * sqrt(i_bias))`, shrinking as the bias grows.
    GmScaled(f64),
}

impl SenseSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SenseSpec::Ideal => Ok(()),
            SenseSpec::ConstantR(r) if r > 0.0 && r.is_finite() => Ok(()),
            SenseSpec::GmScaled(k) if k > 0.0 && k.is_finite() => Ok(()),
            other => Err(Error::InvalidDevice(format!("sense model {other:?}"))),
        }
    }

    /// Sense resistance at the given bias. Zero for [`SenseSpec::Ideal`].
    pub fn resolve(&self, i_bias: f64) -> f64 {
        match *self {
            SenseSpec::Ideal => 0.0,
            SenseSpec::ConstantR(r) => r,
            SenseSpec::GmScaled(k) => 1.0 / (k * i_bias.sqrt()),
        }
    }

    pub fn is_ideal(&self) -> bool {
        matches!(self, SenseSpec::Ideal)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacitorSpec {
    pub c: f64,
    pub v_init: f64,
}

impl CapacitorSpec {
    pub fn new(c: f64, v_init: f64, v_supply: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidDevice(format!("capacitance {c} must be positive")));
        }
        if !(0.0..=v_supply).contains(&v_init) {
            return Err(Error::InvalidDevice(format!(
                "v_init = {v_init} outside [0, v_supply = {v_supply}]"
            )));
        }
        Ok(Self { c, v_init })
    }
}
