//! JSON run configuration.
//!
//! Every physical quantity carries its SI unit in the key name
//! (`x_max_s`, `i_bias_a`, `c_f`, `r_p_ohm`, ...).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analytics::{DrivePattern, MacConfig};
use crate::devices::{CapacitorSpec, CurrentSourceSpec, DriveMode, PwmDrive, ResistancePair, SenseSpec};
use crate::engine::{Topology, WeightColumn};
use crate::error::{Error, Result};
use crate::mapping::{build_column, input_to_pulse, InputCodec, Resolution, WeightCodec};

pub const DEFAULT_CHECK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_topology")]
    pub topology: Topology,
    pub rows: RowsConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drive: Option<DriveConfig>,
    pub source: SourceConfig,
    #[serde(default)]
    pub sense: SenseConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<CapConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mac: Option<MacSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn default_topology() -> Topology {
    Topology::Culd
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairConfig {
    pub r_p_ohm: f64,
    pub r_n_ohm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightCodecConfig {
    pub g_total_s: f64,
    pub r_min_ohm: f64,
    pub r_max_ohm: f64,
}

/// Either explicit resistances or weights mapped through a codec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resistances: Option<Vec<PairConfig>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub codec: Option<WeightCodecConfig>,
}

/// Either explicit pulse widths or signed inputs mapped through the input codec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveConfig {
    pub x_max_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulses_s: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inputs: Option<Vec<f64>>,
    /// Omitted for a continuous (unquantized) input codec.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution_bits: Option<u32>,
    #[serde(default = "default_mode")]
    pub mode: DriveMode,
}

fn default_mode() -> DriveMode {
    DriveMode::Complementary
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub i_bias_a: f64,
    /// Omitted or null for an ideal source.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_out_ohm: Option<f64>,
    #[serde(default = "default_supply")]
    pub v_supply_v: f64,
}

fn default_supply() -> f64 {
    0.8
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum SenseConfig {
    #[default]
    Ideal,
    ConstantR { r_s_ohm: f64 },
    GmScaled { k_a_per_v2: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapConfig {
    pub c_f: f64,
    /// Defaults to 0 for CuLD and to the supply (precharge) for conventional columns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_init_v: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axis", rename_all = "snake_case", deny_unknown_fields)]
pub enum SweepConfig {
    N {
        values: Vec<usize>,
        #[serde(default = "default_pattern")]
        pattern: DrivePattern,
    },
    X {
        values_s: Vec<f64>,
        n_values: Vec<usize>,
    },
    Ibias {
        values_a: Vec<f64>,
        n_values: Vec<usize>,
    },
}

fn default_pattern() -> DrivePattern {
    DrivePattern::Alternating
}

/// Random MAC workload drawn from the run seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MacSection {
    pub random_n: usize,
    #[serde(default = "one")]
    pub columns: usize,
    #[serde(default = "default_weight_limit")]
    pub weight_limit: f64,
}

fn one() -> usize {
    1
}

fn default_weight_limit() -> f64 {
    0.8
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("reading {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Canonical single-line JSON used in output metadata.
    pub fn snapshot(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.rows.resistances, &self.rows.weights) {
            (Some(_), None) if self.rows.codec.is_some() => {
                return Err(Error::Config("rows.codec only applies to rows.weights".into()))
            }
            (Some(_), None) | (None, Some(_)) => {}
            _ => return Err(Error::Config("rows needs exactly one of `resistances` or `weights`".into())),
        }
        if let Some(d) = &self.drive {
            match (&d.pulses_s, &d.inputs) {
                (Some(_), None) if d.resolution_bits.is_some() => {
                    return Err(Error::Config("drive.resolution_bits only applies to drive.inputs".into()))
                }
                (Some(_), None) | (None, Some(_)) => {}
                _ => return Err(Error::Config("drive needs exactly one of `pulses_s` or `inputs`".into())),
            }
        }
        Ok(())
    }

    pub fn source_spec(&self) -> Result<CurrentSourceSpec> {
        CurrentSourceSpec::new(self.source.i_bias_a, self.source.r_out_ohm, self.source.v_supply_v)
    }

    pub fn sense_spec(&self) -> Result<SenseSpec> {
        let s = match self.sense {
            SenseConfig::Ideal => SenseSpec::Ideal,
            SenseConfig::ConstantR { r_s_ohm } => SenseSpec::ConstantR(r_s_ohm),
            SenseConfig::GmScaled { k_a_per_v2 } => SenseSpec::GmScaled(k_a_per_v2),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn cap_spec(&self) -> Result<CapacitorSpec> {
        let cap = self.cap.ok_or_else(|| Error::Config("missing `cap` section".into()))?;
        let v_supply = self.source.v_supply_v;
        let v_init = cap.v_init_v.unwrap_or(match self.topology {
            Topology::Culd => 0.0,
            Topology::Conventional => v_supply,
        });
        CapacitorSpec::new(cap.c_f, v_init, v_supply)
    }

    pub fn weight_codec(&self) -> Result<WeightCodec> {
        match self.rows.codec {
            None => Ok(WeightCodec::default()),
            Some(c) => WeightCodec::new(c.g_total_s, c.r_min_ohm, c.r_max_ohm),
        }
    }

    pub fn input_codec(&self) -> Result<InputCodec> {
        let d = self.drive_config()?;
        let res = d.resolution_bits.map_or(Resolution::Continuous, Resolution::Bits);
        InputCodec::new(d.x_max_s, res)
    }

    fn drive_config(&self) -> Result<&DriveConfig> {
        self.drive.as_ref().ok_or_else(|| Error::Config("missing `drive` section".into()))
    }

    pub fn pairs(&self) -> Result<Vec<ResistancePair>> {
        match (&self.rows.resistances, &self.rows.weights) {
            (Some(rs), _) => rs.iter().map(|p| ResistancePair::new(p.r_p_ohm, p.r_n_ohm)).collect(),
            (None, Some(ws)) => {
                let codec = self.weight_codec()?;
                ws.iter().map(|&w| crate::mapping::weight_to_pair(w, &codec)).collect()
            }
            (None, None) => Err(Error::Config("rows has neither resistances nor weights".into())),
        }
    }

    pub fn column(&self) -> Result<WeightColumn> {
        let (source, sense, cap) = (self.source_spec()?, self.sense_spec()?, self.cap_spec()?);
        match &self.rows.weights {
            Some(ws) => Ok(build_column(ws, &self.weight_codec()?, source, sense, cap)?.with_topology(self.topology)),
            None => WeightColumn::new(self.pairs()?, source, sense, cap, self.topology),
        }
    }

    pub fn pwm_drive(&self) -> Result<PwmDrive> {
        let d = self.drive_config()?;
        let pulses = match (&d.pulses_s, &d.inputs) {
            (Some(p), _) => p.clone(),
            (None, Some(inputs)) => {
                let codec = self.input_codec()?;
                inputs.iter().map(|&s| input_to_pulse(s, &codec)).collect::<Result<_>>()?
            }
            (None, None) => return Err(Error::Config("drive has neither pulses_s nor inputs".into())),
        };
        PwmDrive::new(pulses, d.x_max_s, d.mode)
    }

    pub fn mac_config(&self) -> Result<MacConfig> {
        Ok(MacConfig {
            weight_codec: self.weight_codec()?,
            input_codec: self.input_codec()?,
            source: self.source_spec()?,
            sense: self.sense_spec()?,
            cap: self.cap_spec()?,
        })
    }
}
