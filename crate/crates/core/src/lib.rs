//! Behavioral simulator for current-based compute-in-memory MAC columns.
//!
//! Two column topologies are modeled:
//!
//! * **CuLD** (current-limiting differential): each signed weight is four
//!   cells, word lines are driven by a PWM signal and its complement, and a
//!   shared tail source limits the total array current to `I_bias`. The
//!   capacitor difference after the window follows
//!   `V_p - V_n = (1/C) Σ (2 X_i - X_max)(I_p,i - I_n,i)`.
//! * **Conventional**: two cells per weight discharge precharged bit-line
//!   capacitors, which collapses as the row count grows.
//!
//! The modules follow the data flow: [`devices`] → [`mapping`] → [`network`]
//! → [`engine`] → [`analytics`], with [`config`] and [`cli`] on top.

pub mod analytics;
pub mod cli;
pub mod config;
pub mod devices;
pub mod engine;
pub mod error;
pub mod mapping;
pub mod network;

pub use analytics::{
    eq1_oracle, linear_fit, linearity_r2, mac_pipeline, max_idiff, max_idiff_n, sweep_ibias, sweep_input, sweep_n,
    DrivePattern, LinearFit, MacConfig, MacResult, SweepResult,
};
pub use devices::{
    effective_weight, pwm_edges, CapacitorSpec, CurrentSourceSpec, DriveMode, PwmDrive, ResistancePair, RowState,
    SenseSpec,
};
pub use engine::{readout, replicate, simulate, Topology, TransientTrace, WeightColumn};
pub use error::{Error, Result};
pub use mapping::{
    build_column, check_matching, input_to_pulse, pair_to_weight, pulse_to_input, weight_to_pair, InputCodec,
    Matching, MatchingReport, Resolution, WeightCodec,
};
pub use network::{attenuation_closed_form, conventional_req, solve_ideal, solve_nonideal, SegmentSolution};
