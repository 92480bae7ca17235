//! Subcommand implementations and CSV rendering.
//!
//! Commands return their output as strings; the binary decides where it goes.
//! Numbers are written with `{:.9e}` (ten significant digits, `.` separator,
//! LF line endings) so identical inputs give byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analytics::{mac_pipeline, sweep_ibias, sweep_input, sweep_n, MacResult, SweepResult};
use crate::config::{RunConfig, SweepConfig, DEFAULT_CHECK_TOL};
use crate::engine::{simulate, TransientTrace};
use crate::error::{Error, Result};
use crate::mapping::{check_matching, Matching};

pub const EXIT_OK: i32 = 0;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CommandOutput {
    /// Primary artifact (CSV or report text).
    pub body: String,
    /// One-line result for the console.
    pub summary: String,
    /// Human-readable notes for stderr.
    pub diagnostics: Vec<String>,
}

fn num(v: f64) -> String {
    format!("{v:.9e}")
}

pub fn trace_csv(trace: &TransientTrace) -> String {
    let mut out = String::from("t_start_s,t_end_s,i_p_A,i_n_A,v_p_V,v_n_V\n");
    for s in &trace.segments {
        let cells = [s.t_start, s.t_end, s.i_p, s.i_n, s.v_p_end, s.v_n_end].map(num);
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn sweep_csv(result: &SweepResult) -> String {
    let mut out = String::new();
    for (key, value) in &result.metadata {
        let _ = writeln!(out, "# {key}: {value}");
    }
    for f in &result.fits {
        let _ = writeln!(
            out,
            "# fit {}: slope={} intercept={} r2={}",
            f.column,
            num(f.fit.slope),
            num(f.fit.intercept),
            num(f.fit.r2)
        );
    }
    out.push_str(&result.axis_name);
    for c in &result.columns {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for row in &result.rows {
        out.push_str(&num(row.param));
        for &m in &row.metrics {
            out.push(',');
            out.push_str(&num(m));
        }
        out.push('\n');
    }
    out
}

pub fn mac_csv(results: &[MacResult]) -> String {
    let mut out = String::from("column,v_diff_V,decoded,exact,abs_error\n");
    for (i, r) in results.iter().enumerate() {
        let _ = writeln!(out, "{i},{},{},{},{}", num(r.v_diff), num(r.decoded), num(r.exact), num(r.abs_error));
    }
    out
}

fn seed_of(cfg: &RunConfig, seed: Option<u64>) -> u64 {
    seed.or(cfg.seed).unwrap_or(0)
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<CommandOutput> {
    let column = cfg.column()?;
    let drive = cfg.pwm_drive()?;
    let trace = simulate(&column, &drive)?;
    let diagnostics = trace
        .warnings
        .iter()
        .map(|w| {
            format!(
                "warning: {} capacitor reached {:.6} V at t = {:.6e} s, beyond the {} V supply",
                if w.positive_line { "positive" } else { "negative" },
                w.v,
                w.t,
                column.source().v_supply
            )
        })
        .collect();
    Ok(CommandOutput {
        body: trace_csv(&trace),
        summary: format!("v_diff={:.6e}", trace.final_v_diff),
        diagnostics,
    })
}

pub fn run_sweep(cfg: &RunConfig, seed: Option<u64>) -> Result<SweepResult> {
    let sweep = cfg.sweep.as_ref().ok_or_else(|| Error::Config("missing `sweep` section".into()))?;
    let mut result = match sweep {
        SweepConfig::N { values, pattern } => sweep_n(&cfg.column()?, &cfg.pwm_drive()?, *pattern, values)?,
        SweepConfig::X { values_s, n_values } => {
            let x_max = cfg.drive.as_ref().map(|d| d.x_max_s).ok_or_else(|| Error::Config("missing `drive` section".into()))?;
            sweep_input(&cfg.column()?, values_s, n_values, x_max)?
        }
        SweepConfig::Ibias { values_a, n_values } => {
            let pair = cfg.pairs()?[0];
            sweep_ibias(&pair, values_a, n_values, &cfg.source_spec()?, &cfg.sense_spec()?)?
        }
    };
    result.metadata = vec![
        ("config".into(), cfg.snapshot()),
        ("seed".into(), seed_of(cfg, seed).to_string()),
        ("axis".into(), result.axis_name.clone()),
    ];
    Ok(result)
}

pub fn cmd_sweep(cfg: &RunConfig, seed: Option<u64>) -> Result<CommandOutput> {
    let result = run_sweep(cfg, seed)?;
    Ok(CommandOutput {
        summary: format!("sweep {}: {} points", result.axis_name, result.rows.len()),
        body: sweep_csv(&result),
        diagnostics: Vec::new(),
    })
}

/// Parses a whitespace/comma separated list of numbers; `#` starts a comment.
pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(|l| l.split(|c: char| c == ',' || c.is_whitespace()))
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|e| Error::Config(format!("bad number `{t}`: {e}"))))
        .collect()
}

/// One weight vector (column) per non-empty line.
pub fn parse_matrix(text: &str) -> Result<Vec<Vec<f64>>> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .filter(|l| !l.trim().is_empty())
        .map(parse_vector)
        .collect()
}

/// Seeded random workload: `columns` weight vectors uniform in
/// `[-limit, limit]` and one shared input vector uniform in `[-1, 1]`.
pub fn random_mac_workload(seed: u64, n: usize, columns: usize, limit: f64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = (0..columns).map(|_| (0..n).map(|_| rng.gen_range(-limit..=limit)).collect()).collect();
    let inputs = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    (weights, inputs)
}

pub fn cmd_mac(
    cfg: &RunConfig,
    weights_file: Option<&Path>,
    inputs_file: Option<&Path>,
    seed: Option<u64>,
) -> Result<CommandOutput> {
    let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| Error::Config(format!("reading {}: {e}", p.display())));
    let random = cfg
        .mac
        .map(|m| random_mac_workload(seed_of(cfg, seed), m.random_n, m.columns, m.weight_limit));
    let weights = match (weights_file, &random, &cfg.rows.weights) {
        (Some(p), _, _) => parse_matrix(&read(p)?)?,
        (None, Some((w, _)), _) => w.clone(),
        (None, None, Some(w)) => vec![w.clone()],
        _ => return Err(Error::Config("mac needs weights: --weights, `mac` section, or rows.weights".into())),
    };
    let inputs = match (inputs_file, &random, cfg.drive.as_ref().and_then(|d| d.inputs.as_ref())) {
        (Some(p), _, _) => parse_vector(&read(p)?)?,
        (None, Some((_, s)), _) => s.clone(),
        (None, None, Some(s)) => s.clone(),
        _ => return Err(Error::Config("mac needs inputs: --inputs, `mac` section, or drive.inputs".into())),
    };
    let mac_cfg = cfg.mac_config()?;
    let results = weights
        .iter()
        .map(|w| mac_pipeline(w, &inputs, &mac_cfg))
        .collect::<Result<Vec<_>>>()?;
    let worst = results.iter().map(|r| r.abs_error).fold(0.0, f64::max);
    Ok(CommandOutput {
        body: mac_csv(&results),
        summary: format!("mac: {} column(s), N={}, max abs_error={:.6e}", results.len(), inputs.len(), worst),
        diagnostics: Vec::new(),
    })
}

/// Matching report; a violation is returned as an error (exit code 3).
pub fn cmd_check(cfg: &RunConfig) -> Result<CommandOutput> {
    let rows = cfg.pairs()?;
    let tol = cfg.check_tol.unwrap_or(DEFAULT_CHECK_TOL);
    match check_matching(&rows, tol)? {
        Matching::Ok { max_deviation } => {
            let line = format!("ok: {} rows match within {tol:.3e} (max deviation {max_deviation:.6e})", rows.len());
            Ok(CommandOutput { body: format!("{line}\n"), summary: line, diagnostics: Vec::new() })
        }
        Matching::Violation(report) => Err(Error::MatchingViolated(report)),
    }
}
