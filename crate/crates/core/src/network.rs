//! Per-segment DC solves of the resistive array.
//!
//! Within a PWM segment every row's connection is fixed, so the array reduces
//! to two aggregate conductances: `A` between the source line and BLP, and `B`
//! between the source line and BLN. The ideal model holds both bit lines at a
//! virtual ground and splits the tail current `I_bias` in proportion to `A`
//! and `B`. The nonideal model hangs each bit line from the sense rail
//! through `r_s` and puts a Norton shunt `r_out` across the tail sink.

use crate::devices::{CurrentSourceSpec, ResistancePair, RowState, SenseSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentSolution {
    pub i_p: Vec<f64>,
    pub i_n: Vec<f64>,
    pub i_p_total: f64,
    pub i_n_total: f64,
    pub v_sl: f64,
    pub v_blp: f64,
    pub v_bln: f64,
}

impl SegmentSolution {
    pub fn i_diff(&self) -> f64 {
        self.i_p_total - self.i_n_total
    }
}

/// Conductances a row presents to (BLP, BLN) in the given state.
pub fn row_conductances(pair: &ResistancePair, state: RowState) -> (f64, f64) {
    match state {
        RowState::P => (pair.g_p(), pair.g_n()),
        RowState::Neg => (pair.g_n(), pair.g_p()),
        RowState::Off => (0.0, 0.0),
    }
}

/// Aggregate `(A, B)` line conductances.
pub fn line_conductances(rows: &[ResistancePair], states: &[RowState]) -> (f64, f64) {
    rows.iter().zip(states).fold((0.0, 0.0), |(a, b), (pair, &s)| {
        let (ga, gb) = row_conductances(pair, s);
        (a + ga, b + gb)
    })
}

/// Bit-line totals and node voltages of one segment, without the per-row breakdown.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineCurrents {
    pub i_p: f64,
    pub i_n: f64,
    pub v_sl: f64,
    pub v_blp: f64,
    pub v_bln: f64,
}

/// Ideal current division of `i_bias` over line conductances `a` and `b`.
pub fn ideal_lines(a: f64, b: f64, i_bias: f64) -> LineCurrents {
    let g = a + b;
    if g == 0.0 {
        return LineCurrents { i_p: 0.0, i_n: 0.0, v_sl: 0.0, v_blp: 0.0, v_bln: 0.0 };
    }
    LineCurrents { i_p: i_bias * a / g, i_n: i_bias * b / g, v_sl: i_bias / g, v_blp: 0.0, v_bln: 0.0 }
}

/// Closed-form elimination of the three-node system.
///
/// Unknowns `v_blp`, `v_bln`, `v_sl`:
///   BLP: `(V - v_blp) / r_s = A (v_blp - v_sl)`
///   BLN: `(V - v_bln) / r_s = B (v_bln - v_sl)`
///   SL:  `A (v_blp - v_sl) + B (v_bln - v_sl) = I_bias + v_sl / r_out`
///
/// Eliminating the bit lines turns `A` and `B` into series combinations with
/// `r_s`; the source-line drop then follows from the SL equation.
pub fn nonideal_lines(a: f64, b: f64, source: &CurrentSourceSpec, r_s: f64) -> LineCurrents {
    let v = source.v_supply;
    if a == 0.0 && b == 0.0 {
        return LineCurrents { i_p: 0.0, i_n: 0.0, v_sl: v, v_blp: v, v_bln: v };
    }
    let series = |g: f64| if r_s == 0.0 || g == 0.0 { g } else { g / (1.0 + g * r_s) };
    let (a_eff, b_eff) = (series(a), series(b));
    let g_out = source.g_out();
    // V - v_sl, written without the cancellation of the direct form.
    let drop = (source.i_bias + v * g_out) / (a_eff + b_eff + g_out);
    let i_p = a_eff * drop;
    let i_n = b_eff * drop;
    LineCurrents { i_p, i_n, v_sl: v - drop, v_blp: v - i_p * r_s, v_bln: v - i_n * r_s }
}

fn check_lengths(rows: &[ResistancePair], states: &[RowState]) -> Result<()> {
    if rows.len() != states.len() {
        return Err(Error::LengthMismatch { expected: rows.len(), got: states.len() });
    }
    Ok(())
}

/// Current division with bit lines at virtual ground.
///
/// `I_p,i = I_bias G_a,i / Σ(G_a + G_b)`; with matched rows this is
/// `I_bias R_n,i / (N (R_p,i + R_n,i))`.
pub fn solve_ideal(rows: &[ResistancePair], states: &[RowState], i_bias: f64) -> Result<SegmentSolution> {
    check_lengths(rows, states)?;
    let (a, b) = line_conductances(rows, states);
    let lines = ideal_lines(a, b, i_bias);
    let g = a + b;
    let scale = if g == 0.0 { 0.0 } else { i_bias / g };
    let (i_p, i_n) = rows
        .iter()
        .zip(states)
        .map(|(pair, &s)| {
            let (ga, gb) = row_conductances(pair, s);
            (ga * scale, gb * scale)
        })
        .unzip();
    Ok(SegmentSolution {
        i_p,
        i_n,
        i_p_total: lines.i_p,
        i_n_total: lines.i_n,
        v_sl: lines.v_sl,
        v_blp: lines.v_blp,
        v_bln: lines.v_bln,
    })
}

/// Three-node solve with sense resistance and finite source output resistance.
pub fn solve_nonideal(
    rows: &[ResistancePair],
    states: &[RowState],
    source: &CurrentSourceSpec,
    sense: &SenseSpec,
) -> Result<SegmentSolution> {
    check_lengths(rows, states)?;
    sense.validate()?;
    let r_s = sense.resolve(source.i_bias);
    let (a, b) = line_conductances(rows, states);
    let lines = nonideal_lines(a, b, source, r_s);
    let (dp, dn) = (lines.v_blp - lines.v_sl, lines.v_bln - lines.v_sl);
    let (i_p, i_n) = rows
        .iter()
        .zip(states)
        .map(|(pair, &s)| {
            let (ga, gb) = row_conductances(pair, s);
            (ga * dp, gb * dn)
        })
        .unzip();
    Ok(SegmentSolution {
        i_p,
        i_n,
        i_p_total: lines.i_p,
        i_n_total: lines.i_n,
        v_sl: lines.v_sl,
        v_blp: lines.v_blp,
        v_bln: lines.v_bln,
    })
}

/// Dispatches to the ideal solve when the sense and source are both ideal.
pub fn solve_segment(
    rows: &[ResistancePair],
    states: &[RowState],
    source: &CurrentSourceSpec,
    sense: &SenseSpec,
) -> Result<SegmentSolution> {
    if sense.is_ideal() && source.g_out() == 0.0 {
        solve_ideal(rows, states, source.i_bias)
    } else {
        solve_nonideal(rows, states, source, sense)
    }
}

/// Slope reduction of `n` identical active rows under sense resistance `r_s`:
/// `1 / (1 + 2 n r_s / r_sum)`.
pub fn attenuation_closed_form(n: usize, r_s: f64, r_sum: f64) -> f64 {
    1.0 / (1.0 + 2.0 * n as f64 * r_s / r_sum)
}

/// Parallel resistance of the active cells on one bit line; infinite when none conduct.
pub fn conventional_req(resistances: &[f64], active: &[bool]) -> Result<f64> {
    if resistances.len() != active.len() {
        return Err(Error::LengthMismatch { expected: resistances.len(), got: active.len() });
    }
    let g: f64 = resistances.iter().zip(active).filter(|(_, &on)| on).map(|(r, _)| 1.0 / r).sum();
    Ok(if g == 0.0 { f64::INFINITY } else { 1.0 / g })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use RowState::*;

    const UA: f64 = 1e-6;

    fn pair(r_p: f64, r_n: f64) -> ResistancePair {
        ResistancePair::new(r_p, r_n).unwrap()
    }

    /// KCL residuals at (BLP, BLN, SL), computed from node voltages alone.
    fn kcl_residuals(rows: &[ResistancePair], states: &[RowState], src: &CurrentSourceSpec, r_s: f64, s: &SegmentSolution) -> [f64; 3] {
        let (a, b) = line_conductances(rows, states);
        let v = src.v_supply;
        let into_p = if r_s == 0.0 { s.i_p_total } else { (v - s.v_blp) / r_s };
        let into_n = if r_s == 0.0 { s.i_n_total } else { (v - s.v_bln) / r_s };
        let cell_p = a * (s.v_blp - s.v_sl);
        let cell_n = b * (s.v_bln - s.v_sl);
        [into_p - cell_p, into_n - cell_n, cell_p + cell_n - src.i_bias - s.v_sl * src.g_out()]
    }

    #[test]
    fn ideal_single_row() {
        let rows = [pair(1e6, 10e6)];
        let s = solve_ideal(&rows, &[P], 10.0 * UA).unwrap();
        assert_relative_eq!(s.i_p[0], 100.0 / 11.0 * UA, max_relative = 1e-14);
        assert_relative_eq!(s.i_n[0], 10.0 / 11.0 * UA, max_relative = 1e-14);
        assert_relative_eq!(s.i_p[0], 9.090909 * UA, max_relative = 1e-6);

        let s = solve_ideal(&rows, &[Neg], 10.0 * UA).unwrap();
        assert_relative_eq!(s.i_p[0], 0.909091 * UA, max_relative = 1e-6);
        assert_relative_eq!(s.i_n[0], 9.090909 * UA, max_relative = 1e-6);
    }

    #[test]
    fn ideal_fig5_pair_splits_bias_evenly_per_row() {
        let rows = [pair(10e6, 100e3), pair(100e3, 10e6)];
        let s = solve_ideal(&rows, &[P, P], 10.0 * UA).unwrap();
        assert_relative_eq!(s.i_p[0], 0.049505 * UA, max_relative = 1e-5);
        assert_relative_eq!(s.i_p[1], 4.950495 * UA, max_relative = 1e-6);
        assert_relative_eq!(s.i_n[0], 4.950495 * UA, max_relative = 1e-6);
        assert_relative_eq!(s.i_n[1], 0.049505 * UA, max_relative = 1e-5);
        for i in 0..2 {
            assert_relative_eq!(s.i_p[i] + s.i_n[i], 5.0 * UA, max_relative = 1e-14);
        }
        assert_relative_eq!(s.v_sl, 10.0 * UA / 20.2e-6, max_relative = 1e-14);
    }

    #[test]
    fn all_off_delivers_nothing() {
        let rows = [pair(1e6, 1e6)];
        let s = solve_ideal(&rows, &[Off], 10.0 * UA).unwrap();
        assert_eq!((s.i_p_total, s.i_n_total), (0.0, 0.0));
        let src = CurrentSourceSpec::new(10.0 * UA, Some(1e6), 0.8).unwrap();
        let s = solve_nonideal(&rows, &[Off], &src, &SenseSpec::ConstantR(1e3)).unwrap();
        assert_eq!((s.i_p_total, s.i_n_total), (0.0, 0.0));
    }

    #[test]
    fn length_mismatch() {
        let rows = [pair(1e6, 1e6)];
        assert!(matches!(solve_ideal(&rows, &[P, P], 1e-5), Err(Error::LengthMismatch { .. })));
        assert!(matches!(conventional_req(&[1.0], &[]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn nonideal_reduces_to_ideal() {
        let rows = [pair(10e6, 100e3), pair(100e3, 10e6), pair(1e6, 3e6)];
        let states = [P, Neg, P];
        let src = CurrentSourceSpec::new(10.0 * UA, None, 0.8).unwrap();
        let ideal = solve_ideal(&rows, &states, src.i_bias).unwrap();
        let non = solve_nonideal(&rows, &states, &src, &SenseSpec::Ideal).unwrap();
        for i in 0..rows.len() {
            assert_relative_eq!(non.i_p[i], ideal.i_p[i], max_relative = 1e-12);
            assert_relative_eq!(non.i_n[i], ideal.i_n[i], max_relative = 1e-12);
        }
        assert_relative_eq!(non.i_p_total, ideal.i_p_total, max_relative = 1e-12);
        assert_relative_eq!(non.v_blp - non.v_sl, ideal.v_sl - ideal.v_blp, max_relative = 1e-12);
    }

    #[test]
    fn nonideal_half_attenuation_at_n100() {
        // r_p + r_n = 11 MΩ, r_s = 55 kΩ, N = 100 → α = 1/2
        let rows = vec![pair(1e6, 10e6); 100];
        let states = vec![P; 100];
        let src = CurrentSourceSpec::new(10.0 * UA, None, 0.8).unwrap();
        let ideal = solve_ideal(&rows, &states, src.i_bias).unwrap();
        let non = solve_nonideal(&rows, &states, &src, &SenseSpec::ConstantR(55e3)).unwrap();
        assert_relative_eq!(non.i_diff() / ideal.i_diff(), 0.5, max_relative = 1e-12);
        assert_relative_eq!(attenuation_closed_form(100, 55e3, 11e6), 0.5, max_relative = 1e-15);
    }

    #[test]
    fn nonideal_single_row_with_sense_resistance() {
        let rows = [pair(1e6, 10e6)];
        let src = CurrentSourceSpec::new(10.0 * UA, None, 0.8).unwrap();
        let s = solve_nonideal(&rows, &[P], &src, &SenseSpec::ConstantR(10e3)).unwrap();
        let alpha = attenuation_closed_form(1, 10e3, 11e6);
        assert_relative_eq!(alpha, 0.998185, max_relative = 1e-6);
        assert_relative_eq!(s.i_diff(), 90.0 / 11.0 * UA * alpha, max_relative = 1e-12);
        assert_relative_eq!(s.i_diff(), 8.166968 * UA, max_relative = 1e-6);
    }

    #[test]
    fn nonideal_kcl_and_conservation() {
        let rows = [pair(10e6, 100e3), pair(100e3, 10e6), pair(2e6, 400e3)];
        let states = [P, Neg, P];
        let src = CurrentSourceSpec::new(10.0 * UA, Some(2e6), 0.8).unwrap();
        let r_s = 25e3;
        let s = solve_nonideal(&rows, &states, &src, &SenseSpec::ConstantR(r_s)).unwrap();
        for r in kcl_residuals(&rows, &states, &src, r_s, &s) {
            assert!(r.abs() <= 1e-12 * src.i_bias, "residual {r}");
        }
        assert_relative_eq!(s.i_p.iter().sum::<f64>(), s.i_p_total, max_relative = 1e-12);
        assert_relative_eq!(s.i_n.iter().sum::<f64>(), s.i_n_total, max_relative = 1e-12);
        assert_relative_eq!(s.i_p_total + s.i_n_total, src.i_bias + s.v_sl / 2e6, max_relative = 1e-12);
    }

    #[test]
    fn attenuation_examples() {
        assert_eq!(attenuation_closed_form(7, 0.0, 11e6), 1.0);
        // 1 / (1 + 20.48e6 / 11e6)
        assert_relative_eq!(attenuation_closed_form(1024, 10e3, 11e6), 0.3494282, max_relative = 1e-6);
        assert!(attenuation_closed_form(2, 1e3, 11e6) < attenuation_closed_form(1, 1e3, 11e6));
    }

    #[test]
    fn conventional_req_examples() {
        assert_relative_eq!(conventional_req(&[100e3, 100e3], &[true, true]).unwrap(), 50e3);
        assert_relative_eq!(conventional_req(&[100e3, 10e6], &[true, true]).unwrap(), 99.0099e3, max_relative = 1e-6);
        assert!(conventional_req(&[100e3], &[false]).unwrap().is_infinite());
    }
}
