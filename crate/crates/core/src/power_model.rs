//! Consumption estimate for the controller itself.
//!
//! Dynamic power follows `α·C_L·V²·f`; the switched capacitance and activity
//! factor are not separately identifiable from the characterization data, so
//! they are lumped into one coefficient `a`. A linear term `b·V` absorbs the
//! remaining, mostly leakage, contribution. Both are fitted per process corner
//! and temperature to measured average power in µW/MHz.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Measured average power per process corner, temperature and supply.
pub const PVT_TABLE: &str = include_str!("../data/pvt_power.csv");

/// Watts per (µW/MHz) coefficient on the `V²·f` term.
const UW_PER_MHZ: f64 = 1.0e-12;
/// Watts per µW.
const UW: f64 = 1.0e-6;
/// Frequency the table is normalized to.
pub const CALIBRATION_HZ: f64 = 1.0e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Corner {
    SS,
    TT,
    FF,
}

impl Corner {
    pub const ALL: [Corner; 3] = [Corner::SS, Corner::TT, Corner::FF];
}

impl fmt::Display for Corner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Corner::SS => "SS",
            Corner::TT => "TT",
            Corner::FF => "FF",
        })
    }
}

impl FromStr for Corner {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "SS" => Ok(Corner::SS),
            "TT" => Ok(Corner::TT),
            "FF" => Ok(Corner::FF),
            other => Err(Error::Validation(format!(
                "unknown process corner {other:?}"
            ))),
        }
    }
}

/// Fitted consumption model for one corner and temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerModelParams {
    /// Lumped `α·C_L`, watts per V² per Hz.
    pub a: f64,
    /// Linear supply term, watts per volt.
    pub b: f64,
    pub corner: Corner,
    pub temperature_c: f64,
}

impl PowerModelParams {
    /// Modelled average power in µW/MHz at supply `v` with the whole design clocked.
    pub fn per_mhz(&self, v: f64) -> f64 {
        (self.a * v * v * CALIBRATION_HZ + self.b * v) / UW
    }
}

/// Fraction of system-clock edges on which each block is clocked.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivityProfile {
    pub f_sys: f64,
    pub pwm_weight: f64,
    pub tracker_weight: f64,
}

impl ActivityProfile {
    pub fn validate(&self) -> Result<()> {
        if !(self.f_sys.is_finite() && self.f_sys >= 0.0) {
            return Err(Error::Validation(format!(
                "system clock frequency must be non-negative, got {}",
                self.f_sys
            )));
        }
        for (name, w) in [
            ("pwm_weight", self.pwm_weight),
            ("tracker_weight", self.tracker_weight),
        ] {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::Validation(format!(
                    "{name} must lie in [0, 1], got {w}"
                )));
            }
        }
        Ok(())
    }
}

pub fn dynamic_power(alpha_cl: f64, v: f64, f: f64) -> Result<f64> {
    for (name, x) in [("alpha_cl", alpha_cl), ("v", v), ("f", f)] {
        if !(x.is_finite() && x >= 0.0) {
            return Err(Error::Domain(format!(
                "{name} must be finite and non-negative, got {x}"
            )));
        }
    }
    Ok(alpha_cl * v * v * f)
}

/// Result of fitting `p = a·v² + b·v` to per-MHz samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub params: PowerModelParams,
    /// `(model − measured) / measured` for each input sample, in input order.
    pub relative_residuals: Vec<f64>,
}

impl Calibration {
    pub fn max_abs_residual(&self) -> f64 {
        self.relative_residuals
            .iter()
            .fold(0.0, |m, r| m.max(r.abs()))
    }
}

/// Least-squares fit of `p = a·v² + b·v` to `(v_dd, µW/MHz)` samples.
///
/// Residuals are weighted by `1/p`, so the fit minimizes relative error; the
/// samples span well over an order of magnitude and an unweighted fit would
/// ignore the low-voltage points.
pub fn calibrate(
    samples: &[(f64, f64)],
    corner: Corner,
    temperature_c: f64,
) -> Result<Calibration> {
    for &(v, p) in samples {
        if !(v.is_finite() && v > 0.0 && p.is_finite() && p > 0.0) {
            return Err(Error::Validation(format!(
                "calibration sample ({v} V, {p} µW/MHz) must be finite and positive"
            )));
        }
    }
    let mut voltages: Vec<f64> = samples.iter().map(|s| s.0).collect();
    voltages.sort_by(f64::total_cmp);
    voltages.dedup();
    if voltages.len() < 2 {
        return Err(Error::Validation(
            "calibration needs samples at two or more distinct supply voltages".into(),
        ));
    }

    // Normal equations for rows [v²/p, v/p] against target 1.
    let (mut s11, mut s12, mut s22, mut t1, mut t2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(v, p) in samples {
        let x1 = v * v / p;
        let x2 = v / p;
        s11 += x1 * x1;
        s12 += x1 * x2;
        s22 += x2 * x2;
        t1 += x1;
        t2 += x2;
    }
    let det = s11 * s22 - s12 * s12;
    if det.abs() <= f64::EPSILON * s11 * s22 {
        return Err(Error::Validation(
            "calibration samples are degenerate".into(),
        ));
    }
    let a_u = (t1 * s22 - t2 * s12) / det;
    let b_u = (s11 * t2 - s12 * t1) / det;

    let params = PowerModelParams {
        a: a_u * UW_PER_MHZ,
        b: b_u * UW,
        corner,
        temperature_c,
    };
    let relative_residuals = samples
        .iter()
        .map(|&(v, p)| (params.per_mhz(v) - p) / p)
        .collect();
    Ok(Calibration {
        params,
        relative_residuals,
    })
}

/// Controller power in watts at supply `v` for the given clock activity.
pub fn estimate(params: &PowerModelParams, profile: &ActivityProfile, v: f64) -> f64 {
    params.a * v * v * profile.f_sys * (profile.pwm_weight + profile.tracker_weight) + params.b * v
}

pub fn reduction_percent(p_ref: f64, p_low: f64) -> Result<f64> {
    if !(p_ref.is_finite() && p_ref > 0.0) {
        return Err(Error::Domain(format!(
            "reference power must be positive, got {p_ref}"
        )));
    }
    Ok((1.0 - p_low / p_ref) * 100.0)
}

/// One measured cell of the PVT table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PvtSample {
    pub v_dd: f64,
    pub corner: Corner,
    pub temp_c: f64,
    pub p_avg_uw_per_mhz: f64,
}

pub fn parse_table(text: &str) -> Result<Vec<PvtSample>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    reader
        .deserialize()
        .enumerate()
        .map(|(row, rec)| {
            rec.map_err(|e| Error::Parse {
                line: row + 2,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn load_table(path: &Path) -> Result<Vec<PvtSample>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_table(&text)
}

pub fn builtin_table() -> Vec<PvtSample> {
    parse_table(PVT_TABLE).expect("bundled PVT table parses")
}

/// Samples for one corner and temperature as `(v_dd, µW/MHz)` pairs.
pub fn cell_samples(table: &[PvtSample], corner: Corner, temp_c: f64) -> Vec<(f64, f64)> {
    table
        .iter()
        .filter(|s| s.corner == corner && s.temp_c == temp_c)
        .map(|s| (s.v_dd, s.p_avg_uw_per_mhz))
        .collect()
}

/// Distinct temperatures present in the table, ascending.
pub fn temperatures(table: &[PvtSample]) -> Vec<f64> {
    let mut temps: Vec<f64> = table.iter().map(|s| s.temp_c).collect();
    temps.sort_by(f64::total_cmp);
    temps.dedup();
    temps
}

pub fn fit_cell(table: &[PvtSample], corner: Corner, temp_c: f64) -> Result<Calibration> {
    calibrate(&cell_samples(table, corner, temp_c), corner, temp_c)
}

/// Fits every corner/temperature combination present in the table.
pub fn fit_all(table: &[PvtSample]) -> Result<Vec<Calibration>> {
    let mut out = Vec::new();
    for temp in temperatures(table) {
        for corner in Corner::ALL {
            if table.iter().any(|s| s.corner == corner && s.temp_c == temp) {
                out.push(fit_cell(table, corner, temp)?);
            }
        }
    }
    Ok(out)
}

/// `(v_dd, µW/MHz)` points of the fitted model from `v_lo` to `v_hi`.
pub fn supply_sweep(
    params: &PowerModelParams,
    v_lo: f64,
    v_hi: f64,
    points: usize,
) -> Vec<(f64, f64)> {
    let n = points.max(2);
    (0..n)
        .map(|k| {
            let v = v_lo + (v_hi - v_lo) * k as f64 / (n - 1) as f64;
            (v, params.per_mhz(v))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const TT27: [(f64, f64); 3] = [(1.2, 7.28), (0.6, 1.22), (0.4, 0.53)];

    #[test]
    fn dynamic_power_law() {
        let p = dynamic_power(1e-9, 1.2, 1e6).unwrap();
        assert!((p - 1.44e-3).abs() < 1e-15);
        let half_v = dynamic_power(1e-9, 0.6, 1e6).unwrap();
        assert_eq!(p / half_v, 4.0);
        let double_f = dynamic_power(1e-9, 1.2, 2e6).unwrap();
        assert_eq!(double_f / p, 2.0);
        assert!(dynamic_power(-1.0, 1.0, 1.0).is_err());
        assert!(dynamic_power(1.0, -1.0, 1.0).is_err());
        assert!(dynamic_power(1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn exact_quadratic_is_recovered() {
        // p = 5·v², no linear term.
        let cal = calibrate(&[(1.0, 5.0), (0.5, 1.25)], Corner::TT, 27.0).unwrap();
        assert!((cal.params.a / UW_PER_MHZ - 5.0).abs() < 1e-12);
        assert!((cal.params.b / UW).abs() < 1e-12);
        assert!(cal.max_abs_residual() < 1e-12);
    }

    #[test]
    fn typical_corner_fit_within_fifteen_percent() {
        let cal = calibrate(&TT27, Corner::TT, 27.0).unwrap();
        assert!(
            cal.max_abs_residual() <= 0.15,
            "{:?}",
            cal.relative_residuals
        );
    }

    #[test]
    fn slow_cold_fit_reports_finite_residuals() {
        let cal = calibrate(&[(1.2, 2.79), (0.6, 0.56), (0.4, 0.24)], Corner::SS, -20.0).unwrap();
        assert_eq!(cal.relative_residuals.len(), 3);
        assert!(cal.relative_residuals.iter().all(|r| r.is_finite()));
    }

    #[test]
    fn calibration_needs_two_voltages() {
        assert!(calibrate(&[(1.2, 7.28)], Corner::TT, 27.0).is_err());
        assert!(calibrate(&[(1.2, 7.28), (1.2, 7.0)], Corner::TT, 27.0).is_err());
        assert!(calibrate(&[(1.2, 7.28), (0.6, -1.0)], Corner::TT, 27.0).is_err());
    }

    #[test]
    fn gating_lowers_estimate() {
        let params = calibrate(&TT27, Corner::TT, 27.0).unwrap().params;
        let fast = ActivityProfile {
            f_sys: 1e6,
            pwm_weight: 1.0,
            tracker_weight: 0.5,
        };
        let slow = ActivityProfile {
            tracker_weight: 1.0 / 2000.0,
            ..fast
        };
        assert!(estimate(&params, &slow, 0.4) < estimate(&params, &fast, 0.4));

        let off = ActivityProfile {
            pwm_weight: 0.0,
            tracker_weight: 0.0,
            ..fast
        };
        assert_eq!(estimate(&params, &off, 0.4), params.b * 0.4);
    }

    #[test]
    fn low_supply_reduction() {
        let params = calibrate(&TT27, Corner::TT, 27.0).unwrap().params;
        let full = ActivityProfile {
            f_sys: 1e6,
            pwm_weight: 1.0,
            tracker_weight: 0.0,
        };
        let hi = estimate(&params, &full, 1.2);
        let lo = estimate(&params, &full, 0.4);
        assert!(hi / lo >= 10.0, "ratio {}", hi / lo);
        let r = reduction_percent(7.28, 0.53).unwrap();
        assert!((r - 92.72).abs() < 0.005);
    }

    #[test]
    fn reduction_edges() {
        assert_eq!(reduction_percent(3.0, 3.0).unwrap(), 0.0);
        assert_eq!(reduction_percent(3.0, 0.0).unwrap(), 100.0);
        assert!(reduction_percent(0.0, 1.0).is_err());
    }

    #[test]
    fn builtin_table_is_complete() {
        let table = builtin_table();
        assert_eq!(table.len(), 27);
        assert_eq!(temperatures(&table), vec![-20.0, 27.0, 85.0]);
        assert_eq!(cell_samples(&table, Corner::TT, 27.0), TT27.to_vec());
        let fits = fit_all(&table).unwrap();
        assert_eq!(fits.len(), 9);
        assert!(fits.iter().all(|c| c.params.a > 0.0));
    }

    #[test]
    fn table_parse_errors_carry_line() {
        let err = parse_table("v_dd,corner,temp_c,p_avg_uw_per_mhz\n1.2,XX,27,1.0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn profile_validation() {
        let p = ActivityProfile {
            f_sys: 1e6,
            pwm_weight: 1.2,
            tracker_weight: 0.0,
        };
        assert!(p.validate().is_err());
        let p = ActivityProfile {
            f_sys: 1e6,
            pwm_weight: 1.0,
            tracker_weight: 0.5,
        };
        assert!(p.validate().is_ok());
    }
}
