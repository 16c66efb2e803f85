//! Tracking metrics computed from a trace and the noise-free plant.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::controller::TraceRecord;
use crate::error::Result;
use crate::plant::PlantModel;
use crate::power_model::{estimate, ActivityProfile, PowerModelParams};
use crate::pwm::duty_ratio;
use crate::signals::CompareValue;

/// A decision is on target when its compare value is within this many codes of the oracle.
pub const CONVERGENCE_TOLERANCE: u8 = 2;
/// Consecutive on-target decisions required to call the tracker converged.
pub const CONVERGENCE_RUN: usize = 16;
/// Decisions inspected for the steady-state band.
pub const BAND_WINDOW: usize = 32;

/// Everything needed besides the trace itself.
#[derive(Debug, Clone)]
pub struct MetricsContext {
    pub plant: PlantModel,
    pub power: PowerModelParams,
    pub f_sys: f64,
    pub vdd: f64,
    pub prescale_code: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub cycles: u64,
    pub decisions: u64,
    /// Index of the first decision that starts a run of on-target decisions,
    /// counted from the first decision of the first irradiance segment.
    pub convergence_decisions: Option<u64>,
    /// True when every irradiance segment that saw decisions converged.
    pub converged: bool,
    /// Per irradiance segment: decisions from the segment start to convergence.
    pub segment_convergence: Vec<Option<u64>>,
    /// Oracle compare value for each irradiance segment.
    pub segment_oracle: Vec<u8>,
    /// Harvested over oracle energy; absent when the oracle harvests nothing.
    pub tracking_efficiency: Option<f64>,
    pub final_ratio: u32,
    pub mean_tracker_weight: f64,
    pub mean_estimated_controller_power: f64,
    /// max − min compare value over the last decisions.
    pub steady_state_band: Option<u8>,
}

/// First index `j` such that `hits[j..j + CONVERGENCE_RUN]` are all true.
pub fn first_sustained_run(hits: &[bool]) -> Option<usize> {
    let mut run = 0usize;
    for (idx, &hit) in hits.iter().enumerate() {
        if hit {
            run += 1;
            if run == CONVERGENCE_RUN {
                return Some(idx + 1 - CONVERGENCE_RUN);
            }
        } else {
            run = 0;
        }
    }
    None
}

fn on_target(compare: u8, oracle: CompareValue) -> bool {
    compare.abs_diff(oracle.get()) <= CONVERGENCE_TOLERANCE
}

pub fn compute_metrics(trace: &[TraceRecord], ctx: &MetricsContext) -> Result<RunSummary> {
    let plant = &ctx.plant;
    let segments = plant.schedule().len();

    let mut oracle_cache: HashMap<u64, CompareValue> = HashMap::new();
    let mut oracle_at = |irradiance: f64| -> Result<CompareValue> {
        if let Some(o) = oracle_cache.get(&irradiance.to_bits()) {
            return Ok(*o);
        }
        let o = plant.oracle_for_irradiance(irradiance)?;
        oracle_cache.insert(irradiance.to_bits(), o);
        Ok(o)
    };

    let segment_oracle = plant
        .schedule()
        .iter()
        .map(|e| oracle_at(e.irradiance).map(CompareValue::get))
        .collect::<Result<Vec<_>>>()?;

    // Per-segment on-target flags, in decision order.
    let mut hits: Vec<Vec<bool>> = vec![Vec::new(); segments];
    let mut decision_compares = Vec::new();
    let mut harvested = 0.0;
    let mut ideal = 0.0;
    let mut weight_sum = 0.0;

    for rec in trace {
        let irradiance = plant.irradiance_at(rec.cycle);
        let oracle = oracle_at(irradiance)?;
        harvested += plant.ideal_power(rec.duty, rec.cycle)?;
        ideal += plant.ideal_power(duty_ratio(oracle), rec.cycle)?;
        weight_sum += 1.0 / f64::from(rec.active_ratio);

        if rec.is_decision() {
            decision_compares.push(rec.compare);
            if let Some(seg) = plant.segment_at(rec.cycle) {
                hits[seg].push(on_target(rec.compare, oracle));
            }
        }
    }

    let segment_convergence: Vec<Option<u64>> = hits
        .iter()
        .map(|h| first_sustained_run(h).map(|j| j as u64))
        .collect();
    let first_active = hits.iter().position(|h| !h.is_empty());
    let convergence_decisions = first_active.and_then(|s| segment_convergence[s]);
    let converged = first_active.is_some()
        && hits
            .iter()
            .zip(&segment_convergence)
            .all(|(h, c)| h.is_empty() || c.is_some());

    let steady_state_band = (!decision_compares.is_empty()).then(|| {
        let tail = &decision_compares[decision_compares.len().saturating_sub(BAND_WINDOW)..];
        tail.iter().max().unwrap() - tail.iter().min().unwrap()
    });

    let mean_tracker_weight = if trace.is_empty() {
        0.0
    } else {
        weight_sum / trace.len() as f64
    };
    let profile = ActivityProfile {
        f_sys: ctx.f_sys,
        pwm_weight: 1.0 / (f64::from(ctx.prescale_code) + 1.0),
        tracker_weight: mean_tracker_weight,
    };

    Ok(RunSummary {
        cycles: trace.len() as u64,
        decisions: decision_compares.len() as u64,
        convergence_decisions,
        converged,
        segment_convergence,
        segment_oracle,
        tracking_efficiency: (ideal > 0.0).then(|| harvested / ideal),
        final_ratio: trace.last().map_or(2, |r| r.active_ratio),
        mean_tracker_weight,
        mean_estimated_controller_power: estimate(&ctx.power, &profile, ctx.vdd),
        steady_state_band,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::power_model::{calibrate, Corner};

    fn ctx(plant: PlantModel) -> MetricsContext {
        let power = calibrate(&[(1.2, 7.28), (0.6, 1.22), (0.4, 0.53)], Corner::TT, 27.0)
            .unwrap()
            .params;
        MetricsContext {
            plant,
            power,
            f_sys: 1e6,
            vdd: 0.4,
            prescale_code: 0,
        }
    }

    fn record(cycle: u64, compare: u8, decision: bool) -> TraceRecord {
        TraceRecord {
            cycle,
            v_code: 0,
            i_code: 0,
            p_inst: 0,
            p_avg: decision.then_some(0),
            compare,
            step: 1,
            direction: 1,
            clock_request: 0,
            active_ratio: 2,
            pwm_out: 0,
            duty: f64::from(compare) / 256.0,
        }
    }

    #[test]
    fn sustained_run_search() {
        let mut hits = vec![false, true, true];
        hits.extend(std::iter::repeat_n(false, 3));
        hits.extend(std::iter::repeat_n(true, 16));
        assert_eq!(first_sustained_run(&hits), Some(6));
        assert_eq!(first_sustained_run(&[true; 15]), None);
        assert_eq!(first_sustained_run(&[true; 16]), Some(0));
    }

    #[test]
    fn pinned_at_oracle_is_fully_efficient() {
        let plant = PlantModel::default();
        let oracle = plant.oracle_mpp(0).unwrap().get();
        let trace: Vec<_> = (0..100).map(|c| record(c, oracle, c % 2 == 0)).collect();
        let s = compute_metrics(&trace, &ctx(plant)).unwrap();
        assert_eq!(s.tracking_efficiency, Some(1.0));
        assert_eq!(s.convergence_decisions, Some(0));
        assert!(s.converged);
        assert_eq!(s.steady_state_band, Some(0));
        assert_eq!(s.decisions, 50);
    }

    #[test]
    fn empty_trace_flags_nothing() {
        let s = compute_metrics(&[], &ctx(PlantModel::default())).unwrap();
        assert!(!s.converged);
        assert_eq!(s.convergence_decisions, None);
        assert_eq!(s.tracking_efficiency, None);
        assert_eq!(s.steady_state_band, None);
    }

    #[test]
    fn trace_without_decisions_is_not_converged() {
        let trace: Vec<_> = (0..10).map(|c| record(c, 128, false)).collect();
        let s = compute_metrics(&trace, &ctx(PlantModel::default())).unwrap();
        assert!(!s.converged);
        assert_eq!(s.decisions, 0);
        assert!(s.tracking_efficiency.is_some());
    }

    #[test]
    fn full_sweep_is_less_efficient_than_oracle() {
        let plant = PlantModel::default();
        let trace: Vec<_> = (0..256u64).map(|c| record(c, c as u8, true)).collect();
        let s = compute_metrics(&trace, &ctx(plant)).unwrap();
        let e = s.tracking_efficiency.unwrap();
        assert!(e > 0.0 && e <= 1.0, "{e}");
    }
}
