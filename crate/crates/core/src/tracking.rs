//! Perturb & Observe tracking block.
//!
//! Each decision consumes one averaged (voltage, current) pair, compares the
//! resulting power against the previous decision, moves the PWM compare value
//! one variable-size step uphill, and emits a 2-bit clock request for the
//! power-management block.

use std::fmt;

use crate::error::{Error, Result};
use crate::power_mgmt::{self, DividerRatio};
use crate::signals::{instant_power, AdcCode, CompareValue, PowerValue};

/// Averaging window sizes selectable through the 2-bit "Averaging" input,
/// indexed by code.
pub const AVERAGING_WINDOWS: [u32; 4] = [1, 8, 32, 64];

/// Steps selectable by the variable-step rule, smallest first.
pub const STEPS: [u8; 4] = [1, 2, 4, 8];

/// 2-bit code on the external "Averaging" input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct AveragingCode(u8);

impl AveragingCode {
    pub fn new(code: u8) -> Result<Self> {
        if usize::from(code) < AVERAGING_WINDOWS.len() {
            Ok(AveragingCode(code))
        } else {
            Err(Error::Domain(format!(
                "averaging code {code} is not a 2-bit value"
            )))
        }
    }

    pub fn code(self) -> u8 {
        self.0
    }

    pub fn window(self) -> u32 {
        AVERAGING_WINDOWS[usize::from(self.0)]
    }
}

pub fn decode_averaging(code: u8) -> Result<u32> {
    AveragingCode::new(code).map(AveragingCode::window)
}

/// 2-bit code on the "Clock Request" bus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ClockRequestCode(u8);

impl ClockRequestCode {
    pub fn new(code: u8) -> Result<Self> {
        if usize::from(code) < DividerRatio::ALL.len() {
            Ok(ClockRequestCode(code))
        } else {
            Err(Error::Domain(format!(
                "clock request code {code} is not a 2-bit value"
            )))
        }
    }

    pub fn for_ratio(ratio: DividerRatio) -> Self {
        ClockRequestCode(ratio.code())
    }

    pub fn code(self) -> u8 {
        self.0
    }

    pub fn ratio(self) -> DividerRatio {
        power_mgmt::decode_request(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Direction {
    #[default]
    Up,
    Down,
}

impl Direction {
    pub fn sign(self) -> i32 {
        match self {
            Direction::Up => 1,
            Direction::Down => -1,
        }
    }

    pub fn from_sign(sign: i32) -> Option<Self> {
        match sign {
            1 => Some(Direction::Up),
            -1 => Some(Direction::Down),
            _ => None,
        }
    }

    pub fn reversed(self) -> Self {
        match self {
            Direction::Up => Direction::Down,
            Direction::Down => Direction::Up,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:+}", self.sign())
    }
}

/// |ΔP| band edges in squared-code units.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepThresholds {
    pub t1: u32,
    pub t2: u32,
    pub t3: u32,
}

impl Default for StepThresholds {
    fn default() -> Self {
        StepThresholds {
            t1: 64,
            t2: 256,
            t3: 1024,
        }
    }
}

impl StepThresholds {
    pub fn validate(&self) -> Result<()> {
        if self.t1 < self.t2 && self.t2 < self.t3 {
            Ok(())
        } else {
            Err(Error::Validation(format!(
                "step thresholds must be strictly ascending, got ({}, {}, {})",
                self.t1, self.t2, self.t3
            )))
        }
    }

    /// Index of the band |ΔP| falls into: 0 below `t1`, 3 at or above `t3`.
    fn band(&self, delta_p_abs: u32) -> usize {
        if delta_p_abs < self.t1 {
            0
        } else if delta_p_abs < self.t2 {
            1
        } else if delta_p_abs < self.t3 {
            2
        } else {
            3
        }
    }
}

/// Consecutive calm decisions (|ΔP| < T1) before the clock is slowed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CalmLimits {
    pub h2: u32,
    pub h3: u32,
}

impl Default for CalmLimits {
    fn default() -> Self {
        CalmLimits { h2: 4, h3: 8 }
    }
}

impl CalmLimits {
    pub fn validate(&self) -> Result<()> {
        if self.h2 < self.h3 {
            Ok(())
        } else {
            Err(Error::Validation(format!(
                "calm limits must satisfy h2 < h3, got ({}, {})",
                self.h2, self.h3
            )))
        }
    }
}

/// Static configuration of the tracking block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrackerConfig {
    pub averaging: AveragingCode,
    pub thresholds: StepThresholds,
    pub calm: CalmLimits,
    pub clamp_min: u8,
    pub clamp_max: u8,
    /// When false every perturbation uses the minimum step.
    pub variable_step: bool,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            averaging: AveragingCode::default(),
            thresholds: StepThresholds::default(),
            calm: CalmLimits::default(),
            clamp_min: 8,
            clamp_max: 248,
            variable_step: true,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        self.thresholds.validate()?;
        self.calm.validate()?;
        let mid = CompareValue::MIDSCALE.get();
        if !(self.clamp_min <= mid && mid <= self.clamp_max) {
            return Err(Error::Validation(format!(
                "compare clamp [{}, {}] must contain the reset value {mid}",
                self.clamp_min, self.clamp_max
            )));
        }
        Ok(())
    }
}

/// Variable step size for a given |ΔP|.
pub fn perturb_step(delta_p_abs: u32, thresholds: &StepThresholds) -> u8 {
    STEPS[thresholds.band(delta_p_abs)]
}

/// Hill-climbing rule: keep going while power rises (or holds), turn back when it falls.
pub fn po_decide(delta_p: i32, direction: Direction) -> Direction {
    if delta_p < 0 {
        direction.reversed()
    } else {
        direction
    }
}

/// Outcome of one tracker decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrackerDecision {
    pub compare: CompareValue,
    pub clock_request: ClockRequestCode,
    pub delta_p: i32,
    pub step: u8,
    pub direction: Direction,
    /// Power computed from the averaged pair.
    pub power: PowerValue,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrackerState {
    config: TrackerConfig,
    v_accum: u32,
    i_accum: u32,
    sample_count: u32,
    window: u32,
    prev_power: PowerValue,
    direction: Direction,
    compare: CompareValue,
    calm_count: u32,
}

impl TrackerState {
    /// Global reset: 50 % duty, upward direction, no power history.
    pub fn new(config: TrackerConfig) -> Result<Self> {
        config.validate()?;
        Ok(TrackerState {
            window: config.averaging.window(),
            config,
            v_accum: 0,
            i_accum: 0,
            sample_count: 0,
            prev_power: PowerValue(0),
            direction: Direction::Up,
            compare: CompareValue::MIDSCALE,
            calm_count: 0,
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    pub fn window(&self) -> u32 {
        self.window
    }

    pub fn sample_count(&self) -> u32 {
        self.sample_count
    }

    pub fn prev_power(&self) -> PowerValue {
        self.prev_power
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn compare(&self) -> CompareValue {
        self.compare
    }

    pub fn calm_count(&self) -> u32 {
        self.calm_count
    }

    /// Switches the averaging window. A partially filled window is discarded.
    pub fn set_averaging(&mut self, averaging: AveragingCode) {
        self.config.averaging = averaging;
        self.window = averaging.window();
        self.clear_accumulators();
    }

    fn clear_accumulators(&mut self) {
        self.v_accum = 0;
        self.i_accum = 0;
        self.sample_count = 0;
    }

    /// Adds one sample; returns the rounded window averages once the window fills.
    pub fn accumulate_sample(&mut self, v: AdcCode, i: AdcCode) -> Option<(AdcCode, AdcCode)> {
        self.v_accum += u32::from(v.get());
        self.i_accum += u32::from(i.get());
        self.sample_count += 1;
        if self.sample_count < self.window {
            return None;
        }
        let avg = |sum: u32| {
            // Round half up; both operands are non-negative.
            let q = (sum + self.window / 2) / self.window;
            AdcCode(q as u8)
        };
        let pair = (avg(self.v_accum), avg(self.i_accum));
        self.clear_accumulators();
        Some(pair)
    }

    /// Clock request for the given |ΔP|, updating the calm-decision counter.
    pub fn clock_request(&mut self, delta_p_abs: u32) -> ClockRequestCode {
        let band = self.config.thresholds.band(delta_p_abs);
        if band > 0 {
            self.calm_count = 0;
        }
        let ratio = match band {
            3 => DividerRatio::R2,
            2 => DividerRatio::R20,
            1 => DividerRatio::R200,
            _ => {
                self.calm_count = self.calm_count.saturating_add(1);
                if self.calm_count >= self.config.calm.h3 {
                    DividerRatio::R2000
                } else {
                    DividerRatio::R200
                }
            }
        };
        ClockRequestCode::for_ratio(ratio)
    }

    /// One full Perturb & Observe decision on an averaged pair.
    pub fn update(&mut self, avg_v: AdcCode, avg_i: AdcCode) -> TrackerDecision {
        let power = instant_power(avg_v, avg_i);
        let delta_p = i32::from(power.get()) - i32::from(self.prev_power.get());
        let delta_abs = delta_p.unsigned_abs();

        self.direction = po_decide(delta_p, self.direction);
        let step = if self.config.variable_step {
            perturb_step(delta_abs, &self.config.thresholds)
        } else {
            STEPS[0]
        };
        let next = i32::from(self.compare.get()) + self.direction.sign() * i32::from(step);
        let clamped = next.clamp(
            i32::from(self.config.clamp_min),
            i32::from(self.config.clamp_max),
        );
        self.compare = CompareValue(clamped as u8);

        let clock_request = self.clock_request(delta_abs);
        self.prev_power = power;

        TrackerDecision {
            compare: self.compare,
            clock_request,
            delta_p,
            step,
            direction: self.direction,
            power,
        }
    }

    /// Accumulates a sample and runs a decision whenever the window completes.
    pub fn sample(&mut self, v: AdcCode, i: AdcCode) -> Option<TrackerDecision> {
        self.accumulate_sample(v, i)
            .map(|(avg_v, avg_i)| self.update(avg_v, avg_i))
    }
}
