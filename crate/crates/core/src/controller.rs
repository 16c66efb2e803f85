//! Synchronous composition of the tracking, power-management and PWM blocks.
//!
//! Every call to [`SystemState::step`] is one rising edge of the system clock,
//! evaluated in a fixed order:
//!
//! 1. the divider ticks and decides whether the tracker is enabled;
//! 2. on an enable, the plant is sampled at the currently applied duty ratio,
//!    quantized and accumulated; a completed window runs a tracker decision
//!    whose compare value goes to the PWM pending register and whose clock
//!    request goes to the divider;
//! 3. the PWM counter ticks;
//! 4. a [`TraceRecord`] of the post-edge state is emitted.
//!
//! A clock request therefore never affects the edge on which it was made.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::plant::PlantModel;
use crate::power_mgmt::{DividerRatio, PowerMgmtState};
use crate::pwm::{duty_ratio, PwmState};
use crate::signals::{instant_power, quantize_adc, AdcCode};
use crate::tracking::{ClockRequestCode, TrackerConfig, TrackerDecision, TrackerState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ControllerConfig {
    pub tracker: TrackerConfig,
    /// Static 8-bit "PWM frequency" input.
    pub prescale_code: u8,
    /// When false the divider ignores clock requests and stays at ratio 2.
    pub clock_gating: bool,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            tracker: TrackerConfig::default(),
            prescale_code: 0,
            clock_gating: true,
        }
    }
}

/// One row of the cycle trace. Field order is the CSV column order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub cycle: u64,
    pub v_code: u8,
    pub i_code: u8,
    pub p_inst: u16,
    /// Averaged power; present only on cycles where the tracker decided.
    pub p_avg: Option<u16>,
    /// Compare value currently applied by the PWM stage.
    pub compare: u8,
    pub step: u8,
    pub direction: i8,
    pub clock_request: u8,
    pub active_ratio: u32,
    pub pwm_out: u8,
    /// Commanded duty ratio, `compare / 256`.
    pub duty: f64,
}

impl TraceRecord {
    pub fn is_decision(&self) -> bool {
        self.p_avg.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    config: ControllerConfig,
    tracker: TrackerState,
    power_mgmt: PowerMgmtState,
    pwm: PwmState,
    cycle: u64,
    last_sample: (AdcCode, AdcCode),
    last_decision: Option<TrackerDecision>,
}

impl SystemState {
    /// Global reset.
    pub fn reset(config: ControllerConfig) -> Result<Self> {
        let tracker = TrackerState::new(config.tracker)?;
        Ok(SystemState {
            pwm: PwmState::new(config.prescale_code, tracker.compare()),
            tracker,
            power_mgmt: PowerMgmtState::new(),
            cycle: 0,
            last_sample: (AdcCode(0), AdcCode(0)),
            last_decision: None,
            config,
        })
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.config
    }

    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    pub fn tracker(&self) -> &TrackerState {
        &self.tracker
    }

    pub fn power_mgmt(&self) -> &PowerMgmtState {
        &self.power_mgmt
    }

    pub fn pwm(&self) -> &PwmState {
        &self.pwm
    }

    pub fn tracker_mut(&mut self) -> &mut TrackerState {
        &mut self.tracker
    }

    /// Evaluates one system-clock edge.
    pub fn step(&mut self, plant: &PlantModel) -> TraceRecord {
        let enable = self.power_mgmt.divider_tick();

        let mut decision = None;
        if enable {
            let duty = duty_ratio(self.pwm.compare_active());
            let (v, i) = plant
                .plant_outputs(duty, self.cycle)
                .expect("applied duty ratio is always within [0, 1)");
            let v_code = quantize_adc(v, plant.v_full_scale).expect("validated full scale");
            let i_code = quantize_adc(i, plant.i_full_scale).expect("validated full scale");
            self.last_sample = (v_code, i_code);
            if let Some(d) = self.tracker.sample(v_code, i_code) {
                self.pwm.load_compare(d.compare);
                if self.config.clock_gating {
                    self.power_mgmt.submit_request(d.clock_request);
                }
                self.last_decision = Some(d);
                decision = Some(d);
            }
        }

        let pwm_out = self.pwm.pwm_tick();
        let record = self.record(decision, pwm_out);
        self.cycle += 1;
        record
    }

    fn record(&self, decision: Option<TrackerDecision>, pwm_out: bool) -> TraceRecord {
        let (v_code, i_code) = self.last_sample;
        let compare = self.pwm.compare_active();
        let (step, direction, clock_request) = match self.last_decision {
            Some(d) => (d.step, d.direction, d.clock_request),
            None => (
                0,
                self.tracker.direction(),
                ClockRequestCode::for_ratio(DividerRatio::R2),
            ),
        };
        TraceRecord {
            cycle: self.cycle,
            v_code: v_code.get(),
            i_code: i_code.get(),
            p_inst: instant_power(v_code, i_code).get(),
            p_avg: decision.map(|d| d.power.get()),
            compare: compare.get(),
            step,
            direction: direction.sign() as i8,
            clock_request: clock_request.code(),
            active_ratio: self.power_mgmt.active_ratio().value(),
            pwm_out: u8::from(pwm_out),
            duty: duty_ratio(compare),
        }
    }

    pub fn run(&mut self, plant: &PlantModel, n_cycles: u64) -> Vec<TraceRecord> {
        (0..n_cycles).map(|_| self.step(plant)).collect()
    }
}

/// Decision-cycle view of a trace.
pub fn decisions(trace: &[TraceRecord]) -> impl Iterator<Item = &TraceRecord> {
    trace.iter().filter(|r| r.is_decision())
}
