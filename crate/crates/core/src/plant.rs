//! Reference energy-harvester plant.
//!
//! A quadratic power hill in commanded duty ratio, scaled by a piecewise
//! constant irradiance schedule. Voltage falls linearly with duty (boost-style
//! input), current is whatever carries the power at that voltage, and each
//! channel can carry multiplicative Gaussian noise that is a pure function of
//! `(seed, cycle, channel)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::signals::{instant_power, quantize_adc, CompareValue, PowerValue};

/// Voltage floor as a fraction of `v_max`, keeping `i = P / v` finite.
pub const VOLTAGE_FLOOR: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrradianceEvent {
    pub cycle: u64,
    pub irradiance: f64,
}

impl IrradianceEvent {
    pub fn new(cycle: u64, irradiance: f64) -> Self {
        IrradianceEvent { cycle, irradiance }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantModel {
    /// Peak extractable power at irradiance 1.0, watts.
    pub p_max: f64,
    /// Duty ratio of the maximum power point.
    pub d_star: f64,
    /// Curvature of the power hill.
    pub k: f64,
    /// Voltage at zero duty, volts.
    pub v_max: f64,
    pub v_full_scale: f64,
    pub i_full_scale: f64,
    /// Relative standard deviation of the per-channel noise.
    pub noise_sigma: f64,
    schedule: Vec<IrradianceEvent>,
    pub seed: u64,
}

impl Default for PlantModel {
    fn default() -> Self {
        PlantModel {
            p_max: 1.0e-3,
            d_star: 0.5,
            k: 4.0,
            v_max: 1.0,
            v_full_scale: 1.0,
            i_full_scale: 4.0e-3,
            noise_sigma: 0.0,
            schedule: vec![IrradianceEvent::new(0, 1.0)],
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Channel {
    Voltage = 0,
    Current = 1,
}

fn positive_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::Validation(format!(
            "{name} must be finite and positive, got {value}"
        )))
    }
}

impl PlantModel {
    pub fn validate(&self) -> Result<()> {
        positive_finite("p_max", self.p_max)?;
        positive_finite("k", self.k)?;
        positive_finite("v_max", self.v_max)?;
        positive_finite("v_full_scale", self.v_full_scale)?;
        positive_finite("i_full_scale", self.i_full_scale)?;
        if !(self.d_star > 0.0 && self.d_star < 1.0) {
            return Err(Error::Validation(format!(
                "d_star must lie in (0, 1), got {}",
                self.d_star
            )));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::Validation(format!(
                "noise_sigma must be finite and non-negative, got {}",
                self.noise_sigma
            )));
        }
        validate_schedule(&self.schedule)
    }

    pub fn schedule(&self) -> &[IrradianceEvent] {
        &self.schedule
    }

    /// Replaces the irradiance schedule.
    pub fn set_schedule(&mut self, events: Vec<IrradianceEvent>) -> Result<()> {
        validate_schedule(&events)?;
        self.schedule = events;
        Ok(())
    }

    pub fn with_schedule(mut self, events: Vec<IrradianceEvent>) -> Result<Self> {
        self.set_schedule(events)?;
        Ok(self)
    }

    /// Irradiance in effect at `cycle`; zero before the first event.
    pub fn irradiance_at(&self, cycle: u64) -> f64 {
        let idx = self.schedule.partition_point(|e| e.cycle <= cycle);
        if idx == 0 {
            0.0
        } else {
            self.schedule[idx - 1].irradiance
        }
    }

    /// Index of the schedule segment containing `cycle`, if any event has started.
    pub fn segment_at(&self, cycle: u64) -> Option<usize> {
        self.schedule
            .partition_point(|e| e.cycle <= cycle)
            .checked_sub(1)
    }

    fn hill(&self, duty: f64, irradiance: f64) -> f64 {
        let off = duty - self.d_star;
        self.p_max * irradiance * (1.0 - self.k * off * off).max(0.0)
    }

    fn voltage(&self, duty: f64) -> f64 {
        (self.v_max * (1.0 - duty)).max(VOLTAGE_FLOOR * self.v_max)
    }

    fn check_duty(duty: f64) -> Result<()> {
        if (0.0..=1.0).contains(&duty) {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "duty ratio must lie in [0, 1], got {duty}"
            )))
        }
    }

    /// Noise-free extracted power at `duty`, watts.
    pub fn ideal_power(&self, duty: f64, cycle: u64) -> Result<f64> {
        Self::check_duty(duty)?;
        Ok(self.hill(duty, self.irradiance_at(cycle)))
    }

    /// Noise-free (voltage, current) at `duty` for a given irradiance.
    fn ideal_outputs(&self, duty: f64, irradiance: f64) -> (f64, f64) {
        let v = self.voltage(duty);
        (v, self.hill(duty, irradiance) / v)
    }

    fn noise(&self, cycle: u64, channel: Channel) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(cycle.wrapping_mul(2) | channel as u64);
        StandardNormal.sample(&mut rng)
    }

    /// Observed (voltage, current) at `duty` on system cycle `cycle`.
    pub fn plant_outputs(&self, duty: f64, cycle: u64) -> Result<(f64, f64)> {
        Self::check_duty(duty)?;
        let (v, i) = self.ideal_outputs(duty, self.irradiance_at(cycle));
        if self.noise_sigma == 0.0 {
            return Ok((v, i));
        }
        let nv = 1.0 + self.noise_sigma * self.noise(cycle, Channel::Voltage);
        let ni = 1.0 + self.noise_sigma * self.noise(cycle, Channel::Current);
        Ok((v * nv, i * ni))
    }

    /// Noise-free quantized power for every compare code at one irradiance.
    pub fn quantized_curve(&self, irradiance: f64) -> Result<Vec<PowerValue>> {
        (0..=255u8)
            .map(|code| {
                let duty = f64::from(code) / 256.0;
                let (v, i) = self.ideal_outputs(duty, irradiance);
                Ok(instant_power(
                    quantize_adc(v, self.v_full_scale)?,
                    quantize_adc(i, self.i_full_scale)?,
                ))
            })
            .collect()
    }

    /// Compare code with the highest noise-free quantized power; ties go to the lower code.
    pub fn oracle_for_irradiance(&self, irradiance: f64) -> Result<CompareValue> {
        let curve = self.quantized_curve(irradiance)?;
        let mut best = 0usize;
        for (code, p) in curve.iter().enumerate() {
            if *p > curve[best] {
                best = code;
            }
        }
        Ok(CompareValue(best as u8))
    }

    pub fn oracle_mpp(&self, cycle: u64) -> Result<CompareValue> {
        self.oracle_for_irradiance(self.irradiance_at(cycle))
    }
}

fn validate_schedule(events: &[IrradianceEvent]) -> Result<()> {
    if events.is_empty() {
        return Err(Error::Validation(
            "irradiance schedule needs at least one event".into(),
        ));
    }
    for e in events {
        if !(e.irradiance.is_finite() && e.irradiance >= 0.0) {
            return Err(Error::Validation(format!(
                "irradiance at cycle {} must be finite and non-negative, got {}",
                e.cycle, e.irradiance
            )));
        }
    }
    for pair in events.windows(2) {
        if pair[1].cycle <= pair[0].cycle {
            return Err(Error::Validation(format!(
                "schedule cycles must be strictly increasing ({} then {})",
                pair[0].cycle, pair[1].cycle
            )));
        }
    }
    Ok(())
}
