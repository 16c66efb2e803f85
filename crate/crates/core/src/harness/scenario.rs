//! Flat `key = value` scenario files.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::controller::ControllerConfig;
use crate::error::{Error, Result};
use crate::plant::{IrradianceEvent, PlantModel};
use crate::power_model::Corner;
use crate::tracking::{AveragingCode, CalmLimits, StepThresholds, TrackerConfig};

/// Every tunable of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub averaging: u8,
    pub prescale: u8,
    pub t1: u32,
    pub t2: u32,
    pub t3: u32,
    pub h2: u32,
    pub h3: u32,
    pub clamp_min: u8,
    pub clamp_max: u8,
    pub variable_step: bool,
    pub clock_gating: bool,
    pub p_max: f64,
    pub d_star: f64,
    pub k: f64,
    pub v_max: f64,
    pub v_full_scale: f64,
    pub i_full_scale: f64,
    pub noise_sigma: f64,
    pub schedule: Vec<IrradianceEvent>,
    pub seed: u64,
    pub n_cycles: u64,
    pub decimate: u64,
    pub out_dir: PathBuf,
    pub f_sys: f64,
    pub vdd: f64,
    pub corner: Corner,
    pub temperature_c: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let tracker = TrackerConfig::default();
        let plant = PlantModel::default();
        ScenarioConfig {
            name: "scenario".into(),
            averaging: tracker.averaging.code(),
            prescale: 0,
            t1: tracker.thresholds.t1,
            t2: tracker.thresholds.t2,
            t3: tracker.thresholds.t3,
            h2: tracker.calm.h2,
            h3: tracker.calm.h3,
            clamp_min: tracker.clamp_min,
            clamp_max: tracker.clamp_max,
            variable_step: tracker.variable_step,
            clock_gating: true,
            p_max: plant.p_max,
            d_star: plant.d_star,
            k: plant.k,
            v_max: plant.v_max,
            v_full_scale: plant.v_full_scale,
            i_full_scale: plant.i_full_scale,
            noise_sigma: plant.noise_sigma,
            schedule: plant.schedule().to_vec(),
            seed: plant.seed,
            n_cycles: 1_000_000,
            decimate: 1,
            out_dir: PathBuf::from("out"),
            f_sys: 1.0e6,
            vdd: 0.4,
            corner: Corner::TT,
            temperature_c: 27.0,
        }
    }
}

impl ScenarioConfig {
    pub fn controller(&self) -> Result<ControllerConfig> {
        let config = ControllerConfig {
            tracker: TrackerConfig {
                averaging: AveragingCode::new(self.averaging).map_err(|_| {
                    Error::Validation(format!("averaging must be 0..=3, got {}", self.averaging))
                })?,
                thresholds: StepThresholds {
                    t1: self.t1,
                    t2: self.t2,
                    t3: self.t3,
                },
                calm: CalmLimits {
                    h2: self.h2,
                    h3: self.h3,
                },
                clamp_min: self.clamp_min,
                clamp_max: self.clamp_max,
                variable_step: self.variable_step,
            },
            prescale_code: self.prescale,
            clock_gating: self.clock_gating,
        };
        config.tracker.validate()?;
        Ok(config)
    }

    pub fn plant(&self) -> Result<PlantModel> {
        let mut plant = PlantModel::default();
        plant.p_max = self.p_max;
        plant.d_star = self.d_star;
        plant.k = self.k;
        plant.v_max = self.v_max;
        plant.v_full_scale = self.v_full_scale;
        plant.i_full_scale = self.i_full_scale;
        plant.noise_sigma = self.noise_sigma;
        plant.seed = self.seed;
        plant.set_schedule(self.schedule.clone())?;
        plant.validate()?;
        Ok(plant)
    }

    pub fn validate(&self) -> Result<()> {
        self.controller()?;
        self.plant()?;
        if self.decimate == 0 {
            return Err(Error::Validation("decimate must be at least 1".into()));
        }
        if !(self.f_sys.is_finite() && self.f_sys > 0.0) {
            return Err(Error::Validation(format!(
                "f_sys must be positive, got {}",
                self.f_sys
            )));
        }
        if !(self.vdd.is_finite() && self.vdd > 0.0) {
            return Err(Error::Validation(format!(
                "vdd must be positive, got {}",
                self.vdd
            )));
        }
        if !self.temperature_c.is_finite() {
            return Err(Error::Validation("temperature_c must be finite".into()));
        }
        Ok(())
    }

    /// Renders the configuration in the scenario file format; parsing the
    /// result yields an identical configuration.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("name", self.name.clone());
        put("averaging", self.averaging.to_string());
        put("prescale", self.prescale.to_string());
        put("t1", self.t1.to_string());
        put("t2", self.t2.to_string());
        put("t3", self.t3.to_string());
        put("h2", self.h2.to_string());
        put("h3", self.h3.to_string());
        put("clamp_min", self.clamp_min.to_string());
        put("clamp_max", self.clamp_max.to_string());
        put("variable_step", self.variable_step.to_string());
        put("clock_gating", self.clock_gating.to_string());
        put("p_max", self.p_max.to_string());
        put("d_star", self.d_star.to_string());
        put("k", self.k.to_string());
        put("v_max", self.v_max.to_string());
        put("v_full_scale", self.v_full_scale.to_string());
        put("i_full_scale", self.i_full_scale.to_string());
        put("noise_sigma", self.noise_sigma.to_string());
        put("schedule", format_schedule(&self.schedule));
        put("seed", self.seed.to_string());
        put("n_cycles", self.n_cycles.to_string());
        put("decimate", self.decimate.to_string());
        put("out_dir", self.out_dir.display().to_string());
        put("f_sys", self.f_sys.to_string());
        put("vdd", self.vdd.to_string());
        put("corner", self.corner.to_string());
        put("temperature_c", self.temperature_c.to_string());
        s
    }
}

pub fn format_schedule(events: &[IrradianceEvent]) -> String {
    events
        .iter()
        .map(|e| format!("{}:{}", e.cycle, e.irradiance))
        .collect::<Vec<_>>()
        .join(", ")
}

fn parse_schedule(value: &str) -> std::result::Result<Vec<IrradianceEvent>, String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let (cycle, irr) = item
                .split_once(':')
                .ok_or_else(|| format!("schedule entry {item:?} is not cycle:irradiance"))?;
            let cycle = cycle
                .trim()
                .parse()
                .map_err(|_| format!("bad schedule cycle {cycle:?}"))?;
            let irradiance = irr
                .trim()
                .parse()
                .map_err(|_| format!("bad schedule irradiance {irr:?}"))?;
            Ok(IrradianceEvent { cycle, irradiance })
        })
        .collect()
}

fn value<T: FromStr>(key: &str, raw: &str) -> std::result::Result<T, String> {
    raw.parse()
        .map_err(|_| format!("malformed value {raw:?} for {key}"))
}

fn in_range(key: &str, x: f64, ok: bool, what: &str) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(format!("{key} = {x} is out of range ({what})"))
    }
}

/// Applies one `key = value` pair, checking the value's own range.
fn apply(cfg: &mut ScenarioConfig, key: &str, raw: &str) -> std::result::Result<(), String> {
    match key {
        "name" => cfg.name = raw.to_string(),
        "averaging" => {
            cfg.averaging = value(key, raw)?;
            if cfg.averaging > 3 {
                return Err(format!(
                    "averaging = {} is out of range (0..=3)",
                    cfg.averaging
                ));
            }
        }
        "prescale" => cfg.prescale = value(key, raw)?,
        "t1" => cfg.t1 = value(key, raw)?,
        "t2" => cfg.t2 = value(key, raw)?,
        "t3" => cfg.t3 = value(key, raw)?,
        "h2" => cfg.h2 = value(key, raw)?,
        "h3" => cfg.h3 = value(key, raw)?,
        "clamp_min" => cfg.clamp_min = value(key, raw)?,
        "clamp_max" => cfg.clamp_max = value(key, raw)?,
        "variable_step" => cfg.variable_step = value(key, raw)?,
        "clock_gating" => cfg.clock_gating = value(key, raw)?,
        "p_max" => {
            cfg.p_max = value(key, raw)?;
            in_range(
                key,
                cfg.p_max,
                cfg.p_max.is_finite() && cfg.p_max > 0.0,
                "> 0",
            )?;
        }
        "d_star" => {
            cfg.d_star = value(key, raw)?;
            in_range(
                key,
                cfg.d_star,
                cfg.d_star > 0.0 && cfg.d_star < 1.0,
                "strictly between 0 and 1",
            )?;
        }
        "k" => {
            cfg.k = value(key, raw)?;
            in_range(key, cfg.k, cfg.k.is_finite() && cfg.k > 0.0, "> 0")?;
        }
        "v_max" => {
            cfg.v_max = value(key, raw)?;
            in_range(
                key,
                cfg.v_max,
                cfg.v_max.is_finite() && cfg.v_max > 0.0,
                "> 0",
            )?;
        }
        "v_full_scale" => {
            cfg.v_full_scale = value(key, raw)?;
            in_range(
                key,
                cfg.v_full_scale,
                cfg.v_full_scale.is_finite() && cfg.v_full_scale > 0.0,
                "> 0",
            )?;
        }
        "i_full_scale" => {
            cfg.i_full_scale = value(key, raw)?;
            in_range(
                key,
                cfg.i_full_scale,
                cfg.i_full_scale.is_finite() && cfg.i_full_scale > 0.0,
                "> 0",
            )?;
        }
        "noise_sigma" => {
            cfg.noise_sigma = value(key, raw)?;
            in_range(
                key,
                cfg.noise_sigma,
                cfg.noise_sigma.is_finite() && cfg.noise_sigma >= 0.0,
                ">= 0",
            )?;
        }
        "schedule" => cfg.schedule = parse_schedule(raw)?,
        "seed" => cfg.seed = value(key, raw)?,
        "n_cycles" => cfg.n_cycles = value(key, raw)?,
        "decimate" => {
            cfg.decimate = value(key, raw)?;
            if cfg.decimate == 0 {
                return Err("decimate = 0 is out of range (>= 1)".into());
            }
        }
        "out_dir" => cfg.out_dir = PathBuf::from(raw),
        "f_sys" => {
            cfg.f_sys = value(key, raw)?;
            in_range(
                key,
                cfg.f_sys,
                cfg.f_sys.is_finite() && cfg.f_sys > 0.0,
                "> 0",
            )?;
        }
        "vdd" => {
            cfg.vdd = value(key, raw)?;
            in_range(key, cfg.vdd, cfg.vdd.is_finite() && cfg.vdd > 0.0, "> 0")?;
        }
        "corner" => cfg.corner = raw.parse().map_err(|e: Error| e.to_string())?,
        "temperature_c" => cfg.temperature_c = value(key, raw)?,
        _ => return Err(format!("unknown key {key:?}")),
    }
    Ok(())
}

/// Parses a scenario document. Missing keys keep their defaults.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::default();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, raw) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: line_no,
            message: format!("expected `key = value`, got {line:?}"),
        })?;
        apply(&mut cfg, key.trim(), raw.trim()).map_err(|message| Error::Parse {
            line: line_no,
            message,
        })?;
    }
    cfg.validate()?;
    Ok(cfg)
}
