//! Scenario runner: configuration in, trace and summary out.

pub mod metrics;
pub mod output;
pub mod scenario;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::controller::{SystemState, TraceRecord};
use crate::error::{Error, Result};
use crate::power_model::{self, Calibration, Corner, PowerModelParams, PvtSample};
use crate::pwm::duty_ratio;

pub use metrics::{compute_metrics, MetricsContext, RunSummary};
pub use scenario::{parse_scenario, ScenarioConfig};

pub fn read_scenario(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scenario(&text)
}

/// Fitted consumption model for the scenario's corner and temperature.
pub fn power_params(config: &ScenarioConfig) -> Result<PowerModelParams> {
    let table = power_model::builtin_table();
    if power_model::cell_samples(&table, config.corner, config.temperature_c).is_empty() {
        return Err(Error::Validation(format!(
            "no characterization data for {} at {} °C",
            config.corner, config.temperature_c
        )));
    }
    Ok(power_model::fit_cell(&table, config.corner, config.temperature_c)?.params)
}

pub fn metrics_context(config: &ScenarioConfig) -> Result<MetricsContext> {
    Ok(MetricsContext {
        plant: config.plant()?,
        power: power_params(config)?,
        f_sys: config.f_sys,
        vdd: config.vdd,
        prescale_code: config.prescale,
    })
}

/// Runs the controller for `n_cycles` and computes the summary, all in memory.
pub fn simulate(config: &ScenarioConfig) -> Result<(Vec<TraceRecord>, RunSummary)> {
    config.validate()?;
    let ctx = metrics_context(config)?;
    let mut state = SystemState::reset(config.controller()?)?;
    let trace = state.run(&ctx.plant, config.n_cycles);
    let summary = compute_metrics(&trace, &ctx)?;
    Ok((trace, summary))
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace_path: PathBuf,
    pub summary_path: PathBuf,
    pub summary: RunSummary,
}

pub fn trace_path(config: &ScenarioConfig) -> PathBuf {
    config.out_dir.join(format!("{}.trace.csv", config.name))
}

pub fn summary_path(config: &ScenarioConfig) -> PathBuf {
    config.out_dir.join(format!("{}.summary.json", config.name))
}

/// Simulates and writes `<name>.trace.csv` and `<name>.summary.json` into `out_dir`.
pub fn run_scenario(config: &ScenarioConfig) -> Result<RunOutput> {
    let (trace, summary) = simulate(config)?;
    std::fs::create_dir_all(&config.out_dir).map_err(|e| Error::io(&config.out_dir, e))?;
    let trace_path = trace_path(config);
    let summary_path = summary_path(config);
    output::write_trace_file(&trace_path, &trace, config.decimate)?;
    output::write_summary_file(&summary_path, &summary)?;
    Ok(RunOutput {
        trace_path,
        summary_path,
        summary,
    })
}

/// Recomputes the summary from a written trace file.
pub fn summarize_trace_file(config: &ScenarioConfig, path: &Path) -> Result<RunSummary> {
    let trace = output::read_trace_file(path)?;
    compute_metrics(&trace, &metrics_context(config)?)
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub a: RunSummary,
    pub b: RunSummary,
}

fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "-".to_string(), T::to_string)
}

type Row = (&'static str, fn(&RunSummary) -> String);

impl Comparison {
    pub fn report(&self, name_a: &str, name_b: &str) -> String {
        let mut s = String::new();
        let rows: [Row; 7] = [
            ("decisions", |r| r.decisions.to_string()),
            ("convergence_decisions", |r| opt(&r.convergence_decisions)),
            ("converged", |r| r.converged.to_string()),
            ("tracking_efficiency", |r| {
                opt(&r.tracking_efficiency.map(|e| format!("{e:.6}")))
            }),
            ("steady_state_band", |r| opt(&r.steady_state_band)),
            ("final_ratio", |r| r.final_ratio.to_string()),
            ("mean_estimated_controller_power", |r| {
                format!("{:.6e}", r.mean_estimated_controller_power)
            }),
        ];
        let _ = writeln!(s, "{:<32} {:>16} {:>16}", "metric", name_a, name_b);
        for (label, f) in rows {
            let _ = writeln!(s, "{:<32} {:>16} {:>16}", label, f(&self.a), f(&self.b));
        }
        s
    }
}

pub fn compare_runs(a: &ScenarioConfig, b: &ScenarioConfig) -> Result<Comparison> {
    Ok(Comparison {
        a: run_scenario(a)?.summary,
        b: run_scenario(b)?.summary,
    })
}

/// Oracle compare value for each irradiance segment of the scenario.
pub fn oracle_report(config: &ScenarioConfig) -> Result<String> {
    let plant = config.plant()?;
    let mut s = String::from("cycle,irradiance,oracle_compare,duty\n");
    for e in plant.schedule() {
        let o = plant.oracle_for_irradiance(e.irradiance)?;
        let _ = writeln!(
            s,
            "{},{},{},{}",
            e.cycle,
            e.irradiance,
            o.get(),
            duty_ratio(o)
        );
    }
    Ok(s)
}

/// Fits every table cell and writes plot series; returns a text report.
pub fn power_fit(table: &[PvtSample], out_dir: &Path) -> Result<(Vec<Calibration>, String)> {
    let fits = power_model::fit_all(table)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let mut report =
        String::from("corner,temp_c,a_uw_per_mhz_v2,b_uw_per_mhz_v,max_rel_residual\n");
    for cal in &fits {
        let p = &cal.params;
        let _ = writeln!(
            report,
            "{},{},{:.6},{:.6},{:.4}",
            p.corner,
            p.temperature_c,
            p.a * 1e12,
            p.b * 1e6,
            cal.max_abs_residual()
        );
    }

    let nominal = fits
        .iter()
        .find(|c| c.params.corner == Corner::TT && c.params.temperature_c == 27.0)
        .or_else(|| fits.first());
    if let Some(cal) = nominal {
        let p = &cal.params;
        let path = out_dir.join(format!(
            "power_vs_vdd_{}_{}C.dat",
            p.corner, p.temperature_c
        ));
        output::write_series(
            &path,
            "v_dd_V",
            "p_avg_uW_per_MHz",
            &power_model::supply_sweep(p, 0.4, 1.2, 17),
        )?;
    }

    let v_low = 0.4;
    for corner in Corner::ALL {
        let points: Vec<(f64, f64)> = fits
            .iter()
            .filter(|c| c.params.corner == corner)
            .map(|c| (c.params.temperature_c, c.params.per_mhz(v_low)))
            .collect();
        if !points.is_empty() {
            let path = out_dir.join(format!("power_vs_temp_{corner}_{v_low}V.dat"));
            output::write_series(&path, "temp_C", "p_avg_uW_per_MHz", &points)?;
        }
    }
    Ok((fits, report))
}
