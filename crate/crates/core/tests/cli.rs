use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn mppt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mppt"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_writes_trace_and_summary_named_after_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(dir.path(), "small.txt", "n_cycles = 1000\n");
    let out = dir.path().join("out");
    let res = mppt(&["run", s(&scenario), "--out-dir", s(&out)]);
    assert_eq!(
        res.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );

    let trace = std::fs::read_to_string(out.join("small.trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(
        lines.next(),
        Some("cycle,v_code,i_code,p_inst,p_avg,compare,step,direction,clock_request,active_ratio,pwm_out,duty")
    );
    assert_eq!(lines.count(), 1000);
    let summary = std::fs::read_to_string(out.join("small.summary.json")).unwrap();
    assert!(summary.contains("\"cycles\": 1000"));
    assert!(String::from_utf8_lossy(&res.stdout).contains("\"decisions\""));
}

#[test]
fn flags_override_the_scenario_file() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(
        dir.path(),
        "noisy.txt",
        "n_cycles = 50000\nnoise_sigma = 0.05\nseed = 1\n",
    );
    let run = |seed: &str, sub: &str| {
        let out = dir.path().join(sub);
        let res = mppt(&[
            "--cycles",
            "2000",
            "--decimate",
            "10",
            "--seed",
            seed,
            "--out-dir",
            s(&out),
            "run",
            s(&scenario),
        ]);
        assert_eq!(res.status.code(), Some(0));
        std::fs::read_to_string(out.join("noisy.trace.csv")).unwrap()
    };
    let a = run("5", "a");
    assert_eq!(a.lines().count(), 201);
    assert_eq!(a, run("5", "b"));
    assert_ne!(a, run("6", "c"));
}

#[test]
fn validation_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    for (name, text) in [
        ("unknown.txt", "colour = blue\n"),
        ("range.txt", "averaging = 4\n"),
        ("malformed.txt", "d_star 0.5\n"),
        ("cross.txt", "t1 = 300\nt2 = 200\n"),
        ("schedule.txt", "schedule = 10:1.0, 5:0.5\n"),
    ] {
        let scenario = write(dir.path(), name, text);
        let res = mppt(&["run", s(&scenario), "--out-dir", s(dir.path())]);
        assert_eq!(
            res.status.code(),
            Some(1),
            "{name}: {}",
            String::from_utf8_lossy(&res.stderr)
        );
        assert!(!res.stderr.is_empty());
    }
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(mppt(&[]).status.code(), Some(1));
    assert_eq!(mppt(&["run"]).status.code(), Some(1));
    assert_eq!(mppt(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn io_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.txt");
    let res = mppt(&["run", s(&missing)]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("missing.txt"));

    let blocker = write(dir.path(), "blocker", "");
    let scenario = write(dir.path(), "ok.txt", "n_cycles = 10\n");
    let res = mppt(&["run", s(&scenario), "--out-dir", s(&blocker.join("sub"))]);
    assert_eq!(res.status.code(), Some(2));

    let res = mppt(&["power", "fit", s(&missing)]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn oracle_prints_one_row_per_segment() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(
        dir.path(),
        "steps.txt",
        "schedule = 0:1.0, 100:0.5, 200:0.0\n",
    );
    let res = mppt(&["oracle", s(&scenario)]);
    assert_eq!(res.status.code(), Some(0));
    let text = String::from_utf8(res.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[1].starts_with("0,1,128,"));
    assert!(rows[2].starts_with("100,0.5,128,"));
}

#[test]
fn compare_reports_both_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "gated.txt", "n_cycles = 20000\n");
    let b = write(
        dir.path(),
        "pinned.txt",
        "n_cycles = 20000\nclock_gating = false\n",
    );
    let res = mppt(&["compare", s(&a), s(&b), "--out-dir", s(dir.path())]);
    assert_eq!(res.status.code(), Some(0));
    let text = String::from_utf8(res.stdout).unwrap();
    assert!(text.lines().next().unwrap().contains("gated"));
    assert!(text.contains("mean_estimated_controller_power"));
    assert!(dir.path().join("gated.summary.json").exists());
    assert!(dir.path().join("pinned.summary.json").exists());
}

#[test]
fn power_fit_writes_plot_series() {
    let dir = tempfile::tempdir().unwrap();
    let table = write(dir.path(), "table.csv", mppt::power_model::PVT_TABLE);
    let res = mppt(&["power", "fit", s(&table), "--out-dir", s(dir.path())]);
    assert_eq!(
        res.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let report = String::from_utf8(res.stdout).unwrap();
    assert_eq!(report.lines().count(), 10);
    for name in [
        "power_vs_vdd_TT_27C.dat",
        "power_vs_temp_SS_0.4V.dat",
        "power_vs_temp_TT_0.4V.dat",
        "power_vs_temp_FF_0.4V.dat",
    ] {
        let series = std::fs::read_to_string(dir.path().join(name)).unwrap();
        assert!(series.lines().count() >= 3, "{name}");
    }

    let bad = write(
        dir.path(),
        "bad.csv",
        "v_dd,corner,temp_c,p_avg_uw_per_mhz\n0.4,XX,27,1.0\n",
    );
    assert_eq!(mppt(&["power", "fit", s(&bad)]).status.code(), Some(1));
}
