use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use silverkite::datasets::{synth_series, SeasonalComponent, SynthSpec};
use silverkite::features::SeasonalPeriod;
use silverkite::series::{format_timestamp, Frequency, TimeSeries};
use tempfile::TempDir;

fn write_series(dir: &Path, name: &str, ts: &TimeSeries) -> PathBuf {
    let date_only = !ts.freq().is_subdaily();
    let mut s = String::from("ts,y\n");
    for (t, v) in ts.points() {
        let _ = writeln!(s, "{},{}", format_timestamp(t, date_only), v.map(|x| x.to_string()).unwrap_or_default());
    }
    let path = dir.join(name);
    std::fs::write(&path, s).unwrap();
    path
}

fn write_config(dir: &Path, lines: &str) -> PathBuf {
    let path = dir.join("run.cfg");
    std::fs::write(&path, lines).unwrap();
    path
}

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_silverkite")).current_dir(dir).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn weekly_daily(n: usize, seed: u64) -> TimeSeries {
    let spec = SynthSpec {
        level: 50.0,
        slope: 0.02,
        seasonal: vec![SeasonalComponent::new(SeasonalPeriod::Weekly, 3.0)],
        noise_sd: 0.5,
        ..SynthSpec::daily(n, seed)
    };
    synth_series(&spec).series
}

#[test]
fn minimal_forecast_writes_all_outputs() {
    let dir = TempDir::new().unwrap();
    write_series(dir.path(), "data.csv", &weekly_daily(400, 1));
    write_config(dir.path(), "input = data.csv\nhorizon = 14\n");
    let o = run(dir.path(), &["forecast", "--config", "run.cfg", "--output-dir", "out"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("out");
    let forecast = read(&out, "forecast.csv");
    let lines: Vec<&str> = forecast.lines().collect();
    assert_eq!(lines[0], "ts,forecast,lower,upper");
    assert_eq!(lines.len(), 15);
    for line in &lines[1..] {
        let f: Vec<f64> = line.split(',').skip(1).map(|x| x.parse().unwrap()).collect();
        assert!(f[1] < f[0] && f[0] < f[2], "{line}");
    }
    assert!(read(&out, "summary.txt").starts_with("template: daily_short"));
    assert_eq!(read(&out, "components.csv").lines().count(), 1 + 400 + 14);
    assert!(read(&out, "qq.csv").starts_with("group,theoretical_q,sample_q\n"));
}

#[test]
fn missing_input_is_a_data_error() {
    let dir = TempDir::new().unwrap();
    write_config(dir.path(), "input = absent.csv\n");
    let o = run(dir.path(), &["forecast", "--config", "run.cfg"]);
    assert_eq!(o.status.code(), Some(3));
    let err = stderr(&o);
    assert!(err.starts_with("ERROR io:"), "{err}");
}

#[test]
fn config_errors_name_the_key() {
    let dir = TempDir::new().unwrap();
    write_series(dir.path(), "data.csv", &weekly_daily(100, 1));
    for (cfg, key) in [
        ("input = data.csv\nhorizon_days = 3\n", "horizon_days"),
        ("input = data.csv\ncoverage = 2\n", "coverage"),
        ("input = data.csv\nfit = lasso\n", "fit"),
        ("input = data.csv\nlags = 1, x\n", "lags"),
    ] {
        write_config(dir.path(), cfg);
        let o = run(dir.path(), &["forecast", "--config", "run.cfg"]);
        assert_eq!(o.status.code(), Some(2), "{cfg}");
        let err = stderr(&o);
        assert!(err.starts_with("ERROR ") && err.contains(key), "{err}");
        assert_eq!(err.trim_end().lines().count(), 1);
    }
}

#[test]
fn backtest_writes_detail_and_summary() {
    let dir = TempDir::new().unwrap();
    write_series(dir.path(), "data.csv", &weekly_daily(3 * 365, 2));
    write_config(dir.path(), "input = data.csv\nbacktest.k = 10\nbacktest.horizon = 1\n");
    let o = run(dir.path(), &["backtest", "--config", "run.cfg", "--output-dir", "bt"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let detail = read(&dir.path().join("bt"), "backtest_detail.csv");
    assert_eq!(detail.lines().count(), 1 + 10);
    let summary = read(&dir.path().join("bt"), "backtest_summary.csv");
    let mase = summary.lines().find(|l| l.starts_with("mase,1,")).unwrap();
    let value: f64 = mase.split(',').nth(2).unwrap().parse().unwrap();
    assert!(value.is_finite() && value < 1.0, "{mase}");
}

#[test]
fn backtest_window_flags_reach_the_plan() {
    let dir = TempDir::new().unwrap();
    write_series(dir.path(), "data.csv", &weekly_daily(800, 3));
    write_config(dir.path(), "input = data.csv\nseasonality.yearly.order = 0\n");
    let ok = ["backtest", "--config", "run.cfg", "--k", "3", "--horizon", "2", "--window", "moving", "--train-length", "730"];
    let o = run(dir.path(), &ok);
    assert!(o.status.success(), "{}", stderr(&o));
    let too_long = ["backtest", "--config", "run.cfg", "--k", "3", "--window", "moving", "--train-length", "799"];
    let o = run(dir.path(), &too_long);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("ERROR InfeasiblePlan:"));
}

#[test]
fn infeasible_split_count_exits_with_config_error() {
    let dir = TempDir::new().unwrap();
    write_series(dir.path(), "data.csv", &weekly_daily(200, 4));
    write_config(dir.path(), "input = data.csv\n");
    let o = run(dir.path(), &["backtest", "--config", "run.cfg", "--k", "500"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("ERROR InfeasiblePlan:"), "{}", stderr(&o));
}

#[test]
fn planted_changepoint_file_yields_one_trend_row() {
    let dir = TempDir::new().unwrap();
    let spec = SynthSpec { slope: 0.0, slope_changes: vec![(100, 1.0)], noise_sd: 0.05, ..SynthSpec::daily(200, 42) };
    let series = synth_series(&spec).series;
    write_series(dir.path(), "data.csv", &series);
    write_config(dir.path(), "input = data.csv\n");
    let o = run(dir.path(), &["detect-changepoints", "--config", "run.cfg", "--output-dir", "cp"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let cps = read(&dir.path().join("cp"), "changepoints.csv");
    let trend: Vec<&str> = cps.lines().filter(|l| l.starts_with("trend,")).collect();
    assert_eq!(trend.len(), 1, "{cps}");
    let date = trend[0].split(',').nth(2).unwrap();
    let at = (silverkite::series::parse_timestamp(date).unwrap() - series.start()).num_days();
    assert!((at - 100).abs() <= 5, "{at}");
    assert_eq!(read(&dir.path().join("cp"), "trend_fit.csv").lines().count(), 201);
}

#[test]
fn constant_file_has_header_only() {
    let dir = TempDir::new().unwrap();
    let ts = TimeSeries::from_values(weekly_daily(1, 0).start(), Frequency::daily(), &[7.0; 150]).unwrap();
    write_series(dir.path(), "data.csv", &ts);
    write_config(dir.path(), "input = data.csv\n");
    let o = run(dir.path(), &["detect-changepoints", "--config", "run.cfg", "--output-dir", "cp"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(read(&dir.path().join("cp"), "changepoints.csv"), "kind,period,ts,score\n");
}

#[test]
fn aggregation_finer_than_the_data_is_rejected() {
    let dir = TempDir::new().unwrap();
    let values: Vec<f64> = (0..60).map(|i| i as f64).collect();
    let start = silverkite::series::parse_timestamp("2015-01-01").unwrap();
    let ts = TimeSeries::from_values(start, Frequency::monthly(), &values).unwrap();
    write_series(dir.path(), "data.csv", &ts);
    write_config(dir.path(), "input = data.csv\ndetection.agg = week\n");
    let o = run(dir.path(), &["detect-changepoints", "--config", "run.cfg"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).starts_with("ERROR NotCoarser:"), "{}", stderr(&o));
}

#[test]
fn hourly_daily_overlay_has_one_row_per_hour_and_weekday() {
    let dir = TempDir::new().unwrap();
    let spec = SynthSpec {
        freq: Frequency::hourly(),
        seasonal: vec![SeasonalComponent::new(SeasonalPeriod::Daily, 2.0)],
        ..SynthSpec::daily(24 * 7 * 3, 1)
    };
    write_series(dir.path(), "data.csv", &synth_series(&spec).series);
    write_config(dir.path(), "input = data.csv\nexplore.periods = daily\n");
    let o = run(dir.path(), &["explore", "--config", "run.cfg", "--output-dir", "ex"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let overlay = read(&dir.path().join("ex"), "seasonality_overlay_daily.csv");
    assert_eq!(overlay.lines().count(), 1 + 24 * 7);
}

#[test]
fn weekly_overlay_groups_match_for_a_pure_sinusoid() {
    let dir = TempDir::new().unwrap();
    let spec = SynthSpec { seasonal: vec![SeasonalComponent::new(SeasonalPeriod::Weekly, 1.0)], ..SynthSpec::daily(70, 1) };
    write_series(dir.path(), "data.csv", &synth_series(&spec).series);
    write_config(dir.path(), "input = data.csv\nexplore.periods = weekly, yearly\n");
    let o = run(dir.path(), &["explore", "--config", "run.cfg", "--output-dir", "ex"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let overlay = read(&dir.path().join("ex"), "seasonality_overlay_weekly.csv");
    let mut by_pos: std::collections::BTreeMap<String, Vec<f64>> = Default::default();
    for line in overlay.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        by_pos.entry(f[0].to_string()).or_default().push(f[2].parse().unwrap());
    }
    assert_eq!(by_pos.len(), 7);
    for v in by_pos.values() {
        assert_eq!(v.len(), 10);
        assert!(v.iter().all(|x| (x - v[0]).abs() < 1e-9));
    }
    let yearly = read(&dir.path().join("ex"), "seasonality_overlay_yearly.csv");
    let sum: f64 = yearly.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse::<f64>().unwrap()).sum();
    assert!(sum.abs() < 1e-9);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    write_series(dir.path(), "data.csv", &weekly_daily(300, 5));
    write_config(dir.path(), "input = data.csv\nhorizon = 10\nar_mode = simulate\nsimulate.paths = 20\n");
    for out in ["a", "b"] {
        let o = run(dir.path(), &["forecast", "--config", "run.cfg", "--seed", "17", "--output-dir", out]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["forecast.csv", "components.csv", "summary.txt", "qq.csv"] {
        assert_eq!(read(&dir.path().join("a"), f), read(&dir.path().join("b"), f), "{f}");
    }
}

#[test]
fn usage_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &["bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("ERROR usage:"));
    assert!(run(dir.path(), &["--help"]).status.success());
}
