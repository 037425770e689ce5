//! Batch command-line front end: flat `key = value` configs, the four
//! subcommands and their CSV/text outputs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::changepoint::{detect_seasonality_changepoints, detect_trend_changepoints, DetectionConfig};
use crate::error::{Error, ErrorKind, Result};
use crate::evaluate::{default_min_train, make_rolling_splits, run_backtest, ModelForecaster, Window};
use crate::features::{
    EventSpec, GrowthFunction, InteractionSpec, RegressorSpec, SeasonalPeriod, SeasonalitySpec, TimeFeature,
};
use crate::forecast::{fit_with, ArMode, FitSpec, ForecastConfig, GrowthConfig, HolidayConfig, Template};
use crate::holidays::{resolve_holiday_file, HolidayCalendar};
use crate::series::{
    dates_only, format_timestamp, parse_timestamp, read_csv, AnomalyWindow, Frequency, SeriesFrame, TimeSeries,
    Timestamp,
};
use crate::volatility::VolatilityMethod;

#[derive(Debug, Parser)]
#[command(name = "silverkite", version, about = "Interpretable additive time-series forecasting")]
pub struct Cli {
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Input CSV (`ts,y[,regressors...]`); overrides the `input` key.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    /// Seed for simulate-mode forecasts.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit and forecast; writes forecast.csv, components.csv, summary.txt, qq.csv.
    Forecast,
    /// Rolling-origin backtest; writes backtest_detail.csv, backtest_summary.csv.
    Backtest(BacktestArgs),
    /// Trend and seasonality changepoints; writes changepoints.csv, trend_fit.csv.
    DetectChangepoints,
    /// Seasonality overlays; writes seasonality_overlay_<period>.csv.
    Explore,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WindowArg {
    Expanding,
    Moving,
}

#[derive(Debug, Args, Default)]
pub struct BacktestArgs {
    /// Number of splits.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Steps between successive test windows.
    #[arg(long)]
    pub period: Option<usize>,
    #[arg(long, value_enum)]
    pub window: Option<WindowArg>,
    /// Moving-window training length.
    #[arg(long)]
    pub train_length: Option<usize>,
}

const FIXED_KEYS: &[&str] = &[
    "input",
    "output_dir",
    "template",
    "freq",
    "holiday_files",
    "seed",
    "horizon",
    "coverage",
    "growth",
    "growth.changepoints",
    "growth.auto_changepoints",
    "seasonality.auto_changepoints",
    "holidays.enabled",
    "holidays.countries",
    "holidays.pre_days",
    "holidays.post_days",
    "time_features",
    "lags",
    "avg_lags",
    "interactions",
    "fit",
    "fit.lambda",
    "fit.grid",
    "fit.q",
    "anomalies",
    "volatility.features",
    "volatility.method",
    "volatility.min_group_size",
    "ar_mode",
    "simulate.paths",
    "simulate.seed",
    "detection.agg",
    "detection.n_candidates",
    "detection.end_exclusion",
    "detection.lambda_strength",
    "detection.trend_min_distance_days",
    "detection.seasonality_min_distance_days",
    "detection.yearly_order",
    "detection.significance",
    "backtest.k",
    "backtest.horizon",
    "backtest.period",
    "backtest.window",
    "backtest.train_length",
    "backtest.min_train",
    "explore.periods",
];

fn known_key(key: &str) -> bool {
    if FIXED_KEYS.contains(&key) {
        return true;
    }
    let parts: Vec<&str> = key.split('.').collect();
    match parts.as_slice() {
        ["seasonality", tag, field] => SeasonalPeriod::from_tag(tag).is_some() && matches!(*field, "order" | "changepoints"),
        ["events", name, field] => !name.is_empty() && matches!(*field, "dates" | "pre_days" | "post_days"),
        ["regressors", name, field] => !name.is_empty() && matches!(*field, "mode" | "lag"),
        _ => false,
    }
}

/// Parsed `key = value` lines. `#` starts a comment line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    pub entries: BTreeMap<String, String>,
    /// Directory relative paths are resolved against.
    pub base_dir: PathBuf,
}

impl ConfigFile {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", no + 1)))?;
            let key = k.trim().to_string();
            if !known_key(&key) {
                return Err(Error::Config(format!("unknown config key `{key}`")));
            }
            if entries.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(Error::Config(format!("duplicate config key `{key}`")));
            }
        }
        Ok(Self { entries, base_dir: base_dir.to_path_buf() })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| Error::Io { path: path.display().to_string(), source })?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.get(key).map(|v| self.base_dir.join(v))
    }

    fn parse_value<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|_| Error::Config(format!("key `{key}`: expected {what}, got `{v}`"))))
            .transpose()
    }

    fn usize(&self, key: &str) -> Result<Option<usize>> {
        self.parse_value(key, "a non-negative integer")
    }

    fn f64(&self, key: &str) -> Result<Option<f64>> {
        self.parse_value(key, "a number")
    }

    fn bool(&self, key: &str) -> Result<Option<bool>> {
        self.parse_value(key, "true or false")
    }

    fn list(&self, key: &str) -> Option<Vec<String>> {
        self.get(key).map(split_list)
    }

    fn dates(&self, key: &str) -> Result<Option<Vec<Timestamp>>> {
        self.list(key)
            .map(|items| {
                items
                    .iter()
                    .map(|s| parse_timestamp(s).ok_or_else(|| Error::Config(format!("key `{key}`: bad timestamp `{s}`"))))
                    .collect()
            })
            .transpose()
    }

    fn prefixed(&self, head: &str) -> Vec<(String, String)> {
        let mut names: Vec<String> = self
            .entries
            .keys()
            .filter_map(|k| k.strip_prefix(head)?.strip_prefix('.')?.split_once('.'))
            .map(|(n, _)| n.to_string())
            .collect();
        names.dedup();
        names.into_iter().map(|n| (n.clone(), format!("{head}.{n}"))).collect()
    }
}

fn split_list(v: &str) -> Vec<String> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_string).collect()
}

/// Everything a subcommand needs after config resolution.
#[derive(Debug, Clone)]
pub struct Settings {
    pub input: PathBuf,
    pub output_dir: PathBuf,
    pub freq: Option<Frequency>,
    pub forecast: ForecastConfig,
    pub holidays: HolidayCalendar,
    pub template: Template,
    pub explore_periods: Option<Vec<SeasonalPeriod>>,
    file: ConfigFile,
}

/// Loads the input named by the config (or flag) and resolves the model
/// config: the named template (or the default for the data frequency) with
/// explicit keys applied on top.
pub fn resolve(cli: &Cli) -> Result<(Settings, SeriesFrame)> {
    let file = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile { entries: BTreeMap::new(), base_dir: PathBuf::from(".") },
    };
    let input = cli
        .input
        .clone()
        .or_else(|| file.path("input"))
        .ok_or_else(|| Error::Config("missing required key `input`".into()))?;
    let freq = file
        .get("freq")
        .map(|f| Frequency::parse(f).ok_or_else(|| Error::Config(format!("key `freq`: unknown frequency `{f}`"))))
        .transpose()?;
    let named = file
        .get("template")
        .map(|t| Template::from_name(t).ok_or_else(|| Error::Config(format!("key `template`: unknown template `{t}`"))))
        .transpose()?;
    let mut holidays = HolidayCalendar::builtin();
    if let Some(files) = file.list("holiday_files") {
        let search = [file.base_dir.clone(), PathBuf::from(".")];
        for name in files {
            let path = resolve_holiday_file(&name, &search).ok_or_else(|| Error::Io {
                path: name.clone(),
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "holiday file not found"),
            })?;
            holidays.merge(HolidayCalendar::load(&path)?);
        }
    }

    let frame = read_csv(&input, freq)?;
    let template = named.unwrap_or_else(|| Template::default_for(frame.series.freq()));
    let mut config = ForecastConfig::template(template);
    apply_keys(&file, &mut config, frame.series.freq())?;
    if let Some(seed) = cli.seed {
        if let ArMode::Simulate { seed: s, .. } = &mut config.ar_mode {
            *s = seed;
        }
    }
    let explore_periods = file
        .list("explore.periods")
        .map(|tags| {
            tags.iter()
                .map(|t| SeasonalPeriod::from_tag(t).ok_or_else(|| Error::Config(format!("key `explore.periods`: unknown period `{t}`"))))
                .collect::<Result<Vec<_>>>()
        })
        .transpose()?;
    let output_dir = cli.output_dir.clone().or_else(|| file.path("output_dir")).unwrap_or_else(|| PathBuf::from("output"));
    Ok((Settings { input, output_dir, freq, forecast: config, holidays, template, explore_periods, file }, frame))
}

/// Builds a model config from `key = value` pairs using the same keys as
/// config files. Keys that only matter to the CLI (`input`, `output_dir`,
/// `backtest.*`, ...) are accepted and ignored.
pub fn config_from_entries(entries: BTreeMap<String, String>, freq: Frequency) -> Result<ForecastConfig> {
    if let Some(k) = entries.keys().find(|k| !known_key(k)) {
        return Err(Error::Config(format!("unknown config key `{k}`")));
    }
    let file = ConfigFile { entries, base_dir: PathBuf::from(".") };
    let template = match file.get("template") {
        Some(t) => Template::from_name(t).ok_or_else(|| Error::Config(format!("key `template`: unknown template `{t}`")))?,
        None => Template::default_for(freq),
    };
    let mut config = ForecastConfig::template(template);
    apply_keys(&file, &mut config, freq)?;
    Ok(config)
}

fn apply_keys(file: &ConfigFile, c: &mut ForecastConfig, freq: Frequency) -> Result<()> {
    let cfg_err = |key: &str, msg: String| Error::Config(format!("key `{key}`: {msg}"));
    if let Some(h) = file.usize("horizon")? {
        c.horizon = h;
    }
    if let Some(v) = file.f64("coverage")? {
        c.coverage = v;
    }

    if let Some(g) = file.get("growth") {
        c.growth = match g {
            "none" => None,
            other => {
                let func = GrowthFunction::from_name(other)
                    .ok_or_else(|| cfg_err("growth", format!("unknown growth `{other}`")))?;
                Some(GrowthConfig { func, ..c.growth.clone().unwrap_or_else(GrowthConfig::linear) })
            }
        };
    }
    let manual = file.dates("growth.changepoints")?;
    let auto = file.bool("growth.auto_changepoints")?;
    if manual.is_some() || auto.is_some() {
        let g = c.growth.get_or_insert_with(GrowthConfig::linear);
        if let Some(m) = manual {
            g.changepoints = m;
        }
        if let Some(a) = auto {
            g.auto = a;
        }
    }

    for (tag, prefix) in file.prefixed("seasonality") {
        let period = SeasonalPeriod::from_tag(&tag).ok_or_else(|| cfg_err(&prefix, "unknown period".into()))?;
        let pos = c.seasonality.iter().position(|s| s.period.tag() == tag);
        let order = file.usize(&format!("{prefix}.order"))?;
        if order == Some(0) {
            if let Some(i) = pos {
                c.seasonality.remove(i);
            }
            continue;
        }
        let spec = match pos {
            Some(i) => &mut c.seasonality[i],
            None => {
                let o = order.ok_or_else(|| cfg_err(&format!("{prefix}.order"), "required for a new period".into()))?;
                c.seasonality.push(SeasonalitySpec::new(period, o));
                c.seasonality.last_mut().expect("just pushed")
            }
        };
        if let Some(o) = order {
            spec.order = o;
        }
        if let Some(cps) = file.dates(&format!("{prefix}.changepoints"))? {
            spec.changepoints = cps;
        }
    }
    if let Some(a) = file.bool("seasonality.auto_changepoints")? {
        c.auto_seasonality_changepoints = a;
    }

    if file.bool("holidays.enabled")? == Some(false) {
        c.holidays = None;
    } else {
        let touched = ["holidays.enabled", "holidays.countries", "holidays.pre_days", "holidays.post_days"]
            .iter()
            .any(|k| file.get(k).is_some());
        if touched {
            let h = c.holidays.get_or_insert(HolidayConfig { countries: Vec::new(), pre_days: 0, post_days: 0 });
            if let Some(list) = file.list("holidays.countries") {
                h.countries = list;
            }
            if let Some(v) = file.parse_value::<u32>("holidays.pre_days", "a non-negative integer")? {
                h.pre_days = v;
            }
            if let Some(v) = file.parse_value::<u32>("holidays.post_days", "a non-negative integer")? {
                h.post_days = v;
            }
        }
    }

    for (name, prefix) in file.prefixed("events") {
        let key = format!("{prefix}.dates");
        let dates: Vec<NaiveDate> = file
            .dates(&key)?
            .ok_or_else(|| cfg_err(&key, "event needs dates".into()))?
            .into_iter()
            .map(|t| t.date())
            .collect();
        let pre = file.parse_value::<u32>(&format!("{prefix}.pre_days"), "a non-negative integer")?.unwrap_or(0);
        let post = file.parse_value::<u32>(&format!("{prefix}.post_days"), "a non-negative integer")?.unwrap_or(0);
        c.events.push(EventSpec::new(&name, dates, pre, post));
    }

    if let Some(list) = file.list("time_features") {
        c.time_features = list
            .iter()
            .map(|n| TimeFeature::from_name(n).ok_or_else(|| cfg_err("time_features", format!("unknown feature `{n}`"))))
            .collect::<Result<_>>()?;
    }
    if let Some(v) = file.get("lags") {
        c.lags.lags = parse_orders("lags", v)?;
    }
    if let Some(v) = file.get("avg_lags") {
        c.lags.agg_lags = v
            .split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|set| parse_orders("avg_lags", set))
            .collect::<Result<_>>()?;
    }

    for (name, prefix) in file.prefixed("regressors") {
        let lag = file.usize(&format!("{prefix}.lag"))?;
        let mode = file.get(&format!("{prefix}.mode")).unwrap_or(if lag.is_some() { "lagged" } else { "future" });
        let spec = match mode {
            "future" => RegressorSpec::future(&name),
            "lagged" => RegressorSpec::lagged(&name, lag.unwrap_or(1)),
            other => return Err(cfg_err(&format!("{prefix}.mode"), format!("expected future or lagged, got `{other}`"))),
        };
        c.regressors.push(spec);
    }
    if let Some(list) = file.list("interactions") {
        c.interactions = list
            .iter()
            .map(|s| InteractionSpec::parse(s).ok_or_else(|| cfg_err("interactions", format!("expected `left:right`, got `{s}`"))))
            .collect::<Result<_>>()?;
    }

    if let Some(f) = file.get("fit") {
        c.fit = match f {
            "ols" => FitSpec::Ols,
            "ridge" => match file.get("fit.lambda") {
                None | Some("cv") => FitSpec::RidgeCv(match file.list("fit.grid") {
                    Some(g) => g
                        .iter()
                        .map(|x| x.parse().map_err(|_| cfg_err("fit.grid", format!("bad number `{x}`"))))
                        .collect::<Result<_>>()?,
                    None => crate::forecast::RIDGE_CV_GRID.to_vec(),
                }),
                Some(_) => FitSpec::Ridge(file.f64("fit.lambda")?.expect("present")),
            },
            "quantile" => FitSpec::Quantile {
                q: file.f64("fit.q")?.unwrap_or(0.5),
                lambda: match file.get("fit.lambda") {
                    Some("cv") => return Err(cfg_err("fit.lambda", "cv is only available for ridge".into())),
                    _ => file.f64("fit.lambda")?.unwrap_or(0.0),
                },
            },
            other => return Err(cfg_err("fit", format!("expected ols, ridge or quantile, got `{other}`"))),
        };
    }

    if let Some(list) = file.list("anomalies") {
        c.anomalies = list.iter().map(|s| parse_anomaly(s)).collect::<Result<_>>()?;
    }
    if let Some(list) = file.list("volatility.features") {
        c.volatility_features = list.into_iter().filter(|s| s != "none").collect();
    }
    if let Some(m) = file.get("volatility.method") {
        c.volatility_method =
            VolatilityMethod::from_name(m).ok_or_else(|| cfg_err("volatility.method", format!("unknown method `{m}`")))?;
    }
    if let Some(n) = file.usize("volatility.min_group_size")? {
        c.min_group_size = n;
    }

    let seed = file.parse_value::<u64>("seed", "a non-negative integer")?;
    match file.get("ar_mode") {
        None | Some("plugin") => {
            if file.get("simulate.paths").is_some() || file.get("simulate.seed").is_some() {
                return Err(cfg_err("ar_mode", "simulate.* keys need ar_mode = simulate".into()));
            }
            if file.get("ar_mode").is_some() {
                c.ar_mode = ArMode::Plugin;
            }
        }
        Some("simulate") => {
            let paths = file.usize("simulate.paths")?.unwrap_or(crate::forecast::DEFAULT_SIMULATION_PATHS);
            let seed = file.parse_value::<u64>("simulate.seed", "a non-negative integer")?.or(seed).unwrap_or(0);
            c.ar_mode = ArMode::Simulate { paths, seed };
        }
        Some(other) => return Err(cfg_err("ar_mode", format!("expected plugin or simulate, got `{other}`"))),
    }

    if file.entries.keys().any(|k| k.starts_with("detection.")) {
        let mut d = c.detection.clone().unwrap_or_else(|| DetectionConfig::for_frequency(freq));
        if let Some(a) = file.get("detection.agg") {
            d.agg_target = match a {
                "none" => None,
                f => Some(Frequency::parse(f).ok_or_else(|| cfg_err("detection.agg", format!("unknown frequency `{f}`")))?),
            };
        }
        if let Some(v) = file.usize("detection.n_candidates")? {
            d.n_candidates = v;
        }
        if let Some(v) = file.f64("detection.end_exclusion")? {
            d.end_exclusion_frac = v;
        }
        if let Some(v) = file.f64("detection.lambda_strength")? {
            d.lambda_strength = v;
        }
        if let Some(v) = file.f64("detection.trend_min_distance_days")? {
            d.trend_min_distance_days = v;
        }
        if let Some(v) = file.f64("detection.seasonality_min_distance_days")? {
            d.seasonality_min_distance_days = v;
        }
        if let Some(v) = file.usize("detection.yearly_order")? {
            d.yearly_order = v;
        }
        if let Some(v) = file.f64("detection.significance")? {
            d.significance = v;
        }
        d.validate().map_err(|e| Error::Config(format!("detection: {e}")))?;
        c.detection = Some(d);
    }
    c.validate().map_err(|e| match e {
        crate::forecast::ForecastError::HorizonNonPositive => Error::Config("key `horizon`: must be at least 1".into()),
        other => Error::Config(other.to_string()),
    })?;
    Ok(())
}

fn parse_orders(key: &str, v: &str) -> Result<Vec<usize>> {
    v.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| Error::Config(format!("key `{key}`: bad lag order `{s}`"))))
        .collect()
}

/// `start..end` (inclusive) or a single timestamp.
fn parse_anomaly(s: &str) -> Result<AnomalyWindow> {
    let bad = || Error::Config(format!("key `anomalies`: bad window `{s}`"));
    let (a, b) = s.split_once("..").unwrap_or((s, s));
    let start = parse_timestamp(a.trim()).ok_or_else(bad)?;
    let end = parse_timestamp(b.trim()).ok_or_else(bad)?;
    AnomalyWindow::new(start, end).ok_or_else(bad)
}

/// Training part of the input (up to the last observed target) and the
/// regressor values after it.
type FrameParts = (TimeSeries, Vec<(String, Vec<Option<f64>>)>, Vec<(String, Vec<f64>)>);

fn split_frame(frame: &SeriesFrame) -> FrameParts {
    let values = frame.series.values();
    let last = values.iter().rposition(Option::is_some).expect("series has an observed value");
    let train = frame.series.slice(0..last + 1);
    let hist = frame.regressors.iter().map(|(n, v)| (n.clone(), v[..last + 1].to_vec())).collect();
    let future = frame
        .regressors
        .iter()
        .map(|(n, v)| (n.clone(), v[last + 1..].iter().map(|x| x.unwrap_or(f64::NAN)).collect()))
        .collect();
    (train, hist, future)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.display().to_string(), source })?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

pub fn cmd_forecast(settings: &Settings, frame: &SeriesFrame) -> Result<Vec<PathBuf>> {
    let (train, hist, future) = split_frame(frame);
    let c = &settings.forecast;
    let model = fit_with(&train, &hist, c, &settings.holidays)?;
    let result = model.predict(c.horizon, &future)?;
    let date_only = dates_only(&train);

    let mut components = model.decompose_history();
    let fc = &result.components;
    components.timestamps.extend(&fc.timestamps);
    components.intercept.extend(&fc.intercept);
    components.trend.extend(&fc.trend);
    for (tag, v) in components.seasonality.iter_mut() {
        v.extend(&fc.seasonality[tag]);
    }
    components.events.extend(&fc.events);
    components.autoregression.extend(&fc.autoregression);
    components.regressors.extend(&fc.regressors);
    components.interactions.extend(&fc.interactions);

    let mut summary = format!("template: {}\n", settings.template.name());
    if let Some(l) = model.chosen_lambda {
        let _ = writeln!(summary, "ridge lambda (cv): {l}");
    }
    let _ = write!(summary, "{}", model.summarize());
    let _ = writeln!(
        summary,
        "\nvolatility ({}, min group size {}):",
        model.volatility.method().name(),
        model.volatility.min_group_size()
    );
    summary.push_str(&model.volatility.describe());

    let dir = &settings.output_dir;
    let files = [
        ("forecast.csv", result.to_csv(date_only)),
        ("components.csv", components.to_csv(date_only)),
        ("summary.txt", summary),
        ("qq.csv", model.volatility.qq_csv()),
    ];
    let mut out = Vec::new();
    for (name, text) in files {
        write_file(dir, name, &text)?;
        out.push(dir.join(name));
    }
    Ok(out)
}

pub fn cmd_backtest(settings: &Settings, frame: &SeriesFrame, args: &BacktestArgs) -> Result<Vec<PathBuf>> {
    let (ts, hist, _) = split_frame(frame);
    let file = &settings.file;
    let horizon = args.horizon.or(file.usize("backtest.horizon")?).unwrap_or(settings.forecast.horizon);
    let k = args.k.or(file.usize("backtest.k")?).unwrap_or(10);
    let period = args.period.or(file.usize("backtest.period")?).unwrap_or(1);
    let window_name = match args.window {
        Some(WindowArg::Expanding) => Some("expanding"),
        Some(WindowArg::Moving) => Some("moving"),
        None => file.get("backtest.window"),
    };
    let train_length = args.train_length.or(file.usize("backtest.train_length")?);
    let window = match window_name.unwrap_or("expanding") {
        "expanding" => Window::Expanding,
        "moving" => Window::Moving(
            train_length.ok_or_else(|| Error::Config("key `backtest.train_length`: required for a moving window".into()))?,
        ),
        other => return Err(Error::Config(format!("key `backtest.window`: expected expanding or moving, got `{other}`"))),
    };
    let min_train = file.usize("backtest.min_train")?.unwrap_or_else(|| default_min_train(&settings.forecast, &ts));
    let plan = make_rolling_splits(ts.len(), horizon, period, k, window, min_train)?;
    let mut config = settings.forecast.clone();
    config.horizon = horizon;
    let forecaster = ModelForecaster { config, holidays: settings.holidays.clone(), regressors: hist };
    let report = run_backtest(&ts, &forecaster, &plan, ts.freq().seasonal_period());
    let dir = &settings.output_dir;
    write_file(dir, "backtest_detail.csv", &report.detail_csv(&ts))?;
    write_file(dir, "backtest_summary.csv", &report.summary_csv())?;
    Ok(vec![dir.join("backtest_detail.csv"), dir.join("backtest_summary.csv")])
}

pub fn cmd_detect_changepoints(settings: &Settings, frame: &SeriesFrame) -> Result<Vec<PathBuf>> {
    let (ts, _, _) = split_frame(frame);
    let cfg = settings.forecast.detection.clone().unwrap_or_else(|| DetectionConfig::for_frequency(ts.freq()));
    let trend = detect_trend_changepoints(&ts, &cfg)?;
    let periods = &settings.forecast.seasonality;
    let seasonal =
        if periods.is_empty() { BTreeMap::new() } else { detect_seasonality_changepoints(&ts, &trend, periods, &cfg)? };
    let date_only = dates_only(&ts);
    let mut cps = String::from("kind,period,ts,score\n");
    for c in &trend.changepoints {
        let _ = writeln!(cps, "trend,,{},{}", format_timestamp(c.ts, date_only), c.score);
    }
    for (tag, found) in &seasonal {
        for c in found {
            let _ = writeln!(cps, "seasonality,{tag},{},{}", format_timestamp(c.ts, date_only), c.score);
        }
    }
    let mut fit = String::from("ts,trend\n");
    for t in ts.timestamps() {
        let _ = writeln!(fit, "{},{}", format_timestamp(t, date_only), trend.trend_at(t));
    }
    let dir = &settings.output_dir;
    write_file(dir, "changepoints.csv", &cps)?;
    write_file(dir, "trend_fit.csv", &fit)?;
    Ok(vec![dir.join("changepoints.csv"), dir.join("trend_fit.csv")])
}

/// One overlay row: position within the cycle, group label, mean value.
pub type OverlayRow = (f64, String, f64);

/// Seasonality overlay data for exploratory plots.
///
/// * daily: position = hour of day, one group per day of week;
/// * weekly: position = day of week (fractional for sub-daily data), one
///   group per week (labelled by its Monday);
/// * yearly: position = day of year, one group per calendar year, each
///   group centred to mean zero.
///
/// Custom periods use the position within the cycle counted from the
/// series start and one group per cycle.
pub fn seasonality_overlay(ts: &TimeSeries, period: SeasonalPeriod) -> Vec<OverlayRow> {
    let mut cells: BTreeMap<(String, i64), (f64, f64, usize)> = BTreeMap::new();
    for (i, (t, v)) in ts.points().into_iter().enumerate() {
        let Some(v) = v else { continue };
        let tod = f64::from(chrono::Timelike::num_seconds_from_midnight(&t)) / 3600.0;
        let dow = f64::from(t.weekday().num_days_from_monday());
        let (label, pos) = match period {
            SeasonalPeriod::Daily => (format!("{}", dow as i64), tod),
            SeasonalPeriod::Weekly => {
                let monday = t.date() - chrono::Duration::days(dow as i64);
                (monday.format("%Y-%m-%d").to_string(), dow + tod / 24.0)
            }
            SeasonalPeriod::Yearly => (t.year().to_string(), f64::from(t.ordinal())),
            SeasonalPeriod::Custom(len) => {
                let cycle = (i as f64 / len).floor();
                (format!("{}", cycle as i64), i as f64 - cycle * len)
            }
        };
        let key = (pos * 1e6).round() as i64;
        let cell = cells.entry((label, key)).or_insert((pos, 0.0, 0));
        cell.1 += v;
        cell.2 += 1;
    }
    let mut rows: Vec<OverlayRow> =
        cells.into_iter().map(|((label, _), (pos, sum, n))| (pos, label, sum / n as f64)).collect();
    if period == SeasonalPeriod::Yearly {
        let mut by_group: BTreeMap<String, (f64, usize)> = BTreeMap::new();
        for (_, g, v) in &rows {
            let e = by_group.entry(g.clone()).or_insert((0.0, 0));
            e.0 += v;
            e.1 += 1;
        }
        for (_, g, v) in rows.iter_mut() {
            let (s, n) = by_group[g.as_str()];
            *v -= s / n as f64;
        }
    }
    rows.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.total_cmp(&b.0)));
    rows
}

pub fn overlay_csv(rows: &[OverlayRow]) -> String {
    let mut s = String::from("cycle_position,group_label,mean_value\n");
    for (p, g, v) in rows {
        let _ = writeln!(s, "{p},{g},{v}");
    }
    s
}

fn default_explore_periods(freq: Frequency) -> Vec<SeasonalPeriod> {
    if freq.is_subdaily() {
        vec![SeasonalPeriod::Daily, SeasonalPeriod::Weekly, SeasonalPeriod::Yearly]
    } else if freq.nominal_seconds() < 7.0 * 86_400.0 {
        vec![SeasonalPeriod::Weekly, SeasonalPeriod::Yearly]
    } else {
        vec![SeasonalPeriod::Yearly]
    }
}

pub fn cmd_explore(settings: &Settings, frame: &SeriesFrame) -> Result<Vec<PathBuf>> {
    let (ts, _, _) = split_frame(frame);
    let periods = settings.explore_periods.clone().unwrap_or_else(|| default_explore_periods(ts.freq()));
    let mut out = Vec::new();
    for p in periods {
        let name = format!("seasonality_overlay_{}.csv", p.tag());
        write_file(&settings.output_dir, &name, &overlay_csv(&seasonality_overlay(&ts, p)))?;
        out.push(settings.output_dir.join(name));
    }
    Ok(out)
}

/// Process exit code for an error kind.
pub fn exit_code(kind: ErrorKind) -> i32 {
    match kind {
        ErrorKind::Config => 2,
        ErrorKind::Data => 3,
        ErrorKind::Model => 4,
    }
}

/// Single-line `ERROR <code>: <message>` report.
pub fn error_line(e: &Error) -> String {
    let msg = e.to_string().replace('\n', " ");
    format!("ERROR {}: {msg}", e.code())
}

pub fn execute(cli: &Cli) -> Result<Vec<PathBuf>> {
    let (settings, frame) = resolve(cli)?;
    match &cli.command {
        Command::Forecast => cmd_forecast(&settings, &frame),
        Command::Backtest(args) => cmd_backtest(&settings, &frame, args),
        Command::DetectChangepoints => cmd_detect_changepoints(&settings, &frame),
        Command::Explore => cmd_explore(&settings, &frame),
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind as K;
            if matches!(e.kind(), K::DisplayHelp | K::DisplayVersion | K::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = e.print();
                return if e.kind() == K::DisplayHelpOnMissingArgumentOrSubcommand { 2 } else { 0 };
            }
            let first = e.to_string().lines().next().unwrap_or("").trim_start_matches("error: ").to_string();
            eprintln!("ERROR usage: {first}");
            return 2;
        }
    };
    match execute(&cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("{}", error_line(&e));
            exit_code(e.kind())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_lines() {
        let f = ConfigFile::parse("# c\ninput = a.csv\n\nseasonality.weekly.order = 4\n", Path::new("/x")).unwrap();
        assert_eq!(f.get("seasonality.weekly.order"), Some("4"));
        assert_eq!(f.path("input"), Some(PathBuf::from("/x/a.csv")));
    }

    #[test]
    fn unknown_and_duplicate_keys() {
        let e = ConfigFile::parse("input = a\nhorizn = 3\n", Path::new(".")).unwrap_err();
        assert!(e.to_string().contains("`horizn`"));
        assert!(ConfigFile::parse("horizon = 1\nhorizon = 2\n", Path::new(".")).is_err());
        assert!(ConfigFile::parse("seasonality.monthly.order = 2\n", Path::new(".")).is_err());
        assert!(ConfigFile::parse("seasonality.p30.order = 2\nevents.launch.dates = 2020-01-01\n", Path::new(".")).is_ok());
    }

    #[test]
    fn keys_override_template() {
        let text = "horizon = 14\ngrowth.auto_changepoints = false\nseasonality.yearly.order = 0\nseasonality.weekly.order = 2\nlags = 1, 2\navg_lags = 7 14; 28\nfit = ridge\nfit.lambda = 3\nholidays.enabled = false\n";
        let f = ConfigFile::parse(text, Path::new(".")).unwrap();
        let mut c = ForecastConfig::template(Template::DailyShort);
        apply_keys(&f, &mut c, Frequency::daily()).unwrap();
        assert_eq!(c.horizon, 14);
        assert!(!c.growth.as_ref().unwrap().auto);
        assert_eq!(c.seasonality.len(), 1);
        assert_eq!(c.seasonality[0].order, 2);
        assert_eq!(c.lags.lags, [1, 2]);
        assert_eq!(c.lags.agg_lags, [vec![7, 14], vec![28]]);
        assert_eq!(c.fit, FitSpec::Ridge(3.0));
        assert!(c.holidays.is_none());
    }

    #[test]
    fn bad_values_name_the_key() {
        let f = ConfigFile::parse("coverage = lots\n", Path::new(".")).unwrap();
        let e = apply_keys(&f, &mut ForecastConfig::default(), Frequency::daily()).unwrap_err();
        assert!(e.to_string().contains("`coverage`"));
        assert_eq!(e.kind(), ErrorKind::Config);
    }

    #[test]
    fn anomaly_windows() {
        let w = parse_anomaly("2020-01-01..2020-01-03").unwrap();
        assert!(w.contains(parse_timestamp("2020-01-02").unwrap()));
        assert!(parse_anomaly("2020-01-05..2020-01-03").is_err());
    }

    #[test]
    fn yearly_overlay_is_centred() {
        let start = parse_timestamp("2019-01-01").unwrap();
        let vals: Vec<f64> = (0..800).map(|i| (i as f64 * 0.05).sin() + i as f64 * 0.01).collect();
        let ts = TimeSeries::from_values(start, Frequency::daily(), &vals).unwrap();
        let rows = seasonality_overlay(&ts, SeasonalPeriod::Yearly);
        for year in ["2019", "2020", "2021"] {
            let g: Vec<f64> = rows.iter().filter(|r| r.1 == year).map(|r| r.2).collect();
            assert!(g.iter().sum::<f64>().abs() / (g.len() as f64) < 1e-9);
        }
    }
}
