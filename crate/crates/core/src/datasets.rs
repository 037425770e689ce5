//! Bundled benchmark series and a seeded synthetic generator with known
//! components.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::features::{SeasonalPeriod, TimeFeature};
use crate::series::{parse_timestamp, read_csv_str, Frequency, SeriesFrame, TimeSeries, Timestamp};

const PEYTON_MANNING: &str = include_str!("../data/peyton_manning.csv");
const BIKE_SHARING: &str = include_str!("../data/bike_sharing_daily.csv");

/// Daily log page views of Peyton Manning's Wikipedia article,
/// 2007-12-10 to 2016-01-20 (gaps left missing).
pub fn peyton_manning() -> TimeSeries {
    frame(PEYTON_MANNING).series
}

/// Daily Capital Bikeshare (Washington, D.C.) trip counts, 2010-09-21 to
/// 2019-08-31.
pub fn bike_sharing() -> TimeSeries {
    frame(BIKE_SHARING).series
}

pub fn peyton_manning_csv() -> &'static str {
    PEYTON_MANNING
}

pub fn bike_sharing_csv() -> &'static str {
    BIKE_SHARING
}

fn frame(text: &str) -> SeriesFrame {
    read_csv_str(text, Some(Frequency::daily())).expect("bundled fixture parses")
}

/// One sinusoidal seasonal component `amplitude * sin(2π d(t) + phase)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeasonalComponent {
    pub period: SeasonalPeriod,
    pub amplitude: f64,
    pub phase: f64,
    /// `(grid index, factor)`: the amplitude is multiplied by `factor`
    /// strictly after this index.
    pub amplitude_change: Option<(usize, f64)>,
}

impl SeasonalComponent {
    pub fn new(period: SeasonalPeriod, amplitude: f64) -> Self {
        Self { period, amplitude, phase: 0.0, amplitude_change: None }
    }
}

/// Recipe for a synthetic series: piecewise-linear trend (slopes per day),
/// seasonal sinusoids and Gaussian noise, optionally with a standard
/// deviation that depends on the day of week.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub start: Timestamp,
    pub freq: Frequency,
    pub length: usize,
    pub level: f64,
    pub slope: f64,
    /// `(grid index, slope change per day)`.
    pub slope_changes: Vec<(usize, f64)>,
    pub seasonal: Vec<SeasonalComponent>,
    pub noise_sd: f64,
    /// Per day-of-week noise sd (Monday first); overrides `noise_sd`.
    pub noise_sd_by_dow: Option<[f64; 7]>,
    pub seed: u64,
}

impl SynthSpec {
    pub fn daily(length: usize, seed: u64) -> Self {
        Self {
            start: parse_timestamp("2018-01-01").expect("valid date"),
            freq: Frequency::daily(),
            length,
            level: 0.0,
            slope: 0.0,
            slope_changes: Vec::new(),
            seasonal: Vec::new(),
            noise_sd: 0.0,
            noise_sd_by_dow: None,
            seed,
        }
    }
}

/// A synthetic series with its ground-truth components.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSeries {
    pub series: TimeSeries,
    pub trend: Vec<f64>,
    /// Keyed by period tag.
    pub seasonality: BTreeMap<String, Vec<f64>>,
    pub noise: Vec<f64>,
}

impl SynthSeries {
    /// Peak-to-peak range of a component.
    pub fn amplitude(values: &[f64]) -> f64 {
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        max - min
    }
}

pub fn synth_series(spec: &SynthSpec) -> SynthSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let stamps: Vec<Timestamp> = (0..spec.length as i64).map(|k| spec.freq.grid_point(spec.start, k)).collect();
    let days: Vec<f64> = stamps.iter().map(|&s| (s - spec.start).num_seconds() as f64 / 86_400.0).collect();
    let trend: Vec<f64> = days
        .iter()
        .map(|&t| {
            spec.level
                + spec.slope * t
                + spec.slope_changes.iter().map(|&(i, d)| d * (t - days[i.min(days.len() - 1)]).max(0.0)).sum::<f64>()
        })
        .collect();
    let mut seasonality = BTreeMap::new();
    for comp in &spec.seasonal {
        let values: Vec<f64> = stamps
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                let amp = match comp.amplitude_change {
                    Some((at, f)) if i > at => comp.amplitude * f,
                    _ => comp.amplitude,
                };
                amp * (2.0 * PI * comp.period.fraction(s, spec.freq) + comp.phase).sin()
            })
            .collect();
        let entry = seasonality.entry(comp.period.tag()).or_insert_with(|| vec![0.0; spec.length]);
        for (e, v) in entry.iter_mut().zip(values) {
            *e += v;
        }
    }
    let std_normal = Normal::new(0.0, 1.0).expect("valid normal");
    let noise: Vec<f64> = stamps
        .iter()
        .map(|&s| {
            let sd = match spec.noise_sd_by_dow {
                Some(by_dow) => by_dow[TimeFeature::Dow.value(s) as usize],
                None => spec.noise_sd,
            };
            let z: f64 = std_normal.sample(&mut rng);
            if sd == 0.0 {
                0.0
            } else {
                sd * z
            }
        })
        .collect();
    let values: Vec<f64> = (0..spec.length)
        .map(|i| trend[i] + seasonality.values().map(|s: &Vec<f64>| s[i]).sum::<f64>() + noise[i])
        .collect();
    let series = TimeSeries::from_values(spec.start, spec.freq, &values).expect("synthetic series is valid");
    SynthSeries { series, trend, seasonality, noise }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(seed: u64, sd: f64) -> SynthSpec {
        SynthSpec {
            slope: 0.1,
            slope_changes: vec![(50, -0.2)],
            seasonal: vec![SeasonalComponent::new(SeasonalPeriod::Weekly, 2.0)],
            noise_sd: sd,
            ..SynthSpec::daily(100, seed)
        }
    }

    #[test]
    fn noiseless_is_sum_of_components() {
        let s = synth_series(&spec(1, 0.0));
        for i in 0..100 {
            let v = s.series.values()[i].unwrap();
            assert_eq!(v, s.trend[i] + s.seasonality["weekly"][i]);
        }
    }

    #[test]
    fn seeded_and_reproducible() {
        assert_eq!(synth_series(&spec(7, 1.0)), synth_series(&spec(7, 1.0)));
        assert_ne!(synth_series(&spec(7, 1.0)).series, synth_series(&spec(8, 1.0)).series);
    }

    #[test]
    fn fixtures_load() {
        let pm = peyton_manning();
        assert_eq!(pm.start(), parse_timestamp("2007-12-10").unwrap());
        assert!(pm.len() > 8 * 365);
        let bike = bike_sharing();
        assert!(bike.len() > 8 * 365);
        assert_eq!(bike.missing_count(), 0);
    }
}
