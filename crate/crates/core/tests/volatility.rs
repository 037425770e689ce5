use silverkite::datasets::{synth_series, SeasonalComponent, SynthSpec};
use silverkite::features::{SeasonalPeriod, SeasonalitySpec};
use silverkite::forecast::{fit, FitSpec, ForecastConfig, GrowthConfig};
use silverkite::volatility::{calendar_rows, fit_volatility, parse_features, VolatilityMethod};

const SD_BY_DOW: [f64; 7] = [0.5, 0.5, 1.0, 1.0, 1.5, 3.0, 3.0];

fn heteroskedastic(n: usize, seed: u64) -> silverkite::datasets::SynthSeries {
    let spec = SynthSpec {
        level: 20.0,
        slope: 0.002,
        seasonal: vec![SeasonalComponent::new(SeasonalPeriod::Weekly, 2.0)],
        noise_sd_by_dow: Some(SD_BY_DOW),
        ..SynthSpec::daily(n, seed)
    };
    synth_series(&spec)
}

fn coverage(method: VolatilityMethod, seed: u64) -> f64 {
    let (train_n, test_n) = (1000, 2000);
    let s = heteroskedastic(train_n + test_n, seed);
    let config = ForecastConfig {
        growth: Some(GrowthConfig::linear()),
        seasonality: vec![SeasonalitySpec::new(SeasonalPeriod::Weekly, 3)],
        fit: FitSpec::Ols,
        volatility_features: vec!["dow".into()],
        volatility_method: method,
        coverage: 0.95,
        ..ForecastConfig::default()
    };
    let model = fit(&s.series.slice(0..train_n), &config).unwrap();
    let r = model.predict(test_n, &[]).unwrap();
    let actual = &s.series.values()[train_n..];
    let hits = actual.iter().zip(r.lower.iter().zip(&r.upper)).filter(|(a, (lo, hi))| {
        let a = a.unwrap();
        **lo <= a && a <= **hi
    });
    hits.count() as f64 / test_n as f64
}

#[test]
fn gaussian_intervals_reach_nominal_coverage() {
    for seed in [42, 7] {
        let c = coverage(VolatilityMethod::Gaussian, seed);
        assert!((0.92..=0.97).contains(&c), "seed {seed}: {c}");
    }
}

#[test]
fn empirical_intervals_reach_nominal_coverage() {
    for seed in [42, 7] {
        let c = coverage(VolatilityMethod::Empirical, seed);
        assert!((0.92..=0.97).contains(&c), "seed {seed}: {c}");
    }
}

#[test]
fn interval_width_follows_the_day_of_week() {
    let s = heteroskedastic(1200, 3);
    let config = ForecastConfig {
        growth: Some(GrowthConfig::linear()),
        seasonality: vec![SeasonalitySpec::new(SeasonalPeriod::Weekly, 3)],
        fit: FitSpec::Ols,
        volatility_features: vec!["dow".into()],
        ..ForecastConfig::default()
    };
    let model = fit(&s.series, &config).unwrap();
    let r = model.predict(14, &[]).unwrap();
    for (i, t) in r.timestamps.iter().enumerate() {
        use chrono::Datelike;
        let dow = t.weekday().num_days_from_monday() as usize;
        let half = (r.upper[i] - r.lower[i]) / 2.0;
        let expected = 1.959964 * SD_BY_DOW[dow];
        assert!((half / expected - 1.0).abs() < 0.15, "dow {dow}: {half} vs {expected}");
    }
}

#[test]
fn sparse_groups_fall_back_to_coarser_keys() {
    let s = heteroskedastic(70, 1);
    let stamps = s.series.timestamps();
    let features = parse_features(&["dow".to_string(), "month".to_string()]).unwrap();
    let rows = calendar_rows(&features, &stamps);
    let table =
        fit_volatility(&s.noise, &rows, &["dow".to_string(), "month".to_string()], 5, VolatilityMethod::Empirical)
            .unwrap();
    let used: usize = table.groups().iter().map(|g| g.n()).sum::<usize>() + table.pool_count();
    assert!(used >= 70);
    for g in table.groups() {
        assert!(g.n() > 5);
    }
}
