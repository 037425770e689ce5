use std::ops::Range;

use silverkite::evaluate::{
    make_rolling_splits, mape, mase, run_backtest, smape, EvaluateError, Forecaster, MetricError, SeasonalNaive,
    Window,
};
use silverkite::series::{parse_timestamp, Frequency, TimeSeries};

fn obs(v: &[f64]) -> Vec<Option<f64>> {
    v.iter().copied().map(Some).collect()
}

fn daily(values: &[f64]) -> TimeSeries {
    TimeSeries::from_values(parse_timestamp("2020-01-06").unwrap(), Frequency::daily(), values).unwrap()
}

/// Integer-valued series whose seasonal differences are all exactly `m`.
fn ramp_with_cycle(n: usize, m: usize) -> Vec<f64> {
    let cycle = [3.0, -1.0, 4.0, 1.0, -5.0, 9.0, 2.0];
    (0..n).map(|t| t as f64 + cycle[t % m]).collect()
}

#[test]
fn hand_evaluated_mase() {
    let v = mase(&obs(&[1.0, 2.0, 2.0, 3.0]), &obs(&[4.0]), &[3.0], 1).unwrap();
    assert!((v - 1.5).abs() < 1e-15);
}

#[test]
fn seasonal_naive_on_matched_differences_scores_one() {
    let m = 7;
    let values = ramp_with_cycle(70, m);
    let (train, test) = values.split_at(63);
    let forecast = SeasonalNaive { m }.forecast(&daily(&values), 0..63, 7).unwrap();
    assert_eq!(mase(&obs(train), &obs(test), &forecast, m).unwrap(), 1.0);
}

#[test]
fn seasonal_naive_backtest_scores_one_on_every_split() {
    let values = ramp_with_cycle(200, 7);
    let ts = daily(&values);
    let plan = make_rolling_splits(ts.len(), 7, 7, 5, Window::Expanding, 14).unwrap();
    let report = run_backtest(&ts, &SeasonalNaive { m: 7 }, &plan, 7);
    assert_eq!(report.n_failed(), 0);
    assert_eq!(report.mase(), Some(1.0));
}

#[test]
fn mase_is_scale_invariant() {
    let train = [3.0, 5.0, 4.0, 8.0, 7.0, 9.0];
    let test = [10.0, 12.0];
    let fc = [9.5, 10.0];
    let base = mase(&obs(&train), &obs(&test), &fc, 1).unwrap();
    for c in [0.001, 3.0, 1e6] {
        let s = |v: &[f64]| v.iter().map(|x| x * c).collect::<Vec<_>>();
        let scaled = mase(&obs(&s(&train)), &obs(&s(&test)), &s(&fc), 1).unwrap();
        assert!((scaled / base - 1.0).abs() < 1e-12);
    }
}

#[test]
fn degenerate_metric_inputs() {
    assert!(matches!(mase(&obs(&[2.0; 5]), &obs(&[1.0]), &[1.0], 1), Err(MetricError::DenominatorZero)));
    assert!(matches!(mape(&obs(&[1.0, 0.0]), &[1.0, 1.0]), Err(MetricError::ZeroDenominator(1))));
    assert!((mape(&obs(&[100.0]), &[98.0]).unwrap() - 2.0).abs() < 1e-12);
    assert_eq!(smape(&obs(&[3.0, 4.0]), &[3.0, 4.0]).unwrap(), 0.0);
}

#[test]
fn backward_split_enumeration() {
    let plan = make_rolling_splits(20, 4, 2, 4, Window::Expanding, 1).unwrap();
    assert_eq!(plan.test_starts(), [10, 12, 14, 16]);
    for s in &plan.splits {
        assert_eq!(s.train_start, 0);
        assert_eq!(s.test_start, s.train_end + 1);
        assert_eq!(s.test().len(), 4);
    }
    assert_eq!(plan.splits.last().unwrap().test_end, 19);
}

#[test]
fn moving_window_has_fixed_length() {
    let plan = make_rolling_splits(1000, 1, 1, 10, Window::Moving(730), 100).unwrap();
    for s in &plan.splits {
        assert_eq!(s.train().len(), 730);
    }
}

#[test]
fn infeasible_plans_are_rejected() {
    assert!(matches!(make_rolling_splits(20, 4, 2, 9, Window::Expanding, 1), Err(EvaluateError::InfeasiblePlan(_))));
    assert!(matches!(make_rolling_splits(20, 4, 2, 4, Window::Expanding, 11), Err(EvaluateError::InfeasiblePlan(_))));
    assert!(matches!(make_rolling_splits(20, 4, 2, 4, Window::Moving(11), 1), Err(EvaluateError::InfeasiblePlan(_))));
}

struct Oracle(Vec<f64>);

impl Forecaster for Oracle {
    fn forecast(&self, _: &TimeSeries, train: Range<usize>, horizon: usize) -> silverkite::Result<Vec<f64>> {
        Ok(self.0[train.end..train.end + horizon].to_vec())
    }
}

struct Flaky;

impl Forecaster for Flaky {
    fn forecast(&self, _: &TimeSeries, train: Range<usize>, horizon: usize) -> silverkite::Result<Vec<f64>> {
        if train.end.is_multiple_of(2) {
            Err(silverkite::Error::Config("flaky split".into()))
        } else {
            Ok(vec![0.0; horizon])
        }
    }
}

#[test]
fn perfect_forecaster_scores_zero() {
    let values: Vec<f64> = (0..60).map(|t| (t as f64 * 0.3).sin() * 5.0 + 10.0).collect();
    let ts = daily(&values);
    let plan = make_rolling_splits(60, 3, 1, 6, Window::Expanding, 20).unwrap();
    let report = run_backtest(&ts, &Oracle(values), &plan, 7);
    assert_eq!(report.mase(), Some(0.0));
    assert_eq!(report.mape(), Some(0.0));
}

#[test]
fn failed_splits_are_counted_not_fatal() {
    let values: Vec<f64> = (0..60).map(|t| t as f64 + 1.0).collect();
    let ts = daily(&values);
    let plan = make_rolling_splits(60, 2, 1, 6, Window::Expanding, 20).unwrap();
    let report = run_backtest(&ts, &Flaky, &plan, 1);
    assert_eq!(report.n_failed(), 3);
    assert!(report.mase().is_some());
    let summary = report.summary_csv();
    assert!(summary.lines().nth(1).unwrap().ends_with(",3,3"), "{summary}");
    let starts: Vec<usize> = report.splits.iter().map(|s| s.split.test_start).collect();
    assert!(starts.windows(2).all(|w| w[0] < w[1]));
}
