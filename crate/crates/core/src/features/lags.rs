use super::Column;

/// Autoregressive inputs: single lags and averages over lag sets.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LagSpec {
    pub lags: Vec<usize>,
    pub agg_lags: Vec<Vec<usize>>,
}

impl LagSpec {
    pub fn is_empty(&self) -> bool {
        self.lags.is_empty() && self.agg_lags.is_empty()
    }

    /// Smallest lag order used anywhere, if any.
    pub fn min_order(&self) -> Option<usize> {
        self.lags.iter().chain(self.agg_lags.iter().flatten()).copied().min()
    }

    /// Largest lag order used anywhere (the warm-up length).
    pub fn max_order(&self) -> usize {
        self.lags.iter().chain(self.agg_lags.iter().flatten()).copied().max().unwrap_or(0)
    }
}

pub fn lag_name(r: usize) -> String {
    format!("y_lag{r}")
}

pub fn avg_lag_name(set: &[usize]) -> String {
    let parts: Vec<String> = set.iter().map(usize::to_string).collect();
    format!("y_avglag_{}", parts.join("_"))
}

/// `y[i - r]`, `NaN` when out of range or missing.
#[inline]
pub(crate) fn lag_value(y: &[f64], i: usize, r: usize) -> f64 {
    if r > i {
        f64::NAN
    } else {
        y[i - r]
    }
}

#[inline]
pub(crate) fn avg_lag_value(y: &[f64], i: usize, set: &[usize]) -> f64 {
    set.iter().map(|&r| lag_value(y, i, r)).sum::<f64>() / set.len() as f64
}

/// `y_lag{r}` and `y_avglag_{i_j_k}` columns; `NaN` marks missing entries
/// (warm-up rows or any missing contributing lag).
pub fn lag_features(y: &[f64], spec: &LagSpec) -> Vec<Column> {
    let mut cols: Vec<Column> = spec
        .lags
        .iter()
        .map(|&r| Column::new(lag_name(r), (0..y.len()).map(|i| lag_value(y, i, r)).collect()))
        .collect();
    cols.extend(spec.agg_lags.iter().map(|set| {
        Column::new(avg_lag_name(set), (0..y.len()).map(|i| avg_lag_value(y, i, set)).collect())
    }));
    cols
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_lag() {
        let cols = lag_features(&[1.0, 2.0, 3.0, 4.0], &LagSpec { lags: vec![1], agg_lags: vec![] });
        assert_eq!(cols[0].name, "y_lag1");
        assert!(cols[0].values[0].is_nan());
        assert_eq!(cols[0].values[1..], [1.0, 2.0, 3.0]);
    }

    #[test]
    fn averaged_lags() {
        let y = [1.0, 2.0, 3.0, 4.0];
        let cols = lag_features(&y, &LagSpec { lags: vec![], agg_lags: vec![vec![1, 2, 3]] });
        assert_eq!(cols[0].name, "y_avglag_1_2_3");
        // (y[2] + y[1] + y[0]) / 3
        assert_eq!(cols[0].values[3], (3.0 + 2.0 + 1.0) / 3.0);
        assert!(cols[0].values[2].is_nan());
    }

    #[test]
    fn lag_longer_than_series_is_all_missing() {
        let cols = lag_features(&[1.0, 2.0], &LagSpec { lags: vec![5], agg_lags: vec![] });
        assert!(cols[0].values.iter().all(|v| v.is_nan()));
    }

    #[test]
    fn missing_input_propagates() {
        let cols = lag_features(&[1.0, f64::NAN, 3.0, 4.0], &LagSpec { lags: vec![], agg_lags: vec![vec![1, 2]] });
        assert!(cols[0].values[2].is_nan());
        assert!(cols[0].values[3].is_nan());
    }
}
