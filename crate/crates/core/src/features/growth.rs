use super::{check_changepoints, Column, FeatureError};
use crate::series::{Frequency, Timestamp};

/// Growth shape `f(t)` with `t` in grid steps since the training start.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrowthFunction {
    Linear,
    Sqrt,
    Quadratic,
}

impl GrowthFunction {
    pub fn name(&self) -> &'static str {
        match self {
            GrowthFunction::Linear => "linear",
            GrowthFunction::Sqrt => "sqrt",
            GrowthFunction::Quadratic => "quadratic",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "linear" => Some(GrowthFunction::Linear),
            "sqrt" => Some(GrowthFunction::Sqrt),
            "quadratic" => Some(GrowthFunction::Quadratic),
            _ => None,
        }
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            GrowthFunction::Linear => t,
            GrowthFunction::Sqrt => t.max(0.0).sqrt(),
            GrowthFunction::Quadratic => t * t,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthSpec {
    pub func: GrowthFunction,
    pub changepoints: Vec<Timestamp>,
}

impl GrowthSpec {
    pub fn new(func: GrowthFunction) -> Self {
        Self { func, changepoints: Vec::new() }
    }
}

/// Hinge value `1{t > t_i} (f(t) - f(t_i))`; continuous at `t_i`.
#[inline]
pub(crate) fn hinge(func: GrowthFunction, t: f64, at: f64) -> f64 {
    if t > at {
        func.eval(t) - func.eval(at)
    } else {
        0.0
    }
}

/// `growth_{f}` plus one `cp{i}_{f}` hinge column per changepoint.
///
/// `origin` is the training start; time is measured in grid steps from it.
pub fn growth_basis(
    grid: &[Timestamp],
    origin: Timestamp,
    freq: Frequency,
    spec: &GrowthSpec,
) -> Result<Vec<Column>, FeatureError> {
    if let (Some(first), Some(last)) = (grid.first(), grid.last()) {
        check_changepoints(&spec.changepoints, (*first).min(origin), *last)?;
    }
    let t: Vec<f64> = grid.iter().map(|&ts| freq.elapsed_steps(origin, ts)).collect();
    let name = spec.func.name();
    let mut cols = vec![Column::new(format!("growth_{name}"), t.iter().map(|&x| spec.func.eval(x)).collect())];
    for (i, cp) in spec.changepoints.iter().enumerate() {
        let at = freq.elapsed_steps(origin, *cp);
        cols.push(Column::new(
            format!("cp{}_{name}", i + 1),
            t.iter().map(|&x| hinge(spec.func, x, at)).collect(),
        ));
    }
    Ok(cols)
}
