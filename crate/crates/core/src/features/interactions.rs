use super::{Column, DesignMatrix, FeatureError};

/// Product of every column matching `left` with every column matching
/// `right`. Patterns are literal text with `*` wildcards, e.g. `sin*_daily`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionSpec {
    pub left: String,
    pub right: String,
}

impl InteractionSpec {
    pub fn new(left: &str, right: &str) -> Self {
        Self { left: left.to_string(), right: right.to_string() }
    }

    /// Parses `left:right`.
    pub fn parse(s: &str) -> Option<Self> {
        let (l, r) = s.split_once(':')?;
        let (l, r) = (l.trim(), r.trim());
        (!l.is_empty() && !r.is_empty()).then(|| Self::new(l, r))
    }
}

/// Glob match supporting `*` (any run of characters, possibly empty).
pub fn pattern_matches(pattern: &str, name: &str) -> bool {
    let p = pattern.as_bytes();
    let s = name.as_bytes();
    let (mut pi, mut si) = (0usize, 0usize);
    let mut star: Option<(usize, usize)> = None;
    while si < s.len() {
        if pi < p.len() && p[pi] != b'*' && p[pi] == s[si] {
            pi += 1;
            si += 1;
        } else if pi < p.len() && p[pi] == b'*' {
            star = Some((pi, si));
            pi += 1;
        } else if let Some((sp, ss)) = star {
            pi = sp + 1;
            si = ss + 1;
            star = Some((sp, ss + 1));
        } else {
            return false;
        }
    }
    p[pi..].iter().all(|&c| c == b'*')
}

/// Resolves the `(left, right)` index pairs for a spec against candidate
/// names, in candidate order.
pub(crate) fn resolve_pairs(
    spec: &InteractionSpec,
    names: &[String],
) -> Result<Vec<(usize, usize)>, FeatureError> {
    let matches = |pat: &str| -> Result<Vec<usize>, FeatureError> {
        let idx: Vec<usize> = (0..names.len()).filter(|&i| pattern_matches(pat, &names[i])).collect();
        if idx.is_empty() {
            Err(FeatureError::PatternUnmatched(pat.to_string()))
        } else {
            Ok(idx)
        }
    };
    let left = matches(&spec.left)?;
    let right = matches(&spec.right)?;
    Ok(left
        .iter()
        .flat_map(|&a| right.iter().filter(move |&&b| b != a).map(move |&b| (a, b)))
        .collect())
}

/// Elementwise products `a:b` for every resolved column pair.
pub fn interaction_terms(matrix: &DesignMatrix, specs: &[InteractionSpec]) -> Result<Vec<Column>, FeatureError> {
    let names = matrix.names();
    let mut out = Vec::new();
    for spec in specs {
        for (a, b) in resolve_pairs(spec, names)? {
            let values = matrix.data().column(a).component_mul(&matrix.data().column(b));
            out.push(Column::new(format!("{}:{}", names[a], names[b]), values.iter().copied().collect()));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn glob_matching() {
        assert!(pattern_matches("sin*_daily", "sin1_daily"));
        assert!(pattern_matches("sin*_daily", "sin12_daily"));
        assert!(!pattern_matches("sin*_daily", "cos1_daily"));
        assert!(!pattern_matches("sin*_daily", "sin1_weekly"));
        assert!(pattern_matches("is_weekend", "is_weekend"));
        assert!(pattern_matches("*", "anything"));
        assert!(!pattern_matches("y_lag1", "y_lag10"));
    }

    fn matrix() -> DesignMatrix {
        // rows: weekend point at d = 0.25, weekday point at d = 0.25
        DesignMatrix::from_rows(
            &["intercept", "sin1_daily", "cos1_daily", "sin2_daily", "cos2_daily", "is_weekend"],
            &[vec![1.0, 1.0, 0.0, 0.0, -1.0, 1.0], vec![1.0, 1.0, 0.0, 0.0, -1.0, 0.0]],
        )
        .unwrap()
    }

    #[test]
    fn weekend_daily_interaction() {
        let cols = interaction_terms(&matrix(), &[InteractionSpec::new("is_weekend", "sin*_daily")]).unwrap();
        let names: Vec<_> = cols.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["is_weekend:sin1_daily", "is_weekend:sin2_daily"]);
        assert_eq!(cols[0].values, [1.0, 0.0]);
    }

    #[test]
    fn unmatched_pattern_errors() {
        let err = interaction_terms(&matrix(), &[InteractionSpec::new("is_holiday", "sin*_daily")]).unwrap_err();
        assert_eq!(err, FeatureError::PatternUnmatched("is_holiday".into()));
    }

    #[test]
    fn parse_spec() {
        assert_eq!(InteractionSpec::parse("is_weekend:y_lag1"), Some(InteractionSpec::new("is_weekend", "y_lag1")));
        assert_eq!(InteractionSpec::parse("is_weekend"), None);
    }
}
