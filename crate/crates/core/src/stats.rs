//! Box-plot summaries and Pearson correlation.
//!
//! Quartiles use linear interpolation between order statistics (Hyndman and
//! Fan type 7): for sorted `x[0..n]`, `Q(p) = x[h] + (h - floor h)(x[h+1] - x[h])`
//! with `h = (n - 1) p`.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("need at least {needed} values, got {got}")]
    TooFewValues { needed: usize, got: usize },
    #[error("input contains a non-finite value at index {0}")]
    NonFiniteInput(usize),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("zero variance input")]
    ZeroVariance,
    #[error("baseline condition missing from correlation list")]
    MissingBaseline,
    #[error("baseline correlation is zero")]
    ZeroBaseline,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxStats {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub iqr: f64,
    pub lower_whisker: f64,
    pub upper_whisker: f64,
    /// Values outside the whiskers, in input order.
    pub outliers: Vec<f64>,
    pub n: usize,
    pub mean: f64,
}

fn check_finite(values: &[f64]) -> Result<(), StatsError> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(StatsError::NonFiniteInput(i)),
        None => Ok(()),
    }
}

/// Type-7 quantile of already sorted data. `p` must lie in `[0, 1]`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = h - lo as f64;
    if frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

pub fn boxplot_stats(values: &[f64]) -> Result<BoxStats, StatsError> {
    if values.len() < 2 {
        return Err(StatsError::TooFewValues {
            needed: 2,
            got: values.len(),
        });
    }
    check_finite(values)?;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&sorted, 0.25);
    let median = quantile_sorted(&sorted, 0.5);
    let q3 = quantile_sorted(&sorted, 0.75);
    let iqr = q3 - q1;
    let lo_fence = q1 - 1.5 * iqr;
    let hi_fence = q3 + 1.5 * iqr;
    // q1 and q3 lie within the data range, so both searches succeed
    let lower_whisker = *sorted.iter().find(|&&v| v >= lo_fence).unwrap();
    let upper_whisker = *sorted.iter().rev().find(|&&v| v <= hi_fence).unwrap();
    let outliers = values
        .iter()
        .copied()
        .filter(|&v| v < lower_whisker || v > upper_whisker)
        .collect();
    Ok(BoxStats {
        q1,
        median,
        q3,
        iqr,
        lower_whisker,
        upper_whisker,
        outliers,
        n: values.len(),
        mean: values.iter().sum::<f64>() / values.len() as f64,
    })
}

/// Sample Pearson correlation coefficient, clamped to `[-1, 1]`.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(StatsError::TooFewValues {
            needed: 3,
            got: x.len(),
        });
    }
    check_finite(x)?;
    check_finite(y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Divides every correlation by the baseline's; the baseline itself maps to
/// exactly 1.0.
pub fn normalized_falloff<C: PartialEq + Clone>(
    corrs: &[(C, f64)],
    baseline: &C,
) -> Result<Vec<(C, f64)>, StatsError> {
    let r0 = corrs
        .iter()
        .find(|(c, _)| c == baseline)
        .map(|(_, r)| *r)
        .ok_or(StatsError::MissingBaseline)?;
    if r0 == 0.0 {
        return Err(StatsError::ZeroBaseline);
    }
    Ok(corrs
        .iter()
        .map(|(c, r)| {
            let v = if c == baseline || *r == r0 { 1.0 } else { r / r0 };
            (c.clone(), v)
        })
        .collect())
}
