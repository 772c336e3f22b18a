//! Impostor-based uniqueness and Doddington-zoo lamb indicators.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum UniquenessError {
    #[error("impostor score set needs at least 2 scores, got {0}")]
    TooFewScores(usize),
    #[error("impostor score {index} is not finite")]
    NonFiniteScore { index: usize },
    #[error("all impostor scores of {0:?} are equal; uniqueness is undefined")]
    DegenerateScores(String),
}

/// The impostor scores of one probe, with cached extremes and mean.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpostorScoreSet {
    probe_id: String,
    scores: Vec<f64>,
    s_min: f64,
    s_max: f64,
    mean: f64,
}

impl ImpostorScoreSet {
    pub fn new(probe_id: impl Into<String>, scores: Vec<f64>) -> Result<Self, UniquenessError> {
        if scores.len() < 2 {
            return Err(UniquenessError::TooFewScores(scores.len()));
        }
        if let Some(index) = scores.iter().position(|s| !s.is_finite()) {
            return Err(UniquenessError::NonFiniteScore { index });
        }
        let s_min = scores.iter().copied().fold(f64::INFINITY, f64::min);
        let s_max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = scores.iter().sum::<f64>() / scores.len() as f64;
        Ok(Self {
            probe_id: probe_id.into(),
            scores,
            s_min,
            s_max,
            mean,
        })
    }

    pub fn probe_id(&self) -> &str {
        &self.probe_id
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn s_min(&self) -> f64 {
        self.s_min
    }

    pub fn s_max(&self) -> f64 {
        self.s_max
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IumResult {
    pub probe_id: String,
    /// Uniqueness in `[0, 1]`; larger means more unique.
    pub u: f64,
    /// Number of impostor scores used.
    pub n: usize,
}

/// Impostor-based uniqueness: `(s_max - mean) / (s_max - s_min)`.
pub fn ium(set: &ImpostorScoreSet) -> Result<IumResult, UniquenessError> {
    let spread = set.s_max - set.s_min;
    if spread == 0.0 {
        return Err(UniquenessError::DegenerateScores(set.probe_id.clone()));
    }
    // (s_max - mean) / spread, written as the mean deficit below the maximum
    // so no large intermediate cancels; two-point sets give exactly 0.5
    let deficit: f64 = set.scores.iter().map(|s| set.s_max - s).sum();
    let u = (deficit / (set.len() as f64 * spread)).clamp(0.0, 1.0);
    Ok(IumResult {
        probe_id: set.probe_id.clone(),
        u,
        n: set.len(),
    })
}

/// Subjects whose mean impostor score is strictly above `threshold`, in
/// input order.
pub fn mean_threshold_lambs(means: &[(String, f64)], threshold: f64) -> Vec<&str> {
    means
        .iter()
        .filter(|(_, m)| *m > threshold)
        .map(|(s, _)| s.as_str())
        .collect()
}

/// Maximum impostor score and its margin below the genuine score. A small
/// or negative margin marks a lamb-like subject.
pub fn max_impostor_statistic(set: &ImpostorScoreSet, genuine: f64) -> (f64, f64) {
    (set.s_max, genuine - set.s_max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(scores: &[f64]) -> ImpostorScoreSet {
        ImpostorScoreSet::new("p", scores.to_vec()).unwrap()
    }

    #[test]
    fn ium_examples() {
        let u = ium(&set(&[0.2, 0.4, 0.9])).unwrap().u;
        assert!((u - 4.0 / 7.0).abs() < 1e-12);
        assert_eq!(ium(&set(&[0.0, 1.0])).unwrap().u, 0.5);
        assert!((ium(&set(&[0.0, 0.0, 1.0])).unwrap().u - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(ium(&set(&[0.3, 0.1, 0.2])).unwrap().n, 3);
    }

    #[test]
    fn degenerate_and_invalid_sets() {
        assert_eq!(
            ium(&set(&[0.4, 0.4, 0.4])),
            Err(UniquenessError::DegenerateScores("p".into()))
        );
        assert_eq!(
            ImpostorScoreSet::new("p", vec![0.1]),
            Err(UniquenessError::TooFewScores(1))
        );
        assert_eq!(
            ImpostorScoreSet::new("p", vec![0.1, f64::NAN]),
            Err(UniquenessError::NonFiniteScore { index: 1 })
        );
    }

    #[test]
    fn lambs_by_strict_threshold() {
        let means = vec![("a".to_string(), 0.9), ("b".to_string(), 0.1)];
        assert_eq!(mean_threshold_lambs(&means, 0.5), vec!["a"]);
        assert!(mean_threshold_lambs(&means, 0.95).is_empty());
        assert_eq!(mean_threshold_lambs(&means, 0.9), Vec::<&str>::new());
        assert_eq!(mean_threshold_lambs(&means, 0.0), vec!["a", "b"]);
    }

    #[test]
    fn max_impostor_margin() {
        let s = set(&[0.2, 0.4, 0.9]);
        let (m, margin) = max_impostor_statistic(&s, 0.95);
        assert_eq!(m, 0.9);
        assert!((margin - 0.05).abs() < 1e-12);
        assert_eq!(max_impostor_statistic(&s, 0.9).1, 0.0);
        assert!(max_impostor_statistic(&s, 0.5).1 < 0.0);
    }
}
