//! Score-matrix files.
//!
//! ```text
//! #gallery,g1,g2,g3
//! p1,1.0000000000000000e-1,2.0000000000000001e-1,...
//! ```
//!
//! Scores are written with 17 significant digits, enough for an exact
//! `f64` round trip.

use std::fs;
use std::path::Path;

use super::MatchError;

const GALLERY_TAG: &str = "#gallery";

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    probe_ids: Vec<String>,
    gallery_ids: Vec<String>,
    scores: Vec<Vec<f64>>,
}

impl ScoreMatrix {
    pub fn new(
        probe_ids: Vec<String>,
        gallery_ids: Vec<String>,
        scores: Vec<Vec<f64>>,
    ) -> Result<Self, MatchError> {
        if scores.len() != probe_ids.len() {
            return Err(MatchError::ShapeMismatch {
                line: 0,
                expected: probe_ids.len(),
                found: scores.len(),
            });
        }
        for (i, row) in scores.iter().enumerate() {
            if row.len() != gallery_ids.len() {
                return Err(MatchError::ShapeMismatch {
                    line: i + 2,
                    expected: gallery_ids.len(),
                    found: row.len(),
                });
            }
            if row.iter().any(|s| !s.is_finite()) {
                return Err(MatchError::NonFiniteScore { line: i + 2 });
            }
        }
        for id in probe_ids.iter().chain(&gallery_ids) {
            if id.is_empty() || id.contains([',', '\n', '\r']) {
                return Err(MatchError::Parse {
                    line: 0,
                    message: format!("invalid id {id:?}"),
                });
            }
        }
        Ok(Self {
            probe_ids,
            gallery_ids,
            scores,
        })
    }

    pub fn probe_ids(&self) -> &[String] {
        &self.probe_ids
    }

    pub fn gallery_ids(&self) -> &[String] {
        &self.gallery_ids
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.scores
    }

    pub fn row(&self, probe_id: &str) -> Option<&[f64]> {
        self.probe_ids
            .iter()
            .position(|p| p == probe_id)
            .map(|i| self.scores[i].as_slice())
    }

    pub fn gallery_index(&self, gallery_id: &str) -> Option<usize> {
        self.gallery_ids.iter().position(|g| g == gallery_id)
    }

    /// Scores of `probe_id` against `gallery_ids`, in the requested order.
    pub fn select<S: AsRef<str>>(&self, probe_id: &str, gallery_ids: &[S]) -> Result<Vec<f64>, MatchError> {
        let row = self
            .row(probe_id)
            .ok_or_else(|| MatchError::UnknownId(probe_id.to_string()))?;
        gallery_ids
            .iter()
            .map(|g| {
                self.gallery_index(g.as_ref())
                    .map(|j| row[j])
                    .ok_or_else(|| MatchError::UnknownId(g.as_ref().to_string()))
            })
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from(GALLERY_TAG);
        for g in &self.gallery_ids {
            out.push(',');
            out.push_str(g);
        }
        out.push('\n');
        for (id, row) in self.probe_ids.iter().zip(&self.scores) {
            out.push_str(id);
            for s in row {
                out.push_str(&format!(",{s:.16e}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, MatchError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(MatchError::Parse {
            line: 1,
            message: "empty score file".into(),
        })?;
        let mut fields = header.trim_end().split(',');
        if fields.next() != Some(GALLERY_TAG) {
            return Err(MatchError::Parse {
                line: 1,
                message: format!("header must start with `{GALLERY_TAG},`"),
            });
        }
        let gallery_ids: Vec<String> = fields.map(str::to_string).collect();
        let mut probe_ids = Vec::new();
        let mut scores = Vec::new();
        for (idx, raw) in lines {
            let line = idx + 1;
            let mut fields = raw.trim_end().split(',');
            let id = fields.next().unwrap_or_default().to_string();
            let row = fields
                .map(|f| {
                    f.trim().parse::<f64>().map_err(|_| MatchError::Parse {
                        line,
                        message: format!("bad score {f:?}"),
                    })
                })
                .collect::<Result<Vec<f64>, _>>()?;
            if row.len() != gallery_ids.len() {
                return Err(MatchError::ShapeMismatch {
                    line,
                    expected: gallery_ids.len(),
                    found: row.len(),
                });
            }
            if row.iter().any(|s| !s.is_finite()) {
                return Err(MatchError::NonFiniteScore { line });
            }
            probe_ids.push(id);
            scores.push(row);
        }
        Self::new(probe_ids, gallery_ids, scores)
    }
}

pub fn import_scores(path: impl AsRef<Path>) -> Result<ScoreMatrix, MatchError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| MatchError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ScoreMatrix::parse(&text)
}

pub fn export_scores(matrix: &ScoreMatrix, path: impl AsRef<Path>) -> Result<(), MatchError> {
    let path = path.as_ref();
    fs::write(path, matrix.to_text()).map_err(|source| MatchError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn two_by_two_round_trip() {
        let m = ScoreMatrix::new(
            ids(&["p1", "p2"]),
            ids(&["g1", "g2"]),
            vec![vec![0.1, 0.2], vec![0.3, 0.4]],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        export_scores(&m, &path).unwrap();
        assert_eq!(import_scores(&path).unwrap(), m);
    }

    #[test]
    fn nan_entry_rejected() {
        let text = "#gallery,g1,g2\np1,0.1,NaN\n";
        assert!(matches!(
            ScoreMatrix::parse(text),
            Err(MatchError::NonFiniteScore { line: 2 })
        ));
        assert!(ScoreMatrix::new(ids(&["p"]), ids(&["g"]), vec![vec![f64::INFINITY]]).is_err());
    }

    #[test]
    fn extra_column_is_shape_mismatch() {
        let text = "#gallery,g1,g2,g3\np1,0.1,0.2,0.3,0.4\n";
        assert!(matches!(
            ScoreMatrix::parse(text),
            Err(MatchError::ShapeMismatch {
                line: 2,
                expected: 3,
                found: 4
            })
        ));
    }

    #[test]
    fn malformed_files() {
        assert!(matches!(ScoreMatrix::parse(""), Err(MatchError::Parse { .. })));
        assert!(matches!(
            ScoreMatrix::parse("gallery,g1\np,0.1\n"),
            Err(MatchError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            ScoreMatrix::parse("#gallery,g1\np,abc\n"),
            Err(MatchError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn select_by_ids() {
        let m = ScoreMatrix::new(
            ids(&["p"]),
            ids(&["a", "b", "c"]),
            vec![vec![1.0, 2.0, 3.0]],
        )
        .unwrap();
        assert_eq!(m.select("p", &["c", "a"]).unwrap(), vec![3.0, 1.0]);
        assert!(matches!(m.select("p", &["z"]), Err(MatchError::UnknownId(_))));
        assert!(matches!(m.select("q", &["a"]), Err(MatchError::UnknownId(_))));
    }
}
