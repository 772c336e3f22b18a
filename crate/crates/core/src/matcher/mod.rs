//! Similarity scoring: eye-based alignment, a built-in eigenface matcher and
//! the score-matrix exchange format used for externally computed scores.

mod align;
mod eigen;
mod scores;

use std::path::PathBuf;

use thiserror::Error;

pub use align::{align, AlignedFace, Similarity, CANONICAL_HEIGHT, CANONICAL_LEFT_EYE, CANONICAL_RIGHT_EYE, CANONICAL_WIDTH};
pub use eigen::{cosine_similarity, train_eigenmodel, ComponentPolicy, EigenModel};
pub use scores::{export_scores, import_scores, ScoreMatrix};

#[derive(Debug, Error)]
pub enum MatchError {
    #[error("degenerate eye coordinates: {0}")]
    DegenerateEyes(String),
    #[error("eigenmodel training needs at least 2 faces, got {0}")]
    TooFewFaces(usize),
    #[error("training faces have no variance")]
    DegenerateTraining,
    #[error("vector length {found} does not match model dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("face projects to a zero coefficient vector")]
    ZeroProjection,
    #[error("score file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("score file line {line}: non-finite score")]
    NonFiniteScore { line: usize },
    #[error("score file line {line}: expected {expected} scores, found {found}")]
    ShapeMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("unknown score-matrix id {0:?}")]
    UnknownId(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
