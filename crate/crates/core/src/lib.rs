//! Impostor-score uniqueness analytics.
//!
//! Measures how unique a face (or any biometric sample) looks from its
//! impostor similarity scores, and how stable such measures stay when image
//! quality is degraded by motion blur, sensor noise or pose changes.
//!
//! - [`dataset`]: manifests and impostor-set construction
//! - [`degrade`]: motion blur and Gaussian noise
//! - [`matcher`]: alignment, eigenface matcher, score-matrix files
//! - [`stats`]: box-plot statistics and Pearson correlation
//! - [`uniqueness`]: impostor-based uniqueness and lamb indicators
//! - [`pipeline`]: the gallery-quality and cross-session experiments
//! - [`synth`]: parametric synthetic faces for desk-scale runs

use std::path::{Path, PathBuf};

use thiserror::Error;

pub mod dataset;
pub mod degrade;
pub mod image;
pub mod matcher;
pub mod pipeline;
pub mod stats;
pub mod synth;
pub mod uniqueness;

pub use dataset::{build_impostor_set, load_manifest, DatasetManifest, ImpostorSet, ManifestEntry, Point, PoolFilter};
pub use degrade::{gaussian_noise, motion_blur, QualityCondition};
pub use image::GrayImage;
pub use matcher::{align, AlignedFace, ComponentPolicy, EigenModel, ScoreMatrix};
pub use pipeline::{ExperimentConfig, MatcherSpec, StabilityReport};
pub use stats::{boxplot_stats, normalized_falloff, pearson, BoxStats};
pub use uniqueness::{ium, ImpostorScoreSet, IumResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Image(#[from] image::ImageError),
    #[error(transparent)]
    Dataset(#[from] dataset::DatasetError),
    #[error(transparent)]
    Degrade(#[from] degrade::DegradeError),
    #[error(transparent)]
    Match(#[from] matcher::MatchError),
    #[error(transparent)]
    Stats(#[from] stats::StatsError),
    #[error(transparent)]
    Uniqueness(#[from] uniqueness::UniquenessError),
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("no images with pose label {label:?}{}", subject.as_ref().map(|s| format!(" for subject {s:?}")).unwrap_or_default())]
    MissingPoseImages {
        label: String,
        subject: Option<String>,
    },
    #[error("worker pool: {0}")]
    Workers(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    pub(crate) fn config(line: usize, message: impl Into<String>) -> Self {
        Self::Config {
            line,
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
