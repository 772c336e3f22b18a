//! Synthetic quality degradations: horizontal motion blur and additive
//! zero-mean Gaussian noise.
//!
//! Both operations are pure. Noise is drawn from a ChaCha8 stream seeded with
//! `seed_from_u64(seed)` and converted to normal deviates with the
//! Box-Muller transform, consuming two 64-bit words per pair of samples:
//!
//! ```text
//! u1 = ((w0 >> 11) + 1) * 2^-53        in (0, 1]
//! u2 = (w1 >> 11) * 2^-53              in [0, 1)
//! z0 = sqrt(-2 ln u1) * cos(2 pi u2)
//! z1 = sqrt(-2 ln u1) * sin(2 pi u2)
//! ```
//!
//! Samples fill the image in row-major order, `z0` before `z1`.

use std::fmt;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::image::GrayImage;

#[derive(Debug, Error, PartialEq)]
pub enum DegradeError {
    #[error("blur length must be an odd integer >= 3, got {0}")]
    BadLength(u32),
    #[error("blur length {length} exceeds image width {width}")]
    KernelTooWide { length: u32, width: usize },
    #[error("noise variance must be positive and finite, got {0}")]
    BadVariance(f64),
    #[error("pose conditions are selected from the dataset, not synthesized")]
    PoseNotSynthesized,
    #[error("malformed condition tag {0:?}")]
    BadTag(String),
}

/// Image-quality condition attached to a dataset image or an experiment
/// column.
#[derive(Debug, Clone, PartialEq)]
pub enum QualityCondition {
    Baseline,
    MotionBlur { length: u32 },
    GaussianNoise { variance: f64 },
    /// Camera / pose label as supplied by the dataset, e.g. `08_1`.
    Pose(String),
}

impl QualityCondition {
    pub fn motion_blur(length: u32) -> Result<Self, DegradeError> {
        check_length(length)?;
        Ok(Self::MotionBlur { length })
    }

    pub fn gaussian_noise(variance: f64) -> Result<Self, DegradeError> {
        check_variance(variance)?;
        Ok(Self::GaussianNoise { variance })
    }

    pub fn pose(label: impl Into<String>) -> Result<Self, DegradeError> {
        let label = label.into();
        if label.is_empty() || label.contains([',', '\n', '\r']) {
            return Err(DegradeError::BadTag(format!("pose:{label}")));
        }
        Ok(Self::Pose(label))
    }

    pub fn is_baseline(&self) -> bool {
        matches!(self, Self::Baseline)
    }

    /// Whether the condition is produced by [`apply_condition`] rather than
    /// selected from the dataset.
    pub fn is_synthetic(&self) -> bool {
        matches!(self, Self::MotionBlur { .. } | Self::GaussianNoise { .. })
    }

    /// Tag with `:` replaced so it can be used as a file stem.
    pub fn file_stem(&self) -> String {
        self.to_string().replace(':', "_")
    }
}

impl fmt::Display for QualityCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Baseline => f.write_str("baseline"),
            Self::MotionBlur { length } => write!(f, "blur:{length}"),
            Self::GaussianNoise { variance } => write!(f, "noise:{variance}"),
            Self::Pose(label) => write!(f, "pose:{label}"),
        }
    }
}

impl FromStr for QualityCondition {
    type Err = DegradeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "baseline" {
            return Ok(Self::Baseline);
        }
        let bad = || DegradeError::BadTag(s.to_string());
        let (kind, arg) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "blur" => {
                let length: u32 = arg.parse().map_err(|_| bad())?;
                Self::motion_blur(length)
            }
            "noise" => {
                let variance: f64 = arg.parse().map_err(|_| bad())?;
                Self::gaussian_noise(variance)
            }
            "pose" => Self::pose(arg),
            _ => Err(bad()),
        }
    }
}

fn check_length(length: u32) -> Result<(), DegradeError> {
    if length < 3 || length.is_multiple_of(2) {
        return Err(DegradeError::BadLength(length));
    }
    Ok(())
}

fn check_variance(variance: f64) -> Result<(), DegradeError> {
    if !(variance.is_finite() && variance > 0.0) {
        return Err(DegradeError::BadVariance(variance));
    }
    Ok(())
}

/// The `1 x N` uniform averaging kernel.
pub fn motion_kernel(length: u32) -> Result<Vec<f64>, DegradeError> {
    check_length(length)?;
    Ok(vec![1.0 / f64::from(length); length as usize])
}

/// Horizontal motion blur: each pixel becomes the mean of the `length`
/// pixels centred on it in its row, with replicate-edge padding.
pub fn motion_blur(img: &GrayImage, length: u32) -> Result<GrayImage, DegradeError> {
    check_length(length)?;
    let width = img.width();
    if length as usize > width {
        return Err(DegradeError::KernelTooWide { length, width });
    }
    let half = (length / 2) as isize;
    let n = f64::from(length);
    let last = width as isize - 1;
    let mut out = Vec::with_capacity(img.data().len());
    for y in 0..img.height() {
        let row = img.row(y);
        let (lo, hi) = row
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        for x in 0..width as isize {
            let sum: f64 = (x - half..=x + half)
                .map(|k| row[k.clamp(0, last) as usize])
                .sum();
            // a convex combination never leaves the row's range
            out.push((sum / n).clamp(lo, hi));
        }
    }
    Ok(GrayImage::from_raw_unchecked(width, img.height(), out))
}

/// `len` independent `Normal(0, variance)` samples from the documented
/// generator.
pub fn noise_field(len: usize, variance: f64, seed: u64) -> Result<Vec<f64>, DegradeError> {
    check_variance(variance)?;
    let sigma = variance.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / (1u64 << 53) as f64;
    let mut out = Vec::with_capacity(len + 1);
    while out.len() < len {
        let u1 = ((rng.next_u64() >> 11) + 1) as f64 * scale;
        let u2 = (rng.next_u64() >> 11) as f64 * scale;
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        out.push(sigma * r * theta.cos());
        out.push(sigma * r * theta.sin());
    }
    out.truncate(len);
    Ok(out)
}

/// Image plus noise before clamping; values may leave `[0, 1]`.
pub fn gaussian_noise_unclamped(
    img: &GrayImage,
    variance: f64,
    seed: u64,
) -> Result<Vec<f64>, DegradeError> {
    let noise = noise_field(img.data().len(), variance, seed)?;
    Ok(img.data().iter().zip(noise).map(|(p, n)| p + n).collect())
}

/// Adds zero-mean Gaussian noise of the given variance and clamps the result
/// to `[0, 1]`.
pub fn gaussian_noise(img: &GrayImage, variance: f64, seed: u64) -> Result<GrayImage, DegradeError> {
    let raw = gaussian_noise_unclamped(img, variance, seed)?;
    let data = raw.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
    Ok(GrayImage::from_raw_unchecked(img.width(), img.height(), data))
}

/// Applies a synthetic condition. Baseline returns a copy; pose labels are
/// rejected because poses come from the dataset.
pub fn apply_condition(
    img: &GrayImage,
    condition: &QualityCondition,
    seed: u64,
) -> Result<GrayImage, DegradeError> {
    match condition {
        QualityCondition::Baseline => Ok(img.clone()),
        QualityCondition::MotionBlur { length } => motion_blur(img, *length),
        QualityCondition::GaussianNoise { variance } => gaussian_noise(img, *variance, seed),
        QualityCondition::Pose(_) => Err(DegradeError::PoseNotSynthesized),
    }
}

/// Per-image seed: the first eight bytes (little endian) of
/// `SHA-256(master_seed_le || image_path || 0x00 || condition_tag)`.
pub fn derive_seed(master_seed: u64, image_path: &str, condition: &QualityCondition) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master_seed.to_le_bytes());
    hasher.update(image_path.as_bytes());
    hasher.update([0u8]);
    hasher.update(condition.to_string().as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}
