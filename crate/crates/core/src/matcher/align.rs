use crate::dataset::Point;
use crate::image::GrayImage;

use super::MatchError;

pub const CANONICAL_WIDTH: usize = 64;
pub const CANONICAL_HEIGHT: usize = 80;
pub const CANONICAL_LEFT_EYE: Point = Point::new(16.0, 24.0);
pub const CANONICAL_RIGHT_EYE: Point = Point::new(48.0, 24.0);

/// Similarity transform from canonical crop coordinates `(u, v)` to source
/// image coordinates: `x = a u - b v + tx`, `y = b u + a v + ty`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Similarity {
    pub a: f64,
    pub b: f64,
    pub tx: f64,
    pub ty: f64,
}

impl Similarity {
    pub const IDENTITY: Self = Self {
        a: 1.0,
        b: 0.0,
        tx: 0.0,
        ty: 0.0,
    };

    /// The transform sending the canonical eye positions onto `left` and
    /// `right`.
    pub fn from_eyes(left: Point, right: Point) -> Self {
        let (cdx, cdy) = (
            CANONICAL_RIGHT_EYE.x - CANONICAL_LEFT_EYE.x,
            CANONICAL_RIGHT_EYE.y - CANONICAL_LEFT_EYE.y,
        );
        let (sdx, sdy) = (right.x - left.x, right.y - left.y);
        // complex division (sdx + i sdy) / (cdx + i cdy)
        let denom = cdx * cdx + cdy * cdy;
        let a = (sdx * cdx + sdy * cdy) / denom;
        let b = (sdy * cdx - sdx * cdy) / denom;
        let tx = left.x - (a * CANONICAL_LEFT_EYE.x - b * CANONICAL_LEFT_EYE.y);
        let ty = left.y - (b * CANONICAL_LEFT_EYE.x + a * CANONICAL_LEFT_EYE.y);
        Self { a, b, tx, ty }
    }

    #[inline]
    pub fn apply(&self, u: f64, v: f64) -> (f64, f64) {
        (
            self.a * u - self.b * v + self.tx,
            self.b * u + self.a * v + self.ty,
        )
    }
}

/// A geometrically and photometrically normalized face crop.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedFace {
    pub vector: Vec<f64>,
    pub geometry: Similarity,
}

impl AlignedFace {
    /// Wraps an arbitrary feature vector, for callers that build their own
    /// representations.
    pub fn from_vector(vector: Vec<f64>) -> Self {
        Self {
            vector,
            geometry: Similarity::IDENTITY,
        }
    }

    pub fn len(&self) -> usize {
        self.vector.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vector.is_empty()
    }
}

fn bilinear(img: &GrayImage, x: f64, y: f64) -> f64 {
    let (w, h) = (img.width(), img.height());
    let x = x.clamp(0.0, (w - 1) as f64);
    let y = y.clamp(0.0, (h - 1) as f64);
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let top = img.get(x0, y0) + fx * (img.get(x1, y0) - img.get(x0, y0));
    if fy == 0.0 {
        return top;
    }
    let bottom = img.get(x0, y1) + fx * (img.get(x1, y1) - img.get(x0, y1));
    top + fy * (bottom - top)
}

/// Warps `img` so the eyes land on the canonical positions, crops
/// `CANONICAL_WIDTH x CANONICAL_HEIGHT` with bilinear sampling, then
/// normalizes the crop to zero mean and unit Euclidean norm.
///
/// The right eye must lie strictly to the right of the left eye.
pub fn align(img: &GrayImage, left_eye: Point, right_eye: Point) -> Result<AlignedFace, MatchError> {
    for (name, p) in [("left", left_eye), ("right", right_eye)] {
        if !p.x.is_finite() || !p.y.is_finite() || !img.contains(p.x, p.y) {
            return Err(MatchError::DegenerateEyes(format!(
                "{name} eye ({}, {}) outside {}x{} image",
                p.x,
                p.y,
                img.width(),
                img.height()
            )));
        }
    }
    if right_eye.x <= left_eye.x {
        return Err(MatchError::DegenerateEyes(format!(
            "right eye x ({}) must exceed left eye x ({})",
            right_eye.x, left_eye.x
        )));
    }
    let geometry = Similarity::from_eyes(left_eye, right_eye);
    let mut vector = Vec::with_capacity(CANONICAL_WIDTH * CANONICAL_HEIGHT);
    for v in 0..CANONICAL_HEIGHT {
        for u in 0..CANONICAL_WIDTH {
            let (x, y) = geometry.apply(u as f64, v as f64);
            vector.push(bilinear(img, x, y));
        }
    }
    photometric_normalize(&mut vector);
    Ok(AlignedFace { vector, geometry })
}

fn photometric_normalize(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|p| *p -= mean);
    let norm = v.iter().map(|p| p * p).sum::<f64>().sqrt();
    if norm > 1e-12 {
        v.iter_mut().for_each(|p| *p /= norm);
    }
}
