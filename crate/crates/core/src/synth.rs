//! Parametric synthetic faces for desk-scale experiments.
//!
//! Every subject gets a fixed set of shape and texture parameters (face
//! outline, eyes, brows, nose, mouth, hairline, skin marks and a fine stripe
//! texture). Each captured image perturbs placement, scale, roll,
//! illumination and expression slightly and adds sensor noise, so two
//! sessions of one subject are similar but never identical. Pose-labelled
//! images approximate a head yaw by horizontal foreshortening.

use std::fs;
use std::path::{Path, PathBuf};

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::dataset::{DatasetManifest, ManifestEntry, Point};
use crate::degrade::QualityCondition;
use crate::image::GrayImage;
use crate::Error;

const SIZE: usize = 160;
const EYE_HALF_SPAN: f64 = 24.0;
const EYE_ORIGIN: (f64, f64) = (80.0, 64.0);

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    /// Subjects captured in every entry of `sessions`.
    pub subjects: usize,
    pub sessions: Vec<String>,
    /// Subjects that only appear once, in `external_session`, standing in
    /// for imported impostor datasets.
    pub external_subjects: usize,
    pub external_session: String,
    /// Pose labels and their yaw in degrees; rendered for every subject in
    /// the last session.
    pub poses: Vec<(String, f64)>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            subjects: 40,
            sessions: vec!["03".into(), "04".into()],
            external_subjects: 120,
            external_session: "ext".into(),
            poses: vec![("14_0".into(), -15.0), ("05_0".into(), 15.0)],
            seed: 2013,
        }
    }
}

#[derive(Debug, Clone)]
struct Identity {
    face_a: f64,
    face_b: f64,
    face_cy: f64,
    skin: f64,
    eye_r: f64,
    eye_dark: f64,
    brow_h: f64,
    brow_len: f64,
    brow_t: f64,
    brow_tilt: f64,
    nose_len: f64,
    nose_w: f64,
    mouth_y: f64,
    mouth_w: f64,
    mouth_t: f64,
    hairline: f64,
    marks: Vec<(f64, f64, f64, f64)>,
    stripes: Vec<(f64, f64, f64, f64)>,
}

#[derive(Debug, Clone)]
struct Capture {
    dx: f64,
    dy: f64,
    scale: f64,
    roll: f64,
    yaw: f64,
    gain: f64,
    offset: f64,
    gradient: f64,
    smile: f64,
    brow_raise: f64,
    noise_seed: u64,
}

struct Draw<'a>(&'a mut ChaCha8Rng);

impl Draw<'_> {
    fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }
}

fn rng_for(seed: u64, parts: &[u64]) -> ChaCha8Rng {
    let mut s = seed ^ 0x9e37_79b9_7f4a_7c15;
    for p in parts {
        s = s.rotate_left(17) ^ p.wrapping_mul(0xbf58_476d_1ce4_e5b9);
        s = s.wrapping_mul(0x94d0_49bb_1331_11eb);
    }
    ChaCha8Rng::seed_from_u64(s)
}

impl Identity {
    fn sample(rng: &mut ChaCha8Rng) -> Self {
        let mut d = Draw(rng);
        let marks = (0..5)
            .map(|_| {
                (
                    d.range(-34.0, 34.0),
                    d.range(-20.0, 70.0),
                    d.range(1.5, 3.0),
                    d.range(0.15, 0.35),
                )
            })
            .collect();
        let stripes = (0..4)
            .map(|_| {
                let period = d.range(4.0, 9.0);
                let angle = d.range(-0.5, 0.5);
                let phase = d.range(0.0, std::f64::consts::TAU);
                let amp = d.range(0.04, 0.08);
                (period, angle, phase, amp)
            })
            .collect();
        Self {
            face_a: d.range(42.0, 52.0),
            face_b: d.range(56.0, 68.0),
            face_cy: d.range(16.0, 24.0),
            skin: d.range(0.5, 0.7),
            eye_r: d.range(3.5, 7.0),
            eye_dark: d.range(0.25, 0.45),
            brow_h: d.range(8.0, 14.0),
            brow_len: d.range(9.0, 16.0),
            brow_t: d.range(1.5, 3.5),
            brow_tilt: d.range(-0.25, 0.25),
            nose_len: d.range(20.0, 32.0),
            nose_w: d.range(5.0, 11.0),
            mouth_y: d.range(40.0, 52.0),
            mouth_w: d.range(10.0, 18.0),
            mouth_t: d.range(2.0, 4.5),
            hairline: d.range(-36.0, -22.0),
            marks,
            stripes,
        }
    }

    /// The mid-range face used as the fixed probe of the gallery experiment.
    fn average() -> Self {
        Self {
            face_a: 47.0,
            face_b: 62.0,
            face_cy: 20.0,
            skin: 0.6,
            eye_r: 5.25,
            eye_dark: 0.35,
            brow_h: 11.0,
            brow_len: 12.5,
            brow_t: 2.5,
            brow_tilt: 0.0,
            nose_len: 26.0,
            nose_w: 8.0,
            mouth_y: 46.0,
            mouth_w: 14.0,
            mouth_t: 3.25,
            hairline: -29.0,
            marks: Vec::new(),
            stripes: Vec::new(),
        }
    }
}

impl Capture {
    fn sample(rng: &mut ChaCha8Rng, yaw_deg: f64) -> Self {
        let mut d = Draw(rng);
        Self {
            dx: d.range(-3.0, 3.0),
            dy: d.range(-3.0, 3.0),
            scale: d.range(0.97, 1.03),
            roll: d.range(-0.04, 0.04),
            yaw: yaw_deg.to_radians(),
            gain: d.range(0.9, 1.1),
            offset: d.range(-0.04, 0.04),
            gradient: d.range(-0.04, 0.04),
            smile: d.range(-1.0, 1.0),
            brow_raise: d.range(-0.8, 0.8),
            noise_seed: d.0.next_u64(),
        }
    }

    fn neutral() -> Self {
        Self {
            dx: 0.0,
            dy: 0.0,
            scale: 1.0,
            roll: 0.0,
            yaw: 0.0,
            gain: 1.0,
            offset: 0.0,
            gradient: 0.0,
            smile: 0.0,
            brow_raise: 0.0,
            noise_seed: 0,
        }
    }

    /// Face-frame point to image coordinates (before foreshortening).
    fn to_image(&self, x: f64, y: f64) -> (f64, f64) {
        let (s, c) = self.roll.sin_cos();
        let x = x * self.yaw.cos();
        (
            EYE_ORIGIN.0 + self.dx + self.scale * (c * x - s * y),
            EYE_ORIGIN.1 + self.dy + self.scale * (s * x + c * y),
        )
    }

    /// Image coordinates to the (foreshortened) face frame.
    fn to_face(&self, px: f64, py: f64) -> (f64, f64) {
        let (s, c) = self.roll.sin_cos();
        let x = (px - EYE_ORIGIN.0 - self.dx) / self.scale;
        let y = (py - EYE_ORIGIN.1 - self.dy) / self.scale;
        (c * x + s * y, -s * x + c * y)
    }
}

fn soft_inside(signed: f64) -> f64 {
    1.0 / (1.0 + (signed / 0.6).exp())
}

fn ellipse(x: f64, y: f64, cx: f64, cy: f64, a: f64, b: f64) -> f64 {
    let q = (((x - cx) / a).powi(2) + ((y - cy) / b).powi(2)).sqrt();
    soft_inside((q - 1.0) * a.min(b))
}

fn render(id: &Identity, cap: &Capture, noise_sigma: f64) -> GrayImage {
    let cos_yaw = cap.yaw.cos();
    let sin_yaw = cap.yaw.sin();
    let mut noise = rng_for(cap.noise_seed, &[]);
    let mut data = Vec::with_capacity(SIZE * SIZE);
    for py in 0..SIZE {
        for px in 0..SIZE {
            let (fx, fy) = cap.to_face(px as f64, py as f64);
            let u = fx / cos_yaw;
            // protruding features shift with yaw
            let un = u - 14.0 * sin_yaw / cos_yaw;
            let uh = u + 6.0 * sin_yaw / cos_yaw;
            let mut v = 0.18;

            let face = ellipse(uh, fy, 0.0, id.face_cy, id.face_a, id.face_b);
            let mut skin = id.skin + cap.gradient * (u / 40.0);
            for &(period, angle, phase, amp) in &id.stripes {
                let t = u * angle.cos() + fy * angle.sin();
                skin += amp * (std::f64::consts::TAU * t / period + phase).sin();
            }
            for &(mx, my, r, dark) in &id.marks {
                skin -= dark * ellipse(u, fy, mx, my, r, r);
            }
            for side in [-1.0, 1.0] {
                let ex = side * EYE_HALF_SPAN;
                skin -= 0.12 * ellipse(u, fy, ex, 0.0, id.eye_r * 2.0, id.eye_r * 1.1);
                skin -= id.eye_dark * ellipse(u, fy, ex, 0.0, id.eye_r, id.eye_r);
                let by = -id.brow_h - cap.brow_raise + side * id.brow_tilt * (u - ex);
                let brow = soft_inside((fy - by).abs() - id.brow_t)
                    * soft_inside((u - ex).abs() - id.brow_len);
                skin -= 0.3 * brow;
                skin -= 0.22 * ellipse(un, fy, side * id.nose_w * 0.6, id.nose_len, 2.2, 1.6);
            }
            let bridge = soft_inside(un.abs() - id.nose_w * 0.25)
                * soft_inside((fy - id.nose_len * 0.5).abs() - id.nose_len * 0.45);
            skin += 0.08 * bridge;
            skin -= 0.3 * ellipse(un, fy, 0.0, id.mouth_y, id.mouth_w + cap.smile, id.mouth_t);
            let hair = soft_inside(fy - id.hairline);
            skin = skin * (1.0 - hair) + 0.12 * hair;

            v = v * (1.0 - face) + skin * face;
            v = cap.gain * v + cap.offset;
            if noise_sigma > 0.0 {
                let mut d = Draw(&mut noise);
                let u1 = 1.0 - d.unit();
                let u2 = d.unit();
                v += noise_sigma
                    * (-2.0 * u1.ln()).sqrt()
                    * (std::f64::consts::TAU * u2).cos();
            }
            data.push(v.clamp(0.0, 1.0));
        }
    }
    GrayImage::from_raw_unchecked(SIZE, SIZE, data)
}

fn eyes(cap: &Capture) -> (Point, Point) {
    let (lx, ly) = cap.to_image(-EYE_HALF_SPAN, 0.0);
    let (rx, ry) = cap.to_image(EYE_HALF_SPAN, 0.0);
    (Point::new(round2(lx), round2(ly)), Point::new(round2(rx), round2(ry)))
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

/// Location of the fixed probe written by [`generate`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeAsset {
    pub path: PathBuf,
    pub left_eye: Point,
    pub right_eye: Point,
}

/// Renders the dataset into `dir`, writing `manifest.csv`, the images and
/// `probe.png` (the average face). Returns the manifest and probe.
pub fn generate(dir: &Path, config: &SynthConfig) -> Result<(DatasetManifest, ProbeAsset), Error> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::new();
    let mut emit = |rel: String,
                    subject: String,
                    session: &str,
                    condition: QualityCondition,
                    id: &Identity,
                    cap: &Capture|
     -> Result<(), Error> {
        let path = dir.join(&rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        render(id, cap, 0.01).write(&path)?;
        let (left_eye, right_eye) = eyes(cap);
        entries.push(ManifestEntry {
            image_path: rel,
            subject_id: subject,
            session_id: session.to_string(),
            condition,
            left_eye,
            right_eye,
        });
        Ok(())
    };

    for s in 0..config.subjects {
        let id = Identity::sample(&mut rng_for(config.seed, &[1, s as u64]));
        let subject = format!("s{s:03}");
        for (k, session) in config.sessions.iter().enumerate() {
            let cap = Capture::sample(&mut rng_for(config.seed, &[2, s as u64, k as u64]), 0.0);
            emit(
                format!("{session}/{subject}.png"),
                subject.clone(),
                session,
                QualityCondition::Baseline,
                &id,
                &cap,
            )?;
        }
        if let Some(last) = config.sessions.last() {
            for (p, (label, yaw)) in config.poses.iter().enumerate() {
                let cap =
                    Capture::sample(&mut rng_for(config.seed, &[3, s as u64, p as u64]), *yaw);
                emit(
                    format!("{last}/pose_{label}/{subject}.png"),
                    subject.clone(),
                    last,
                    QualityCondition::pose(label.clone())?,
                    &id,
                    &cap,
                )?;
            }
        }
    }
    for s in 0..config.external_subjects {
        let id = Identity::sample(&mut rng_for(config.seed, &[4, s as u64]));
        let cap = Capture::sample(&mut rng_for(config.seed, &[5, s as u64]), 0.0);
        let subject = format!("x{s:04}");
        emit(
            format!("{}/{subject}.png", config.external_session),
            subject,
            &config.external_session,
            QualityCondition::Baseline,
            &id,
            &cap,
        )?;
    }

    let manifest = DatasetManifest::new(dir, entries)?;
    let manifest_path = dir.join("manifest.csv");
    fs::write(&manifest_path, manifest.to_text()).map_err(|e| Error::io(&manifest_path, e))?;

    let neutral = Capture::neutral();
    let probe_path = dir.join("probe.png");
    render(&Identity::average(), &neutral, 0.0).write(&probe_path)?;
    let (left_eye, right_eye) = eyes(&neutral);
    Ok((
        manifest,
        ProbeAsset {
            path: probe_path,
            left_eye,
            right_eye,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic_and_well_formed() {
        let cfg = SynthConfig {
            subjects: 3,
            external_subjects: 2,
            ..SynthConfig::default()
        };
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let (ma, pa) = generate(a.path(), &cfg).unwrap();
        let (mb, _) = generate(b.path(), &cfg).unwrap();
        assert_eq!(ma.entries(), mb.entries());
        // 3 subjects x (2 sessions + 2 poses) + 2 external
        assert_eq!(ma.entries().len(), 14);
        for e in ma.entries() {
            let img = ma.load_image(e).unwrap();
            let other = mb.load_image(e).unwrap();
            assert_eq!(img, other);
            assert_eq!((img.width(), img.height()), (SIZE, SIZE));
        }
        assert!(pa.right_eye.x > pa.left_eye.x);
        assert!(GrayImage::read(&pa.path).is_ok());
    }
}
