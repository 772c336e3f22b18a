//! End-to-end experiments.
//!
//! *Gallery quality* scores a fixed probe against one image per gallery
//! subject, once per quality condition, and summarizes each impostor score
//! distribution as box-plot statistics.
//!
//! *Session stability* computes the uniqueness of every subject from a
//! reference session and from a varied session whose probe image is
//! degraded, then correlates the two uniqueness vectors per condition. The
//! impostor populations are always the undegraded baseline images.
//!
//! Degradation happens before eye-based alignment. Per-image noise seeds are
//! derived from `(master_seed, image_path, condition)`, and all parallel work
//! is collected in a fixed order, so results do not depend on the number of
//! workers.

mod config;
mod report;
mod svg;

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::dataset::{build_impostor_set, load_manifest, DatasetError, DatasetManifest, ManifestEntry, PoolFilter};
use crate::degrade::{apply_condition, derive_seed, QualityCondition};
use crate::image::GrayImage;
use crate::matcher::{align, AlignedFace, ComponentPolicy, EigenModel, MatchError, ScoreMatrix};
use crate::stats::{boxplot_stats, normalized_falloff, pearson, BoxStats};
use crate::uniqueness::{ium, ImpostorScoreSet};
use crate::{Error, Result};

pub use config::{Experiment, ExperimentConfig, MatcherSpec};
pub use report::{emit_report, read_boxstats_csv, read_stability_csv, rerender, RunReport};
pub use svg::{render_boxplot, render_falloff};

#[derive(Debug, Clone, PartialEq)]
pub struct GalleryRow {
    pub condition: QualityCondition,
    pub stats: BoxStats,
}

/// Impostor score distributions of the fixed probe, one row per condition.
#[derive(Debug, Clone, PartialEq)]
pub struct GalleryReport {
    pub matcher: String,
    pub gallery_subjects: Vec<String>,
    pub rows: Vec<GalleryRow>,
    /// Raw scores per row, ordered like `gallery_subjects` (pose rows follow
    /// the subjects that have that pose).
    pub scores: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityRow {
    pub condition: QualityCondition,
    pub r: f64,
    pub normalized: f64,
}

/// Cross-session uniqueness correlations per probe-quality condition.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub matcher: String,
    pub subjects: Vec<String>,
    /// Uniqueness of each subject from the reference session.
    pub reference_ium: Vec<f64>,
    /// Uniqueness from the varied session, one vector per row.
    pub varied_ium: Vec<Vec<f64>>,
    pub rows: Vec<StabilityRow>,
    pub baseline_r: f64,
}

impl StabilityReport {
    pub fn r(&self, condition: &QualityCondition) -> Option<f64> {
        self.rows
            .iter()
            .find(|row| row.condition == *condition)
            .map(|row| row.r)
    }
}

fn worker_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Workers(e.to_string()))
}

/// Loads an entry, applies a synthetic condition (if any) and aligns it.
pub fn prepare_face(
    manifest: &DatasetManifest,
    entry: &ManifestEntry,
    condition: &QualityCondition,
    master_seed: u64,
) -> Result<AlignedFace> {
    let img = manifest.load_image(entry)?;
    degrade_and_align(&img, entry, condition, master_seed)
}

fn degrade_and_align(
    img: &GrayImage,
    entry: &ManifestEntry,
    condition: &QualityCondition,
    master_seed: u64,
) -> Result<AlignedFace> {
    let face = if condition.is_synthetic() {
        let seed = derive_seed(master_seed, &entry.image_path, condition);
        let degraded = apply_condition(img, condition, seed)?;
        align(&degraded, entry.left_eye, entry.right_eye)?
    } else {
        align(img, entry.left_eye, entry.right_eye)?
    };
    Ok(face)
}

/// Baseline training images: one per subject within each listed session,
/// ordered by path.
fn training_entries<'m, S: AsRef<str>>(manifest: &'m DatasetManifest, sessions: &[S]) -> Vec<&'m ManifestEntry> {
    let mut chosen: BTreeMap<&str, &ManifestEntry> = BTreeMap::new();
    for s in sessions {
        for e in manifest
            .one_per_subject(&PoolFilter::baseline_in(&[s.as_ref()]), None)
            .into_values()
        {
            chosen.insert(e.image_path.as_str(), e);
        }
    }
    chosen.into_values().collect()
}

fn score_file(dir: &Path, prefix: &str, condition: &QualityCondition) -> PathBuf {
    dir.join(format!("{prefix}_{}.csv", condition.file_stem()))
}

fn load_scores(path: &Path) -> Result<ScoreMatrix> {
    Ok(crate::matcher::import_scores(path)?)
}

/// Identifier of an image in session-keyed score matrices.
pub fn session_key(entry: &ManifestEntry) -> String {
    format!("{}:{}", entry.session_id, entry.subject_id)
}

fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    Ok(crate::matcher::cosine_similarity(a, b)?)
}

/// Runs the gallery-quality experiment.
pub fn run_e1(cfg: &ExperimentConfig) -> Result<GalleryReport> {
    cfg.validate()?;
    let conditions = cfg.all_conditions()?;
    let manifest = load_manifest(&cfg.manifest_path)?;
    let pool = worker_pool(cfg.jobs)?;

    let sessions = cfg.gallery_sessions.clone();
    let baseline_filter = PoolFilter {
        sessions: sessions.clone(),
        condition: Some(QualityCondition::Baseline),
    };
    let baseline: Vec<&ManifestEntry> = manifest.one_per_subject(&baseline_filter, None).into_values().collect();
    if baseline.len() < 2 {
        return Err(DatasetError::EmptyImpostorSet {
            probe: "gallery probe".into(),
            count: baseline.len(),
        }
        .into());
    }
    let gallery_for = |condition: &QualityCondition| -> Result<Vec<&ManifestEntry>> {
        match condition {
            QualityCondition::Pose(label) => {
                let filter = PoolFilter {
                    sessions: sessions.clone(),
                    condition: Some(condition.clone()),
                };
                let entries: Vec<_> = manifest.one_per_subject(&filter, None).into_values().collect();
                if entries.is_empty() {
                    return Err(Error::MissingPoseImages {
                        label: label.clone(),
                        subject: None,
                    });
                }
                Ok(entries)
            }
            _ => Ok(baseline.clone()),
        }
    };
    // fail early on absent pose labels
    for c in &conditions {
        gallery_for(c)?;
    }

    let mut scores = Vec::with_capacity(conditions.len());
    match &cfg.matcher {
        MatcherSpec::Eigen => {
            let (probe_path, (left, right)) = match (&cfg.probe_image, cfg.probe_eyes) {
                (Some(p), Some(eyes)) => (p, eyes),
                _ => return Err(Error::config(0, "the eigen matcher needs probe_image and probe_eyes")),
            };
            let probe = align(&GrayImage::read(probe_path)?, left, right)?;
            let images: Vec<GrayImage> = pool.install(|| {
                baseline
                    .par_iter()
                    .map(|e| manifest.load_image(e).map_err(Error::from))
                    .collect::<Result<_>>()
            })?;
            let train: Vec<AlignedFace> = pool.install(|| {
                baseline
                    .par_iter()
                    .zip(&images)
                    .map(|(e, img)| degrade_and_align(img, e, &QualityCondition::Baseline, cfg.master_seed))
                    .collect::<Result<_>>()
            })?;
            let model = EigenModel::train(&train, cfg.components)?;
            let probe_coeffs = model.project(&probe)?;
            for condition in &conditions {
                let row: Vec<f64> = pool.install(|| match condition {
                    QualityCondition::Pose(_) => gallery_for(condition)?
                        .par_iter()
                        .map(|e| {
                            let face = prepare_face(&manifest, e, &QualityCondition::Baseline, cfg.master_seed)?;
                            cosine(&probe_coeffs, &model.project(&face)?)
                        })
                        .collect::<Result<_>>(),
                    _ => baseline
                        .par_iter()
                        .zip(&images)
                        .map(|(e, img)| {
                            let face = degrade_and_align(img, e, condition, cfg.master_seed)?;
                            cosine(&probe_coeffs, &model.project(&face)?)
                        })
                        .collect::<Result<_>>(),
                })?;
                scores.push(row);
            }
        }
        MatcherSpec::Scores(dir) => {
            for condition in &conditions {
                let matrix = load_scores(&score_file(dir, "e1", condition))?;
                let probe_id = matrix
                    .probe_ids()
                    .first()
                    .cloned()
                    .ok_or_else(|| MatchError::UnknownId("<probe row>".into()))?;
                let ids: Vec<&str> = gallery_for(condition)?.iter().map(|e| e.subject_id.as_str()).collect();
                scores.push(matrix.select(&probe_id, &ids)?);
            }
        }
    }

    let rows = conditions
        .iter()
        .zip(&scores)
        .map(|(c, s)| {
            Ok(GalleryRow {
                condition: c.clone(),
                stats: boxplot_stats(s)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(GalleryReport {
        matcher: cfg.matcher.name().to_string(),
        gallery_subjects: baseline.iter().map(|e| e.subject_id.clone()).collect(),
        rows,
        scores,
    })
}

/// Source of impostor scores for the session-stability experiment.
enum E2Scorer {
    Eigen {
        model: EigenModel,
        /// Coefficients of every baseline pool image, by image path.
        coeffs: HashMap<String, Vec<f64>>,
    },
    Imported {
        dir: PathBuf,
    },
}

/// Runs the session-stability experiment.
pub fn run_e2(cfg: &ExperimentConfig) -> Result<StabilityReport> {
    cfg.validate()?;
    let conditions = cfg.all_conditions()?;
    let manifest = load_manifest(&cfg.manifest_path)?;
    let pool = worker_pool(cfg.jobs)?;
    let (ref_s, var_s) = (cfg.reference_session.as_str(), cfg.varied_session.as_str());

    let subjects = manifest.common_subjects(ref_s, var_s)?;
    let mut ref_probes = Vec::with_capacity(subjects.len());
    let mut var_probes = Vec::with_capacity(subjects.len());
    for s in &subjects {
        for (session, out) in [(ref_s, &mut ref_probes), (var_s, &mut var_probes)] {
            let e = manifest
                .pick(s, &PoolFilter::baseline_in(&[session]))
                .ok_or_else(|| DatasetError::SubjectNotInBothSessions {
                    subject: s.clone(),
                    session: session.to_string(),
                })?;
            out.push(e);
        }
    }

    let with_pool = |session: &str| {
        let mut v = vec![session.to_string()];
        v.extend(cfg.pool_sessions.iter().cloned());
        v
    };
    let ref_sessions = with_pool(ref_s);
    let var_sessions = with_pool(var_s);
    let ref_sets = subjects
        .iter()
        .map(|s| build_impostor_set(&manifest, s, &PoolFilter::baseline_in(&ref_sessions)))
        .collect::<Result<Vec<_>, _>>()?;
    let var_sets = subjects
        .iter()
        .map(|s| build_impostor_set(&manifest, s, &PoolFilter::baseline_in(&var_sessions)))
        .collect::<Result<Vec<_>, _>>()?;

    let scorer = match &cfg.matcher {
        MatcherSpec::Eigen => {
            let mut sessions = vec![ref_s.to_string(), var_s.to_string()];
            sessions.extend(cfg.pool_sessions.iter().cloned());
            let train_entries = training_entries(&manifest, &sessions);
            let faces: Vec<AlignedFace> = pool.install(|| {
                train_entries
                    .par_iter()
                    .map(|e| prepare_face(&manifest, e, &QualityCondition::Baseline, cfg.master_seed))
                    .collect::<Result<_>>()
            })?;
            let model = EigenModel::train(&faces, cfg.components)?;
            let projected: Vec<Vec<f64>> = pool.install(|| {
                faces
                    .par_iter()
                    .map(|f| model.project(f).map_err(Error::from))
                    .collect::<Result<_>>()
            })?;
            let coeffs = train_entries
                .iter()
                .map(|e| e.image_path.clone())
                .zip(projected)
                .collect();
            E2Scorer::Eigen { model, coeffs }
        }
        MatcherSpec::Scores(dir) => E2Scorer::Imported { dir: dir.clone() },
    };

    let ium_of = |probe_id: &str, scores: Vec<f64>| -> Result<f64> {
        Ok(ium(&ImpostorScoreSet::new(probe_id, scores)?)?.u)
    };

    // reference session, always undegraded
    let reference_ium: Vec<f64> = match &scorer {
        E2Scorer::Eigen { coeffs, .. } => pool.install(|| {
            subjects
                .par_iter()
                .zip(&ref_probes)
                .zip(&ref_sets)
                .map(|((s, probe), set)| {
                    let p = &coeffs[&probe.image_path];
                    let scores = set
                        .members
                        .iter()
                        .map(|m| cosine(p, &coeffs[&m.image_path]))
                        .collect::<Result<Vec<_>>>()?;
                    ium_of(s, scores)
                })
                .collect::<Result<_>>()
        })?,
        E2Scorer::Imported { dir } => {
            let matrix = load_scores(&score_file(dir, "e2", &QualityCondition::Baseline))?;
            subjects
                .iter()
                .zip(&ref_probes)
                .zip(&ref_sets)
                .map(|((s, probe), set)| {
                    let ids: Vec<String> = set.members.iter().map(session_key).collect();
                    ium_of(s, matrix.select(&session_key(probe), &ids)?)
                })
                .collect::<Result<_>>()?
        }
    };

    let mut varied_ium = Vec::with_capacity(conditions.len());
    for condition in &conditions {
        // probe entries for this condition
        let probes: Vec<&ManifestEntry> = match condition {
            QualityCondition::Pose(label) => subjects
                .iter()
                .map(|s| {
                    let filter = PoolFilter {
                        sessions: Some(vec![var_s.to_string()]),
                        condition: Some(condition.clone()),
                    };
                    manifest.pick(s, &filter).ok_or_else(|| Error::MissingPoseImages {
                        label: label.clone(),
                        subject: Some(s.clone()),
                    })
                })
                .collect::<Result<_>>()?,
            _ => var_probes.clone(),
        };
        let synthetic = if condition.is_synthetic() {
            condition.clone()
        } else {
            QualityCondition::Baseline
        };
        let u: Vec<f64> = match &scorer {
            E2Scorer::Eigen { model, coeffs } => pool.install(|| {
                subjects
                    .par_iter()
                    .zip(&probes)
                    .zip(&var_sets)
                    .map(|((s, probe), set)| {
                        let face = prepare_face(&manifest, probe, &synthetic, cfg.master_seed)?;
                        let p = model.project(&face)?;
                        let scores = set
                            .members
                            .iter()
                            .map(|m| cosine(&p, &coeffs[&m.image_path]))
                            .collect::<Result<Vec<_>>>()?;
                        ium_of(s, scores)
                    })
                    .collect::<Result<_>>()
            })?,
            E2Scorer::Imported { dir } => {
                let matrix = load_scores(&score_file(dir, "e2", condition))?;
                subjects
                    .iter()
                    .zip(&probes)
                    .zip(&var_sets)
                    .map(|((s, probe), set)| {
                        let ids: Vec<String> = set.members.iter().map(session_key).collect();
                        ium_of(s, matrix.select(&session_key(probe), &ids)?)
                    })
                    .collect::<Result<_>>()?
            }
        };
        varied_ium.push(u);
    }

    let corrs = conditions
        .iter()
        .zip(&varied_ium)
        .map(|(c, u)| Ok((c.clone(), pearson(&reference_ium, u)?)))
        .collect::<Result<Vec<_>>>()?;
    let normalized = normalized_falloff(&corrs, &QualityCondition::Baseline)?;
    let baseline_r = corrs
        .iter()
        .find(|(c, _)| c.is_baseline())
        .map(|(_, r)| *r)
        .unwrap_or(f64::NAN);
    let rows = corrs
        .into_iter()
        .zip(normalized)
        .map(|((condition, r), (_, normalized))| StabilityRow { condition, r, normalized })
        .collect();
    Ok(StabilityReport {
        matcher: cfg.matcher.name().to_string(),
        subjects,
        reference_ium,
        varied_ium,
        rows,
        baseline_r,
    })
}

/// Writes a degraded copy of every manifest entry passing `filter` into
/// `out_dir`, together with a manifest describing the new images. Pose
/// conditions are not synthesizable and are rejected.
pub fn degrade_manifest(
    manifest: &DatasetManifest,
    filter: &PoolFilter,
    condition: &QualityCondition,
    master_seed: u64,
    out_dir: &Path,
    jobs: usize,
) -> Result<DatasetManifest> {
    if matches!(condition, QualityCondition::Pose(_)) {
        return Err(crate::degrade::DegradeError::PoseNotSynthesized.into());
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let selected: Vec<&ManifestEntry> = manifest.entries().iter().filter(|e| filter.matches(e)).collect();
    let pool = worker_pool(jobs)?;
    let entries: Vec<ManifestEntry> = pool.install(|| {
        selected
            .par_iter()
            .map(|e| {
                let img = manifest.load_image(e)?;
                let seed = derive_seed(master_seed, &e.image_path, condition);
                let out = apply_condition(&img, condition, seed)?;
                let rel = format!("{}/{}.png", condition.file_stem(), e.image_path.trim_end_matches(".png").trim_end_matches(".pgm"));
                let path = out_dir.join(&rel);
                if let Some(parent) = path.parent() {
                    fs::create_dir_all(parent).map_err(|err| Error::io(parent, err))?;
                }
                out.write(&path)?;
                Ok(ManifestEntry {
                    image_path: rel,
                    condition: condition.clone(),
                    ..(*e).clone()
                })
            })
            .collect::<Result<_>>()
    })?;
    let degraded = DatasetManifest::new(out_dir, entries)?;
    let path = out_dir.join("manifest.csv");
    fs::write(&path, degraded.to_text()).map_err(|e| Error::io(&path, e))?;
    Ok(degraded)
}

/// Scores probes against a baseline gallery with the eigenface matcher.
///
/// Probes are one image per subject in `probe_sessions` (the pose-labelled
/// image for pose conditions, otherwise the baseline image degraded by
/// `condition`); the gallery is one baseline image per subject in each of
/// `gallery_sessions`. Ids are `session:subject`. The model is trained on
/// the baseline images of both session lists, which makes the output
/// interchangeable with the built-in matcher of [`run_e2`].
pub fn match_manifest(
    manifest: &DatasetManifest,
    probe_sessions: &[String],
    gallery_sessions: &[String],
    condition: &QualityCondition,
    components: ComponentPolicy,
    master_seed: u64,
    jobs: usize,
) -> Result<ScoreMatrix> {
    let pool = worker_pool(jobs)?;
    let mut sessions: Vec<String> = probe_sessions.to_vec();
    for s in gallery_sessions {
        if !sessions.contains(s) {
            sessions.push(s.clone());
        }
    }
    let train_entries = training_entries(manifest, &sessions);
    let faces: Vec<AlignedFace> = pool.install(|| {
        train_entries
            .par_iter()
            .map(|e| prepare_face(manifest, e, &QualityCondition::Baseline, master_seed))
            .collect::<Result<_>>()
    })?;
    let model = EigenModel::train(&faces, components)?;

    let probe_filter = PoolFilter {
        sessions: None,
        condition: Some(if condition.is_synthetic() {
            QualityCondition::Baseline
        } else {
            condition.clone()
        }),
    };
    let mut probes: Vec<&ManifestEntry> = Vec::new();
    for s in probe_sessions {
        let filter = PoolFilter {
            sessions: Some(vec![s.clone()]),
            ..probe_filter.clone()
        };
        probes.extend(manifest.one_per_subject(&filter, None).into_values());
    }
    if let (QualityCondition::Pose(label), true) = (condition, probes.is_empty()) {
        return Err(Error::MissingPoseImages {
            label: label.clone(),
            subject: None,
        });
    }
    let mut gallery: Vec<&ManifestEntry> = Vec::new();
    for s in gallery_sessions {
        gallery.extend(
            manifest
                .one_per_subject(&PoolFilter::baseline_in(&[s.as_str()]), None)
                .into_values(),
        );
    }
    let synthetic = if condition.is_synthetic() {
        condition.clone()
    } else {
        QualityCondition::Baseline
    };
    let (probe_faces, gallery_faces) = pool.install(|| -> Result<_> {
        let p: Vec<(String, AlignedFace)> = probes
            .par_iter()
            .map(|e| Ok((session_key(e), prepare_face(manifest, e, &synthetic, master_seed)?)))
            .collect::<Result<_>>()?;
        let g: Vec<(String, AlignedFace)> = gallery
            .par_iter()
            .map(|e| Ok((session_key(e), prepare_face(manifest, e, &QualityCondition::Baseline, master_seed)?)))
            .collect::<Result<_>>()?;
        Ok((p, g))
    })?;
    Ok(model.score_matrix(&probe_faces, &gallery_faces)?)
}
