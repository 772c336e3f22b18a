//! Dataset manifests and impostor-set construction.
//!
//! The manifest is the only source of identity, session and condition
//! information; directory layout carries no meaning. Format:
//!
//! ```text
//! image_path,subject_id,session_id,condition_tag,lx,ly,rx,ry
//! s03/001.png,001,03,baseline,41.0,60.0,89.0,60.0
//! ```
//!
//! Relative image paths resolve against the manifest's directory.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::degrade::QualityCondition;
use crate::image::{GrayImage, ImageError};

pub const MANIFEST_HEADER: &str = "image_path,subject_id,session_id,condition_tag,lx,ly,rx,ry";

const FIELDS: [&str; 8] = [
    "image_path",
    "subject_id",
    "session_id",
    "condition_tag",
    "lx",
    "ly",
    "rx",
    "ry",
];

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("manifest line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("manifest line {line}: duplicate image path {path:?}")]
    DuplicatePath { line: usize, path: String },
    #[error("manifest line {line}: missing field `{field}`")]
    MissingField { line: usize, field: &'static str },
    #[error("probe subject {0:?} is not in the manifest")]
    UnknownSubject(String),
    #[error("impostor set for {probe:?} has {count} subject(s); at least 2 are required")]
    EmptyImpostorSet { probe: String, count: usize },
    #[error("subject {subject:?} is missing from session {session:?}")]
    SubjectNotInBothSessions { subject: String, session: String },
    #[error("eye coordinates of {path:?} fall outside its {width}x{height} image")]
    EyesOutOfBounds {
        path: String,
        width: usize,
        height: usize,
    },
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Image(#[from] ImageError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub image_path: String,
    pub subject_id: String,
    pub session_id: String,
    pub condition: QualityCondition,
    pub left_eye: Point,
    pub right_eye: Point,
}

impl ManifestEntry {
    fn to_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.image_path,
            self.subject_id,
            self.session_id,
            self.condition,
            self.left_eye.x,
            self.left_eye.y,
            self.right_eye.x,
            self.right_eye.y
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    root: PathBuf,
    entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    /// Builds a manifest from in-memory entries, enforcing path uniqueness.
    pub fn new(root: impl Into<PathBuf>, entries: Vec<ManifestEntry>) -> Result<Self, DatasetError> {
        let mut seen = HashSet::new();
        for (i, e) in entries.iter().enumerate() {
            if !seen.insert(e.image_path.as_str()) {
                return Err(DatasetError::DuplicatePath {
                    line: i + 2,
                    path: e.image_path.clone(),
                });
            }
        }
        Ok(Self {
            root: root.into(),
            entries,
        })
    }

    pub fn parse(text: &str, root: impl Into<PathBuf>) -> Result<Self, DatasetError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header.trim_end() == MANIFEST_HEADER => {}
            Some((_, header)) => {
                return Err(DatasetError::Parse {
                    line: 1,
                    message: format!("expected header {MANIFEST_HEADER:?}, found {header:?}"),
                })
            }
            None => {
                return Err(DatasetError::Parse {
                    line: 1,
                    message: "empty manifest".into(),
                })
            }
        }
        let mut entries = Vec::new();
        for (idx, raw) in lines {
            let line = idx + 1;
            let raw = raw.trim_end();
            if raw.is_empty() {
                continue;
            }
            entries.push(parse_entry(raw, line)?);
        }
        if entries.is_empty() {
            return Err(DatasetError::Parse {
                line: 2,
                message: "manifest has no entries".into(),
            });
        }
        Self::new(root, entries)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from(MANIFEST_HEADER);
        out.push('\n');
        for e in &self.entries {
            out.push_str(&e.to_line());
            out.push('\n');
        }
        out
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        let p = Path::new(&entry.image_path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }

    /// Loads an entry's image and checks that its eye coordinates are inside it.
    pub fn load_image(&self, entry: &ManifestEntry) -> Result<GrayImage, DatasetError> {
        let img = GrayImage::read(self.resolve(entry))?;
        if !img.contains(entry.left_eye.x, entry.left_eye.y)
            || !img.contains(entry.right_eye.x, entry.right_eye.y)
        {
            return Err(DatasetError::EyesOutOfBounds {
                path: entry.image_path.clone(),
                width: img.width(),
                height: img.height(),
            });
        }
        Ok(img)
    }

    pub fn subjects(&self) -> BTreeSet<&str> {
        self.entries.iter().map(|e| e.subject_id.as_str()).collect()
    }

    pub fn subjects_in_session(&self, session: &str) -> BTreeSet<&str> {
        self.entries
            .iter()
            .filter(|e| e.session_id == session)
            .map(|e| e.subject_id.as_str())
            .collect()
    }

    /// Subjects present in either session; fails if any of them is absent
    /// from the other one.
    pub fn common_subjects(&self, a: &str, b: &str) -> Result<Vec<String>, DatasetError> {
        let in_a = self.subjects_in_session(a);
        let in_b = self.subjects_in_session(b);
        if let Some(s) = in_a.difference(&in_b).next() {
            return Err(DatasetError::SubjectNotInBothSessions {
                subject: s.to_string(),
                session: b.to_string(),
            });
        }
        if let Some(s) = in_b.difference(&in_a).next() {
            return Err(DatasetError::SubjectNotInBothSessions {
                subject: s.to_string(),
                session: a.to_string(),
            });
        }
        Ok(in_a.into_iter().map(str::to_string).collect())
    }

    /// One entry per subject among those matching `filter`, choosing the
    /// lexicographically smallest image path. Keyed and ordered by subject.
    pub fn one_per_subject(
        &self,
        filter: &PoolFilter,
        exclude_subject: Option<&str>,
    ) -> BTreeMap<&str, &ManifestEntry> {
        let mut chosen: BTreeMap<&str, &ManifestEntry> = BTreeMap::new();
        for e in self.entries.iter().filter(|e| filter.matches(e)) {
            if exclude_subject == Some(e.subject_id.as_str()) {
                continue;
            }
            chosen
                .entry(e.subject_id.as_str())
                .and_modify(|cur| {
                    if e.image_path < cur.image_path {
                        *cur = e;
                    }
                })
                .or_insert(e);
        }
        chosen
    }

    /// The single image of `subject` matching `filter`, by the same
    /// smallest-path rule.
    pub fn pick(&self, subject: &str, filter: &PoolFilter) -> Option<&ManifestEntry> {
        self.entries
            .iter()
            .filter(|e| e.subject_id == subject && filter.matches(e))
            .min_by(|a, b| a.image_path.cmp(&b.image_path))
    }
}

fn parse_entry(raw: &str, line: usize) -> Result<ManifestEntry, DatasetError> {
    let fields: Vec<&str> = raw.split(',').map(str::trim).collect();
    if fields.len() > FIELDS.len() {
        return Err(DatasetError::Parse {
            line,
            message: format!("expected {} fields, found {}", FIELDS.len(), fields.len()),
        });
    }
    let field = |i: usize| -> Result<&str, DatasetError> {
        match fields.get(i) {
            Some(f) if !f.is_empty() => Ok(f),
            _ => Err(DatasetError::MissingField {
                line,
                field: FIELDS[i],
            }),
        }
    };
    let coord = |i: usize| -> Result<f64, DatasetError> {
        let f = field(i)?;
        match f.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(DatasetError::Parse {
                line,
                message: format!("`{}` is not a finite number: {f:?}", FIELDS[i]),
            }),
        }
    };
    let condition = field(3)?
        .parse::<QualityCondition>()
        .map_err(|e| DatasetError::Parse {
            line,
            message: e.to_string(),
        })?;
    Ok(ManifestEntry {
        image_path: field(0)?.to_string(),
        subject_id: field(1)?.to_string(),
        session_id: field(2)?.to_string(),
        condition,
        left_eye: Point::new(coord(4)?, coord(5)?),
        right_eye: Point::new(coord(6)?, coord(7)?),
    })
}

/// Reads and validates a manifest file.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest, DatasetError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
    DatasetManifest::parse(&text, root)
}

/// Selects manifest entries by session membership and condition.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PoolFilter {
    /// Accepted sessions; `None` accepts every session.
    pub sessions: Option<Vec<String>>,
    /// Required condition; `None` accepts every condition.
    pub condition: Option<QualityCondition>,
}

impl PoolFilter {
    pub fn baseline_in<S: AsRef<str>>(sessions: &[S]) -> Self {
        Self {
            sessions: Some(sessions.iter().map(|s| s.as_ref().to_string()).collect()),
            condition: Some(QualityCondition::Baseline),
        }
    }

    pub fn matches(&self, entry: &ManifestEntry) -> bool {
        let session_ok = self
            .sessions
            .as_ref()
            .is_none_or(|s| s.contains(&entry.session_id));
        let condition_ok = self
            .condition
            .as_ref()
            .is_none_or(|c| *c == entry.condition);
        session_ok && condition_ok
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImpostorSet {
    pub probe_subject: String,
    /// One entry per impostor subject, ordered by subject id.
    pub members: Vec<ManifestEntry>,
}

impl ImpostorSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Impostor population for `probe_subject`: one image for every other
/// subject passing `filter`.
pub fn build_impostor_set(
    manifest: &DatasetManifest,
    probe_subject: &str,
    filter: &PoolFilter,
) -> Result<ImpostorSet, DatasetError> {
    if !manifest
        .entries()
        .iter()
        .any(|e| e.subject_id == probe_subject)
    {
        return Err(DatasetError::UnknownSubject(probe_subject.to_string()));
    }
    let members: Vec<ManifestEntry> = manifest
        .one_per_subject(filter, Some(probe_subject))
        .into_values()
        .cloned()
        .collect();
    if members.len() < 2 {
        return Err(DatasetError::EmptyImpostorSet {
            probe: probe_subject.to_string(),
            count: members.len(),
        });
    }
    Ok(ImpostorSet {
        probe_subject: probe_subject.to_string(),
        members,
    })
}
