//! Experiment configuration files: one `key = value` record per line, `#`
//! starts a comment. Relative paths resolve against the file's directory.
//!
//! ```text
//! experiment = e2
//! manifest = data/manifest.csv
//! conditions = baseline, pose:19_1
//! blur_lengths = 5, 9, 17, 31
//! noise_variances = 0.03, 0.07, 0.1, 0.3
//! master_seed = 7
//! matcher = eigen
//! eigen_k = energy:0.95
//! reference_session = 03
//! varied_session = 04
//! pool_sessions = caspeal, feret
//! output_dir = out
//! ```

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::dataset::Point;
use crate::degrade::QualityCondition;
use crate::matcher::ComponentPolicy;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    /// Impostor-score distribution of a fixed probe against a gallery whose
    /// quality varies.
    GalleryQuality,
    /// Cross-session correlation of uniqueness scores while probe quality
    /// varies.
    SessionStability,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::GalleryQuality => "e1",
            Self::SessionStability => "e2",
        })
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "e1" | "E1" => Ok(Self::GalleryQuality),
            "e2" | "E2" => Ok(Self::SessionStability),
            other => Err(format!("unknown experiment {other:?} (expected e1 or e2)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MatcherSpec {
    /// Built-in eigenface matcher.
    Eigen,
    /// Externally computed score files, one per condition, in this directory.
    Scores(PathBuf),
}

impl MatcherSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Eigen => "eigen",
            Self::Scores(_) => "imported",
        }
    }
}

impl fmt::Display for MatcherSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Eigen => f.write_str("eigen"),
            Self::Scores(dir) => write!(f, "scores:{}", dir.display()),
        }
    }
}

impl FromStr for MatcherSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "eigen" {
            Ok(Self::Eigen)
        } else if let Some(dir) = s.strip_prefix("scores:") {
            if dir.is_empty() {
                return Err("scores: needs a directory".into());
            }
            Ok(Self::Scores(PathBuf::from(dir)))
        } else {
            Err(format!("unknown matcher {s:?} (expected eigen or scores:<dir>)"))
        }
    }
}

pub(crate) fn format_policy(p: ComponentPolicy) -> String {
    match p {
        ComponentPolicy::Fixed(k) => k.to_string(),
        ComponentPolicy::Energy(f) => format!("energy:{f}"),
    }
}

pub(crate) fn parse_policy(s: &str) -> Result<ComponentPolicy, String> {
    if let Some(f) = s.strip_prefix("energy:") {
        let f: f64 = f.parse().map_err(|_| format!("bad energy fraction {f:?}"))?;
        if !(f > 0.0 && f <= 1.0) {
            return Err(format!("energy fraction must lie in (0, 1], got {f}"));
        }
        return Ok(ComponentPolicy::Energy(f));
    }
    match s.parse::<usize>() {
        Ok(k) if k >= 1 => Ok(ComponentPolicy::Fixed(k)),
        _ => Err(format!("eigen_k must be a positive integer or energy:<fraction>, got {s:?}")),
    }
}

impl FromStr for ComponentPolicy {
    type Err = String;

    /// `<k>` for a fixed count or `energy:<fraction>`.
    fn from_str(s: &str) -> Result<Self, String> {
        parse_policy(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub manifest_path: PathBuf,
    /// Explicit conditions; blur lengths and noise variances are appended.
    pub conditions: Vec<QualityCondition>,
    pub blur_lengths: Vec<u32>,
    pub noise_variances: Vec<f64>,
    pub master_seed: u64,
    pub matcher: MatcherSpec,
    pub components: ComponentPolicy,
    pub output_dir: PathBuf,
    /// Fixed probe image and its eye coordinates (gallery experiment).
    pub probe_image: Option<PathBuf>,
    pub probe_eyes: Option<(Point, Point)>,
    /// Sessions the gallery is drawn from; `None` means every session.
    pub gallery_sessions: Option<Vec<String>>,
    pub reference_session: String,
    pub varied_session: String,
    /// Additional impostor-only sessions (imported populations).
    pub pool_sessions: Vec<String>,
    pub jobs: usize,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment, manifest_path: impl Into<PathBuf>) -> Self {
        Self {
            experiment,
            manifest_path: manifest_path.into(),
            conditions: vec![QualityCondition::Baseline],
            blur_lengths: Vec::new(),
            noise_variances: Vec::new(),
            master_seed: 0,
            matcher: MatcherSpec::Eigen,
            components: ComponentPolicy::default(),
            output_dir: PathBuf::from("out"),
            probe_image: None,
            probe_eyes: None,
            gallery_sessions: None,
            reference_session: String::new(),
            varied_session: String::new(),
            pool_sessions: Vec::new(),
            jobs: 1,
        }
    }

    /// Every condition the run evaluates, in order: explicit conditions,
    /// then blur lengths, then noise variances, without repeats.
    pub fn all_conditions(&self) -> Result<Vec<QualityCondition>> {
        let mut out: Vec<QualityCondition> = Vec::new();
        let extra = self
            .blur_lengths
            .iter()
            .map(|&n| QualityCondition::motion_blur(n))
            .chain(
                self.noise_variances
                    .iter()
                    .map(|&v| QualityCondition::gaussian_noise(v)),
            );
        for c in self.conditions.iter().cloned().map(Ok).chain(extra) {
            let c = c?;
            if !out.contains(&c) {
                out.push(c);
            }
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        let conditions = self.all_conditions()?;
        if conditions.is_empty() {
            return Err(Error::config(0, "conditions list is empty"));
        }
        if !conditions.iter().any(QualityCondition::is_baseline) {
            return Err(Error::config(0, "conditions must include baseline"));
        }
        if self.jobs == 0 {
            return Err(Error::config(0, "jobs must be at least 1"));
        }
        match self.experiment {
            Experiment::GalleryQuality => {
                let needs_probe = self.matcher == MatcherSpec::Eigen;
                if needs_probe && (self.probe_image.is_none() || self.probe_eyes.is_none()) {
                    return Err(Error::config(0, "e1 with the eigen matcher needs probe_image and probe_eyes"));
                }
            }
            Experiment::SessionStability => {
                if self.reference_session.is_empty() || self.varied_session.is_empty() {
                    return Err(Error::config(
                        0,
                        "e2 needs reference_session and varied_session",
                    ));
                }
                if self.reference_session == self.varied_session {
                    return Err(Error::config(
                        0,
                        "reference_session and varied_session must differ",
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base)
    }

    /// Parses a config file body. `experiment` and `manifest` are required.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut cfg = Self::new(Experiment::GalleryQuality, PathBuf::new());
        let mut have_experiment = false;
        let mut have_manifest = false;
        let mut have_conditions = false;
        let resolve = |v: &str| {
            let p = PathBuf::from(v);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Error::config(line, format!("expected `key = value`, got {content:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            let err = |m: String| Error::config(line, m);
            match key {
                "experiment" => {
                    cfg.experiment = value.parse().map_err(err)?;
                    have_experiment = true;
                }
                "manifest" | "manifest_path" => {
                    cfg.manifest_path = resolve(value);
                    have_manifest = true;
                }
                "conditions" => {
                    cfg.conditions = list(value)
                        .map(|t| t.parse::<QualityCondition>().map_err(|e| err(e.to_string())))
                        .collect::<Result<_>>()?;
                    have_conditions = true;
                }
                "blur_lengths" => {
                    cfg.blur_lengths = list(value)
                        .map(|t| t.parse::<u32>().map_err(|_| err(format!("bad blur length {t:?}"))))
                        .collect::<Result<_>>()?;
                }
                "noise_variances" => {
                    cfg.noise_variances = list(value)
                        .map(|t| t.parse::<f64>().map_err(|_| err(format!("bad variance {t:?}"))))
                        .collect::<Result<_>>()?;
                }
                "master_seed" | "seed" => {
                    cfg.master_seed = value.parse().map_err(|_| err(format!("bad seed {value:?}")))?;
                }
                "matcher" => {
                    cfg.matcher = match value.parse().map_err(err)? {
                        MatcherSpec::Scores(dir) => MatcherSpec::Scores(resolve(&dir.to_string_lossy())),
                        m => m,
                    };
                }
                "eigen_k" => cfg.components = parse_policy(value).map_err(err)?,
                "output_dir" => cfg.output_dir = resolve(value),
                "probe_image" => cfg.probe_image = Some(resolve(value)),
                "probe_eyes" => {
                    let v: Vec<f64> = list(value)
                        .map(|t| t.parse::<f64>().map_err(|_| err(format!("bad coordinate {t:?}"))))
                        .collect::<Result<_>>()?;
                    if v.len() != 4 {
                        return Err(err("probe_eyes needs lx, ly, rx, ry".into()));
                    }
                    cfg.probe_eyes = Some((Point::new(v[0], v[1]), Point::new(v[2], v[3])));
                }
                "gallery_sessions" => cfg.gallery_sessions = Some(list(value).map(str::to_string).collect()),
                "reference_session" => cfg.reference_session = value.to_string(),
                "varied_session" => cfg.varied_session = value.to_string(),
                "pool_sessions" => cfg.pool_sessions = list(value).map(str::to_string).collect(),
                "jobs" => {
                    cfg.jobs = value.parse().map_err(|_| err(format!("bad job count {value:?}")))?;
                }
                other => return Err(err(format!("unknown key {other:?}"))),
            }
        }
        if !have_experiment {
            return Err(Error::config(0, "missing key `experiment`"));
        }
        if !have_manifest {
            return Err(Error::config(0, "missing key `manifest`"));
        }
        if have_conditions && cfg.conditions.is_empty() && cfg.blur_lengths.is_empty() && cfg.noise_variances.is_empty() {
            return Err(Error::config(0, "conditions list is empty"));
        }
        Ok(cfg)
    }

    /// The configuration as `key = value` lines, as recorded in run
    /// metadata. Worker count is omitted since it never affects results.
    pub fn to_text(&self) -> String {
        let join = |v: Vec<String>| v.join(", ");
        let mut lines = vec![
            format!("experiment = {}", self.experiment),
            format!("manifest = {}", self.manifest_path.display()),
            format!(
                "conditions = {}",
                join(self.conditions.iter().map(ToString::to_string).collect())
            ),
            format!(
                "blur_lengths = {}",
                join(self.blur_lengths.iter().map(ToString::to_string).collect())
            ),
            format!(
                "noise_variances = {}",
                join(self.noise_variances.iter().map(ToString::to_string).collect())
            ),
            format!("master_seed = {}", self.master_seed),
            format!("matcher = {}", self.matcher),
            format!("eigen_k = {}", format_policy(self.components)),
            format!("output_dir = {}", self.output_dir.display()),
        ];
        if let Some(p) = &self.probe_image {
            lines.push(format!("probe_image = {}", p.display()));
        }
        if let Some((l, r)) = self.probe_eyes {
            lines.push(format!("probe_eyes = {}, {}, {}, {}", l.x, l.y, r.x, r.y));
        }
        if let Some(s) = &self.gallery_sessions {
            lines.push(format!("gallery_sessions = {}", s.join(", ")));
        }
        if !self.reference_session.is_empty() {
            lines.push(format!("reference_session = {}", self.reference_session));
        }
        if !self.varied_session.is_empty() {
            lines.push(format!("varied_session = {}", self.varied_session));
        }
        if !self.pool_sessions.is_empty() {
            lines.push(format!("pool_sessions = {}", self.pool_sessions.join(", ")));
        }
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }
}

fn list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|t| !t.is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;

    const E2: &str = "\
# cross-session run
experiment = e2
manifest = data/manifest.csv
conditions = baseline, pose:19_1
blur_lengths = 5, 31
noise_variances = 0.3
master_seed = 11
matcher = scores:imported
eigen_k = 12
reference_session = 03
varied_session = 04
pool_sessions = caspeal, feret
output_dir = out
jobs = 4
";

    #[test]
    fn parses_full_e2_config() {
        let cfg = ExperimentConfig::parse(E2, Path::new("/cfg")).unwrap();
        assert_eq!(cfg.experiment, Experiment::SessionStability);
        assert_eq!(cfg.manifest_path, PathBuf::from("/cfg/data/manifest.csv"));
        assert_eq!(cfg.matcher, MatcherSpec::Scores("/cfg/imported".into()));
        assert_eq!(cfg.components, ComponentPolicy::Fixed(12));
        assert_eq!(cfg.pool_sessions, vec!["caspeal", "feret"]);
        assert_eq!(cfg.jobs, 4);
        let tags: Vec<String> = cfg
            .all_conditions()
            .unwrap()
            .iter()
            .map(ToString::to_string)
            .collect();
        assert_eq!(tags, ["baseline", "pose:19_1", "blur:5", "blur:31", "noise:0.3"]);
        cfg.validate().unwrap();
        let again = ExperimentConfig::parse(&cfg.to_text(), Path::new("/")).unwrap();
        assert_eq!(again.all_conditions().unwrap(), cfg.all_conditions().unwrap());
        assert_eq!(again.matcher, cfg.matcher);
    }

    #[test]
    fn empty_conditions_rejected() {
        let text = "experiment = e1\nmanifest = m.csv\nconditions =\n";
        assert!(matches!(
            ExperimentConfig::parse(text, Path::new("")),
            Err(Error::Config { .. })
        ));
        let mut cfg = ExperimentConfig::new(Experiment::GalleryQuality, "m.csv");
        cfg.conditions.clear();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn baseline_required_and_sessions_distinct() {
        let mut cfg = ExperimentConfig::new(Experiment::SessionStability, "m.csv");
        cfg.reference_session = "03".into();
        cfg.varied_session = "03".into();
        assert!(cfg.validate().is_err());
        cfg.varied_session = "04".into();
        cfg.validate().unwrap();
        cfg.conditions = vec![QualityCondition::motion_blur(5).unwrap()];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn bad_values_report_line() {
        let text = "experiment = e1\nmanifest = m.csv\nblur_lengths = 4\n";
        let cfg = ExperimentConfig::parse(text, Path::new("")).unwrap();
        assert!(cfg.all_conditions().is_err());
        match ExperimentConfig::parse("experiment = e3\n", Path::new("")) {
            Err(Error::Config { line: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(ExperimentConfig::parse("experiment = e1\nmanifest = m\nfoo = 1\n", Path::new("")).is_err());
        assert!(ExperimentConfig::parse("experiment = e1\n", Path::new("")).is_err());
    }
}
