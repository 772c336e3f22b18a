use std::fs;
use std::path::{Path, PathBuf};

use crate::degrade::QualityCondition;
use crate::stats::BoxStats;
use crate::{Error, Result, VERSION};

use super::svg::{render_boxplot, render_falloff};
use super::{ExperimentConfig, GalleryReport, GalleryRow, StabilityReport, StabilityRow};

pub const BOXSTATS_HEADER: &str = "condition,n,mean,q1,median,q3,iqr,lower_whisker,upper_whisker,outliers";
pub const STABILITY_HEADER: &str = "matcher,condition,r,normalized";

/// Everything one CLI invocation produced.
#[derive(Debug, Clone, Default)]
pub struct RunReport {
    pub configs: Vec<ExperimentConfig>,
    pub gallery: Option<GalleryReport>,
    pub stability: Option<StabilityReport>,
}

fn boxstats_csv(rows: &[GalleryRow]) -> String {
    let mut out = format!("{BOXSTATS_HEADER}\n");
    for row in rows {
        let s = &row.stats;
        let outliers: Vec<String> = s.outliers.iter().map(f64::to_string).collect();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            row.condition,
            s.n,
            s.mean,
            s.q1,
            s.median,
            s.q3,
            s.iqr,
            s.lower_whisker,
            s.upper_whisker,
            outliers.join(";")
        ));
    }
    out
}

fn stability_csv(report: &StabilityReport) -> String {
    let mut out = format!("{STABILITY_HEADER}\n");
    for row in &report.rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            report.matcher, row.condition, row.r, row.normalized
        ));
    }
    out
}

fn ium_csv(report: &StabilityReport) -> String {
    let mut out = String::from("subject,reference");
    for row in &report.rows {
        out.push(',');
        out.push_str(&row.condition.to_string());
    }
    out.push('\n');
    for (i, s) in report.subjects.iter().enumerate() {
        out.push_str(s);
        out.push_str(&format!(",{}", report.reference_ium[i]));
        for v in &report.varied_ium {
            out.push_str(&format!(",{}", v[i]));
        }
        out.push('\n');
    }
    out
}

fn write(dir: &Path, name: &str, body: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

/// Writes the report into `dir`: `boxstats.csv` and `boxplot.svg` for the
/// gallery experiment, `stability.csv`, `ium.csv` and `falloff.svg` for the
/// session experiment, and `run.txt` with the toolkit version and the
/// configuration. Output bytes depend only on the report contents.
pub fn emit_report(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    if let Some(g) = &report.gallery {
        write(dir, "boxstats.csv", &boxstats_csv(&g.rows), &mut written)?;
        let title = format!("Impostor scores vs gallery quality ({})", g.matcher);
        write(dir, "boxplot.svg", &render_boxplot(&title, &g.rows), &mut written)?;
    }
    if let Some(s) = &report.stability {
        write(dir, "stability.csv", &stability_csv(s), &mut written)?;
        write(dir, "ium.csv", &ium_csv(s), &mut written)?;
        let title = format!("Normalized uniqueness correlation ({})", s.matcher);
        write(dir, "falloff.svg", &render_falloff(&title, &s.rows), &mut written)?;
    }
    let mut meta = format!("toolkit = menagerie {VERSION}\n");
    for cfg in &report.configs {
        meta.push_str(&format!("\n[{}]\nseed = {}\n", cfg.experiment, cfg.master_seed));
        meta.push_str(&cfg.to_text());
    }
    write(dir, "run.txt", &meta, &mut written)?;
    Ok(written)
}

fn csv_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::config(line, format!("{}: {}", path.display(), message.into()))
}

fn read_rows(path: &Path, header: &str) -> Result<Vec<(usize, Vec<String>)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == header => {}
        _ => return Err(csv_error(path, 1, format!("expected header {header:?}"))),
    }
    Ok(lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.split(',').map(str::to_string).collect()))
        .collect())
}

fn num(path: &Path, line: usize, s: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| csv_error(path, line, format!("bad number {s:?}")))
}

fn condition(path: &Path, line: usize, s: &str) -> Result<QualityCondition> {
    s.parse()
        .map_err(|e: crate::degrade::DegradeError| csv_error(path, line, e.to_string()))
}

pub fn read_boxstats_csv(path: &Path) -> Result<Vec<GalleryRow>> {
    read_rows(path, BOXSTATS_HEADER)?
        .into_iter()
        .map(|(line, f)| {
            if f.len() != 10 {
                return Err(csv_error(path, line, "expected 10 fields"));
            }
            let outliers = f[9]
                .split(';')
                .filter(|s| !s.is_empty())
                .map(|s| num(path, line, s))
                .collect::<Result<Vec<_>>>()?;
            Ok(GalleryRow {
                condition: condition(path, line, &f[0])?,
                stats: BoxStats {
                    n: f[1]
                        .parse()
                        .map_err(|_| csv_error(path, line, "bad count"))?,
                    mean: num(path, line, &f[2])?,
                    q1: num(path, line, &f[3])?,
                    median: num(path, line, &f[4])?,
                    q3: num(path, line, &f[5])?,
                    iqr: num(path, line, &f[6])?,
                    lower_whisker: num(path, line, &f[7])?,
                    upper_whisker: num(path, line, &f[8])?,
                    outliers,
                },
            })
        })
        .collect()
}

/// Returns the matcher name and rows of a `stability.csv`.
pub fn read_stability_csv(path: &Path) -> Result<(String, Vec<StabilityRow>)> {
    let mut matcher = String::new();
    let rows = read_rows(path, STABILITY_HEADER)?
        .into_iter()
        .map(|(line, f)| {
            if f.len() != 4 {
                return Err(csv_error(path, line, "expected 4 fields"));
            }
            matcher.clone_from(&f[0]);
            Ok(StabilityRow {
                condition: condition(path, line, &f[1])?,
                r: num(path, line, &f[2])?,
                normalized: num(path, line, &f[3])?,
            })
        })
        .collect::<Result<_>>()?;
    Ok((matcher, rows))
}

/// Regenerates the SVG charts of `dir` from whichever CSV files it holds.
pub fn rerender(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let boxstats = dir.join("boxstats.csv");
    if boxstats.exists() {
        let rows = read_boxstats_csv(&boxstats)?;
        write(dir, "boxplot.svg", &render_boxplot("Impostor scores vs gallery quality", &rows), &mut written)?;
    }
    let stability = dir.join("stability.csv");
    if stability.exists() {
        let (matcher, rows) = read_stability_csv(&stability)?;
        let title = format!("Normalized uniqueness correlation ({matcher})");
        write(dir, "falloff.svg", &render_falloff(&title, &rows), &mut written)?;
    }
    Ok(written)
}
