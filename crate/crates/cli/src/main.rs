//! `menagerie`: degrade datasets, score them, and run the gallery-quality
//! (`e1`) and cross-session (`e2`) uniqueness experiments.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use menagerie_core::dataset::{load_manifest, PoolFilter};
use menagerie_core::degrade::QualityCondition;
use menagerie_core::matcher::{export_scores, ComponentPolicy};
use menagerie_core::pipeline::{
    degrade_manifest, emit_report, match_manifest, rerender, run_e1, run_e2, Experiment, ExperimentConfig,
    MatcherSpec, RunReport,
};
use menagerie_core::synth::{generate, SynthConfig};

#[derive(Parser)]
#[command(name = "menagerie", version, about = "Impostor-score uniqueness under image degradation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Apply one quality condition to a subset of a manifest.
    Degrade(DegradeArgs),
    /// Score probes against a baseline gallery and write a score-matrix file.
    Match(MatchArgs),
    /// Gallery-quality experiment: impostor score box plots per condition.
    E1(RunArgs),
    /// Cross-session experiment: uniqueness correlation per probe condition.
    E2(RunArgs),
    /// Re-render the charts from the CSVs in a report directory.
    Report(ReportArgs),
    /// Write a synthetic face dataset with ready-to-run configs.
    Synth(SynthArgs),
}

#[derive(Args)]
struct DegradeArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Condition tag: `blur:<odd length>` or `noise:<variance>`.
    #[arg(long)]
    condition: QualityCondition,
    /// Comma-separated sessions to degrade (default: every session).
    #[arg(long, value_delimiter = ',')]
    sessions: Option<Vec<String>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct MatchArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value = "baseline")]
    condition: QualityCondition,
    /// Sessions providing probes (one image per subject and session).
    #[arg(long, value_delimiter = ',', required = true)]
    probe_sessions: Vec<String>,
    /// Sessions providing the baseline gallery.
    #[arg(long, value_delimiter = ',', required = true)]
    gallery_sessions: Vec<String>,
    /// `<k>` components or `energy:<fraction>`.
    #[arg(long, default_value = "energy:0.95")]
    components: ComponentPolicy,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output score-matrix file.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's manifest.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Overrides the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// `eigen` or `scores:<dir>`.
    #[arg(long)]
    matcher: Option<MatcherSpec>,
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory holding boxstats.csv and/or stability.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 40)]
    subjects: usize,
    /// Single-image subjects added as an extra impostor pool.
    #[arg(long, default_value_t = 120)]
    external: usize,
    #[arg(long, default_value_t = 2013)]
    seed: u64,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Degrade(a) => degrade(a),
        Command::Match(a) => score(a),
        Command::E1(a) => experiment(Experiment::GalleryQuality, a),
        Command::E2(a) => experiment(Experiment::SessionStability, a),
        Command::Report(a) => {
            let written = rerender(&a.out)?;
            if written.is_empty() {
                bail!("no boxstats.csv or stability.csv in {}", a.out.display());
            }
            list(&written);
            Ok(())
        }
        Command::Synth(a) => synth(a),
    }
}

fn list(paths: &[PathBuf]) {
    for p in paths {
        println!("{}", p.display());
    }
}

fn degrade(a: DegradeArgs) -> Result<()> {
    let manifest = load_manifest(&a.manifest)?;
    let filter = PoolFilter {
        sessions: a.sessions,
        condition: Some(QualityCondition::Baseline),
    };
    let out = degrade_manifest(&manifest, &filter, &a.condition, a.seed, &a.out, a.jobs)?;
    println!("{} images -> {}", out.entries().len(), a.out.join("manifest.csv").display());
    Ok(())
}

fn score(a: MatchArgs) -> Result<()> {
    let manifest = load_manifest(&a.manifest)?;
    let matrix = match_manifest(
        &manifest,
        &a.probe_sessions,
        &a.gallery_sessions,
        &a.condition,
        a.components,
        a.seed,
        a.jobs,
    )?;
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    export_scores(&matrix, &a.out)?;
    println!(
        "{} x {} scores -> {}",
        matrix.probe_ids().len(),
        matrix.gallery_ids().len(),
        a.out.display()
    );
    Ok(())
}

fn experiment(kind: Experiment, a: RunArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    if cfg.experiment != kind {
        bail!("{} is an {} config, not {kind}", a.config.display(), cfg.experiment);
    }
    if let Some(m) = a.manifest {
        cfg.manifest_path = m;
    }
    if let Some(s) = a.seed {
        cfg.master_seed = s;
    }
    if let Some(o) = a.out {
        cfg.output_dir = o;
    }
    if let Some(m) = a.matcher {
        cfg.matcher = m;
    }
    if let Some(j) = a.jobs {
        cfg.jobs = j;
    }
    let mut report = RunReport::default();
    match kind {
        Experiment::GalleryQuality => report.gallery = Some(run_e1(&cfg)?),
        Experiment::SessionStability => {
            let s = run_e2(&cfg)?;
            for row in &s.rows {
                println!("{:<12} r = {:+.4}  normalized = {:+.4}", row.condition.to_string(), row.r, row.normalized);
            }
            report.stability = Some(s);
        }
    }
    let out = cfg.output_dir.clone();
    report.configs.push(cfg);
    list(&emit_report(&report, &out)?);
    Ok(())
}

fn write_config(path: &Path, body: &str) -> Result<()> {
    fs::write(path, body).with_context(|| format!("writing {}", path.display()))?;
    println!("{}", path.display());
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    let cfg = SynthConfig {
        subjects: a.subjects,
        external_subjects: a.external,
        seed: a.seed,
        ..SynthConfig::default()
    };
    let (manifest, probe) = generate(&a.out, &cfg)?;
    println!("{} images -> {}", manifest.entries().len(), a.out.join("manifest.csv").display());
    let poses: Vec<String> = cfg.poses.iter().map(|(l, _)| format!("pose:{l}")).collect();
    let (ref_s, var_s) = (&cfg.sessions[0], &cfg.sessions[cfg.sessions.len() - 1]);
    let pool = if a.external > 0 { cfg.external_session.as_str() } else { "" };
    write_config(
        &a.out.join("e1.conf"),
        &format!(
            "experiment = e1\nmanifest = manifest.csv\nconditions = baseline, {}\nblur_lengths = 5, 9, 17, 31\n\
             noise_variances = 0.03, 0.07, 0.1, 0.3\nmaster_seed = 1\nmatcher = eigen\nprobe_image = probe.png\n\
             probe_eyes = {}, {}, {}, {}\ngallery_sessions = {var_s}\noutput_dir = out\n",
            poses.join(", "),
            probe.left_eye.x,
            probe.left_eye.y,
            probe.right_eye.x,
            probe.right_eye.y,
        ),
    )?;
    write_config(
        &a.out.join("e2.conf"),
        &format!(
            "experiment = e2\nmanifest = manifest.csv\nconditions = baseline, {}\nblur_lengths = 5, 9, 17, 31\n\
             noise_variances = 0.03, 0.07, 0.1, 0.3\nmaster_seed = 1\nmatcher = eigen\n\
             reference_session = {ref_s}\nvaried_session = {var_s}\npool_sessions = {pool}\noutput_dir = out\n",
            poses.join(", "),
        ),
    )?;
    Ok(())
}
