//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Tolerances and runtime budgets are fixed
//! here and must not be loosened.

mod common;

use std::fs;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use menagerie_core::degrade::{gaussian_noise, gaussian_noise_unclamped, motion_blur, QualityCondition};
use menagerie_core::matcher::{AlignedFace, ComponentPolicy, EigenModel};
use menagerie_core::pipeline::{emit_report, run_e1, run_e2, RunReport};
use menagerie_core::stats::{boxplot_stats, normalized_falloff, pearson};
use menagerie_core::uniqueness::{ium, ImpostorScoreSet, UniquenessError};
use menagerie_core::GrayImage;

use common::{brute_boxplot, direct_cosine, e1_config, e2_config, pairwise_pearson, synth_dataset};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

fn below(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> usize {
    lo + (rng.next_u64() % (hi - lo + 1) as u64) as usize
}

fn u_of(scores: Vec<f64>) -> Result<f64, String> {
    let set = ImpostorScoreSet::new("p", scores).map_err(|e| e.to_string())?;
    ium(&set).map(|r| r.u).map_err(|e| e.to_string())
}

fn uniqueness_suite() -> Outcome {
    let u = u_of(vec![0.2, 0.4, 0.9])?;
    check((u - 4.0 / 7.0).abs() <= 1e-12, || format!("ium(0.2, 0.4, 0.9) = {u}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let (a, b) = (unit(&mut rng), unit(&mut rng));
        if a != b {
            let u = u_of(vec![a, b])?;
            check(u == 0.5, || format!("two-point set ({a}, {b}) gave {u}"))?;
        }
    }
    let degenerate = ImpostorScoreSet::new("p", vec![0.3; 5])
        .map_err(|e| e.to_string())
        .map(|s| ium(&s));
    check(matches!(degenerate, Ok(Err(UniquenessError::DegenerateScores(_)))), || {
        format!("equal scores gave {degenerate:?}")
    })?;
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = below(&mut rng, 2, 200);
        let s: Vec<f64> = (0..n).map(|_| unit(&mut rng) * 2.0 - 1.0).collect();
        let a = 0.01 + unit(&mut rng) * 100.0;
        let b = unit(&mut rng) * 20.0 - 10.0;
        let mapped = s.iter().map(|v| a * v + b).collect();
        worst = worst.max((u_of(s)? - u_of(mapped)?).abs());
    }
    check(worst <= 1e-10, || format!("affine invariance error {worst:e}"))?;
    Ok(format!("ium = 4/7, affine error {worst:.1e}"))
}

fn statistics_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = below(&mut rng, 2, 1000);
        let v: Vec<f64> = (0..n).map(|_| unit(&mut rng) * 4.0 - 2.0).collect();
        let b = boxplot_stats(&v).map_err(|e| e.to_string())?;
        let o = brute_boxplot(&v);
        for (got, want) in [
            (b.q1, o.q1),
            (b.median, o.median),
            (b.q3, o.q3),
            (b.lower_whisker, o.lower_whisker),
            (b.upper_whisker, o.upper_whisker),
        ] {
            worst = worst.max((got - want).abs());
        }
        check(b.outliers == o.outliers, || format!("outliers differ for n = {n}"))?;
    }
    for _ in 0..1000 {
        // correlation needs at least three points
        let n = below(&mut rng, 3, 1000);
        let x: Vec<f64> = (0..n).map(|_| unit(&mut rng)).collect();
        let mix = unit(&mut rng) * 2.0 - 1.0;
        let y: Vec<f64> = x.iter().map(|xi| mix * xi + unit(&mut rng)).collect();
        let r = pearson(&x, &y).map_err(|e| e.to_string())?;
        worst = worst.max((r - pairwise_pearson(&x, &y)).abs());
    }
    check(worst <= 1e-9, || format!("oracle disagreement {worst:e}"))?;
    let r = pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).map_err(|e| e.to_string())?;
    check((r - 0.98198).abs() <= 1e-5, || format!("pearson example {r}"))?;
    Ok(format!("max oracle error {worst:.1e}, r = {r:.5}"))
}

fn falloff_replay() -> Outcome {
    let row = [("base", 0.68), ("5", 0.65), ("9", 0.59), ("17", 0.27), ("31", 0.13)];
    let want = [1.0, 0.9559, 0.8676, 0.3971, 0.1912];
    let got = normalized_falloff(&row, &"base").map_err(|e| e.to_string())?;
    for ((_, g), w) in got.iter().zip(want) {
        check((g - w).abs() <= 1e-4, || format!("{g} vs {w}"))?;
    }
    let shown: Vec<String> = got.iter().map(|(_, v)| format!("{v:.4}")).collect();
    Ok(shown.join(", "))
}

fn degradation_suite() -> Outcome {
    let impulse = GrayImage::new(5, 1, vec![0.0, 0.0, 1.0, 0.0, 0.0]).map_err(|e| e.to_string())?;
    let out = motion_blur(&impulse, 3).map_err(|e| e.to_string())?;
    let third = 1.0 / 3.0;
    for (g, w) in out.data().iter().zip([0.0, third, third, third, 0.0]) {
        check((g - w).abs() <= 1e-12, || format!("impulse response {:?}", out.data()))?;
    }
    for c in [0.0, 0.1, 0.5, 0.7315, 1.0] {
        let img = GrayImage::filled(64, 9, c).map_err(|e| e.to_string())?;
        for n in [3, 5, 9, 17, 31] {
            let b = motion_blur(&img, n).map_err(|e| e.to_string())?;
            check(b == img, || format!("constant {c} moved under length {n}"))?;
        }
    }
    let flat = GrayImage::filled(512, 512, 0.5).map_err(|e| e.to_string())?;
    let mut details = Vec::new();
    for var in [0.007, 0.03, 0.3] {
        let raw = gaussian_noise_unclamped(&flat, var, 99).map_err(|e| e.to_string())?;
        let n = raw.len() as f64;
        let mean = raw.iter().sum::<f64>() / n;
        let sample = raw.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        check((sample / var - 1.0).abs() <= 0.10, || format!("variance {sample} for {var}"))?;
        details.push(format!("{var}: {sample:.5}"));
    }
    let img = GrayImage::from_fn(96, 64, |x, y| ((x * 7 + y * 13) % 29) as f64 / 28.0).map_err(|e| e.to_string())?;
    for _ in 0..3 {
        check(gaussian_noise(&img, 0.07, 5).ok() == gaussian_noise(&img, 0.07, 5).ok(), || {
            "noise not repeatable".into()
        })?;
        let (a, b) = (motion_blur(&img, 9).ok(), motion_blur(&img, 9).ok());
        let same = match (&a, &b) {
            (Some(a), Some(b)) => a.data().iter().zip(b.data()).all(|(p, q)| p.to_bits() == q.to_bits()),
            _ => false,
        };
        check(same, || "blur not repeatable".into())?;
    }
    let a = gaussian_noise_unclamped(&img, 0.07, 5).map_err(|e| e.to_string())?;
    let b = gaussian_noise_unclamped(&img, 0.07, 5).map_err(|e| e.to_string())?;
    check(a.iter().zip(&b).all(|(p, q)| p.to_bits() == q.to_bits()), || "noise bits differ".into())?;
    Ok(format!("noise variances {}", details.join(", ")))
}

fn matcher_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut vec_of = |d: usize| -> Vec<f64> { (0..d).map(|_| unit(&mut rng) * 2.0 - 1.0).collect() };
    let train: Vec<AlignedFace> = (0..30).map(|_| AlignedFace::from_vector(vec_of(200))).collect();
    let model = EigenModel::train(&train, ComponentPolicy::Energy(0.95)).map_err(|e| e.to_string())?;
    let probes: Vec<Vec<f64>> = (0..10).map(|_| vec_of(200)).collect();
    let gallery: Vec<Vec<f64>> = (0..10).map(|_| vec_of(200)).collect();

    let basis = model.basis();
    let mut ortho: f64 = 0.0;
    for i in 0..basis.len() {
        for j in 0..basis.len() {
            let d: f64 = basis[i].iter().zip(&basis[j]).map(|(a, b)| a * b).sum();
            ortho = ortho.max((d - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    check(ortho <= 1e-6, || format!("basis orthonormality error {ortho:e}"))?;

    let faces: Vec<AlignedFace> = probes.iter().chain(&gallery).cloned().map(AlignedFace::from_vector).collect();
    let mut self_err: f64 = 0.0;
    for a in &faces {
        let s = model.similarity(a, a).map_err(|e| e.to_string())?;
        self_err = self_err.max((s - 1.0).abs());
        for b in &faces {
            let ab = model.similarity(a, b).map_err(|e| e.to_string())?;
            let ba = model.similarity(b, a).map_err(|e| e.to_string())?;
            check(ab.to_bits() == ba.to_bits(), || format!("asymmetric similarity {ab} vs {ba}"))?;
        }
    }
    check(self_err <= 1e-9, || format!("self-similarity error {self_err:e}"))?;

    let tag = |p: &str, rows: &[Vec<f64>]| -> Vec<(String, AlignedFace)> {
        rows.iter()
            .enumerate()
            .map(|(i, r)| (format!("{p}{i}"), AlignedFace::from_vector(r.clone())))
            .collect()
    };
    let matrix = model.score_matrix(&tag("p", &probes), &tag("g", &gallery)).map_err(|e| e.to_string())?;
    let coeffs = |v: &[f64]| -> Vec<f64> {
        basis
            .iter()
            .map(|b| b.iter().zip(v).zip(model.mean()).map(|((x, y), m)| x * (y - m)).sum())
            .collect()
    };
    let mut worst: f64 = 0.0;
    for (i, row) in matrix.rows().iter().enumerate() {
        for (j, s) in row.iter().enumerate() {
            worst = worst.max((s - direct_cosine(&coeffs(&probes[i]), &coeffs(&gallery[j]))).abs());
        }
    }
    check(worst <= 1e-9, || format!("score matrix error {worst:e}"))?;
    Ok(format!("{} components, orthonormality {ortho:.1e}, score error {worst:.1e}", model.components()))
}

fn end_to_end_falloff() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    synth_dataset(dir.path(), 40, 120);
    let mut cfg = e2_config(&dir.path().join("manifest.csv"));
    cfg.jobs = 1;
    let report = run_e2(&cfg).map_err(|e| e.to_string())?;
    check(report.subjects.len() >= 40, || format!("only {} subjects", report.subjects.len()))?;
    let base = report.baseline_r;
    let blur = report.r(&QualityCondition::motion_blur(31).unwrap()).ok_or("blur 31 missing")?;
    let noise = report.r(&QualityCondition::gaussian_noise(0.3).unwrap()).ok_or("noise 0.3 missing")?;
    check(base > blur && base > noise, || format!("baseline {base}, blur31 {blur}, noise0.3 {noise}"))?;
    check(blur < 0.7 * base && noise < 0.7 * base, || {
        format!("heaviest not below 0.7 x baseline: {blur}, {noise} vs {base}")
    })?;
    Ok(format!("r baseline {base:.3}, blur 31 {blur:.3}, noise 0.3 {noise:.3}"))
}

fn determinism_across_workers() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = dir.path().join("data");
    let probe = synth_dataset(&data, 40, 120);
    let manifest = data.join("manifest.csv");
    let mut runs = Vec::new();
    for jobs in [1, 4] {
        let mut e1 = e1_config(&manifest, &probe);
        let mut e2 = e2_config(&manifest);
        e1.jobs = jobs;
        e2.jobs = jobs;
        let report = RunReport {
            gallery: Some(run_e1(&e1).map_err(|e| e.to_string())?),
            stability: Some(run_e2(&e2).map_err(|e| e.to_string())?),
            configs: vec![e1, e2],
        };
        let out = dir.path().join(format!("jobs{jobs}"));
        let files = emit_report(&report, &out).map_err(|e| e.to_string())?;
        let csvs: Vec<(String, Vec<u8>)> = files
            .iter()
            .filter(|f| f.extension().is_some_and(|x| x == "csv"))
            .map(|f| (f.file_name().unwrap().to_string_lossy().into_owned(), fs::read(f).unwrap()))
            .collect();
        runs.push(csvs);
    }
    check(runs[0].len() == 3, || format!("expected 3 CSVs, got {}", runs[0].len()))?;
    check(runs[0] == runs[1], || "CSV bytes differ between 1 and 4 workers".into())?;
    let names: Vec<&str> = runs[0].iter().map(|(n, _)| n.as_str()).collect();
    Ok(format!("{} identical for 1 vs 4 workers", names.join(", ")))
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Option<Duration>,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion {
            id: 1,
            name: "uniqueness unit suite",
            budget: Some(Duration::from_secs(1)),
            run: uniqueness_suite,
        },
        Criterion {
            id: 2,
            name: "statistics oracle suite",
            budget: Some(Duration::from_secs(10)),
            run: statistics_suite,
        },
        Criterion {
            id: 3,
            name: "reference blur row normalization",
            budget: None,
            run: falloff_replay,
        },
        Criterion {
            id: 4,
            name: "degradation suite",
            budget: Some(Duration::from_secs(30)),
            run: degradation_suite,
        },
        Criterion {
            id: 5,
            name: "matcher suite",
            budget: Some(Duration::from_secs(30)),
            run: matcher_suite,
        },
        Criterion {
            id: 6,
            name: "end-to-end cross-session fall-off",
            budget: Some(Duration::from_secs(300)),
            run: end_to_end_falloff,
        },
        Criterion {
            id: 7,
            name: "determinism across worker counts",
            budget: None,
            run: determinism_across_workers,
        },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let outcome = match (outcome, c.budget) {
            (Ok(_), Some(b)) if elapsed > b => Err(format!("took {elapsed:.2?}, budget {b:?}")),
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => println!("PASS criterion {}: {} ({detail}; {elapsed:.2?})", c.id, c.name),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {}: {} ({why}; {elapsed:.2?})", c.id, c.name);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
