//! Independent reference implementations used as test oracles. They favour
//! obviousness over speed and share no code with the library.

#![allow(dead_code, clippy::needless_range_loop)]

use std::path::Path;

use menagerie_core::pipeline::{Experiment, ExperimentConfig};
use menagerie_core::synth::{generate, ProbeAsset, SynthConfig};

/// Type-7 quantile found by walking the piecewise-linear curve through the
/// points `(i / (n - 1), x_i)`.
pub fn quantile_by_segments(values: &[f64], p: f64) -> f64 {
    let mut x = values.to_vec();
    x.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = x.len();
    if n == 1 {
        return x[0];
    }
    let step = 1.0 / (n - 1) as f64;
    for i in 0..n - 1 {
        let (a, b) = (i as f64 * step, (i + 1) as f64 * step);
        if p <= b + 1e-15 || i == n - 2 {
            let t = ((p - a) / (b - a)).clamp(0.0, 1.0);
            return x[i] * (1.0 - t) + x[i + 1] * t;
        }
    }
    unreachable!()
}

pub struct BruteBox {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub lower_whisker: f64,
    pub upper_whisker: f64,
    pub outliers: Vec<f64>,
}

pub fn brute_boxplot(values: &[f64]) -> BruteBox {
    let q1 = quantile_by_segments(values, 0.25);
    let median = quantile_by_segments(values, 0.5);
    let q3 = quantile_by_segments(values, 0.75);
    let iqr = q3 - q1;
    let (lo, hi) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let mut lower_whisker = f64::INFINITY;
    let mut upper_whisker = f64::NEG_INFINITY;
    for &v in values {
        if v >= lo && v < lower_whisker {
            lower_whisker = v;
        }
        if v <= hi && v > upper_whisker {
            upper_whisker = v;
        }
    }
    let outliers = values.iter().copied().filter(|&v| v < lo || v > hi).collect();
    BruteBox {
        q1,
        median,
        q3,
        lower_whisker,
        upper_whisker,
        outliers,
    }
}

/// Pearson correlation from all pairwise differences:
/// `sum_{i<j} dx dy / sqrt(sum dx^2 sum dy^2)`.
pub fn pairwise_pearson(x: &[f64], y: &[f64]) -> f64 {
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            sxy += dx * dy;
            sxx += dx * dx;
            syy += dy * dy;
        }
    }
    sxy / (sxx * syy).sqrt()
}

/// Uniqueness straight from its definition, with every quantity recomputed
/// by a separate pass.
pub fn brute_ium(scores: &[f64]) -> f64 {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = scores.iter().cloned().fold(f64::INFINITY, f64::min);
    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    (max - mean) / (max - min)
}

/// Cyclic Jacobi eigensolver for a small symmetric matrix. Returns
/// eigenvalues in descending order with matching unit eigenvectors.
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j][j].partial_cmp(&m[i][i]).unwrap());
    let values = order.iter().map(|&i| m[i][i]).collect();
    let vectors = order
        .iter()
        .map(|&i| (0..n).map(|k| v[k][i]).collect())
        .collect();
    (values, vectors)
}

/// Sample covariance (divisor `n - 1`) of row vectors.
pub fn covariance(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len();
    let d = rows[0].len();
    let mean: Vec<f64> = (0..d)
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect();
    (0..d)
        .map(|a| {
            (0..d)
                .map(|b| {
                    rows.iter()
                        .map(|r| (r[a] - mean[a]) * (r[b] - mean[b]))
                        .sum::<f64>()
                        / (n - 1) as f64
                })
                .collect()
        })
        .collect()
}

/// Orthogonal projector `sum_i b_i b_i^T` onto the span of orthonormal rows.
pub fn projector(basis: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = basis[0].len();
    (0..d)
        .map(|i| (0..d).map(|j| basis.iter().map(|b| b[i] * b[j]).sum()).collect())
        .collect()
}

pub fn max_matrix_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max)
}

pub fn direct_cosine(a: &[f64], b: &[f64]) -> f64 {
    let ab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let aa: f64 = a.iter().map(|x| x * x).sum();
    let bb: f64 = b.iter().map(|x| x * x).sum();
    ab / (aa.sqrt() * bb.sqrt())
}

/// Desk-scale synthetic dataset with the default shape.
pub fn synth_dataset(dir: &Path, subjects: usize, external: usize) -> ProbeAsset {
    let cfg = SynthConfig {
        subjects,
        external_subjects: external,
        ..SynthConfig::default()
    };
    generate(dir, &cfg).unwrap().1
}

pub fn e2_config(manifest: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(Experiment::SessionStability, manifest);
    cfg.blur_lengths = vec![5, 9, 17, 31];
    cfg.noise_variances = vec![0.03, 0.07, 0.1, 0.3];
    cfg.reference_session = "03".into();
    cfg.varied_session = "04".into();
    cfg.pool_sessions = vec!["ext".into()];
    cfg.master_seed = 7;
    cfg
}

pub fn e1_config(manifest: &Path, probe: &ProbeAsset) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(Experiment::GalleryQuality, manifest);
    cfg.blur_lengths = vec![5, 31];
    cfg.noise_variances = vec![0.03, 0.3];
    cfg.probe_image = Some(probe.path.clone());
    cfg.probe_eyes = Some((probe.left_eye, probe.right_eye));
    cfg.master_seed = 7;
    cfg
}

/// FNV-1a over every file under `dir`, visited in sorted path order.
pub fn tree_checksum(dir: &Path) -> u64 {
    fn walk(dir: &Path, out: &mut Vec<std::path::PathBuf>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(&p, out);
            } else {
                out.push(p);
            }
        }
    }
    let mut files = Vec::new();
    walk(dir, &mut files);
    files.sort();
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for f in files {
        for b in f.to_string_lossy().bytes().chain(std::fs::read(&f).unwrap()) {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}
