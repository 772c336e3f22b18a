use nalgebra::{DMatrix, SymmetricEigen};

use super::{AlignedFace, MatchError, ScoreMatrix};

/// How many principal components to keep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ComponentPolicy {
    /// Exactly this many, clipped to the rank of the training set.
    Fixed(usize),
    /// The smallest count whose eigenvalues carry at least this fraction of
    /// the total variance.
    Energy(f64),
}

impl Default for ComponentPolicy {
    fn default() -> Self {
        Self::Energy(0.95)
    }
}

/// Eigenvalues below this fraction of the largest are treated as zero.
const RANK_TOL: f64 = 1e-10;

/// A PCA face subspace: mean face plus orthonormal basis, components in
/// descending eigenvalue order.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenModel {
    mean: Vec<f64>,
    basis: Vec<Vec<f64>>,
    eigenvalues: Vec<f64>,
}

/// Trains with a fixed component count.
pub fn train_eigenmodel(faces: &[AlignedFace], k: usize) -> Result<EigenModel, MatchError> {
    EigenModel::train(faces, ComponentPolicy::Fixed(k))
}

impl EigenModel {
    pub fn train(faces: &[AlignedFace], policy: ComponentPolicy) -> Result<Self, MatchError> {
        let n = faces.len();
        if n < 2 {
            return Err(MatchError::TooFewFaces(n));
        }
        let d = faces[0].len();
        for f in faces {
            if f.len() != d {
                return Err(MatchError::DimensionMismatch {
                    expected: d,
                    found: f.len(),
                });
            }
        }
        let mut mean = vec![0.0; d];
        for f in faces {
            for (m, v) in mean.iter_mut().zip(&f.vector) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);

        // rows are centred faces
        let centred = DMatrix::from_fn(n, d, |i, j| faces[i].vector[j] - mean[j]);

        let (eigenvalues, vectors) = if n <= d {
            // Gram trick: eigenvectors of X X^T lifted through X^T
            let gram = &centred * centred.transpose();
            let eig = SymmetricEigen::new(gram);
            let order = descending(eig.eigenvalues.as_slice());
            let mut vals = Vec::new();
            let mut vecs = Vec::new();
            for i in order {
                let lambda = eig.eigenvalues[i];
                let lifted = centred.transpose() * eig.eigenvectors.column(i);
                vals.push(lambda);
                vecs.push(lifted.as_slice().to_vec());
            }
            (vals, vecs)
        } else {
            let cov = centred.transpose() * &centred;
            let eig = SymmetricEigen::new(cov);
            let order = descending(eig.eigenvalues.as_slice());
            let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
            let vecs = order
                .iter()
                .map(|&i| eig.eigenvectors.column(i).as_slice().to_vec())
                .collect();
            (vals, vecs)
        };

        let top = eigenvalues.first().copied().unwrap_or(0.0);
        if top <= 0.0 {
            return Err(MatchError::DegenerateTraining);
        }
        let rank = eigenvalues
            .iter()
            .take_while(|&&l| l > top * RANK_TOL)
            .count()
            .min(n - 1)
            .min(d);
        let k = match policy {
            ComponentPolicy::Fixed(k) => k.max(1).min(rank),
            ComponentPolicy::Energy(fraction) => {
                let total: f64 = eigenvalues[..rank].iter().sum();
                let mut acc = 0.0;
                let mut k = rank;
                for (i, l) in eigenvalues[..rank].iter().enumerate() {
                    acc += l;
                    if acc >= fraction * total {
                        k = i + 1;
                        break;
                    }
                }
                k
            }
        };

        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
        for mut v in vectors.into_iter().take(k) {
            // re-orthogonalize against earlier components, then normalize
            for b in &basis {
                let proj = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= proj * y);
            }
            let norm = dot(&v, &v).sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
            // fix the sign so the largest-magnitude entry is positive
            let pivot = v
                .iter()
                .copied()
                .fold(0.0_f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
            if pivot < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            basis.push(v);
        }

        Ok(Self {
            mean,
            basis,
            eigenvalues: eigenvalues[..k].iter().map(|l| l / (n - 1) as f64).collect(),
        })
    }

    pub fn dimension(&self) -> usize {
        self.mean.len()
    }

    pub fn components(&self) -> usize {
        self.basis.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    /// Sample-covariance eigenvalues of the retained components.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Coefficients of `face - mean` in the retained basis.
    pub fn project(&self, face: &AlignedFace) -> Result<Vec<f64>, MatchError> {
        if face.len() != self.dimension() {
            return Err(MatchError::DimensionMismatch {
                expected: self.dimension(),
                found: face.len(),
            });
        }
        let centred: Vec<f64> = face
            .vector
            .iter()
            .zip(&self.mean)
            .map(|(v, m)| v - m)
            .collect();
        Ok(self.basis.iter().map(|b| dot(b, &centred)).collect())
    }

    /// Cosine similarity of the two faces' coefficient vectors.
    pub fn similarity(&self, a: &AlignedFace, b: &AlignedFace) -> Result<f64, MatchError> {
        cosine_similarity(&self.project(a)?, &self.project(b)?)
    }

    /// Scores every probe against every gallery face.
    pub fn score_matrix(
        &self,
        probes: &[(String, AlignedFace)],
        gallery: &[(String, AlignedFace)],
    ) -> Result<ScoreMatrix, MatchError> {
        let project_all = |faces: &[(String, AlignedFace)]| -> Result<Vec<Vec<f64>>, MatchError> {
            faces.iter().map(|(_, f)| self.project(f)).collect()
        };
        let p = project_all(probes)?;
        let g = project_all(gallery)?;
        let scores = p
            .iter()
            .map(|pc| g.iter().map(|gc| cosine_similarity(pc, gc)).collect())
            .collect::<Result<Vec<Vec<f64>>, _>>()?;
        ScoreMatrix::new(
            probes.iter().map(|(id, _)| id.clone()).collect(),
            gallery.iter().map(|(id, _)| id.clone()).collect(),
            scores,
        )
    }
}

fn descending(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| values[j].total_cmp(&values[i]).then(i.cmp(&j)));
    idx
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cosine of two coefficient vectors, clamped to `[-1, 1]`. Symmetric in its
/// arguments bit for bit.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64, MatchError> {
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na < 1e-12 || nb < 1e-12 {
        return Err(MatchError::ZeroProjection);
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}
