//! Low-rank projection learned jointly with one-vs-all linear SVMs.
//!
//! Training alternates two steps from a PCA start:
//!
//! 1. with the block projection `L̂` fixed, solve every class's SVM dual on
//!    the projected features `L̂ᵀF`;
//! 2. with the duals fixed, replace each block `L_b` by the top-`r`
//!    eigenvectors of `F_bᵀ(Σ_m Y_m α_m α_mᵀ Y_m)F_b`.
//!
//! `H = L̂L̂ᵀ` is never formed.

mod projection;
mod svm;

pub use projection::{pca_init, trace_max_step, trace_objective, BlockProjection, ClassDuals, ORTHONORMAL_TOL};
pub use svm::{
    check_binary_labels, hinge_losses, linear_gram, primal_weights, solve_dual_gram, svm_solve_dual, BinarySvm,
    SmoParams, DEFAULT_SVM_TOL,
};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spm::SpmFeature;
use crate::symlin::{dot, Mat};

/// Box parameter used when none is given.
pub const DEFAULT_C: f64 = 10.0;
/// Alternation cap.
pub const DEFAULT_MAX_ITERS: usize = 5;
/// Relative change of the summed dual objective that ends the alternation.
pub const DEFAULT_TOL: f64 = 1e-3;

/// Labeled block-structured features, one sample per row.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingSet<T> {
    features: Mat<T>,
    labels: Vec<usize>,
    class_count: usize,
    block_count: usize,
}

impl<T: Real> TrainingSet<T> {
    /// `labels` are 0-based class indices and must cover `0..M` densely.
    pub fn new(features: Mat<T>, labels: Vec<usize>, block_count: usize) -> Result<Self> {
        if labels.len() != features.rows() {
            return Err(Error::DimensionMismatch {
                expected: features.rows(),
                got: labels.len(),
            });
        }
        if features.rows() == 0 {
            return Err(Error::TooFewSamples(0));
        }
        if block_count == 0 || !features.cols().is_multiple_of(block_count) || features.cols() == 0 {
            return Err(Error::InvalidParameter(format!(
                "feature length {} is not a positive multiple of {block_count} blocks",
                features.cols()
            )));
        }
        if !features.is_finite() {
            return Err(Error::NonFinite("training features"));
        }
        let class_count = labels.iter().max().map_or(0, |&m| m + 1);
        let mut seen = vec![false; class_count];
        for &l in &labels {
            seen[l] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidLabels(format!("class {missing} has no samples")));
        }
        Ok(Self {
            features,
            labels,
            class_count,
            block_count,
        })
    }

    /// Stacks pyramid features into a training set.
    pub fn from_spm(features: &[SpmFeature<T>], labels: Vec<usize>) -> Result<Self> {
        let first = features.first().ok_or(Error::TooFewSamples(0))?;
        let (b, d) = (first.block_count(), first.block_dim());
        let mut data = Vec::with_capacity(features.len() * b * d);
        for f in features {
            if f.block_count() != b || f.block_dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: b * d,
                    got: f.concatenated().len(),
                });
            }
            data.extend_from_slice(f.concatenated());
        }
        Self::new(Mat::from_vec(features.len(), b * d, data)?, labels, b)
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn features(&self) -> &Mat<T> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn block_count(&self) -> usize {
        self.block_count
    }

    pub fn block_dim(&self) -> usize {
        self.features.cols() / self.block_count
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    /// Block `b` of sample `n`.
    pub fn block(&self, n: usize, b: usize) -> &[T] {
        let d = self.block_dim();
        &self.features.row(n)[b * d..(b + 1) * d]
    }

    /// `+1` for samples of class `m`, `−1` otherwise.
    pub fn one_vs_all(&self, m: usize) -> Vec<T> {
        self.labels
            .iter()
            .map(|&l| if l == m { T::one() } else { -T::one() })
            .collect()
    }
}

/// Training settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainParams<T> {
    pub rank: usize,
    pub c: T,
    pub max_iters: usize,
    pub tol: T,
    pub svm_tol: T,
}

impl<T: Real> TrainParams<T> {
    pub fn new(rank: usize, c: T) -> Self {
        Self {
            rank,
            c,
            max_iters: DEFAULT_MAX_ITERS,
            tol: T::lit(DEFAULT_TOL),
            svm_tol: T::lit(DEFAULT_SVM_TOL),
        }
    }
}

/// One point of the objective trajectory. The first record follows the
/// initial SVM solve and carries no trace values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord<T> {
    /// Summed dual objective over classes after the SVM step.
    pub dual_objective: T,
    /// Trace objective under the previous projection, duals fixed.
    pub trace_before: Option<T>,
    /// Trace objective under the updated projection, same duals.
    pub trace_after: Option<T>,
}

/// A trained classifier.
#[derive(Clone, Debug, PartialEq)]
pub struct LrsvmModel<T> {
    pub projection: BlockProjection<T>,
    pub classifiers: Vec<BinarySvm<T>>,
    pub c: T,
    pub trajectory: Vec<IterationRecord<T>>,
    /// Number of projection updates performed.
    pub iterations: usize,
    pub converged: bool,
}

fn svm_step<T: Real>(
    ts: &TrainingSet<T>,
    proj: &BlockProjection<T>,
    params: &TrainParams<T>,
    warm: Option<&[BinarySvm<T>]>,
) -> Result<Vec<BinarySvm<T>>> {
    let projected = proj.project_all(ts.features())?;
    let gram = linear_gram(&projected);
    let smo = SmoParams {
        c: params.c,
        tol: params.svm_tol,
        max_iters: None,
    };
    (0..ts.class_count())
        .map(|m| {
            let y = ts.one_vs_all(m);
            let start = warm.map(|w| w[m].alpha.as_slice());
            let (alpha, b, dual_objective, iterations) = solve_dual_gram(&gram, &y, &smo, start)?;
            let w = primal_weights(&projected, &y, &alpha);
            Ok(BinarySvm {
                alpha,
                w,
                b,
                dual_objective,
                iterations,
            })
        })
        .collect()
}

fn class_duals<T: Real>(ts: &TrainingSet<T>, svms: &[BinarySvm<T>]) -> Vec<ClassDuals<T>> {
    svms.iter()
        .enumerate()
        .map(|(m, s)| ClassDuals {
            y: ts.one_vs_all(m),
            alpha: s.alpha.clone(),
        })
        .collect()
}

fn summed<T: Real>(svms: &[BinarySvm<T>]) -> T {
    svms.iter().map(|s| s.dual_objective).sum()
}

/// Alternating optimization of projection and classifiers.
pub fn train<T: Real>(ts: &TrainingSet<T>, params: &TrainParams<T>) -> Result<LrsvmModel<T>> {
    if ts.class_count() < 2 {
        return Err(Error::InvalidLabels("training needs at least two classes".into()));
    }
    let mut projection = pca_init(ts, params.rank)?;
    let mut svms = svm_step(ts, &projection, params, None)?;
    let mut objective = summed(&svms);
    let mut trajectory = vec![IterationRecord {
        dual_objective: objective,
        trace_before: None,
        trace_after: None,
    }];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < params.max_iters {
        let duals = class_duals(ts, &svms);
        let before = trace_objective(ts, &duals, &projection)?;
        projection = trace_max_step(ts, &duals, params.rank)?;
        let after = trace_objective(ts, &duals, &projection)?;
        svms = svm_step(ts, &projection, params, Some(&svms))?;
        iterations += 1;
        let next = summed(&svms);
        trajectory.push(IterationRecord {
            dual_objective: next,
            trace_before: Some(before),
            trace_after: Some(after),
        });
        let change = (next - objective).abs() / objective.abs().max(T::min_positive_value());
        objective = next;
        if change < params.tol {
            converged = true;
            break;
        }
    }
    Ok(LrsvmModel {
        projection,
        classifiers: svms,
        c: params.c,
        trajectory,
        iterations,
        converged,
    })
}

/// Index of the largest score; the lowest index wins ties.
pub fn argmax<T: Real>(scores: &[T]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

impl<T: Real> LrsvmModel<T> {
    pub fn class_count(&self) -> usize {
        self.classifiers.len()
    }

    /// One-vs-all scores `w_mᵀ(L̂ᵀf) + b_m`.
    pub fn scores(&self, feature: &[T]) -> Result<Vec<T>> {
        let p = self.projection.project(feature)?;
        Ok(self.classifiers.iter().map(|s| s.decision(&p)).collect())
    }

    /// `(class, scores)` for one concatenated feature.
    pub fn predict(&self, feature: &[T]) -> Result<(usize, Vec<T>)> {
        let scores = self.scores(feature)?;
        Ok((argmax(&scores), scores))
    }

    pub fn predict_spm(&self, feature: &SpmFeature<T>) -> Result<(usize, Vec<T>)> {
        self.predict(feature.concatenated())
    }

    /// `L̂w_m` per class, so that `scores_m = (L̂w_m)ᵀf + b_m`.
    pub fn precomposed_weights(&self) -> Result<Vec<Vec<T>>> {
        self.classifiers.iter().map(|s| self.projection.unproject(&s.w)).collect()
    }

    /// Scores computed with [`precomposed_weights`](Self::precomposed_weights).
    pub fn precomposed_scores(&self, feature: &[T]) -> Result<Vec<T>> {
        if feature.len() != self.projection.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.projection.input_dim(),
                got: feature.len(),
            });
        }
        Ok(self
            .precomposed_weights()?
            .iter()
            .zip(&self.classifiers)
            .map(|(w, s)| dot(w, feature) + s.b)
            .collect())
    }

    /// Number of stored reals: `B·d·r + M·(B·r + 1)`.
    pub fn storage_len(&self) -> usize {
        let p = &self.projection;
        p.block_count() * p.block_dim() * p.rank() + self.class_count() * (p.output_dim() + 1)
    }
}
