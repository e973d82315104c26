//! Maximum-likelihood Gaussian over a descriptor set.

use crate::descriptors::DescriptorSet;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::symlin::{half_len, Mat, SpdMatrix, SymMatrix};

/// Diagonal regularizer added to every fitted covariance.
pub const DEFAULT_EPSILON: f64 = 1e-3;

/// Rows summed sequentially before pairwise combination.
const PAIRWISE_BLOCK: usize = 32;

/// `N(μ, Σ)` with `Σ` strictly positive definite.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianModel<T> {
    mean: Vec<T>,
    cov: SpdMatrix<T>,
}

impl<T: Real> GaussianModel<T> {
    pub fn new(mean: Vec<T>, cov: SpdMatrix<T>) -> Result<Self> {
        if mean.len() != cov.dim() {
            return Err(Error::DimensionMismatch {
                expected: cov.dim(),
                got: mean.len(),
            });
        }
        if !mean.iter().all(|m| m.is_finite()) {
            return Err(Error::NonFinite("Gaussian mean"));
        }
        Ok(Self { mean, cov })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[T] {
        &self.mean
    }

    pub fn cov(&self) -> &SpdMatrix<T> {
        &self.cov
    }
}

/// Fits `μ = (1/N) Σ xᵢ` and `Σ = 1/(N−1) Σ (xᵢ − μ)(xᵢ − μ)ᵀ + εI`.
pub fn fit_gaussian<T: Real>(ds: &DescriptorSet<T>, epsilon: T) -> Result<GaussianModel<T>> {
    let idx: Vec<usize> = (0..ds.len()).collect();
    fit_gaussian_rows(ds.descriptors(), &idx, epsilon)
}

/// [`fit_gaussian`] restricted to the rows of `data` listed in `rows`.
pub fn fit_gaussian_rows<T: Real>(data: &Mat<T>, rows: &[usize], epsilon: T) -> Result<GaussianModel<T>> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::TooFewSamples(n));
    }
    if !(epsilon >= T::zero()) || !epsilon.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "covariance regularizer {epsilon} must be a finite non-negative number"
        )));
    }
    let k = data.cols();
    let nf = T::from_usize_lossy(n);
    let mean: Vec<T> = pairwise_sum(data, rows).into_iter().map(|s| s / nf).collect();

    let packed = pairwise_scatter(data, rows, &mean);
    let norm = T::one() / (nf - T::one());
    let mut it = packed.iter();
    let mut cov = Mat::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let v = *it.next().expect("packed scatter length") * norm;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
        cov[(i, i)] += epsilon;
    }
    let cov = SpdMatrix::new(SymMatrix::new(cov)?)?;
    GaussianModel::new(mean, cov)
}

fn pairwise_sum<T: Real>(data: &Mat<T>, rows: &[usize]) -> Vec<T> {
    if rows.len() <= PAIRWISE_BLOCK {
        let mut acc = vec![T::zero(); data.cols()];
        for &r in rows {
            for (a, &x) in acc.iter_mut().zip(data.row(r)) {
                *a += x;
            }
        }
        return acc;
    }
    let (lo, hi) = rows.split_at(rows.len() / 2);
    let mut a = pairwise_sum(data, lo);
    for (x, y) in a.iter_mut().zip(pairwise_sum(data, hi)) {
        *x += y;
    }
    a
}

/// Packed upper triangle of `Σ (xᵢ − μ)(xᵢ − μ)ᵀ`.
fn pairwise_scatter<T: Real>(data: &Mat<T>, rows: &[usize], mean: &[T]) -> Vec<T> {
    let k = data.cols();
    if rows.len() <= PAIRWISE_BLOCK {
        let mut acc = vec![T::zero(); half_len(k)];
        let mut centered = vec![T::zero(); k];
        for &r in rows {
            for ((c, &x), &m) in centered.iter_mut().zip(data.row(r)).zip(mean) {
                *c = x - m;
            }
            let mut off = 0;
            for i in 0..k {
                let ci = centered[i];
                let tail = &centered[i..];
                for (a, &cj) in acc[off..off + tail.len()].iter_mut().zip(tail) {
                    *a += ci * cj;
                }
                off += tail.len();
            }
        }
        return acc;
    }
    let (lo, hi) = rows.split_at(rows.len() / 2);
    let mut a = pairwise_scatter(data, lo, mean);
    for (x, y) in a.iter_mut().zip(pairwise_scatter(data, hi, mean)) {
        *x += y;
    }
    a
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::Rng;

    use super::*;
    use crate::symlin::sym_eig;
    use crate::testutil::rng;

    fn set(rows: &[&[f64]]) -> DescriptorSet<f64> {
        let n = rows.len();
        DescriptorSet::new(Mat::from_rows(rows), vec![[0.0, 0.0]; n], vec![1.0; n]).unwrap()
    }

    fn random_set(seed: u64, n: usize, k: usize) -> DescriptorSet<f64> {
        let mut r = rng(seed);
        let data = Mat::from_fn(n, k, |_, j| r.random_range(-1.0..1.0) * (j + 1) as f64 + j as f64);
        DescriptorSet::new(data, vec![[0.0, 0.0]; n], vec![1.0; n]).unwrap()
    }

    #[test]
    fn square_corners() {
        let g = fit_gaussian(&set(&[&[0.0, 0.0], &[2.0, 0.0], &[0.0, 2.0], &[2.0, 2.0]]), 1e-3).unwrap();
        assert_eq!(g.mean(), &[1.0, 1.0]);
        // Σ (x − 1)² = 4 over N − 1 = 3
        let v = 4.0 / 3.0 + 1e-3;
        assert!((g.cov().get(0, 0) - v).abs() < 1e-15);
        assert!((g.cov().get(1, 1) - v).abs() < 1e-15);
        assert_eq!(g.cov().get(0, 1), 0.0);
    }

    #[test]
    fn identical_points_only_regularizer() {
        let g = fit_gaussian(&set(&[&[5.0], &[5.0]]), 1e-3).unwrap();
        assert_eq!(g.mean(), &[5.0]);
        assert_eq!(g.cov().get(0, 0), 1e-3);
    }

    #[test]
    fn too_few_samples() {
        let data = Mat::from_rows(&[[1.0, 2.0]]);
        assert!(matches!(fit_gaussian_rows(&data, &[0], 1e-3), Err(Error::TooFewSamples(1))));
        assert!(matches!(fit_gaussian_rows(&data, &[], 1e-3), Err(Error::TooFewSamples(0))));
    }

    #[test]
    fn negative_epsilon_rejected() {
        let ds = random_set(1, 10, 2);
        assert!(fit_gaussian(&ds, -1e-3).is_err());
    }

    #[test]
    fn degenerate_without_regularizer_is_not_spd() {
        let ds = set(&[&[1.0, 1.0], &[2.0, 2.0], &[3.0, 3.0]]);
        assert!(matches!(fit_gaussian(&ds, 0.0), Err(Error::NotPositiveDefinite { .. })));
        assert!(fit_gaussian(&ds, 1e-3).is_ok());
    }

    #[test]
    fn matches_textbook_two_pass_on_large_sets() {
        let ds = random_set(2, 1000, 5);
        let g = fit_gaussian(&ds, 0.0).unwrap();
        let n = ds.len() as f64;
        for j in 0..5 {
            let m: f64 = (0..ds.len()).map(|i| ds.descriptor(i)[j]).sum::<f64>() / n;
            assert!((g.mean()[j] - m).abs() < 1e-12);
            for l in 0..5 {
                let ml: f64 = (0..ds.len()).map(|i| ds.descriptor(i)[l]).sum::<f64>() / n;
                let c: f64 = (0..ds.len())
                    .map(|i| (ds.descriptor(i)[j] - m) * (ds.descriptor(i)[l] - ml))
                    .sum::<f64>()
                    / (n - 1.0);
                assert!((g.cov().get(j, l) - c).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn minimum_eigenvalue_at_least_epsilon() {
        let ds = random_set(3, 6, 10);
        let g = fit_gaussian(&ds, 1e-3).unwrap();
        let e = sym_eig(g.cov().as_sym()).unwrap();
        assert!(*e.values.last().unwrap() >= 1e-3 - 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn scale_equivariance(seed in any::<u64>(), a in -5.0f64..5.0) {
            prop_assume!(a.abs() > 1e-3);
            let ds = random_set(seed, 200, 4);
            let scaled = DescriptorSet::new(
                ds.descriptors().scaled(a),
                ds.positions().to_vec(),
                ds.scales().to_vec(),
            ).unwrap();
            let g = fit_gaussian(&ds, 0.0).unwrap();
            let gs = fit_gaussian(&scaled, 0.0).unwrap();
            for (x, y) in g.mean().iter().zip(gs.mean()) {
                prop_assert!((a * x - y).abs() < 1e-10 * (1.0 + y.abs()));
            }
            for i in 0..4 {
                for j in 0..4 {
                    let want = a * a * g.cov().get(i, j);
                    prop_assert!((want - gs.cov().get(i, j)).abs() < 1e-10 * (1.0 + want.abs()));
                }
            }
        }

        #[test]
        fn permutation_invariance(seed in any::<u64>()) {
            let ds = random_set(seed, 300, 6);
            let mut order: Vec<usize> = (0..ds.len()).collect();
            order.shuffle(&mut rng(seed ^ 0x5eed));
            let a = fit_gaussian(&ds, 1e-3).unwrap();
            let b = fit_gaussian_rows(ds.descriptors(), &order, 1e-3).unwrap();
            for (x, y) in a.mean().iter().zip(b.mean()) {
                prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
            }
            for (x, y) in a.cov().as_mat().as_slice().iter().zip(b.cov().as_mat().as_slice()) {
                prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
            }
        }
    }
}
