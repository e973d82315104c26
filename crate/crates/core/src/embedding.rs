//! Gaussian → SPD embedding and the Log-Euclidean vector representation.
//!
//! A Gaussian `N(μ, Σ)` is identified with the `(k+1)×(k+1)` SPD matrix
//!
//! ```text
//! S(β, ρ) = | Σ^ρ + β²μμᵀ   βμ |
//!           | βμᵀ            1  |
//! ```
//!
//! where `Σ^ρ` is the eigenvalue power of the covariance. `G = log S` lives in
//! a flat space of symmetric matrices; its half-vectorization `f` turns the
//! Frobenius distance between two `G`s into a plain Euclidean distance.

use crate::error::{Error, Result};
use crate::gaussian::GaussianModel;
use crate::scalar::Real;
use crate::symlin::{half_vectorize, spd_log, spd_power, SpdMatrix, SymMatrix};

pub const DEFAULT_BETA: f64 = 0.4;
pub const DEFAULT_RHO: f64 = 0.5;

/// Mean/covariance balance `β ≥ 0` and eigenvalue power `ρ ∈ (0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmbeddingParams<T> {
    beta: T,
    rho: T,
}

impl<T: Real> EmbeddingParams<T> {
    pub fn new(beta: T, rho: T) -> Result<Self> {
        if !(beta >= T::zero()) || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!("beta {beta} must be finite and non-negative")));
        }
        if !(rho > T::zero() && rho <= T::one()) {
            return Err(Error::InvalidRho(rho.as_f64()));
        }
        Ok(Self { beta, rho })
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn rho(&self) -> T {
        self.rho
    }
}

impl<T: Real> Default for EmbeddingParams<T> {
    fn default() -> Self {
        Self {
            beta: T::lit(DEFAULT_BETA),
            rho: T::lit(DEFAULT_RHO),
        }
    }
}

/// An embedded Gaussian: `s = S(β, ρ)`, `g = log s`, `f = half_vectorize(g)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddedGaussian<T> {
    pub s: SpdMatrix<T>,
    pub g: SymMatrix<T>,
    pub f: Vec<T>,
    pub params: EmbeddingParams<T>,
}

impl<T: Real> EmbeddedGaussian<T> {
    /// Size of `s`, i.e. `k + 1`.
    pub fn dim(&self) -> usize {
        self.s.dim()
    }
}

/// Assembles `S(β, ρ)` directly; `NotPositiveDefinite` signals numerical
/// corruption of the input.
pub fn embedding_matrix<T: Real>(gm: &GaussianModel<T>, p: &EmbeddingParams<T>) -> Result<SpdMatrix<T>> {
    let k = gm.dim();
    let powered = spd_power(gm.cov(), p.rho)?;
    let bm: Vec<T> = gm.mean().iter().map(|&m| p.beta * m).collect();
    let s = SymMatrix::from_upper(k + 1, |i, j| match (i < k, j < k) {
        (true, true) => powered.get(i, j) + bm[i] * bm[j],
        (true, false) => bm[i],
        _ => T::one(),
    });
    SpdMatrix::new(s)
}

pub fn embed<T: Real>(gm: &GaussianModel<T>, p: &EmbeddingParams<T>) -> Result<EmbeddedGaussian<T>> {
    let s = embedding_matrix(gm, p)?;
    let g = spd_log(&s)?;
    let f = half_vectorize(&g);
    Ok(EmbeddedGaussian {
        s,
        g,
        f,
        params: *p,
    })
}

/// Log-Euclidean distance `‖G_a − G_b‖_F`, computed as `‖f_a − f_b‖₂`.
pub fn gauss_distance<T: Real>(a: &EmbeddedGaussian<T>, b: &EmbeddedGaussian<T>) -> Result<T> {
    if a.dim() != b.dim() || a.params != b.params {
        return Err(Error::ParamMismatch);
    }
    Ok(a.f
        .iter()
        .zip(&b.f)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<T>()
        .sqrt())
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::Rng;

    use super::*;
    use crate::symlin::{cholesky_lower, rel_frobenius_error, Mat};
    use crate::testutil::{random_orthogonal, random_spd, rng};

    fn gaussian(mean: &[f64], cov: SpdMatrix<f64>) -> GaussianModel<f64> {
        GaussianModel::new(mean.to_vec(), cov).unwrap()
    }

    fn random_gaussian(r: &mut impl Rng, k: usize) -> GaussianModel<f64> {
        let mean: Vec<f64> = (0..k).map(|_| r.random_range(-2.0..2.0)).collect();
        gaussian(&mean, random_spd(r, k, 1e-2, 10.0))
    }

    fn params(beta: f64, rho: f64) -> EmbeddingParams<f64> {
        EmbeddingParams::new(beta, rho).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(EmbeddingParams::new(-0.1, 0.5).is_err());
        assert!(matches!(EmbeddingParams::new(0.4, 0.0), Err(Error::InvalidRho(_))));
        assert!(matches!(EmbeddingParams::new(0.4, 1.2), Err(Error::InvalidRho(_))));
        let d = EmbeddingParams::<f64>::default();
        assert_eq!((d.beta(), d.rho()), (0.4, 0.5));
    }

    #[test]
    fn standard_normal_embeds_to_identity() {
        let gm = gaussian(&[0.0, 0.0, 0.0], SpdMatrix::identity(3));
        for (b, r) in [(0.0, 1.0), (0.4, 0.5), (3.0, 0.1)] {
            let e = embed(&gm, &params(b, r)).unwrap();
            assert_eq!(e.s.as_mat(), &Mat::identity(4));
            assert!(e.g.as_mat().max_abs() < 1e-15);
            assert!(e.f.iter().all(|v| v.abs() < 1e-15));
            assert_eq!(e.f.len(), 10);
        }
    }

    #[test]
    fn beta_zero_is_block_diagonal_powered_covariance() {
        let mut r = rng(1);
        let gm = random_gaussian(&mut r, 4);
        let s = embedding_matrix(&gm, &params(0.0, 0.5)).unwrap();
        let powered = spd_power(gm.cov(), 0.5).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let want = if i < 4 && j < 4 {
                    powered.get(i, j)
                } else if i == 4 && j == 4 {
                    1.0
                } else {
                    0.0
                };
                assert_eq!(s.get(i, j), want);
            }
        }
    }

    #[test]
    fn scalar_substitution() {
        // μ = 1, Σ = 1, β = ρ = 1: [[1 + 1, 1], [1, 1]], det = 1
        let gm = gaussian(&[1.0], SpdMatrix::identity(1));
        let s = embedding_matrix(&gm, &params(1.0, 1.0)).unwrap();
        assert_eq!(s.as_mat(), &Mat::from_rows(&[[2.0, 1.0], [1.0, 1.0]]));
    }

    #[test]
    fn bottom_right_entry_is_one() {
        let mut r = rng(2);
        let gm = random_gaussian(&mut r, 6);
        let e = embed(&gm, &params(0.7, 0.3)).unwrap();
        assert_eq!(e.s.get(6, 6), 1.0);
    }

    #[test]
    fn matches_affine_cholesky_route() {
        // S = A·Aᵀ with A = [[chol(Σ^ρ), βμ], [0, 1]]
        let mut r = rng(3);
        for _ in 0..20 {
            let k = r.random_range(1..8);
            let gm = random_gaussian(&mut r, k);
            let p = params(r.random_range(0.0..2.0), r.random_range(0.1..1.0));
            let chol = cholesky_lower(&spd_power(gm.cov(), p.rho()).unwrap()).unwrap();
            let a = Mat::from_fn(k + 1, k + 1, |i, j| match (i < k, j < k) {
                (true, true) => chol[(i, j)],
                (true, false) => p.beta() * gm.mean()[i],
                (false, true) => 0.0,
                (false, false) => 1.0,
            });
            let aat = a.matmul(&a.transpose());
            let s = embedding_matrix(&gm, &p).unwrap();
            assert!(rel_frobenius_error(s.as_mat(), &aat) < 1e-12);
        }
    }

    #[test]
    fn distance_examples() {
        let p = params(0.0, 1.0);
        let a = embed(&gaussian(&[0.0, 0.0], SpdMatrix::identity(2)), &p).unwrap();
        let e = std::f64::consts::E;
        let b = embed(&gaussian(&[0.0, 0.0], SpdMatrix::from_diag(&[e, e]).unwrap()), &p).unwrap();
        assert_eq!(gauss_distance(&a, &a).unwrap(), 0.0);
        // G differs by diag(1, 1, 0)
        assert!((gauss_distance(&a, &b).unwrap() - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn distance_rejects_mismatch() {
        let gm = gaussian(&[0.0], SpdMatrix::identity(1));
        let a = embed(&gm, &params(0.4, 0.5)).unwrap();
        let b = embed(&gm, &params(0.5, 0.5)).unwrap();
        assert!(matches!(gauss_distance(&a, &b), Err(Error::ParamMismatch)));
        let c = embed(&gaussian(&[0.0, 0.0], SpdMatrix::identity(2)), &params(0.4, 0.5)).unwrap();
        assert!(matches!(gauss_distance(&a, &c), Err(Error::ParamMismatch)));
    }

    #[test]
    fn beta_changes_off_diagonal_block() {
        let mut r = rng(4);
        let gm = random_gaussian(&mut r, 3);
        let s1 = embedding_matrix(&gm, &params(0.2, 0.5)).unwrap();
        let s2 = embedding_matrix(&gm, &params(0.9, 0.5)).unwrap();
        assert_ne!(s1, s2);
        for i in 0..3 {
            assert!((s1.get(i, 3) - 0.2 * gm.mean()[i]).abs() < 1e-15);
            assert!((s2.get(i, 3) - 0.9 * gm.mean()[i]).abs() < 1e-15);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn vector_distance_equals_frobenius(seed in any::<u64>(), k in 1usize..10) {
            let mut r = rng(seed);
            let p = params(0.4, 0.5);
            let a = embed(&random_gaussian(&mut r, k), &p).unwrap();
            let b = embed(&random_gaussian(&mut r, k), &p).unwrap();
            let d = gauss_distance(&a, &b).unwrap();
            let dm = a.g.sub(&b.g).frobenius_norm();
            prop_assert!((d - dm).abs() <= 1e-12 * dm.max(1.0));
        }

        #[test]
        fn metric_axioms(seed in any::<u64>(), k in 1usize..8) {
            let mut r = rng(seed);
            let p = params(0.4, 0.5);
            let e: Vec<_> = (0..3).map(|_| embed(&random_gaussian(&mut r, k), &p).unwrap()).collect();
            let d = |i: usize, j: usize| gauss_distance(&e[i], &e[j]).unwrap();
            prop_assert_eq!(d(0, 1), d(1, 0));
            prop_assert!(d(0, 2) <= d(0, 1) + d(1, 2) + 1e-12);
        }

        #[test]
        fn unmodified_embedding_at_unit_parameters(seed in any::<u64>(), k in 1usize..8) {
            let mut r = rng(seed);
            let gm = random_gaussian(&mut r, k);
            let s = embedding_matrix(&gm, &params(1.0, 1.0)).unwrap();
            let m = gm.mean();
            for i in 0..=k {
                for j in 0..=k {
                    let want = match (i < k, j < k) {
                        (true, true) => gm.cov().get(i, j) + m[i] * m[j],
                        (true, false) => m[i],
                        (false, true) => m[j],
                        (false, false) => 1.0,
                    };
                    prop_assert!((s.get(i, j) - want).abs() <= 1e-12);
                }
            }
        }

        #[test]
        fn rotation_invariance(seed in any::<u64>(), k in 1usize..8) {
            let mut r = rng(seed);
            let p = params(0.4, 0.5);
            let a = random_gaussian(&mut r, k);
            let b = random_gaussian(&mut r, k);
            let q = random_orthogonal(&mut r, k);
            let rotate = |g: &GaussianModel<f64>| {
                gaussian(&q.mul_vec(g.mean()), SpdMatrix::new(g.cov().as_sym().congruence(&q)).unwrap())
            };
            let d0 = gauss_distance(&embed(&a, &p).unwrap(), &embed(&b, &p).unwrap()).unwrap();
            let d1 = gauss_distance(&embed(&rotate(&a), &p).unwrap(), &embed(&rotate(&b), &p).unwrap()).unwrap();
            prop_assert!((d0 - d1).abs() <= 1e-10 * d0.max(1.0));
        }
    }
}
