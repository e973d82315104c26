use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::symlin::{Mat, SpdMatrix, SymMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_mat(rng: &mut impl Rng, rows: usize, cols: usize) -> Mat<f64> {
    Mat::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

pub fn random_sym(rng: &mut impl Rng, n: usize) -> SymMatrix<f64> {
    SymMatrix::from_upper(n, |_, _| rng.random_range(-1.0..1.0))
}

/// Modified Gram-Schmidt on a random square matrix.
pub fn random_orthogonal(rng: &mut impl Rng, n: usize) -> Mat<f64> {
    let a = random_mat(rng, n, n);
    let mut q = Mat::zeros(n, n);
    for j in 0..n {
        let mut v = a.col(j);
        for k in 0..j {
            let qk = q.col(k);
            let p: f64 = v.iter().zip(&qk).map(|(a, b)| a * b).sum();
            for (x, y) in v.iter_mut().zip(&qk) {
                *x -= p * y;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in v.iter_mut() {
            *x /= norm;
        }
        q.set_col(j, &v);
    }
    q
}

/// `Q diag(λ) Qᵀ` with eigenvalues drawn log-uniformly from `[lo, hi]`.
pub fn random_spd(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> SpdMatrix<f64> {
    let q = random_orthogonal(rng, n);
    let lambdas: Vec<f64> = (0..n)
        .map(|_| (rng.random_range(lo.ln()..hi.ln())).exp())
        .collect();
    let s = SymMatrix::from_diag(&lambdas).congruence(&q);
    SpdMatrix::new(s).expect("well-conditioned random SPD")
}
