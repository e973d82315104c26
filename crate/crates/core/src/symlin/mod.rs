//! Symmetric and SPD linear algebra: factorizations, spectral functions and
//! the Frobenius-isometric half-vectorization.

mod eig;
mod mat;

pub use eig::JACOBI_MAX_SWEEPS;
pub use mat::{axpy, dot, norm2, rel_frobenius_error, Mat};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Eigenvalues below this fraction of the largest one are clamped before
/// `log`/`power` are applied.
pub const EIGEN_FLOOR_RATIO: f64 = 1e-12;

/// Dense symmetric matrix. Symmetry is exact: construction rejects any
/// asymmetric input and all derived matrices are filled from their upper
/// triangle.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix<T> {
    m: Mat<T>,
}

impl<T: Real> SymMatrix<T> {
    pub fn new(m: Mat<T>) -> Result<Self> {
        if !m.is_square() || m.rows() == 0 {
            return Err(Error::DimensionMismatch {
                expected: m.rows().max(1),
                got: m.cols(),
            });
        }
        if !m.is_finite() {
            return Err(Error::NonFinite("symmetric matrix"));
        }
        let n = m.rows();
        for i in 0..n {
            for j in i + 1..n {
                if m[(i, j)] != m[(j, i)] {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(Self { m })
    }

    /// Builds a symmetric matrix by evaluating `f(i, j)` on the upper triangle
    /// (`i <= j`) and mirroring.
    pub fn from_upper(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Self { m }
    }

    /// Symmetrizes `m` by copying its upper triangle over the lower one.
    pub fn from_upper_of(m: &Mat<T>) -> Self {
        assert!(m.is_square());
        Self::from_upper(m.rows(), |i, j| m[(i, j)])
    }

    pub fn zeros(n: usize) -> Self {
        Self { m: Mat::zeros(n, n) }
    }

    pub fn identity(n: usize) -> Self {
        Self { m: Mat::identity(n) }
    }

    pub fn from_diag(diag: &[T]) -> Self {
        Self {
            m: Mat::from_diag(diag),
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.m.rows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.m[(i, j)]
    }

    pub fn as_mat(&self) -> &Mat<T> {
        &self.m
    }

    pub fn into_mat(self) -> Mat<T> {
        self.m
    }

    pub fn frobenius_norm(&self) -> T {
        self.m.frobenius_norm()
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            m: self.m.sub(&other.m),
        }
    }

    /// `self + shift·I`
    pub fn add_diagonal(&self, shift: T) -> Self {
        let mut m = self.m.clone();
        for i in 0..self.dim() {
            m[(i, i)] += shift;
        }
        Self { m }
    }

    /// `Q · self · Qᵀ` for a square `q` of matching size.
    pub fn congruence(&self, q: &Mat<T>) -> Self {
        let tmp = q.matmul(&self.m);
        let full = tmp.matmul(&q.transpose());
        Self::from_upper_of(&full)
    }

    pub fn cast<U: Real>(&self) -> SymMatrix<U> {
        SymMatrix { m: self.m.cast() }
    }
}

/// Symmetric strictly positive definite matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SpdMatrix<T> {
    s: SymMatrix<T>,
}

impl<T: Real> SpdMatrix<T> {
    /// Checks positive definiteness with a Cholesky attempt.
    pub fn new(s: SymMatrix<T>) -> Result<Self> {
        cholesky_factor(s.as_mat())?;
        Ok(Self { s })
    }

    pub fn from_mat(m: Mat<T>) -> Result<Self> {
        Self::new(SymMatrix::new(m)?)
    }

    /// Caller guarantees positive definiteness (e.g. a spectral
    /// reconstruction from positive eigenvalues).
    pub(crate) fn new_unchecked(s: SymMatrix<T>) -> Self {
        Self { s }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            s: SymMatrix::identity(n),
        }
    }

    pub fn from_diag(diag: &[T]) -> Result<Self> {
        if let Some((i, &v)) = diag
            .iter()
            .enumerate()
            .find(|(_, &v)| !(v > T::zero()))
        {
            return Err(Error::NotPositiveDefinite {
                index: i,
                pivot: v.as_f64(),
            });
        }
        Ok(Self {
            s: SymMatrix::from_diag(diag),
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.s.dim()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.s.get(i, j)
    }

    pub fn as_sym(&self) -> &SymMatrix<T> {
        &self.s
    }

    pub fn as_mat(&self) -> &Mat<T> {
        self.s.as_mat()
    }

    pub fn into_sym(self) -> SymMatrix<T> {
        self.s
    }
}

/// `U · diag(λ) · Uᵀ` with orthonormal eigenvector columns and eigenvalues in
/// descending order.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralDecomposition<T> {
    /// Eigenvectors as columns.
    pub vectors: Mat<T>,
    /// Eigenvalues, descending.
    pub values: Vec<T>,
}

impl<T: Real> SpectralDecomposition<T> {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, i: usize) -> Vec<T> {
        self.vectors.col(i)
    }

    /// `U · diag(f(λ)) · Uᵀ`, filled from the upper triangle.
    pub fn map_values(&self, f: impl Fn(T) -> T) -> SymMatrix<T> {
        let n = self.dim();
        let mapped: Vec<T> = self.values.iter().map(|&l| f(l)).collect();
        // w = U·diag(f(λ)); entry (i, j) of the result is row_i(w)·row_j(U).
        let u = &self.vectors;
        let mut w = u.clone();
        for i in 0..n {
            for (x, &g) in w.row_mut(i).iter_mut().zip(&mapped) {
                *x *= g;
            }
        }
        SymMatrix::from_upper(n, |i, j| dot(w.row(i), u.row(j)))
    }

    pub fn reconstruct(&self) -> SymMatrix<T> {
        self.map_values(|l| l)
    }

    /// Eigenvalues with everything below `EIGEN_FLOOR_RATIO · λ_max` raised to
    /// that floor.
    fn floored_values(&self) -> Self {
        let lmax = self.values.first().copied().unwrap_or(T::zero());
        let floor = lmax * T::lit(EIGEN_FLOOR_RATIO);
        Self {
            vectors: self.vectors.clone(),
            values: self.values.iter().map(|&l| l.max(floor)).collect(),
        }
    }
}

fn cholesky_factor<T: Real>(a: &Mat<T>) -> Result<Mat<T>> {
    let n = a.rows();
    let mut l = Mat::zeros(n, n);
    for j in 0..n {
        let mut diag = a[(j, j)];
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if !(diag > T::zero()) || !diag.is_finite() {
            return Err(Error::NotPositiveDefinite {
                index: j,
                pivot: diag.as_f64(),
            });
        }
        let ljj = diag.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let s = a[(i, j)] - dot(&l.row(i)[..j], &l.row(j)[..j]);
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Lower-triangular `P` with `P·Pᵀ = Σ` and a strictly positive diagonal.
pub fn cholesky_lower<T: Real>(sigma: &SpdMatrix<T>) -> Result<Mat<T>> {
    cholesky_factor(sigma.as_mat())
}

/// Flips `v` so that its first component that is not roundoff-level is
/// positive.
pub fn canonical_sign<T: Real>(v: &mut [T]) {
    let scale = v.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
    let tiny = scale * T::epsilon() * T::lit(16.0);
    if v.iter().find(|x| x.abs() > tiny).is_some_and(|&x| x < T::zero()) {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

fn finish_decomposition<T: Real>(values: Vec<T>, rows: Mat<T>) -> SpectralDecomposition<T> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap_or(std::cmp::Ordering::Equal));
    let mut vectors = Mat::zeros(n, n);
    let mut sorted = Vec::with_capacity(n);
    for (col, &idx) in order.iter().enumerate() {
        sorted.push(values[idx]);
        let mut v = rows.row(idx).to_vec();
        canonical_sign(&mut v);
        vectors.set_col(col, &v);
    }
    SpectralDecomposition {
        vectors,
        values: sorted,
    }
}

/// Symmetric eigendecomposition, eigenvalues descending, each eigenvector's
/// first nonzero component positive.
pub fn sym_eig<T: Real>(s: &SymMatrix<T>) -> Result<SpectralDecomposition<T>> {
    let (values, rows) = eig::tridiagonal_ql(s.as_mat())?;
    Ok(finish_decomposition(values, rows))
}

/// Same contract as [`sym_eig`], computed with cyclic Jacobi rotations.
pub fn sym_eig_jacobi<T: Real>(s: &SymMatrix<T>) -> Result<SpectralDecomposition<T>> {
    let (values, rows) = eig::cyclic_jacobi(s.as_mat())?;
    Ok(finish_decomposition(values, rows))
}

/// Eigenvalue power `U·diag(λ^ρ)·Uᵀ` for `ρ ∈ (0, 1]`.
pub fn spd_power<T: Real>(s: &SpdMatrix<T>, rho: T) -> Result<SpdMatrix<T>> {
    if !(rho > T::zero() && rho <= T::one()) {
        return Err(Error::InvalidRho(rho.as_f64()));
    }
    if rho == T::one() {
        return Ok(s.clone());
    }
    let eig = sym_eig(s.as_sym())?.floored_values();
    Ok(SpdMatrix::new_unchecked(eig.map_values(|l| l.powf(rho))))
}

/// Principal matrix logarithm of an SPD matrix.
pub fn spd_log<T: Real>(s: &SpdMatrix<T>) -> Result<SymMatrix<T>> {
    let eig = sym_eig(s.as_sym())?;
    let lmax = eig.values[0];
    if !(lmax > T::zero()) {
        return Err(Error::NotPositiveDefinite {
            index: 0,
            pivot: lmax.as_f64(),
        });
    }
    Ok(eig.floored_values().map_values(|l| l.ln()))
}

/// Matrix exponential of a symmetric matrix via its spectrum.
pub fn spd_exp<T: Real>(g: &SymMatrix<T>) -> Result<SpdMatrix<T>> {
    let eig = sym_eig(g)?;
    Ok(SpdMatrix::new_unchecked(eig.map_values(|l| l.exp())))
}

/// Length of the half-vectorization of a `dim × dim` symmetric matrix.
#[inline]
pub const fn half_len(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

/// Row-major upper triangle with off-diagonal entries scaled by √2, so that
/// Euclidean distances between vectors equal Frobenius distances between
/// matrices.
pub fn half_vectorize<T: Real>(g: &SymMatrix<T>) -> Vec<T> {
    let n = g.dim();
    let sqrt2 = T::SQRT_2();
    let mut out = Vec::with_capacity(half_len(n));
    for i in 0..n {
        out.push(g.get(i, i));
        for j in i + 1..n {
            out.push(g.get(i, j) * sqrt2);
        }
    }
    out
}

/// Inverse of [`half_vectorize`].
pub fn half_unvectorize<T: Real>(f: &[T], dim: usize) -> Result<SymMatrix<T>> {
    if f.len() != half_len(dim) || dim == 0 {
        return Err(Error::DimensionMismatch {
            expected: half_len(dim),
            got: f.len(),
        });
    }
    let inv = T::FRAC_1_SQRT_2();
    let mut m = Mat::zeros(dim, dim);
    let mut it = f.iter();
    for i in 0..dim {
        m[(i, i)] = *it.next().expect("length checked");
        for j in i + 1..dim {
            let v = *it.next().expect("length checked") * inv;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    SymMatrix::new(m)
}
