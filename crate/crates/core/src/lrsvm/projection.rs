//! Block-diagonal orthonormal projections: PCA start and trace-maximization
//! update.

use super::TrainingSet;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::symlin::{axpy, canonical_sign, dot, norm2, sym_eig, Mat, SymMatrix};

/// Eigenvalues at or below this fraction of the largest are treated as null.
const NULL_RATIO: f64 = 1e-10;

/// Tolerance used when validating orthonormal blocks.
pub const ORTHONORMAL_TOL: f64 = 1e-8;

/// `Diag(L_1, …, L_B)` with each `L_b` a `d × r` matrix with orthonormal
/// columns.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockProjection<T> {
    blocks: Vec<Mat<T>>,
    rank: usize,
}

impl<T: Real> BlockProjection<T> {
    pub fn new(blocks: Vec<Mat<T>>) -> Result<Self> {
        let p = Self::from_blocks_unchecked(blocks)?;
        let err = p.orthonormality_error();
        if !(err <= T::lit(ORTHONORMAL_TOL)) {
            return Err(Error::InvalidParameter(format!(
                "projection blocks are not orthonormal (error {err})"
            )));
        }
        Ok(p)
    }

    /// Shape checks only.
    pub fn from_blocks_unchecked(blocks: Vec<Mat<T>>) -> Result<Self> {
        let first = blocks
            .first()
            .ok_or_else(|| Error::InvalidParameter("projection needs at least one block".into()))?;
        let (d, r) = (first.rows(), first.cols());
        if r == 0 {
            return Err(Error::InvalidParameter("projection rank must be at least 1".into()));
        }
        if r > d {
            return Err(Error::RankTooLarge { rank: r, limit: d });
        }
        for b in &blocks {
            if b.rows() != d || b.cols() != r {
                return Err(Error::DimensionMismatch {
                    expected: d * r,
                    got: b.rows() * b.cols(),
                });
            }
        }
        Ok(Self { blocks, rank: r })
    }

    pub fn blocks(&self) -> &[Mat<T>] {
        &self.blocks
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_dim(&self) -> usize {
        self.blocks[0].rows()
    }

    pub fn input_dim(&self) -> usize {
        self.block_count() * self.block_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.block_count() * self.rank
    }

    /// Largest `|L_bᵀL_b − I|` entry over all blocks.
    pub fn orthonormality_error(&self) -> T {
        let mut worst = T::zero();
        for l in &self.blocks {
            let g = l.tr_matmul(l);
            for i in 0..self.rank {
                for j in 0..self.rank {
                    let want = if i == j { T::one() } else { T::zero() };
                    worst = worst.max((g[(i, j)] - want).abs());
                }
            }
        }
        worst
    }

    /// `L̂ᵀf`.
    pub fn project(&self, f: &[T]) -> Result<Vec<T>> {
        if f.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: f.len(),
            });
        }
        let (d, r) = (self.block_dim(), self.rank);
        let mut out = vec![T::zero(); self.output_dim()];
        for (b, l) in self.blocks.iter().enumerate() {
            let dst = &mut out[b * r..(b + 1) * r];
            for (i, &x) in f[b * d..(b + 1) * d].iter().enumerate() {
                if x != T::zero() {
                    axpy(x, l.row(i), dst);
                }
            }
        }
        Ok(out)
    }

    /// Projects every row of `x`.
    pub fn project_all(&self, x: &Mat<T>) -> Result<Mat<T>> {
        let mut out = Mat::zeros(x.rows(), self.output_dim());
        for n in 0..x.rows() {
            let p = self.project(x.row(n))?;
            out.row_mut(n).copy_from_slice(&p);
        }
        Ok(out)
    }

    /// `L̂p`, mapping a projected vector back to feature space.
    pub fn unproject(&self, p: &[T]) -> Result<Vec<T>> {
        if p.len() != self.output_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.output_dim(),
                got: p.len(),
            });
        }
        let (d, r) = (self.block_dim(), self.rank);
        let mut out = vec![T::zero(); self.input_dim()];
        for (b, l) in self.blocks.iter().enumerate() {
            let pb = &p[b * r..(b + 1) * r];
            for i in 0..d {
                out[b * d + i] = dot(l.row(i), pb);
            }
        }
        Ok(out)
    }
}

/// Signed duals of one binary sub-problem.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassDuals<T> {
    /// ±1 per sample.
    pub y: Vec<T>,
    pub alpha: Vec<T>,
}

fn check_rank(r: usize, limit: usize) -> Result<()> {
    if r == 0 {
        return Err(Error::InvalidParameter("projection rank must be at least 1".into()));
    }
    if r > limit {
        return Err(Error::RankTooLarge { rank: r, limit });
    }
    Ok(())
}

/// Per block, the top-`r` principal directions of the centered block data.
pub fn pca_init<T: Real>(ts: &TrainingSet<T>, r: usize) -> Result<BlockProjection<T>> {
    let (n, d) = (ts.len(), ts.block_dim());
    check_rank(r, d.min(n))?;
    let nf = T::from_usize_lossy(n);
    let blocks = (0..ts.block_count())
        .map(|b| {
            let mut x = Mat::from_fn(n, d, |i, j| ts.block(i, b)[j]);
            let mut mean = vec![T::zero(); d];
            for i in 0..n {
                axpy(T::one(), x.row(i), &mut mean);
            }
            for i in 0..n {
                for (v, &m) in x.row_mut(i).iter_mut().zip(&mean) {
                    *v -= m / nf;
                }
            }
            top_eigvecs(&x, r)
        })
        .collect::<Result<Vec<_>>>()?;
    BlockProjection::from_blocks_unchecked(blocks)
}

/// Block slices `v_{m,b} = F_bᵀ(y_m ∘ α_m)`, one `M × d` matrix per block.
fn dual_directions<T: Real>(ts: &TrainingSet<T>, duals: &[ClassDuals<T>]) -> Result<Vec<Mat<T>>> {
    let n = ts.len();
    for cd in duals {
        if cd.y.len() != n || cd.alpha.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: cd.alpha.len().min(cd.y.len()),
            });
        }
        if cd.alpha.iter().any(|a| !(a.is_finite() && *a >= T::zero())) {
            return Err(Error::InvalidParameter("duals must be finite and non-negative".into()));
        }
    }
    let d = ts.block_dim();
    Ok((0..ts.block_count())
        .map(|b| {
            let mut v = Mat::zeros(duals.len(), d);
            for (m, cd) in duals.iter().enumerate() {
                let row = v.row_mut(m);
                for i in 0..n {
                    let s = cd.y[i] * cd.alpha[i];
                    if s != T::zero() {
                        axpy(s, ts.block(i, b), row);
                    }
                }
            }
            v
        })
        .collect())
}

/// Per block, the top-`r` eigenvectors of `F_bᵀ(Σ_m Y_m α_m α_mᵀ Y_m)F_b`.
pub fn trace_max_step<T: Real>(
    ts: &TrainingSet<T>,
    duals: &[ClassDuals<T>],
    r: usize,
) -> Result<BlockProjection<T>> {
    check_rank(r, ts.block_dim())?;
    let blocks = dual_directions(ts, duals)?
        .iter()
        .map(|v| top_eigvecs(v, r))
        .collect::<Result<Vec<_>>>()?;
    BlockProjection::from_blocks_unchecked(blocks)
}

/// `Σ_b Σ_m ‖L_bᵀ v_{m,b}‖²`, the quantity maximized by [`trace_max_step`].
pub fn trace_objective<T: Real>(
    ts: &TrainingSet<T>,
    duals: &[ClassDuals<T>],
    proj: &BlockProjection<T>,
) -> Result<T> {
    if proj.input_dim() != ts.dim() || proj.block_count() != ts.block_count() {
        return Err(Error::DimensionMismatch {
            expected: ts.dim(),
            got: proj.input_dim(),
        });
    }
    let mut total = T::zero();
    for (v, l) in dual_directions(ts, duals)?.iter().zip(proj.blocks()) {
        for m in 0..v.rows() {
            let p = l.tr_mul_vec(v.row(m));
            total += dot(&p, &p);
        }
    }
    Ok(total)
}

/// Top-`r` eigenvectors of `AᵀA` for `a` with one factor per row, as the
/// columns of a `d × r` matrix. Works on whichever of `AᵀA` and `AAᵀ` is
/// smaller. Null directions are filled from the canonical basis.
fn top_eigvecs<T: Real>(a: &Mat<T>, r: usize) -> Result<Mat<T>> {
    let (m, d) = (a.rows(), a.cols());
    let null = T::lit(NULL_RATIO);
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(r);
    if d <= m {
        let e = sym_eig(&SymMatrix::from_upper_of(&a.tr_matmul(a)))?;
        let cutoff = e.values[0].max(T::zero()) * null;
        for i in 0..r {
            if !(e.values[i] > cutoff) {
                break;
            }
            push_orthonormal(&mut basis, e.vector(i));
        }
    } else if m > 0 {
        let e = sym_eig(&SymMatrix::from_upper_of(&a.matmul(&a.transpose())))?;
        let cutoff = e.values[0].max(T::zero()) * null;
        for i in 0..r.min(m) {
            let lambda = e.values[i];
            if !(lambda > cutoff) {
                break;
            }
            let mut u = a.tr_mul_vec(&e.vector(i));
            let s = T::one() / lambda.sqrt();
            u.iter_mut().for_each(|x| *x *= s);
            push_orthonormal(&mut basis, u);
        }
    }
    let mut k = 0;
    while basis.len() < r && k < d {
        let mut e = vec![T::zero(); d];
        e[k] = T::one();
        push_orthonormal(&mut basis, e);
        k += 1;
    }
    debug_assert_eq!(basis.len(), r);
    let mut out = Mat::zeros(d, r);
    for (j, mut v) in basis.into_iter().enumerate() {
        canonical_sign(&mut v);
        out.set_col(j, &v);
    }
    Ok(out)
}

/// Two passes of modified Gram-Schmidt; `v` is dropped if it is (nearly) in
/// the span of `basis`.
fn push_orthonormal<T: Real>(basis: &mut Vec<Vec<T>>, mut v: Vec<T>) -> bool {
    let start = norm2(&v);
    if !(start > T::zero()) {
        return false;
    }
    for _ in 0..2 {
        for q in basis.iter() {
            let c = dot(q, &v);
            axpy(-c, q, &mut v);
        }
    }
    let n = norm2(&v);
    if !(n > T::lit(1e-6) * start) {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= n);
    basis.push(v);
    true
}
