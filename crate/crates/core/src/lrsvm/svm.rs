//! Binary soft-margin SVM solved in the dual with SMO.
//!
//! Solves `max Σα − ½ αᵀQα` subject to `yᵀα = 0`, `0 ≤ α ≤ C`, where
//! `Q_ij = y_i y_j K_ij` and `K` is a precomputed linear Gram matrix. Working
//! pairs are chosen with second-order information (maximal violating `i`,
//! then the `j` with the largest guaranteed decrease); the bias is recovered
//! from the free support vectors.

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::symlin::{axpy, Mat};

/// Default stopping tolerance on the maximal KKT violation.
pub const DEFAULT_SVM_TOL: f64 = 1e-6;

const TAU: f64 = 1e-12;

/// One trained binary classifier `sign(wᵀx + b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BinarySvm<T> {
    pub alpha: Vec<T>,
    pub w: Vec<T>,
    pub b: T,
    /// `Σα − ½ αᵀQα` at the solution.
    pub dual_objective: T,
    pub iterations: usize,
}

impl<T: Real> BinarySvm<T> {
    pub fn decision(&self, x: &[T]) -> T {
        crate::symlin::dot(&self.w, x) + self.b
    }
}

/// Gram matrix `X Xᵀ` of the rows of `x`.
pub fn linear_gram<T: Real>(x: &Mat<T>) -> Mat<T> {
    let n = x.rows();
    let mut k = Mat::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = crate::symlin::dot(x.row(i), x.row(j));
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Checks that `y` holds only ±1 and both signs occur.
pub fn check_binary_labels<T: Real>(y: &[T]) -> Result<()> {
    if y.iter().any(|&v| v != T::one() && v != -T::one()) {
        return Err(Error::InvalidLabels("binary labels must be +1 or -1".into()));
    }
    if !y.iter().any(|&v| v > T::zero()) || !y.iter().any(|&v| v < T::zero()) {
        return Err(Error::InvalidLabels("both classes must be present".into()));
    }
    Ok(())
}

/// SMO settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoParams<T> {
    pub c: T,
    pub tol: T,
    pub max_iters: Option<usize>,
}

impl<T: Real> SmoParams<T> {
    pub fn new(c: T) -> Self {
        Self {
            c,
            tol: T::lit(DEFAULT_SVM_TOL),
            max_iters: None,
        }
    }
}

/// Solves the dual on a precomputed Gram matrix. `warm_start` must be
/// feasible; it is typically the previous solution for the same labels.
pub fn solve_dual_gram<T: Real>(
    gram: &Mat<T>,
    y: &[T],
    params: &SmoParams<T>,
    warm_start: Option<&[T]>,
) -> Result<(Vec<T>, T, T, usize)> {
    let n = y.len();
    if gram.rows() != n || gram.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: gram.rows(),
        });
    }
    check_binary_labels(y)?;
    let c = params.c;
    if !(c > T::zero()) || !c.is_finite() {
        return Err(Error::InvalidParameter(format!("SVM box parameter C={c} must be positive")));
    }
    let zero = T::zero();
    let one = T::one();
    let tau = T::lit(TAU);

    let mut alpha = match warm_start {
        Some(a) => {
            if a.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: a.len() });
            }
            let clipped: Vec<T> = a.iter().map(|&v| v.max(zero).min(c)).collect();
            let balance: T = clipped.iter().zip(y).map(|(&a, &y)| a * y).sum();
            if balance.abs() > T::lit(1e-9) * c * T::from_usize_lossy(n) {
                vec![zero; n]
            } else {
                clipped
            }
        }
        None => vec![zero; n],
    };

    // G = Qα − e
    let mut grad = vec![-one; n];
    for j in 0..n {
        if alpha[j] != zero {
            let s = alpha[j] * y[j];
            for i in 0..n {
                grad[i] += y[i] * s * gram[(i, j)];
            }
        }
    }

    let cap = params.max_iters.unwrap_or_else(|| (100 * n).max(10_000_000));
    let mut iter = 0;
    loop {
        // Working set selection.
        let mut gmax = T::neg_infinity();
        let mut i_sel = None;
        for t in 0..n {
            let up = if y[t] > zero { alpha[t] < c } else { alpha[t] > zero };
            if up {
                let v = -y[t] * grad[t];
                if v > gmax {
                    gmax = v;
                    i_sel = Some(t);
                }
            }
        }
        let mut gmin = T::infinity();
        let mut j_sel = None;
        let mut best = T::infinity();
        if let Some(i) = i_sel {
            for t in 0..n {
                let low = if y[t] > zero { alpha[t] > zero } else { alpha[t] < c };
                if !low {
                    continue;
                }
                let v = -y[t] * grad[t];
                if v < gmin {
                    gmin = v;
                }
                let b = gmax - v;
                if b > zero {
                    let mut a = gram[(i, i)] + gram[(t, t)] - T::lit(2.0) * gram[(i, t)];
                    if a <= zero {
                        a = tau;
                    }
                    let obj = -(b * b) / a;
                    if obj <= best {
                        best = obj;
                        j_sel = Some(t);
                    }
                }
            }
        }
        let (i, j) = match (i_sel, j_sel) {
            (Some(i), Some(j)) if gmax - gmin >= params.tol => (i, j),
            _ => break,
        };
        iter += 1;
        if iter > cap {
            return Err(Error::NoConvergence(cap));
        }

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let mut quad = gram[(i, i)] + gram[(j, j)] - T::lit(2.0) * gram[(i, j)];
        if quad <= zero {
            quad = tau;
        }
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > zero {
                if alpha[j] < zero {
                    alpha[j] = zero;
                    alpha[i] = diff;
                }
            } else if alpha[i] < zero {
                alpha[i] = zero;
                alpha[j] = -diff;
            }
            if diff > zero {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < zero {
                alpha[j] = zero;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < zero {
                alpha[i] = zero;
                alpha[j] = sum;
            }
        }

        let di = (alpha[i] - old_i) * y[i];
        let dj = (alpha[j] - old_j) * y[j];
        for t in 0..n {
            grad[t] += y[t] * (gram[(t, i)] * di + gram[(t, j)] * dj);
        }
    }

    let b = -rho(&alpha, &grad, y, c);
    let objective = -T::lit(0.5) * alpha.iter().zip(&grad).map(|(&a, &g)| a * (g - one)).sum::<T>();
    Ok((alpha, b, objective, iter))
}

/// Offset `ρ` with decision `Σ α_i y_i K(x_i, x) − ρ`.
fn rho<T: Real>(alpha: &[T], grad: &[T], y: &[T], c: T) -> T {
    let zero = T::zero();
    let mut ub = T::infinity();
    let mut lb = T::neg_infinity();
    let mut free_sum = zero;
    let mut free = 0usize;
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        let positive = y[t] > zero;
        if alpha[t] >= c {
            if positive {
                lb = lb.max(yg);
            } else {
                ub = ub.min(yg);
            }
        } else if alpha[t] <= zero {
            if positive {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    if free > 0 {
        free_sum / T::from_usize_lossy(free)
    } else {
        (ub + lb) * T::lit(0.5)
    }
}

/// Primal weights `w = Σ α_n y_n x_n`.
pub fn primal_weights<T: Real>(x: &Mat<T>, y: &[T], alpha: &[T]) -> Vec<T> {
    let mut w = vec![T::zero(); x.cols()];
    for n in 0..x.rows() {
        if alpha[n] != T::zero() {
            axpy(alpha[n] * y[n], x.row(n), &mut w);
        }
    }
    w
}

/// Solves one binary problem on the rows of `x` (one sample per row).
pub fn svm_solve_dual<T: Real>(x: &Mat<T>, y: &[T], c: T) -> Result<BinarySvm<T>> {
    if x.rows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.rows(),
            got: y.len(),
        });
    }
    let gram = linear_gram(x);
    let (alpha, b, dual_objective, iterations) = solve_dual_gram(&gram, y, &SmoParams::new(c), None)?;
    let w = primal_weights(x, y, &alpha);
    Ok(BinarySvm {
        alpha,
        w,
        b,
        dual_objective,
        iterations,
    })
}

/// Hinge losses `max(0, 1 − y_n (wᵀx_n + b))`, the slack realized by a
/// solution.
pub fn hinge_losses<T: Real>(svm: &BinarySvm<T>, x: &Mat<T>, y: &[T]) -> Vec<T> {
    (0..x.rows())
        .map(|n| (T::one() - y[n] * svm.decision(x.row(n))).max(T::zero()))
        .collect()
}
