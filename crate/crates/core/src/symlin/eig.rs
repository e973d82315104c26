//! Symmetric eigensolvers.
//!
//! The default route reduces the matrix to tridiagonal form with Householder
//! reflections and then runs implicit QL with Wilkinson shifts (the classic
//! EISPACK `tred2`/`tql2` pair). Cyclic Jacobi is kept as a second, fully
//! independent route; it is slower but simple enough to serve as a reference.

use super::mat::Mat;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Cap on QL iterations per eigenvalue.
const QL_MAX_ITERS_PER_VALUE: usize = 60;
/// Cap on full Jacobi sweeps.
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Householder tridiagonalization followed by implicit QL.
///
/// Returns unsorted eigenvalues and a matrix whose *rows* are the
/// corresponding eigenvectors.
pub(crate) fn tridiagonal_ql<T: Real>(a: &Mat<T>) -> Result<(Vec<T>, Mat<T>)> {
    let n = a.rows();
    let mut v = a.clone();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tred2(&mut v, &mut d, &mut e);
    // tql2 rotates columns of V; working on the transpose keeps them contiguous.
    let mut vt = v.transpose();
    tql2(&mut vt, &mut d, &mut e)?;
    Ok((d, vt))
}

fn tred2<T: Real>(v: &mut Mat<T>, d: &mut [T], e: &mut [T]) {
    let n = d.len();
    let zero = T::zero();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = zero;
        let mut h = zero;
        for &dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == zero {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = zero;
                v[(j, i)] = zero;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > zero {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = zero;
            }
            for j in 0..i {
                f = d[j];
                v[(j, i)] = f;
                g = e[j] + v[(j, j)] * f;
                for k in j + 1..i {
                    g += v[(k, j)] * d[k];
                    e[k] += v[(k, j)] * f;
                }
                e[j] = g;
            }
            f = zero;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    let update = f * e[k] + g * d[k];
                    v[(k, j)] -= update;
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = zero;
            }
        }
        d[i] = h;
    }

    // Accumulate transformations.
    for i in 0..n.saturating_sub(1) {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = T::one();
        let h = d[i + 1];
        if h != zero {
            for k in 0..=i {
                d[k] = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = zero;
                for k in 0..=i {
                    g += v[(k, i + 1)] * v[(k, j)];
                }
                for k in 0..=i {
                    let update = g * d[k];
                    v[(k, j)] -= update;
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = zero;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = zero;
    }
    v[(n - 1, n - 1)] = T::one();
    e[0] = zero;
}

/// Implicit QL on the tridiagonal (d, e). `vt` holds eigenvectors as rows.
fn tql2<T: Real>(vt: &mut Mat<T>, d: &mut [T], e: &mut [T]) -> Result<()> {
    let n = d.len();
    let zero = T::zero();
    let one = T::one();
    let two = T::lit(2.0);
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = zero;

    let mut f = zero;
    let mut tst1 = zero;
    let eps = T::epsilon();
    let cap = QL_MAX_ITERS_PER_VALUE * n.max(1);
    let mut total_iters = 0usize;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            loop {
                total_iters += 1;
                if total_iters > cap {
                    return Err(Error::ConvergenceFailure(cap));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(one);
                if p < zero {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = one;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = zero;
                let mut s2 = zero;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    rotate_rows(vt, i, s, c);
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = zero;
    }
    Ok(())
}

#[inline]
fn rotate_rows<T: Real>(vt: &mut Mat<T>, i: usize, s: T, c: T) {
    let n = vt.cols();
    let (head, tail) = vt.as_mut_slice().split_at_mut((i + 1) * n);
    let row_i = &mut head[i * n..];
    let row_next = &mut tail[..n];
    for (a, b) in row_i.iter_mut().zip(row_next.iter_mut()) {
        let h = *b;
        *b = s * *a + c * h;
        *a = c * *a - s * h;
    }
}

/// Cyclic Jacobi rotations. Returns unsorted eigenvalues and a matrix whose
/// rows are the eigenvectors.
pub(crate) fn cyclic_jacobi<T: Real>(a: &Mat<T>) -> Result<(Vec<T>, Mat<T>)> {
    let n = a.rows();
    let mut a = a.clone();
    let mut vt = Mat::identity(n);
    let zero = T::zero();
    let one = T::one();
    let two = T::lit(2.0);

    let total: T = a.as_slice().iter().map(|&x| x * x).sum();
    let threshold = total * T::epsilon() * T::epsilon();

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = zero;
        for p in 0..n {
            for q in p + 1..n {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off <= threshold || off == zero {
            let values = (0..n).map(|i| a[(i, i)]).collect();
            return Ok((values, vt));
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == zero {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (two * apq);
                let t = {
                    let t = one / (theta.abs() + (theta * theta + one).sqrt());
                    if theta < zero {
                        -t
                    } else {
                        t
                    }
                };
                let c = one / (t * t + one).sqrt();
                let s = t * c;
                // A ← Jᵀ A J on rows/cols p, q.
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = zero;
                a[(q, p)] = zero;
                let (head, tail) = vt.as_mut_slice().split_at_mut(q * n);
                let row_p = &mut head[p * n..(p + 1) * n];
                let row_q = &mut tail[..n];
                for (vp, vq) in row_p.iter_mut().zip(row_q.iter_mut()) {
                    let x = *vp;
                    let y = *vq;
                    *vp = c * x - s * y;
                    *vq = s * x + c * y;
                }
            }
        }
    }
    Err(Error::ConvergenceFailure(JACOBI_MAX_SWEEPS))
}
