//! Small dense kernels: Householder least squares and the cyclic Jacobi
//! eigensolver for symmetric matrices. Sizes here are tiny (a handful of
//! columns), so clarity wins over blocking.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Solve `min ‖A X − B‖_F` by Householder QR. Fails when `A` is
/// numerically rank deficient.
pub fn least_squares<T: Scalar>(a: ArrayView2<T>, b: ArrayView2<T>) -> Result<Array2<T>> {
    let (m, n) = a.dim();
    if b.nrows() != m {
        return Err(Error::validation(format!(
            "design has {m} rows but targets have {}",
            b.nrows()
        )));
    }
    if m < n {
        return Err(Error::SingularDesign(format!(
            "{m} rows cannot determine {n} coefficients"
        )));
    }
    let mut r = a.to_owned();
    let mut qtb = b.to_owned();
    let scale = a.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
    for j in 0..n {
        let norm = (j..m).map(|i| r[[i, j]] * r[[i, j]]).sum::<T>().sqrt();
        if norm == T::zero() {
            continue;
        }
        let alpha = if r[[j, j]] > T::zero() { -norm } else { norm };
        let mut v: Vec<T> = (j..m).map(|i| r[[i, j]]).collect();
        v[0] -= alpha;
        let vnorm2: T = v.iter().map(|x| *x * *x).sum();
        if vnorm2 == T::zero() {
            continue;
        }
        let apply = |mat: &mut Array2<T>, cols: std::ops::Range<usize>| {
            for c in cols {
                let dot: T = v.iter().enumerate().map(|(k, vk)| *vk * mat[[j + k, c]]).sum();
                let f = T::lit(2.0) * dot / vnorm2;
                for (k, vk) in v.iter().enumerate() {
                    mat[[j + k, c]] -= f * *vk;
                }
            }
        };
        apply(&mut r, j..n);
        let nb = qtb.ncols();
        apply(&mut qtb, 0..nb);
    }
    let diag_max = (0..n).fold(T::zero(), |acc, j| acc.max(r[[j, j]].abs()));
    let tol = T::epsilon() * T::from_usize_lossy(m.max(n)) * diag_max.max(scale) * T::lit(16.0);
    for j in 0..n {
        if r[[j, j]].abs() <= tol {
            return Err(Error::SingularDesign(format!(
                "column {j} is (numerically) a combination of the others"
            )));
        }
    }
    let mut x = Array2::<T>::zeros((n, b.ncols()));
    for c in 0..b.ncols() {
        for j in (0..n).rev() {
            let mut s = qtb[[j, c]];
            for k in j + 1..n {
                s -= r[[j, k]] * x[[k, c]];
            }
            x[[j, c]] = s / r[[j, j]];
        }
    }
    Ok(x)
}

/// Eigen-decomposition of a symmetric matrix. Returns eigenvalues sorted in
/// descending order and the matching unit eigenvectors as columns.
pub fn symmetric_eigen<T: Scalar>(a: ArrayView2<T>) -> (Array1<T>, Array2<T>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "symmetric_eigen needs a square matrix");
    let mut m = a.to_owned();
    let mut v = Array2::<T>::eye(n);
    let two = T::lit(2.0);
    for _sweep in 0..100 {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[[i, j]] * m[[i, j]])
            .sum();
        let total: T = m.iter().map(|x| *x * *x).sum();
        if off <= T::epsilon() * T::epsilon() * total || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[[p, q]];
                if apq == T::zero() {
                    continue;
                }
                let theta = (m[[q, q]] - m[[p, p]]) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[[j, j]].partial_cmp(&m[[i, i]]).expect("finite eigenvalues"));
    let values = Array1::from_iter(order.iter().map(|&i| m[[i, i]]));
    let vectors = v.select(Axis(1), &order);
    (values, vectors)
}
