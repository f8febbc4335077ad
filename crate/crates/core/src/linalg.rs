//! Dense linear algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub fn max_abs<T: Real>(m: &DMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, &v| acc.max(v.abs()))
}

pub fn max_abs_vec<T: Real>(v: &DVector<T>) -> T {
    v.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()))
}

/// `uᵀ G v`.
pub fn inner<T: Real>(gram: &DMatrix<T>, u: &DVector<T>, v: &DVector<T>) -> T {
    (u.transpose() * gram * v)[(0, 0)]
}

/// Gram–Schmidt (two passes) of the columns of `vectors` with respect to the
/// inner product `gram` (identity when `None`). Fails when a column is
/// dependent on the previous ones at relative level `tol`.
pub fn gram_schmidt<T: Real>(
    vectors: &DMatrix<T>,
    gram: Option<&DMatrix<T>>,
    tol: T,
) -> Result<DMatrix<T>> {
    let ip = |u: &DVector<T>, v: &DVector<T>| match gram {
        Some(g) => inner(g, u, v),
        None => u.dot(v),
    };
    let n = vectors.nrows();
    let k = vectors.ncols();
    let mut out: Vec<DVector<T>> = Vec::with_capacity(k);
    for j in 0..k {
        let original = vectors.column(j).into_owned();
        let scale = ip(&original, &original).max(T::zero()).sqrt();
        let mut v = original;
        for _ in 0..2 {
            for q in &out {
                let c = ip(q, &v);
                v.axpy(-c, q, T::one());
            }
        }
        let norm = ip(&v, &v).max(T::zero()).sqrt();
        if scale == T::zero() || norm <= tol * scale {
            return Err(Error::RankDeficient { rank: out.len(), expected: k });
        }
        out.push(v / norm);
    }
    let mut m = DMatrix::zeros(n, k);
    for (j, v) in out.iter().enumerate() {
        m.set_column(j, v);
    }
    Ok(m)
}

/// Orthonormal (Euclidean) basis of the kernel of `m`. Singular values below
/// `rel_tol · σ_max` count as zero.
pub fn null_space<T: Real>(m: &DMatrix<T>, rel_tol: T) -> DMatrix<T> {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return DMatrix::zeros(0, 0);
    }
    let padded = if rows < cols {
        let mut p = DMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = SVD::new(padded, false, true);
    let v_t = svd.v_t.expect("requested V");
    let sigma_max = svd.singular_values.iter().fold(T::zero(), |a, &s| a.max(s));
    let cutoff = if sigma_max == T::zero() { T::one() } else { rel_tol * sigma_max };
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= cutoff || sigma_max == T::zero())
        .collect();
    let mut out = DMatrix::zeros(cols, keep.len());
    for (j, &i) in keep.iter().enumerate() {
        out.set_column(j, &v_t.row(i).transpose());
    }
    out
}

/// Numerical rank of `m`.
pub fn rank<T: Real>(m: &DMatrix<T>, rel_tol: T) -> usize {
    if m.is_empty() {
        return 0;
    }
    let s = m.clone().singular_values();
    let smax = s.iter().fold(T::zero(), |a, &x| a.max(x));
    if smax == T::zero() {
        return 0;
    }
    s.iter().filter(|&&x| x > rel_tol * smax).count()
}

/// Extends the orthonormal columns of `basis` (ambient dimension `n`) by an
/// orthonormal basis of their complement, returning only the complement.
pub fn complement<T: Real>(basis: &DMatrix<T>, n: usize) -> DMatrix<T> {
    let mut found: Vec<DVector<T>> = (0..basis.ncols()).map(|j| basis.column(j).into_owned()).collect();
    let start = found.len();
    let threshold = T::one() / (T::lit(2.0) * T::from_usize(n.max(1)).unwrap().sqrt());
    for i in 0..n {
        if found.len() == n {
            break;
        }
        let mut v = DVector::zeros(n);
        v[i] = T::one();
        for _ in 0..2 {
            for q in &found {
                let c = q.dot(&v);
                v.axpy(-c, q, T::one());
            }
        }
        let norm = v.norm();
        if norm > threshold {
            found.push(v / norm);
        }
    }
    let mut out = DMatrix::zeros(n, found.len() - start);
    for (j, v) in found[start..].iter().enumerate() {
        out.set_column(j, v);
    }
    out
}

/// Least-squares solution of `min ‖u z − r‖` by SVD with relative rank cutoff.
/// Returns the minimum-norm minimiser and the residual norm.
pub fn lstsq<T: Real>(u: &DMatrix<T>, r: &DVector<T>, rel_tol: T) -> (DVector<T>, T) {
    let cols = u.ncols();
    if cols == 0 {
        return (DVector::zeros(0), r.norm());
    }
    let svd = SVD::new(u.clone(), true, true);
    let smax = svd.singular_values.iter().fold(T::zero(), |a, &s| a.max(s));
    let eps = if smax == T::zero() { T::one() } else { rel_tol * smax };
    let z = svd.solve(r, eps).unwrap_or_else(|_| DVector::zeros(cols));
    let residual = (u * &z - r).norm();
    (z, residual)
}

/// Eigen-decomposition `(λ, V)` of the symmetrized `m`.
///
/// nalgebra's QR iteration occasionally returns inaccurate eigenvectors for
/// matrices with highly degenerate spectra, so the result is verified and
/// recomputed with cyclic Jacobi rotations when the check fails.
pub fn symmetric_eigen<T: Real>(m: &DMatrix<T>) -> (DVector<T>, DMatrix<T>) {
    let n = m.nrows();
    let sym = (m + m.transpose()) * T::lit(0.5);
    let scale = max_abs(&sym).max(T::one());
    let tol = T::lit(1e3) * <T as Real>::epsilon() * scale * T::from_usize(n.max(1)).unwrap();
    let eig = SymmetricEigen::new(sym.clone());
    let v = &eig.eigenvectors;
    let defect = max_abs(&(&sym * v - v * DMatrix::from_diagonal(&eig.eigenvalues)));
    let ortho = max_abs(&(v.transpose() * v - DMatrix::identity(n, n)));
    if defect <= tol && ortho <= tol / scale {
        return (eig.eigenvalues, eig.eigenvectors);
    }
    jacobi_eigen(sym)
}

fn jacobi_eigen<T: Real>(mut a: DMatrix<T>) -> (DVector<T>, DMatrix<T>) {
    let n = a.nrows();
    let mut v = DMatrix::identity(n, n);
    let eps = <T as Real>::epsilon();
    for _ in 0..100 {
        let off = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .fold(T::zero(), |s, (i, j)| s + a[(i, j)] * a[(i, j)]);
        if off.sqrt() <= eps * a.norm() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (apq + apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let t = if theta == T::zero() { T::one() } else { t };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    (a.diagonal(), v)
}

/// Orthonormal basis of the eigenspace of the symmetric matrix `m` whose
/// eigenvalues satisfy `select`.
pub fn eigenspace<T: Real>(m: &DMatrix<T>, select: impl Fn(T) -> bool) -> DMatrix<T> {
    let n = m.nrows();
    let (values, vectors) = symmetric_eigen(m);
    let keep: Vec<usize> = (0..n).filter(|&i| select(values[i])).collect();
    let mut out = DMatrix::zeros(n, keep.len());
    for (j, &i) in keep.iter().enumerate() {
        out.set_column(j, &vectors.column(i));
    }
    out
}

/// Coordinates of the symmetric positive definite `gram` factor: returns `T`
/// with `Tᵀ gram T = I` and `T` upper triangular (Gram–Schmidt order).
pub fn orthonormalizing_transform<T: Real>(gram: &DMatrix<T>) -> Result<DMatrix<T>> {
    let n = gram.nrows();
    let chol = nalgebra::Cholesky::new(gram.clone())
        .ok_or(Error::RankDeficient { rank: 0, expected: n })?;
    let l = chol.l();
    let lt = l.transpose();
    lt.try_inverse().ok_or(Error::RankDeficient { rank: 0, expected: n })
}

pub fn commutator<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    a * b - b * a
}
