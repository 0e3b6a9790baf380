//! Dense real matrix kernel: `Mat`, `SymMat`, and the factorizations every
//! other module builds on (Jacobi eigendecomposition, Cholesky, LU solves,
//! spectral norms, square SVD).
//!
//! Everything here is written for small dense matrices (tens of rows, not
//! thousands); robustness and determinism are preferred over speed.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use std::fmt;
use std::ops::{Index, IndexMut};

/// Dense row-major matrix.
#[derive(Clone, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn eye(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Builds from nested rows, validating shape and finiteness.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {c}",
                    row.len()
                )));
            }
            for (j, &x) in row.iter().enumerate() {
                if !x.is_finite() {
                    return Err(Error::NonFiniteEntry(format!("entry ({i},{j})")));
                }
                data.push(x);
            }
        }
        Ok(Mat { rows: r, cols: c, data })
    }

    /// Builds from a row-major slice, validating length and finiteness.
    pub fn from_row_major(rows: usize, cols: usize, data: &[T]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(k) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFiniteEntry(format!("entry ({},{})", k / cols, k % cols)));
        }
        Ok(Mat { rows, cols, data: data.to_vec() })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn t(&self) -> Mat<T> {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, rhs: &Mat<T>) -> Mat<T> {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        let mut out = Mat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] = out[(i, j)] + a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &Mat<T>) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "add shape mismatch");
        let data = self.data.iter().zip(&rhs.data).map(|(&a, &b)| a + b).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, rhs: &Mat<T>) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "sub shape mismatch");
        let data = self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, s: T) -> Mat<T> {
        let data = self.data.iter().map(|&a| a * s).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn neg(&self) -> Mat<T> {
        self.scale(-T::one())
    }

    /// Largest entry magnitude (zero for empty matrices).
    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frob(&self) -> T {
        self.data.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    /// Frobenius inner product `<A, B> = sum A_ij B_ij`.
    pub fn dot(&self, rhs: &Mat<T>) -> T {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "dot shape mismatch");
        self.data.iter().zip(&rhs.data).map(|(&a, &b)| a * b).sum()
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, m: &Mat<T>) {
        assert!(r0 + m.rows <= self.rows && c0 + m.cols <= self.cols, "block out of range");
        for i in 0..m.rows {
            for j in 0..m.cols {
                self[(r0 + i, c0 + j)] = m[(i, j)];
            }
        }
    }

    pub fn add_block(&mut self, r0: usize, c0: usize, m: &Mat<T>) {
        assert!(r0 + m.rows <= self.rows && c0 + m.cols <= self.cols, "block out of range");
        for i in 0..m.rows {
            for j in 0..m.cols {
                self[(r0 + i, c0 + j)] = self[(r0 + i, c0 + j)] + m[(i, j)];
            }
        }
    }

    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Mat<T> {
        assert!(r0 + nr <= self.rows && c0 + nc <= self.cols, "block out of range");
        Mat::from_fn(nr, nc, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn col(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Matrix-vector product.
    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(self.cols, x.len(), "matvec shape mismatch");
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * x[j]).sum())
            .collect()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }
}

impl<T: Scalar> Index<(usize, usize)> for Mat<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T: Scalar> IndexMut<(usize, usize)> for Mat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: fmt::Debug> fmt::Debug for Mat<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                write!(f, "{:?} ", self.data[i * self.cols + j])?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Symmetric matrix; construction symmetrizes so `S == S'` holds exactly.
#[derive(Clone, PartialEq)]
pub struct SymMat<T> {
    m: Mat<T>,
}

impl<T: fmt::Debug> fmt::Debug for SymMat<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Sym{:?}", self.m)
    }
}

impl<T: Scalar> SymMat<T> {
    /// Wraps a square matrix, replacing it with `(S + S') / 2`.
    pub fn new(m: Mat<T>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "symmetric matrix must be square, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        let half = T::c(0.5);
        let sym = Mat::from_fn(m.rows(), m.cols(), |i, j| (m[(i, j)] + m[(j, i)]) * half);
        Ok(SymMat { m: sym })
    }

    pub fn dim(&self) -> usize {
        self.m.rows()
    }

    pub fn as_mat(&self) -> &Mat<T> {
        &self.m
    }

    pub fn into_mat(self) -> Mat<T> {
        self.m
    }
}

impl<T: Scalar> Index<(usize, usize)> for SymMat<T> {
    type Output = T;
    fn index(&self, idx: (usize, usize)) -> &T {
        &self.m[idx]
    }
}

const JACOBI_MAX_SWEEPS: usize = 60;

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching orthogonal matrix
/// of column eigenvectors, so `S * V = V * diag(lambda)`. Eigenvector signs
/// are normalized (largest-magnitude component positive) for determinism.
pub fn sym_eig<T: Scalar>(s: &SymMat<T>) -> Result<(Vec<T>, Mat<T>)> {
    let n = s.dim();
    let mut a = s.as_mat().clone();
    let mut v = Mat::eye(n);
    if n == 0 {
        return Ok((vec![], v));
    }
    let scale = a.frob().max(T::min_positive_value());
    let tol = T::epsilon() * scale;

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off = off + a[(i, j)] * a[(i, j)];
            }
        }
        if off.sqrt() <= tol {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= T::epsilon() * scale * T::c(1e-3) {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (T::c(2.0) * apq);
                let t = {
                    let sgn = if theta >= T::zero() { T::one() } else { -T::one() };
                    sgn / (theta.abs() + (theta * theta + T::one()).sqrt())
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let sn = t * c;
                // Rotate rows/columns p and q of A and columns of V.
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - sn * akq;
                    a[(k, q)] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - sn * aqk;
                    a[(q, k)] = sn * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        // One last measurement: accept if the remaining off-diagonal mass is
        // tiny relative to scale, otherwise report non-convergence.
        let mut off = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off = off + a[(i, j)] * a[(i, j)];
            }
        }
        if off.sqrt() > tol * T::c(1e3) {
            return Err(Error::NumericalFailure(format!(
                "Jacobi eigensolver did not converge in {JACOBI_MAX_SWEEPS} sweeps"
            )));
        }
    }

    // Sort ascending, permuting eigenvector columns alongside.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[(i, i)].partial_cmp(&a[(j, j)]).expect("eigenvalues are finite")
    });
    let vals: Vec<T> = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vecs = Mat::zeros(n, n);
    for (newj, &oldj) in order.iter().enumerate() {
        // Deterministic sign: largest-|entry| component positive.
        let col = v.col(oldj);
        let mut kmax = 0;
        for k in 1..n {
            if col[k].abs() > col[kmax].abs() {
                kmax = k;
            }
        }
        let sign = if col[kmax] < T::zero() { -T::one() } else { T::one() };
        for k in 0..n {
            vecs[(k, newj)] = col[k] * sign;
        }
    }
    Ok((vals, vecs))
}

/// Eigenvalues only, ascending.
pub fn sym_eigvals<T: Scalar>(s: &SymMat<T>) -> Result<Vec<T>> {
    sym_eig(s).map(|(vals, _)| vals)
}

/// Smallest and largest eigenvalue of a symmetric matrix.
pub fn eig_range<T: Scalar>(s: &SymMat<T>) -> Result<(T, T)> {
    let vals = sym_eigvals(s)?;
    match (vals.first(), vals.last()) {
        (Some(&lo), Some(&hi)) => Ok((lo, hi)),
        _ => Err(Error::EmptyInput("eigenvalue range of a 0x0 matrix".into())),
    }
}

/// Cholesky factorization `S = L * L'` (L lower-triangular).
///
/// Fails with the index of the first non-positive pivot when `S` is not
/// positive definite.
pub fn cholesky<T: Scalar>(s: &SymMat<T>) -> Result<Mat<T>> {
    let n = s.dim();
    let mut l = Mat::zeros(n, n);
    for j in 0..n {
        let mut d = s[(j, j)];
        for k in 0..j {
            d = d - l[(j, k)] * l[(j, k)];
        }
        if d <= T::zero() {
            return Err(Error::NotPositiveDefinite { pivot: j });
        }
        let dj = d.sqrt();
        l[(j, j)] = dj;
        for i in (j + 1)..n {
            let mut x = s[(i, j)];
            for k in 0..j {
                x = x - l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = x / dj;
        }
    }
    Ok(l)
}

/// Euclidean-induced operator norm: `sqrt(lambda_max(M' M))`.
pub fn spectral_norm<T: Scalar>(m: &Mat<T>) -> Result<T> {
    let mtm = SymMat::new(m.t().matmul(m))?;
    let (_, hi) = eig_range(&mtm)?;
    Ok(hi.max(T::zero()).sqrt())
}

/// Solves `A * X = B` by LU elimination with partial pivoting.
///
/// Declares the system singular when a pivot magnitude falls below
/// `1e-13 * max|A|`.
pub fn solve_linear<T: Scalar>(a: &Mat<T>, b: &Mat<T>) -> Result<Mat<T>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "solve_linear needs a square system, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if a.rows() != b.rows() {
        return Err(Error::DimensionMismatch(format!(
            "A is {0}x{0} but B has {1} rows",
            a.rows(),
            b.rows()
        )));
    }
    let n = a.rows();
    let nrhs = b.cols();
    let threshold = T::c(1e-13) * a.max_abs();
    let mut lu = a.clone();
    let mut x = b.clone();
    for k in 0..n {
        // Partial pivoting: largest magnitude in column k at or below row k.
        let mut piv = k;
        for i in (k + 1)..n {
            if lu[(i, k)].abs() > lu[(piv, k)].abs() {
                piv = i;
            }
        }
        let pmag = lu[(piv, k)].abs();
        if pmag <= threshold {
            return Err(Error::SingularMatrix { pivot: k, magnitude: pmag.to_f64_lossy() });
        }
        if piv != k {
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(piv, j)];
                lu[(piv, j)] = tmp;
            }
            for j in 0..nrhs {
                let tmp = x[(k, j)];
                x[(k, j)] = x[(piv, j)];
                x[(piv, j)] = tmp;
            }
        }
        let pivot = lu[(k, k)];
        for i in (k + 1)..n {
            let f = lu[(i, k)] / pivot;
            if f == T::zero() {
                continue;
            }
            for j in k..n {
                lu[(i, j)] = lu[(i, j)] - f * lu[(k, j)];
            }
            for j in 0..nrhs {
                x[(i, j)] = x[(i, j)] - f * x[(k, j)];
            }
        }
    }
    for k in (0..n).rev() {
        for j in 0..nrhs {
            let mut s = x[(k, j)];
            for i in (k + 1)..n {
                s = s - lu[(k, i)] * x[(i, j)];
            }
            x[(k, j)] = s / lu[(k, k)];
        }
    }
    Ok(x)
}

/// Matrix inverse via `solve_linear(A, I)`.
pub fn inverse<T: Scalar>(a: &Mat<T>) -> Result<Mat<T>> {
    solve_linear(a, &Mat::eye(a.rows()))
}

/// SVD `A = W * diag(s) * Q'` of a square nonsingular matrix, singular values
/// descending.
///
/// Computed from the eigendecomposition of `A'A` (Q and s^2) with
/// `w_i = A q_i / s_i`; fails when the smallest singular value indicates a
/// numerically singular input.
pub fn svd_square<T: Scalar>(a: &Mat<T>) -> Result<(Mat<T>, Vec<T>, Mat<T>)> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "svd_square needs a square input, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let ata = SymMat::new(a.t().matmul(a))?;
    let (vals, vecs) = sym_eig(&ata)?;
    // Ascending eigenvalues -> take in reverse for descending singular values.
    let s: Vec<T> = vals.iter().rev().map(|&l| l.max(T::zero()).sqrt()).collect();
    let smax = s.first().copied().unwrap_or(T::zero());
    let mut q = Mat::zeros(n, n);
    let mut w = Mat::zeros(n, n);
    for j in 0..n {
        let src = n - 1 - j;
        let sj = s[j];
        if sj <= T::c(1e-13) * smax.max(T::min_positive_value()) {
            return Err(Error::SingularMatrix { pivot: j, magnitude: sj.to_f64_lossy() });
        }
        let qcol = vecs.col(src);
        let wcol = a.matvec(&qcol);
        for i in 0..n {
            q[(i, j)] = qcol[i];
            w[(i, j)] = wcol[i] / sj;
        }
    }
    Ok((w, s, q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_mat(rng: &mut StdRng, r: usize, c: usize) -> Mat<f64> {
        Mat::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn random_sym(rng: &mut StdRng, n: usize) -> SymMat<f64> {
        SymMat::new(random_mat(rng, n, n)).unwrap()
    }

    #[test]
    fn construction_validates_shape_and_finiteness() {
        assert!(Mat::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
        assert!(Mat::from_rows(&[vec![1.0, f64::NAN]]).is_err());
        assert!(Mat::from_row_major(2, 2, &[1.0, 2.0, 3.0]).is_err());
        let m = Mat::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(m[(1, 0)], 3.0);
    }

    #[test]
    fn symmat_symmetrizes_on_construction() {
        let s = SymMat::new(Mat::from_rows(&[vec![1.0, 2.0], vec![0.0, 3.0]]).unwrap()).unwrap();
        assert_eq!(s[(0, 1)], 1.0);
        assert_eq!(s[(1, 0)], 1.0);
    }

    #[test]
    fn sym_eig_diagonal_input() {
        let s: SymMat<f64> = SymMat::new(Mat::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap()).unwrap();
        let (vals, vecs) = sym_eig(&s).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-14);
        assert!((vals[1] - 2.0).abs() < 1e-14);
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((vecs[(i, j)] - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn sym_eig_symmetry_forced_pair() {
        let s: SymMat<f64> = SymMat::new(Mat::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()).unwrap();
        let (vals, _) = sym_eig(&s).unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-14);
        assert!((vals[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn sym_eig_reconstructs_random_matrices() {
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..20 {
            let s = random_sym(&mut rng, 5);
            let (vals, vecs) = sym_eig(&s).unwrap();
            // Residual of S*V - V*diag(lambda).
            let sv = s.as_mat().matmul(&vecs);
            let mut vd = vecs.clone();
            for j in 0..5 {
                for i in 0..5 {
                    vd[(i, j)] *= vals[j];
                }
            }
            let resid = sv.sub(&vd).max_abs();
            assert!(resid <= 1e-9 * (1.0 + s.as_mat().max_abs()), "residual {resid}");
            // Round-trip V*diag(lambda)*V'.
            let err = vd.matmul(&vecs.t()).sub(s.as_mat()).max_abs();
            assert!(err <= 1e-9, "round-trip error {err}");
        }
    }

    #[test]
    fn sym_eig_trace_matches_eigenvalue_sum() {
        let mut rng = StdRng::seed_from_u64(12);
        for _ in 0..20 {
            let s = random_sym(&mut rng, 6);
            let vals = sym_eigvals(&s).unwrap();
            let sum: f64 = vals.iter().sum();
            let tr = s.as_mat().trace();
            assert!((sum - tr).abs() <= 1e-9 * (1.0 + tr.abs()));
        }
    }

    #[test]
    fn cholesky_identity_and_hand_value() {
        let l = cholesky(&SymMat::new(Mat::<f64>::eye(3)).unwrap()).unwrap();
        assert!(l.sub(&Mat::eye(3)).max_abs() < 1e-15);

        let s = SymMat::new(Mat::from_rows(&[vec![4.0, 2.0], vec![2.0, 2.0]]).unwrap()).unwrap();
        let l = cholesky(&s).unwrap();
        let want = Mat::from_rows(&[vec![2.0, 0.0], vec![1.0, 1.0]]).unwrap();
        assert!(l.sub(&want).max_abs() < 1e-12);
    }

    #[test]
    fn cholesky_rejects_indefinite_with_pivot_index() {
        let s = SymMat::new(Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap()).unwrap();
        match cholesky(&s) {
            Err(Error::NotPositiveDefinite { pivot }) => assert_eq!(pivot, 1),
            other => panic!("expected NotPositiveDefinite, got {other:?}"),
        }
    }

    #[test]
    fn cholesky_agrees_with_eigenvalue_sign() {
        let mut rng = StdRng::seed_from_u64(13);
        for _ in 0..40 {
            let raw = random_sym(&mut rng, 4);
            // Shift away from the boundary so the equivalence is unambiguous.
            let (lo, _) = eig_range(&raw).unwrap();
            let shift: f64 = rng.gen_range(-2.0..2.0);
            let shifted = SymMat::new(
                raw.as_mat().add(&Mat::eye(4).scale(shift - lo)),
            )
            .unwrap();
            let (lmin, _) = eig_range(&shifted).unwrap();
            if lmin.abs() <= 1e-10 * (1.0 + shifted.as_mat().max_abs()) {
                continue;
            }
            assert_eq!(cholesky(&shifted).is_ok(), lmin > 0.0);
        }
    }

    #[test]
    fn cholesky_reconstructs() {
        let mut rng = StdRng::seed_from_u64(14);
        for _ in 0..20 {
            let m = random_mat(&mut rng, 4, 4);
            let spd = SymMat::new(m.matmul(&m.t()).add(&Mat::eye(4).scale(4.0))).unwrap();
            let l = cholesky(&spd).unwrap();
            let err = l.matmul(&l.t()).sub(spd.as_mat()).max_abs();
            assert!(err <= 1e-10 * (1.0 + spd.as_mat().max_abs()));
        }
    }

    #[test]
    fn spectral_norm_examples() {
        let d: Mat<f64> = Mat::from_rows(&[vec![3.0, 0.0], vec![0.0, -5.0]]).unwrap();
        assert!((spectral_norm(&d).unwrap() - 5.0).abs() < 1e-10);

        // The fixed plant term: scalar product of a row and a column map.
        let cp: Mat<f64> = Mat::from_rows(&[vec![-1.0, 4.0]]).unwrap();
        let bp = Mat::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        assert!((spectral_norm(&cp.matmul(&bp)).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_norm_matches_eigen_oracle_and_transpose() {
        let mut rng = StdRng::seed_from_u64(15);
        for _ in 0..20 {
            let m = random_mat(&mut rng, 3, 2);
            let norm = spectral_norm(&m).unwrap();
            let mtm = SymMat::new(m.t().matmul(&m)).unwrap();
            let (_, hi) = eig_range(&mtm).unwrap();
            assert!((norm - hi.max(0.0).sqrt()).abs() <= 1e-10);
            let norm_t = spectral_norm(&m.t()).unwrap();
            assert!((norm - norm_t).abs() <= 1e-10);
        }
    }

    #[test]
    fn solve_linear_trivial_and_diagonal() {
        let b: Mat<f64> = Mat::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let x = solve_linear(&Mat::eye(2), &b).unwrap();
        assert!(x.sub(&b).max_abs() < 1e-15);

        let a: Mat<f64> = Mat::from_rows(&[vec![2.0, 0.0], vec![0.0, 4.0]]).unwrap();
        let x = solve_linear(&a, &Mat::eye(2)).unwrap();
        assert!((x[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((x[(1, 1)] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn solve_linear_residual_bound_on_random_systems() {
        let mut rng = StdRng::seed_from_u64(16);
        for _ in 0..20 {
            let a = random_mat(&mut rng, 4, 4).add(&Mat::eye(4).scale(3.0));
            let b = random_mat(&mut rng, 4, 2);
            let x = solve_linear(&a, &b).unwrap();
            let resid = a.matmul(&x).sub(&b).max_abs();
            assert!(resid <= 1e-9 * (1.0 + a.max_abs() * x.max_abs()));
        }
    }

    #[test]
    fn solve_linear_flags_singular_systems() {
        let a = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        match solve_linear(&a, &Mat::eye(2)) {
            Err(Error::SingularMatrix { .. }) => {}
            other => panic!("expected SingularMatrix, got {other:?}"),
        }
    }

    #[test]
    fn svd_square_round_trip_and_orthogonality() {
        let mut rng = StdRng::seed_from_u64(17);
        for _ in 0..20 {
            let a = random_mat(&mut rng, 3, 3).add(&Mat::eye(3).scale(2.0));
            let (w, s, q) = svd_square(&a).unwrap();
            let mut ws = w.clone();
            for j in 0..3 {
                for i in 0..3 {
                    ws[(i, j)] *= s[j];
                }
            }
            let err = ws.matmul(&q.t()).sub(&a).max_abs();
            assert!(err <= 1e-10 * (1.0 + a.max_abs()), "round trip {err}");
            assert!(w.t().matmul(&w).sub(&Mat::eye(3)).max_abs() <= 1e-10);
            assert!(q.t().matmul(&q).sub(&Mat::eye(3)).max_abs() <= 1e-10);
            assert!(s[0] >= s[1] && s[1] >= s[2] && s[2] > 0.0);
        }
    }

    #[test]
    fn svd_square_rejects_singular_input() {
        let a = Mat::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(svd_square(&a).is_err());
    }
}
