//! Small dense factorizations and norms.
//!
//! All dense objects are `nalgebra::DMatrix<f64>`, stored column-major.

use nalgebra::{DMatrix, DMatrixView, DVector, SVD};

use super::KernelError;

/// Dense matrix type used throughout the crate (column-major `f64`).
pub type DenseMatrix = DMatrix<f64>;

/// Machine epsilon for IEEE double precision.
pub const EPS: f64 = f64::EPSILON;

/// Result of a Cholesky factorization that reports failure instead of
/// aborting.
#[derive(Debug, Clone)]
pub struct CholOutcome {
    /// Upper-triangular factor `R` with `RᵀR = S`. Contents are unspecified
    /// when `breakdown` is set.
    pub factor: DenseMatrix,
    /// Set when the input is numerically not positive definite or has
    /// non-finite entries.
    pub breakdown: bool,
}

/// Upper Cholesky factor of the symmetric part of `s`.
///
/// The input is symmetrized as `(S + Sᵀ)/2` first. A pivot that is not
/// strictly positive (or not finite) raises the breakdown flag; this is the
/// flag that drives adaptive restarting in the solver.
pub fn cholesky_flagged(s: &DenseMatrix) -> Result<CholOutcome, KernelError> {
    let n = s.nrows();
    if s.ncols() != n {
        return Err(KernelError::NotSquare { rows: n, cols: s.ncols() });
    }
    let mut r = DenseMatrix::zeros(n, n);
    if s.iter().any(|v| !v.is_finite()) {
        return Ok(CholOutcome { factor: r, breakdown: true });
    }
    for j in 0..n {
        let mut d = s[(j, j)];
        for k in 0..j {
            d -= r[(k, j)] * r[(k, j)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Ok(CholOutcome { factor: r, breakdown: true });
        }
        let djj = d.sqrt();
        r[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut v = 0.5 * (s[(j, i)] + s[(i, j)]);
            for k in 0..j {
                v -= r[(k, j)] * r[(k, i)];
            }
            r[(j, i)] = v / djj;
        }
    }
    Ok(CholOutcome { factor: r, breakdown: false })
}

/// Thin Householder QR with a nonnegative diagonal in `R`.
pub fn qr_pos(x: DMatrixView<'_, f64>) -> Result<(DenseMatrix, DenseMatrix), KernelError> {
    let (n, s) = x.shape();
    if n < s {
        return Err(KernelError::TooFewRows { rows: n, cols: s });
    }
    let qr = x.clone_owned().qr();
    let mut q = qr.q();
    let mut r = qr.r();
    for j in 0..s {
        if r[(j, j)] < 0.0 {
            r.row_mut(j).neg_mut();
            q.column_mut(j).neg_mut();
        }
    }
    Ok((q, r))
}

/// Which side the triangular factor sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Solve `op(T) X = B`.
    Left,
    /// Solve `X op(T) = B`.
    Right,
}

/// Which triangle of `T` holds the factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Triangle {
    Upper,
    Lower,
}

/// Triangular solve with `op(T) = T` or `Tᵀ`.
///
/// Only the indicated triangle of `t` is read.
pub fn tri_solve(
    t: &DenseMatrix,
    b: &DenseMatrix,
    triangle: Triangle,
    side: Side,
    transpose: bool,
) -> Result<DenseMatrix, KernelError> {
    let n = t.nrows();
    if t.ncols() != n {
        return Err(KernelError::NotSquare { rows: n, cols: t.ncols() });
    }
    if let Some(i) = (0..n).find(|&i| t[(i, i)] == 0.0) {
        return Err(KernelError::SingularFactor { index: i });
    }
    match side {
        Side::Left => {
            if b.nrows() != n {
                return Err(KernelError::DimensionMismatch {
                    expected: n,
                    found: b.nrows(),
                });
            }
            // op(T) is lower triangular when exactly one of (Lower, transpose) holds.
            let lower = (triangle == Triangle::Lower) != transpose;
            let entry = |i: usize, j: usize| if transpose { t[(j, i)] } else { t[(i, j)] };
            let mut x = b.clone();
            for col in 0..b.ncols() {
                if lower {
                    for i in 0..n {
                        let mut v = x[(i, col)];
                        for k in 0..i {
                            v -= entry(i, k) * x[(k, col)];
                        }
                        x[(i, col)] = v / entry(i, i);
                    }
                } else {
                    for i in (0..n).rev() {
                        let mut v = x[(i, col)];
                        for k in (i + 1)..n {
                            v -= entry(i, k) * x[(k, col)];
                        }
                        x[(i, col)] = v / entry(i, i);
                    }
                }
            }
            Ok(x)
        }
        Side::Right => {
            if b.ncols() != n {
                return Err(KernelError::DimensionMismatch {
                    expected: n,
                    found: b.ncols(),
                });
            }
            // X op(T) = B  <=>  op(T)ᵀ Xᵀ = Bᵀ
            let xt = tri_solve(t, &b.transpose(), triangle, Side::Left, !transpose)?;
            Ok(xt.transpose())
        }
    }
}

/// Singular values in descending order.
pub fn singular_values(x: DMatrixView<'_, f64>) -> DVector<f64> {
    SVD::new(x.clone_owned(), false, false).singular_values
}

/// `σ_max / σ_min` from a full SVD; `+∞` when `σ_min` is exactly zero.
pub fn condition_number(x: DMatrixView<'_, f64>) -> Result<f64, KernelError> {
    let (n, k) = x.shape();
    if n == 0 || k == 0 {
        return Err(KernelError::Empty);
    }
    if n < k {
        return Err(KernelError::TooFewRows { rows: n, cols: k });
    }
    let sv = singular_values(x);
    let smax = sv.max();
    let smin = sv.min();
    if smin == 0.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(smax / smin)
    }
}

pub fn frobenius_norm(x: DMatrixView<'_, f64>) -> f64 {
    x.norm()
}

/// Largest singular value; zero for empty input.
pub fn spectral_norm(x: DMatrixView<'_, f64>) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    singular_values(x).max()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn chol_identity() {
        let out = cholesky_flagged(&DenseMatrix::identity(2, 2)).unwrap();
        assert!(!out.breakdown);
        assert_eq!(out.factor, DenseMatrix::identity(2, 2));
    }

    #[test]
    fn chol_two_by_two() {
        let s = dmatrix![4.0, 2.0; 2.0, 5.0];
        let out = cholesky_flagged(&s).unwrap();
        assert!(!out.breakdown);
        let expected = dmatrix![2.0, 1.0; 0.0, 2.0];
        assert!((&out.factor - &expected).norm() < 1e-15);
        // multiply back
        assert!((out.factor.transpose() * &out.factor - s).norm() < 1e-14);
    }

    #[test]
    fn chol_indefinite_flags() {
        let out = cholesky_flagged(&dmatrix![1.0, 2.0; 2.0, 1.0]).unwrap();
        assert!(out.breakdown);
    }

    #[test]
    fn chol_nonfinite_flags() {
        let out = cholesky_flagged(&dmatrix![1.0, f64::NAN; f64::NAN, 1.0]).unwrap();
        assert!(out.breakdown);
    }

    #[test]
    fn chol_rejects_rectangular() {
        assert!(matches!(
            cholesky_flagged(&DenseMatrix::zeros(2, 3)),
            Err(KernelError::NotSquare { .. })
        ));
    }

    #[test]
    fn chol_symmetrizes() {
        let s = dmatrix![4.0, 2.0 + 1e-14; 2.0 - 1e-14, 5.0];
        let out = cholesky_flagged(&s).unwrap();
        assert!((out.factor[(0, 1)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn qr_identity_padded() {
        let mut x = DenseMatrix::zeros(5, 3);
        x.view_mut((0, 0), (3, 3)).fill_with_identity();
        let (q, r) = qr_pos(x.as_view()).unwrap();
        assert!((&q - &x).norm() < 1e-15);
        assert!((r - DenseMatrix::identity(3, 3)).norm() < 1e-15);
    }

    #[test]
    fn qr_single_column() {
        let x = dmatrix![3.0; 4.0];
        let (q, r) = qr_pos(x.as_view()).unwrap();
        assert!((q - dmatrix![0.6; 0.8]).norm() < 1e-15);
        assert!((r[(0, 0)] - 5.0).abs() < 1e-15);
    }

    #[test]
    fn qr_random_reconstructs() {
        let x = random(10, 3, 7);
        let (q, r) = qr_pos(x.as_view()).unwrap();
        let loo = (q.transpose() * &q - DenseMatrix::identity(3, 3)).norm();
        assert!(loo <= 1e-14);
        assert!((&q * &r - &x).norm() <= 1e-14 * x.norm());
        for j in 0..3 {
            assert!(r[(j, j)] >= 0.0);
        }
    }

    #[test]
    fn qr_rejects_wide() {
        assert!(qr_pos(DenseMatrix::zeros(2, 3).as_view()).is_err());
    }

    #[test]
    fn tri_solve_identity() {
        let b = random(3, 2, 1);
        let x = tri_solve(&DenseMatrix::identity(3, 3), &b, Triangle::Upper, Side::Left, false)
            .unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn tri_solve_upper_left() {
        let t = dmatrix![2.0, 1.0; 0.0, 2.0];
        let x = tri_solve(&t, &dmatrix![4.0; 2.0], Triangle::Upper, Side::Left, false).unwrap();
        assert!((x - dmatrix![1.5; 1.0]).norm() < 1e-15);
    }

    #[test]
    fn tri_solve_lower_transposed_multiply_back() {
        let mut t = random(3, 3, 11).lower_triangle();
        for i in 0..3 {
            t[(i, i)] += 2.0;
        }
        let b = random(3, 3, 12);
        let x = tri_solve(&t, &b, Triangle::Lower, Side::Left, true).unwrap();
        assert!((t.transpose() * &x - &b).norm() <= 1e-14);
        let y = tri_solve(&t, &b, Triangle::Lower, Side::Right, false).unwrap();
        assert!((&y * &t - &b).norm() <= 1e-14);
        let z = tri_solve(&t, &b, Triangle::Lower, Side::Right, true).unwrap();
        assert!((&z * t.transpose() - &b).norm() <= 1e-14);
    }

    #[test]
    fn tri_solve_zero_diagonal_is_error() {
        let t = dmatrix![1.0, 1.0; 0.0, 0.0];
        assert!(matches!(
            tri_solve(&t, &dmatrix![1.0; 1.0], Triangle::Upper, Side::Left, false),
            Err(KernelError::SingularFactor { index: 1 })
        ));
    }

    #[test]
    fn condition_numbers() {
        assert!((condition_number(DenseMatrix::identity(3, 3).as_view()).unwrap() - 1.0).abs() < 1e-15);
        let d = dmatrix![10.0, 0.0; 0.0, 1.0];
        assert!((condition_number(d.as_view()).unwrap() - 10.0).abs() < 1e-13);
        let z = dmatrix![1.0, 0.0; 0.0, 0.0];
        assert_eq!(condition_number(z.as_view()).unwrap(), f64::INFINITY);
        assert!(matches!(
            condition_number(DenseMatrix::zeros(0, 0).as_view()),
            Err(KernelError::Empty)
        ));
    }

    #[test]
    fn norms() {
        assert_eq!(frobenius_norm(DenseMatrix::zeros(3, 2).as_view()), 0.0);
        assert_eq!(spectral_norm(DenseMatrix::zeros(3, 2).as_view()), 0.0);
        let i = DenseMatrix::identity(4, 4);
        assert!((frobenius_norm(i.as_view()) - 2.0).abs() < 1e-15);
        assert!((spectral_norm(i.as_view()) - 1.0).abs() < 1e-15);
        let x = random(4, 2, 5);
        let sv = singular_values(x.as_view());
        let f2: f64 = sv.iter().map(|s| s * s).sum();
        assert!((frobenius_norm(x.as_view()).powi(2) - f2).abs() < 1e-14);
    }
}
