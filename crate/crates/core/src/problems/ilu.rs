//! Zero fill-in incomplete LU and the left-preconditioned operator.

use nalgebra::DMatrixView;

use super::ProblemError;
use crate::kernels::{BlockOperator, CsrMatrix, DenseMatrix, KernelError};

/// `A ≈ L U` on the sparsity pattern of `A`. `l` stores the strictly lower
/// part (unit diagonal implied), `u` the upper part with diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Ilu0Factors {
    pub l: CsrMatrix,
    pub u: CsrMatrix,
}

/// IKJ variant of ILU(0). Every row must store its diagonal.
pub fn ilu0(a: &CsrMatrix) -> Result<Ilu0Factors, ProblemError> {
    let n = a.n();
    let rp = a.row_ptr();
    let ci = a.col_idx();
    let mut lu = a.values().to_vec();
    let mut diag = vec![usize::MAX; n];
    for i in 0..n {
        for p in rp[i]..rp[i + 1] {
            if ci[p] == i {
                diag[i] = p;
            }
        }
        if diag[i] == usize::MAX {
            return Err(ProblemError::ZeroPivot { row: i });
        }
    }
    // position of column j in the current row, or MAX
    let mut pos = vec![usize::MAX; n];
    for i in 0..n {
        for p in rp[i]..rp[i + 1] {
            pos[ci[p]] = p;
        }
        for p in rp[i]..diag[i] {
            let k = ci[p];
            let pivot = lu[diag[k]];
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(ProblemError::ZeroPivot { row: k });
            }
            lu[p] /= pivot;
            let lik = lu[p];
            for q in diag[k] + 1..rp[k + 1] {
                let target = pos[ci[q]];
                if target != usize::MAX {
                    lu[target] -= lik * lu[q];
                }
            }
        }
        for p in rp[i]..rp[i + 1] {
            pos[ci[p]] = usize::MAX;
        }
        if lu[diag[i]] == 0.0 || !lu[diag[i]].is_finite() {
            return Err(ProblemError::ZeroPivot { row: i });
        }
    }

    let mut lt = Vec::new();
    let mut ut = Vec::new();
    for i in 0..n {
        for p in rp[i]..rp[i + 1] {
            let j = ci[p];
            if j < i {
                lt.push((i, j, lu[p]));
            } else {
                ut.push((i, j, lu[p]));
            }
        }
    }
    Ok(Ilu0Factors { l: CsrMatrix::from_triplets(n, &lt)?, u: CsrMatrix::from_triplets(n, &ut)? })
}

impl Ilu0Factors {
    pub fn n(&self) -> usize {
        self.l.n()
    }

    /// `U⁻¹ L⁻¹ X`, column by column.
    pub fn solve(&self, x: DMatrixView<'_, f64>) -> DenseMatrix {
        let n = self.n();
        let mut y = x.clone_owned();
        for c in 0..y.ncols() {
            let mut col = y.column_mut(c);
            for i in 0..n {
                let (cols, vals) = self.l.row(i);
                let mut acc = col[i];
                for (&j, &v) in cols.iter().zip(vals) {
                    acc -= v * col[j];
                }
                col[i] = acc;
            }
            for i in (0..n).rev() {
                let (cols, vals) = self.u.row(i);
                let mut acc = col[i];
                let mut d = 0.0;
                for (&j, &v) in cols.iter().zip(vals) {
                    if j == i {
                        d = v;
                    } else {
                        acc -= v * col[j];
                    }
                }
                col[i] = acc / d;
            }
        }
        y
    }
}

/// `x ↦ U⁻¹ L⁻¹ A x`.
#[derive(Debug, Clone)]
pub struct PreconditionedOperator<'a> {
    a: &'a CsrMatrix,
    factors: &'a Ilu0Factors,
}

impl<'a> PreconditionedOperator<'a> {
    /// Preconditioned right-hand side `U⁻¹ L⁻¹ B`.
    pub fn precondition(&self, b: DMatrixView<'_, f64>) -> DenseMatrix {
        self.factors.solve(b)
    }
}

pub fn preconditioned_operator<'a>(
    a: &'a CsrMatrix,
    factors: &'a Ilu0Factors,
) -> Result<PreconditionedOperator<'a>, KernelError> {
    if factors.n() != a.n() {
        return Err(KernelError::DimensionMismatch { expected: a.n(), found: factors.n() });
    }
    Ok(PreconditionedOperator { a, factors })
}

impl BlockOperator for PreconditionedOperator<'_> {
    fn dim(&self) -> usize {
        self.a.n()
    }

    fn apply(&self, x: DMatrixView<'_, f64>) -> DenseMatrix {
        let ax = self.a.apply(x);
        self.factors.solve(ax.as_view())
    }
}
