//! Compressed sparse row storage and block products.

use nalgebra::DMatrixView;

use super::{DenseMatrix, KernelError};

/// Square sparse matrix in CSR layout.
///
/// Column indices are strictly increasing within each row, `row_ptr[0] == 0`
/// and `row_ptr[n] == nnz`.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from raw CSR arrays, validating the layout invariants.
    pub fn new(
        n: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self, KernelError> {
        if row_ptr.len() != n + 1 || row_ptr[0] != 0 || row_ptr[n] != col_idx.len() {
            return Err(KernelError::InvalidCsr("row pointer array is inconsistent".into()));
        }
        if col_idx.len() != values.len() {
            return Err(KernelError::InvalidCsr("index and value arrays differ in length".into()));
        }
        for i in 0..n {
            if row_ptr[i] > row_ptr[i + 1] {
                return Err(KernelError::InvalidCsr(format!("row pointer decreases at row {i}")));
            }
            let cols = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(KernelError::InvalidCsr(format!("columns not strictly increasing in row {i}")));
            }
            if cols.last().is_some_and(|&c| c >= n) {
                return Err(KernelError::InvalidCsr(format!("column index out of range in row {i}")));
            }
        }
        Ok(Self { n, row_ptr, col_idx, values })
    }

    /// Assembles from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self, KernelError> {
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        if let Some(&(i, j, _)) = sorted.iter().find(|(i, j, _)| *i >= n || *j >= n) {
            return Err(KernelError::InvalidCsr(format!("entry ({i}, {j}) outside a {n}x{n} matrix")));
        }
        sorted.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in sorted {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            col_idx.push(j);
            values.push(v);
            row_ptr[i + 1] += 1;
            last = Some((i, j));
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self::new(n, row_ptr, col_idx, values)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_dense(a: &DenseMatrix) -> Result<Self, KernelError> {
        if a.nrows() != a.ncols() {
            return Err(KernelError::NotSquare { rows: a.nrows(), cols: a.ncols() });
        }
        let n = a.nrows();
        let mut trip = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if a[(i, j)] != 0.0 {
                    trip.push((i, j, a[(i, j)]));
                }
            }
        }
        Self::from_triplets(n, &trip)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    /// Entry `(i, j)`, zero when outside the pattern.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map(|k| vals[k]).unwrap_or(0.0)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut a = DenseMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                a[(i, j)] = v;
            }
        }
        a
    }

    pub fn transpose(&self) -> Self {
        let mut trip = Vec::with_capacity(self.nnz());
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                trip.push((j, i, v));
            }
        }
        Self::from_triplets(self.n, &trip).expect("transpose of a valid matrix is valid")
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `y = A x` into a preallocated output block.
    fn mul_into(&self, x: DMatrixView<'_, f64>, y: &mut DenseMatrix) {
        for c in 0..x.ncols() {
            let xc = x.column(c);
            for i in 0..self.n {
                let mut acc = 0.0;
                for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                    acc += self.values[k] * xc[self.col_idx[k]];
                }
                y[(i, c)] = acc;
            }
        }
    }
}

/// `A X` for an `n×s` block `X`.
///
/// Pure function: operator-application counting is done by the caller
/// through [`crate::instrument::Counters`].
pub fn spmv_block(a: &CsrMatrix, x: DMatrixView<'_, f64>) -> Result<DenseMatrix, KernelError> {
    if x.nrows() != a.n {
        return Err(KernelError::DimensionMismatch { expected: a.n, found: x.nrows() });
    }
    let mut y = DenseMatrix::zeros(a.n, x.ncols());
    a.mul_into(x, &mut y);
    Ok(y)
}

/// A linear operator acting on `n×s` block vectors.
pub trait BlockOperator: Sync {
    fn dim(&self) -> usize;

    /// Applies the operator to a block with `dim()` rows.
    ///
    /// Panics if the row count does not match.
    fn apply(&self, x: DMatrixView<'_, f64>) -> DenseMatrix;
}

impl BlockOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: DMatrixView<'_, f64>) -> DenseMatrix {
        spmv_block(self, x).expect("operator applied to block with wrong row count")
    }
}

impl BlockOperator for DenseMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: DMatrixView<'_, f64>) -> DenseMatrix {
        assert_eq!(x.nrows(), self.ncols(), "operator applied to block with wrong row count");
        self * x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn tridiag3() -> CsrMatrix {
        CsrMatrix::from_dense(&dmatrix![-1.0, 1.0, 0.0; 1.0, -2.0, 1.0; 0.0, 1.0, -3.0]).unwrap()
    }

    #[test]
    fn identity_product() {
        let x = dmatrix![1.0, 2.0; 3.0, 4.0; 5.0, 6.0];
        assert_eq!(spmv_block(&CsrMatrix::identity(3), x.as_view()).unwrap(), x);
    }

    #[test]
    fn tridiag_first_column() {
        let e1 = dmatrix![1.0; 0.0; 0.0];
        let y = spmv_block(&tridiag3(), e1.as_view()).unwrap();
        assert_eq!(y, dmatrix![-1.0; 1.0; 0.0]);
    }

    #[test]
    fn zero_block() {
        let y = spmv_block(&tridiag3(), DenseMatrix::zeros(3, 2).as_view()).unwrap();
        assert_eq!(y, DenseMatrix::zeros(3, 2));
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            spmv_block(&tridiag3(), DenseMatrix::zeros(4, 1).as_view()),
            Err(KernelError::DimensionMismatch { expected: 3, found: 4 })
        ));
    }

    #[test]
    fn triplets_sum_duplicates_and_validate() {
        let a = CsrMatrix::from_triplets(2, &[(0, 0, 1.0), (1, 1, 2.0), (0, 0, 0.5)]).unwrap();
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.get(0, 0), 1.5);
        assert!(CsrMatrix::from_triplets(2, &[(2, 0, 1.0)]).is_err());
        assert!(CsrMatrix::new(2, vec![0, 1, 2], vec![1, 0], vec![1.0, 1.0]).is_ok());
        assert!(CsrMatrix::new(2, vec![0, 2, 2], vec![1, 0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn dense_roundtrip_and_transpose() {
        let d = dmatrix![1.0, 0.0, 2.0; 0.0, 3.0, 0.0; 4.0, 0.0, 5.0];
        let a = CsrMatrix::from_dense(&d).unwrap();
        assert_eq!(a.to_dense(), d);
        assert_eq!(a.transpose().to_dense(), d.transpose());
    }
}
