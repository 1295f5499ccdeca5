//! Block inner products and scaling quotients.
//!
//! A paradigm fixes the coefficient ring 𝕊 of block vectors. Under the
//! classical paradigm coefficients are `s×s` matrices; under the global
//! paradigm they are scalar multiples of `I_s` and are stored as plain scalars.
//! Every coefficient object is therefore a dense matrix partitioned into
//! `b×b` blocks with `b = coeff_size()`, and all skeletons run the same
//! coefficient algebra for both paradigms.

mod muscle;

pub use muscle::{intra_ortho, IOResult, Muscle};

use nalgebra::DMatrixView;
use thiserror::Error;

use crate::instrument::{Counters, SyncSource};
use crate::kernels::{cholesky_flagged, tri_solve, CholOutcome, DenseMatrix, KernelError, Side, Triangle};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParadigmError {
    #[error("panel with {cols} columns is not a multiple of the block width {s}")]
    RaggedPanel { cols: usize, s: usize },
    #[error("row count mismatch: {left} vs {right}")]
    RowMismatch { left: usize, right: usize },
    #[error("muscle {muscle:?} cannot be used under the {kind:?} paradigm")]
    IllegalMuscle { muscle: Muscle, kind: ParadigmKind },
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParadigmKind {
    Classical,
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Paradigm {
    pub kind: ParadigmKind,
    /// Block width.
    pub s: usize,
}

/// Result of a block inner product: a `p×q` grid of coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockGram {
    kind: ParadigmKind,
    s: usize,
    p: usize,
    q: usize,
    payload: DenseMatrix,
}

impl BlockGram {
    pub fn block_rows(&self) -> usize {
        self.p
    }

    pub fn block_cols(&self) -> usize {
        self.q
    }

    /// Compact coefficient matrix: `ps×qs` (classical) or `p×q` (global).
    pub fn payload(&self) -> &DenseMatrix {
        &self.payload
    }

    pub fn into_payload(self) -> DenseMatrix {
        self.payload
    }

    /// Block `(i, j)` in compact form.
    pub fn block(&self, i: usize, j: usize) -> DenseMatrix {
        let b = if self.kind == ParadigmKind::Global { 1 } else { self.s };
        self.payload.view((i * b, j * b), (b, b)).clone_owned()
    }

    /// Full `ps×qs` matrix; global scalars are expanded to `α·I_s`.
    pub fn assemble(&self) -> DenseMatrix {
        Paradigm { kind: self.kind, s: self.s }.expand(&self.payload)
    }
}

impl Paradigm {
    pub fn classical(s: usize) -> Self {
        Self { kind: ParadigmKind::Classical, s }
    }

    pub fn global(s: usize) -> Self {
        Self { kind: ParadigmKind::Global, s }
    }

    pub fn is_global(&self) -> bool {
        self.kind == ParadigmKind::Global
    }

    /// Side length `b` of one coefficient block.
    pub fn coeff_size(&self) -> usize {
        match self.kind {
            ParadigmKind::Classical => self.s,
            ParadigmKind::Global => 1,
        }
    }

    fn blocks_of(&self, cols: usize) -> Result<usize, ParadigmError> {
        if self.s == 0 || !cols.is_multiple_of(self.s) {
            return Err(ParadigmError::RaggedPanel { cols, s: self.s });
        }
        Ok(cols / self.s)
    }

    /// `⟨X, Y⟩_𝕊` for panels of `p` and `q` block vectors. One sync point.
    pub fn inner_prod(
        &self,
        x: DMatrixView<'_, f64>,
        y: DMatrixView<'_, f64>,
        counters: &mut Counters,
    ) -> Result<BlockGram, ParadigmError> {
        if x.nrows() != y.nrows() {
            return Err(ParadigmError::RowMismatch { left: x.nrows(), right: y.nrows() });
        }
        let p = self.blocks_of(x.ncols())?;
        let q = self.blocks_of(y.ncols())?;
        counters.count_sync(SyncSource::InnerProd, 1);
        let full = x.tr_mul(&y);
        let payload = match self.kind {
            ParadigmKind::Classical => full,
            ParadigmKind::Global => {
                let s = self.s;
                DenseMatrix::from_fn(p, q, |i, j| {
                    (0..s).map(|c| full[(i * s + c, j * s + c)]).sum::<f64>() / s as f64
                })
            }
        };
        Ok(BlockGram { kind: self.kind, s: self.s, p, q, payload })
    }

    /// `Σ_i X_i C_ij`: a panel of block vectors times a compact coefficient
    /// matrix. Purely local.
    pub fn combine(&self, panel: DMatrixView<'_, f64>, c: &DenseMatrix) -> DenseMatrix {
        match self.kind {
            ParadigmKind::Classical => panel * c,
            ParadigmKind::Global => {
                let s = self.s;
                let mut out = DenseMatrix::zeros(panel.nrows(), c.ncols() * s);
                for j in 0..c.ncols() {
                    let mut oj = out.columns_mut(j * s, s);
                    for i in 0..c.nrows() {
                        let cij = c[(i, j)];
                        if cij != 0.0 {
                            oj += panel.columns(i * s, s) * cij;
                        }
                    }
                }
                out
            }
        }
    }

    /// `X C⁻¹` for a block vector `X` and an upper-triangular coefficient `C`.
    pub fn div_right(&self, x: DMatrixView<'_, f64>, c: &DenseMatrix) -> Result<DenseMatrix, KernelError> {
        match self.kind {
            ParadigmKind::Classical => tri_solve(c, &x.clone_owned(), Triangle::Upper, Side::Right, false),
            ParadigmKind::Global => {
                let a = c[(0, 0)];
                if a == 0.0 {
                    return Err(KernelError::SingularFactor { index: 0 });
                }
                Ok(x / a)
            }
        }
    }

    /// Cholesky of a coefficient block. For global scalars this is `√α`
    /// with breakdown iff `α ≤ 0`.
    pub fn chol(&self, c: &DenseMatrix) -> CholOutcome {
        cholesky_flagged(c).expect("coefficient blocks are square")
    }

    /// Frobenius norm of `𝒱 C` for a 𝕊-orthonormal `𝒱`, computed from `C`.
    pub fn coeff_frobenius(&self, c: &DenseMatrix) -> f64 {
        match self.kind {
            ParadigmKind::Classical => c.norm(),
            ParadigmKind::Global => (self.s as f64).sqrt() * c.norm(),
        }
    }

    /// Expands a compact coefficient matrix to its full size.
    pub fn expand(&self, c: &DenseMatrix) -> DenseMatrix {
        match self.kind {
            ParadigmKind::Classical => c.clone(),
            ParadigmKind::Global => c.kronecker(&DenseMatrix::identity(self.s, self.s)),
        }
    }

    pub fn label(&self) -> &'static str {
        match self.kind {
            ParadigmKind::Classical => "cl",
            ParadigmKind::Global => "gl",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::qr_pos;
    use nalgebra::dmatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, k: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(n, k, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn classical_orthonormal_gives_identity() {
        let (q, _) = qr_pos(random(10, 4, 1).as_view()).unwrap();
        let mut c = Counters::new();
        let g = Paradigm::classical(2).inner_prod(q.as_view(), q.as_view(), &mut c).unwrap();
        assert_eq!((g.block_rows(), g.block_cols()), (2, 2));
        assert!((g.payload() - DenseMatrix::identity(4, 4)).norm() < 1e-14);
        assert_eq!(c.sync(), 1);
    }

    #[test]
    fn global_unit_norm_gives_one() {
        let mut x = random(8, 2, 2);
        x /= x.norm() / 2f64.sqrt();
        let g = Paradigm::global(2).inner_prod(x.as_view(), x.as_view(), &mut Counters::new()).unwrap();
        assert_eq!(g.payload().shape(), (1, 1));
        assert!((g.payload()[(0, 0)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn global_is_mean_of_classical_diagonal() {
        let x = random(6, 2, 3);
        let y = random(6, 2, 4);
        let mut c = Counters::new();
        let cl = Paradigm::classical(2).inner_prod(x.as_view(), y.as_view(), &mut c).unwrap();
        let gl = Paradigm::global(2).inner_prod(x.as_view(), y.as_view(), &mut c).unwrap();
        let direct: f64 = (0..6).map(|i| x[(i, 0)] * y[(i, 0)] + x[(i, 1)] * y[(i, 1)]).sum::<f64>() / 2.0;
        let mean_diag = 0.5 * (cl.payload()[(0, 0)] + cl.payload()[(1, 1)]);
        assert!((gl.payload()[(0, 0)] - mean_diag).abs() < 1e-15);
        assert!((gl.payload()[(0, 0)] - direct).abs() < 1e-14);
    }

    #[test]
    fn augmented_inner_product_is_one_sync() {
        let x = random(12, 6, 5);
        let mut c = Counters::new();
        let g = Paradigm::classical(2).inner_prod(x.as_view(), x.columns(4, 2), &mut c).unwrap();
        assert_eq!((g.block_rows(), g.block_cols()), (3, 1));
        assert_eq!(c.sync_inner_prod, 1);
    }

    #[test]
    fn ragged_panel_rejected() {
        let x = random(5, 3, 6);
        assert!(matches!(
            Paradigm::classical(2).inner_prod(x.as_view(), x.as_view(), &mut Counters::new()),
            Err(ParadigmError::RaggedPanel { .. })
        ));
    }

    #[test]
    fn global_combine_matches_expanded_product() {
        let pd = Paradigm::global(2);
        let x = random(7, 6, 7);
        let c = dmatrix![1.0, -2.0; 0.5, 0.0; 3.0, 1.5];
        let direct = &x * pd.expand(&c);
        assert!((pd.combine(x.as_view(), &c) - direct).norm() < 1e-13);
        let gram = pd.inner_prod(x.as_view(), x.as_view(), &mut Counters::new()).unwrap();
        assert_eq!(gram.assemble().shape(), (6, 6));
        assert_eq!(gram.block(1, 2).shape(), (1, 1));
    }

    #[test]
    fn coeff_frobenius_matches_explicit_norm() {
        let pd = Paradigm::global(3);
        let (q, _) = qr_pos(random(20, 6, 8).as_view()).unwrap();
        let c = dmatrix![0.3; -1.2];
        let v = pd.combine(q.as_view(), &c);
        assert!((v.norm() - pd.coeff_frobenius(&c)).abs() < 1e-13);
    }
}
