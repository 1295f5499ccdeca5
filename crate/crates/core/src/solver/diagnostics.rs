use nalgebra::DMatrixView;

use crate::arnoldi::KrylovBasis;
use crate::instrument::Counters;
use crate::kernels::{condition_number, spectral_norm, BlockOperator, DenseMatrix};
use crate::paradigm::Paradigm;

/// `‖I − ⟨𝒱, 𝒱⟩_𝕊‖₂` with the Gram matrix assembled at full size.
pub fn loss_of_orthogonality(paradigm: Paradigm, basis: &KrylovBasis) -> f64 {
    loo_panel(paradigm, basis.panel().as_view())
}

pub(crate) fn loo_panel(paradigm: Paradigm, panel: DMatrixView<'_, f64>) -> f64 {
    let mut scratch = Counters::new();
    let gram = paradigm
        .inner_prod(panel, panel, &mut scratch)
        .expect("basis panels are block aligned")
        .assemble();
    let n = gram.nrows();
    spectral_norm((DenseMatrix::identity(n, n) - gram).as_view())
}

/// `(‖B − AX‖_F / ‖B‖_F, ‖X − X⋆‖_F / ‖X⋆‖_F)`; operator applications are
/// not counted.
pub fn true_residual_and_error(
    op: &dyn BlockOperator,
    b: &DenseMatrix,
    x: &DenseMatrix,
    x_star: Option<&DenseMatrix>,
) -> (f64, Option<f64>) {
    let r = b - op.apply(x.as_view());
    let relres = r.norm() / b.norm();
    let relerr = x_star.map(|xs| (x - xs).norm() / xs.norm());
    (relres, relerr)
}

/// `κ([R A𝒱_k])` from a cached `A𝒱_k`.
pub(crate) fn krylov_condition(rhs: &DenseMatrix, av: DMatrixView<'_, f64>) -> Option<f64> {
    let mut m = DenseMatrix::zeros(rhs.nrows(), rhs.ncols() + av.ncols());
    m.columns_mut(0, rhs.ncols()).copy_from(rhs);
    m.columns_mut(rhs.ncols(), av.ncols()).copy_from(&av);
    condition_number(m.as_view()).ok()
}
