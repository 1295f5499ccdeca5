use nalgebra::DMatrixView;

use super::{Modification, SolverError};
use crate::arnoldi::ArnoldiOutcome;
use crate::kernels::DenseMatrix;
use crate::paradigm::Paradigm;

/// Solution of the projected system after `k` iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleResult {
    /// `Ξ_k`, compact `kb×b`.
    pub xi: DenseMatrix,
    /// `Ê_kᵀ Ξ_k`.
    pub cospatial: DenseMatrix,
    /// `[M; −H_{k+1,k}]`, compact `(k+1)b×b`.
    pub u_gen: DenseMatrix,
    /// `‖𝒱_{k+1} U_gen · cospatial · C_accum‖_F`.
    pub res_est: f64,
}

fn square_and_sub(h: DMatrixView<'_, f64>, b: usize) -> (DenseMatrix, DenseMatrix) {
    let c = h.ncols();
    (h.view((0, 0), (c, c)).clone_owned(), h.view((c, c - b), (b, b)).clone_owned())
}

/// Generator `M` of the harmonic modification: `H_kᵀ M = Ê_k H_{k+1,k}ᵀ H_{k+1,k}`.
///
/// `h` is the compact `(k+1)b × kb` Hessenberg matrix.
pub fn harmonic_modification(h: DMatrixView<'_, f64>, b: usize) -> Result<DenseMatrix, SolverError> {
    let (hk, sub) = square_and_sub(h, b);
    let kb = hk.ncols();
    let mut rhs = DenseMatrix::zeros(kb, b);
    rhs.view_mut((kb - b, 0), (b, b)).copy_from(&sub.tr_mul(&sub));
    let m = hk.transpose().lu().solve(&rhs).ok_or(SolverError::SingularProjection)?;
    if m.iter().any(|v| !v.is_finite()) {
        return Err(SolverError::SingularProjection);
    }
    Ok(m)
}

/// Solves `(H_k + M Ê_kᵀ) Ξ = Ê_1 rhs_factor` on a compact Hessenberg matrix.
pub fn project(
    paradigm: Paradigm,
    h: DMatrixView<'_, f64>,
    modification: Modification,
    rhs_factor: &DenseMatrix,
    c_accum: &DenseMatrix,
) -> Result<CycleResult, SolverError> {
    let b = paradigm.coeff_size();
    let (mut hk, sub) = square_and_sub(h, b);
    let kb = hk.ncols();
    let m = match modification {
        Modification::None => DenseMatrix::zeros(kb, b),
        Modification::Harmonic => harmonic_modification(h, b)?,
    };
    {
        let mut last = hk.columns_mut(kb - b, b);
        last += &m;
    }
    let mut e1 = DenseMatrix::zeros(kb, b);
    e1.view_mut((0, 0), (b, b)).copy_from(rhs_factor);
    let xi = hk.lu().solve(&e1).ok_or(SolverError::SingularProjection)?;
    if xi.iter().any(|v| !v.is_finite()) {
        return Err(SolverError::SingularProjection);
    }
    let cospatial = xi.view((kb - b, 0), (b, b)).clone_owned();
    let mut u_gen = DenseMatrix::zeros(kb + b, b);
    u_gen.view_mut((0, 0), (kb, b)).copy_from(&m);
    u_gen.view_mut((kb, 0), (b, b)).copy_from(&(-sub));
    let res_est = paradigm.coeff_frobenius(&(&u_gen * &cospatial * c_accum));
    Ok(CycleResult { xi, cospatial, u_gen, res_est })
}

/// Projected solve over a completed Arnoldi outcome.
pub fn bfom_cycle(
    outcome: &ArnoldiOutcome,
    modification: Modification,
    rhs_factor: &DenseMatrix,
    c_accum: &DenseMatrix,
) -> Result<CycleResult, SolverError> {
    if outcome.completed == 0 {
        return Err(SolverError::EmptyCycle);
    }
    project(outcome.h.paradigm(), outcome.h.compact().as_view(), modification, rhs_factor, c_accum)
}
