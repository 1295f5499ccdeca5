use nalgebra::DMatrixView;

use super::engine::{Ctx, Engine, Finish};
use super::{ArnoldiError, ArnoldiOutcome, Observer};
use crate::kernels::{tri_solve, DenseMatrix, Side, Triangle};

/// How the auxiliary `𝒯` corrects the projection coefficients.
#[derive(Clone, Copy, PartialEq, Eq)]
pub(super) enum Variant {
    /// `H = 𝒯ᵀ Y`, `𝒯_{1:k,k+1} = −𝒯 Z T_{k+1,k+1}`.
    Svl,
    /// `H = 𝒯⁻ᵀ Y`, `𝒯_{1:k,k+1} = Z T_{k+1,k+1}`.
    Lts,
}

/// `T_{kk}` from an IO result; the identity for muscles without `T`.
fn diag_t(t: Option<DenseMatrix>, b: usize) -> DenseMatrix {
    match t {
        Some(t) if t.nrows() == b => t,
        _ => DenseMatrix::identity(b, b),
    }
}

pub(super) fn run<'a, 'o>(
    ctx: Ctx<'a>,
    rhs: DMatrixView<'_, f64>,
    m: usize,
    variant: Variant,
    observer: &'o mut Observer<'o>,
) -> Result<ArnoldiOutcome, ArnoldiError> {
    let (mut e, io) = Engine::start(ctx, rhs, m, observer)?;
    let b = e.b;
    let mut t = DenseMatrix::identity((m + 1) * b, (m + 1) * b);
    t.view_mut((0, 0), (b, b)).copy_from(&diag_t(io.t, b));
    for k in 1..=m {
        let w = e.matvec_v(k);
        let y = e.ip_panel(k, w.as_view(), 1)?;
        let tk = t.view((0, 0), (k * b, k * b)).clone_owned();
        let hcol = match variant {
            Variant::Svl => tk.tr_mul(&y),
            Variant::Lts => tri_solve(&tk, &y, Triangle::Upper, Side::Left, true)?,
        };
        e.set_h(1, k, &hcol);
        let proj = e.comb_panel(k, &hcol, 1);
        let x = w - proj;
        let io = e.ctx.io(x.as_view())?;
        let invariant = if io.breakdown {
            let scale = e.ctx.pd.coeff_frobenius(&hcol).powi(2);
            if !(io.zero_input || e.negligible_radicand(x.norm_squared(), scale)) {
                return Ok(e.finish(Finish::flagged(k)));
            }
            true
        } else {
            e.negligible_subdiagonal(&io.r, &hcol)
        };
        if invariant {
            e.mark_invariant(k);
        } else {
            e.set_v(k + 1, &io.q);
            e.set_h(k + 1, k, &io.r);
            let tkk = diag_t(io.t, b);
            let z = e.ip_panel_v(k, k + 1, 1)?;
            let tcol = match variant {
                Variant::Svl => -(&tk * &z * &tkk),
                Variant::Lts => &z * &tkk,
            };
            t.view_mut((0, k * b), (k * b, b)).copy_from(&tcol);
            t.view_mut((k * b, k * b), (b, b)).copy_from(&tkk);
        }
        if let Some(f) = e.after_iteration(k, invariant) {
            return Ok(e.finish(f));
        }
    }
    unreachable!("after_iteration ends the loop at k = m")
}
