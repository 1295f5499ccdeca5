use nalgebra::DMatrixView;

use super::engine::{Ctx, Engine, Finish};
use super::{ArnoldiError, ArnoldiOutcome, Observer};
use crate::instrument::{Counters, SyncSource};
use crate::kernels::{qr_pos, DenseMatrix};
use crate::paradigm::intra_ortho;

#[derive(Clone, Copy, PartialEq, Eq)]
pub(super) enum Variant {
    /// `Ω = ⟨W, W⟩` from the same fused inner product.
    Pip,
    /// `Ω` from a second, stacked intraorthogonalization.
    Pio,
}

pub(super) fn run<'a, 'o>(
    ctx: Ctx<'a>,
    rhs: DMatrixView<'_, f64>,
    m: usize,
    variant: Variant,
    observer: &'o mut Observer<'o>,
) -> Result<ArnoldiOutcome, ArnoldiError> {
    let (mut e, _) = Engine::start(ctx, rhs, m, observer)?;
    let (s, b) = (e.s, e.b);
    for k in 1..=m {
        let w = e.matvec_v(k);
        let (hcol, radicand, reference) = match variant {
            Variant::Pip => {
                let mut aug = DenseMatrix::zeros(w.nrows(), (k + 1) * s);
                aug.columns_mut(0, k * s).copy_from(&e.vpanel(k));
                aug.columns_mut(k * s, s).copy_from(&w);
                let g = e.ctx.ip(aug.as_view(), w.as_view(), 2)?;
                let hcol = g.rows(0, k * b).clone_owned();
                let omega = g.rows(k * b, b).clone_owned();
                let radicand = &omega - hcol.tr_mul(&hcol);
                (hcol, radicand, omega.norm())
            }
            Variant::Pio => {
                let hcol = e.ip_panel(k, w.as_view(), 1)?;
                let Some((rw, rh)) = stacked_quotients(&mut e, &w, &hcol)? else {
                    return Ok(e.finish(Finish::flagged(k)));
                };
                let wtw = rw.tr_mul(&rw);
                let radicand = &wtw - rh.tr_mul(&rh);
                (hcol, radicand, wtw.norm())
            }
        };
        e.set_h(1, k, &hcol);
        let chol = e.ctx.pd.chol(&radicand);
        let negligible = e.negligible_radicand(radicand.norm(), reference);
        if chol.breakdown && !negligible {
            return Ok(e.finish(Finish::flagged(k)));
        }
        let invariant = negligible || e.negligible_subdiagonal(&chol.factor, &hcol);
        if invariant {
            e.mark_invariant(k);
        } else {
            let proj = e.comb_panel(k, &hcol, 1);
            let next = e.ctx.pd.div_right((w - proj).as_view(), &chol.factor)?;
            e.set_v(k + 1, &next);
            e.set_h(k + 1, k, &chol.factor);
        }
        if let Some(f) = e.after_iteration(k, invariant) {
            return Ok(e.finish(f));
        }
    }
    unreachable!("after_iteration ends the loop at k = m")
}

/// Scaling quotients of `W` and `H_{1:k,k}` from one intraorthogonalization
/// of the block-diagonal object `diag(W, H)`. Only `R_W` and `R_H` are formed;
/// the stacked `Q` is never needed. `None` when the `W` part breaks down.
fn stacked_quotients(
    e: &mut Engine<'_, '_>,
    w: &DenseMatrix,
    hcol: &DenseMatrix,
) -> Result<Option<(DenseMatrix, DenseMatrix)>, ArnoldiError> {
    let pd = e.ctx.pd;
    let muscle = e.ctx.muscle;
    e.ctx.counters.count_sync(SyncSource::IntraOrtho, muscle.sync_cost(2 * pd.s));
    let mut scratch = Counters::new();
    let io = intra_ortho(pd, muscle, w.as_view(), &mut scratch)?;
    if io.breakdown {
        return Ok(None);
    }
    let rh = if pd.is_global() {
        DenseMatrix::from_element(1, 1, hcol.norm())
    } else {
        qr_pos(hcol.as_view())?.1
    };
    Ok(Some((io.r, rh)))
}
