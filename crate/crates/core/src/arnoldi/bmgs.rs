use nalgebra::DMatrixView;

use super::engine::{Ctx, Engine, Finish};
use super::{ArnoldiError, ArnoldiOutcome, Observer};

pub(super) fn run<'a, 'o>(
    ctx: Ctx<'a>,
    rhs: DMatrixView<'_, f64>,
    m: usize,
    observer: &'o mut Observer<'o>,
) -> Result<ArnoldiOutcome, ArnoldiError> {
    let (mut e, _) = Engine::start(ctx, rhs, m, observer)?;
    for k in 1..=m {
        let mut w = e.matvec_v(k);
        // projection sweep and subtraction sweep
        e.ctx.counters.count_basis_eval(2);
        for j in 1..=k {
            let hjk = e.ip_v(j, w.as_view(), 0)?;
            w -= e.ctx.pd.combine(e.v(j), &hjk);
            e.set_h(j, k, &hjk);
        }
        let column = e.h_col(k, k);
        let io = e.ctx.io(w.as_view())?;
        let invariant = if io.breakdown {
            let scale = e.ctx.pd.coeff_frobenius(&column).powi(2);
            let negligible = io.zero_input || e.negligible_radicand(w.norm_squared(), scale);
            if !negligible {
                return Ok(e.finish(Finish::flagged(k)));
            }
            true
        } else {
            e.negligible_subdiagonal(&io.r, &column)
        };
        if invariant {
            e.mark_invariant(k);
        } else {
            e.set_v(k + 1, &io.q);
            e.set_h(k + 1, k, &io.r);
        }
        if let Some(f) = e.after_iteration(k, invariant) {
            return Ok(e.finish(f));
        }
    }
    unreachable!("after_iteration ends the loop at k = m")
}
