//! Skeletons with delayed normalization: pass `k` completes iteration `k − 1`.
//!
//! Passes run `k = 1, …, m + 1`. Every pass applies the operator and performs
//! the fused inner product; the statements that only prepare the next pass
//! run after the observer has agreed to continue.

use nalgebra::DMatrixView;

use super::engine::{Ctx, Engine, Finish};
use super::{ArnoldiError, ArnoldiOutcome, Observer};
use crate::kernels::{tri_solve, DenseMatrix, Side, Triangle};

#[derive(Clone, Copy, PartialEq, Eq)]
pub(super) enum Variant {
    Cwy,
    Icwy,
    IroLs,
}

/// `⟨[𝒱_{k−1} U], [U W]⟩` split into `(Y, Z, Ω, P̃)`.
struct Fused {
    y: DenseMatrix,
    z: DenseMatrix,
    omega: DenseMatrix,
    ptilde: DenseMatrix,
}

fn fused(e: &mut Engine<'_, '_>, k: usize, u: &DenseMatrix, w: &DenseMatrix) -> Result<Fused, ArnoldiError> {
    let (s, b) = (e.s, e.b);
    let n = u.nrows();
    let mut left = DenseMatrix::zeros(n, k * s);
    left.columns_mut(0, (k - 1) * s).copy_from(&e.vpanel(k - 1));
    left.columns_mut((k - 1) * s, s).copy_from(u);
    let mut right = DenseMatrix::zeros(n, 2 * s);
    right.columns_mut(0, s).copy_from(u);
    right.columns_mut(s, s).copy_from(w);
    let g = e.ctx.ip(left.as_view(), right.as_view(), 2)?;
    let top = (k - 1) * b;
    Ok(Fused {
        y: g.view((0, 0), (top, b)).clone_owned(),
        z: g.view((0, b), (top, b)).clone_owned(),
        omega: g.view((top, 0), (b, b)).clone_owned(),
        ptilde: g.view((top, b), (b, b)).clone_owned(),
    })
}

/// `C H⁻¹` for a small coefficient matrix `C`.
fn coeff_div(c: &DenseMatrix, h: &DenseMatrix) -> Result<DenseMatrix, ArnoldiError> {
    Ok(tri_solve(h, c, Triangle::Upper, Side::Right, false)?)
}

/// `H⁻ᵀ C`.
fn coeff_solve_t(h: &DenseMatrix, c: &DenseMatrix) -> Result<DenseMatrix, ArnoldiError> {
    Ok(tri_solve(h, c, Triangle::Upper, Side::Left, true)?)
}

fn stack(top: &DenseMatrix, bottom: &DenseMatrix) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(top.nrows() + bottom.nrows(), top.ncols());
    out.rows_mut(0, top.nrows()).copy_from(top);
    out.rows_mut(top.nrows(), bottom.nrows()).copy_from(bottom);
    out
}

pub(super) fn run<'a, 'o>(
    ctx: Ctx<'a>,
    rhs: DMatrixView<'_, f64>,
    m: usize,
    variant: Variant,
    observer: &'o mut Observer<'o>,
) -> Result<ArnoldiOutcome, ArnoldiError> {
    let (mut e, _) = Engine::start(ctx, rhs, m, observer)?;
    let b = e.b;
    let mut t = DenseMatrix::identity((m + 1) * b, (m + 1) * b);
    let mut u = e.v(1).clone_owned();

    // pass 1
    let w = e.ctx.matvec(u.as_view());
    let mut j = e.ctx.ip(u.as_view(), w.as_view(), 1)?;
    if variant != Variant::IroLs {
        e.set_h(1, 1, &j);
    }
    u = &w - e.comb_panel(1, &j, 1);

    for k in 2..=m + 1 {
        let it = k - 1;
        let w = e.ctx.matvec(u.as_view());
        let f = fused(&mut e, k, &u, &w)?;

        let (radicand, reference) = match variant {
            Variant::IroLs => {
                let omega = &f.omega - f.y.tr_mul(&f.y);
                let corrected = &j + &f.y;
                e.set_h(1, it, &corrected);
                let scale = f.omega.norm() + corrected.norm_squared();
                (omega, scale)
            }
            _ => {
                let scale = e.h_col(it, it).norm_squared();
                (f.omega.clone(), scale)
            }
        };
        let column = e.h_col(it, it);
        let chol = e.ctx.pd.chol(&radicand);
        let negligible = e.negligible_radicand(radicand.norm(), reference);
        if chol.breakdown && !negligible {
            return Ok(e.finish(Finish::flagged(it)));
        }
        let invariant = negligible || e.negligible_subdiagonal(&chol.factor, &column);
        let hs = chol.factor;
        if invariant {
            e.mark_invariant(it);
        } else {
            e.set_h(k, it, &hs);
            let vk = match variant {
                Variant::IroLs => {
                    let proj = e.comb_panel(k - 1, &f.y, 1);
                    e.ctx.pd.div_right((&u - proj).as_view(), &hs)?
                }
                _ => e.ctx.pd.div_right(u.as_view(), &hs)?,
            };
            e.set_v(k, &vk);
        }
        if let Some(fin) = e.after_iteration(it, invariant) {
            return Ok(e.finish(fin));
        }

        // preparation of pass k + 1
        match variant {
            Variant::Cwy | Variant::Icwy => {
                let p = coeff_solve_t(&hs, &f.ptilde)?;
                let yh = coeff_div(&f.y, &hs)?;
                let tcol = if variant == Variant::Cwy {
                    -(t.view((0, 0), ((k - 1) * b, (k - 1) * b)) * &yh)
                } else {
                    yh
                };
                t.view_mut((0, (k - 1) * b), ((k - 1) * b, b)).copy_from(&tcol);
                let rhs_col = coeff_div(&stack(&f.z, &p), &hs)?;
                let tk = t.view((0, 0), (k * b, k * b)).clone_owned();
                let hcol = if variant == Variant::Cwy {
                    tk.tr_mul(&rhs_col)
                } else {
                    tri_solve(&tk, &rhs_col, Triangle::Upper, Side::Left, true)?
                };
                e.set_h(1, k, &hcol);
                let wh = e.ctx.pd.div_right(w.as_view(), &hs)?;
                u = wh - e.comb_panel(k, &hcol, 1);
            }
            Variant::IroLs => {
                let p = coeff_solve_t(&hs, &(&f.ptilde - f.y.tr_mul(&f.z)))?;
                let zp = stack(&f.z, &p);
                let lead = e.h_lead(k, k - 1);
                j = coeff_div(&(&zp - lead * &f.y), &hs)?;
                let proj = e.comb_panel(k, &zp, 1);
                u = e.ctx.pd.div_right((&w - proj).as_view(), &hs)?;
            }
        }
    }
    unreachable!("after_iteration ends the loop at iteration m")
}
