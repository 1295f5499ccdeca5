//! Shared state and counted primitives for the skeletons.

use nalgebra::DMatrixView;

use super::{ArnoldiError, ArnoldiOutcome, ArnoldiView, BlockHessenberg, Control, KrylovBasis, Observer};
use crate::instrument::Counters;
use crate::kernels::{BlockOperator, DenseMatrix, EPS};
use crate::paradigm::{intra_ortho, IOResult, Muscle, Paradigm};

/// Relative size below which a new subdiagonal block is treated as zero.
const INVARIANT_TOL: f64 = 1e-12;
/// A flagged radicand this small relative to its reference is roundoff.
const RADICAND_TOL: f64 = 100.0 * EPS;

/// Counted operator applications, inner products and block normalizations.
pub(crate) struct Ctx<'a> {
    pub op: &'a dyn BlockOperator,
    pub pd: Paradigm,
    pub muscle: Muscle,
    pub counters: &'a mut Counters,
}

impl Ctx<'_> {
    pub fn matvec(&mut self, x: DMatrixView<'_, f64>) -> DenseMatrix {
        self.counters.count_matvec();
        self.op.apply(x)
    }

    /// Inner product; `weight` is the basis-evaluation charge.
    pub fn ip(
        &mut self,
        x: DMatrixView<'_, f64>,
        y: DMatrixView<'_, f64>,
        weight: u64,
    ) -> Result<DenseMatrix, ArnoldiError> {
        self.counters.count_basis_eval(weight);
        Ok(self.pd.inner_prod(x, y, self.counters)?.into_payload())
    }

    pub fn comb(&mut self, panel: DMatrixView<'_, f64>, c: &DenseMatrix, weight: u64) -> DenseMatrix {
        self.counters.count_basis_eval(weight);
        self.pd.combine(panel, c)
    }

    pub fn io(&mut self, x: DMatrixView<'_, f64>) -> Result<IOResult, ArnoldiError> {
        Ok(intra_ortho(self.pd, self.muscle, x, self.counters)?)
    }
}

pub(crate) struct Finish {
    pub completed: usize,
    pub breakdown_at: Option<usize>,
    pub invariant: bool,
}

impl Finish {
    pub fn done(k: usize) -> Self {
        Self { completed: k, breakdown_at: None, invariant: false }
    }

    pub fn flagged(k: usize) -> Self {
        Self { completed: k - 1, breakdown_at: Some(k), invariant: false }
    }
}

pub(crate) struct Engine<'a, 'o> {
    pub ctx: Ctx<'a>,
    pub s: usize,
    pub b: usize,
    pub m: usize,
    /// `V_1, …, V_{m+1}` side by side.
    pub basis: DenseMatrix,
    /// Compact `H`, `(m+1)b × mb`.
    pub h: DenseMatrix,
    pub b_factor: DenseMatrix,
    observer: &'o mut Observer<'o>,
}

impl<'a, 'o> Engine<'a, 'o> {
    /// Normalizes the right-hand side into `V_1` and returns the raw IO result.
    pub fn start(
        mut ctx: Ctx<'a>,
        rhs: DMatrixView<'_, f64>,
        m: usize,
        observer: &'o mut Observer<'o>,
    ) -> Result<(Self, IOResult), ArnoldiError> {
        let n = ctx.op.dim();
        let s = ctx.pd.s;
        if rhs.nrows() != n {
            return Err(ArnoldiError::DimensionMismatch { expected: n, found: rhs.nrows() });
        }
        if rhs.ncols() != s {
            return Err(ArnoldiError::DimensionMismatch { expected: s, found: rhs.ncols() });
        }
        if m == 0 {
            return Err(ArnoldiError::ZeroBasisSize);
        }
        let b = ctx.pd.coeff_size();
        let io = ctx.io(rhs)?;
        if io.breakdown {
            return Err(ArnoldiError::RhsBreakdown);
        }
        let mut basis = DenseMatrix::zeros(n, (m + 1) * s);
        basis.columns_mut(0, s).copy_from(&io.q);
        let engine = Self {
            ctx,
            s,
            b,
            m,
            basis,
            h: DenseMatrix::zeros((m + 1) * b, m * b),
            b_factor: io.r.clone(),
            observer,
        };
        Ok((engine, io))
    }

    /// First `k` basis blocks.
    pub fn vpanel(&self, k: usize) -> DMatrixView<'_, f64> {
        self.basis.columns(0, k * self.s)
    }

    /// Basis block `j` (1-based, as in the recurrences).
    pub fn v(&self, j: usize) -> DMatrixView<'_, f64> {
        self.basis.columns((j - 1) * self.s, self.s)
    }

    pub fn set_v(&mut self, j: usize, q: &DenseMatrix) {
        let s = self.s;
        self.basis.columns_mut((j - 1) * s, s).copy_from(q);
    }

    /// `A V_j`, counted.
    pub fn matvec_v(&mut self, j: usize) -> DenseMatrix {
        let s = self.s;
        self.ctx.matvec(self.basis.columns((j - 1) * s, s))
    }

    /// `⟨V_j, Y⟩`.
    pub fn ip_v(&mut self, j: usize, y: DMatrixView<'_, f64>, weight: u64) -> Result<DenseMatrix, ArnoldiError> {
        let s = self.s;
        self.ctx.ip(self.basis.columns((j - 1) * s, s), y, weight)
    }

    /// `⟨𝒱_k, Y⟩`.
    pub fn ip_panel(&mut self, k: usize, y: DMatrixView<'_, f64>, weight: u64) -> Result<DenseMatrix, ArnoldiError> {
        self.ctx.ip(self.basis.columns(0, k * self.s), y, weight)
    }

    /// `⟨𝒱_k, V_j⟩`.
    pub fn ip_panel_v(&mut self, k: usize, j: usize, weight: u64) -> Result<DenseMatrix, ArnoldiError> {
        let s = self.s;
        self.ctx.ip(self.basis.columns(0, k * s), self.basis.columns((j - 1) * s, s), weight)
    }

    /// `𝒱_k C`.
    pub fn comb_panel(&mut self, k: usize, c: &DenseMatrix, weight: u64) -> DenseMatrix {
        self.ctx.comb(self.basis.columns(0, k * self.s), c, weight)
    }

    /// Writes `c` at block position `(i, j)` of `H` (1-based).
    pub fn set_h(&mut self, i: usize, j: usize, c: &DenseMatrix) {
        let b = self.b;
        self.h.view_mut(((i - 1) * b, (j - 1) * b), c.shape()).copy_from(c);
    }

    /// `H_{1:rows, col}` (1-based block indices).
    pub fn h_col(&self, rows: usize, col: usize) -> DenseMatrix {
        let b = self.b;
        self.h.view((0, (col - 1) * b), (rows * b, b)).clone_owned()
    }

    /// `H_{1:rows, 1:cols}`.
    pub fn h_lead(&self, rows: usize, cols: usize) -> DenseMatrix {
        let b = self.b;
        self.h.view((0, 0), (rows * b, cols * b)).clone_owned()
    }

    /// True when `‖H_{k+1,k}‖` is negligible against the projection column.
    pub fn negligible_subdiagonal(&self, sub: &DenseMatrix, column: &DenseMatrix) -> bool {
        sub.norm() <= INVARIANT_TOL * column.norm()
    }

    /// True when a flagged Cholesky radicand (given by its norm) is at
    /// roundoff level relative to `reference`.
    pub fn negligible_radicand(&self, radicand: f64, reference: f64) -> bool {
        radicand <= RADICAND_TOL * reference
    }

    /// Records an exact invariant subspace after iteration `k`.
    pub fn mark_invariant(&mut self, k: usize) {
        let (s, b) = (self.s, self.b);
        self.h.view_mut((k * b, (k - 1) * b), (b, b)).fill(0.0);
        self.basis.columns_mut(k * s, s).fill(0.0);
    }

    /// Hands iteration `k` to the observer; returns how the loop must end,
    /// or `None` to keep going.
    pub fn after_iteration(&mut self, k: usize, invariant: bool) -> Option<Finish> {
        let (s, b) = (self.s, self.b);
        let view = ArnoldiView {
            iteration: k,
            basis: self.basis.columns(0, (k + 1) * s),
            h: self.h.view((0, 0), ((k + 1) * b, k * b)),
            b_factor: &self.b_factor,
            invariant,
        };
        match (self.observer)(&view) {
            Control::Breakdown => Some(Finish::flagged(k)),
            Control::Stop => Some(Finish { completed: k, breakdown_at: None, invariant }),
            Control::Continue if invariant => Some(Finish { completed: k, breakdown_at: None, invariant }),
            Control::Continue if k == self.m => Some(Finish::done(k)),
            Control::Continue => None,
        }
    }

    pub fn finish(self, f: Finish) -> ArnoldiOutcome {
        let (s, b, k) = (self.s, self.b, f.completed);
        ArnoldiOutcome {
            basis: KrylovBasis::new(self.s, self.basis.columns(0, (k + 1) * s).clone_owned()),
            h: BlockHessenberg::new(self.ctx.pd, self.h.view((0, 0), ((k + 1) * b, k * b)).clone_owned()),
            b_factor: self.b_factor,
            completed: k,
            breakdown_at: f.breakdown_at,
            invariant: f.invariant,
        }
    }
}
