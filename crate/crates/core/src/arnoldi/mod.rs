//! Block Arnoldi skeletons.
//!
//! Every skeleton builds `𝒱_{k+1}` and `H_{k+1,k}` satisfying
//! `A𝒱_k = 𝒱_{k+1} H_{k+1,k}` and reports numerical breakdown through
//! [`ArnoldiOutcome::breakdown_at`] instead of failing. An observer callback
//! sees each completed iteration and may stop the run early.

mod bmgs;
mod delayed;
mod engine;
mod pythagorean;
mod svl;

use nalgebra::DMatrixView;
use thiserror::Error;

use crate::instrument::Counters;
use crate::kernels::{BlockOperator, DenseMatrix, KernelError};
use crate::paradigm::{intra_ortho, Muscle, Paradigm, ParadigmError};

use engine::Ctx;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArnoldiError {
    #[error("illegal configuration: {0}")]
    IllegalConfiguration(String),
    #[error("the right-hand side block could not be normalized")]
    RhsBreakdown,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("maximum basis size must be at least 1")]
    ZeroBasisSize,
    #[error("intraorthogonalization broke down at block {index}")]
    BlockBreakdown { index: usize },
    #[error(transparent)]
    Paradigm(#[from] ParadigmError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum SkeletonKind {
    Bmgs,
    BcgsPip,
    BcgsPio,
    BmgsSvl,
    BmgsLts,
    BmgsCwy,
    BmgsIcwy,
    BcgsIroLs,
}

impl SkeletonKind {
    pub const ALL: [SkeletonKind; 8] = [
        SkeletonKind::Bmgs,
        SkeletonKind::BcgsPip,
        SkeletonKind::BcgsPio,
        SkeletonKind::BmgsSvl,
        SkeletonKind::BmgsLts,
        SkeletonKind::BmgsCwy,
        SkeletonKind::BmgsIcwy,
        SkeletonKind::BcgsIroLs,
    ];

    pub fn label(self) -> &'static str {
        match self {
            SkeletonKind::Bmgs => "bmgs",
            SkeletonKind::BcgsPip => "bcgs-pip",
            SkeletonKind::BcgsPio => "bcgs-pio",
            SkeletonKind::BmgsSvl => "bmgs-svl",
            SkeletonKind::BmgsLts => "bmgs-lts",
            SkeletonKind::BmgsCwy => "bmgs-cwy",
            SkeletonKind::BmgsIcwy => "bmgs-icwy",
            SkeletonKind::BcgsIroLs => "bcgs-irols",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        let key: String = s.to_ascii_lowercase().chars().filter(|c| c.is_ascii_alphanumeric()).collect();
        SkeletonKind::ALL
            .into_iter()
            .find(|k| k.label().replace('-', "") == key)
    }

    pub fn description(self) -> &'static str {
        match self {
            SkeletonKind::Bmgs => "block modified Gram-Schmidt",
            SkeletonKind::BcgsPip => "block classical Gram-Schmidt, Pythagorean with inner product",
            SkeletonKind::BcgsPio => "block classical Gram-Schmidt, Pythagorean with intraorthogonalization",
            SkeletonKind::BmgsSvl => "low-sync BMGS with Schreiber-Van Loan correction",
            SkeletonKind::BmgsLts => "low-sync BMGS with lower-triangular-solve correction",
            SkeletonKind::BmgsCwy => "one-sync BMGS, compact WY form",
            SkeletonKind::BmgsIcwy => "one-sync BMGS, inverse compact WY form",
            SkeletonKind::BcgsIroLs => "one-sync reorthogonalized BCGS with delayed normalization",
        }
    }

    /// The muscle a skeleton must use under `paradigm`, if it is fixed.
    pub fn forced_muscle(self, paradigm: Paradigm) -> Option<Muscle> {
        if paradigm.is_global() {
            return Some(Muscle::GlobalNorm);
        }
        match self {
            SkeletonKind::BmgsSvl => Some(Muscle::MgsSvl),
            SkeletonKind::BmgsLts => Some(Muscle::MgsLts),
            _ => None,
        }
    }

    /// Checks that `muscle` may be combined with this skeleton and paradigm.
    pub fn validate(self, paradigm: Paradigm, muscle: Muscle) -> Result<(), ArnoldiError> {
        if !muscle.is_legal_for(paradigm.kind) {
            return Err(ArnoldiError::IllegalConfiguration(format!(
                "muscle {} is not available under the {} paradigm",
                muscle.label(),
                paradigm.label()
            )));
        }
        if let Some(forced) = self.forced_muscle(paradigm) {
            if forced != muscle {
                return Err(ArnoldiError::IllegalConfiguration(format!(
                    "{}-{} requires muscle {}, got {}",
                    paradigm.label(),
                    self.label(),
                    forced.label(),
                    muscle.label()
                )));
            }
        }
        Ok(())
    }

    /// True for skeletons whose iteration `k` is finalized in pass `k + 1`.
    pub fn is_delayed(self) -> bool {
        matches!(self, SkeletonKind::BmgsCwy | SkeletonKind::BmgsIcwy | SkeletonKind::BcgsIroLs)
    }
}

/// `n×(k·s)` panel of block vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct KrylovBasis {
    s: usize,
    panel: DenseMatrix,
}

impl KrylovBasis {
    pub fn new(s: usize, panel: DenseMatrix) -> Self {
        assert!(s > 0 && panel.ncols().is_multiple_of(s), "panel width must be a multiple of s");
        Self { s, panel }
    }

    pub fn n(&self) -> usize {
        self.panel.nrows()
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn k_blocks(&self) -> usize {
        self.panel.ncols() / self.s
    }

    pub fn panel(&self) -> &DenseMatrix {
        &self.panel
    }

    /// Block `j`, 1-based.
    pub fn block(&self, j: usize) -> DMatrixView<'_, f64> {
        self.panel.columns((j - 1) * self.s, self.s)
    }

    /// The first `k` blocks.
    pub fn leading(&self, k: usize) -> DMatrixView<'_, f64> {
        self.panel.columns(0, k * self.s)
    }
}

/// Compact `(k+1)b × kb` block upper Hessenberg matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockHessenberg {
    paradigm: Paradigm,
    data: DenseMatrix,
}

impl BlockHessenberg {
    pub fn new(paradigm: Paradigm, data: DenseMatrix) -> Self {
        Self { paradigm, data }
    }

    pub fn paradigm(&self) -> Paradigm {
        self.paradigm
    }

    pub fn m_blocks(&self) -> usize {
        self.data.ncols() / self.paradigm.coeff_size()
    }

    /// Compact storage; global entries stand for multiples of `I_s`.
    pub fn compact(&self) -> &DenseMatrix {
        &self.data
    }

    /// Full `(k+1)s × ks` matrix.
    pub fn full(&self) -> DenseMatrix {
        self.paradigm.expand(&self.data)
    }

    /// Block `(i, j)`, 1-based, compact.
    pub fn block(&self, i: usize, j: usize) -> DenseMatrix {
        let b = self.paradigm.coeff_size();
        self.data.view(((i - 1) * b, (j - 1) * b), (b, b)).clone_owned()
    }

    /// Square part `H_k`.
    pub fn square(&self) -> DenseMatrix {
        let c = self.data.ncols();
        self.data.view((0, 0), (c, c)).clone_owned()
    }

    /// Last subdiagonal block `H_{k+1,k}`.
    pub fn subdiagonal(&self) -> DenseMatrix {
        let b = self.paradigm.coeff_size();
        let c = self.data.ncols();
        self.data.view((c, c - b), (b, b)).clone_owned()
    }
}

/// State of a run after a completed iteration.
pub struct ArnoldiView<'a> {
    pub iteration: usize,
    /// `𝒱_{k+1}`.
    pub basis: DMatrixView<'a, f64>,
    /// Compact `H_{k+1,k}`.
    pub h: DMatrixView<'a, f64>,
    pub b_factor: &'a DenseMatrix,
    /// `H_{k+1,k}` was found to vanish; the run ends after this iteration.
    pub invariant: bool,
}

/// Observer verdict after an iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
    /// Discard this iteration as if the skeleton had flagged it.
    Breakdown,
}

pub type Observer<'a> = dyn FnMut(&ArnoldiView<'_>) -> Control + 'a;

#[derive(Debug, Clone, PartialEq)]
pub struct ArnoldiOutcome {
    /// `𝒱_{k+1}` for `k = completed`.
    pub basis: KrylovBasis,
    pub h: BlockHessenberg,
    /// Scaling quotient of the right-hand side, `rhs = V_1 B`.
    pub b_factor: DenseMatrix,
    pub completed: usize,
    /// Iteration at which a breakdown flag was raised.
    pub breakdown_at: Option<usize>,
    /// The Krylov space became invariant after `completed` iterations.
    pub invariant: bool,
}

impl ArnoldiOutcome {
    /// Iterations attempted, counting a flagged one.
    pub fn attempted(&self) -> usize {
        self.completed + usize::from(self.breakdown_at.is_some())
    }
}

/// Runs `kind` for at most `m` iterations, consulting `observer` after each.
#[allow(clippy::too_many_arguments)]
pub fn arnoldi_observed(
    kind: SkeletonKind,
    op: &dyn BlockOperator,
    rhs: DMatrixView<'_, f64>,
    m: usize,
    paradigm: Paradigm,
    muscle: Muscle,
    counters: &mut Counters,
    observer: &mut Observer<'_>,
) -> Result<ArnoldiOutcome, ArnoldiError> {
    kind.validate(paradigm, muscle)?;
    let ctx = Ctx { op, pd: paradigm, muscle, counters };
    match kind {
        SkeletonKind::Bmgs => bmgs::run(ctx, rhs, m, observer),
        SkeletonKind::BcgsPip => pythagorean::run(ctx, rhs, m, pythagorean::Variant::Pip, observer),
        SkeletonKind::BcgsPio => pythagorean::run(ctx, rhs, m, pythagorean::Variant::Pio, observer),
        SkeletonKind::BmgsSvl => svl::run(ctx, rhs, m, svl::Variant::Svl, observer),
        SkeletonKind::BmgsLts => svl::run(ctx, rhs, m, svl::Variant::Lts, observer),
        SkeletonKind::BmgsCwy => delayed::run(ctx, rhs, m, delayed::Variant::Cwy, observer),
        SkeletonKind::BmgsIcwy => delayed::run(ctx, rhs, m, delayed::Variant::Icwy, observer),
        SkeletonKind::BcgsIroLs => delayed::run(ctx, rhs, m, delayed::Variant::IroLs, observer),
    }
}

/// Runs `kind` for `m` iterations or until breakdown.
pub fn arnoldi(
    kind: SkeletonKind,
    op: &dyn BlockOperator,
    rhs: DMatrixView<'_, f64>,
    m: usize,
    paradigm: Paradigm,
    muscle: Muscle,
    counters: &mut Counters,
) -> Result<ArnoldiOutcome, ArnoldiError> {
    arnoldi_observed(kind, op, rhs, m, paradigm, muscle, counters, &mut |_| Control::Continue)
}

pub fn bmgs_arnoldi(
    op: &dyn BlockOperator,
    rhs: DMatrixView<'_, f64>,
    m: usize,
    paradigm: Paradigm,
    muscle: Muscle,
    counters: &mut Counters,
) -> Result<ArnoldiOutcome, ArnoldiError> {
    arnoldi(SkeletonKind::Bmgs, op, rhs, m, paradigm, muscle, counters)
}

/// BCGS-PIP; `muscle` normalizes the right-hand side only.
pub fn bcgs_pip_arnoldi(
    op: &dyn BlockOperator,
    rhs: DMatrixView<'_, f64>,
    m: usize,
    paradigm: Paradigm,
    muscle: Muscle,
    counters: &mut Counters,
) -> Result<ArnoldiOutcome, ArnoldiError> {
    arnoldi(SkeletonKind::BcgsPip, op, rhs, m, paradigm, muscle, counters)
}

pub fn bcgs_pio_arnoldi(
    op: &dyn BlockOperator,
    rhs: DMatrixView<'_, f64>,
    m: usize,
    paradigm: Paradigm,
    muscle: Muscle,
    counters: &mut Counters,
) -> Result<ArnoldiOutcome, ArnoldiError> {
    arnoldi(SkeletonKind::BcgsPio, op, rhs, m, paradigm, muscle, counters)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SvlVariant {
    Svl,
    Lts,
}

/// BMGS-SVL or BMGS-LTS with the muscle forced by the paradigm.
pub fn bmgs_svl_lts_arnoldi(
    op: &dyn BlockOperator,
    rhs: DMatrixView<'_, f64>,
    m: usize,
    paradigm: Paradigm,
    variant: SvlVariant,
    counters: &mut Counters,
) -> Result<ArnoldiOutcome, ArnoldiError> {
    let kind = match variant {
        SvlVariant::Svl => SkeletonKind::BmgsSvl,
        SvlVariant::Lts => SkeletonKind::BmgsLts,
    };
    let muscle = kind.forced_muscle(paradigm).expect("forced muscle");
    arnoldi(kind, op, rhs, m, paradigm, muscle, counters)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CwyVariant {
    Cwy,
    Icwy,
}

pub fn bmgs_cwy_icwy_arnoldi(
    op: &dyn BlockOperator,
    rhs: DMatrixView<'_, f64>,
    m: usize,
    paradigm: Paradigm,
    muscle: Muscle,
    variant: CwyVariant,
    counters: &mut Counters,
) -> Result<ArnoldiOutcome, ArnoldiError> {
    let kind = match variant {
        CwyVariant::Cwy => SkeletonKind::BmgsCwy,
        CwyVariant::Icwy => SkeletonKind::BmgsIcwy,
    };
    arnoldi(kind, op, rhs, m, paradigm, muscle, counters)
}

pub fn bcgs_iro_ls_arnoldi(
    op: &dyn BlockOperator,
    rhs: DMatrixView<'_, f64>,
    m: usize,
    paradigm: Paradigm,
    muscle: Muscle,
    counters: &mut Counters,
) -> Result<ArnoldiOutcome, ArnoldiError> {
    arnoldi(SkeletonKind::BcgsIroLs, op, rhs, m, paradigm, muscle, counters)
}

/// Block modified Gram-Schmidt QR of `p` block columns: `𝒳 = 𝒬ℛ`.
///
/// `ℛ` is returned in compact form.
pub fn bmgs_qr(
    paradigm: Paradigm,
    muscle: Muscle,
    x: DMatrixView<'_, f64>,
    counters: &mut Counters,
) -> Result<(DenseMatrix, DenseMatrix), ArnoldiError> {
    let s = paradigm.s;
    if s == 0 || !x.ncols().is_multiple_of(s) {
        return Err(ParadigmError::RaggedPanel { cols: x.ncols(), s }.into());
    }
    let p = x.ncols() / s;
    let b = paradigm.coeff_size();
    let mut q = DenseMatrix::zeros(x.nrows(), p * s);
    let mut r = DenseMatrix::zeros(p * b, p * b);
    for k in 0..p {
        let mut w = x.columns(k * s, s).clone_owned();
        for j in 0..k {
            let qj = q.columns(j * s, s);
            let rjk = paradigm.inner_prod(qj, w.as_view(), counters)?.into_payload();
            w -= paradigm.combine(qj, &rjk);
            r.view_mut((j * b, k * b), (b, b)).copy_from(&rjk);
        }
        let io = intra_ortho(paradigm, muscle, w.as_view(), counters)?;
        if io.breakdown {
            return Err(ArnoldiError::BlockBreakdown { index: k + 1 });
        }
        q.columns_mut(k * s, s).copy_from(&io.q);
        r.view_mut((k * b, k * b), (b, b)).copy_from(&io.r);
    }
    Ok((q, r))
}

/// `‖A𝒱_k − 𝒱_{k+1}H_{k+1,k}‖_F`, with uncounted operator applications.
pub fn arnoldi_relation_residual(op: &dyn BlockOperator, paradigm: Paradigm, outcome: &ArnoldiOutcome) -> f64 {
    let k = outcome.completed;
    if k == 0 {
        return 0.0;
    }
    let av = op.apply(outcome.basis.leading(k));
    let vh = paradigm.combine(outcome.basis.leading(k + 1), outcome.h.compact());
    (av - vh).norm()
}
