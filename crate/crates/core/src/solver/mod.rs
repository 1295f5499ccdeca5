//! Restarted block FOM and its harmonic (GMRES) modification with adaptive
//! truncation of the basis after a breakdown flag.
//!
//! Each cycle normalizes the current residual generator, runs the configured
//! skeleton and checks the estimated residual after every iteration. The
//! estimate `‖U_gen · cospatial · C_accum‖_F` needs no extra synchronization.
//! When an iteration is flagged, the cycle is truncated to the last safe
//! iteration and the maximum basis size shrinks to that value for the rest
//! of the solve.

mod diagnostics;
mod projected;

pub use diagnostics::{loss_of_orthogonality, true_residual_and_error};
pub use projected::{bfom_cycle, harmonic_modification, project, CycleResult};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arnoldi::{arnoldi_observed, ArnoldiError, ArnoldiView, Control, SkeletonKind};
use crate::instrument::{ConvergenceRecord, Counters};
use crate::kernels::{BlockOperator, DenseMatrix};
use crate::paradigm::{Muscle, Paradigm};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("projected matrix is singular")]
    SingularProjection,
    #[error("cycle completed no iterations")]
    EmptyCycle,
    #[error(transparent)]
    Arnoldi(#[from] ArnoldiError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modification {
    /// Plain block FOM.
    #[default]
    None,
    /// Harmonic modification, giving block GMRES.
    Harmonic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiagnosticsLevel {
    #[default]
    None,
    Cycle,
    Iteration,
}

/// Quantity compared against the tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stopping {
    /// Estimated relative residual `‖R‖_F / ‖B‖_F`.
    #[default]
    Residual,
    /// Relative error `‖X − X⋆‖_F / ‖X⋆‖_F`; needs a reference solution.
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub skeleton: SkeletonKind,
    pub paradigm: Paradigm,
    pub muscle: Muscle,
    pub modification: Modification,
    /// Maximum number of block iterations per cycle.
    pub m: usize,
    /// Tolerance on the quantity selected by `stopping`.
    pub tol: f64,
    pub max_cycles: usize,
    pub diagnostics: DiagnosticsLevel,
    pub stopping: Stopping,
}

pub const DEFAULT_MAX_CYCLES: usize = 50;

impl SolverConfig {
    pub fn new(skeleton: SkeletonKind, paradigm: Paradigm, muscle: Muscle, m: usize, tol: f64) -> Self {
        Self {
            skeleton,
            paradigm,
            muscle,
            modification: Modification::None,
            m,
            tol,
            max_cycles: DEFAULT_MAX_CYCLES,
            diagnostics: DiagnosticsLevel::None,
            stopping: Stopping::Residual,
        }
    }

    pub fn with_stopping(mut self, stopping: Stopping) -> Self {
        self.stopping = stopping;
        self
    }

    pub fn with_modification(mut self, modification: Modification) -> Self {
        self.modification = modification;
        self
    }

    pub fn with_max_cycles(mut self, max_cycles: usize) -> Self {
        self.max_cycles = max_cycles;
        self
    }

    pub fn with_diagnostics(mut self, diagnostics: DiagnosticsLevel) -> Self {
        self.diagnostics = diagnostics;
        self
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if self.m == 0 {
            return Err(SolverError::InvalidConfig("m must be at least 1".into()));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(SolverError::InvalidConfig(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.max_cycles == 0 {
            return Err(SolverError::InvalidConfig("max_cycles must be at least 1".into()));
        }
        if self.paradigm.s == 0 {
            return Err(SolverError::InvalidConfig("block size must be at least 1".into()));
        }
        self.skeleton.validate(self.paradigm, self.muscle)?;
        Ok(())
    }

    /// `gl-bcgs-pip:glnorm`-style label.
    pub fn label(&self) -> String {
        format!("{}-{}:{}", self.paradigm.label(), self.skeleton.label(), self.muscle.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxCyclesExhausted,
    /// The basis size shrank to zero or a residual block could not be
    /// normalized.
    Dead,
}

impl SolveStatus {
    pub fn label(self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxCyclesExhausted => "max_cycles_exhausted",
            SolveStatus::Dead => "dead",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub x: DenseMatrix,
    pub status: SolveStatus,
    pub cycles: usize,
    /// Block iterations over all cycles, flagged attempts included.
    pub iterations: usize,
    pub history: Vec<ConvergenceRecord>,
    pub counters: Counters,
    /// Maximum basis size in effect for each cycle.
    pub m_history: Vec<usize>,
    /// Iterations attempted in each cycle.
    pub cycle_iterations: Vec<usize>,
    /// Last estimated relative residual.
    pub relres_est: f64,
}

/// Solves `A X = B` with the configured method.
pub fn solve(op: &dyn BlockOperator, b: &DenseMatrix, config: &SolverConfig) -> Result<SolveResult, SolverError> {
    solve_with_reference(op, b, config, None)
}

/// As [`solve`]; `x_star` feeds the relative error diagnostic and error-based
/// stopping.
pub fn solve_with_reference(
    op: &dyn BlockOperator,
    b: &DenseMatrix,
    config: &SolverConfig,
    x_star: Option<&DenseMatrix>,
) -> Result<SolveResult, SolverError> {
    config.validate()?;
    let n = op.dim();
    let pd = config.paradigm;
    if b.nrows() != n {
        return Err(SolverError::DimensionMismatch { expected: n, found: b.nrows() });
    }
    if b.ncols() != pd.s {
        return Err(SolverError::DimensionMismatch { expected: pd.s, found: b.ncols() });
    }
    if config.stopping == Stopping::Error && x_star.is_none() {
        return Err(SolverError::InvalidConfig("error-based stopping needs a reference solution".into()));
    }
    let bd = pd.coeff_size();
    let b_norm = b.norm();
    let mut result = SolveResult {
        x: DenseMatrix::zeros(n, pd.s),
        status: SolveStatus::Converged,
        cycles: 0,
        iterations: 0,
        history: Vec::new(),
        counters: Counters::new(),
        m_history: Vec::new(),
        cycle_iterations: Vec::new(),
        relres_est: 0.0,
    };
    if b_norm == 0.0 {
        return Ok(result);
    }
    result.relres_est = 1.0;

    let mut m = config.m;
    let mut c_accum = DenseMatrix::identity(bd, bd);
    let mut rhs = b.clone();
    loop {
        if result.cycles == config.max_cycles {
            result.status = SolveStatus::MaxCyclesExhausted;
            break;
        }
        result.cycles += 1;
        result.m_history.push(m);
        let cycle = result.cycles;
        let base = result.iterations;

        let mut last: Option<CycleResult> = None;
        let cache_cols = if config.diagnostics == DiagnosticsLevel::Iteration { m * pd.s } else { 0 };
        let mut av_cache = DenseMatrix::zeros(n, cache_cols);
        let mut cached = 0;
        let x_now = &result.x;
        let history = &mut result.history;
        let mut observer = |view: &ArnoldiView<'_>| -> Control {
            let r = match project(pd, view.h, config.modification, view.b_factor, &c_accum) {
                Ok(r) => r,
                Err(_) => return Control::Breakdown,
            };
            let rel = r.res_est / b_norm;
            let mut rec = record(cycle, base + view.iteration, rel);
            let k = view.iteration;
            let per_iteration = config.diagnostics == DiagnosticsLevel::Iteration;
            let mut converged = rel <= config.tol;
            if per_iteration || config.stopping == Stopping::Error {
                let vk = view.basis.columns(0, k * pd.s);
                let x_trial = x_now + pd.combine(vk, &(&r.xi * &c_accum));
                if per_iteration {
                    if cached < k {
                        let fresh = op.apply(view.basis.columns(cached * pd.s, (k - cached) * pd.s));
                        av_cache.columns_mut(cached * pd.s, fresh.ncols()).copy_from(&fresh);
                        cached = k;
                    }
                    let blocks = if view.invariant { k } else { k + 1 };
                    fill_diagnostics(
                        &mut rec,
                        (op, b, x_star),
                        &rhs,
                        av_cache.columns(0, k * pd.s),
                        pd,
                        view.basis.columns(0, blocks * pd.s),
                        &x_trial,
                    );
                }
                if config.stopping == Stopping::Error {
                    let err = relative_error(&x_trial, x_star);
                    rec.relerr = Some(err);
                    converged = err <= config.tol;
                }
            }
            history.push(rec);
            last = Some(r);
            if converged {
                Control::Stop
            } else {
                Control::Continue
            }
        };
        let outcome = match arnoldi_observed(
            config.skeleton,
            op,
            rhs.as_view(),
            m,
            pd,
            config.muscle,
            &mut result.counters,
            &mut observer,
        ) {
            Ok(o) => o,
            Err(ArnoldiError::RhsBreakdown) => {
                result.cycle_iterations.push(0);
                result.status = SolveStatus::Dead;
                break;
            }
            Err(e) => return Err(e.into()),
        };
        result.iterations += outcome.attempted();
        result.cycle_iterations.push(outcome.attempted());
        if outcome.breakdown_at.is_some() {
            m = m.min(outcome.completed);
        }
        let Some(r) = last.filter(|_| outcome.completed > 0) else {
            result.status = SolveStatus::Dead;
            break;
        };
        let k = outcome.completed;
        result.x += pd.combine(outcome.basis.leading(k), &(&r.xi * &c_accum));
        result.relres_est = r.res_est / b_norm;
        if config.diagnostics == DiagnosticsLevel::Cycle {
            let av = op.apply(outcome.basis.leading(k));
            let blocks = if outcome.invariant { k } else { k + 1 };
            if let Some(rec) = result.history.last_mut() {
                fill_diagnostics(
                    rec,
                    (op, b, x_star),
                    &rhs,
                    av.as_view(),
                    pd,
                    outcome.basis.leading(blocks),
                    &result.x,
                );
            }
        }
        let done = match config.stopping {
            Stopping::Residual => result.relres_est <= config.tol,
            Stopping::Error => relative_error(&result.x, x_star) <= config.tol,
        };
        if done {
            result.status = SolveStatus::Converged;
            break;
        }
        if m == 0 {
            result.status = SolveStatus::Dead;
            break;
        }
        c_accum = &r.cospatial * &c_accum;
        rhs = pd.combine(outcome.basis.leading(k + 1), &r.u_gen);
    }
    Ok(result)
}

fn relative_error(x: &DenseMatrix, x_star: Option<&DenseMatrix>) -> f64 {
    x_star.map_or(f64::INFINITY, |xs| (x - xs).norm() / xs.norm())
}

fn record(cycle: usize, iteration: usize, relres_est: f64) -> ConvergenceRecord {
    ConvergenceRecord { cycle, iteration, relres_est, relres_true: None, relerr: None, kappa: None, loo: None }
}

fn fill_diagnostics(
    rec: &mut ConvergenceRecord,
    (op, b, x_star): (&dyn BlockOperator, &DenseMatrix, Option<&DenseMatrix>),
    rhs: &DenseMatrix,
    av: nalgebra::DMatrixView<'_, f64>,
    pd: Paradigm,
    basis: nalgebra::DMatrixView<'_, f64>,
    x: &DenseMatrix,
) {
    rec.kappa = diagnostics::krylov_condition(rhs, av);
    rec.loo = Some(diagnostics::loo_panel(pd, basis));
    let (relres, relerr) = true_residual_and_error(op, b, x, x_star);
    rec.relres_true = Some(relres);
    rec.relerr = relerr;
}
