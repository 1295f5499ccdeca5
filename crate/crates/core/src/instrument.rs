//! Counters for synchronization points and operator applications, plus the
//! per-iteration convergence record.

use serde::{Deserialize, Serialize};

/// Origin of a synchronization point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyncSource {
    InnerProd,
    IntraOrtho,
}

/// Integer tallies of communication-relevant kernels for one solve.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub sync_inner_prod: u64,
    pub sync_intra_ortho: u64,
    /// Applications of the operator to one `n×s` block.
    pub matvec: u64,
    /// Products involving the stored basis panel.
    pub basis_eval: u64,
}

impl Counters {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn sync(&self) -> u64 {
        self.sync_inner_prod + self.sync_intra_ortho
    }

    pub fn count_sync(&mut self, source: SyncSource, cost: u64) {
        match source {
            SyncSource::InnerProd => self.sync_inner_prod += cost,
            SyncSource::IntraOrtho => self.sync_intra_ortho += cost,
        }
    }

    pub fn count_matvec(&mut self) {
        self.matvec += 1;
    }

    pub fn count_basis_eval(&mut self, weight: u64) {
        self.basis_eval += weight;
    }

    /// Adds another tally into this one.
    pub fn merge(&mut self, other: &Counters) {
        self.sync_inner_prod += other.sync_inner_prod;
        self.sync_intra_ortho += other.sync_intra_ortho;
        self.matvec += other.matvec;
        self.basis_eval += other.basis_eval;
    }
}

/// Diagnostics recorded after an Arnoldi iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub cycle: usize,
    /// Global iteration index, starting at 1.
    pub iteration: usize,
    pub relres_est: f64,
    /// Explicit `‖B − AX‖_F / ‖B‖_F`, only when diagnostics are enabled.
    pub relres_true: Option<f64>,
    pub relerr: Option<f64>,
    /// κ([R A𝒱_k]) where `R` is the current cycle's right-hand side.
    pub kappa: Option<f64>,
    pub loo: Option<f64>,
}

/// Wall-clock statistics over repeated runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub wall_time_s: f64,
    pub repetitions: usize,
}

impl RunStats {
    pub const DEFAULT_REPETITIONS: usize = 5;

    /// Mean of the supplied timings. Returns `None` for an empty slice.
    pub fn from_timings(timings: &[f64]) -> Option<Self> {
        if timings.is_empty() {
            return None;
        }
        Some(Self {
            wall_time_s: timings.iter().sum::<f64>() / timings.len() as f64,
            repetitions: timings.len(),
        })
    }
}
