//! Low-synchronization block Arnoldi variants and restarted block FOM/GMRES
//! solvers with synchronization and operator-application counters.
//!
//! The crate is organized bottom-up:
//!
//! - [`kernels`]: dense factorizations, norms and CSR products.
//! - [`paradigm`]: classical and global block inner products plus the
//!   intraorthogonalization routines ("muscles").
//! - [`arnoldi`]: the block Gram-Schmidt skeletons as block Arnoldi routines.
//! - [`solver`]: restarted, adaptively truncated (modified) block FOM.
//! - [`instrument`]: counters and convergence history.
//! - [`problems`]: test problem generators, Matrix Market I/O, ILU(0) and a
//!   direct solver for reference solutions.

pub mod arnoldi;
pub mod instrument;
pub mod kernels;
pub mod paradigm;
pub mod problems;
pub mod solver;

pub use arnoldi::{ArnoldiOutcome, SkeletonKind};
pub use instrument::{ConvergenceRecord, Counters};
pub use kernels::{BlockOperator, CsrMatrix, DenseMatrix};
pub use paradigm::{Muscle, Paradigm, ParadigmKind};
pub use solver::{solve, solve_with_reference, Modification, SolveResult, SolveStatus, SolverConfig, Stopping};
