//! Test problems: generators, Matrix Market files, ILU(0) and reference
//! solutions.

mod direct;
mod ilu;
mod matrix_market;

pub use direct::{direct_solve, rcm_ordering};
pub use ilu::{ilu0, preconditioned_operator, Ilu0Factors, PreconditionedOperator};
pub use matrix_market::{parse_matrix_market, read_matrix_market, write_matrix_market};

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::kernels::{BlockOperator, CsrMatrix, DenseMatrix, KernelError};

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("invalid problem parameters: {0}")]
    Usage(String),
    #[error("I/O error on {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported Matrix Market format: {0}")]
    UnsupportedFormat(String),
    #[error("zero pivot at row {row}")]
    ZeroPivot { row: usize },
    #[error("matrix is singular to working precision")]
    Singular,
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// A linear system `A X = B` with optional reference solution and
/// preconditioner.
#[derive(Debug, Clone)]
pub struct Problem {
    pub name: String,
    pub a: CsrMatrix,
    pub b: DenseMatrix,
    /// Reference solution, present only when it meets the residual target.
    pub x_star: Option<DenseMatrix>,
    pub precond: Option<Ilu0Factors>,
    pub rng_seed: Option<u64>,
}

/// Reference solutions must satisfy `‖B − A X⋆‖_F ≤ X_STAR_TOL · ‖B‖_F`.
pub const X_STAR_TOL: f64 = 1e-10;

impl Problem {
    /// Assembles a problem and computes its reference solution.
    pub fn new(name: impl Into<String>, a: CsrMatrix, b: DenseMatrix, rng_seed: Option<u64>) -> Self {
        let x_star = direct_solve(&a, &b).ok().filter(|x| {
            let r = &b - a.apply(x.as_view());
            r.norm() <= X_STAR_TOL * b.norm()
        });
        Self { name: name.into(), a, b, x_star, precond: None, rng_seed }
    }

    pub fn n(&self) -> usize {
        self.a.n()
    }

    pub fn s(&self) -> usize {
        self.b.ncols()
    }

    /// Attaches an ILU(0) preconditioner.
    pub fn with_ilu0(mut self) -> Result<Self, ProblemError> {
        self.precond = Some(ilu0(&self.a)?);
        Ok(self)
    }

    /// Loads `A` from a Matrix Market file and draws `B` uniformly from `[0, 1)`.
    pub fn from_matrix_market(path: &Path, s: usize, seed: u64) -> Result<Self, ProblemError> {
        let a = read_matrix_market(path)?;
        let name = path.file_stem().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let b = uniform_block(a.n(), s, seed);
        Ok(Self::new(name, a, b, Some(seed)))
    }
}

/// `n×s` block with entries uniform on `[0, 1)` from a ChaCha8 stream.
pub fn uniform_block(n: usize, s: usize, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = DenseMatrix::zeros(n, s);
    for j in 0..s {
        for i in 0..n {
            b[(i, j)] = rng.random::<f64>();
        }
    }
    b
}

/// Tridiagonal `A` with unit off-diagonals and diagonal `−1, −2, …, −n`;
/// `B = [1/√n · 𝟙, (1, 2, …, n)ᵀ]`.
pub fn tridiag(n: usize) -> Result<Problem, ProblemError> {
    if n < 2 {
        return Err(ProblemError::Usage(format!("tridiag needs n >= 2, got {n}")));
    }
    let mut trip = Vec::with_capacity(3 * n);
    for i in 0..n {
        trip.push((i, i, -((i + 1) as f64)));
        if i + 1 < n {
            trip.push((i, i + 1, 1.0));
            trip.push((i + 1, i, 1.0));
        }
    }
    let a = CsrMatrix::from_triplets(n, &trip)?;
    let inv = 1.0 / (n as f64).sqrt();
    let b = DenseMatrix::from_fn(n, 2, |i, j| if j == 0 { inv } else { (i + 1) as f64 });
    Ok(Problem::new(format!("tridiag_{n}"), a, b, None))
}

/// Five-point Laplacian on an `nx×nx` grid with Dirichlet boundary;
/// `B` has uniform `[0, 1)` entries.
pub fn lapl_2d(nx: usize, s: usize, seed: u64) -> Result<Problem, ProblemError> {
    if nx < 2 {
        return Err(ProblemError::Usage(format!("lapl_2d needs nx >= 2, got {nx}")));
    }
    if s == 0 {
        return Err(ProblemError::Usage("block width must be positive".into()));
    }
    let n = nx * nx;
    let idx = |i: usize, j: usize| i * nx + j;
    let mut trip = Vec::with_capacity(5 * n);
    for i in 0..nx {
        for j in 0..nx {
            let r = idx(i, j);
            trip.push((r, r, 4.0));
            if i > 0 {
                trip.push((r, idx(i - 1, j), -1.0));
            }
            if i + 1 < nx {
                trip.push((r, idx(i + 1, j), -1.0));
            }
            if j > 0 {
                trip.push((r, idx(i, j - 1), -1.0));
            }
            if j + 1 < nx {
                trip.push((r, idx(i, j + 1), -1.0));
            }
        }
    }
    let a = CsrMatrix::from_triplets(n, &trip)?;
    let b = uniform_block(n, s, seed);
    Ok(Problem::new(format!("lapl_2d_{nx}"), a, b, Some(seed)))
}
