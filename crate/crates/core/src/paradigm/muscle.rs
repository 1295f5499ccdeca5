//! Intraorthogonalization routines.

use nalgebra::DMatrixView;

use super::{Paradigm, ParadigmError, ParadigmKind};
use crate::instrument::{Counters, SyncSource};
use crate::kernels::{cholesky_flagged, qr_pos, tri_solve, DenseMatrix, Side, Triangle, EPS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Muscle {
    CholQR,
    HouseQR,
    /// Column-wise modified Gram-Schmidt with a Schreiber-Van Loan `T`.
    MgsSvl,
    /// Column-wise modified Gram-Schmidt with lower-triangular solves.
    MgsLts,
    /// Scaled Frobenius normalization, the only global muscle.
    GlobalNorm,
}

impl Muscle {
    pub fn is_legal_for(self, kind: ParadigmKind) -> bool {
        match kind {
            ParadigmKind::Global => self == Muscle::GlobalNorm,
            ParadigmKind::Classical => self != Muscle::GlobalNorm,
        }
    }

    /// Synchronization points charged for one call on an `n×s` block.
    pub fn sync_cost(self, s: usize) -> u64 {
        match self {
            Muscle::MgsSvl | Muscle::MgsLts => (3 * s.max(1) - 2) as u64,
            _ => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Muscle::CholQR => "cholqr",
            Muscle::HouseQR => "houseqr",
            Muscle::MgsSvl => "mgs-svl",
            Muscle::MgsLts => "mgs-lts",
            Muscle::GlobalNorm => "glnorm",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        Some(match s.to_ascii_lowercase().as_str() {
            "cholqr" => Muscle::CholQR,
            "houseqr" => Muscle::HouseQR,
            "mgs-svl" | "mgssvl" => Muscle::MgsSvl,
            "mgs-lts" | "mgslts" => Muscle::MgsLts,
            "glnorm" | "global" | "gl" => Muscle::GlobalNorm,
            _ => return None,
        })
    }
}

/// Output of an intraorthogonalization: `X = Q R` with `⟨Q, Q⟩_𝕊 = I`.
#[derive(Debug, Clone)]
pub struct IOResult {
    pub q: DenseMatrix,
    /// Compact scaling quotient (`s×s` classical, `1×1` global).
    pub r: DenseMatrix,
    /// Auxiliary `T` from the column-wise MGS muscles.
    pub t: Option<DenseMatrix>,
    pub breakdown: bool,
    /// The input block was exactly zero.
    pub zero_input: bool,
}

impl IOResult {
    fn failed(x: DMatrixView<'_, f64>, b: usize, zero_input: bool) -> Self {
        Self {
            q: x.clone_owned(),
            r: DenseMatrix::zeros(b, b),
            t: None,
            breakdown: true,
            zero_input,
        }
    }
}

/// Block normalization `X = Q R` with the given muscle.
pub fn intra_ortho(
    paradigm: Paradigm,
    muscle: Muscle,
    x: DMatrixView<'_, f64>,
    counters: &mut Counters,
) -> Result<IOResult, ParadigmError> {
    if !muscle.is_legal_for(paradigm.kind) {
        return Err(ParadigmError::IllegalMuscle { muscle, kind: paradigm.kind });
    }
    let s = paradigm.s;
    if x.ncols() != s {
        return Err(ParadigmError::RaggedPanel { cols: x.ncols(), s });
    }
    if x.nrows() < s {
        return Err(crate::kernels::KernelError::TooFewRows { rows: x.nrows(), cols: s }.into());
    }
    counters.count_sync(SyncSource::IntraOrtho, muscle.sync_cost(s));
    let xnorm = x.norm();
    let b = paradigm.coeff_size();
    if !xnorm.is_finite() {
        return Ok(IOResult::failed(x, b, false));
    }
    if xnorm == 0.0 {
        return Ok(IOResult::failed(x, b, true));
    }
    let out = match muscle {
        Muscle::GlobalNorm => {
            let alpha = xnorm / (s as f64).sqrt();
            IOResult {
                q: x / alpha,
                r: DenseMatrix::from_element(1, 1, alpha),
                t: None,
                breakdown: false,
                zero_input: false,
            }
        }
        Muscle::CholQR => {
            let chol = cholesky_flagged(&x.tr_mul(&x))?;
            if chol.breakdown {
                IOResult::failed(x, b, false)
            } else {
                let q = tri_solve(&chol.factor, &x.clone_owned(), Triangle::Upper, Side::Right, false)?;
                IOResult { q, r: chol.factor, t: None, breakdown: false, zero_input: false }
            }
        }
        Muscle::HouseQR => {
            let (q, r) = qr_pos(x)?;
            let tiny = (0..s).any(|j| !(r[(j, j)] > EPS * xnorm));
            IOResult { q, r, t: None, breakdown: tiny, zero_input: false }
        }
        Muscle::MgsSvl | Muscle::MgsLts => mgs_columns(x, muscle == Muscle::MgsSvl),
    };
    if !out.breakdown && out.q.iter().any(|v| !v.is_finite()) {
        return Ok(IOResult::failed(x, b, false));
    }
    Ok(out)
}

/// Column-wise low-sync MGS. The caller charges `3s − 2` syncs: one norm for
/// the first column, then an inner product, a norm and a second inner product
/// for every later column.
fn mgs_columns(x: DMatrixView<'_, f64>, svl: bool) -> IOResult {
    let (n, s) = x.shape();
    let xnorm = x.norm();
    let mut q = DenseMatrix::zeros(n, s);
    let mut r = DenseMatrix::zeros(s, s);
    let mut t = DenseMatrix::identity(s, s);
    let fail = || IOResult::failed(x, s, false);

    let rho = x.column(0).norm();
    if !(rho > EPS * xnorm) {
        return fail();
    }
    q.set_column(0, &(x.column(0) / rho));
    r[(0, 0)] = rho;

    for j in 1..s {
        let qj = q.columns(0, j).clone_owned();
        let y = qj.tr_mul(&x.column(j)).into_owned();
        let tj = t.view((0, 0), (j, j)).clone_owned();
        let ycol = DenseMatrix::from_column_slice(j, 1, y.as_slice());
        let h = if svl {
            tj.transpose() * &ycol
        } else {
            match tri_solve(&tj, &ycol, Triangle::Upper, Side::Left, true) {
                Ok(h) => h,
                Err(_) => return fail(),
            }
        };
        let w = x.column(j) - &qj * &h;
        let rho = w.norm();
        if !(rho > EPS * xnorm) {
            return fail();
        }
        let qn = w / rho;
        let z = qj.tr_mul(&qn);
        q.set_column(j, &qn);
        r.view_mut((0, j), (j, 1)).copy_from(&h);
        r[(j, j)] = rho;
        let tcol = if svl { -(&tj * &z) } else { z };
        t.view_mut((0, j), (j, 1)).copy_from(&tcol);
    }
    IOResult { q, r, t: Some(t), breakdown: false, zero_input: false }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, k: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(n, k, |_, _| rng.random_range(-1.0..1.0))
    }

    fn loo(q: &DenseMatrix) -> f64 {
        crate::kernels::spectral_norm((DenseMatrix::identity(q.ncols(), q.ncols()) - q.tr_mul(q)).as_view())
    }

    #[test]
    fn global_norm_example() {
        let x = dmatrix![2.0, 0.0; 0.0, 0.0; 0.0, 0.0];
        let io = intra_ortho(Paradigm::global(2), Muscle::GlobalNorm, x.as_view(), &mut Counters::new()).unwrap();
        assert!((io.r[(0, 0)] - 2f64.sqrt()).abs() < 1e-15);
        assert!((&io.q - &x / 2f64.sqrt()).norm() < 1e-15);
    }

    #[test]
    fn cholqr_on_orthonormal_input() {
        let (q0, _) = qr_pos(random(15, 3, 1).as_view()).unwrap();
        let io = intra_ortho(Paradigm::classical(3), Muscle::CholQR, q0.as_view(), &mut Counters::new()).unwrap();
        assert!(!io.breakdown);
        assert!((&io.q - &q0).norm() < 1e-14);
        assert!((&io.r - DenseMatrix::identity(3, 3)).norm() < 1e-14);
    }

    #[test]
    fn mgs_matches_householder() {
        let x = random(20, 3, 2);
        let (_, r_ref) = qr_pos(x.as_view()).unwrap();
        for muscle in [Muscle::MgsSvl, Muscle::MgsLts] {
            let mut c = Counters::new();
            let io = intra_ortho(Paradigm::classical(3), muscle, x.as_view(), &mut c).unwrap();
            assert!(!io.breakdown);
            assert!((&io.r - &r_ref).norm() <= 1e-12 * r_ref.norm());
            assert!(loo(&io.q) <= 1e-13);
            assert!((&io.q * &io.r - &x).norm() <= 1e-14 * x.norm());
            assert!(io.t.is_some());
            assert_eq!(c.sync_intra_ortho, 7);
        }
    }

    #[test]
    fn sync_costs() {
        assert_eq!(Muscle::CholQR.sync_cost(5), 1);
        assert_eq!(Muscle::MgsSvl.sync_cost(2), 4);
        assert_eq!(Muscle::MgsLts.sync_cost(10), 28);
        assert_eq!(Muscle::MgsSvl.sync_cost(1), 1);
    }

    #[test]
    fn illegal_pairings() {
        let x = random(6, 2, 3);
        let mut c = Counters::new();
        assert!(intra_ortho(Paradigm::classical(2), Muscle::GlobalNorm, x.as_view(), &mut c).is_err());
        assert!(intra_ortho(Paradigm::global(2), Muscle::CholQR, x.as_view(), &mut c).is_err());
        assert_eq!(c.sync(), 0);
    }

    #[test]
    fn rank_deficient_and_zero_input_flag() {
        let mut x = random(8, 2, 4);
        x.column_mut(1).fill(0.0);
        for muscle in [Muscle::CholQR, Muscle::HouseQR, Muscle::MgsSvl, Muscle::MgsLts] {
            let io = intra_ortho(Paradigm::classical(2), muscle, x.as_view(), &mut Counters::new()).unwrap();
            assert!(io.breakdown, "{muscle:?}");
        }
        let z = DenseMatrix::zeros(8, 2);
        let io = intra_ortho(Paradigm::global(2), Muscle::GlobalNorm, z.as_view(), &mut Counters::new()).unwrap();
        assert!(io.breakdown && io.zero_input);
    }
}
