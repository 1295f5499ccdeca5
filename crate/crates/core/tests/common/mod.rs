#![allow(dead_code)]

use lowsync::kernels::{qr_pos, CsrMatrix, DenseMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut r = rng(seed);
    DenseMatrix::from_fn(rows, cols, |_, _| r.random_range(-1.0..1.0))
}

/// `U diag(σ) Vᵀ` with log-spaced singular values from 1 down to `1/kappa`.
pub fn with_condition(rows: usize, cols: usize, kappa: f64, seed: u64) -> DenseMatrix {
    let (u, _) = qr_pos(random_matrix(rows, cols, seed).as_view()).unwrap();
    let (v, _) = qr_pos(random_matrix(cols, cols, seed.wrapping_add(1)).as_view()).unwrap();
    let sigma = DenseMatrix::from_fn(cols, cols, |i, j| {
        if i == j {
            let t = if cols > 1 { i as f64 / (cols - 1) as f64 } else { 0.0 };
            kappa.powf(-t)
        } else {
            0.0
        }
    });
    u * sigma * v.transpose()
}

/// Sparse, diagonally dominant, nonsymmetric matrix with a random pattern.
pub fn random_sparse(n: usize, per_row: usize, seed: u64) -> CsrMatrix {
    let mut r = rng(seed);
    let mut triplets = Vec::new();
    for i in 0..n {
        triplets.push((i, i, per_row as f64 + 1.0));
        for _ in 0..per_row {
            let j = r.random_range(0..n);
            if j != i {
                triplets.push((i, j, r.random_range(-1.0..1.0)));
            }
        }
    }
    CsrMatrix::from_triplets(n, &triplets).unwrap()
}

/// Sparse SPD matrix `D + S + Sᵀ` made diagonally dominant.
pub fn random_sparse_spd(n: usize, per_row: usize, seed: u64) -> CsrMatrix {
    let mut r = rng(seed);
    let mut triplets = Vec::new();
    let mut row_sums = vec![0.0; n];
    for i in 0..n {
        for _ in 0..per_row {
            let j = r.random_range(0..n);
            if j != i {
                let v: f64 = r.random_range(-1.0..1.0);
                triplets.push((i, j, v));
                triplets.push((j, i, v));
                row_sums[i] += v.abs();
                row_sums[j] += v.abs();
            }
        }
    }
    for (i, s) in row_sums.iter().enumerate() {
        triplets.push((i, i, s + 1.0));
    }
    CsrMatrix::from_triplets(n, &triplets).unwrap()
}

pub fn rel_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}
