//! Reference solutions: reverse Cuthill–McKee ordering followed by banded LU
//! with partial pivoting and one step of iterative refinement.

use std::collections::VecDeque;

use super::ProblemError;
use crate::kernels::{BlockOperator, CsrMatrix, DenseMatrix};

/// Reverse Cuthill–McKee permutation of the symmetrized pattern;
/// `perm[new] = old`.
pub fn rcm_ordering(a: &CsrMatrix) -> Vec<usize> {
    let n = a.n();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for &j in a.row(i).0 {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for row in &mut adj {
        row.sort_unstable();
        row.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut order = Vec::with_capacity(n);
    let mut visited = vec![false; n];
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&v| degree[v]);
    for &start in &by_degree {
        if visited[start] {
            continue;
        }
        let root = pseudo_peripheral(start, &adj, &degree);
        visited[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| degree[w]);
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels(root: usize, adj: &[Vec<usize>]) -> (Vec<usize>, usize) {
    let mut level = vec![usize::MAX; adj.len()];
    level[root] = 0;
    let mut queue = VecDeque::from([root]);
    let mut reached = vec![root];
    let mut depth = 0;
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if level[w] == usize::MAX {
                level[w] = level[v] + 1;
                depth = depth.max(level[w]);
                reached.push(w);
                queue.push_back(w);
            }
        }
    }
    let last: Vec<usize> = reached.into_iter().filter(|&v| level[v] == depth).collect();
    (last, depth)
}

fn pseudo_peripheral(start: usize, adj: &[Vec<usize>], degree: &[usize]) -> usize {
    let mut root = start;
    let (mut last, mut depth) = bfs_levels(root, adj);
    loop {
        let Some(&cand) = last.iter().min_by_key(|&&v| degree[v]) else {
            return root;
        };
        let (next_last, next_depth) = bfs_levels(cand, adj);
        if next_depth <= depth {
            return root;
        }
        root = cand;
        last = next_last;
        depth = next_depth;
    }
}

/// A row stored densely between its first and last nonzero column.
#[derive(Clone, Debug)]
struct Segment {
    lo: usize,
    vals: Vec<f64>,
}

impl Segment {
    fn get(&self, j: usize) -> f64 {
        if j >= self.lo && j < self.lo + self.vals.len() {
            self.vals[j - self.lo]
        } else {
            0.0
        }
    }

    fn hi(&self) -> usize {
        self.lo + self.vals.len()
    }

    fn extend_to(&mut self, hi: usize) {
        if hi > self.hi() {
            self.vals.resize(hi - self.lo, 0.0);
        }
    }
}

struct BandedLu {
    rows: Vec<Segment>,
    piv: Vec<usize>,
}

impl BandedLu {
    fn factor(mut rows: Vec<Segment>, scale: f64) -> Result<Self, ProblemError> {
        let n = rows.len();
        let kl = rows.iter().enumerate().map(|(i, r)| i.saturating_sub(r.lo)).max().unwrap_or(0);
        let mut piv = vec![0; n];
        for i in 0..n {
            let last = (i + kl).min(n - 1);
            let mut p = i;
            let mut best = 0.0;
            for r in i..=last {
                let v = rows[r].get(i).abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best <= f64::EPSILON * scale || !best.is_finite() {
                return Err(ProblemError::Singular);
            }
            rows.swap(i, p);
            piv[i] = p;
            let (head, tail) = rows.split_at_mut(i + 1);
            let pivot_row = &head[i];
            let d = pivot_row.get(i);
            for row in tail.iter_mut().take(last - i) {
                if row.lo > i {
                    continue;
                }
                let l = row.get(i) / d;
                if l == 0.0 {
                    continue;
                }
                row.vals[i - row.lo] = l;
                row.extend_to(pivot_row.hi());
                for j in i + 1..pivot_row.hi() {
                    row.vals[j - row.lo] -= l * pivot_row.vals[j - pivot_row.lo];
                }
            }
        }
        Ok(Self { rows, piv })
    }

    fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.rows.len();
        for i in 0..n {
            x.swap(i, self.piv[i]);
        }
        for i in 0..n {
            let r = &self.rows[i];
            let mut acc = x[i];
            for j in r.lo..i {
                acc -= r.vals[j - r.lo] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let r = &self.rows[i];
            let mut acc = x[i];
            for j in i + 1..r.hi() {
                acc -= r.vals[j - r.lo] * x[j];
            }
            x[i] = acc / r.vals[i - r.lo];
        }
    }
}

/// Solves `A X = B` directly.
pub fn direct_solve(a: &CsrMatrix, b: &DenseMatrix) -> Result<DenseMatrix, ProblemError> {
    let n = a.n();
    if b.nrows() != n {
        return Err(crate::kernels::KernelError::DimensionMismatch { expected: n, found: b.nrows() }.into());
    }
    let perm = rcm_ordering(a);
    let mut inv = vec![0; n];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    let mut rows = Vec::with_capacity(n);
    for &old in &perm {
        let (cols, vals) = a.row(old);
        let mapped: Vec<(usize, f64)> = cols.iter().zip(vals).map(|(&j, &v)| (inv[j], v)).collect();
        let lo = mapped.iter().map(|e| e.0).min().unwrap_or(0);
        let hi = mapped.iter().map(|e| e.0 + 1).max().unwrap_or(0);
        let mut seg = Segment { lo, vals: vec![0.0; hi - lo] };
        for (j, v) in mapped {
            seg.vals[j - lo] += v;
        }
        rows.push(seg);
    }
    let lu = BandedLu::factor(rows, a.frobenius_norm())?;

    let solve = |rhs: &DenseMatrix| {
        let mut out = DenseMatrix::zeros(n, rhs.ncols());
        let mut buf = vec![0.0; n];
        for c in 0..rhs.ncols() {
            for (new, &old) in perm.iter().enumerate() {
                buf[new] = rhs[(old, c)];
            }
            lu.solve_in_place(&mut buf);
            for (new, &old) in perm.iter().enumerate() {
                out[(old, c)] = buf[new];
            }
        }
        out
    };
    let mut x = solve(b);
    let r = b - a.apply(x.as_view());
    x += solve(&r);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(ProblemError::Singular);
    }
    Ok(x)
}
