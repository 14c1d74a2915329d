//! Compressed sparse row matrices and the linear solvers for the trace system.
//!
//! Direct solves go through the sparse LU of `faer` (fill-reducing ordering,
//! partial pivoting). The iterative path is restarted GMRES with an ILU(0) or
//! Jacobi preconditioner.

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Sums duplicate entries; entries that sum to exactly zero are dropped.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; n_rows + 1];
        for &(r, c, _) in triplets {
            assert!(r < n_rows && c < n_cols, "triplet ({r}, {c}) outside {n_rows}x{n_cols}");
            counts[r + 1] += 1;
        }
        for r in 0..n_rows {
            counts[r + 1] += counts[r];
        }
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        let mut next = counts.clone();
        // stable within a row, so duplicate sums are independent of thread scheduling upstream
        for &(r, c, v) in triplets {
            cols[next[r]] = c;
            vals[next[r]] = v;
            next[r] += 1;
        }
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        let mut order: Vec<usize> = Vec::new();
        for r in 0..n_rows {
            let (a, b) = (counts[r], counts[r + 1]);
            order.clear();
            order.extend(a..b);
            order.sort_by_key(|&i| cols[i]);
            let mut i = 0;
            while i < order.len() {
                let c = cols[order[i]];
                let mut sum = 0.0;
                while i < order.len() && cols[order[i]] == c {
                    sum += vals[order[i]];
                    i += 1;
                }
                if sum != 0.0 {
                    col_idx.push(c);
                    values.push(sum);
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.col_idx[a..b], &self.values[a..b])
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate().take(self.n_rows) {
            let (c, v) = self.row(r);
            *yr = c.iter().zip(v).map(|(&j, a)| a * x[j]).sum();
        }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(i) => vals[i],
            Err(_) => 0.0,
        }
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let triplets: Vec<Triplet<usize, usize, f64>> = (0..self.n_rows)
            .flat_map(|r| {
                let (c, v) = self.row(r);
                c.iter().zip(v).map(move |(&j, &a)| Triplet::new(r, j, a))
            })
            .collect();
        SparseColMat::try_new_from_triplets(self.n_rows, self.n_cols, &triplets)
            .map_err(|e| Error::Factorization(format!("{e:?}")))
    }
}

/// Relative residual `‖A x − b‖₂ / ‖b‖₂`.
pub fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.matvec(x);
    let r: f64 = ax.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if nb == 0.0 {
        r
    } else {
        r / nb
    }
}

/// LU factorization kept for repeated solves.
pub struct DirectSolver {
    n: usize,
    lu: Option<faer::sparse::linalg::solvers::Lu<usize, f64>>,
}

impl std::fmt::Debug for DirectSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DirectSolver").field("n", &self.n).finish()
    }
}

impl DirectSolver {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        if a.n_rows != a.n_cols {
            return Err(Error::InvalidInput(format!(
                "matrix is {}x{}, expected square",
                a.n_rows, a.n_cols
            )));
        }
        let n = a.n_rows;
        if n == 0 {
            return Ok(DirectSolver { n, lu: None });
        }
        if let Some(row) = (0..n).find(|&r| a.row(r).0.is_empty()) {
            return Err(Error::SingularPivot { row });
        }
        let mut col_used = vec![false; n];
        for &c in &a.col_idx {
            col_used[c] = true;
        }
        if let Some(col) = col_used.iter().position(|u| !u) {
            return Err(Error::SingularPivot { row: col });
        }
        // single-threaded factorization keeps results bitwise reproducible
        faer::set_global_parallelism(faer::Par::Seq);
        let lu = a
            .to_faer()?
            .sp_lu()
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        Ok(DirectSolver { n, lu: Some(lu) })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        assert_eq!(b.len(), self.n);
        let Some(lu) = &self.lu else {
            return Ok(Vec::new());
        };
        if b.iter().all(|&v| v == 0.0) {
            return Ok(vec![0.0; self.n]);
        }
        let mut rhs = Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        lu.solve_in_place(rhs.as_mut());
        let x: Vec<f64> = (0..self.n).map(|i| rhs[(i, 0)]).collect();
        if let Some(row) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::SingularPivot { row });
        }
        Ok(x)
    }
}

/// One-shot sparse direct solve.
pub fn solve_direct(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    DirectSolver::new(a)?.solve(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preconditioner {
    None,
    Jacobi,
    Ilu0,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterativeOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub restart: usize,
    pub preconditioner: Preconditioner,
}

impl Default for IterativeOptions {
    fn default() -> Self {
        IterativeOptions {
            tol: 1e-12,
            max_iter: 2000,
            restart: 100,
            preconditioner: Preconditioner::Ilu0,
        }
    }
}

enum Precond {
    Identity,
    Jacobi(Vec<f64>),
    Ilu(CsrMatrix, Vec<usize>),
}

impl Precond {
    fn build(a: &CsrMatrix, kind: Preconditioner) -> Result<Self> {
        match kind {
            Preconditioner::None => Ok(Precond::Identity),
            Preconditioner::Jacobi => {
                let mut inv = vec![1.0; a.n_rows];
                for (r, d) in inv.iter_mut().enumerate() {
                    let v = a.get(r, r);
                    if v != 0.0 {
                        *d = 1.0 / v;
                    }
                }
                Ok(Precond::Jacobi(inv))
            }
            Preconditioner::Ilu0 => {
                let (lu, diag) = ilu0(a)?;
                Ok(Precond::Ilu(lu, diag))
            }
        }
    }

    fn apply(&self, r: &[f64]) -> Vec<f64> {
        match self {
            Precond::Identity => r.to_vec(),
            Precond::Jacobi(d) => r.iter().zip(d).map(|(a, b)| a * b).collect(),
            Precond::Ilu(lu, diag) => {
                let n = r.len();
                let mut y = r.to_vec();
                for i in 0..n {
                    let (cols, vals) = lu.row(i);
                    let mut s = y[i];
                    for (&j, &v) in cols.iter().zip(vals) {
                        if j >= i {
                            break;
                        }
                        s -= v * y[j];
                    }
                    y[i] = s;
                }
                for i in (0..n).rev() {
                    let (cols, vals) = lu.row(i);
                    let mut s = y[i];
                    for (&j, &v) in cols.iter().zip(vals) {
                        if j > i {
                            s -= v * y[j];
                        }
                    }
                    y[i] = s / lu.values[diag[i]];
                }
                y
            }
        }
    }
}

/// Incomplete LU on the sparsity pattern of `a`.
fn ilu0(a: &CsrMatrix) -> Result<(CsrMatrix, Vec<usize>)> {
    let mut lu = a.clone();
    let n = a.n_rows;
    let mut diag = vec![usize::MAX; n];
    for (i, d) in diag.iter_mut().enumerate() {
        let (a0, b0) = (lu.row_ptr[i], lu.row_ptr[i + 1]);
        if let Some(p) = (a0..b0).find(|&p| lu.col_idx[p] == i) {
            *d = p;
        } else {
            return Err(Error::SingularPivot { row: i });
        }
    }
    let mut pos = vec![usize::MAX; n];
    for i in 0..n {
        let (a0, b0) = (lu.row_ptr[i], lu.row_ptr[i + 1]);
        for p in a0..b0 {
            pos[lu.col_idx[p]] = p;
        }
        for p in a0..b0 {
            let k = lu.col_idx[p];
            if k >= i {
                break;
            }
            let pivot = lu.values[diag[k]];
            if pivot == 0.0 {
                return Err(Error::SingularPivot { row: k });
            }
            let factor = lu.values[p] / pivot;
            lu.values[p] = factor;
            for q in diag[k] + 1..lu.row_ptr[k + 1] {
                let j = lu.col_idx[q];
                if pos[j] != usize::MAX {
                    lu.values[pos[j]] -= factor * lu.values[q];
                }
            }
        }
        for p in a0..b0 {
            pos[lu.col_idx[p]] = usize::MAX;
        }
        if lu.values[diag[i]] == 0.0 {
            return Err(Error::SingularPivot { row: i });
        }
    }
    Ok((lu, diag))
}

/// Right-preconditioned restarted GMRES. The tolerance applies to the
/// relative residual `‖b − A x‖₂ / ‖b‖₂`.
pub fn solve_iterative(a: &CsrMatrix, b: &[f64], opts: &IterativeOptions) -> Result<Vec<f64>> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    let n = a.n_rows;
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let m = Precond::build(a, opts.preconditioner)?;
    let restart = opts.restart.max(1);
    let mut x = vec![0.0; n];
    let mut iterations = 0;
    while iterations < opts.max_iter {
        let ax = a.matvec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        let beta = norm(&r);
        if beta / bnorm <= opts.tol {
            return Ok(x);
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|t| t / beta).collect()];
        let mut z: Vec<Vec<f64>> = Vec::new();
        let mut h = vec![vec![0.0; restart]; restart + 1];
        let (mut cs, mut sn) = (vec![0.0; restart], vec![0.0; restart]);
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut used = 0;
        for j in 0..restart {
            if iterations >= opts.max_iter {
                break;
            }
            iterations += 1;
            let zj = m.apply(&v[j]);
            let mut w = a.matvec(&zj);
            z.push(zj);
            // modified Gram–Schmidt, applied twice
            for _ in 0..2 {
                for (i, vi) in v.iter().enumerate() {
                    let hij = dot(&w, vi);
                    h[i][j] += hij;
                    for (wk, vk) in w.iter_mut().zip(vi) {
                        *wk -= hij * vk;
                    }
                }
            }
            h[j + 1][j] = norm(&w);
            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let d = h[j][j].hypot(h[j + 1][j]);
            if d == 0.0 {
                used = j;
                break;
            }
            cs[j] = h[j][j] / d;
            sn[j] = h[j + 1][j] / d;
            h[j][j] = d;
            h[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            used = j + 1;
            let next = norm(&w);
            if (g[j + 1].abs() / bnorm) <= opts.tol * 0.5 || next == 0.0 {
                break;
            }
            v.push(w.iter().map(|t| t / next).collect());
        }
        let mut y = vec![0.0; used];
        for i in (0..used).rev() {
            let mut s = g[i];
            for l in i + 1..used {
                s -= h[i][l] * y[l];
            }
            y[i] = s / h[i][i];
        }
        for (i, yi) in y.iter().enumerate() {
            for (xk, zk) in x.iter_mut().zip(&z[i]) {
                *xk += yi * zk;
            }
        }
    }
    let ax = a.matvec(&x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
    let final_rel = norm(&r) / bnorm;
    if final_rel <= opts.tol {
        return Ok(x);
    }
    Err(Error::NoConvergence {
        iterations,
        residual: final_rel,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    fn laplacian(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
                t.push((i - 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &t)
    }

    #[test]
    fn identity_solve() {
        let b = vec![1.0, -2.0, 3.5];
        assert_eq!(solve_direct(&CsrMatrix::identity(3), &b).unwrap(), b);
        let x = solve_iterative(&CsrMatrix::identity(3), &b, &IterativeOptions::default()).unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn two_by_two() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0)]);
        let x = solve_direct(&a, &[3.0, 4.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
        let u = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 0.5), (1, 1, 1.0)]);
        let x = solve_iterative(&u, &[1.5, 1.0], &IterativeOptions::default()).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn laplacian_against_dense_elimination() {
        let n = 50;
        let a = laplacian(n);
        let b = vec![1.0; n];
        let x = solve_direct(&a, &b).unwrap();
        let dense = DMatrix::from_fn(n, n, |i, j| a.get(i, j));
        let oracle = dense.lu().solve(&DVector::from_vec(b.clone())).unwrap();
        for i in 0..n {
            assert!((x[i] - oracle[i]).abs() < 1e-10);
        }
        assert!(relative_residual(&a, &x, &b) < 1e-11);
        for p in [Preconditioner::None, Preconditioner::Jacobi, Preconditioner::Ilu0] {
            let opts = IterativeOptions { tol: 1e-12, preconditioner: p, ..Default::default() };
            let y = solve_iterative(&a, &b, &opts).unwrap();
            assert!(relative_residual(&a, &y, &b) <= 1e-12, "{p:?}");
        }
    }

    #[test]
    fn zero_rhs_gives_zero() {
        assert_eq!(solve_direct(&laplacian(4), &[0.0; 4]).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn empty_row_is_a_singular_pivot() {
        let a = CsrMatrix::from_triplets(3, 3, &[(0, 0, 1.0), (2, 2, 1.0), (2, 1, 0.0)]);
        assert!(matches!(DirectSolver::new(&a), Err(Error::SingularPivot { row: 1 })));
    }

    #[test]
    fn stagnation_reports_residual() {
        let a = laplacian(200);
        let opts = IterativeOptions { tol: 1e-14, max_iter: 3, restart: 3, preconditioner: Preconditioner::None };
        match solve_iterative(&a, &vec![1.0; 200], &opts) {
            Err(Error::NoConvergence { iterations, residual }) => {
                assert_eq!(iterations, 3);
                assert!(residual > 1e-14 && residual < 1.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicates_are_summed_and_zeros_dropped() {
        let a = CsrMatrix::from_triplets(2, 3, &[(0, 2, 1.0), (0, 0, 2.0), (0, 2, 3.0), (1, 1, 1.0), (1, 1, -1.0)]);
        assert_eq!(a.row_ptr, vec![0, 2, 2]);
        assert_eq!(a.col_idx, vec![0, 2]);
        assert_eq!(a.values, vec![2.0, 4.0]);
    }

    proptest! {
        #[test]
        fn matvec_matches_triplet_sum(
            entries in proptest::collection::vec((0usize..12, 0usize..9, -5.0f64..5.0), 0..80),
            x in proptest::collection::vec(-3.0f64..3.0, 9),
        ) {
            let a = CsrMatrix::from_triplets(12, 9, &entries);
            for r in 0..12 {
                let (c, _) = a.row(r);
                prop_assert!(c.windows(2).all(|w| w[0] < w[1]));
            }
            let y = a.matvec(&x);
            let mut oracle = vec![0.0; 12];
            for &(r, c, v) in &entries {
                oracle[r] += v * x[c];
            }
            for r in 0..12 {
                prop_assert!((y[r] - oracle[r]).abs() < 1e-12);
            }
        }

        #[test]
        fn direct_solves_diagonally_dominant_systems(
            off in proptest::collection::vec((0usize..20, 0usize..20, -1.0f64..1.0), 0..60),
            b in proptest::collection::vec(-1.0f64..1.0, 20),
        ) {
            let mut t = off.clone();
            for i in 0..20 {
                t.push((i, i, 70.0));
            }
            let a = CsrMatrix::from_triplets(20, 20, &t);
            let x = solve_direct(&a, &b).unwrap();
            prop_assert!(relative_residual(&a, &x, &b) <= 1e-11 || b.iter().all(|v| *v == 0.0));
        }
    }
}
