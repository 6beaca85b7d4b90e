//! Small dense matrices: LU with partial pivoting and a minimal-norm
//! least-squares fallback for singular local systems.

use crate::error::{Error, Result};
use std::ops::{Index, IndexMut};

/// Relative pivot threshold below which `dense_solve` switches to the
/// least-squares path.
pub const TOL_PIVOT: f64 = 1e-12;

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    n_rows: usize,
    n_cols: usize,
    values: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        DenseMatrix {
            n_rows,
            n_cols,
            values: vec![0.0; n_rows * n_cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(n_rows: usize, n_cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = DenseMatrix::zeros(n_rows, n_cols);
        for i in 0..n_rows {
            for j in 0..n_cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let n_rows = rows.len();
        let n_cols = if n_rows == 0 { 0 } else { rows[0].len() };
        let mut m = DenseMatrix::zeros(n_rows, n_cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), n_cols, "ragged rows");
            m.values[i * n_cols..(i + 1) * n_cols].copy_from_slice(r);
        }
        m
    }

    /// Column vector from a slice.
    pub fn from_col(v: &[f64]) -> Self {
        DenseMatrix {
            n_rows: v.len(),
            n_cols: 1,
            values: v.to_vec(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row_slice(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows).map(|i| self[(i, j)]).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols, "matvec: dimension mismatch");
        (0..self.n_rows)
            .map(|i| {
                self.row_slice(i)
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
            })
            .collect()
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.n_cols, other.n_rows, "matmul: dimension mismatch");
        let mut out = DenseMatrix::zeros(self.n_rows, other.n_cols);
        for i in 0..self.n_rows {
            for k in 0..self.n_cols {
                let aik = self[(i, k)];
                if aik == 0.0 {
                    continue;
                }
                let brow = other.row_slice(k);
                let orow = &mut out.values[i * other.n_cols..(i + 1) * other.n_cols];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += aik * b;
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.n_cols, self.n_rows, |i, j| self[(j, i)])
    }

    pub fn add(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!((self.n_rows, self.n_cols), (other.n_rows, other.n_cols));
        let mut out = self.clone();
        for (o, v) in out.values.iter_mut().zip(&other.values) {
            *o += v;
        }
        out
    }

    pub fn sub(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!((self.n_rows, self.n_cols), (other.n_rows, other.n_cols));
        let mut out = self.clone();
        for (o, v) in out.values.iter_mut().zip(&other.values) {
            *o -= v;
        }
        out
    }

    pub fn scale(&self, s: f64) -> DenseMatrix {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= s;
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Inverse via LU; errors on singular input.
    pub fn inverse(&self) -> Result<DenseMatrix> {
        let lu = DenseLu::factor(self)?;
        Ok(lu.solve(&DenseMatrix::identity(self.n_rows)))
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.values[i * self.n_cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.values[i * self.n_cols + j]
    }
}

/// LU factorization with partial pivoting, PA = LU packed in one matrix.
#[derive(Clone, Debug)]
pub struct DenseLu {
    lu: DenseMatrix,
    perm: Vec<usize>,
}

impl DenseLu {
    /// Factor a square matrix. Errors when a pivot is exactly zero.
    pub fn factor(m: &DenseMatrix) -> Result<DenseLu> {
        Self::factor_with_threshold(m, 0.0)
            .ok_or_else(|| Error::Singular(format!("{}x{} LU pivot is zero", m.n_rows, m.n_cols)))
    }

    /// Factor, requiring every pivot to exceed `rel_tol * max|m_ij|`.
    /// Returns None when the matrix fails that test (caller falls back).
    pub fn factor_with_threshold(m: &DenseMatrix, rel_tol: f64) -> Option<DenseLu> {
        assert_eq!(m.n_rows, m.n_cols, "LU of non-square matrix");
        let n = m.n_rows;
        let floor = rel_tol * m.max_abs();
        let mut lu = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut best = lu[(k, k)].abs();
            for i in (k + 1)..n {
                let cand = lu[(i, k)].abs();
                if cand > best {
                    best = cand;
                    p = i;
                }
            }
            if best <= floor || best == 0.0 {
                return None;
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
            }
            let pivot = lu[(k, k)];
            for i in (k + 1)..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                for j in (k + 1)..n {
                    let sub = factor * lu[(k, j)];
                    lu[(i, j)] -= sub;
                }
            }
        }
        Some(DenseLu { lu, perm })
    }

    pub fn n(&self) -> usize {
        self.lu.n_rows
    }

    /// Solve A X = B for every column of B.
    pub fn solve(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(rhs.n_rows, self.n(), "LU solve: rhs row mismatch");
        let n = self.n();
        let q = rhs.n_cols;
        let mut x = DenseMatrix::zeros(n, q);
        // apply row permutation
        for i in 0..n {
            for j in 0..q {
                x[(i, j)] = rhs[(self.perm[i], j)];
            }
        }
        // forward substitution with unit lower triangle
        for i in 0..n {
            for k in 0..i {
                let l = self.lu[(i, k)];
                if l != 0.0 {
                    for j in 0..q {
                        let sub = l * x[(k, j)];
                        x[(i, j)] -= sub;
                    }
                }
            }
        }
        // back substitution
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let u = self.lu[(i, k)];
                if u != 0.0 {
                    for j in 0..q {
                        let sub = u * x[(k, j)];
                        x[(i, j)] -= sub;
                    }
                }
            }
            let d = self.lu[(i, i)];
            for j in 0..q {
                x[(i, j)] /= d;
            }
        }
        x
    }

    pub fn solve_vec(&self, rhs: &[f64]) -> Vec<f64> {
        self.solve(&DenseMatrix::from_col(rhs)).column(0)
    }
}

/// Solve M x = rhs by LU with partial pivoting; if any pivot falls below
/// [`TOL_PIVOT`] relative to the largest entry of M, fall back to the
/// minimal-norm least-squares solution. The flag reports whether the
/// fallback was taken.
pub fn dense_solve(m: &DenseMatrix, rhs: &DenseMatrix) -> (DenseMatrix, bool) {
    assert_eq!(m.n_rows, m.n_cols, "dense_solve expects a square system");
    assert_eq!(rhs.n_rows, m.n_rows, "dense_solve: rhs row mismatch");
    match DenseLu::factor_with_threshold(m, TOL_PIVOT) {
        Some(lu) => (lu.solve(rhs), false),
        None => (min_norm_least_squares(m, rhs), true),
    }
}

/// Minimal-norm least-squares solution of M x = rhs via column-pivoted
/// Householder QR with rank truncation, followed by a second QR of the
/// leading rows to compress onto the row space.
pub fn min_norm_least_squares(m: &DenseMatrix, rhs: &DenseMatrix) -> DenseMatrix {
    let rows = m.n_rows;
    let cols = m.n_cols;
    let q = rhs.n_cols;
    assert_eq!(rhs.n_rows, rows, "least squares: rhs row mismatch");

    // Column-pivoted QR: M P = Q R, reflectors stored below the diagonal.
    let mut a = m.clone();
    let mut betas = Vec::new();
    let mut col_perm: Vec<usize> = (0..cols).collect();
    let kmax = rows.min(cols);
    for k in 0..kmax {
        // pivot: column with largest remaining norm (recomputed; sizes are small)
        let mut best_j = k;
        let mut best_norm = -1.0;
        for j in k..cols {
            let norm: f64 = (k..rows).map(|i| a[(i, j)] * a[(i, j)]).sum();
            if norm > best_norm {
                best_norm = norm;
                best_j = j;
            }
        }
        if best_j != k {
            col_perm.swap(k, best_j);
            for i in 0..rows {
                let tmp = a[(i, k)];
                a[(i, k)] = a[(i, best_j)];
                a[(i, best_j)] = tmp;
            }
        }
        let beta = householder_left(&mut a, k, k);
        betas.push(beta);
    }

    // numerical rank from the diagonal of R
    let r00 = a[(0, 0)].abs().max(0.0);
    let cutoff = TOL_PIVOT * r00;
    let mut rank = 0;
    for k in 0..kmax {
        if a[(k, k)].abs() > cutoff && a[(k, k)] != 0.0 {
            rank = k + 1;
        } else {
            break;
        }
    }
    if rank == 0 {
        return DenseMatrix::zeros(cols, q);
    }

    // c = (Q^T rhs) restricted to the leading `rank` rows
    let mut c = rhs.clone();
    for (k, &beta) in betas.iter().enumerate() {
        apply_householder_left(&a, k, beta, &mut c);
    }

    // Second, unpivoted QR of R1^T (cols x rank) to get R1 = T^T U^T.
    let mut r1t = DenseMatrix::from_fn(cols, rank, |i, j| if i >= j { a[(j, i)] } else { 0.0 });
    // note: R1 is upper trapezoidal, so R1^T[i][j] = R[j][i] for i >= j
    let mut betas2 = Vec::new();
    for k in 0..rank {
        let beta = householder_left(&mut r1t, k, k);
        betas2.push(beta);
    }
    // Solve T^T w = c1 (T upper triangular rank x rank lives in r1t's top block).
    let mut w = DenseMatrix::zeros(rank, q);
    for j in 0..q {
        for i in 0..rank {
            let mut acc = c[(i, j)];
            for k in 0..i {
                acc -= r1t[(k, i)] * w[(k, j)];
            }
            w[(i, j)] = acc / r1t[(i, i)];
        }
    }
    // y = U w: extend w with zeros then apply reflectors in reverse.
    let mut y = DenseMatrix::zeros(cols, q);
    for i in 0..rank {
        for j in 0..q {
            y[(i, j)] = w[(i, j)];
        }
    }
    for k in (0..rank).rev() {
        apply_householder_left(&r1t, k, betas2[k], &mut y);
    }
    // undo the column pivoting: x[col_perm[j]] = y[j]
    let mut x = DenseMatrix::zeros(cols, q);
    for jy in 0..cols {
        for j in 0..q {
            x[(col_perm[jy], j)] = y[(jy, j)];
        }
    }
    x
}

/// Build the Householder reflector that zeroes column `col` below `row`,
/// store v below the diagonal (v[0] implicit 1), return beta.
fn householder_left(a: &mut DenseMatrix, row: usize, col: usize) -> f64 {
    let m = a.n_rows();
    let alpha: f64 = (row..m)
        .map(|i| a[(i, col)] * a[(i, col)])
        .sum::<f64>()
        .sqrt();
    if alpha == 0.0 {
        return 0.0;
    }
    let a0 = a[(row, col)];
    let sign = if a0 >= 0.0 { 1.0 } else { -1.0 };
    let v0 = a0 + sign * alpha;
    // normalized so v[row] = 1
    for i in (row + 1)..m {
        a[(i, col)] /= v0;
    }
    let beta = sign * v0 / alpha; // = v0^2 / (alpha * |v0|) with sign folded in
    a[(row, col)] = -sign * alpha;
    // apply to the trailing columns
    let n = a.n_cols();
    for j in (col + 1)..n {
        let mut dot = a[(row, j)];
        for i in (row + 1)..m {
            dot += a[(i, col)] * a[(i, j)];
        }
        let scaled = beta * dot;
        a[(row, j)] -= scaled;
        for i in (row + 1)..m {
            let sub = scaled * a[(i, col)];
            a[(i, j)] -= sub;
        }
    }
    beta
}

/// Apply the stored reflector `k` of `a` to every column of `target`.
fn apply_householder_left(a: &DenseMatrix, k: usize, beta: f64, target: &mut DenseMatrix) {
    if beta == 0.0 {
        return;
    }
    let m = a.n_rows();
    for j in 0..target.n_cols() {
        let mut dot = target[(k, j)];
        for i in (k + 1)..m {
            dot += a[(i, k)] * target[(i, j)];
        }
        let scaled = beta * dot;
        target[(k, j)] -= scaled;
        for i in (k + 1)..m {
            let sub = scaled * a[(i, k)];
            target[(i, j)] -= sub;
        }
    }
}
