//! Compressed sparse row matrices and the kernels the solver is built from.
//!
//! Rows are always sorted by column with no duplicates. Products keep entries
//! that cancel to exact zero: dropping values is the exclusive job of lumping,
//! so nonzero counts stay deterministic.

use crate::error::{Error, Result};
use crate::strength::CfSplitting;

/// Square sparse matrix in CSR form. Immutable after construction.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

/// Marks a matrix as made of dense `k x k` blocks (nodal/DG-style structure).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockLayout {
    pub block_size: usize,
}

impl BlockLayout {
    pub fn new(block_size: usize) -> Self {
        assert!(block_size >= 1, "block size must be at least 1");
        BlockLayout { block_size }
    }
}

impl SparseMatrix {
    /// Build from raw CSR arrays, checking every structural invariant.
    pub fn new(
        n_rows: usize,
        n_cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.len() != n_rows + 1 {
            return Err(Error::InvalidInput(format!(
                "row_offsets has length {}, expected {}",
                row_offsets.len(),
                n_rows + 1
            )));
        }
        if row_offsets[0] != 0 || row_offsets[n_rows] != col_indices.len() {
            return Err(Error::InvalidInput(
                "row_offsets must start at 0 and end at nnz".into(),
            ));
        }
        if col_indices.len() != values.len() {
            return Err(Error::InvalidInput(
                "col_indices and values length mismatch".into(),
            ));
        }
        for i in 0..n_rows {
            if row_offsets[i] > row_offsets[i + 1] {
                return Err(Error::InvalidInput(format!(
                    "row_offsets decreasing at row {i}"
                )));
            }
            let cols = &col_indices[row_offsets[i]..row_offsets[i + 1]];
            for w in cols.windows(2) {
                if w[0] >= w[1] {
                    return Err(Error::InvalidInput(format!(
                        "row {i} has unsorted or duplicate columns"
                    )));
                }
            }
            if let Some(&last) = cols.last() {
                if last >= n_cols {
                    return Err(Error::InvalidInput(format!(
                        "row {i} has column {last} >= n_cols {n_cols}"
                    )));
                }
            }
        }
        Ok(SparseMatrix {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Build from (row, col, value) triplets; duplicates are summed,
    /// exact zeros are kept.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        for &(i, j, _) in triplets {
            if i >= n_rows || j >= n_cols {
                return Err(Error::InvalidInput(format!(
                    "triplet ({i},{j}) outside {n_rows}x{n_cols}"
                )));
            }
        }
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by_key(|a| (a.0, a.1));

        let mut row_offsets = vec![0usize; n_rows + 1];
        let mut col_indices = Vec::with_capacity(sorted.len());
        let mut values = Vec::with_capacity(sorted.len());
        let mut prev: Option<(usize, usize)> = None;
        for &(i, j, v) in &sorted {
            if prev == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_indices.push(j);
                values.push(v);
                prev = Some((i, j));
            }
            row_offsets[i + 1] = col_indices.len();
        }
        for i in 0..n_rows {
            if row_offsets[i + 1] < row_offsets[i] {
                row_offsets[i + 1] = row_offsets[i];
            }
        }
        SparseMatrix::new(n_rows, n_cols, row_offsets, col_indices, values)
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        SparseMatrix {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: diag.to_vec(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let lo = self.row_offsets[i];
        let hi = self.row_offsets[i + 1];
        (&self.col_indices[lo..hi], &self.values[lo..hi])
    }

    /// Stored value at (i, j), or 0.0 when the entry is not in the pattern.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(pos) => vals[pos],
            Err(_) => 0.0,
        }
    }

    pub fn iter_triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    /// y = A x.
    pub fn spmv(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols, "spmv: dimension mismatch");
        let mut y = vec![0.0; self.n_rows];
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                acc += v * x[j];
            }
            y[i] = acc;
        }
        y
    }

    /// Dot product of row `i` with `x`.
    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let (cols, vals) = self.row(i);
        cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum()
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &j in &self.col_indices {
            counts[j + 1] += 1;
        }
        for j in 0..self.n_cols {
            counts[j + 1] += counts[j];
        }
        let mut col_indices = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        let mut next = counts.clone();
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let dst = next[j];
                col_indices[dst] = i;
                values[dst] = v;
                next[j] += 1;
            }
        }
        SparseMatrix {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_offsets: counts,
            col_indices,
            values,
        }
    }

    /// Sparse product A * B with sorted, deduplicated rows. Entries that
    /// cancel to exact zero stay in the pattern.
    pub fn spmm(&self, other: &SparseMatrix) -> SparseMatrix {
        assert_eq!(self.n_cols, other.n_rows, "spmm: inner dimension mismatch");
        let n_cols = other.n_cols;
        let mut row_offsets = Vec::with_capacity(self.n_rows + 1);
        row_offsets.push(0usize);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();

        // Gustavson: dense accumulator plus a scratch list of touched columns.
        let mut acc = vec![0.0f64; n_cols];
        let mut touched: Vec<usize> = Vec::new();
        let mut in_row = vec![false; n_cols];

        for i in 0..self.n_rows {
            let (a_cols, a_vals) = self.row(i);
            for (&k, &av) in a_cols.iter().zip(a_vals) {
                let (b_cols, b_vals) = other.row(k);
                for (&j, &bv) in b_cols.iter().zip(b_vals) {
                    if !in_row[j] {
                        in_row[j] = true;
                        touched.push(j);
                        acc[j] = 0.0;
                    }
                    acc[j] += av * bv;
                }
            }
            touched.sort_unstable();
            for &j in &touched {
                col_indices.push(j);
                values.push(acc[j]);
                in_row[j] = false;
            }
            touched.clear();
            row_offsets.push(col_indices.len());
        }
        SparseMatrix {
            n_rows: self.n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        }
    }

    /// Rows of the result are `new_to_old[i]` of self.
    pub fn permute_rows(&self, new_to_old: &[usize]) -> SparseMatrix {
        assert_eq!(new_to_old.len(), self.n_rows, "row permutation length");
        let mut row_offsets = Vec::with_capacity(self.n_rows + 1);
        row_offsets.push(0usize);
        let mut col_indices = Vec::with_capacity(self.nnz());
        let mut values = Vec::with_capacity(self.nnz());
        for &old in new_to_old {
            let (cols, vals) = self.row(old);
            col_indices.extend_from_slice(cols);
            values.extend_from_slice(vals);
            row_offsets.push(col_indices.len());
        }
        SparseMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            row_offsets,
            col_indices,
            values,
        }
    }

    /// Remap column indices by `old_to_new` and re-sort each row.
    pub fn permute_cols(&self, old_to_new: &[usize]) -> SparseMatrix {
        assert_eq!(old_to_new.len(), self.n_cols, "column permutation length");
        let mut row_offsets = Vec::with_capacity(self.n_rows + 1);
        row_offsets.push(0usize);
        let mut col_indices = Vec::with_capacity(self.nnz());
        let mut values = Vec::with_capacity(self.nnz());
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            scratch.clear();
            scratch.extend(cols.iter().zip(vals).map(|(&j, &v)| (old_to_new[j], v)));
            scratch.sort_unstable_by_key(|&(j, _)| j);
            for &(j, v) in &scratch {
                col_indices.push(j);
                values.push(v);
            }
            row_offsets.push(col_indices.len());
        }
        SparseMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            row_offsets,
            col_indices,
            values,
        }
    }

    /// Symmetric reordering: `result[i][j] = self[new_to_old[i]][new_to_old[j]]`.
    pub fn permute_symmetric(&self, new_to_old: &[usize]) -> SparseMatrix {
        assert_eq!(
            self.n_rows, self.n_cols,
            "symmetric permutation needs square"
        );
        let mut old_to_new = vec![0usize; self.n_rows];
        for (new, &old) in new_to_old.iter().enumerate() {
            old_to_new[old] = new;
        }
        self.permute_rows(new_to_old).permute_cols(&old_to_new)
    }

    /// Left-multiply by diag(d): scales row i by `d[i]`.
    pub fn scale_rows(&self, d: &[f64]) -> SparseMatrix {
        assert_eq!(d.len(), self.n_rows, "row scaling length");
        let mut out = self.clone();
        for i in 0..self.n_rows {
            let lo = out.row_offsets[i];
            let hi = out.row_offsets[i + 1];
            for v in &mut out.values[lo..hi] {
                *v *= d[i];
            }
        }
        out
    }

    /// Right-multiply by diag(d): scales column j by `d[j]`.
    pub fn scale_cols(&self, d: &[f64]) -> SparseMatrix {
        assert_eq!(d.len(), self.n_cols, "column scaling length");
        let mut out = self.clone();
        for (idx, &j) in self.col_indices.iter().enumerate() {
            out.values[idx] *= d[j];
        }
        out
    }

    /// Entries strictly below the diagonal.
    pub fn strict_lower(&self) -> SparseMatrix {
        let mut row_offsets = vec![0usize];
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if j < i {
                    col_indices.push(j);
                    values.push(v);
                }
            }
            row_offsets.push(col_indices.len());
        }
        SparseMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            row_offsets,
            col_indices,
            values,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        assert_eq!(self.n_rows, self.n_cols, "diagonal of non-square matrix");
        (0..self.n_rows).map(|i| self.get(i, i)).collect()
    }

    /// Max absolute value over row i, or 0.0 for an empty row.
    pub fn row_max_abs(&self, i: usize) -> f64 {
        self.row(i).1.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// The four CF blocks of Eq-style block form, F ordered first within
    /// blocks by original index, C likewise.
    pub fn extract_cf_blocks(&self, split: &CfSplitting) -> CfBlocks {
        assert_eq!(self.n_rows, self.n_cols, "CF blocks of non-square matrix");
        assert_eq!(
            split.len(),
            self.n_rows,
            "splitting length does not cover matrix"
        );
        let n_f = split.n_f();
        // Position of each point inside its own class, counted in original order.
        let mut class_pos = vec![0usize; self.n_rows];
        let mut fi = 0;
        let mut ci = 0;
        for p in 0..self.n_rows {
            if split.is_f(p) {
                class_pos[p] = fi;
                fi += 1;
            } else {
                class_pos[p] = ci;
                ci += 1;
            }
        }
        let mut ff = Vec::new();
        let mut fc = Vec::new();
        let mut cf = Vec::new();
        let mut cc = Vec::new();
        for (i, j, v) in self.iter_triplets() {
            match (split.is_f(i), split.is_f(j)) {
                (true, true) => ff.push((class_pos[i], class_pos[j], v)),
                (true, false) => fc.push((class_pos[i], class_pos[j], v)),
                (false, true) => cf.push((class_pos[i], class_pos[j], v)),
                (false, false) => cc.push((class_pos[i], class_pos[j], v)),
            }
        }
        let n_c = split.n_c();
        CfBlocks {
            ff: SparseMatrix::from_triplets(n_f, n_f, &ff).unwrap(),
            fc: SparseMatrix::from_triplets(n_f, n_c, &fc).unwrap(),
            cf: SparseMatrix::from_triplets(n_c, n_f, &cf).unwrap(),
            cc: SparseMatrix::from_triplets(n_c, n_c, &cc).unwrap(),
        }
    }

    /// Replace each stored entry by a k x k block `v * I`. Used to expand a
    /// nodal operator with unit entries into its scalar block form.
    pub fn expand_identity_blocks(&self, k: usize) -> SparseMatrix {
        if k == 1 {
            return self.clone();
        }
        let mut trips = Vec::with_capacity(self.nnz() * k);
        for (i, j, v) in self.iter_triplets() {
            for r in 0..k {
                trips.push((i * k + r, j * k + r, v));
            }
        }
        SparseMatrix::from_triplets(self.n_rows * k, self.n_cols * k, &trips).unwrap()
    }

    pub fn to_dense(&self) -> crate::dense::DenseMatrix {
        let mut m = crate::dense::DenseMatrix::zeros(self.n_rows, self.n_cols);
        for (i, j, v) in self.iter_triplets() {
            m[(i, j)] = v;
        }
        m
    }
}

/// The four submatrices of the CF block form, each in class-internal ordering.
pub struct CfBlocks {
    pub ff: SparseMatrix,
    pub fc: SparseMatrix,
    pub cf: SparseMatrix,
    pub cc: SparseMatrix,
}
