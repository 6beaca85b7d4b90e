//! Pointwise relaxation: weighted Jacobi on all points, F-points only, and
//! the F-F-C composite (two F-sweeps then one C-sweep) used after the
//! coarse-grid correction.

use crate::dense::{DenseLu, DenseMatrix};
use crate::error::{Error, Result};
use crate::sparse::{BlockLayout, SparseMatrix};
use crate::strength::CfSplitting;

/// One weighted Jacobi sweep on F-points: x_f += w D_ff^-1 (b - A x)_f.
pub fn f_jacobi_sweep(a: &SparseMatrix, split: &CfSplitting, x: &mut [f64], b: &[f64], omega: f64) {
    class_jacobi_sweep(a, split, x, b, omega, true);
}

/// One weighted Jacobi sweep on C-points.
pub fn c_jacobi_sweep(a: &SparseMatrix, split: &CfSplitting, x: &mut [f64], b: &[f64], omega: f64) {
    class_jacobi_sweep(a, split, x, b, omega, false);
}

fn class_jacobi_sweep(
    a: &SparseMatrix,
    split: &CfSplitting,
    x: &mut [f64],
    b: &[f64],
    omega: f64,
    on_f: bool,
) {
    assert_eq!(a.n_rows(), x.len(), "relaxation: dimension mismatch");
    assert_eq!(b.len(), x.len(), "relaxation: dimension mismatch");
    assert_eq!(split.len(), x.len(), "relaxation: splitting mismatch");
    // Jacobi reads the previous iterate only: gather updates, then apply.
    let mut updates: Vec<(usize, f64)> = Vec::new();
    for p in 0..a.n_rows() {
        if split.is_f(p) != on_f {
            continue;
        }
        let d = a.get(p, p);
        assert!(d != 0.0, "zero diagonal at point {p}");
        let r = b[p] - a.row_dot(p, x);
        updates.push((p, omega * r / d));
    }
    for (p, dx) in updates {
        x[p] += dx;
    }
}

/// One F-F-C application: two F-sweeps followed by one C-sweep.
pub fn ffc_jacobi(a: &SparseMatrix, split: &CfSplitting, x: &mut [f64], b: &[f64], omega: f64) {
    f_jacobi_sweep(a, split, x, b, omega);
    f_jacobi_sweep(a, split, x, b, omega);
    c_jacobi_sweep(a, split, x, b, omega);
}

/// Standard weighted Jacobi on all points.
pub fn jacobi_global(a: &SparseMatrix, x: &mut [f64], b: &[f64], omega: f64, sweeps: usize) {
    assert_eq!(a.n_rows(), x.len(), "relaxation: dimension mismatch");
    let diag = a.diagonal();
    for (p, d) in diag.iter().enumerate() {
        assert!(*d != 0.0, "zero diagonal at point {p}");
    }
    for _ in 0..sweeps {
        let r = {
            let ax = a.spmv(x);
            b.iter()
                .zip(ax)
                .map(|(bi, axi)| bi - axi)
                .collect::<Vec<_>>()
        };
        for p in 0..x.len() {
            x[p] += omega * r[p] / diag[p];
        }
    }
}

/// Cached per-level relaxation, built on the F-first permuted operator so F
/// rows are 0..n_f. Scalar or block-diagonal inverses are precomputed.
#[derive(Clone, Debug)]
pub struct RelaxPlan {
    kind: PlanKind,
}

#[derive(Clone, Debug)]
enum PlanKind {
    /// Two F-sweeps then one C-sweep of weighted (block-)Jacobi.
    Ffc {
        omega: f64,
        f_diag: DiagInv,
        c_diag: DiagInv,
    },
    /// Weighted Jacobi on all points.
    Global {
        omega: f64,
        diag: DiagInv,
    },
    /// Exact F-solve (dense LU of A_ff); diagnostic only.
    ExactF {
        lu: DenseLu,
    },
    None,
}

#[derive(Clone, Debug)]
enum DiagInv {
    Scalar(Vec<f64>),
    Block { k: usize, lus: Vec<DenseLu> },
}

impl DiagInv {
    fn build(
        a: &SparseMatrix,
        rows: std::ops::Range<usize>,
        block: Option<BlockLayout>,
    ) -> Result<Self> {
        match block {
            None | Some(BlockLayout { block_size: 1 }) => {
                let mut inv = Vec::with_capacity(rows.len());
                for p in rows {
                    let d = a.get(p, p);
                    if d == 0.0 {
                        return Err(Error::Singular(format!("zero diagonal at row {p}")));
                    }
                    inv.push(1.0 / d);
                }
                Ok(DiagInv::Scalar(inv))
            }
            Some(BlockLayout { block_size: k }) => {
                assert_eq!(rows.start % k, 0, "block rows not aligned");
                assert_eq!(rows.len() % k, 0, "block rows not aligned");
                let mut lus = Vec::with_capacity(rows.len() / k);
                let mut base = rows.start;
                while base < rows.end {
                    let blockmat = DenseMatrix::from_fn(k, k, |r, c| a.get(base + r, base + c));
                    let lu = DenseLu::factor(&blockmat).map_err(|_| {
                        Error::Singular(format!(
                            "singular diagonal block at rows {base}..{}",
                            base + k
                        ))
                    })?;
                    lus.push(lu);
                    base += k;
                }
                Ok(DiagInv::Block { k, lus })
            }
        }
    }

    /// x[offset + i] += omega * (Dinv r)[i]
    fn apply(&self, x: &mut [f64], r: &[f64], offset: usize, omega: f64) {
        match self {
            DiagInv::Scalar(inv) => {
                for (i, (ri, di)) in r.iter().zip(inv).enumerate() {
                    x[offset + i] += omega * ri * di;
                }
            }
            DiagInv::Block { k, lus } => {
                for (bi, lu) in lus.iter().enumerate() {
                    let seg = &r[bi * k..(bi + 1) * k];
                    let sol = lu.solve_vec(seg);
                    for (i, v) in sol.into_iter().enumerate() {
                        x[offset + bi * k + i] += omega * v;
                    }
                }
            }
        }
    }
}

impl RelaxPlan {
    pub fn ffc(
        a_perm: &SparseMatrix,
        n_f: usize,
        omega: f64,
        block: Option<BlockLayout>,
    ) -> Result<Self> {
        let f_diag = DiagInv::build(a_perm, 0..n_f, block)?;
        let c_diag = DiagInv::build(a_perm, n_f..a_perm.n_rows(), block)?;
        Ok(RelaxPlan {
            kind: PlanKind::Ffc {
                omega,
                f_diag,
                c_diag,
            },
        })
    }

    pub fn global(a_perm: &SparseMatrix, omega: f64) -> Result<Self> {
        let diag = DiagInv::build(a_perm, 0..a_perm.n_rows(), None)?;
        Ok(RelaxPlan {
            kind: PlanKind::Global { omega, diag },
        })
    }

    pub fn exact_f(a_perm: &SparseMatrix, n_f: usize) -> Result<Self> {
        let ff = DenseMatrix::from_fn(n_f, n_f, |r, c| a_perm.get(r, c));
        let lu = DenseLu::factor(&ff)
            .map_err(|_| Error::Singular("A_ff in exact F-solve relaxation".into()))?;
        Ok(RelaxPlan {
            kind: PlanKind::ExactF { lu },
        })
    }

    pub fn none() -> Self {
        RelaxPlan {
            kind: PlanKind::None,
        }
    }

    /// Apply one relaxation pass on the permuted system (F rows first).
    pub fn apply(&self, a_perm: &SparseMatrix, n_f: usize, x: &mut [f64], b: &[f64]) {
        match &self.kind {
            PlanKind::Ffc {
                omega,
                f_diag,
                c_diag,
            } => {
                for _ in 0..2 {
                    let r = residual_rows(a_perm, x, b, 0..n_f);
                    f_diag.apply(x, &r, 0, *omega);
                }
                let r = residual_rows(a_perm, x, b, n_f..a_perm.n_rows());
                c_diag.apply(x, &r, n_f, *omega);
            }
            PlanKind::Global { omega, diag } => {
                let r = residual_rows(a_perm, x, b, 0..a_perm.n_rows());
                diag.apply(x, &r, 0, *omega);
            }
            PlanKind::ExactF { lu } => {
                let r = residual_rows(a_perm, x, b, 0..n_f);
                let sol = lu.solve(&DenseMatrix::from_col(&r));
                for i in 0..n_f {
                    x[i] += sol[(i, 0)];
                }
            }
            PlanKind::None => {}
        }
    }

    /// Work per application, in multiply-adds: restricted SpMV per sweep plus
    /// the diagonal scale (or the dense F-solve backsubstitution).
    pub fn work_madds(&self, a_perm: &SparseMatrix, n_f: usize) -> f64 {
        let nnz_f: usize = (0..n_f).map(|i| a_perm.row(i).0.len()).sum();
        let nnz_c = a_perm.nnz() - nnz_f;
        let n_c = a_perm.n_rows() - n_f;
        match &self.kind {
            PlanKind::Ffc { .. } => (2 * (nnz_f + n_f) + nnz_c + n_c) as f64,
            PlanKind::Global { .. } => (a_perm.nnz() + a_perm.n_rows()) as f64,
            PlanKind::ExactF { .. } => (nnz_f + n_f * n_f) as f64,
            PlanKind::None => 0.0,
        }
    }
}

fn residual_rows(a: &SparseMatrix, x: &[f64], b: &[f64], rows: std::ops::Range<usize>) -> Vec<f64> {
    rows.map(|i| b[i] - a.row_dot(i, x)).collect()
}
