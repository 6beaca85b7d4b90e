//! Analysis quantities: work-unit accounting, convergence factors, WPD, the
//! two-grid spectral operator G, projection-norm checks, and dense
//! propagators for small-scale verification.

use crate::dense::{DenseLu, DenseMatrix};
use crate::error::{Error, Result};
use crate::hierarchy::Hierarchy;
use crate::sparse::SparseMatrix;
use crate::strength::CfSplitting;

/// Default size cap for the dense diagnostic operators.
pub const DENSE_CAP: usize = 500;

#[derive(Clone, Debug)]
pub struct ComplexityReport {
    /// Work units per V-cycle (1 WU = nnz(A_0) multiply-adds).
    pub cycle_complexity: f64,
    /// Sum of level operator nonzeros over nnz(A_0).
    pub operator_complexity: f64,
    /// WU spent at each level per cycle, coarsest last.
    pub per_level_wu: Vec<f64>,
}

/// Work-unit ledger for one V-cycle: per level visit one residual SpMV, one
/// R-SpMV, one P-SpMV, plus every relaxation sweep (restricted SpMV and a
/// diagonal scale); the coarsest dense solve costs n^2 / nnz(A_0).
pub fn cycle_complexity(h: &Hierarchy) -> ComplexityReport {
    let nnz0 = if let Some(l) = h.levels.first() {
        l.a.nnz() as f64
    } else {
        h.coarse_a.nnz() as f64
    };
    let sweeps = (h.config.pre_sweeps + h.config.post_sweeps) as f64;
    let mut per_level = Vec::with_capacity(h.levels.len() + 1);
    let mut nnz_sum = 0.0;
    for lvl in &h.levels {
        let residual = lvl.a.nnz() as f64;
        let restrict = lvl.r.nnz() as f64;
        let interp = lvl.p.nnz() as f64;
        let relax = sweeps * lvl.relax.work_madds(&lvl.a, lvl.n_f);
        per_level.push((residual + restrict + interp + relax) / nnz0);
        nnz_sum += lvl.a.nnz() as f64;
    }
    let nc = h.coarse_a.n_rows() as f64;
    per_level.push(nc * nc / nnz0);
    nnz_sum += h.coarse_a.nnz() as f64;
    ComplexityReport {
        cycle_complexity: per_level.iter().sum(),
        operator_complexity: nnz_sum / nnz0,
        per_level_wu: per_level,
    }
}

/// Work-units-per-digit-of-accuracy: -cc / log10(rho), +inf when rho >= 1
/// (did not converge).
pub fn wpd(cc: f64, rho: f64) -> f64 {
    assert!(rho > 0.0, "convergence factor must be positive");
    if rho >= 1.0 {
        f64::INFINITY
    } else {
        -cc / rho.log10()
    }
}

/// Geometric mean of the per-iteration residual ratios over the trailing
/// half of the history (the transient is discarded). Histories shorter than
/// three entries use every available ratio.
pub fn measured_cf(history: &[f64]) -> f64 {
    if history.len() < 2 {
        return f64::NAN;
    }
    // truncate at the first exact zero: converged to machine terms
    let mut cut = history.len();
    for (i, &v) in history.iter().enumerate() {
        if v == 0.0 {
            cut = i + 1;
            break;
        }
    }
    let hist = &history[..cut];
    if hist.len() < 2 {
        return 0.0;
    }
    let window = if hist.len() < 3 {
        hist.len()
    } else {
        hist.len().div_ceil(2)
    };
    let tail = &hist[hist.len() - window..];
    let ratios = tail.len() - 1;
    if ratios == 0 {
        return f64::NAN;
    }
    if *tail.last().unwrap() == 0.0 {
        return 0.0;
    }
    // geometric mean of successive ratios telescopes
    (tail[ratios] / tail[0]).powf(1.0 / ratios as f64)
}

/// The n_f x n_f spectral operator
/// G = (I - Delta A_ff) + Delta (A_ff W + A_fc) K^-1 (Z A_ff + A_cf)
/// whose eigenvalues are the nonzero spectrum of the two-grid error
/// propagator with post F-relaxation.
pub fn two_grid_g(
    a: &SparseMatrix,
    split: &CfSplitting,
    w: &DenseMatrix,
    z: &DenseMatrix,
    delta: &DenseMatrix,
) -> Result<DenseMatrix> {
    let blocks = a.extract_cf_blocks(split);
    let ff = blocks.ff.to_dense();
    let fc = blocks.fc.to_dense();
    let cf = blocks.cf.to_dense();
    let cc = blocks.cc.to_dense();
    let n_f = split.n_f();
    assert_eq!((w.n_rows(), w.n_cols()), (n_f, split.n_c()), "W shape");
    assert_eq!((z.n_rows(), z.n_cols()), (split.n_c(), n_f), "Z shape");
    assert_eq!((delta.n_rows(), delta.n_cols()), (n_f, n_f), "Delta shape");

    // K = Z A_ff W + Z A_fc + A_cf W + A_cc
    let k = z
        .matmul(&ff.matmul(w))
        .add(&z.matmul(&fc))
        .add(&cf.matmul(w))
        .add(&cc);
    let k_lu = DenseLu::factor(&k).map_err(|_| Error::Singular("coarse operator K in G".into()))?;
    let left = delta.matmul(&ff.matmul(w).add(&fc)); // Delta (A_ff W + A_fc)
    let right = z.matmul(&ff).add(&cf); // Z A_ff + A_cf
    let k_inv_right = k_lu.solve(&right);
    let first = DenseMatrix::identity(n_f).sub(&delta.matmul(&ff));
    Ok(first.add(&left.matmul(&k_inv_right)))
}

/// Outcome of the projection-norm identity check with Z = 0, W = -Delta A_fc.
#[derive(Clone, Debug)]
pub struct ProjectionNormCheck {
    /// ||A P (RAP)^-1 R||_2^2 computed densely.
    pub pi_norm_sq: f64,
    /// 1 + sigma_min, sigma the Gram spectrum (squared singular values) of
    /// (I - A_ff Delta) A_fc K^-1.
    pub rhs_min: f64,
    /// 1 + sigma_max of the same spectrum; this is the flavor the proof
    /// supports and the one observed to hold.
    pub rhs_max: f64,
}

/// Evaluate both candidate right-hand sides of the projection-norm identity
/// so the caller can assert which one holds.
pub fn projection_norm_check(
    a: &SparseMatrix,
    split: &CfSplitting,
    delta: &DenseMatrix,
) -> Result<ProjectionNormCheck> {
    let blocks = a.extract_cf_blocks(split);
    let ff = blocks.ff.to_dense();
    let fc = blocks.fc.to_dense();
    let cf = blocks.cf.to_dense();
    let cc = blocks.cc.to_dense();
    let n_f = split.n_f();
    let n_c = split.n_c();

    let w = delta.matmul(&fc).scale(-1.0); // W = -Delta A_fc
                                           // K = A_cf W + A_cc (Z = 0)
    let k = cf.matmul(&w).add(&cc);
    let k_lu = DenseLu::factor(&k)
        .map_err(|_| Error::Singular("coarse operator K in projection check".into()))?;

    // Pi = A P K^-1 R in FC block coordinates, R = (0 I)
    let ap_top = ff.matmul(&w).add(&fc); // (I - A_ff Delta) A_fc
    let ap_bot = cf.matmul(&w).add(&cc); // = K
    let k_inv = k_lu.solve(&DenseMatrix::identity(n_c));
    let n = n_f + n_c;
    let mut pi = DenseMatrix::zeros(n, n);
    let top = ap_top.matmul(&k_inv);
    let bot = ap_bot.matmul(&k_inv); // identity, up to roundoff
    for i in 0..n_f {
        for j in 0..n_c {
            pi[(i, n_f + j)] = top[(i, j)];
        }
    }
    for i in 0..n_c {
        for j in 0..n_c {
            pi[(n_f + i, n_f + j)] = bot[(i, j)];
        }
    }
    let pi_norm = operator_norm_2(&pi);

    let b = ap_top.matmul(&k_inv); // (I - A_ff Delta) A_fc K^-1
    let svs = singular_values(&b);
    let gram_max = svs.iter().fold(0.0f64, |m, s| m.max(s * s));
    let gram_min = svs.iter().fold(f64::INFINITY, |m, s| m.min(s * s));
    Ok(ProjectionNormCheck {
        pi_norm_sq: pi_norm * pi_norm,
        rhs_min: 1.0 + gram_min,
        rhs_max: 1.0 + gram_max,
    })
}

/// Error propagator of pure coarse-grid correction, I - P (RAP)^-1 R A.
pub fn cgc_error_propagator(
    a: &DenseMatrix,
    p: &DenseMatrix,
    r: &DenseMatrix,
) -> Result<DenseMatrix> {
    let k = r.matmul(&a.matmul(p));
    let k_lu = DenseLu::factor(&k).map_err(|_| Error::Singular("RAP in propagator".into()))?;
    let ra = r.matmul(a);
    let k_inv_ra = k_lu.solve(&ra);
    Ok(DenseMatrix::identity(a.n_rows()).sub(&p.matmul(&k_inv_ra)))
}

/// Residual propagator of coarse-grid correction, I - A P (RAP)^-1 R.
pub fn cgc_residual_propagator(
    a: &DenseMatrix,
    p: &DenseMatrix,
    r: &DenseMatrix,
) -> Result<DenseMatrix> {
    let k = r.matmul(&a.matmul(p));
    let k_lu = DenseLu::factor(&k).map_err(|_| Error::Singular("RAP in propagator".into()))?;
    let k_inv_r = k_lu.solve(r);
    Ok(DenseMatrix::identity(a.n_rows()).sub(&a.matmul(p).matmul(&k_inv_r)))
}

/// Error propagator of one F-relaxation pass with a dense Delta, in FC block
/// coordinates: [[I - Delta A_ff, -Delta A_fc], [0, I]].
pub fn f_relax_error_propagator(
    a: &SparseMatrix,
    split: &CfSplitting,
    delta: &DenseMatrix,
) -> DenseMatrix {
    let blocks = a.extract_cf_blocks(split);
    let ff = blocks.ff.to_dense();
    let fc = blocks.fc.to_dense();
    let n_f = split.n_f();
    let n = split.len();
    let tl = DenseMatrix::identity(n_f).sub(&delta.matmul(&ff));
    let tr = delta.matmul(&fc).scale(-1.0);
    let mut e = DenseMatrix::zeros(n, n);
    for i in 0..n_f {
        for j in 0..n_f {
            e[(i, j)] = tl[(i, j)];
        }
        for j in 0..(n - n_f) {
            e[(i, n_f + j)] = tr[(i, j)];
        }
    }
    for i in n_f..n {
        e[(i, i)] = 1.0;
    }
    e
}

/// Materialize the full-cycle error propagator by probing the V-cycle with
/// unit vectors (b = 0 makes the iterate its own error).
pub fn cycle_error_propagator(h: &Hierarchy) -> DenseMatrix {
    let n = h.n();
    let b = vec![0.0; n];
    let mut e = DenseMatrix::zeros(n, n);
    for col in 0..n {
        let mut x = vec![0.0; n];
        x[col] = 1.0;
        h.vcycle(0, &mut x, &b);
        for row in 0..n {
            e[(row, col)] = x[row];
        }
    }
    e
}

/// Complex eigenvalues as (re, im), unordered.
pub fn eigenvalues(m: &DenseMatrix) -> Vec<(f64, f64)> {
    let na = nalgebra::DMatrix::from_row_slice(m.n_rows(), m.n_cols(), m.values());
    na.complex_eigenvalues()
        .iter()
        .map(|c| (c.re, c.im))
        .collect()
}

/// Sort eigenvalues by (real, imaginary) for multiset comparison.
pub fn sort_spectrum(spec: &mut [(f64, f64)]) {
    spec.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap()
            .then(a.1.partial_cmp(&b.1).unwrap())
    });
}

/// Largest singular value.
pub fn operator_norm_2(m: &DenseMatrix) -> f64 {
    singular_values(m).into_iter().fold(0.0, f64::max)
}

pub fn singular_values(m: &DenseMatrix) -> Vec<f64> {
    let na = nalgebra::DMatrix::from_row_slice(m.n_rows(), m.n_cols(), m.values());
    na.singular_values().iter().copied().collect()
}

pub fn spectral_radius(m: &DenseMatrix) -> f64 {
    eigenvalues(m)
        .into_iter()
        .map(|(re, im)| (re * re + im * im).sqrt())
        .fold(0.0, f64::max)
}
