//! Restarted GMRES with right preconditioning and modified Gram-Schmidt.
//! Residual norms are of the original system, so the stopping rule matches
//! the relative-residual protocol; the history is re-anchored with an
//! explicit residual at every restart.

use crate::diagnostics::measured_cf;
use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// A fixed linear operation applied to the residual once per iteration
/// (one V-cycle per application for the multigrid preconditioner).
pub trait Preconditioner {
    fn apply(&self, r: &[f64]) -> Vec<f64>;
    /// Work units per application, for the wall-work estimate.
    fn work_units(&self) -> f64 {
        0.0
    }
}

/// No preconditioning.
pub struct IdentityPrecond;

impl Preconditioner for IdentityPrecond {
    fn apply(&self, r: &[f64]) -> Vec<f64> {
        r.to_vec()
    }
}

#[derive(Clone, Debug)]
pub struct SolveConfig {
    /// Stop when ||r|| / ||r0|| falls below this.
    pub rel_tol: f64,
    pub max_iters: usize,
    pub restart: usize,
    /// Seed for the random initial guess convention (used by callers).
    pub seed: u64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            rel_tol: 1e-12,
            max_iters: 400,
            restart: 100,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    /// True-residual norms: entry 0 is ||r0||, then one entry per iteration.
    pub residual_history: Vec<f64>,
    /// Iterations = preconditioner applications, counted exactly.
    pub iterations: usize,
    pub converged: bool,
    /// Geometric-mean residual reduction over the trailing half of history.
    pub measured_cf: f64,
    /// Estimated work: iterations * (preconditioner WU + 1 SpMV) + 1 SpMV.
    pub wall_estimate_wu: f64,
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Right-preconditioned restarted GMRES for A x = b starting from `x0`.
pub fn gmres(
    a: &SparseMatrix,
    b: &[f64],
    x0: &[f64],
    m: &dyn Preconditioner,
    cfg: &SolveConfig,
) -> Result<(Vec<f64>, SolveReport)> {
    let n = a.n_rows();
    assert_eq!(b.len(), n, "gmres: rhs dimension mismatch");
    assert_eq!(x0.len(), n, "gmres: guess dimension mismatch");
    assert!(cfg.restart >= 1, "gmres: restart must be at least 1");

    let mut x = x0.to_vec();
    let mut history: Vec<f64> = Vec::new();
    let mut total_iters = 0usize;
    let mut converged = false;

    let r0 = {
        let ax = a.spmv(&x);
        b.iter()
            .zip(ax)
            .map(|(bi, axi)| bi - axi)
            .collect::<Vec<_>>()
    };
    let norm_r0 = norm2(&r0);
    history.push(norm_r0);
    if !norm_r0.is_finite() {
        return Err(Error::NumericalBreakdown(
            "initial residual not finite".into(),
        ));
    }
    if norm_r0 == 0.0 {
        let report = finish_report(history, 0, true, m.work_units());
        return Ok((x, report));
    }

    'outer: while total_iters < cfg.max_iters {
        // explicit residual at each restart
        let r = {
            let ax = a.spmv(&x);
            b.iter()
                .zip(ax)
                .map(|(bi, axi)| bi - axi)
                .collect::<Vec<_>>()
        };
        let beta = norm2(&r);
        if !beta.is_finite() {
            return Err(Error::NumericalBreakdown("residual not finite".into()));
        }
        if beta / norm_r0 <= cfg.rel_tol {
            converged = true;
            break;
        }

        let m_dim = cfg.restart;
        let mut v: Vec<Vec<f64>> = Vec::with_capacity(m_dim + 1);
        let mut z: Vec<Vec<f64>> = Vec::with_capacity(m_dim); // preconditioned basis
        let mut h = vec![vec![0.0f64; m_dim]; m_dim + 1]; // h[row][col]
        let mut cs = vec![0.0f64; m_dim];
        let mut sn = vec![0.0f64; m_dim];
        let mut g = vec![0.0f64; m_dim + 1];
        g[0] = beta;
        v.push(r.iter().map(|ri| ri / beta).collect());

        let mut k = 0usize;
        while k < m_dim && total_iters < cfg.max_iters {
            let zk = m.apply(&v[k]);
            let mut w = a.spmv(&zk);
            z.push(zk);
            total_iters += 1;

            // modified Gram-Schmidt
            for j in 0..=k {
                let hjk = dot(&v[j], &w);
                h[j][k] = hjk;
                for (wi, vji) in w.iter_mut().zip(&v[j]) {
                    *wi -= hjk * vji;
                }
            }
            let wnorm = norm2(&w);
            if !wnorm.is_finite() {
                return Err(Error::NumericalBreakdown(
                    "Arnoldi vector not finite".into(),
                ));
            }
            h[k + 1][k] = wnorm;

            // apply stored Givens rotations to the new column
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let (c, s) = givens(h[k][k], h[k + 1][k]);
            cs[k] = c;
            sn[k] = s;
            h[k][k] = c * h[k][k] + s * h[k + 1][k];
            h[k + 1][k] = 0.0;
            let gk = c * g[k];
            g[k + 1] = -s * g[k];
            g[k] = gk;

            let res_est = g[k + 1].abs();
            history.push(res_est);
            k += 1;

            if res_est / norm_r0 <= cfg.rel_tol {
                update_solution(&mut x, &h, &g, &z, k);
                // confirm with the true residual; restart if rounding disagrees
                let ax = a.spmv(&x);
                let true_r = norm2(
                    &b.iter()
                        .zip(ax)
                        .map(|(bi, axi)| bi - axi)
                        .collect::<Vec<_>>(),
                );
                *history.last_mut().unwrap() = true_r;
                if true_r / norm_r0 <= cfg.rel_tol {
                    converged = true;
                    break 'outer;
                }
                continue 'outer;
            }
            if wnorm < 1e-14 {
                // Arnoldi breakdown: the Krylov space is exhausted
                update_solution(&mut x, &h, &g, &z, k);
                let ax = a.spmv(&x);
                let true_r = norm2(
                    &b.iter()
                        .zip(ax)
                        .map(|(bi, axi)| bi - axi)
                        .collect::<Vec<_>>(),
                );
                *history.last_mut().unwrap() = true_r;
                converged = true_r / norm_r0 <= cfg.rel_tol;
                break 'outer;
            }
            v.push(w.iter().map(|wi| wi / wnorm).collect());
        }
        update_solution(&mut x, &h, &g, &z, k);
    }

    if !converged {
        // final explicit residual
        let ax = a.spmv(&x);
        let true_r = norm2(
            &b.iter()
                .zip(ax)
                .map(|(bi, axi)| bi - axi)
                .collect::<Vec<_>>(),
        );
        converged = true_r / norm_r0 <= cfg.rel_tol;
    }
    let report = finish_report(history, total_iters, converged, m.work_units());
    Ok((x, report))
}

fn finish_report(
    history: Vec<f64>,
    iterations: usize,
    converged: bool,
    precond_wu: f64,
) -> SolveReport {
    let cf = measured_cf(&history);
    SolveReport {
        measured_cf: cf,
        wall_estimate_wu: iterations as f64 * (precond_wu + 1.0) + 1.0,
        residual_history: history,
        iterations,
        converged,
    }
}

/// Solve the k x k least-squares triangle and add Z y into x.
fn update_solution(x: &mut [f64], h: &[Vec<f64>], g: &[f64], z: &[Vec<f64>], k: usize) {
    if k == 0 {
        return;
    }
    let mut y = vec![0.0f64; k];
    for i in (0..k).rev() {
        let mut acc = g[i];
        for j in (i + 1)..k {
            acc -= h[i][j] * y[j];
        }
        y[i] = acc / h[i][i];
    }
    for (j, yj) in y.iter().enumerate() {
        for (xi, zji) in x.iter_mut().zip(&z[j]) {
            *xi += yj * zji;
        }
    }
}

fn givens(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        (1.0, 0.0)
    } else if a.abs() > b.abs() {
        let t = b / a;
        let c = 1.0 / (1.0 + t * t).sqrt();
        (c * a.signum(), c * t * a.signum())
    } else {
        let t = a / b;
        let s = 1.0 / (1.0 + t * t).sqrt();
        (s * t * b.signum(), s * b.signum())
    }
}
