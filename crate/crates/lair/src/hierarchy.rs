//! Multilevel setup (coarsen, build transfers, Galerkin product, lump) and
//! the V-cycle. Each level stores its operator permuted to F-first-then-C
//! order so the CF block form is literal; vectors are permuted on entry and
//! exit of a level visit.

use crate::dense::{min_norm_least_squares, DenseLu, DenseMatrix};
use crate::error::{Error, Result};
use crate::relax::RelaxPlan;
use crate::sparse::{BlockLayout, SparseMatrix};
use crate::strength::{block_condense, classical_soc, rs_first_pass, CfSplitting};
use crate::transfer::{
    classical_interpolation_modified, ideal_restriction, lair_restriction, neumann_restriction,
    one_point_interpolation, Distance, RestrictionConfig,
};

#[derive(Clone, Debug)]
pub enum RestrictionKind {
    /// Local approximate ideal restriction at the given neighborhood degree.
    Lair {
        distance: Distance,
        theta_r: Option<f64>,
    },
    /// Truncated Neumann-series restriction of the given order.
    Neumann { order: usize, theta_r: Option<f64> },
    /// R := P^T (classical Galerkin baseline).
    TransposeP,
    /// Exact ideal restriction; dense, diagnostic scale only.
    Ideal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InterpolationKind {
    OnePoint,
    ClassicalModified,
    /// Exact ideal interpolation; dense, diagnostic scale only.
    Ideal,
}

#[derive(Clone, Copy, Debug)]
pub enum RelaxationKind {
    /// Two F-sweeps then one C-sweep of weighted Jacobi.
    FfcJacobi {
        omega: f64,
    },
    /// Weighted Jacobi on all points (classical baseline).
    GlobalJacobi {
        omega: f64,
    },
    /// Dense exact F-solve; diagnostic scale only.
    ExactFSolve,
    None,
}

#[derive(Clone, Debug)]
pub struct SetupConfig {
    pub theta_c: f64,
    pub restriction: RestrictionKind,
    pub interpolation: InterpolationKind,
    pub relaxation: RelaxationKind,
    /// Relaxation passes before the coarse-grid correction (0 for the lAIR
    /// cycle, 1 for the classical baseline).
    pub pre_sweeps: usize,
    /// Relaxation passes after the coarse-grid correction.
    pub post_sweeps: usize,
    /// Lumping tolerance applied to Galerkin products.
    pub theta_d: f64,
    /// Also lump the input operator before coarsening.
    pub lump_finest: bool,
    pub max_coarse: usize,
    pub max_levels: usize,
    pub block: Option<BlockLayout>,
}

impl SetupConfig {
    /// lAIR solver defaults: theta_C = 0.4, lumping at 0.001, one-point P,
    /// F-F-C Jacobi after the correction, no pre-relaxation.
    pub fn lair(distance: Distance) -> Self {
        SetupConfig {
            theta_c: 0.4,
            restriction: RestrictionKind::Lair {
                distance,
                theta_r: None,
            },
            interpolation: InterpolationKind::OnePoint,
            relaxation: RelaxationKind::FfcJacobi { omega: 1.0 },
            pre_sweeps: 0,
            post_sweeps: 1,
            theta_d: 0.001,
            lump_finest: false,
            max_coarse: 40,
            max_levels: 25,
            block: None,
        }
    }

    /// Classical-AMG baseline: R = P^T with modified classical interpolation
    /// and one pre- and post-sweep of weighted Jacobi.
    pub fn classical_pt() -> Self {
        SetupConfig {
            theta_c: 0.4,
            restriction: RestrictionKind::TransposeP,
            interpolation: InterpolationKind::ClassicalModified,
            relaxation: RelaxationKind::GlobalJacobi { omega: 2.0 / 3.0 },
            pre_sweeps: 1,
            post_sweeps: 1,
            theta_d: 0.001,
            lump_finest: false,
            max_coarse: 40,
            max_levels: 25,
            block: None,
        }
    }

    pub fn with_block(mut self, block: BlockLayout) -> Self {
        self.block = Some(block);
        self
    }

    pub fn with_interpolation(mut self, interpolation: InterpolationKind) -> Self {
        self.interpolation = interpolation;
        self
    }

    pub fn with_theta_d(mut self, theta_d: f64) -> Self {
        self.theta_d = theta_d;
        self
    }
}

/// One level of the hierarchy, stored in F-first permuted ordering.
#[derive(Clone, Debug)]
pub struct Level {
    /// Operator in F-first order (scalar indices).
    pub a: SparseMatrix,
    /// Restriction, n_coarse x n, columns in the permuted ordering.
    pub r: SparseMatrix,
    /// Interpolation, n x n_coarse, rows in the permuted ordering.
    pub p: SparseMatrix,
    pub relax: RelaxPlan,
    /// Scalar permutation: position in F-first order -> natural index.
    pub fc_order: Vec<usize>,
    /// Inverse of `fc_order`.
    pub fc_rank: Vec<usize>,
    /// Number of scalar F unknowns (block size already folded in).
    pub n_f: usize,
    /// Nodal CF splitting in the level's natural ordering.
    pub split: CfSplitting,
    /// Coarse-side scalar rows of R whose local solve fell back.
    pub fallback_rows: Vec<usize>,
}

impl Level {
    pub fn n(&self) -> usize {
        self.a.n_rows()
    }

    pub fn n_coarse(&self) -> usize {
        self.r.n_rows()
    }
}

#[derive(Clone, Debug)]
pub struct LevelStats {
    pub n: usize,
    pub nnz: usize,
    pub n_c: usize,
    pub fallback_solves: usize,
    /// Entries moved onto the diagonal when the next operator was lumped.
    pub lumped_entries: usize,
    /// Total absolute value moved onto the diagonal.
    pub lumped_mass: f64,
}

#[derive(Clone, Debug, Default)]
pub struct SetupReport {
    pub levels: Vec<LevelStats>,
    pub coarse_n: usize,
    pub coarse_nnz: usize,
    pub operator_complexity: f64,
    /// Coarsening stopped because the first pass kept every point (or none).
    pub stalled: bool,
    /// The coarsest operator was singular and uses a least-squares solve.
    pub coarse_singular: bool,
}

impl SetupReport {
    /// Structured text table: one line per level plus the coarsest.
    pub fn to_table(&self) -> String {
        let mut out = String::from("level        n        nnz        n_c  fallbacks  lumped_nnz\n");
        for (l, s) in self.levels.iter().enumerate() {
            out.push_str(&format!(
                "{:>5} {:>8} {:>10} {:>10} {:>10} {:>11}\n",
                l, s.n, s.nnz, s.n_c, s.fallback_solves, s.lumped_entries
            ));
        }
        out.push_str(&format!(
            "{:>5} {:>8} {:>10}          -          -           -\n",
            self.levels.len(),
            self.coarse_n,
            self.coarse_nnz
        ));
        out.push_str(&format!(
            "operator complexity {:.4}\n",
            self.operator_complexity
        ));
        out
    }
}

enum CoarseSolve {
    Lu(DenseLu),
    /// Coarsest operator is singular; solve in the minimal-norm sense.
    MinNorm(DenseMatrix),
}

pub struct Hierarchy {
    pub levels: Vec<Level>,
    pub coarse_a: SparseMatrix,
    coarse: CoarseSolve,
    pub report: SetupReport,
    pub config: SetupConfig,
}

/// Move small off-diagonal entries onto the diagonal, preserving row sums:
/// entry j != i is lumped when |a_ij| < theta_d * max_j |a_ij| (max over the
/// whole row, diagonal included).
pub fn lump_to_diagonal(a: &SparseMatrix, theta_d: f64) -> SparseMatrix {
    let (lumped, _, _) = lump_with_stats(a, theta_d);
    lumped
}

fn lump_with_stats(a: &SparseMatrix, theta_d: f64) -> (SparseMatrix, usize, f64) {
    assert_eq!(a.n_rows(), a.n_cols(), "lumping a non-square matrix");
    let n = a.n_rows();
    let mut trips: Vec<(usize, usize, f64)> = Vec::with_capacity(a.nnz());
    let mut dropped = 0usize;
    let mut mass = 0.0f64;
    for i in 0..n {
        let (cols, vals) = a.row(i);
        let cutoff = theta_d * a.row_max_abs(i);
        let mut lump_sum = 0.0;
        let mut any = false;
        for (&j, &v) in cols.iter().zip(vals) {
            if j != i && v.abs() < cutoff {
                lump_sum += v;
                dropped += 1;
                mass += v.abs();
                any = true;
            } else {
                trips.push((i, j, v));
            }
        }
        if any {
            trips.push((i, i, lump_sum)); // merged with the diagonal entry
        }
    }
    (
        SparseMatrix::from_triplets(n, n, &trips).expect("lump triplets"),
        dropped,
        mass,
    )
}

/// Build the multilevel hierarchy: per level, (block-condense) -> strength ->
/// first-pass splitting -> restriction -> interpolation -> Galerkin product
/// -> lumping, until the operator is small enough to factor densely.
pub fn setup(a: &SparseMatrix, cfg: &SetupConfig) -> Result<Hierarchy> {
    if a.n_rows() == 0 {
        return Err(Error::InvalidInput("empty matrix".into()));
    }
    if a.n_rows() != a.n_cols() {
        return Err(Error::InvalidInput("setup needs a square matrix".into()));
    }
    let k = cfg.block.map_or(1, |b| b.block_size);
    if !a.n_rows().is_multiple_of(k) {
        return Err(Error::InvalidInput(format!(
            "matrix dimension {} is not a multiple of block size {k}",
            a.n_rows()
        )));
    }
    if k > 1 {
        match cfg.interpolation {
            InterpolationKind::ClassicalModified => {
                return Err(Error::InvalidInput(
                    "classical interpolation has no block form; use one-point for block layouts"
                        .into(),
                ))
            }
            InterpolationKind::Ideal => {
                return Err(Error::InvalidInput(
                    "ideal interpolation is a scalar diagnostic".into(),
                ))
            }
            InterpolationKind::OnePoint => {}
        }
        if let RestrictionKind::Neumann { .. }
        | RestrictionKind::TransposeP
        | RestrictionKind::Ideal = cfg.restriction
        {
            return Err(Error::InvalidInput(
                "Neumann, P^T, and ideal restriction are scalar-only".into(),
            ));
        }
    }

    let mut current = if cfg.lump_finest {
        lump_to_diagonal(a, cfg.theta_d)
    } else {
        a.clone()
    };
    let nnz0 = current.nnz() as f64;
    let mut levels: Vec<Level> = Vec::new();
    let mut report = SetupReport::default();
    let mut nnz_total = 0.0;

    loop {
        let n = current.n_rows();
        if n <= cfg.max_coarse || levels.len() + 1 >= cfg.max_levels {
            break;
        }
        let nodal: SparseMatrix;
        let basis = if k > 1 {
            nodal = block_condense(&current, cfg.block.unwrap());
            &nodal
        } else {
            &current
        };
        let s_c = classical_soc(basis, cfg.theta_c);
        let split = rs_first_pass(&s_c);
        if split.n_c() == basis.n_rows() || split.n_c() == 0 {
            report.stalled = true;
            break;
        }

        // restriction
        let (restriction, r_theta) = match &cfg.restriction {
            RestrictionKind::Lair { distance, theta_r } => {
                let theta = theta_r.unwrap_or(distance.default_theta());
                let s_r = classical_soc(basis, theta);
                let mut rc = RestrictionConfig::new(*distance).with_theta(theta);
                if let Some(b) = cfg.block {
                    if k > 1 {
                        rc = rc.with_block(b);
                    }
                }
                (lair_restriction(&current, &split, &s_r, &rc), theta)
            }
            RestrictionKind::Neumann { order, theta_r } => {
                let theta = theta_r.unwrap_or(0.1);
                let rest = neumann_restriction(&current, &split, *order)
                    .map_err(|e| Error::Singular(format!("level {}: {e}", levels.len())))?;
                (rest, theta)
            }
            RestrictionKind::TransposeP => (
                // placeholder; replaced after P is built
                crate::transfer::Restriction {
                    r: SparseMatrix::identity(1),
                    fallback_rows: Vec::new(),
                    fallback_solves: 0,
                },
                Distance::One.default_theta(),
            ),
            RestrictionKind::Ideal => {
                let rest = ideal_restriction(&current, &split)
                    .map_err(|e| Error::Singular(format!("level {}: {e}", levels.len())))?;
                (rest, Distance::One.default_theta())
            }
        };

        // interpolation, on the strength graph at the restriction threshold
        let s_p = classical_soc(basis, r_theta);
        let interp = match cfg.interpolation {
            InterpolationKind::OnePoint => {
                let nodal_p = one_point_interpolation(basis, &s_p, &split);
                crate::transfer::Interpolation {
                    p: nodal_p.p.expand_identity_blocks(k),
                    fallback_rows: nodal_p.fallback_rows,
                }
            }
            InterpolationKind::ClassicalModified => {
                classical_interpolation_modified(&current, &s_p, &split)
            }
            InterpolationKind::Ideal => crate::transfer::ideal_interpolation(&current, &split)
                .map_err(|e| Error::Singular(format!("level {}: {e}", levels.len())))?,
        };

        let restriction = match &cfg.restriction {
            RestrictionKind::TransposeP => crate::transfer::Restriction {
                r: interp.p.transpose(),
                fallback_rows: Vec::new(),
                fallback_solves: 0,
            },
            _ => restriction,
        };

        // Galerkin product and lumping
        let coarse_raw = restriction.r.spmm(&current).spmm(&interp.p);
        let (coarse, lumped_entries, lumped_mass) = lump_with_stats(&coarse_raw, cfg.theta_d);

        // permute the level to F-first scalar ordering
        let fc_nodal = split.fc_order();
        let mut fc_order = Vec::with_capacity(n);
        for &node in &fc_nodal {
            for r in 0..k {
                fc_order.push(node * k + r);
            }
        }
        let mut fc_rank = vec![0usize; n];
        for (new, &old) in fc_order.iter().enumerate() {
            fc_rank[old] = new;
        }
        let a_perm = current.permute_symmetric(&fc_order);
        let r_perm = restriction.r.permute_cols(&fc_rank);
        let p_perm = interp.p.permute_rows(&fc_order);
        let n_f = split.n_f() * k;

        let relax_block = if k > 1 { cfg.block } else { None };
        let relax = match cfg.relaxation {
            RelaxationKind::FfcJacobi { omega } => RelaxPlan::ffc(&a_perm, n_f, omega, relax_block)
                .map_err(|e| Error::Singular(format!("level {}: {e}", levels.len())))?,
            RelaxationKind::GlobalJacobi { omega } => RelaxPlan::global(&a_perm, omega)
                .map_err(|e| Error::Singular(format!("level {}: {e}", levels.len())))?,
            RelaxationKind::ExactFSolve => RelaxPlan::exact_f(&a_perm, n_f)
                .map_err(|e| Error::Singular(format!("level {}: {e}", levels.len())))?,
            RelaxationKind::None => RelaxPlan::none(),
        };

        report.levels.push(LevelStats {
            n,
            nnz: current.nnz(),
            n_c: split.n_c() * k,
            fallback_solves: restriction.fallback_solves,
            lumped_entries,
            lumped_mass,
        });
        nnz_total += current.nnz() as f64;

        levels.push(Level {
            a: a_perm,
            r: r_perm,
            p: p_perm,
            relax,
            fc_order,
            fc_rank,
            n_f,
            split,
            fallback_rows: restriction.fallback_rows,
        });
        current = coarse;
    }

    nnz_total += current.nnz() as f64;
    report.coarse_n = current.n_rows();
    report.coarse_nnz = current.nnz();
    report.operator_complexity = nnz_total / nnz0;

    let coarse_dense = current.to_dense();
    let coarse = match DenseLu::factor(&coarse_dense) {
        Ok(lu) => CoarseSolve::Lu(lu),
        Err(_) => {
            report.coarse_singular = true;
            CoarseSolve::MinNorm(coarse_dense)
        }
    };

    Ok(Hierarchy {
        levels,
        coarse_a: current,
        coarse,
        report,
        config: cfg.clone(),
    })
}

impl Hierarchy {
    pub fn n(&self) -> usize {
        if let Some(first) = self.levels.first() {
            first.n()
        } else {
            self.coarse_a.n_rows()
        }
    }

    pub fn depth(&self) -> usize {
        self.levels.len() + 1
    }

    /// One V-cycle starting at `level`, updating `x` in the level's natural
    /// ordering: optional pre-relaxation, residual, restrict, recurse,
    /// interpolate-and-correct, post-relaxation.
    pub fn vcycle(&self, level: usize, x: &mut [f64], b: &[f64]) {
        if level == self.levels.len() {
            let sol = match &self.coarse {
                CoarseSolve::Lu(lu) => lu.solve_vec(b),
                CoarseSolve::MinNorm(a) => {
                    min_norm_least_squares(a, &DenseMatrix::from_col(b)).column(0)
                }
            };
            x.copy_from_slice(&sol);
            return;
        }
        let lvl = &self.levels[level];
        let n = lvl.n();
        // into F-first ordering
        let mut xp: Vec<f64> = (0..n).map(|i| x[lvl.fc_order[i]]).collect();
        let bp: Vec<f64> = (0..n).map(|i| b[lvl.fc_order[i]]).collect();

        for _ in 0..self.config.pre_sweeps {
            lvl.relax.apply(&lvl.a, lvl.n_f, &mut xp, &bp);
        }

        let ax = lvl.a.spmv(&xp);
        let r: Vec<f64> = bp.iter().zip(ax).map(|(bi, axi)| bi - axi).collect();
        let bc = lvl.r.spmv(&r);
        let mut ec = vec![0.0; lvl.n_coarse()];
        self.vcycle(level + 1, &mut ec, &bc);
        let correction = lvl.p.spmv(&ec);
        for (xi, ci) in xp.iter_mut().zip(correction) {
            *xi += ci;
        }

        for _ in 0..self.config.post_sweeps {
            lvl.relax.apply(&lvl.a, lvl.n_f, &mut xp, &bp);
        }

        for i in 0..n {
            x[lvl.fc_order[i]] = xp[i];
        }
    }

    /// One V-cycle from a zero initial guess (the preconditioner action).
    pub fn apply_cycle(&self, b: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n()];
        self.vcycle(0, &mut x, b);
        x
    }
}

impl crate::krylov::Preconditioner for Hierarchy {
    fn apply(&self, r: &[f64]) -> Vec<f64> {
        self.apply_cycle(r)
    }

    fn work_units(&self) -> f64 {
        crate::diagnostics::cycle_complexity(self).cycle_complexity
    }
}
