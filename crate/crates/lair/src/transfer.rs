//! Restriction and interpolation builders: exact ideal operators (dense,
//! diagnostic), local approximate ideal restriction in scalar and block form,
//! truncated-Neumann restriction, one-point interpolation, and modified
//! classical interpolation.
//!
//! Operators are indexed in the matrix's own point ordering; C-point rows of
//! P and C-point columns of R are unit vectors, coarse indices preserve
//! original point order.

use crate::dense::{dense_solve, DenseLu, DenseMatrix};
use crate::error::{Error, Result};
use crate::sparse::{BlockLayout, SparseMatrix};
use crate::strength::{CfSplitting, StrengthGraph};

/// Graph distance of the restriction neighborhood.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Distance {
    One,
    Two,
}

impl Distance {
    /// Strength thresholds paired with each neighborhood degree:
    /// 0.1 for distance one, 0.2 for distance two.
    pub fn default_theta(self) -> f64 {
        match self {
            Distance::One => 0.1,
            Distance::Two => 0.2,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RestrictionConfig {
    pub distance: Distance,
    pub theta_r: f64,
    pub block: Option<BlockLayout>,
}

impl RestrictionConfig {
    pub fn new(distance: Distance) -> Self {
        RestrictionConfig {
            distance,
            theta_r: distance.default_theta(),
            block: None,
        }
    }

    pub fn with_theta(mut self, theta_r: f64) -> Self {
        self.theta_r = theta_r;
        self
    }

    pub fn with_block(mut self, block: BlockLayout) -> Self {
        self.block = Some(block);
        self
    }
}

/// A built restriction operator together with the C-rows whose local system
/// needed the least-squares fallback.
#[derive(Clone, Debug)]
pub struct Restriction {
    pub r: SparseMatrix,
    /// Scalar coarse-side row indices of `r` built through the fallback.
    pub fallback_rows: Vec<usize>,
    /// Number of local solves that fell back (one per C-point or C-block).
    pub fallback_solves: usize,
}

/// A built interpolation operator; `fallback_rows` lists F-rows that fell
/// back to a one-point row (modified classical only).
#[derive(Clone, Debug)]
pub struct Interpolation {
    pub p: SparseMatrix,
    pub fallback_rows: Vec<usize>,
}

/// Exact ideal restriction R = (-A_cf A_ff^-1, I): dense Z, diagnostic scale.
pub fn ideal_restriction(a: &SparseMatrix, split: &CfSplitting) -> Result<Restriction> {
    let blocks = a.extract_cf_blocks(split);
    let ff_t = blocks.ff.to_dense().transpose();
    let lu =
        DenseLu::factor(&ff_t).map_err(|_| Error::Singular("A_ff in ideal restriction".into()))?;
    // X = A_cf A_ff^-1 from A_ff^T X^T = A_cf^T
    let xt = lu.solve(&blocks.cf.to_dense().transpose());
    let z = xt.transpose().scale(-1.0);
    let f_points = split.f_points();
    let mut trips: Vec<(usize, usize, f64)> = Vec::new();
    for c in 0..split.n_c() {
        for (fi, &p) in f_points.iter().enumerate() {
            trips.push((c, p, z[(c, fi)]));
        }
    }
    for p in split.c_points() {
        trips.push((split.coarse_index(p), p, 1.0));
    }
    let r = SparseMatrix::from_triplets(split.n_c(), a.n_rows(), &trips)?;
    Ok(Restriction {
        r,
        fallback_rows: Vec::new(),
        fallback_solves: 0,
    })
}

/// Exact ideal interpolation P = (-A_ff^-1 A_fc; I): dense W, diagnostic scale.
pub fn ideal_interpolation(a: &SparseMatrix, split: &CfSplitting) -> Result<Interpolation> {
    let blocks = a.extract_cf_blocks(split);
    let ff = blocks.ff.to_dense();
    let lu =
        DenseLu::factor(&ff).map_err(|_| Error::Singular("A_ff in ideal interpolation".into()))?;
    let w = lu.solve(&blocks.fc.to_dense()).scale(-1.0);
    let f_points = split.f_points();
    let mut trips: Vec<(usize, usize, f64)> = Vec::new();
    for (fi, &p) in f_points.iter().enumerate() {
        for c in 0..split.n_c() {
            trips.push((p, c, w[(fi, c)]));
        }
    }
    for p in split.c_points() {
        trips.push((p, split.coarse_index(p), 1.0));
    }
    let p = SparseMatrix::from_triplets(a.n_rows(), split.n_c(), &trips)?;
    Ok(Interpolation {
        p,
        fallback_rows: Vec::new(),
    })
}

/// Restriction neighborhood of C-point `i`: its strong F-neighbors, plus at
/// distance two the strong F-neighbors of those (F-F-C paths only, never
/// F-C-C). Sorted, deduplicated, contains no C-points and not `i`.
pub fn lair_neighborhood(
    s: &StrengthGraph,
    split: &CfSplitting,
    i: usize,
    distance: Distance,
) -> Vec<usize> {
    debug_assert!(split.is_c(i));
    let mut set: Vec<usize> = s
        .neighbors(i)
        .iter()
        .copied()
        .filter(|&j| split.is_f(j))
        .collect();
    if distance == Distance::Two {
        let direct = set.clone();
        for &f in &direct {
            for &g in s.neighbors(f) {
                if split.is_f(g) && g != i {
                    set.push(g);
                }
            }
        }
        set.sort_unstable();
        set.dedup();
    }
    set
}

/// Local approximate ideal restriction. For each C-point i with neighborhood
/// R_i = {l_1..l_S}, solves the S x S system whose (p, q) entry is
/// a_{l_q l_p} against right-hand side -a_{i l_p}; row i of Z holds the
/// resulting weights, so (RA)_{ik} = 0 for all k in R_i. With a block layout
/// the same system is assembled over every scalar column of the neighborhood
/// blocks and solved for k right-hand sides at once.
pub fn lair_restriction(
    a: &SparseMatrix,
    split: &CfSplitting,
    s: &StrengthGraph,
    cfg: &RestrictionConfig,
) -> Restriction {
    let k = cfg.block.map_or(1, |b| b.block_size);
    assert_eq!(
        split.len() * k,
        a.n_rows(),
        "splitting does not cover the matrix at this block size"
    );
    assert_eq!(s.len(), split.len(), "strength graph / splitting mismatch");

    let n = a.n_rows();
    let n_c = split.n_c();
    let mut trips: Vec<(usize, usize, f64)> = Vec::new();
    let mut fallback_rows = Vec::new();
    let mut fallback_solves = 0usize;

    for node in 0..split.len() {
        if !split.is_c(node) {
            continue;
        }
        let c = split.coarse_index(node);
        let hood = lair_neighborhood(s, split, node, cfg.distance);
        // scalar columns covered by the neighborhood
        let cols: Vec<usize> = hood
            .iter()
            .flat_map(|&l| (0..k).map(move |q| l * k + q))
            .collect();
        if !cols.is_empty() {
            let m = cols.len();
            // transposed local indexing: entry (p, q) reads a at (col_q, col_p)
            let local = DenseMatrix::from_fn(m, m, |p, q| a.get(cols[q], cols[p]));
            let rhs = DenseMatrix::from_fn(m, k, |p, r| -a.get(node * k + r, cols[p]));
            let (x, fell_back) = dense_solve(&local, &rhs);
            if fell_back {
                fallback_solves += 1;
                for r in 0..k {
                    fallback_rows.push(c * k + r);
                }
            }
            for r in 0..k {
                for (q, &col) in cols.iter().enumerate() {
                    trips.push((c * k + r, col, x[(q, r)]));
                }
            }
        }
        for r in 0..k {
            trips.push((c * k + r, node * k + r, 1.0));
        }
    }
    let r = SparseMatrix::from_triplets(n_c * k, n, &trips).expect("lair triplets");
    Restriction {
        r,
        fallback_rows,
        fallback_solves,
    }
}

/// kth-order Neumann restriction: after scaling A_ff rows to unit diagonal,
/// Z = -A_cf (sum_{m<=k} L^m) D_ff^-1 with L the strictly lower triangle of
/// the scaled F-F block in the current F ordering.
pub fn neumann_restriction(
    a: &SparseMatrix,
    split: &CfSplitting,
    order: usize,
) -> Result<Restriction> {
    let blocks = a.extract_cf_blocks(split);
    let diag = blocks.ff.diagonal();
    let f_points = split.f_points();
    for (fi, &d) in diag.iter().enumerate() {
        if d == 0.0 {
            return Err(Error::Singular(format!(
                "zero diagonal at F-point {} in Neumann restriction",
                f_points[fi]
            )));
        }
    }
    let dinv: Vec<f64> = diag.iter().map(|d| 1.0 / d).collect();
    let scaled_ff = blocks.ff.scale_rows(&dinv);
    // L = strict lower of (I - D^-1 A_ff) = negated strict lower of the scaled block
    let mut l = scaled_ff.strict_lower();
    l = l.scale_rows(&vec![-1.0; l.n_rows()]);
    // series = sum_{m=0}^{order} L^m by Horner
    let mut series = SparseMatrix::identity(split.n_f());
    for _ in 0..order {
        let li = l.spmm(&series);
        series = add_identity(&li);
    }
    let z = blocks
        .cf
        .spmm(&series.scale_cols(&dinv))
        .scale_rows(&vec![-1.0; split.n_c()]);

    let mut trips: Vec<(usize, usize, f64)> = Vec::new();
    for (c, fi, v) in z.iter_triplets() {
        trips.push((c, f_points[fi], v));
    }
    for p in split.c_points() {
        trips.push((split.coarse_index(p), p, 1.0));
    }
    let r = SparseMatrix::from_triplets(split.n_c(), a.n_rows(), &trips)?;
    Ok(Restriction {
        r,
        fallback_rows: Vec::new(),
        fallback_solves: 0,
    })
}

fn add_identity(m: &SparseMatrix) -> SparseMatrix {
    let mut trips: Vec<(usize, usize, f64)> = m.iter_triplets().collect();
    for i in 0..m.n_rows() {
        trips.push((i, i, 1.0));
    }
    SparseMatrix::from_triplets(m.n_rows(), m.n_cols(), &trips).unwrap()
}

/// One-point interpolation: each F-point takes the value of its strongest
/// C-neighbor (largest -a_ij among strong C-neighbors, then largest |a_ij|
/// over all C-neighbors, then a zero row). Operates nodally; use
/// `expand_identity_blocks` on the result for a block layout.
pub fn one_point_interpolation(
    a: &SparseMatrix,
    s: &StrengthGraph,
    split: &CfSplitting,
) -> Interpolation {
    let n = split.len();
    let mut trips: Vec<(usize, usize, f64)> = Vec::new();
    for i in 0..n {
        if split.is_c(i) {
            trips.push((i, split.coarse_index(i), 1.0));
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for &j in s.neighbors(i) {
            if split.is_c(j) {
                let w = -a.get(i, j);
                if best.is_none_or(|(_, bw)| w > bw) {
                    best = Some((j, w));
                }
            }
        }
        if best.is_none() {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if j != i && split.is_c(j) {
                    let w = v.abs();
                    if best.is_none_or(|(_, bw)| w > bw) {
                        best = Some((j, w));
                    }
                }
            }
        }
        if let Some((j, _)) = best {
            trips.push((i, split.coarse_index(j), 1.0));
        }
        // no C-neighbor at all: zero row, corrected only by relaxation
    }
    let p = SparseMatrix::from_triplets(n, split.n_c(), &trips).expect("one-point triplets");
    Interpolation {
        p,
        fallback_rows: Vec::new(),
    }
}

/// Modified classical (Ruge-Stuben) interpolation with sign filtering and
/// diagonal lumping of strong F-neighbors that share no C-point with the row.
/// A zero modified diagonal falls back to a one-point row.
pub fn classical_interpolation_modified(
    a: &SparseMatrix,
    s: &StrengthGraph,
    split: &CfSplitting,
) -> Interpolation {
    let n = split.len();
    let one_point = one_point_interpolation(a, s, split);
    let mut trips: Vec<(usize, usize, f64)> = Vec::new();
    let mut fallback_rows = Vec::new();

    // sign-filtered entry: a_xy when its sign differs from the row diagonal
    let filtered = |row: usize, col: usize| -> f64 {
        let v = a.get(row, col);
        if v == 0.0 {
            return 0.0;
        }
        let d = a.get(row, row);
        if (v > 0.0) != (d > 0.0) {
            v
        } else {
            0.0
        }
    };

    for i in 0..n {
        if split.is_c(i) {
            trips.push((i, split.coarse_index(i), 1.0));
            continue;
        }
        let strong = s.neighbors(i);
        let c_set: Vec<usize> = strong.iter().copied().filter(|&j| split.is_c(j)).collect();
        let f_set: Vec<usize> = strong.iter().copied().filter(|&j| split.is_f(j)).collect();
        if c_set.is_empty() {
            // nothing to interpolate from; leave the zero row
            continue;
        }
        let (cols, vals) = a.row(i);
        let mut denom = a.get(i, i);
        for (&j, &v) in cols.iter().zip(vals) {
            if j != i && !strong.contains(&j) {
                denom += v; // weak connections collapse to the diagonal
            }
        }
        let mut numer: Vec<f64> = c_set.iter().map(|&j| a.get(i, j)).collect();
        for &m in &f_set {
            let row_sum: f64 = c_set.iter().map(|&l| filtered(m, l)).sum();
            if row_sum == 0.0 {
                denom += a.get(i, m); // orphaned strong F-neighbor lumps to diag
            } else {
                let scale = a.get(i, m) / row_sum;
                for (idx, &j) in c_set.iter().enumerate() {
                    numer[idx] += scale * filtered(m, j);
                }
            }
        }
        if denom == 0.0 {
            fallback_rows.push(i);
            let (pc, pv) = one_point.p.row(i);
            for (&c, &v) in pc.iter().zip(pv) {
                trips.push((i, c, v));
            }
            continue;
        }
        for (idx, &j) in c_set.iter().enumerate() {
            trips.push((i, split.coarse_index(j), -numer[idx] / denom));
        }
    }
    let p = SparseMatrix::from_triplets(n, split.n_c(), &trips).expect("classical triplets");
    Interpolation { p, fallback_rows }
}

/// Relative Frobenius error of Z against the F-block of ideal restriction:
/// ||Z + A_cf A_ff^-1||_F / ||A_cf A_ff^-1||_F. Dense in A_ff; small
/// problems only.
pub fn restriction_fidelity(
    a: &SparseMatrix,
    split: &CfSplitting,
    z: &SparseMatrix,
) -> Result<f64> {
    FidelitySetup::new(a, split).map(|setup| setup.fidelity(z))
}

/// Shares the dense A_cf A_ff^-1 factorization across several Z candidates.
pub struct FidelitySetup {
    /// X = A_cf A_ff^-1 (n_c x n_f dense).
    x: DenseMatrix,
    x_norm: f64,
}

impl FidelitySetup {
    pub fn new(a: &SparseMatrix, split: &CfSplitting) -> Result<Self> {
        let blocks = a.extract_cf_blocks(split);
        let ff_t = blocks.ff.to_dense().transpose();
        let lu = DenseLu::factor(&ff_t)
            .map_err(|_| Error::Singular("A_ff in restriction fidelity".into()))?;
        let xt = lu.solve(&blocks.cf.to_dense().transpose());
        let x = xt.transpose();
        let x_norm = x.frobenius_norm();
        Ok(FidelitySetup { x, x_norm })
    }

    /// `z` is n_c x n_f in F-internal column ordering.
    pub fn fidelity(&self, z: &SparseMatrix) -> f64 {
        let mut num = self.x.clone();
        for (c, f, v) in z.iter_triplets() {
            num[(c, f)] += v;
        }
        num.frobenius_norm() / self.x_norm
    }
}

/// Extract the F-block Z of a restriction operator (drops the unit C
/// columns, renumbers F columns by F-internal order).
pub fn extract_z(r: &SparseMatrix, split: &CfSplitting) -> SparseMatrix {
    let f_rank = split.f_rank();
    let mut trips = Vec::new();
    for (c, p, v) in r.iter_triplets() {
        if split.is_f(p) {
            trips.push((c, f_rank[p], v));
        }
    }
    SparseMatrix::from_triplets(r.n_rows(), split.n_f(), &trips).expect("z triplets")
}

/// Extract the F-block W of an interpolation operator (drops unit C rows).
pub fn extract_w(p: &SparseMatrix, split: &CfSplitting) -> SparseMatrix {
    let f_rank = split.f_rank();
    let mut trips = Vec::new();
    for (row, c, v) in p.iter_triplets() {
        if split.is_f(row) {
            trips.push((f_rank[row], c, v));
        }
    }
    SparseMatrix::from_triplets(split.n_f(), p.n_cols(), &trips).expect("w triplets")
}
