//! Classical strength of connection (hard minimum) and first-pass
//! Ruge-Stuben CF-splitting, plus the block condensation that lets both run
//! nodally on block-structured matrices.

use crate::sparse::{BlockLayout, SparseMatrix};
use std::collections::BinaryHeap;

/// Per-row sets of strong neighbors under the hard-minimum measure.
#[derive(Clone, Debug)]
pub struct StrengthGraph {
    neighbors: Vec<Vec<usize>>,
    theta: f64,
}

impl StrengthGraph {
    /// Strong neighbors of point `i`, sorted ascending.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// A graph with no strong connections at all (isolated points).
    pub fn empty(n: usize, theta: f64) -> Self {
        StrengthGraph {
            neighbors: vec![Vec::new(); n],
            theta,
        }
    }

    #[cfg(test)]
    pub(crate) fn from_sets(neighbors: Vec<Vec<usize>>, theta: f64) -> Self {
        StrengthGraph { neighbors, theta }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Label {
    C,
    F,
}

/// C/F labels plus the order-preserving map from C-points to coarse indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CfSplitting {
    labels: Vec<Label>,
    coarse_index: Vec<usize>, // valid only at C-points
    n_c: usize,
}

impl CfSplitting {
    pub fn from_labels(labels: &[Label]) -> Self {
        let mut coarse_index = vec![usize::MAX; labels.len()];
        let mut n_c = 0;
        for (p, &l) in labels.iter().enumerate() {
            if l == Label::C {
                coarse_index[p] = n_c;
                n_c += 1;
            }
        }
        CfSplitting {
            labels: labels.to_vec(),
            coarse_index,
            n_c,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn is_c(&self, p: usize) -> bool {
        self.labels[p] == Label::C
    }

    pub fn is_f(&self, p: usize) -> bool {
        self.labels[p] == Label::F
    }

    pub fn n_c(&self) -> usize {
        self.n_c
    }

    pub fn n_f(&self) -> usize {
        self.labels.len() - self.n_c
    }

    /// Coarse index of C-point `p`.
    pub fn coarse_index(&self, p: usize) -> usize {
        debug_assert!(self.is_c(p));
        self.coarse_index[p]
    }

    /// C-points in original order.
    pub fn c_points(&self) -> Vec<usize> {
        (0..self.len()).filter(|&p| self.is_c(p)).collect()
    }

    /// F-points in original order.
    pub fn f_points(&self) -> Vec<usize> {
        (0..self.len()).filter(|&p| self.is_f(p)).collect()
    }

    /// F-points first, then C-points, each in original order: the
    /// new-to-old permutation that makes the CF block form literal.
    pub fn fc_order(&self) -> Vec<usize> {
        let mut order = self.f_points();
        order.extend(self.c_points());
        order
    }

    /// Rank of each F-point among F-points (original order).
    pub fn f_rank(&self) -> Vec<usize> {
        let mut rank = vec![usize::MAX; self.len()];
        for (r, p) in self.f_points().into_iter().enumerate() {
            rank[p] = r;
        }
        rank
    }
}

/// Strong neighbors of each row under the classical hard-minimum test:
/// j is strong for i when i != j and -a_ij >= theta * max_{k != i} |a_ik|.
pub fn classical_soc(a: &SparseMatrix, theta: f64) -> StrengthGraph {
    assert_eq!(a.n_rows(), a.n_cols(), "strength of a non-square matrix");
    assert!(theta > 0.0, "strength threshold must be positive");
    let n = a.n_rows();
    let mut neighbors = Vec::with_capacity(n);
    for i in 0..n {
        let (cols, vals) = a.row(i);
        let mut max_off = 0.0f64;
        for (&j, &v) in cols.iter().zip(vals) {
            if j != i {
                max_off = max_off.max(v.abs());
            }
        }
        let mut strong = Vec::new();
        if max_off > 0.0 {
            let cutoff = theta * max_off;
            for (&j, &v) in cols.iter().zip(vals) {
                if j != i && -v >= cutoff {
                    strong.push(j);
                }
            }
        }
        neighbors.push(strong);
    }
    StrengthGraph { neighbors, theta }
}

/// Classical Ruge-Stuben first-pass coloring (no second pass).
///
/// Measure of a point is how many points it strongly influences. Repeatedly
/// the unassigned point of maximal measure becomes C (ties broken toward the
/// lowest index), its unassigned strong influencees become F, and the
/// measures of their unassigned strong influencers grow by one. Points with
/// an empty row and column in the strength graph become F outright.
pub fn rs_first_pass(s: &StrengthGraph) -> CfSplitting {
    let n = s.len();
    // influencees[i] = points j with i in N_j (i strongly influences j)
    let mut influencees = vec![Vec::new(); n];
    for j in 0..n {
        for &i in s.neighbors(j) {
            influencees[i].push(j);
        }
    }
    let mut lambda: Vec<usize> = influencees.iter().map(Vec::len).collect();
    let mut assigned: Vec<Option<Label>> = vec![None; n];

    for i in 0..n {
        if lambda[i] == 0 && s.neighbors(i).is_empty() {
            assigned[i] = Some(Label::F); // isolated
        }
    }

    // max-heap on (measure, Reverse(index)); stale entries skipped lazily
    let mut heap: BinaryHeap<(usize, std::cmp::Reverse<usize>)> = (0..n)
        .filter(|&i| assigned[i].is_none())
        .map(|i| (lambda[i], std::cmp::Reverse(i)))
        .collect();

    while let Some((measure, std::cmp::Reverse(i))) = heap.pop() {
        if assigned[i].is_some() || measure != lambda[i] {
            continue;
        }
        assigned[i] = Some(Label::C);
        for &j in &influencees[i] {
            if assigned[j].is_some() {
                continue;
            }
            assigned[j] = Some(Label::F);
            for &k in s.neighbors(j) {
                if assigned[k].is_none() {
                    lambda[k] += 1;
                    heap.push((lambda[k], std::cmp::Reverse(k)));
                }
            }
        }
    }

    let labels: Vec<Label> = assigned
        .into_iter()
        .map(|l| l.unwrap_or(Label::F))
        .collect();
    CfSplitting::from_labels(&labels)
}

/// Condense a block matrix to its nodal strength representation: the (I, J)
/// entry is -||block_IJ||_F off the diagonal and +||block_II||_F on it, so
/// large off-diagonal blocks read as strong under the hard-minimum test.
pub fn block_condense(a: &SparseMatrix, layout: BlockLayout) -> SparseMatrix {
    let k = layout.block_size;
    assert_eq!(
        a.n_rows(),
        a.n_cols(),
        "block condense of non-square matrix"
    );
    assert_eq!(
        a.n_rows() % k,
        0,
        "matrix dimension not a multiple of block size"
    );
    let nb = a.n_rows() / k;
    // accumulate squared Frobenius norms per block pair
    let mut sq: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); nb];
    for (i, j, v) in a.iter_triplets() {
        *sq[i / k].entry(j / k).or_insert(0.0) += v * v;
    }
    let mut trips = Vec::new();
    for (bi, row) in sq.iter().enumerate() {
        for (&bj, &s) in row {
            let norm = s.sqrt();
            let value = if bi == bj { norm } else { -norm };
            trips.push((bi, bj, value));
        }
    }
    SparseMatrix::from_triplets(nb, nb, &trips).unwrap()
}
