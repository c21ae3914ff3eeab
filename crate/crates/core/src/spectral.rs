//! Correspondence matrix, its SVD, and the optimal k-dimensional representatives.
//!
//! The correspondence matrix of a table `C` with margins `d_row`, `d_col` is
//! `D_row^{-1/2} C D_col^{-1/2}`. It is invariant under positive rescaling of
//! `C`, so every function here treats the table as if it summed to one.

use log::warn;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

use crate::error::{Error, Result};
use crate::table::ContingencyTable;

/// Singular values at or below `RANK_TOLERANCE * s_1` are treated as zero.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Gaps `s_k - s_{k+1}` below this trigger a warning in [`representatives`].
pub const GAP_WARNING: f64 = 1e-8;

/// Tables with both dimensions at most this size use the dense SVD.
pub const DENSE_SVD_LIMIT: usize = 2000;

/// Number of leading triplets the iterative SVD extracts by default.
pub const DEFAULT_LEADING: usize = 32;

const ITERATIVE_MAX_ITERATIONS: usize = 10_000;
const ITERATIVE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SvdMethod {
    Dense,
    /// Block subspace iteration; only the leading triplets are available.
    Iterative { iterations: usize },
}

/// Truncated SVD of a correspondence matrix with deterministic signs.
#[derive(Debug, Clone)]
pub struct CorrespondenceDecomposition {
    /// Descending, strictly above the numerical rank cutoff.
    pub singular_values: Vec<f64>,
    /// `n x rank`, orthonormal columns.
    pub left: DMatrix<f64>,
    /// `m x rank`, orthonormal columns.
    pub right: DMatrix<f64>,
    pub method: SvdMethod,
}

impl CorrespondenceDecomposition {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// `s_i` with one-based `i`; zero beyond the numerical rank.
    pub fn s(&self, i: usize) -> f64 {
        assert!(i >= 1, "singular values are indexed from 1");
        self.singular_values.get(i - 1).copied().unwrap_or(0.0)
    }

    /// `sum_i s_i v_i u_i^T`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let scaled = &self.left * DMatrix::from_diagonal(&DVector::from_column_slice(&self.singular_values));
        scaled * self.right.transpose()
    }

    /// Whether the full rank was captured, which is always the case for the dense method.
    pub fn is_complete(&self) -> bool {
        matches!(self.method, SvdMethod::Dense)
    }
}

/// Optimal row and column representatives (rows of `X*` and `Y*`).
#[derive(Debug, Clone)]
pub struct Representation {
    pub k: usize,
    /// `n x k`; row `i` is the representative of row `i`.
    pub row_reps: DMatrix<f64>,
    /// `m x k`; row `j` is the representative of column `j`.
    pub col_reps: DMatrix<f64>,
    /// `s_k - s_{k+1}` when below [`GAP_WARNING`].
    pub small_gap: Option<f64>,
}

impl Representation {
    /// Drops the first (trivial, constant) coordinate.
    pub fn without_trivial(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let k = self.k;
        (
            self.row_reps.columns(1, k - 1).into_owned(),
            self.col_reps.columns(1, k - 1).into_owned(),
        )
    }
}

/// Minimum of the representation objective for a given `k`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MinObjective {
    /// `2k - 2 * sum_{i<=k} s_i`.
    pub corrected: f64,
    /// `2k - sum_{i<=k} s_i`, kept for comparison with the published statement.
    pub printed: f64,
}

/// Threshold count of structural singular values plus a gap-based suggestion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct StructuralK {
    pub count: usize,
    /// `k` maximizing the relative gap `(s_k - s_{k+1}) / s_k`, for `k < rank`.
    pub largest_gap_at: usize,
}

fn normalized_margins(table: &ContingencyTable) -> (Vec<f64>, Vec<f64>) {
    let total = table.total();
    (
        table.row_sums().iter().map(|d| d / total).collect(),
        table.col_sums().iter().map(|d| d / total).collect(),
    )
}

/// `D_row^{-1/2} C D_col^{-1/2}` as a dense matrix.
pub fn correspondence_matrix(table: &ContingencyTable) -> DMatrix<f64> {
    let (dr, dc) = normalized_margins(table);
    let total = table.total();
    let mut corr = DMatrix::zeros(table.n_rows(), table.n_cols());
    for (i, j, v) in table.entries() {
        corr[(i, j)] = (v / total) / (dr[i] * dc[j]).sqrt();
    }
    corr
}

/// Dense SVD of an arbitrary finite matrix, truncated to numerical rank.
pub fn decompose(corr: &DMatrix<f64>) -> Result<CorrespondenceDecomposition> {
    dense_svd(corr, None)
}

/// Thin SVD `(s, U, V)` with singular values in descending order.
fn thin_svd(matrix: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let (n, m) = matrix.shape();
    let svd = faer::Mat::from_fn(n, m, |i, j| matrix[(i, j)])
        .thin_svd()
        .map_err(|_| Error::ConvergenceFailure { iterations: 0 })?;
    let s = svd.S().column_vector();
    let r = n.min(m);
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let values = order.iter().map(|&c| s[c]).collect();
    let (u, v) = (svd.U(), svd.V());
    let left = DMatrix::from_fn(n, r, |i, c| u[(i, order[c])]);
    let right = DMatrix::from_fn(m, r, |j, c| v[(j, order[c])]);
    Ok((values, left, right))
}

/// Truncates below `RANK_TOLERANCE * reference`, or relative to the largest
/// singular value without a reference.
fn dense_svd(matrix: &DMatrix<f64>, reference: Option<f64>) -> Result<CorrespondenceDecomposition> {
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::DimensionMismatch("matrix has non-finite entries".into()));
    }
    let (n, m) = matrix.shape();
    if n == 0 || m == 0 {
        return Err(Error::EmptyTable);
    }
    let (values, left, right) = thin_svd(matrix)?;
    let scale = reference.unwrap_or_else(|| values.first().copied().unwrap_or(0.0));
    let rank = values.iter().take_while(|&&s| s > RANK_TOLERANCE * scale && s > 0.0).count();
    let mut decomp = CorrespondenceDecomposition {
        singular_values: values[..rank].to_vec(),
        left: left.columns(0, rank).into_owned(),
        right: right.columns(0, rank).into_owned(),
        method: SvdMethod::Dense,
    };
    orient(&mut decomp);
    Ok(decomp)
}

/// Puts the trivial triplet `(1, sqrt(d_row), sqrt(d_col))` in front of a
/// decomposition of the deflated matrix `corr - sqrt(d_row) sqrt(d_col)^T`.
fn with_trivial(table: &ContingencyTable, mut rest: CorrespondenceDecomposition) -> CorrespondenceDecomposition {
    let (dr, dc) = normalized_margins(table);
    let (n, m, r) = (table.n_rows(), table.n_cols(), rest.rank());
    for s in &mut rest.singular_values {
        *s = s.min(1.0);
    }
    let mut singular_values = Vec::with_capacity(r + 1);
    singular_values.push(1.0);
    singular_values.extend_from_slice(&rest.singular_values);
    let left = DMatrix::from_fn(n, r + 1, |i, c| if c == 0 { dr[i].sqrt() } else { rest.left[(i, c - 1)] });
    let right = DMatrix::from_fn(m, r + 1, |j, c| if c == 0 { dc[j].sqrt() } else { rest.right[(j, c - 1)] });
    CorrespondenceDecomposition { singular_values, left, right, method: rest.method }
}

/// Decomposes the correspondence matrix of a table, dense or iterative by size.
///
/// The leading singular value is exactly 1 with vectors `sqrt(d_row)` and
/// `sqrt(d_col)`; it is set analytically and the rest of the spectrum comes
/// from the deflated matrix.
pub fn decompose_table(table: &ContingencyTable) -> Result<CorrespondenceDecomposition> {
    if table.n_rows() <= DENSE_SVD_LIMIT && table.n_cols() <= DENSE_SVD_LIMIT {
        let (dr, dc) = normalized_margins(table);
        let mut deflated = correspondence_matrix(table);
        for i in 0..table.n_rows() {
            for j in 0..table.n_cols() {
                deflated[(i, j)] -= (dr[i] * dc[j]).sqrt();
            }
        }
        Ok(with_trivial(table, dense_svd(&deflated, Some(1.0))?))
    } else {
        decompose_leading(table, DEFAULT_LEADING)
    }
}

/// Leading `count` singular triplets by block subspace iteration on the sparse
/// entries, with the trivial triplet deflated as in [`decompose_table`].
pub fn decompose_leading(table: &ContingencyTable, count: usize) -> Result<CorrespondenceDecomposition> {
    let (n, m) = table.shape();
    let (dr, dc) = normalized_margins(table);
    let wanted = count.clamp(1, n.min(m)) - 1;
    if wanted == 0 {
        let empty = CorrespondenceDecomposition {
            singular_values: Vec::new(),
            left: DMatrix::zeros(n, 0),
            right: DMatrix::zeros(m, 0),
            method: SvdMethod::Iterative { iterations: 0 },
        };
        return Ok(with_trivial(table, empty));
    }
    let block = (wanted + 8).min(n.min(m));
    let total = table.total();
    let entries: Vec<(usize, usize, f64)> = table
        .entries()
        .map(|(i, j, v)| (i, j, (v / total) / (dr[i] * dc[j]).sqrt()))
        .collect();
    let sr = DVector::from_iterator(n, dr.iter().map(|d| d.sqrt()));
    let sc = DVector::from_iterator(m, dc.iter().map(|d| d.sqrt()));

    let apply = |x: &DMatrix<f64>| {
        let mut out = -(&sr * (sc.transpose() * x));
        for &(i, j, a) in &entries {
            for c in 0..x.ncols() {
                out[(i, c)] += a * x[(j, c)];
            }
        }
        out
    };
    let apply_t = |y: &DMatrix<f64>| {
        let mut out = -(&sc * (sr.transpose() * y));
        for &(i, j, a) in &entries {
            for c in 0..y.ncols() {
                out[(j, c)] += a * y[(i, c)];
            }
        }
        out
    };

    let mut rng = Xoshiro256StarStar::seed_from_u64(0);
    let mut right = DMatrix::from_fn(m, block, |_, _| rng.random::<f64>() - 0.5).qr().q();
    let mut previous = vec![f64::INFINITY; wanted];
    for iteration in 1..=ITERATIVE_MAX_ITERATIONS {
        let q = apply(&right).qr().q();
        // Q^T A = (A^T Q)^T, a small block x m matrix
        let projected = apply_t(&q).transpose();
        let (small, u_small, v_small) = thin_svd(&projected)?;
        right = v_small;
        let values: Vec<f64> = small.iter().take(wanted).copied().collect();
        let moved = values.iter().zip(&previous).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        previous = values;
        if moved < ITERATIVE_TOLERANCE {
            let rank = previous.iter().take_while(|&&s| s > RANK_TOLERANCE).count();
            let left = &q * u_small;
            let mut decomp = CorrespondenceDecomposition {
                singular_values: previous[..rank].to_vec(),
                left: left.columns(0, rank).into_owned(),
                right: right.columns(0, rank).into_owned(),
                method: SvdMethod::Iterative { iterations: iteration },
            };
            orient(&mut decomp);
            return Ok(with_trivial(table, decomp));
        }
    }
    Err(Error::ConvergenceFailure { iterations: ITERATIVE_MAX_ITERATIONS })
}

/// First pair: nonnegative coordinate sum. Later pairs: the largest-magnitude
/// coordinate of the left vector is positive (lowest index on ties).
fn orient(decomp: &mut CorrespondenceDecomposition) {
    for c in 0..decomp.rank() {
        let flip = if c == 0 {
            decomp.left.column(c).sum() < 0.0
        } else {
            let col = decomp.left.column(c);
            let mut best = 0;
            for (i, v) in col.iter().enumerate() {
                if v.abs() > col[best].abs() {
                    best = i;
                }
            }
            col[best] < 0.0
        };
        if flip {
            decomp.left.column_mut(c).neg_mut();
            decomp.right.column_mut(c).neg_mut();
        }
    }
}

/// `X* = D_row^{-1/2} (v_1..v_k)` and `Y* = D_col^{-1/2} (u_1..u_k)`.
pub fn representatives(
    table: &ContingencyTable,
    decomp: &CorrespondenceDecomposition,
    k: usize,
) -> Result<Representation> {
    if k == 0 || k > decomp.rank() {
        return Err(Error::KOutOfRange { k, max: decomp.rank() });
    }
    if decomp.left.nrows() != table.n_rows() || decomp.right.nrows() != table.n_cols() {
        return Err(Error::DimensionMismatch("decomposition does not belong to this table".into()));
    }
    let (sk, next) = (decomp.s(k), decomp.s(k + 1));
    let gap = sk - next;
    if gap <= f64::EPSILON * sk {
        return Err(Error::DegenerateGap { k });
    }
    let small_gap = (gap < GAP_WARNING).then(|| {
        warn!("s_{k} - s_{} = {gap:e} is below {GAP_WARNING:e}; representatives are ill-determined", k + 1);
        gap
    });
    let (dr, dc) = normalized_margins(table);
    let row_reps = DMatrix::from_fn(table.n_rows(), k, |i, c| decomp.left[(i, c)] / dr[i].sqrt());
    let col_reps = DMatrix::from_fn(table.n_cols(), k, |j, c| decomp.right[(j, c)] / dc[j].sqrt());
    Ok(Representation { k, row_reps, col_reps, small_gap })
}

/// `sum_ij c_ij |r_i - c_j|^2`, evaluated entry by entry.
pub fn objective_q(table: &ContingencyTable, rep: &Representation) -> Result<f64> {
    if rep.row_reps.nrows() != table.n_rows()
        || rep.col_reps.nrows() != table.n_cols()
        || rep.row_reps.ncols() != rep.col_reps.ncols()
    {
        return Err(Error::DimensionMismatch(format!(
            "representation is {}x{} / {}x{}, table is {}x{}",
            rep.row_reps.nrows(),
            rep.row_reps.ncols(),
            rep.col_reps.nrows(),
            rep.col_reps.ncols(),
            table.n_rows(),
            table.n_cols()
        )));
    }
    let total = table.total();
    let mut q = 0.0;
    for (i, j, v) in table.entries() {
        let dist: f64 = rep
            .row_reps
            .row(i)
            .iter()
            .zip(rep.col_reps.row(j).iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        q += v / total * dist;
    }
    Ok(q)
}

/// Closed-form minimum of the objective from the leading `k` singular values.
pub fn min_objective(singular_values: &[f64], k: usize) -> Result<MinObjective> {
    if k == 0 || k > singular_values.len() {
        return Err(Error::KOutOfRange { k, max: singular_values.len() });
    }
    let sum: f64 = singular_values[..k].iter().sum();
    let two_k = 2.0 * k as f64;
    Ok(MinObjective { corrected: two_k - 2.0 * sum, printed: two_k - sum })
}

/// Counts singular values strictly above `epsilon`.
pub fn structural_k(singular_values: &[f64], epsilon: f64) -> StructuralK {
    let count = singular_values.iter().filter(|&&s| s > epsilon).count();
    let mut largest_gap_at = 1;
    let mut best = f64::NEG_INFINITY;
    for (idx, pair) in singular_values.windows(2).enumerate() {
        let rel = (pair[0] - pair[1]) / pair[0];
        if rel > best {
            best = rel;
            largest_gap_at = idx + 1;
        }
    }
    StructuralK { count, largest_gap_at }
}

/// `A^T W A` for a diagonal weight vector `w`.
pub fn weighted_gram(a: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    let k = a.ncols();
    DMatrix::from_fn(k, k, |p, q| (0..a.nrows()).map(|i| w[i] * a[(i, p)] * a[(i, q)]).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::ContingencyTable;
    use proptest::prelude::*;
    use rand::Rng;

    fn example() -> ContingencyTable {
        ContingencyTable::from_rows(&[[0.4, 0.1], [0.1, 0.4]]).unwrap()
    }

    fn circulant() -> ContingencyTable {
        let w = 1.0 / 9.0;
        ContingencyTable::from_rows(&[[0.0, 2.0 * w, w], [w, 0.0, 2.0 * w], [2.0 * w, w, 0.0]]).unwrap()
    }

    fn random_table(seed: u64, n: usize, m: usize) -> ContingencyTable {
        let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
        let values = (0..n * m).map(|_| rng.random::<f64>() + 0.01).collect();
        ContingencyTable::from_dense(n, m, values).unwrap().normalized()
    }

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn correspondence_of_examples() {
        let c = correspondence_matrix(&example());
        for (got, want) in c.iter().zip([0.8, 0.2, 0.2, 0.8]) {
            assert_close(*got, want, 1e-15);
        }
        let uniform = ContingencyTable::from_dense(2, 3, vec![1.0 / 6.0; 6]).unwrap();
        let expect = (1.0f64 / 6.0).sqrt();
        for v in correspondence_matrix(&uniform).iter() {
            assert_close(*v, expect, 1e-15);
        }
        let scaled = ContingencyTable::from_rows(&[[40.0, 10.0], [10.0, 40.0]]).unwrap();
        assert_eq!(correspondence_matrix(&scaled), correspondence_matrix(&example()));
    }

    #[test]
    fn decompose_examples() {
        let d = decompose(&correspondence_matrix(&example())).unwrap();
        assert_eq!(d.rank(), 2);
        assert_close(d.s(1), 1.0, 1e-12);
        assert_close(d.s(2), 0.6, 1e-12);

        let uniform = ContingencyTable::from_dense(2, 3, vec![1.0 / 6.0; 6]).unwrap();
        let d = decompose(&correspondence_matrix(&uniform)).unwrap();
        assert_eq!(d.rank(), 1);
        assert_close(d.s(1), 1.0, 1e-12);

        let d = decompose(&correspondence_matrix(&circulant())).unwrap();
        assert_eq!(d.rank(), 3);
        let inv_sqrt3 = 1.0 / 3f64.sqrt();
        for (got, want) in d.singular_values.iter().zip([1.0, inv_sqrt3, inv_sqrt3]) {
            assert_close(*got, want, 1e-12);
        }
    }

    #[test]
    fn decomposition_invariants_on_random_tables() {
        for seed in 0..10 {
            let t = random_table(seed, 10, 7);
            let corr = correspondence_matrix(&t);
            let d = decompose(&corr).unwrap();
            assert_close(d.s(1), 1.0, 1e-9);
            assert!(d.s(2) < 1.0 - 1e-9);
            assert!(d.singular_values.windows(2).all(|w| w[0] >= w[1]));
            let gl = d.left.transpose() * &d.left;
            let gr = d.right.transpose() * &d.right;
            let id = DMatrix::<f64>::identity(d.rank(), d.rank());
            assert!((gl - &id).amax() < 1e-9);
            assert!((gr - &id).amax() < 1e-9);
            assert!((d.reconstruct() - &corr).amax() < 1e-8);
            for i in 0..t.n_rows() {
                assert_close(d.left[(i, 0)], t.row_sums()[i].sqrt(), 1e-9);
            }
            for j in 0..t.n_cols() {
                assert_close(d.right[(j, 0)], t.col_sums()[j].sqrt(), 1e-9);
            }
        }
    }

    #[test]
    fn sign_convention_is_applied() {
        let d = decompose(&correspondence_matrix(&random_table(3, 6, 5))).unwrap();
        assert!(d.left.column(0).iter().all(|&v| v >= 0.0));
        assert!(d.right.column(0).iter().all(|&v| v >= 0.0));
        for c in 1..d.rank() {
            let col = d.left.column(c);
            let idx = col.iamax();
            assert!(col[idx] > 0.0);
        }
    }

    #[test]
    fn representatives_of_example() {
        let t = example();
        let d = decompose_table(&t).unwrap();
        let rep = representatives(&t, &d, 2).unwrap();
        let expect = [[1.0, 1.0], [1.0, -1.0]];
        for i in 0..2 {
            for c in 0..2 {
                assert_close(rep.row_reps[(i, c)], expect[i][c], 1e-12);
                assert_close(rep.col_reps[(i, c)], expect[i][c], 1e-12);
            }
        }
        assert_close(objective_q(&t, &rep).unwrap(), 0.8, 1e-12);

        let one = representatives(&t, &d, 1).unwrap();
        assert!(one.row_reps.iter().chain(one.col_reps.iter()).all(|v| (v - 1.0).abs() < 1e-12));
        assert!(matches!(representatives(&t, &d, 3), Err(Error::KOutOfRange { k: 3, max: 2 })));
        assert!(matches!(representatives(&t, &d, 0), Err(Error::KOutOfRange { .. })));
    }

    #[test]
    fn degenerate_gap_is_rejected() {
        let t = circulant();
        let d = decompose_table(&t).unwrap();
        let gap = d.s(2) - d.s(3);
        if gap <= f64::EPSILON * d.s(2) {
            assert!(matches!(representatives(&t, &d, 2), Err(Error::DegenerateGap { k: 2 })));
        } else {
            assert!(representatives(&t, &d, 2).unwrap().small_gap.is_some());
        }
        assert!(representatives(&t, &d, 3).is_ok());
    }

    #[test]
    fn constraints_hold_on_random_tables() {
        for seed in 0..10 {
            let t = random_table(100 + seed, 10, 7);
            let d = decompose_table(&t).unwrap();
            for k in 1..=4 {
                let rep = representatives(&t, &d, k).unwrap();
                let id = DMatrix::<f64>::identity(k, k);
                assert!((weighted_gram(&rep.row_reps, t.row_sums()) - &id).amax() < 1e-9);
                assert!((weighted_gram(&rep.col_reps, t.col_sums()) - &id).amax() < 1e-9);
                assert!(rep.row_reps.column(0).iter().all(|v| (v - 1.0).abs() < 1e-9));
                let min = min_objective(&d.singular_values, k).unwrap();
                assert_close(objective_q(&t, &rep).unwrap(), min.corrected, 1e-9);
            }
        }
    }

    #[test]
    fn identical_reps_on_diagonal_mass_give_zero() {
        let t = ContingencyTable::from_rows(&[[0.5, 0.0], [0.0, 0.5]]).unwrap();
        let reps = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, -3.0, 0.5]);
        let rep = Representation { k: 2, row_reps: reps.clone(), col_reps: reps, small_gap: None };
        assert_eq!(objective_q(&t, &rep).unwrap(), 0.0);
        let bad = Representation { k: 1, row_reps: DMatrix::zeros(3, 1), col_reps: DMatrix::zeros(2, 1), small_gap: None };
        assert!(matches!(objective_q(&t, &bad), Err(Error::DimensionMismatch(_))));
    }

    /// Exhaustive search over the 2x2 constraint set: with `k = 2`, every feasible
    /// `X` is `D^{-1/2}` times an orthogonal 2x2 matrix.
    #[test]
    fn grid_search_confirms_corrected_minimum() {
        let c = [[0.4, 0.1], [0.1, 0.4]];
        let inv_sqrt_d = 2f64.sqrt();
        let orth = |theta: f64, reflect: bool| {
            let (s, co) = theta.sin_cos();
            let sign = if reflect { -1.0 } else { 1.0 };
            [[co * inv_sqrt_d, -s * sign * inv_sqrt_d], [s * inv_sqrt_d, co * sign * inv_sqrt_d]]
        };
        let steps = 720;
        let mut best = f64::INFINITY;
        for a in 0..steps {
            for rx in [false, true] {
                let x = orth(a as f64 * std::f64::consts::TAU / steps as f64, rx);
                for b in 0..steps {
                    for ry in [false, true] {
                        let y = orth(b as f64 * std::f64::consts::TAU / steps as f64, ry);
                        let mut q = 0.0;
                        for i in 0..2 {
                            for j in 0..2 {
                                let d0 = x[i][0] - y[j][0];
                                let d1 = x[i][1] - y[j][1];
                                q += c[i][j] * (d0 * d0 + d1 * d1);
                            }
                        }
                        best = best.min(q);
                    }
                }
            }
        }
        let min = min_objective(&[1.0, 0.6], 2).unwrap();
        assert_close(min.corrected, 0.8, 1e-12);
        assert_close(min.printed, 2.4, 1e-12);
        assert!(best >= 0.8 - 1e-12);
        assert!(best - 0.8 < 1e-3, "grid minimum {best}");
    }

    #[test]
    fn min_objective_examples() {
        assert_close(min_objective(&[1.0], 1).unwrap().corrected, 0.0, 1e-15);
        // the k = 3 term contributes 2 - 2 * 0
        assert_close(min_objective(&[1.0, 0.6, 0.0], 3).unwrap().corrected, 2.8, 1e-12);
        assert!(matches!(min_objective(&[1.0], 2), Err(Error::KOutOfRange { .. })));
    }

    #[test]
    fn random_constrained_search_never_beats_the_optimum() {
        let t = random_table(9, 5, 4);
        let d = decompose_table(&t).unwrap();
        let k = 2;
        let optimum = min_objective(&d.singular_values, k).unwrap().corrected;
        let dr = t.row_sums();
        let dc = t.col_sums();
        let mut rng = Xoshiro256StarStar::seed_from_u64(1);
        let feasible = |rng: &mut Xoshiro256StarStar, w: &[f64]| {
            let raw = DMatrix::from_fn(w.len(), k, |_, _| rng.random::<f64>() - 0.5);
            let q = raw.qr().q();
            DMatrix::from_fn(w.len(), k, |i, c| q[(i, c)] / w[i].sqrt())
        };
        for _ in 0..2000 {
            let rep = Representation { k, row_reps: feasible(&mut rng, dr), col_reps: feasible(&mut rng, dc), small_gap: None };
            assert!(objective_q(&t, &rep).unwrap() >= optimum - 1e-9);
        }
    }

    #[test]
    fn structural_k_examples() {
        let sk = structural_k(&[1.0, 0.6, 0.05, 0.04], 0.1);
        assert_eq!(sk.count, 2);
        assert_eq!(sk.largest_gap_at, 2);
        assert_eq!(structural_k(&[1.0], 0.5).count, 1);
    }

    #[test]
    fn symmetric_tables_match_eigendecomposition() {
        let mut rng = Xoshiro256StarStar::seed_from_u64(5);
        let n = 6;
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = rng.random::<f64>() + 0.05;
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        let t = ContingencyTable::from_dense(n, n, values).unwrap();
        let corr = correspondence_matrix(&t);
        let d = decompose(&corr).unwrap();
        let mut eig: Vec<f64> = corr.symmetric_eigenvalues().iter().map(|v| v.abs()).collect();
        eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (s, e) in d.singular_values.iter().zip(&eig) {
            assert_close(*s, *e, 1e-10);
        }
        for c in 0..d.rank() {
            let l = d.left.column(c);
            let r = d.right.column(c);
            assert!((l - r).amax() < 1e-8 || (l + r).amax() < 1e-8);
        }
    }

    #[test]
    fn iterative_matches_dense() {
        let t = random_table(11, 40, 30);
        let dense = decompose_table(&t).unwrap();
        let iter = decompose_leading(&t, 5).unwrap();
        assert!(matches!(iter.method, SvdMethod::Iterative { .. }));
        assert_eq!(iter.rank(), 5);
        for c in 0..5 {
            assert_close(iter.s(c + 1), dense.s(c + 1), 1e-10);
            let a = iter.left.column(c);
            let b = dense.left.column(c);
            assert!((a - b).amax() < 1e-6, "left vector {c} differs");
        }
    }

    #[test]
    fn spectrum_matches_gram_eigenvalues() {
        for seed in 100..140 {
            let t = random_table(seed, 10, 7);
            let d = decompose_table(&t).unwrap();
            let c = correspondence_matrix(&t);
            let mut eig: Vec<f64> = (c.transpose() * &c).symmetric_eigenvalues().iter().map(|e| e.max(0.0).sqrt()).collect();
            eig.sort_by(|a, b| b.total_cmp(a));
            for (i, e) in eig.iter().enumerate() {
                assert_close(d.s(i + 1), *e, 1e-9);
            }
            let residual = &c * &d.right - &d.left * DMatrix::from_diagonal(&DVector::from_column_slice(&d.singular_values));
            assert!(residual.amax() < 1e-12, "seed {seed}");
        }
    }

    #[test]
    fn dropping_trivial_coordinate_keeps_distances() {
        let t = random_table(21, 7, 6);
        let d = decompose_table(&t).unwrap();
        let rep = representatives(&t, &d, 3).unwrap();
        let (rows, _) = rep.without_trivial();
        for a in 0..7 {
            for b in 0..7 {
                let full = (rep.row_reps.row(a) - rep.row_reps.row(b)).norm();
                let reduced = (rows.row(a) - rows.row(b)).norm();
                assert_close(full, reduced, 1e-12);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn singular_values_are_scale_and_permutation_invariant(
            seed in any::<u64>(),
            scale in 0.1f64..50.0,
            shift in 0usize..5,
        ) {
            let t = random_table(seed, 5, 4);
            let base = decompose_table(&t).unwrap();
            let values = t.to_dense_values();
            let permuted: Vec<f64> = (0..5)
                .flat_map(|i| (0..4).map(move |j| (i, j)))
                .map(|(i, j)| values[((i + shift) % 5) * 4 + (3 - j)] * scale)
                .collect();
            let p = ContingencyTable::from_dense(5, 4, permuted).unwrap();
            let other = decompose_table(&p).unwrap();
            prop_assert_eq!(base.rank(), other.rank());
            for (a, b) in base.singular_values.iter().zip(&other.singular_values) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }
    }
}
