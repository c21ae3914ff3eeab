//! Discrepancy, volume regularity and cut norms, with exact subset enumeration
//! for small tables and spectral bounds otherwise.
//!
//! All volumes and cuts are taken on the normalized table.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::ClusterAssignment;
use crate::error::{Error, Result};
use crate::measure::Measured;
use crate::spectral::CorrespondenceDecomposition;
use crate::table::{Axis, ContingencyTable, IndexSubset};

/// Default maximum number of elements per axis for subset enumeration.
pub const SUBSET_CAP: usize = 14;

/// Slack used for every inequality check in this module.
pub const CHECK_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationCaps {
    pub subset_cap: usize,
    pub force: bool,
}

impl Default for EnumerationCaps {
    fn default() -> Self {
        Self { subset_cap: SUBSET_CAP, force: false }
    }
}

impl EnumerationCaps {
    pub fn forced() -> Self {
        Self { force: true, ..Self::default() }
    }

    fn allows(&self, rows: usize, cols: usize) -> bool {
        self.force || (rows <= self.subset_cap && cols <= self.subset_cap)
    }

    fn check(&self, rows: usize, cols: usize) -> Result<()> {
        if self.allows(rows, cols) {
            Ok(())
        } else {
            Err(Error::BudgetExceeded {
                required: 1u128 << (rows + cols).min(127),
                budget: 1u128 << (2 * self.subset_cap).min(127),
            })
        }
    }
}

/// Largest score over all sub-rectangles `X x Y` with `X ⊆ rows`, `Y ⊆ cols`.
#[derive(Debug, Clone, PartialEq)]
pub struct RectangleMax {
    pub value: f64,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

/// Enumerates every `X ⊆ rows`, `Y ⊆ cols` (empty sets included) and maximizes
/// `score(cut, weight(X), weight(Y))`. Column subsets are walked in Gray-code
/// order so each step costs O(1); ties go to the smallest `(X, Y)` bitmask pair.
fn rectangle_max<F>(
    values: &[f64],
    stride: usize,
    rows: &[usize],
    cols: &[usize],
    row_w: &[f64],
    col_w: &[f64],
    score: F,
) -> RectangleMax
where
    F: Fn(f64, f64, f64) -> f64 + Sync,
{
    let r = rows.len();
    let c = cols.len();
    let (value, xmask, ymask) = (0u64..1 << r)
        .into_par_iter()
        .map(|xmask| {
            let mut colsum = vec![0.0; c];
            let mut vx = 0.0;
            for (bit, &i) in rows.iter().enumerate() {
                if xmask >> bit & 1 == 1 {
                    vx += row_w[i];
                    for (slot, &j) in colsum.iter_mut().zip(cols) {
                        *slot += values[i * stride + j];
                    }
                }
            }
            let mut best = (score(0.0, vx, 0.0), 0u64);
            let mut cut = 0.0;
            let mut vy = 0.0;
            let mut gray = 0u64;
            for step in 1u64..1 << c {
                let bit = step.trailing_zeros() as usize;
                gray ^= 1 << bit;
                if gray >> bit & 1 == 1 {
                    cut += colsum[bit];
                    vy += col_w[cols[bit]];
                } else {
                    cut -= colsum[bit];
                    vy -= col_w[cols[bit]];
                }
                let s = score(cut, vx, vy);
                if s > best.0 || (s == best.0 && gray < best.1) {
                    best = (s, gray);
                }
            }
            (best.0, xmask, best.1)
        })
        .reduce(
            || (f64::NEG_INFINITY, u64::MAX, u64::MAX),
            |a, b| if b.0 > a.0 || (b.0 == a.0 && (b.1, b.2) < (a.1, a.2)) { b } else { a },
        );
    let pick = |set: &[usize], mask: u64| set.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &i)| i).collect();
    RectangleMax { value, rows: pick(rows, xmask), cols: pick(cols, ymask) }
}

struct Normalized {
    values: Vec<f64>,
    row: Vec<f64>,
    col: Vec<f64>,
    stride: usize,
}

fn normalized(table: &ContingencyTable) -> Normalized {
    let total = table.total();
    Normalized {
        values: table.to_dense_values().into_iter().map(|v| v / total).collect(),
        row: table.row_sums().iter().map(|d| d / total).collect(),
        col: table.col_sums().iter().map(|d| d / total).collect(),
        stride: table.n_cols(),
    }
}

/// `c(R, C) / (Vol(R) Vol(C))`.
pub fn relative_density(table: &ContingencyTable, rows: &IndexSubset, cols: &IndexSubset) -> Result<f64> {
    if rows.is_empty() || cols.is_empty() {
        return Err(Error::EmptySubset);
    }
    let total = table.total();
    let cut = table.cut(rows, cols)? / total;
    Ok(cut / (table.volume(rows)? / total * (table.volume(cols)? / total)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingCheck {
    /// `max |c(R,C) - Vol(R)Vol(C)| / sqrt(Vol(R)Vol(C))` over non-empty subsets.
    pub max_ratio: f64,
    pub s2: f64,
    pub holds: bool,
    pub witness_rows: Vec<usize>,
    pub witness_cols: Vec<usize>,
}

fn mixing_max(table: &ContingencyTable, caps: &EnumerationCaps) -> Result<RectangleMax> {
    let (n, m) = table.shape();
    caps.check(n, m)?;
    let t = normalized(table);
    let rows: Vec<usize> = (0..n).collect();
    let cols: Vec<usize> = (0..m).collect();
    Ok(rectangle_max(&t.values, t.stride, &rows, &cols, &t.row, &t.col, |cut, vx, vy| {
        if vx > 0.0 && vy > 0.0 {
            (cut - vx * vy).abs() / (vx * vy).sqrt()
        } else {
            0.0
        }
    }))
}

/// Exhaustive check of `|c(R,C) - Vol(R)Vol(C)| <= s_2 sqrt(Vol(R)Vol(C))`.
pub fn mixing_check(
    table: &ContingencyTable,
    decomp: &CorrespondenceDecomposition,
    caps: &EnumerationCaps,
) -> Result<MixingCheck> {
    let best = mixing_max(table, caps)?;
    let s2 = decomp.s(2);
    Ok(MixingCheck {
        max_ratio: best.value,
        s2,
        holds: best.value <= s2 + CHECK_SLACK,
        witness_rows: best.rows,
        witness_cols: best.cols,
    })
}

/// Smallest `alpha` with `|c(R,C) - Vol(R)Vol(C)| <= alpha sqrt(Vol(R)Vol(C))` for all subsets.
pub fn discrepancy_bruteforce(table: &ContingencyTable, caps: &EnumerationCaps) -> Result<f64> {
    Ok(mixing_max(table, caps)?.value)
}

/// Smallest `gamma` making the pair `(rows, cols)` gamma-volume regular.
pub fn volume_regularity_bruteforce(
    table: &ContingencyTable,
    rows: &IndexSubset,
    cols: &IndexSubset,
    caps: &EnumerationCaps,
) -> Result<f64> {
    volume_regularity_sampled(table, rows, cols, rows, cols, caps)
}

/// As [`volume_regularity_bruteforce`], but only subsets of `sample_rows` and
/// `sample_cols` are enumerated. Density and normalization still come from the
/// full pair, so the result is a lower bound on the pair's exact gamma.
pub fn volume_regularity_sampled(
    table: &ContingencyTable,
    rows: &IndexSubset,
    cols: &IndexSubset,
    sample_rows: &IndexSubset,
    sample_cols: &IndexSubset,
    caps: &EnumerationCaps,
) -> Result<f64> {
    if rows.is_empty() || cols.is_empty() {
        return Err(Error::EmptySubset);
    }
    caps.check(sample_rows.len(), sample_cols.len())?;
    let rho = relative_density(table, rows, cols)?;
    let total = table.total();
    let scale = (table.volume(rows)? / total * (table.volume(cols)? / total)).sqrt();
    table.volume(sample_rows)?;
    table.volume(sample_cols)?;
    let t = normalized(table);
    let best = rectangle_max(&t.values, t.stride, sample_rows.members(), sample_cols.members(), &t.row, &t.col, |cut, vx, vy| {
        (cut - rho * vx * vy).abs() / scale
    });
    Ok(best.value)
}

/// `max |sum_{i in R, j in C} a_ij|` over all row and column subsets.
pub fn cut_norm_bruteforce(matrix: &DMatrix<f64>, caps: &EnumerationCaps) -> Result<f64> {
    let (n, m) = matrix.shape();
    caps.check(n, m)?;
    let values: Vec<f64> = (0..n).flat_map(|i| (0..m).map(move |j| (i, j))).map(|ij| matrix[ij]).collect();
    let rows: Vec<usize> = (0..n).collect();
    let cols: Vec<usize> = (0..m).collect();
    let ones_r = vec![0.0; n];
    let ones_c = vec![0.0; m];
    Ok(rectangle_max(&values, m, &rows, &cols, &ones_r, &ones_c, |cut, _, _| cut.abs()).value)
}

/// `sqrt(n m)` times the largest singular value.
pub fn cut_norm_spectral_bound(matrix: &DMatrix<f64>) -> f64 {
    let (n, m) = matrix.shape();
    if n == 0 || m == 0 {
        return 0.0;
    }
    let top = matrix.singular_values().iter().copied().fold(0.0, f64::max);
    ((n * m) as f64).sqrt() * top
}

/// `s_2 <= 150 alpha (1 - 8 ln alpha)`, applicable for `0 < alpha < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ButlerCheck {
    pub alpha: f64,
    pub s2: f64,
    /// Absent when `alpha` is outside `(0, 1)`.
    pub rhs: Option<f64>,
    pub holds: Option<bool>,
}

impl ButlerCheck {
    pub fn applicable(&self) -> bool {
        self.rhs.is_some()
    }
}

/// Converse mixing inequality with the natural logarithm.
pub fn butler_converse_check(s2: f64, alpha: f64) -> ButlerCheck {
    if !(alpha > 0.0 && alpha < 1.0) {
        return ButlerCheck { alpha, s2, rhs: None, holds: None };
    }
    let rhs = 150.0 * alpha * (1.0 - 8.0 * alpha.ln());
    ButlerCheck { alpha, s2, rhs: Some(rhs), holds: Some(s2 <= rhs + CHECK_SLACK) }
}

/// `sqrt(2k) (S_k(X) + S_k(Y)) + s_{k+1}`, with `S_k` the square roots of the
/// weighted k-variances. No constant factor is applied.
pub fn theorem_bound(decomp: &CorrespondenceDecomposition, k: usize, skx: f64, sky: f64) -> Result<f64> {
    if k == 0 || k > decomp.rank() {
        return Err(Error::KOutOfRange { k, max: decomp.rank() });
    }
    Ok((2.0 * k as f64).sqrt() * (skx + sky) + decomp.s(k + 1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub k: usize,
    /// `rho(R_a, C_b)`; absent for pairs with an empty cluster.
    pub pair_densities: Vec<Vec<Option<f64>>>,
    pub pair_gammas: Vec<Vec<Measured<f64>>>,
    /// Largest pair gamma; a bound if any pair gamma is.
    pub k_way_discrepancy: Measured<f64>,
    pub global_discrepancy_alpha: Measured<f64>,
    /// Same enumeration as alpha, compared against `s_2`.
    pub mixing_margin: Measured<f64>,
    pub s2: f64,
    pub theorem_bound: Measured<f64>,
    /// The product form `sqrt(2k) S_k(X) S_k(Y) + s_{k+1}`, for comparison only.
    pub theorem_bound_product_form: Measured<f64>,
    pub butler: Option<ButlerCheck>,
}

/// Spectral fallback: `sqrt(|R||C|) ||E||_2 / sqrt(Vol(R)Vol(C))` with
/// `E_ij = c_ij - rho d_i d_j` over the pair.
fn pair_gamma_bound(t: &Normalized, rows: &[usize], cols: &[usize], rho: f64, vr: f64, vc: f64) -> f64 {
    let e = DMatrix::from_fn(rows.len(), cols.len(), |a, b| {
        let (i, j) = (rows[a], cols[b]);
        t.values[i * t.stride + j] - rho * t.row[i] * t.col[j]
    });
    cut_norm_spectral_bound(&e) / (vr * vc).sqrt()
}

/// Pairwise volume regularity of an assignment plus global discrepancy figures.
///
/// Pairs within the caps are enumerated exactly; larger pairs get a spectral
/// upper bound and are flagged as such.
pub fn k_way_discrepancy(
    table: &ContingencyTable,
    decomp: &CorrespondenceDecomposition,
    assignment: &ClusterAssignment,
    caps: &EnumerationCaps,
) -> RegularityReport {
    let k = assignment.k;
    let t = normalized(table);
    let row_sets: Vec<Vec<usize>> = (0..k).map(|a| assignment.row_cluster(a)).collect();
    let col_sets: Vec<Vec<usize>> = (0..k).map(|b| assignment.col_cluster(b)).collect();

    let mut densities = vec![vec![None; k]; k];
    let mut gammas = vec![vec![Measured::skipped("empty cluster"); k]; k];
    for a in 0..k {
        for b in 0..k {
            let (rs, cs) = (&row_sets[a], &col_sets[b]);
            if rs.is_empty() || cs.is_empty() {
                continue;
            }
            let vr: f64 = rs.iter().map(|&i| t.row[i]).sum();
            let vc: f64 = cs.iter().map(|&j| t.col[j]).sum();
            let (values, stride) = (&t.values, t.stride);
            let cut: f64 = rs.iter().flat_map(|&i| cs.iter().map(move |&j| values[i * stride + j])).sum();
            let rho = cut / (vr * vc);
            densities[a][b] = Some(rho);
            gammas[a][b] = if caps.allows(rs.len(), cs.len()) {
                let best = rectangle_max(&t.values, t.stride, rs, cs, &t.row, &t.col, |c, vx, vy| {
                    (c - rho * vx * vy).abs() / (vr * vc).sqrt()
                });
                Measured::exact(best.value)
            } else {
                Measured::bound(pair_gamma_bound(&t, rs, cs, rho, vr, vc))
            };
        }
    }
    let present: Vec<&Measured<f64>> = gammas.iter().flatten().filter(|g| g.value.is_some()).collect();
    let k_way = match present.iter().filter_map(|g| g.value).reduce(f64::max) {
        None => Measured::skipped("no non-empty cluster pair"),
        Some(v) if present.iter().all(|g| g.is_exact()) => Measured::exact(v),
        Some(v) => Measured::bound(v),
    };

    let s2 = decomp.s(2);
    let (alpha, mixing, butler) = match mixing_max(table, caps) {
        Ok(best) => {
            let butler = butler_converse_check(s2, best.value);
            (Measured::exact(best.value), Measured::exact(best.value), Some(butler))
        }
        Err(_) => {
            let reason = format!("table exceeds the {}-element enumeration cap", caps.subset_cap);
            // the mixing inequality bounds alpha by s_2
            (Measured::bound(s2), Measured::skipped(reason), None)
        }
    };

    let skx = assignment.row_variance.max(0.0).sqrt();
    let sky = assignment.col_variance.max(0.0).sqrt();
    let (bound, product) = match theorem_bound(decomp, k, skx, sky) {
        Ok(v) => {
            let product = (2.0 * k as f64).sqrt() * skx * sky + decomp.s(k + 1);
            (Measured::exact(v), Measured::exact(product))
        }
        Err(e) => (Measured::skipped(e.to_string()), Measured::skipped(e.to_string())),
    };

    RegularityReport {
        k,
        pair_densities: densities,
        pair_gammas: gammas,
        k_way_discrepancy: k_way,
        global_discrepancy_alpha: alpha,
        mixing_margin: mixing,
        s2,
        theorem_bound: bound,
        theorem_bound_product_form: product,
        butler,
    }
}

/// Subset of one axis as an [`IndexSubset`].
pub fn subset(axis: Axis, members: &[usize]) -> IndexSubset {
    IndexSubset::from_unsorted(axis, members.to_vec())
}
