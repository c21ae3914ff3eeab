//! Planted-block random tables, block-constant tables and directed graphs.

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;
use serde::{Deserialize, Serialize};

use crate::clustering::{self, ClusterAssignment, KMeansConfig};
use crate::error::{Error, Result};
use crate::metrics::{adjusted_rand_index, same_partition};
use crate::regularity::{self, EnumerationCaps, RegularityReport};
use crate::spectral::{self, CorrespondenceDecomposition};
use crate::table::ContingencyTable;

/// Number of draws attempted before giving up on a zero margin.
pub const MAX_DRAWS: usize = 100;

/// Binary table whose entry in block `(a, b)` is 1 with probability `p_ab`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedModel {
    pub row_block_sizes: Vec<usize>,
    pub col_block_sizes: Vec<usize>,
    /// `k x k`, indexed `[row block][column block]`.
    pub block_probs: Vec<Vec<f64>>,
    pub seed: u64,
}

impl PlantedModel {
    /// Equal-sized blocks with `p_in` on the diagonal and `p_out` elsewhere.
    pub fn diagonal(k: usize, rows: usize, cols: usize, p_in: f64, p_out: f64, seed: u64) -> Result<Self> {
        if k == 0 || rows % k != 0 || cols % k != 0 {
            return Err(Error::InvalidModel(format!("{rows}x{cols} does not split into {k} equal blocks")));
        }
        let block_probs = (0..k).map(|a| (0..k).map(|b| if a == b { p_in } else { p_out }).collect()).collect();
        let model = Self { row_block_sizes: vec![rows / k; k], col_block_sizes: vec![cols / k; k], block_probs, seed };
        model.validate()?;
        Ok(model)
    }

    pub fn k(&self) -> usize {
        self.block_probs.len()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.row_block_sizes.iter().sum(), self.col_block_sizes.iter().sum())
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.k();
        if k == 0 {
            return Err(Error::InvalidModel("at least one block is required".into()));
        }
        if self.row_block_sizes.len() != k || self.col_block_sizes.len() != k {
            return Err(Error::InvalidModel(format!(
                "{} row blocks and {} column blocks for a {k}x{k} probability matrix",
                self.row_block_sizes.len(),
                self.col_block_sizes.len()
            )));
        }
        if self.row_block_sizes.iter().chain(&self.col_block_sizes).any(|&s| s == 0) {
            return Err(Error::InvalidModel("block sizes must be positive".into()));
        }
        for (a, row) in self.block_probs.iter().enumerate() {
            if row.len() != k {
                return Err(Error::InvalidModel(format!("probability row {a} has {} entries, expected {k}", row.len())));
            }
            if let Some(p) = row.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(Error::InvalidModel(format!("probability {p} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn row_truth(&self) -> Vec<usize> {
        block_labels(&self.row_block_sizes)
    }

    pub fn col_truth(&self) -> Vec<usize> {
        block_labels(&self.col_block_sizes)
    }
}

fn block_labels(sizes: &[usize]) -> Vec<usize> {
    sizes.iter().enumerate().flat_map(|(a, &s)| std::iter::repeat_n(a, s)).collect()
}

/// A generated table with the planted labels it was drawn from.
#[derive(Debug, Clone)]
pub struct PlantedTable {
    /// Normalized to unit total.
    pub table: ContingencyTable,
    /// The 0/1 draw itself.
    pub counts: ContingencyTable,
    pub row_truth: Vec<usize>,
    pub col_truth: Vec<usize>,
    /// Number of draws consumed, 1 when the first draw was valid.
    pub draws: usize,
}

/// Draws 0/1 values in row-major order from one stream; a rejected draw is
/// followed by the next draw from the same stream.
fn draw_binary(model: &PlantedModel, zero_diagonal: bool) -> Result<(Vec<f64>, usize)> {
    model.validate()?;
    let (n, m) = model.shape();
    let rows = model.row_truth();
    let cols = model.col_truth();
    let mut rng = Xoshiro256StarStar::seed_from_u64(model.seed);
    for draw in 1..=MAX_DRAWS {
        let mut values = vec![0.0; n * m];
        for i in 0..n {
            for j in 0..m {
                let u: f64 = rng.random();
                if u < model.block_probs[rows[i]][cols[j]] {
                    values[i * m + j] = 1.0;
                }
            }
        }
        if zero_diagonal {
            for i in 0..n.min(m) {
                values[i * m + i] = 0.0;
            }
        }
        let row_ok = (0..n).all(|i| values[i * m..(i + 1) * m].iter().any(|&v| v > 0.0));
        let col_ok = (0..m).all(|j| (0..n).any(|i| values[i * m + j] > 0.0));
        if row_ok && col_ok {
            return Ok((values, draw));
        }
    }
    Err(Error::DegenerateDraw { attempts: MAX_DRAWS })
}

pub fn generate_planted(model: &PlantedModel) -> Result<PlantedTable> {
    let (values, draws) = draw_binary(model, false)?;
    let (n, m) = model.shape();
    let counts = ContingencyTable::from_dense(n, m, values)?;
    let table = counts.normalized();
    Ok(PlantedTable { table, counts, row_truth: model.row_truth(), col_truth: model.col_truth(), draws })
}

/// `c_ij = r_i q_j B_ab` for row `i` in block `a` and column `j` in block `b`.
pub fn block_constant_table(
    row_labels: &[usize],
    col_labels: &[usize],
    row_weights: &[f64],
    col_weights: &[f64],
    block: &[Vec<f64>],
) -> Result<ContingencyTable> {
    if row_labels.len() != row_weights.len() || col_labels.len() != col_weights.len() {
        return Err(Error::DimensionMismatch("labels and weights differ in length".into()));
    }
    let k = block.len();
    if let Some(&l) = row_labels.iter().chain(col_labels).find(|&&l| l >= k) {
        return Err(Error::InvalidModel(format!("block label {l} with only {k} blocks")));
    }
    if block.iter().any(|r| r.len() != k) {
        return Err(Error::InvalidModel("block matrix is not square".into()));
    }
    let m = col_labels.len();
    let values = (0..row_labels.len() * m)
        .map(|idx| {
            let (i, j) = (idx / m, idx % m);
            row_weights[i] * col_weights[j] * block[row_labels[i]][col_labels[j]]
        })
        .collect();
    ContingencyTable::from_dense(row_labels.len(), m, values)
}

/// How well the spectrum and the recovered clusters reflect known labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterizationCheck {
    pub k: usize,
    /// Singular values strictly above `threshold`.
    pub structural_count: usize,
    pub threshold: f64,
    /// `s_{k+1}`, zero beyond the rank.
    pub tail_max: f64,
    /// Weighted k-variance `S_k^2(X)` of the row representatives.
    pub skx: f64,
    /// Weighted k-variance `S_k^2(Y)` of the column representatives.
    pub sky: f64,
    /// Adjusted Rand index against the row truth.
    pub row_match: f64,
    pub col_match: f64,
    pub row_exact: bool,
    pub col_exact: bool,
    pub assignment: ClusterAssignment,
}

/// Decomposes, clusters into `k` and compares with the truth. `threshold`
/// defaults to the midpoint of `s_k` and `s_{k+1}`.
pub fn spectral_characterization_check(
    table: &ContingencyTable,
    k: usize,
    row_truth: &[usize],
    col_truth: &[usize],
    threshold: Option<f64>,
    config: &KMeansConfig,
) -> Result<CharacterizationCheck> {
    if row_truth.len() != table.n_rows() || col_truth.len() != table.n_cols() {
        return Err(Error::DimensionMismatch("truth labels do not match the table shape".into()));
    }
    let decomp = spectral::decompose_table(table)?;
    characterization_with(table, &decomp, k, row_truth, col_truth, threshold, config)
}

fn characterization_with(
    table: &ContingencyTable,
    decomp: &CorrespondenceDecomposition,
    k: usize,
    row_truth: &[usize],
    col_truth: &[usize],
    threshold: Option<f64>,
    config: &KMeansConfig,
) -> Result<CharacterizationCheck> {
    let assignment = clustering::bicluster_with(table, decomp, k, config)?;
    let threshold = threshold.unwrap_or((decomp.s(k) + decomp.s(k + 1)) / 2.0);
    Ok(CharacterizationCheck {
        k,
        structural_count: spectral::structural_k(&decomp.singular_values, threshold).count,
        threshold,
        tail_max: decomp.s(k + 1),
        skx: assignment.row_variance,
        sky: assignment.col_variance,
        row_match: adjusted_rand_index(&assignment.row_labels, row_truth),
        col_match: adjusted_rand_index(&assignment.col_labels, col_truth),
        row_exact: same_partition(&assignment.row_labels, row_truth),
        col_exact: same_partition(&assignment.col_labels, col_truth),
        assignment,
    })
}

/// Weighted directed graph without loops, sources or sinks.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectedGraph {
    n: usize,
    /// Row-major `n x n`; `w_ij` is the weight of the edge `i -> j`.
    weights: Vec<f64>,
    out_degrees: Vec<f64>,
    in_degrees: Vec<f64>,
}

impl DirectedGraph {
    pub fn new(n: usize, weights: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyTable);
        }
        if weights.len() != n * n {
            return Err(Error::DimensionMismatch(format!("{} weights for {n} vertices", weights.len())));
        }
        for (idx, &w) in weights.iter().enumerate() {
            let (row, col) = (idx / n, idx % n);
            if !w.is_finite() {
                return Err(Error::NonFinite { row, col });
            }
            if w < 0.0 {
                return Err(Error::NegativeEntry { row, col, value: w });
            }
        }
        if let Some(i) = (0..n).find(|&i| weights[i * n + i] != 0.0) {
            return Err(Error::NonzeroDiagonal(i));
        }
        let out_degrees: Vec<f64> = (0..n).map(|i| weights[i * n..(i + 1) * n].iter().sum()).collect();
        let in_degrees: Vec<f64> = (0..n).map(|j| (0..n).map(|i| weights[i * n + j]).sum()).collect();
        if let Some(vertex) = out_degrees.iter().position(|&d| d == 0.0) {
            return Err(Error::SourceOrSink { vertex, kind: "sink" });
        }
        if let Some(vertex) = in_degrees.iter().position(|&d| d == 0.0) {
            return Err(Error::SourceOrSink { vertex, kind: "source" });
        }
        Ok(Self { n, weights, out_degrees, in_degrees })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let mut weights = Vec::with_capacity(n * n);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != n {
                return Err(Error::DimensionMismatch(format!("row {i} has {} weights, expected {n}", r.len())));
            }
            weights.extend_from_slice(r);
        }
        Self::new(n, weights)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weight(&self, from: usize, to: usize) -> f64 {
        self.weights[from * self.n + to]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn out_degrees(&self) -> &[f64] {
        &self.out_degrees
    }

    pub fn in_degrees(&self) -> &[f64] {
        &self.in_degrees
    }

    fn total(&self) -> f64 {
        self.out_degrees.iter().sum()
    }

    /// Out-volume of `vertices` relative to the total weight.
    pub fn vol_out(&self, vertices: &[usize]) -> f64 {
        vertices.iter().map(|&i| self.out_degrees[i]).sum::<f64>() / self.total()
    }

    /// In-volume of `vertices` relative to the total weight.
    pub fn vol_in(&self, vertices: &[usize]) -> f64 {
        vertices.iter().map(|&j| self.in_degrees[j]).sum::<f64>() / self.total()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.weight(i, j) == self.weight(j, i)))
    }
}

/// Weight matrix as a normalized table: rows are tails, columns are heads.
pub fn directed_to_table(graph: &DirectedGraph) -> Result<ContingencyTable> {
    let table = ContingencyTable::from_dense(graph.n, graph.n, graph.weights.clone())?.normalized();
    if !table.is_nondecomposable() {
        return Err(Error::DecomposableTable);
    }
    Ok(table)
}

/// Clusters out-sides (rows) and in-sides (columns) of the vertices.
pub fn directed_bicluster(graph: &DirectedGraph, k: usize, config: &KMeansConfig) -> Result<ClusterAssignment> {
    clustering::bicluster(&directed_to_table(graph)?, k, config)
}

/// Regularity of out-cluster/in-cluster pairs, with row labels as out-clusters
/// and column labels as in-clusters.
pub fn directed_regularity(
    graph: &DirectedGraph,
    assignment: &ClusterAssignment,
    caps: &EnumerationCaps,
) -> Result<RegularityReport> {
    if assignment.row_labels.len() != graph.n || assignment.col_labels.len() != graph.n {
        return Err(Error::DimensionMismatch("assignment does not cover the vertex set".into()));
    }
    let table = directed_to_table(graph)?;
    let decomp = spectral::decompose_table(&table)?;
    Ok(regularity::k_way_discrepancy(&table, &decomp, assignment, caps))
}

/// Planted directed graph: a square planted draw with the diagonal zeroed
/// afterwards, redrawn until no vertex is a source or sink.
pub fn generate_directed_planted(model: &PlantedModel) -> Result<(DirectedGraph, Vec<usize>, Vec<usize>)> {
    let (n, m) = model.shape();
    if n != m {
        return Err(Error::InvalidModel(format!("directed models need a square shape, got {n}x{m}")));
    }
    let (values, _) = draw_binary(model, true)?;
    Ok((DirectedGraph::new(n, values)?, model.row_truth(), model.col_truth()))
}
