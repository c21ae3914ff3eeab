//! Weighted k-means over representatives and the biclustering pipeline.

use log::warn;
use nalgebra::DMatrix;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256StarStar;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{self, CorrespondenceDecomposition, Representation};
use crate::table::ContingencyTable;

/// Slack allowed when asserting that Lloyd iterations never increase the objective.
const MONOTONE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub restarts: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub seed: u64,
    /// Clusters smaller than this fraction of the items produce a warning.
    pub min_cluster_fraction: f64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self { restarts: 10, max_iterations: 300, tolerance: 1e-10, seed: 0, min_cluster_fraction: 0.0 }
    }
}

impl KMeansConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }
}

#[derive(Debug, Clone)]
pub struct KMeansResult {
    /// Zero-based cluster ids.
    pub labels: Vec<usize>,
    /// Weighted within-cluster sum of squares of the returned labels.
    pub variance: f64,
    /// `k x d`.
    pub centers: DMatrix<f64>,
    /// Index of the restart that produced the result.
    pub best_restart: usize,
    /// Objective after every Lloyd iteration, one list per restart.
    pub histories: Vec<Vec<f64>>,
}

impl KMeansResult {
    /// True when no Lloyd iteration of any restart increased the objective.
    pub fn is_monotone(&self) -> bool {
        self.histories
            .iter()
            .all(|h| h.windows(2).all(|w| w[1] <= w[0] + MONOTONE_SLACK * w[0].abs().max(1.0)))
    }
}

fn sq_dist(points: &DMatrix<f64>, i: usize, centers: &DMatrix<f64>, c: usize) -> f64 {
    (0..points.ncols()).map(|d| (points[(i, d)] - centers[(c, d)]).powi(2)).sum()
}

fn validate(points: &DMatrix<f64>, weights: &[f64]) -> Result<()> {
    if weights.len() != points.nrows() {
        return Err(Error::DimensionMismatch(format!("{} weights for {} points", weights.len(), points.nrows())));
    }
    if let Some((index, &value)) = weights.iter().enumerate().find(|(_, w)| !(**w > 0.0 && w.is_finite())) {
        return Err(Error::NonPositiveWeight { index, value });
    }
    Ok(())
}

/// Weighted centers; every cluster must be non-empty.
fn weighted_centers(points: &DMatrix<f64>, weights: &[f64], labels: &[usize], k: usize) -> DMatrix<f64> {
    let dim = points.ncols();
    let mut centers = DMatrix::zeros(k, dim);
    let mut mass = vec![0.0; k];
    for (i, &a) in labels.iter().enumerate() {
        mass[a] += weights[i];
        for d in 0..dim {
            centers[(a, d)] += weights[i] * points[(i, d)];
        }
    }
    for a in 0..k {
        for d in 0..dim {
            centers[(a, d)] /= mass[a];
        }
    }
    centers
}

fn objective(points: &DMatrix<f64>, weights: &[f64], labels: &[usize], centers: &DMatrix<f64>) -> f64 {
    labels.iter().enumerate().map(|(i, &a)| weights[i] * sq_dist(points, i, centers, a)).sum()
}

/// Weighted within-cluster sum of squares of the given labeling.
pub fn k_variance(points: &DMatrix<f64>, weights: &[f64], labels: &[usize], k: usize) -> Result<f64> {
    validate(points, weights)?;
    if labels.len() != points.nrows() {
        return Err(Error::DimensionMismatch(format!("{} labels for {} points", labels.len(), points.nrows())));
    }
    if let Some((index, &label)) = labels.iter().enumerate().find(|(_, l)| **l >= k) {
        return Err(Error::LabelOutOfRange { index, label, k });
    }
    let dim = points.ncols();
    let mut centers = DMatrix::zeros(k, dim);
    let mut mass = vec![0.0; k];
    for (i, &a) in labels.iter().enumerate() {
        mass[a] += weights[i];
        for d in 0..dim {
            centers[(a, d)] += weights[i] * points[(i, d)];
        }
    }
    for a in (0..k).filter(|&a| mass[a] > 0.0) {
        for d in 0..dim {
            centers[(a, d)] /= mass[a];
        }
    }
    Ok(objective(points, weights, labels, &centers))
}

/// Weighted k-means++: each new center is drawn with probability proportional to
/// weight times squared distance to the nearest chosen center.
fn seed_centers(points: &DMatrix<f64>, weights: &[f64], k: usize, rng: &mut Xoshiro256StarStar) -> DMatrix<f64> {
    let n = points.nrows();
    let dim = points.ncols();
    let mut chosen = Vec::with_capacity(k);
    let first = WeightedIndex::new(weights).expect("weights are positive").sample(rng);
    chosen.push(first);
    let mut nearest: Vec<f64> = (0..n).map(|i| sq_dist(points, i, points, first)).collect();
    while chosen.len() < k {
        let scores: Vec<f64> = nearest.iter().zip(weights).map(|(d, w)| d * w).collect();
        let next = match WeightedIndex::new(&scores) {
            Ok(dist) => dist.sample(rng),
            // every point coincides with a chosen center
            Err(_) => (0..n).find(|i| !chosen.contains(i)).expect("n >= k"),
        };
        chosen.push(next);
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(sq_dist(points, i, points, next));
        }
    }
    DMatrix::from_fn(k, dim, |a, d| points[(chosen[a], d)])
}

fn assign(points: &DMatrix<f64>, weights: &[f64], centers: &mut DMatrix<f64>, labels: &mut [usize]) {
    let k = centers.nrows();
    let mut sizes = vec![0usize; k];
    let mut dists = vec![0.0; labels.len()];
    for (i, label) in labels.iter_mut().enumerate() {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for a in 0..k {
            let d = sq_dist(points, i, centers, a);
            if d < best_d {
                best_d = d;
                best = a;
            }
        }
        *label = best;
        dists[i] = weights[i] * best_d;
        sizes[best] += 1;
    }
    // Empty-cluster repair: the worst-fit point of a multi-member cluster becomes a singleton.
    while let Some(empty) = sizes.iter().position(|&s| s == 0) {
        let mut pick = None;
        for i in 0..labels.len() {
            if sizes[labels[i]] >= 2 && pick.is_none_or(|p: usize| dists[i] > dists[p]) {
                pick = Some(i);
            }
        }
        let p = pick.expect("at least k points");
        sizes[labels[p]] -= 1;
        labels[p] = empty;
        sizes[empty] = 1;
        dists[p] = 0.0;
        for d in 0..points.ncols() {
            centers[(empty, d)] = points[(p, d)];
        }
    }
}

struct Run {
    labels: Vec<usize>,
    variance: f64,
    centers: DMatrix<f64>,
    history: Vec<f64>,
}

fn lloyd(points: &DMatrix<f64>, weights: &[f64], k: usize, config: &KMeansConfig, rng: &mut Xoshiro256StarStar) -> Run {
    let mut centers = seed_centers(points, weights, k, rng);
    let mut labels = vec![0; points.nrows()];
    assign(points, weights, &mut centers, &mut labels);
    let mut history = Vec::new();
    loop {
        centers = weighted_centers(points, weights, &labels, k);
        let value = objective(points, weights, &labels, &centers);
        let improvement = history.last().map_or(f64::INFINITY, |prev: &f64| prev - value);
        history.push(value);
        if improvement < config.tolerance || history.len() >= config.max_iterations {
            return Run { labels, variance: value, centers, history };
        }
        assign(points, weights, &mut centers, &mut labels);
    }
}

/// Best of `config.restarts` weighted Lloyd runs with k-means++ seeding.
///
/// Restart `r` draws from the seeded generator advanced by `r` jumps, so the
/// result depends only on the inputs and the seed.
pub fn weighted_kmeans(points: &DMatrix<f64>, weights: &[f64], k: usize, config: &KMeansConfig) -> Result<KMeansResult> {
    validate(points, weights)?;
    if k == 0 || points.nrows() < k {
        return Err(Error::TooFewPoints { points: points.nrows(), k });
    }
    let mut streams = Vec::with_capacity(config.restarts.max(1));
    let mut rng = Xoshiro256StarStar::seed_from_u64(config.seed);
    for _ in 0..config.restarts.max(1) {
        streams.push(rng.clone());
        rng.jump();
    }
    let runs: Vec<Run> = streams.into_par_iter().map(|mut rng| lloyd(points, weights, k, config, &mut rng)).collect();
    let mut best = 0;
    for (r, run) in runs.iter().enumerate() {
        if run.variance < runs[best].variance {
            best = r;
        }
    }
    let histories = runs.iter().map(|r| r.history.clone()).collect();
    let Run { labels, variance, centers, .. } = runs.into_iter().nth(best).expect("at least one restart");
    Ok(KMeansResult { labels, variance, centers, best_restart: best, histories })
}

/// Simultaneous k-partition of rows and columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub k: usize,
    /// Zero-based row cluster ids.
    pub row_labels: Vec<usize>,
    /// Zero-based column cluster ids.
    pub col_labels: Vec<usize>,
    /// Weighted k-variance `S_k^2(X)` of the row representatives.
    pub row_variance: f64,
    /// Weighted k-variance `S_k^2(Y)` of the column representatives.
    pub col_variance: f64,
    /// Centers in the reduced `(k-1)`-dimensional coordinates.
    pub row_centers: Vec<Vec<f64>>,
    pub col_centers: Vec<Vec<f64>>,
    /// Every Lloyd run on both axes was monotone.
    pub lloyd_monotone: bool,
    pub warnings: Vec<String>,
}

impl ClusterAssignment {
    /// Builds an assignment from labels alone, with variances left at zero.
    pub fn from_labels(k: usize, row_labels: Vec<usize>, col_labels: Vec<usize>) -> Self {
        Self {
            k,
            row_labels,
            col_labels,
            row_variance: 0.0,
            col_variance: 0.0,
            row_centers: Vec::new(),
            col_centers: Vec::new(),
            lloyd_monotone: true,
            warnings: Vec::new(),
        }
    }

    pub fn row_cluster(&self, a: usize) -> Vec<usize> {
        members(&self.row_labels, a)
    }

    pub fn col_cluster(&self, b: usize) -> Vec<usize> {
        members(&self.col_labels, b)
    }
}

fn members(labels: &[usize], a: usize) -> Vec<usize> {
    labels.iter().enumerate().filter(|(_, &l)| l == a).map(|(i, _)| i).collect()
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn balance_warnings(labels: &[usize], k: usize, fraction: f64, axis: &str, out: &mut Vec<String>) {
    if fraction <= 0.0 {
        return;
    }
    let floor = fraction * labels.len() as f64;
    for a in 0..k {
        let size = labels.iter().filter(|&&l| l == a).count();
        if (size as f64) < floor {
            let msg = format!("{axis} cluster {a} has {size} members, below {fraction} of {}", labels.len());
            warn!("{msg}");
            out.push(msg);
        }
    }
}

/// Decomposes, builds k-dimensional representatives, and clusters rows and
/// columns independently with margin weights.
pub fn bicluster(table: &ContingencyTable, k: usize, config: &KMeansConfig) -> Result<ClusterAssignment> {
    if !table.is_nondecomposable() {
        return Err(Error::DecomposableTable);
    }
    let decomp = spectral::decompose_table(table)?;
    bicluster_with(table, &decomp, k, config)
}

/// As [`bicluster`], reusing an existing decomposition.
pub fn bicluster_with(
    table: &ContingencyTable,
    decomp: &CorrespondenceDecomposition,
    k: usize,
    config: &KMeansConfig,
) -> Result<ClusterAssignment> {
    let rep = spectral::representatives(table, decomp, k)?;
    cluster_representation(table, &rep, config)
}

/// Clusters an existing representation, dropping its constant first coordinate.
pub fn cluster_representation(
    table: &ContingencyTable,
    rep: &Representation,
    config: &KMeansConfig,
) -> Result<ClusterAssignment> {
    let k = rep.k;
    let total = table.total();
    let row_w: Vec<f64> = table.row_sums().iter().map(|d| d / total).collect();
    let col_w: Vec<f64> = table.col_sums().iter().map(|d| d / total).collect();
    let (rows, cols) = rep.without_trivial();
    let row_fit = weighted_kmeans(&rows, &row_w, k, config)?;
    let col_fit = weighted_kmeans(&cols, &col_w, k, config)?;

    let mut warnings = Vec::new();
    if let Some(gap) = rep.small_gap {
        warnings.push(format!("s_k - s_(k+1) = {gap:e} is below {:e}", spectral::GAP_WARNING));
    }
    balance_warnings(&row_fit.labels, k, config.min_cluster_fraction, "row", &mut warnings);
    balance_warnings(&col_fit.labels, k, config.min_cluster_fraction, "column", &mut warnings);
    Ok(ClusterAssignment {
        k,
        lloyd_monotone: row_fit.is_monotone() && col_fit.is_monotone(),
        row_centers: matrix_rows(&row_fit.centers),
        col_centers: matrix_rows(&col_fit.centers),
        row_labels: row_fit.labels,
        col_labels: col_fit.labels,
        row_variance: row_fit.variance,
        col_variance: col_fit.variance,
        warnings,
    })
}
