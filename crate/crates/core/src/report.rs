//! End-to-end analysis of one table and the self-contained report it produces.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::clustering::{self, ClusterAssignment, KMeansConfig};
use crate::cuts::{self, BoundReport, TwoWayCutValue};
use crate::error::{Error, Result};
use crate::measure::Measured;
use crate::models;
use crate::regularity::{self, EnumerationCaps, MixingCheck, RegularityReport};
use crate::spectral::{self, CorrespondenceDecomposition, MinObjective, SvdMethod};
use crate::table::ContingencyTable;

pub const TOOL: &str = "cocluster";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    /// Number of clusters; chosen from the spectrum when absent.
    pub k: Option<usize>,
    /// Threshold for counting structural singular values when `k` is absent.
    pub epsilon: Option<f64>,
    pub kmeans: KMeansConfig,
    /// Run the brute-force oracles.
    pub exhaustive: bool,
    /// Ignore enumeration budgets.
    pub force: bool,
    pub subset_cap: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            k: None,
            epsilon: None,
            kmeans: KMeansConfig::default(),
            exhaustive: false,
            force: false,
            subset_cap: regularity::SUBSET_CAP,
        }
    }
}

impl AnalysisConfig {
    pub fn caps(&self) -> EnumerationCaps {
        EnumerationCaps { subset_cap: self.subset_cap, force: self.force }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KSelection {
    Requested,
    /// Count of singular values above `epsilon`.
    Threshold,
    /// Position of the largest relative gap in the spectrum.
    LargestGap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChosenK {
    pub value: usize,
    pub selection: KSelection,
    pub structural_count: Option<usize>,
    pub largest_gap_at: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSummary {
    pub n_rows: usize,
    pub n_cols: usize,
    pub original_total: f64,
    pub nonzeros: usize,
    pub nondecomposable: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutNormCheck {
    /// Cut norm of `C - d_row d_col^T` on the normalized table.
    pub cut_norm: Option<f64>,
    /// `sqrt(nm)` times the spectral norm of the same matrix.
    pub spectral_bound: f64,
    pub holds: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundComparisons {
    /// Representation objective minimum, corrected and as printed.
    pub min_objective: MinObjective,
    /// Exact minimum two-way cut against both lower bounds.
    pub two_way_cut_minimum: Measured<BoundReport>,
    pub mixing: Measured<MixingCheck>,
    pub cut_norm: Measured<CutNormCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub tool: String,
    pub version: String,
    pub config: AnalysisConfig,
    pub table: TableSummary,
    pub svd_method: SvdMethod,
    pub singular_values: Vec<f64>,
    pub k: ChosenK,
    pub assignment: ClusterAssignment,
    /// Two-way cut at the assignment with the optimal signs.
    pub two_way_cut: TwoWayCutValue,
    pub regularity: RegularityReport,
    pub bounds: BoundComparisons,
    pub warnings: Vec<String>,
}

pub fn summarize(table: &ContingencyTable) -> TableSummary {
    TableSummary {
        n_rows: table.n_rows(),
        n_cols: table.n_cols(),
        original_total: table.original_total(),
        nonzeros: table.nnz(),
        nondecomposable: table.is_nondecomposable(),
    }
}

/// Requested `k`, else the threshold count, else the largest relative gap.
pub fn choose_k(decomp: &CorrespondenceDecomposition, k: Option<usize>, epsilon: Option<f64>) -> Result<ChosenK> {
    let s = &decomp.singular_values;
    let gap = spectral::structural_k(s, epsilon.unwrap_or(0.5)).largest_gap_at;
    if let Some(k) = k {
        if k == 0 || k > decomp.rank() {
            return Err(Error::KOutOfRange { k, max: decomp.rank() });
        }
        let structural_count = epsilon.map(|e| spectral::structural_k(s, e).count);
        return Ok(ChosenK { value: k, selection: KSelection::Requested, structural_count, largest_gap_at: gap });
    }
    match epsilon {
        Some(e) => {
            if !(e > 0.0 && e < 1.0) {
                return Err(Error::InvalidModel(format!("epsilon must lie in (0, 1), got {e}")));
            }
            let count = spectral::structural_k(s, e).count.max(1);
            Ok(ChosenK { value: count, selection: KSelection::Threshold, structural_count: Some(count), largest_gap_at: gap })
        }
        None => Ok(ChosenK { value: gap, selection: KSelection::LargestGap, structural_count: None, largest_gap_at: gap }),
    }
}

/// Normalizes, checks non-decomposability and decomposes.
pub fn prepare(table: &ContingencyTable) -> Result<(ContingencyTable, CorrespondenceDecomposition)> {
    let table = table.normalized();
    if !table.is_nondecomposable() {
        return Err(Error::DecomposableTable);
    }
    let decomp = spectral::decompose_table(&table)?;
    Ok((table, decomp))
}

/// `C - d_row d_col^T` on the normalized table.
pub fn residual_matrix(table: &ContingencyTable) -> DMatrix<f64> {
    let total = table.total();
    let (dr, dc) = (table.row_sums(), table.col_sums());
    DMatrix::from_fn(table.n_rows(), table.n_cols(), |i, j| {
        table.entry(i, j) / total - dr[i] / total * (dc[j] / total)
    })
}

pub fn cut_norm_check(table: &ContingencyTable, config: &AnalysisConfig) -> Result<Measured<CutNormCheck>> {
    let a = residual_matrix(table);
    let spectral_bound = regularity::cut_norm_spectral_bound(&a);
    if !config.exhaustive {
        return Ok(Measured::bound(CutNormCheck { cut_norm: None, spectral_bound, holds: None }));
    }
    let value = regularity::cut_norm_bruteforce(&a, &config.caps())?;
    Ok(Measured::exact(CutNormCheck {
        cut_norm: Some(value),
        spectral_bound,
        holds: Some(value <= spectral_bound + regularity::CHECK_SLACK),
    }))
}

/// Regularity with enumeration only when exhaustive checks are requested.
pub fn regularity_report(
    table: &ContingencyTable,
    decomp: &CorrespondenceDecomposition,
    assignment: &ClusterAssignment,
    config: &AnalysisConfig,
) -> Result<RegularityReport> {
    if config.exhaustive {
        // a table over the caps is an error here, not a silent fallback
        regularity::discrepancy_bruteforce(table, &config.caps())?;
        Ok(regularity::k_way_discrepancy(table, decomp, assignment, &config.caps()))
    } else {
        Ok(regularity::k_way_discrepancy(table, decomp, assignment, &EnumerationCaps { subset_cap: 0, force: false }))
    }
}

/// Full pipeline: spectrum, clusters, cut, regularity and bound comparisons.
pub fn analyze(table: &ContingencyTable, config: &AnalysisConfig) -> Result<AnalysisReport> {
    let (table, decomp) = prepare(table)?;
    let k = choose_k(&decomp, config.k, config.epsilon)?;
    let assignment = clustering::bicluster_with(&table, &decomp, k.value, &config.kmeans)?;
    let two_way_cut = cuts::optimize_sigma(&table, &assignment.row_labels, &assignment.col_labels, k.value)?;
    let regularity = regularity_report(&table, &decomp, &assignment, config)?;

    let min_objective = spectral::min_objective(&decomp.singular_values, k.value)?;
    let (two_way_cut_minimum, mixing) = if config.exhaustive {
        (
            Measured::exact(cuts::bound_report(&table, k.value, config.force)?),
            Measured::exact(regularity::mixing_check(&table, &decomp, &config.caps())?),
        )
    } else {
        let reason = "exhaustive checks not requested";
        (Measured::skipped(reason), Measured::skipped(reason))
    };
    let cut_norm = cut_norm_check(&table, config)?;

    let mut warnings = assignment.warnings.clone();
    if !assignment.lloyd_monotone {
        warnings.push("a k-means run increased its objective".into());
    }
    Ok(AnalysisReport {
        tool: TOOL.into(),
        version: VERSION.into(),
        config: config.clone(),
        table: summarize(&table),
        svd_method: decomp.method,
        singular_values: decomp.singular_values.clone(),
        k,
        assignment,
        two_way_cut,
        regularity,
        bounds: BoundComparisons { min_objective, two_way_cut_minimum, mixing, cut_norm },
        warnings,
    })
}

/// Spectrum and cluster assignment only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiclusterDocument {
    pub tool: String,
    pub version: String,
    pub config: AnalysisConfig,
    pub table: TableSummary,
    pub singular_values: Vec<f64>,
    pub k: ChosenK,
    pub assignment: ClusterAssignment,
}

pub fn bicluster_document(table: &ContingencyTable, config: &AnalysisConfig) -> Result<BiclusterDocument> {
    let (table, decomp) = prepare(table)?;
    let k = choose_k(&decomp, config.k, config.epsilon)?;
    let assignment = clustering::bicluster_with(&table, &decomp, k.value, &config.kmeans)?;
    Ok(BiclusterDocument {
        tool: TOOL.into(),
        version: VERSION.into(),
        config: config.clone(),
        table: summarize(&table),
        singular_values: decomp.singular_values,
        k,
        assignment,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityDocument {
    #[serde(flatten)]
    pub clusters: BiclusterDocument,
    pub regularity: RegularityReport,
}

pub fn regularity_document(table: &ContingencyTable, config: &AnalysisConfig) -> Result<RegularityDocument> {
    let clusters = bicluster_document(table, config)?;
    let (table, decomp) = prepare(table)?;
    let regularity = regularity_report(&table, &decomp, &clusters.assignment, config)?;
    Ok(RegularityDocument { clusters, regularity })
}

/// Global discrepancy figures, independent of any clustering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyDocument {
    pub tool: String,
    pub version: String,
    pub config: AnalysisConfig,
    pub table: TableSummary,
    pub s2: f64,
    /// Exact when enumerated, else `s_2` as an upper bound.
    pub alpha: Measured<f64>,
    pub mixing: Measured<MixingCheck>,
    pub butler: Option<regularity::ButlerCheck>,
    pub cut_norm: Measured<CutNormCheck>,
}

pub fn discrepancy_document(table: &ContingencyTable, config: &AnalysisConfig) -> Result<DiscrepancyDocument> {
    let (table, decomp) = prepare(table)?;
    let s2 = decomp.s(2);
    let (alpha, mixing, butler) = if config.exhaustive {
        let mixing = regularity::mixing_check(&table, &decomp, &config.caps())?;
        let butler = regularity::butler_converse_check(s2, mixing.max_ratio);
        (Measured::exact(mixing.max_ratio), Measured::exact(mixing), Some(butler))
    } else {
        (Measured::bound(s2), Measured::skipped("exhaustive checks not requested"), None)
    };
    Ok(DiscrepancyDocument {
        tool: TOOL.into(),
        version: VERSION.into(),
        config: config.clone(),
        table: summarize(&table),
        s2,
        alpha,
        mixing,
        butler,
        cut_norm: cut_norm_check(&table, config)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutsDocument {
    #[serde(flatten)]
    pub clusters: BiclusterDocument,
    pub two_way_cut: TwoWayCutValue,
    pub min_objective: MinObjective,
    pub two_way_cut_minimum: Measured<BoundReport>,
}

pub fn cuts_document(table: &ContingencyTable, config: &AnalysisConfig) -> Result<CutsDocument> {
    let clusters = bicluster_document(table, config)?;
    let table = table.normalized();
    let k = clusters.k.value;
    let a = &clusters.assignment;
    let two_way_cut = cuts::optimize_sigma(&table, &a.row_labels, &a.col_labels, k)?;
    let min_objective = spectral::min_objective(&clusters.singular_values, k)?;
    let two_way_cut_minimum = if config.exhaustive {
        Measured::exact(cuts::bound_report(&table, k, config.force)?)
    } else {
        Measured::skipped("exhaustive checks not requested")
    };
    Ok(CutsDocument { clusters, two_way_cut, min_objective, two_way_cut_minimum })
}

/// Out-clusters as rows and in-clusters as columns of a directed graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectedDocument {
    pub tool: String,
    pub version: String,
    pub config: AnalysisConfig,
    pub vertices: usize,
    pub symmetric: bool,
    pub singular_values: Vec<f64>,
    pub k: ChosenK,
    /// Row labels are out-clusters, column labels in-clusters.
    pub assignment: ClusterAssignment,
    pub regularity: RegularityReport,
}

pub fn directed_document(graph: &models::DirectedGraph, config: &AnalysisConfig) -> Result<DirectedDocument> {
    let table = models::directed_to_table(graph)?;
    let (table, decomp) = prepare(&table)?;
    let k = choose_k(&decomp, config.k, config.epsilon)?;
    let assignment = clustering::bicluster_with(&table, &decomp, k.value, &config.kmeans)?;
    let regularity = regularity_report(&table, &decomp, &assignment, config)?;
    Ok(DirectedDocument {
        tool: TOOL.into(),
        version: VERSION.into(),
        config: config.clone(),
        vertices: graph.n(),
        symmetric: graph.is_symmetric(),
        singular_values: decomp.singular_values,
        k,
        assignment,
        regularity,
    })
}
