//! Contingency tables: validated nonnegative arrays with cached margins.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tables with at most this many cells are stored densely.
pub const DENSE_CELL_LIMIT: usize = 1_000_000;

/// Relative tolerance used when re-checking cached margins.
pub const MARGIN_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Row,
    Column,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axis::Row => f.write_str("row"),
            Axis::Column => f.write_str("column"),
        }
    }
}

/// A sorted set of distinct row or column indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSubset {
    axis: Axis,
    members: Vec<usize>,
}

impl IndexSubset {
    /// Members must be strictly increasing.
    pub fn new(axis: Axis, members: Vec<usize>) -> Result<Self> {
        if members.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::UnsortedSubset);
        }
        Ok(Self { axis, members })
    }

    /// Sorts and deduplicates the given indices.
    pub fn from_unsorted(axis: Axis, mut members: Vec<usize>) -> Self {
        members.sort_unstable();
        members.dedup();
        Self { axis, members }
    }

    pub fn all(axis: Axis, len: usize) -> Self {
        Self { axis, members: (0..len).collect() }
    }

    pub fn empty(axis: Axis) -> Self {
        Self { axis, members: Vec::new() }
    }

    pub fn rows(members: impl IntoIterator<Item = usize>) -> Self {
        Self::from_unsorted(Axis::Row, members.into_iter().collect())
    }

    pub fn cols(members: impl IntoIterator<Item = usize>) -> Self {
        Self::from_unsorted(Axis::Column, members.into_iter().collect())
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    fn check_bounds(&self, len: usize) -> Result<()> {
        match self.members.last() {
            Some(&index) if index >= len => Err(Error::IndexOutOfRange { axis: self.axis, index, len }),
            _ => Ok(()),
        }
    }

    /// Membership mask of length `len`.
    pub fn mask(&self, len: usize) -> Vec<bool> {
        let mut mask = vec![false; len];
        for &i in &self.members {
            mask[i] = true;
        }
        mask
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Storage {
    /// Row-major cell values.
    Dense(Vec<f64>),
    /// Strictly positive entries, sorted row-major, no duplicates.
    Sparse(Vec<(usize, usize, f64)>),
}

/// A validated nonnegative `n x m` table without empty rows or columns.
///
/// Tables are immutable; operations that change entries return a new table.
#[derive(Debug, Clone, PartialEq)]
pub struct ContingencyTable {
    n_rows: usize,
    n_cols: usize,
    storage: Storage,
    row_sums: Vec<f64>,
    col_sums: Vec<f64>,
    total: f64,
    original_total: f64,
    row_labels: Option<Vec<String>>,
    col_labels: Option<Vec<String>>,
}

/// Rows and columns removed by [`ContingencyTable::drop_empty`], as original indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DropReport {
    pub dropped_rows: Vec<usize>,
    pub dropped_cols: Vec<usize>,
    /// Original index of every retained row.
    pub kept_rows: Vec<usize>,
    /// Original index of every retained column.
    pub kept_cols: Vec<usize>,
}

fn check_cell(row: usize, col: usize, value: f64) -> Result<()> {
    if !value.is_finite() {
        return Err(Error::NonFinite { row, col });
    }
    if value < 0.0 {
        return Err(Error::NegativeEntry { row, col, value });
    }
    Ok(())
}

impl ContingencyTable {
    /// Builds a table from equal-length rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(n * m);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != m {
                return Err(Error::RaggedRows { line: i + 1, expected: m, found: row.len() });
            }
            values.extend_from_slice(row);
        }
        Self::from_dense(n, m, values)
    }

    /// Builds a table from row-major values. Storage follows [`DENSE_CELL_LIMIT`].
    pub fn from_dense(n_rows: usize, n_cols: usize, values: Vec<f64>) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::EmptyTable);
        }
        if values.len() != n_rows * n_cols {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {n_rows} x {n_cols} table",
                values.len()
            )));
        }
        for (idx, &v) in values.iter().enumerate() {
            check_cell(idx / n_cols, idx % n_cols, v)?;
        }
        let storage = if n_rows * n_cols <= DENSE_CELL_LIMIT {
            Storage::Dense(values)
        } else {
            Storage::Sparse(
                values
                    .into_iter()
                    .enumerate()
                    .filter(|(_, v)| *v > 0.0)
                    .map(|(idx, v)| (idx / n_cols, idx % n_cols, v))
                    .collect(),
            )
        };
        Self::finish(n_rows, n_cols, storage)
    }

    /// Builds a table from zero-based `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::EmptyTable);
        }
        let mut entries = Vec::new();
        for (i, j, v) in triplets {
            if i >= n_rows {
                return Err(Error::IndexOutOfRange { axis: Axis::Row, index: i, len: n_rows });
            }
            if j >= n_cols {
                return Err(Error::IndexOutOfRange { axis: Axis::Column, index: j, len: n_cols });
            }
            check_cell(i, j, v)?;
            entries.push((i, j, v));
        }
        if n_rows * n_cols <= DENSE_CELL_LIMIT {
            let mut values = vec![0.0; n_rows * n_cols];
            for (i, j, v) in entries {
                values[i * n_cols + j] += v;
            }
            return Self::finish(n_rows, n_cols, Storage::Dense(values));
        }
        entries.sort_by_key(|&(i, j, _)| (i, j));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(entries.len());
        for (i, j, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => merged.push((i, j, v)),
            }
        }
        merged.retain(|e| e.2 > 0.0);
        Self::finish(n_rows, n_cols, Storage::Sparse(merged))
    }

    /// Builds a table after removing identically zero rows and columns.
    pub fn drop_empty(n_rows: usize, n_cols: usize, values: &[f64]) -> Result<(Self, DropReport)> {
        if values.len() != n_rows * n_cols {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {n_rows} x {n_cols} table",
                values.len()
            )));
        }
        for (idx, &v) in values.iter().enumerate() {
            check_cell(idx / n_cols.max(1), idx % n_cols.max(1), v)?;
        }
        let mut report = DropReport::default();
        let mut col_nonzero = vec![false; n_cols];
        for i in 0..n_rows {
            let row = &values[i * n_cols..(i + 1) * n_cols];
            if row.iter().any(|&v| v > 0.0) {
                report.kept_rows.push(i);
                for (j, &v) in row.iter().enumerate() {
                    col_nonzero[j] |= v > 0.0;
                }
            } else {
                report.dropped_rows.push(i);
            }
        }
        for (j, nz) in col_nonzero.into_iter().enumerate() {
            if nz {
                report.kept_cols.push(j);
            } else {
                report.dropped_cols.push(j);
            }
        }
        let kept: Vec<f64> = report
            .kept_rows
            .iter()
            .flat_map(|&i| report.kept_cols.iter().map(move |&j| values[i * n_cols + j]))
            .collect();
        let table = Self::from_dense(report.kept_rows.len(), report.kept_cols.len(), kept)?;
        Ok((table, report))
    }

    fn finish(n_rows: usize, n_cols: usize, storage: Storage) -> Result<Self> {
        let mut row_sums = vec![0.0; n_rows];
        let mut col_sums = vec![0.0; n_cols];
        match &storage {
            Storage::Dense(values) => {
                for (i, row) in values.chunks_exact(n_cols).enumerate() {
                    for (j, &v) in row.iter().enumerate() {
                        row_sums[i] += v;
                        col_sums[j] += v;
                    }
                }
            }
            Storage::Sparse(entries) => {
                for &(i, j, v) in entries {
                    row_sums[i] += v;
                    col_sums[j] += v;
                }
            }
        }
        if let Some(i) = row_sums.iter().position(|&s| s <= 0.0) {
            return Err(Error::ZeroRow(i));
        }
        if let Some(j) = col_sums.iter().position(|&s| s <= 0.0) {
            return Err(Error::ZeroColumn(j));
        }
        let total: f64 = row_sums.iter().sum();
        Ok(Self {
            n_rows,
            n_cols,
            storage,
            row_sums,
            col_sums,
            total,
            original_total: total,
            row_labels: None,
            col_labels: None,
        })
    }

    /// Attaches row and column labels; lengths must match the table.
    pub fn with_labels(mut self, rows: Option<Vec<String>>, cols: Option<Vec<String>>) -> Result<Self> {
        if let Some(r) = &rows {
            if r.len() != self.n_rows {
                return Err(Error::DimensionMismatch(format!("{} row labels for {} rows", r.len(), self.n_rows)));
            }
        }
        if let Some(c) = &cols {
            if c.len() != self.n_cols {
                return Err(Error::DimensionMismatch(format!(
                    "{} column labels for {} columns",
                    c.len(),
                    self.n_cols
                )));
            }
        }
        self.row_labels = rows;
        self.col_labels = cols;
        Ok(self)
    }

    /// Divides every entry by the total so the table sums to one.
    ///
    /// The pre-normalization total is kept as [`original_total`](Self::original_total).
    pub fn normalized(&self) -> Self {
        let scale = self.total;
        let storage = match &self.storage {
            Storage::Dense(values) => Storage::Dense(values.iter().map(|v| v / scale).collect()),
            Storage::Sparse(entries) => {
                Storage::Sparse(entries.iter().map(|&(i, j, v)| (i, j, v / scale)).collect())
            }
        };
        let mut table = Self::finish(self.n_rows, self.n_cols, storage)
            .expect("scaling by a positive total keeps margins positive");
        table.original_total = self.original_total;
        table.row_labels = self.row_labels.clone();
        table.col_labels = self.col_labels.clone();
        table
    }

    pub fn is_normalized(&self) -> bool {
        (self.total - 1.0).abs() <= MARGIN_TOLERANCE
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_rows, self.n_cols)
    }

    pub fn row_sums(&self) -> &[f64] {
        &self.row_sums
    }

    pub fn col_sums(&self) -> &[f64] {
        &self.col_sums
    }

    /// Margin vector along an axis.
    pub fn margins(&self, axis: Axis) -> &[f64] {
        match axis {
            Axis::Row => &self.row_sums,
            Axis::Column => &self.col_sums,
        }
    }

    pub fn len(&self, axis: Axis) -> usize {
        match axis {
            Axis::Row => self.n_rows,
            Axis::Column => self.n_cols,
        }
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn original_total(&self) -> f64 {
        self.original_total
    }

    pub fn row_labels(&self) -> Option<&[String]> {
        self.row_labels.as_deref()
    }

    pub fn col_labels(&self) -> Option<&[String]> {
        self.col_labels.as_deref()
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    /// Number of strictly positive cells.
    pub fn nnz(&self) -> usize {
        self.entries().count()
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        match &self.storage {
            Storage::Dense(values) => values[row * self.n_cols + col],
            Storage::Sparse(entries) => entries
                .binary_search_by_key(&(row, col), |&(i, j, _)| (i, j))
                .map_or(0.0, |pos| entries[pos].2),
        }
    }

    /// Strictly positive entries as `(row, col, value)`, in row-major order.
    pub fn entries(&self) -> Box<dyn Iterator<Item = (usize, usize, f64)> + '_> {
        match &self.storage {
            Storage::Dense(values) => {
                let m = self.n_cols;
                Box::new(
                    values
                        .iter()
                        .enumerate()
                        .filter(|(_, v)| **v > 0.0)
                        .map(move |(idx, &v)| (idx / m, idx % m, v)),
                )
            }
            Storage::Sparse(entries) => Box::new(entries.iter().copied()),
        }
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n_rows, self.n_cols);
        for (i, j, v) in self.entries() {
            out[(i, j)] = v;
        }
        out
    }

    /// Row-major copy of every cell, zeros included.
    pub fn to_dense_values(&self) -> Vec<f64> {
        match &self.storage {
            Storage::Dense(values) => values.clone(),
            Storage::Sparse(entries) => {
                let mut values = vec![0.0; self.n_rows * self.n_cols];
                for &(i, j, v) in entries {
                    values[i * self.n_cols + j] = v;
                }
                values
            }
        }
    }

    /// True iff the bipartite support graph on rows and columns is connected.
    pub fn is_nondecomposable(&self) -> bool {
        let mut parent: Vec<usize> = (0..self.n_rows + self.n_cols).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut components = parent.len();
        for (i, j, _) in self.entries() {
            let a = find(&mut parent, i);
            let b = find(&mut parent, self.n_rows + j);
            if a != b {
                parent[a] = b;
                components -= 1;
            }
        }
        components == 1
    }

    /// Sum of the margins over a subset of rows or columns.
    pub fn volume(&self, subset: &IndexSubset) -> Result<f64> {
        subset.check_bounds(self.len(subset.axis))?;
        let margins = self.margins(subset.axis);
        Ok(subset.members.iter().map(|&i| margins[i]).sum())
    }

    /// Total mass inside the rectangle `rows x cols`.
    pub fn cut(&self, rows: &IndexSubset, cols: &IndexSubset) -> Result<f64> {
        if rows.axis != Axis::Row || cols.axis != Axis::Column {
            return Err(Error::DimensionMismatch("cut expects a row subset and a column subset".into()));
        }
        rows.check_bounds(self.n_rows)?;
        cols.check_bounds(self.n_cols)?;
        match &self.storage {
            Storage::Dense(values) => Ok(rows
                .members
                .iter()
                .map(|&i| {
                    let row = &values[i * self.n_cols..(i + 1) * self.n_cols];
                    cols.members.iter().map(|&j| row[j]).sum::<f64>()
                })
                .sum()),
            Storage::Sparse(_) => {
                let row_mask = rows.mask(self.n_rows);
                let col_mask = cols.mask(self.n_cols);
                Ok(self.entries().filter(|&(i, j, _)| row_mask[i] && col_mask[j]).map(|e| e.2).sum())
            }
        }
    }

    /// `k x k` matrix of cuts between the parts of two labelings.
    pub(crate) fn block_cuts(&self, row_labels: &[usize], col_labels: &[usize], k: usize) -> Vec<Vec<f64>> {
        let mut blocks = vec![vec![0.0; k]; k];
        for (i, j, v) in self.entries() {
            blocks[row_labels[i]][col_labels[j]] += v;
        }
        blocks
    }

    /// Subtable restricted to the given rows and columns, in the given order.
    pub fn subtable(&self, rows: &[usize], cols: &[usize]) -> Result<Self> {
        for &i in rows {
            if i >= self.n_rows {
                return Err(Error::IndexOutOfRange { axis: Axis::Row, index: i, len: self.n_rows });
            }
        }
        for &j in cols {
            if j >= self.n_cols {
                return Err(Error::IndexOutOfRange { axis: Axis::Column, index: j, len: self.n_cols });
            }
        }
        let values = rows.iter().flat_map(|&i| cols.iter().map(move |&j| (i, j))).map(|(i, j)| self.entry(i, j)).collect();
        Self::from_dense(rows.len(), cols.len(), values)
    }

    /// Recomputes margins from the entries and checks them against the cache.
    pub fn margins_consistent(&self) -> bool {
        let mut rows = vec![0.0; self.n_rows];
        let mut cols = vec![0.0; self.n_cols];
        for (i, j, v) in self.entries() {
            rows[i] += v;
            cols[j] += v;
        }
        let close = |a: f64, b: f64| (a - b).abs() <= MARGIN_TOLERANCE * a.abs().max(b.abs());
        rows.iter().zip(&self.row_sums).all(|(a, b)| close(*a, *b))
            && cols.iter().zip(&self.col_sums).all(|(a, b)| close(*a, *b))
    }
}
