//! Table parsers, report serialization and heatmap output.
//!
//! Supported inputs:
//!
//! * dense CSV, with an optional header row and an optional leading label column;
//! * triplets, one `i j value` per line with 1-based indices and `#` comments;
//! * Matrix Market `coordinate real general` (or `integer`) with 1-based indices.
//!
//! Sparse formats sum duplicate coordinates. Numbers use `.` as the decimal point.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde::de::DeserializeOwned;

use crate::clustering::ClusterAssignment;
use crate::error::{Error, Result};
use crate::table::ContingencyTable;

fn number(text: &str) -> Option<f64> {
    let t = text.trim();
    if t.is_empty() {
        return None;
    }
    t.parse::<f64>().ok()
}

/// Dense CSV. The first record is a header iff none of its cells is numeric;
/// the first column holds labels iff none of the data rows starts with a number.
pub fn parse_dense_csv(text: &str) -> Result<ContingencyTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::MalformedLine {
            line: e.position().map_or(0, |p| p.line() as usize),
            text: e.to_string(),
        })?;
        let line = rec.position().map_or(records.len() + 1, |p| p.line() as usize);
        let cells: Vec<String> = rec.iter().map(str::to_owned).collect();
        if cells.iter().all(|c| c.is_empty()) {
            continue;
        }
        records.push((line, cells));
    }
    if records.is_empty() {
        return Err(Error::EmptyTable);
    }
    let header = records.len() > 1 && records[0].1.iter().all(|c| number(c).is_none());
    let header = header.then(|| records.remove(0).1);
    let labelled = records.iter().all(|(_, cells)| number(&cells[0]).is_none())
        && records.iter().all(|(_, cells)| cells.len() > 1);

    let expected = records[0].1.len();
    if let Some(h) = &header {
        if h.len() != expected {
            return Err(Error::RaggedRows { line: 1, expected, found: h.len() });
        }
    }
    let skip = usize::from(labelled);
    let m = expected - skip;
    let mut values = Vec::with_capacity(records.len() * m);
    let mut row_labels = Vec::new();
    for (r, (line, cells)) in records.iter().enumerate() {
        if cells.len() != expected {
            return Err(Error::RaggedRows { line: *line, expected, found: cells.len() });
        }
        if labelled {
            row_labels.push(cells[0].clone());
        }
        for (c, cell) in cells.iter().enumerate().skip(skip) {
            match number(cell) {
                Some(v) => values.push(v),
                None => {
                    return Err(Error::NonNumericCell { row: r + 1 + usize::from(header.is_some()), col: c + 1, text: cell.clone() })
                }
            }
        }
    }
    let table = ContingencyTable::from_dense(records.len(), m, values)?;
    let col_labels = header.map(|h| h[skip..].to_vec());
    table.with_labels(labelled.then_some(row_labels), col_labels)
}

fn sparse_entry(line: usize, raw: &str, n: Option<(usize, usize)>) -> Result<(usize, usize, f64)> {
    let bad = || Error::MalformedLine { line, text: raw.to_owned() };
    let mut parts = raw.split_whitespace();
    let i: usize = parts.next().and_then(|t| t.parse().ok()).ok_or_else(bad)?;
    let j: usize = parts.next().and_then(|t| t.parse().ok()).ok_or_else(bad)?;
    let v = parts.next().and_then(number).ok_or_else(bad)?;
    if parts.next().is_some() {
        return Err(bad());
    }
    if i == 0 || j == 0 {
        return Err(bad());
    }
    if let Some((rows, cols)) = n {
        if i > rows || j > cols {
            return Err(Error::IndexOutOfDeclaredBounds { row: i, col: j, rows, cols });
        }
    }
    Ok((i - 1, j - 1, v))
}

/// Matrix Market coordinate format; entries not listed are zero.
pub fn parse_matrix_market(text: &str) -> Result<ContingencyTable> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let (_, banner) = lines.next().ok_or_else(|| Error::BadHeader("empty input".into()))?;
    let fields: Vec<String> = banner.split_whitespace().map(str::to_ascii_lowercase).collect();
    let supported = fields.len() == 5
        && fields[0] == "%%matrixmarket"
        && fields[1] == "matrix"
        && fields[2] == "coordinate"
        && (fields[3] == "real" || fields[3] == "integer")
        && fields[4] == "general";
    if !supported {
        return Err(Error::BadHeader(banner.to_owned()));
    }
    let mut content = lines.filter(|(_, l)| !l.is_empty() && !l.starts_with('%'));
    let (line, size) = content.next().ok_or_else(|| Error::BadHeader("missing size line".into()))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::MalformedLine { line, text: size.to_owned() }))
        .collect::<Result<_>>()?;
    let [rows, cols, nnz] = dims[..] else {
        return Err(Error::MalformedLine { line, text: size.to_owned() });
    };
    let entries: Vec<(usize, usize, f64)> =
        content.map(|(line, l)| sparse_entry(line, l, Some((rows, cols)))).collect::<Result<_>>()?;
    if entries.len() != nnz {
        return Err(Error::BadHeader(format!("declared {nnz} entries, found {}", entries.len())));
    }
    ContingencyTable::from_triplets(rows, cols, entries)
}

/// Triplet lines; the shape is given by the largest indices.
pub fn parse_triplets(text: &str) -> Result<ContingencyTable> {
    let mut entries = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let l = raw.split('#').next().unwrap_or("").trim();
        if l.is_empty() {
            continue;
        }
        entries.push(sparse_entry(idx + 1, l, None)?);
    }
    let rows = entries.iter().map(|e| e.0 + 1).max().unwrap_or(0);
    let cols = entries.iter().map(|e| e.1 + 1).max().unwrap_or(0);
    ContingencyTable::from_triplets(rows, cols, entries)
}

/// Triplet text for the positive entries, preceded by `# ` comment lines.
pub fn format_triplets(table: &ContingencyTable, comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        out.push_str(&format!("# {c}\n"));
    }
    for (i, j, v) in table.entries() {
        out.push_str(&format!("{} {} {v}\n", i + 1, j + 1));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Triplets,
    MatrixMarket,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "triplets" => Ok(Format::Triplets),
            "matrixmarket" | "mtx" => Ok(Format::MatrixMarket),
            other => Err(format!("unknown format {other:?}")),
        }
    }
}

pub fn parse_table(text: &str, format: Format) -> Result<ContingencyTable> {
    match format {
        Format::Csv => parse_dense_csv(text),
        Format::Triplets => parse_triplets(text),
        Format::MatrixMarket => parse_matrix_market(text),
    }
}

pub fn read_table(path: &Path, format: Format) -> Result<ContingencyTable> {
    parse_table(&fs::read_to_string(path)?, format)
}

/// Pretty JSON with a trailing newline. Floats use the shortest representation
/// that parses back to the same value.
pub fn to_document<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::BadReport(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

pub fn from_document<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::BadReport(e.to_string()))
}

pub fn write_document<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    fs::write(path, to_document(value)?)?;
    Ok(())
}

pub fn read_document<T: DeserializeOwned>(path: &Path) -> Result<T> {
    from_document(&fs::read_to_string(path)?)
}

/// Values plotted by [`write_heatmap`], already in display order.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    /// `values[a][b] = c_ij / (d_i d_j)` for `i = row_order[a]`, `j = col_order[b]`.
    pub values: Vec<Vec<f64>>,
    pub row_order: Vec<usize>,
    pub col_order: Vec<usize>,
    /// Cumulative cluster sizes along each axis, ending at the axis length.
    pub row_boundaries: Vec<usize>,
    pub col_boundaries: Vec<usize>,
    pub max: f64,
}

impl Heatmap {
    /// 8-bit gray level of each cell, linear from 0 to `max`.
    pub fn pixels(&self) -> Vec<u8> {
        self.values
            .iter()
            .flatten()
            .map(|&v| if self.max > 0.0 { (255.0 * v / self.max).round() as u8 } else { 0 })
            .collect()
    }
}

fn cluster_order(labels: &[usize], k: usize) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by_key(|&i| labels[i]);
    let mut bounds = Vec::with_capacity(k);
    let mut acc = 0;
    for a in 0..k {
        acc += labels.iter().filter(|&&l| l == a).count();
        bounds.push(acc);
    }
    (order, bounds)
}

/// Sorts rows and columns by cluster (stable by index) and computes the
/// relative densities `c_ij / (d_i d_j)` on the normalized table.
pub fn heatmap(table: &ContingencyTable, assignment: &ClusterAssignment) -> Result<Heatmap> {
    if assignment.row_labels.len() != table.n_rows() || assignment.col_labels.len() != table.n_cols() {
        return Err(Error::DimensionMismatch("assignment does not match the table shape".into()));
    }
    let k = assignment.k;
    for (index, &label) in assignment.row_labels.iter().chain(&assignment.col_labels).enumerate() {
        if label >= k {
            return Err(Error::LabelOutOfRange { index, label, k });
        }
    }
    let total = table.total();
    let (dr, dc) = (table.row_sums(), table.col_sums());
    let (row_order, row_boundaries) = cluster_order(&assignment.row_labels, k);
    let (col_order, col_boundaries) = cluster_order(&assignment.col_labels, k);
    let values: Vec<Vec<f64>> = row_order
        .iter()
        .map(|&i| col_order.iter().map(|&j| (table.entry(i, j) / total) / ((dr[i] / total) * (dc[j] / total))).collect())
        .collect();
    let max = values.iter().flatten().copied().fold(0.0, f64::max);
    Ok(Heatmap { values, row_order, col_order, row_boundaries, col_boundaries, max })
}

fn joined<T: ToString>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

/// Binary PGM (P5) at `path` plus a CSV sidecar next to it with the plotted
/// values, orders and boundaries. Returns the sidecar path.
pub fn write_heatmap(table: &ContingencyTable, assignment: &ClusterAssignment, path: &Path) -> Result<PathBuf> {
    let map = heatmap(table, assignment)?;
    let (n, m) = (map.row_order.len(), map.col_order.len());
    let mut image = Vec::with_capacity(n * m + 32);
    write!(image, "P5\n{m} {n}\n255\n")?;
    image.extend(map.pixels());
    fs::write(path, image)?;

    let sidecar = sidecar_path(path);
    let mut csv = String::new();
    csv.push_str(&format!("# max,{}\n", map.max));
    csv.push_str(&format!("# row_boundaries,{}\n", joined(&map.row_boundaries)));
    csv.push_str(&format!("# col_boundaries,{}\n", joined(&map.col_boundaries)));
    csv.push_str(&format!("# row_order,{}\n", joined(&map.row_order)));
    csv.push_str(&format!("# col_order,{}\n", joined(&map.col_order)));
    for row in &map.values {
        csv.push_str(&joined(row));
        csv.push('\n');
    }
    fs::write(&sidecar, csv)?;
    Ok(sidecar)
}

/// `heat.pgm` becomes `heat.csv`; a path already ending in `.csv` gets `.values.csv`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    if path.extension().is_some_and(|e| e == "csv") {
        path.with_extension("values.csv")
    } else {
        path.with_extension("csv")
    }
}

/// Reads the plotted value grid back from a sidecar, ignoring comment lines.
pub fn read_heatmap_values(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty())
        .map(|(idx, l)| {
            l.split(',')
                .map(|c| number(c).ok_or_else(|| Error::MalformedLine { line: idx + 1, text: l.to_owned() }))
                .collect()
        })
        .collect()
}
