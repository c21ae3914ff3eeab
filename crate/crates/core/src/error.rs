use thiserror::Error;

use crate::table::Axis;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("table must have at least one row and one column")]
    EmptyTable,
    #[error("negative entry {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("row {0} sums to zero")]
    ZeroRow(usize),
    #[error("column {0} sums to zero")]
    ZeroColumn(usize),
    #[error("{axis} index {index} out of range (len {len})")]
    IndexOutOfRange { axis: Axis, index: usize, len: usize },
    #[error("subset indices must be strictly increasing")]
    UnsortedSubset,
    #[error("empty subset where a non-empty one is required")]
    EmptySubset,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("k = {k} outside the admissible range 1..={max}")]
    KOutOfRange { k: usize, max: usize },
    #[error("s_{k} equals s_{} to machine precision; representatives are not unique", k + 1)]
    DegenerateGap { k: usize },
    #[error("singular value decomposition did not converge within {iterations} iterations")]
    ConvergenceFailure { iterations: usize },

    #[error("{points} points cannot be split into {k} clusters")]
    TooFewPoints { points: usize, k: usize },
    #[error("weight {value} at index {index} is not strictly positive")]
    NonPositiveWeight { index: usize, value: f64 },
    #[error("label {label} at index {index} is not below k = {k}")]
    LabelOutOfRange { index: usize, label: usize, k: usize },

    #[error("part {part} of the {axis} partition is empty")]
    EmptyPart { axis: Axis, part: usize },
    #[error("partition mismatch: {0}")]
    PartitionMismatch(String),
    #[error("enumeration needs {required} evaluations, over the budget of {budget}; pass force to override")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("table is decomposable (its support graph is disconnected)")]
    DecomposableTable,
    #[error("planted draw still has an empty row or column after {attempts} attempts")]
    DegenerateDraw { attempts: usize },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("directed graph has nonzero self-loop weight at vertex {0}")]
    NonzeroDiagonal(usize),
    #[error("vertex {vertex} is a {kind}")]
    SourceOrSink { vertex: usize, kind: &'static str },

    #[error("line {line}: expected {expected} cells, found {found}")]
    RaggedRows { line: usize, expected: usize, found: usize },
    #[error("non-numeric cell {text:?} at row {row}, col {col}")]
    NonNumericCell { row: usize, col: usize, text: String },
    #[error("bad Matrix Market header: {0}")]
    BadHeader(String),
    #[error("line {line}: malformed entry {text:?}")]
    MalformedLine { line: usize, text: String },
    #[error("entry ({row}, {col}) outside declared size {rows} x {cols}")]
    IndexOutOfDeclaredBounds { row: usize, col: usize, rows: usize, cols: usize },
    #[error("report could not be parsed: {0}")]
    BadReport(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Broad category of the failure, used for process exit codes.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::BudgetExceeded { .. } => ErrorKind::Budget,
            Error::ConvergenceFailure { .. } | Error::DegenerateGap { .. } => ErrorKind::Numerical,
            Error::Io(_) => ErrorKind::Io,
            _ => ErrorKind::Input,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Budget,
    Numerical,
    Io,
}
