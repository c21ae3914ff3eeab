use serde::{Deserialize, Serialize};

/// How a reported number was obtained.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Computation {
    /// Exhaustive enumeration or closed form.
    Exact,
    /// An upper bound in place of the exact quantity.
    Bound,
    Skipped { reason: String },
}

/// A value tagged with its computation mode; `value` is absent when skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measured<T> {
    pub value: Option<T>,
    #[serde(flatten)]
    pub how: Computation,
}

impl<T> Measured<T> {
    pub fn exact(value: T) -> Self {
        Self { value: Some(value), how: Computation::Exact }
    }

    pub fn bound(value: T) -> Self {
        Self { value: Some(value), how: Computation::Bound }
    }

    pub fn skipped(reason: impl Into<String>) -> Self {
        Self { value: None, how: Computation::Skipped { reason: reason.into() } }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.how, Computation::Exact)
    }

    pub fn as_ref(&self) -> Option<&T> {
        self.value.as_ref()
    }
}
