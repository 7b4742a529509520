//! Error categories and their exit codes.

use std::path::Path;

use povm_core::Error as CoreError;

use crate::format::FormatError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Validation,
    Io,
    Numerical,
}

impl Category {
    pub fn exit_code(self) -> u8 {
        match self {
            Category::Validation => 1,
            Category::Io => 2,
            Category::Numerical => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Category::Validation => "validation",
            Category::Io => "io",
            Category::Numerical => "numerical",
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{message}")]
pub struct CliError {
    pub category: Category,
    pub message: String,
}

impl CliError {
    pub fn new(category: Category, message: impl Into<String>) -> Self {
        Self {
            category,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        Self::new(Category::Io, format!("{}: {err}", path.display()))
    }

    pub fn parse(path: &Path, err: FormatError) -> Self {
        Self::new(Category::Io, format!("{}: {err}", path.display()))
    }

    /// Wraps a core error with the context it arose in.
    pub fn core(context: &str, err: CoreError) -> Self {
        Self::new(classify(&err), format!("{context}: {err}"))
    }
}

/// Input defects are validation failures; breakdowns of the numerics are
/// numerical failures.
pub fn classify(err: &CoreError) -> Category {
    match err {
        CoreError::NonFinite
        | CoreError::ZeroMetric
        | CoreError::ZeroSpan
        | CoreError::DegenerateVariance { .. }
        | CoreError::InvalidProbabilities { .. } => Category::Numerical,
        _ => Category::Validation,
    }
}
