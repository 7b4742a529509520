//! JSON operator files.
//!
//! ```json
//! {
//!   "dim": 2,
//!   "matrices": [
//!     { "name": "P1", "rows": [[["64/1197", 0], ["-16/1197", 0]],
//!                               [["-16/1197", 0], ["40/1197", 0]]] }
//!   ]
//! }
//! ```
//!
//! Each entry is a `[re, im]` pair. A part is either a JSON number or a
//! string holding an exact rational `"p/q"` (or an integer `"p"`). Rationals
//! are kept exact until [`OperatorFile::operators`] converts them. Entries of
//! an ensemble file carry an extra `"weight"`.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::ToPrimitive;
use povm_core::{Complex64, Operator};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// One real part of a complex entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scalar {
    Rational(Ratio<i64>),
    Decimal(f64),
}

impl Scalar {
    /// Nearest double.
    pub fn to_f64(self) -> f64 {
        match self {
            Scalar::Rational(r) => r.to_f64().unwrap_or(f64::NAN),
            Scalar::Decimal(x) => x,
        }
    }
}

impl FromStr for Scalar {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let t = s.trim();
        let r = Ratio::<i64>::from_str(t).map_err(|e| format!("invalid rational {s:?}: {e}"))?;
        Ok(Scalar::Rational(r))
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Rational(r) => write!(f, "{r}"),
            Scalar::Decimal(x) => write!(f, "{x}"),
        }
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Scalar::Rational(r) => s.serialize_str(&r.to_string()),
            Scalar::Decimal(x) => s.serialize_f64(*x),
        }
    }
}

struct ScalarVisitor;

impl Visitor<'_> for ScalarVisitor {
    type Value = Scalar;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("a number or a rational string \"p/q\"")
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<Scalar, E> {
        Ok(Scalar::Decimal(v))
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Scalar, E> {
        Ok(Scalar::Decimal(v as f64))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Scalar, E> {
        Ok(Scalar::Decimal(v as f64))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<Scalar, E> {
        v.parse().map_err(E::custom)
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        d.deserialize_any(ScalarVisitor)
    }
}

/// `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Entry(pub Scalar, pub Scalar);

impl Entry {
    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.0.to_f64(), self.1.to_f64())
    }

    pub fn from_complex(z: Complex64) -> Self {
        Entry(Scalar::Decimal(z.re), Scalar::Decimal(z.im))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixEntry {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<Scalar>,
    pub rows: Vec<Vec<Entry>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorFile {
    pub dim: usize,
    pub matrices: Vec<MatrixEntry>,
}

/// An operator with its name and optional ensemble weight.
#[derive(Debug, Clone)]
pub struct NamedOperator {
    pub name: String,
    pub weight: Option<f64>,
    pub operator: Operator,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FormatError {
    #[error("{path}: {message} (line {line}, column {column})")]
    Syntax {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Shape { path: String, message: String },
}

/// Parses and shape-checks an operator file.
pub fn parse_operator_file(text: &str) -> Result<OperatorFile, FormatError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let file: OperatorFile = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        FormatError::Syntax {
            path,
            line: inner.line(),
            column: inner.column(),
            message: strip_position(&inner.to_string()),
        }
    })?;
    de.end().map_err(|e| FormatError::Syntax {
        path: ".".into(),
        line: e.line(),
        column: e.column(),
        message: "trailing characters".into(),
    })?;
    file.check()?;
    Ok(file)
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

fn shape(path: String, message: impl Into<String>) -> FormatError {
    FormatError::Shape {
        path,
        message: message.into(),
    }
}

impl OperatorFile {
    fn check(&self) -> Result<(), FormatError> {
        if self.dim == 0 {
            return Err(shape("dim".into(), "dimension must be positive"));
        }
        if self.matrices.is_empty() {
            return Err(shape("matrices".into(), "at least one matrix is required"));
        }
        for (k, m) in self.matrices.iter().enumerate() {
            let at = format!("matrices[{k}]");
            if m.rows.len() != self.dim {
                return Err(shape(
                    format!("{at}.rows"),
                    format!("matrix {:?} has {} rows, dim is {}", m.name, m.rows.len(), self.dim),
                ));
            }
            for (r, row) in m.rows.iter().enumerate() {
                if row.len() != self.dim {
                    return Err(shape(
                        format!("{at}.rows[{r}]"),
                        format!("matrix {:?} row has {} entries, dim is {}", m.name, row.len(), self.dim),
                    ));
                }
                for (c, e) in row.iter().enumerate() {
                    if !(e.0.to_f64().is_finite() && e.1.to_f64().is_finite()) {
                        return Err(shape(format!("{at}.rows[{r}][{c}]"), "entry is not finite"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Converts every matrix to a double-precision operator.
    pub fn operators(&self) -> Vec<NamedOperator> {
        self.matrices
            .iter()
            .map(|m| {
                let entries = m.rows.iter().flatten().map(|e| e.to_complex()).collect();
                NamedOperator {
                    name: m.name.clone(),
                    weight: m.weight.map(Scalar::to_f64),
                    operator: Operator::from_row_major(self.dim, entries).expect("shape checked"),
                }
            })
            .collect()
    }

    /// Builds a file with decimal entries.
    pub fn from_operators<'a>(items: impl IntoIterator<Item = (String, &'a Operator)>) -> Self {
        let mut dim = 0;
        let matrices = items
            .into_iter()
            .map(|(name, op)| {
                dim = op.dim();
                let rows = (0..op.dim())
                    .map(|r| (0..op.dim()).map(|c| Entry::from_complex(op[(r, c)])).collect())
                    .collect();
                MatrixEntry {
                    name,
                    weight: None,
                    rows,
                }
            })
            .collect();
        Self { dim, matrices }
    }

    /// Canonical pretty-printed form; stable under parse and re-serialize.
    pub fn to_canonical_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable");
        s.push('\n');
        s
    }
}
