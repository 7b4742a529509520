//! Loading POVMs, operators and ensembles from files.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use povm_core::{validate_povm, Ensemble, Povm, ValidationMode};

use crate::error::{Category, CliError};
use crate::format::{parse_operator_file, NamedOperator, OperatorFile};

/// `uniform` or the path of an ensemble file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EnsembleSpec {
    Uniform,
    File(PathBuf),
}

impl FromStr for EnsembleSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.is_empty() {
            return Err("empty ensemble specification".into());
        }
        Ok(if s == "uniform" {
            EnsembleSpec::Uniform
        } else {
            EnsembleSpec::File(PathBuf::from(s))
        })
    }
}

impl fmt::Display for EnsembleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnsembleSpec::Uniform => f.write_str("uniform"),
            EnsembleSpec::File(p) => write!(f, "{}", p.display()),
        }
    }
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn load_operator_file(path: &Path) -> Result<OperatorFile, CliError> {
    parse_operator_file(&read_text(path)?).map_err(|e| CliError::parse(path, e))
}

pub fn mode(permissive: bool) -> ValidationMode {
    if permissive {
        ValidationMode::Permissive
    } else {
        ValidationMode::Strict
    }
}

/// A validated POVM with the element names from its file.
#[derive(Debug, Clone)]
pub struct NamedPovm {
    pub names: Vec<String>,
    pub povm: Povm,
}

pub fn povm_from_file(file: &OperatorFile, mode: ValidationMode) -> Result<NamedPovm, povm_core::Error> {
    let ops = file.operators();
    let names = ops.iter().map(|o| o.name.clone()).collect();
    let povm = validate_povm(ops.into_iter().map(|o| o.operator).collect(), mode)?;
    Ok(NamedPovm { names, povm })
}

pub fn load_povm(path: &Path, mode: ValidationMode) -> Result<NamedPovm, CliError> {
    let file = load_operator_file(path)?;
    povm_from_file(&file, mode).map_err(|e| CliError::core(&path.display().to_string(), e))
}

pub fn load_operators(path: &Path, dim: usize) -> Result<Vec<NamedOperator>, CliError> {
    let file = load_operator_file(path)?;
    if file.dim != dim {
        return Err(CliError::new(
            Category::Validation,
            format!("{}: operator dimension {} does not match POVM dimension {dim}", path.display(), file.dim),
        ));
    }
    Ok(file.operators())
}

/// Ensemble members take their `weight`; when no member has one the weights
/// are equal.
pub fn ensemble_from_file(file: &OperatorFile) -> Result<Ensemble, povm_core::Error> {
    let ops = file.operators();
    let n = ops.len() as f64;
    let all_missing = ops.iter().all(|o| o.weight.is_none());
    let members = ops
        .into_iter()
        .map(|o| {
            let w = match o.weight {
                Some(w) => w,
                None if all_missing => 1.0 / n,
                None => f64::NAN,
            };
            (o.operator, w)
        })
        .collect();
    Ensemble::new(members)
}

pub fn load_ensemble(spec: &EnsembleSpec, dim: usize) -> Result<Ensemble, CliError> {
    match spec {
        EnsembleSpec::Uniform => Ok(Ensemble::uniform(dim)),
        EnsembleSpec::File(path) => {
            let file = load_operator_file(path)?;
            let ens = ensemble_from_file(&file).map_err(|e| CliError::core(&path.display().to_string(), e))?;
            if ens.dim() != dim {
                return Err(CliError::new(
                    Category::Validation,
                    format!("{}: ensemble dimension {} does not match POVM dimension {dim}", path.display(), ens.dim()),
                ));
            }
            Ok(ens)
        }
    }
}
