//! TOML run manifests for `simulate`.
//!
//! ```toml
//! povm = "povm.json"
//! operator = "x.json"
//! ensemble = "uniform"
//! dual = "optimal"
//! shots = 1000000
//! seed = 7
//! out = "run.json"
//! ```
//!
//! Relative paths are resolved against the manifest's directory.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Category, CliError};
use crate::inputs::{read_text, EnsembleSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DualChoice {
    Canonical,
    #[default]
    Optimal,
}

impl DualChoice {
    pub fn label(self) -> &'static str {
        match self {
            DualChoice::Canonical => "canonical",
            DualChoice::Optimal => "optimal",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    povm: PathBuf,
    operator: PathBuf,
    #[serde(default = "uniform")]
    ensemble: String,
    #[serde(default)]
    dual: DualChoice,
    shots: usize,
    seed: u64,
    out: Option<PathBuf>,
    #[serde(default)]
    permissive: bool,
}

fn uniform() -> String {
    "uniform".into()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub povm: PathBuf,
    pub operator: PathBuf,
    pub ensemble: EnsembleSpec,
    pub dual: DualChoice,
    pub shots: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub permissive: bool,
}

fn resolve(base: &Path, p: PathBuf) -> PathBuf {
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

fn require_file(p: &Path) -> Result<(), CliError> {
    if p.is_file() {
        Ok(())
    } else {
        Err(CliError::io(p, "referenced file does not exist"))
    }
}

pub fn parse_manifest(text: &str, base: &Path) -> Result<RunManifest, CliError> {
    let raw: RawManifest =
        toml::from_str(text).map_err(|e| CliError::new(Category::Io, format!("manifest: {}", e.to_string().trim_end())))?;
    let ensemble = match raw.ensemble.parse().map_err(|e: String| CliError::new(Category::Io, e))? {
        EnsembleSpec::File(p) => EnsembleSpec::File(resolve(base, p)),
        EnsembleSpec::Uniform => EnsembleSpec::Uniform,
    };
    let m = RunManifest {
        povm: resolve(base, raw.povm),
        operator: resolve(base, raw.operator),
        ensemble,
        dual: raw.dual,
        shots: raw.shots,
        seed: raw.seed,
        out: raw.out.map(|p| resolve(base, p)),
        permissive: raw.permissive,
    };
    require_file(&m.povm)?;
    require_file(&m.operator)?;
    if let EnsembleSpec::File(p) = &m.ensemble {
        require_file(p)?;
    }
    Ok(m)
}

pub fn load_manifest(path: &Path) -> Result<RunManifest, CliError> {
    let base = path.parent().unwrap_or(Path::new("."));
    parse_manifest(&read_text(path)?, base).map_err(|e| CliError::new(e.category, format!("{}: {}", path.display(), e.message)))
}
