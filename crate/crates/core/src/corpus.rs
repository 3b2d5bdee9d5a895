//! Bundled benchmark cases: example programs, their mitigated variants,
//! input relations and expected verdicts.
//!
//! Each case lives in `corpus/<name>/` with `program.sps`, `phi.json` and
//! `manifest.json`.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::checker::{check_sct, CheckError, GenConfig, Verdict};
use crate::lang::{parse_source, ParseError, SourceProgram};
use crate::semantics::{LeakageModel, Variant};
use crate::transform::{PhiError, PhiSpec};

/// The mitigation applied to a case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseVariant {
    /// No mitigation.
    Vulnerable,
    IndexMasked,
    Selslh,
    Fenced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Expected {
    Violation,
    NoViolation,
}

impl fmt::Display for Expected {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl Expected {
    pub fn matches(self, v: &Verdict) -> bool {
        match self {
            Expected::Violation => v.result.is_violation(),
            Expected::NoViolation => v.result.is_no_violation(),
        }
    }
}

/// The contents of `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub name: String,
    pub variant: CaseVariant,
    pub spectre: Variant,
    pub model: LeakageModel,
    pub expected: Expected,
    /// Overrides of the default checker configuration.
    #[serde(default)]
    pub config: GenConfig,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
}

#[derive(Debug, Clone)]
pub struct CorpusCase {
    pub name: String,
    pub source_path: PathBuf,
    pub phi_path: PathBuf,
    pub source: String,
    pub program: SourceProgram,
    pub phi: PhiSpec,
    pub variant: CaseVariant,
    pub spectre: Variant,
    pub model: LeakageModel,
    pub expected: Expected,
    pub config: GenConfig,
}

impl CorpusCase {
    /// Runs the speculative checker with the case's own configuration.
    pub fn check(&self) -> Result<Verdict, CheckError> {
        self.check_with(&self.model, &self.config)
    }

    pub fn check_with(&self, model: &LeakageModel, cfg: &GenConfig) -> Result<Verdict, CheckError> {
        check_sct(&self.program, &self.phi, model, self.spectre, cfg)
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Parse { path: PathBuf, source: ParseError },
    #[error("{}: {source}", path.display())]
    Phi { path: PathBuf, source: PhiError },
    #[error("{}: malformed manifest: {source}", path.display())]
    Manifest { path: PathBuf, source: serde_json::Error },
    #[error("{}: manifest name `{name}` does not match the directory name", path.display())]
    NameMismatch { path: PathBuf, name: String },
}

fn read(path: &Path) -> Result<String, CorpusError> {
    fs::read_to_string(path).map_err(|source| CorpusError::Io { path: path.to_owned(), source })
}

/// Loads one case directory.
pub fn load_case(dir: &Path) -> Result<CorpusCase, CorpusError> {
    let manifest_path = dir.join("manifest.json");
    let manifest: Manifest = serde_json::from_str(&read(&manifest_path)?)
        .map_err(|source| CorpusError::Manifest { path: manifest_path.clone(), source })?;
    if dir.file_name().and_then(|n| n.to_str()) != Some(manifest.name.as_str()) {
        return Err(CorpusError::NameMismatch { path: manifest_path, name: manifest.name });
    }
    let source_path = dir.join("program.sps");
    let source = read(&source_path)?;
    let program = parse_source(&source).map_err(|source| CorpusError::Parse { path: source_path.clone(), source })?;
    let phi_path = dir.join("phi.json");
    let phi = PhiSpec::from_json(&read(&phi_path)?).map_err(|source| CorpusError::Phi { path: phi_path.clone(), source })?;
    Ok(CorpusCase {
        name: manifest.name,
        source_path,
        phi_path,
        source,
        program,
        phi,
        variant: manifest.variant,
        spectre: manifest.spectre,
        model: manifest.model,
        expected: manifest.expected,
        config: manifest.config,
    })
}

/// Loads every case directory under `dir` (those holding a
/// `manifest.json`), sorted by name.
pub fn load_corpus(dir: impl AsRef<Path>) -> Result<Vec<CorpusCase>, CorpusError> {
    let dir = dir.as_ref();
    let entries = fs::read_dir(dir).map_err(|source| CorpusError::Io { path: dir.to_owned(), source })?;
    let mut dirs = Vec::new();
    for e in entries {
        let e = e.map_err(|source| CorpusError::Io { path: dir.to_owned(), source })?;
        let p = e.path();
        if p.join("manifest.json").is_file() {
            dirs.push(p);
        }
    }
    dirs.sort();
    dirs.iter().map(|d| load_case(d)).collect()
}
