//! Ensemble members named by `--models`.
//!
//! Each entry of the comma-separated list is one of
//! - a trained classifier file,
//! - a directory of precomputed `<file id>.prob` matrices, or
//! - a manifest whose non-comment lines name further members (first
//!   whitespace-separated field; relative paths are taken from the
//!   manifest's directory).

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ensalign::acoustic::{parse_prob_matrix, AcousticModel};
use ensalign::{FeatureMatrix, FrameClassifier, LogProbMatrix};

pub const CLASSIFIER_HEADER: &str = "ensalign-frame-classifier";
pub const MATRIX_SUFFIX: &str = ".prob";

#[derive(Debug)]
pub enum Member {
    Classifier { path: PathBuf, model: FrameClassifier },
    Matrices { dir: PathBuf },
}

impl Member {
    pub fn needs_features(&self) -> bool {
        matches!(self, Member::Classifier { .. })
    }

    pub fn describe(&self) -> String {
        match self {
            Member::Classifier { path, .. } => path.display().to_string(),
            Member::Matrices { dir } => format!("{}/*{MATRIX_SUFFIX}", dir.display()),
        }
    }

    pub fn log_probs(&self, file_id: &str, features: Option<&FeatureMatrix>) -> Result<LogProbMatrix> {
        match self {
            Member::Classifier { path, model } => {
                let f = features.context("features were not computed")?;
                model
                    .score(f)
                    .with_context(|| format!("scoring with {}", path.display()))
            }
            Member::Matrices { dir } => {
                let p = dir.join(format!("{file_id}{MATRIX_SUFFIX}"));
                let text = std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
                parse_prob_matrix(&text, None).with_context(|| format!("parsing {}", p.display()))
            }
        }
    }
}

pub fn load_members(list: &str) -> Result<Vec<Member>> {
    let mut out = Vec::new();
    for entry in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        load_entry(Path::new(entry), &mut out, 0)?;
    }
    Ok(out)
}

fn load_entry(path: &Path, out: &mut Vec<Member>, depth: usize) -> Result<()> {
    if depth > 8 {
        bail!("manifests nested too deeply at {}", path.display());
    }
    if path.is_dir() {
        out.push(Member::Matrices {
            dir: path.to_path_buf(),
        });
        return Ok(());
    }
    let text = std::fs::read_to_string(path).with_context(|| format!("reading model {}", path.display()))?;
    if text.starts_with(CLASSIFIER_HEADER) {
        let model = FrameClassifier::from_text(&text).with_context(|| format!("loading {}", path.display()))?;
        out.push(Member::Classifier {
            path: path.to_path_buf(),
            model,
        });
        return Ok(());
    }
    let base = path.parent().unwrap_or(Path::new("."));
    for line in text.lines().map(str::trim) {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let first = line.split_whitespace().next().expect("non-empty line");
        let p = Path::new(first);
        let p = if p.is_relative() { base.join(p) } else { p.to_path_buf() };
        load_entry(&p, out, depth + 1)?;
    }
    Ok(())
}
