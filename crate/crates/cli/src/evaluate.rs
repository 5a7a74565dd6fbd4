use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use ensalign::evaluation::{
    error_table_csv, evaluate, BoundarySeq, ErrorReport, ErrorRow, EvalFile, Method, MethodChoice,
};
use ensalign::TextGrid;

use crate::fsio::{atomic_write, files_with_suffix};

pub const ERROR_TABLE_FILE: &str = "errors.csv";

#[derive(Debug)]
pub struct EvaluateJob {
    pub ref_dir: PathBuf,
    pub hyp_dir: PathBuf,
    pub out_dir: PathBuf,
    pub tier: String,
    pub method: MethodChoice,
    pub data: String,
    pub transcription: String,
}

#[derive(Debug)]
pub struct EvaluateOutcome {
    pub report: ErrorReport,
    pub row: ErrorRow,
    pub failures: Vec<(String, anyhow::Error)>,
}

/// Boundaries of a hypothesis CSV: the `median_s` column of a CI table or
/// the `end_time_s` column of an alignment export.
fn boundaries_from_csv(id: &str, path: &Path) -> Result<BoundarySeq> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let headers = reader.headers()?.clone();
    let col = headers
        .iter()
        .position(|h| h == "median_s")
        .or_else(|| headers.iter().position(|h| h == "end_time_s"))
        .ok_or_else(|| anyhow!("{}: no median_s or end_time_s column", path.display()))?;
    let mut times = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let field = rec.get(col).unwrap_or("");
        times.push(
            field
                .parse::<f64>()
                .with_context(|| format!("{}: bad time {field:?}", path.display()))?,
        );
    }
    Ok(BoundarySeq::new(id, times)?)
}

fn boundaries_from_grid(id: &str, path: &Path, tier: &str) -> Result<BoundarySeq> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let grid = TextGrid::read(&text).with_context(|| format!("parsing {}", path.display()))?;
    BoundarySeq::from_textgrid(id, &grid, tier).with_context(|| format!("{}", path.display()))
}

fn hypothesis(dir: &Path, id: &str, tier: &str) -> Result<BoundarySeq> {
    let grid = dir.join(format!("{id}.TextGrid"));
    if grid.is_file() {
        return boundaries_from_grid(id, &grid, tier);
    }
    for suffix in [".ci.csv", ".csv"] {
        let p = dir.join(format!("{id}{suffix}"));
        if p.is_file() {
            return boundaries_from_csv(id, &p);
        }
    }
    bail!("no hypothesis for {id} in {}", dir.display())
}

impl EvaluateJob {
    pub fn run(&self) -> Result<EvaluateOutcome> {
        let refs = files_with_suffix(&self.ref_dir, ".TextGrid")?;
        if refs.is_empty() {
            bail!("empty reference set: no .TextGrid files in {}", self.ref_dir.display());
        }
        let mut files = Vec::new();
        let mut failures = Vec::new();
        for (id, path) in &refs {
            let pair = boundaries_from_grid(id, path, &self.tier)
                .and_then(|reference| Ok((reference, hypothesis(&self.hyp_dir, id, &self.tier)?)));
            match pair {
                Ok((reference, hypothesis)) => files.push(EvalFile {
                    reference,
                    hypothesis,
                }),
                Err(e) => failures.push((id.clone(), e)),
            }
        }
        if files.is_empty() {
            bail!("empty evaluation set: no reference file has a usable hypothesis");
        }
        let report = evaluate(files, self.method)?;
        let method = match self.method {
            MethodChoice::Paired => Method::Paired,
            MethodChoice::Dtw => Method::Dtw,
            MethodChoice::Auto if report.dtw_files > 0 => Method::Dtw,
            MethodChoice::Auto => Method::Paired,
        };
        if report.dtw_files > 0 {
            log::info!(
                "{} of {} file(s) scored with DTW ({})",
                report.dtw_files,
                report.file_count,
                ensalign::evaluation::DTW_NORMALIZATION_NOTE
            );
        }
        let row = ErrorRow::from_report(&self.data, &self.transcription, method.label(), &report);
        std::fs::create_dir_all(&self.out_dir)?;
        atomic_write(
            &self.out_dir.join(ERROR_TABLE_FILE),
            error_table_csv(std::slice::from_ref(&row)).as_bytes(),
        )?;
        Ok(EvaluateOutcome {
            report,
            row,
            failures,
        })
    }
}
