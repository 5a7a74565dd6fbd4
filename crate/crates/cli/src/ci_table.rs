use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use ensalign::ensemble::CI_TABLE_HEADER;
use ensalign::evaluation::{width_report_ms, width_table_csv, WidthReport, WidthRow};

use crate::fsio::{atomic_write, files_with_suffix};

pub const CI_TABLE_FILE: &str = "ci_table.csv";
pub const WIDTH_TABLE_FILE: &str = "ci_widths.csv";

#[derive(Debug)]
pub struct CiTableJob {
    pub out_dir: PathBuf,
    pub data: String,
    pub transcription: String,
}

impl CiTableJob {
    /// Concatenates the per-file `*.ci.csv` tables in `out_dir` and
    /// summarizes their interval widths.
    pub fn run(&self) -> Result<WidthReport> {
        let inputs = files_with_suffix(&self.out_dir, ".ci.csv")?;
        if inputs.is_empty() {
            bail!("no .ci.csv files in {}", self.out_dir.display());
        }
        let mut combined = format!("{CI_TABLE_HEADER}\n");
        let mut widths_ms = Vec::new();
        for (_, path) in &inputs {
            let mut reader = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
            let headers = reader.headers()?.clone();
            if headers.iter().collect::<Vec<_>>().join(",") != CI_TABLE_HEADER {
                bail!("{}: unexpected header", path.display());
            }
            let width_col = headers.len() - 1;
            let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
            for rec in reader.records() {
                let rec = rec?;
                let w = rec.get(width_col).unwrap_or("");
                if !w.is_empty() {
                    let v: f64 = w
                        .parse()
                        .map_err(|_| anyhow!("{}: bad width {w:?}", path.display()))?;
                    widths_ms.push(v * 1000.0);
                }
                writer.write_record(&rec)?;
            }
            combined.push_str(std::str::from_utf8(&writer.into_inner()?)?);
        }
        let report = width_report_ms(&widths_ms);
        let row = WidthRow {
            data: self.data.clone(),
            transcription: self.transcription.clone(),
            mean_ms: report.mean_ms,
            median_ms: report.median_ms,
        };
        atomic_write(&self.out_dir.join(CI_TABLE_FILE), combined.as_bytes())?;
        atomic_write(
            &self.out_dir.join(WIDTH_TABLE_FILE),
            width_table_csv(std::slice::from_ref(&row)).as_bytes(),
        )?;
        Ok(report)
    }
}
