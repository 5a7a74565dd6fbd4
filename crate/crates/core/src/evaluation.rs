//! Boundary-error evaluation.
//!
//! Two comparison methods: `paired` compares boundary `i` of the reference
//! with boundary `i` of the hypothesis and needs equal counts; `dtw` warps
//! the two end-time sequences onto each other, divides the path cost by the
//! hypothesis length `k`, and pools that average `k` times. Errors are
//! pooled over every boundary of every file before taking the mean and
//! median. The adjusted variants leave out each file's final boundary, which
//! sits at the end of the file by construction.

use std::fmt::Write as _;

use thiserror::Error;

use crate::ensemble::{median, EnsembleAlignment};
use crate::textgrid::{IntervalTier, Tier, TextGrid};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("{source_id}: boundary sequence is empty")]
    Empty { source_id: String },
    #[error("{source_id}: boundary times not strictly increasing at {index}")]
    NotIncreasing { source_id: String, index: usize },
    #[error("boundary counts differ ({reference} vs {hypothesis}); use DTW evaluation")]
    CountMismatch { reference: usize, hypothesis: usize },
    #[error("tier {0:?} not found or not an interval tier")]
    MissingTier(String),
}

/// Ordered boundary end times of one file's segmentation.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySeq {
    pub source_id: String,
    end_times_s: Vec<f64>,
}

impl BoundarySeq {
    pub fn new(source_id: impl Into<String>, end_times_s: Vec<f64>) -> Result<Self, EvalError> {
        let source_id = source_id.into();
        if end_times_s.is_empty() {
            return Err(EvalError::Empty { source_id });
        }
        if let Some(i) = end_times_s.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(EvalError::NotIncreasing {
                source_id,
                index: i + 1,
            });
        }
        Ok(Self {
            source_id,
            end_times_s,
        })
    }

    /// End times of the intervals of `tier` whose text passes `keep`.
    pub fn from_tier(
        source_id: impl Into<String>,
        tier: &IntervalTier,
        keep: impl Fn(&str) -> bool,
    ) -> Result<Self, EvalError> {
        Self::new(
            source_id,
            tier.intervals
                .iter()
                .filter(|iv| keep(&iv.text))
                .map(|iv| iv.end_s)
                .collect(),
        )
    }

    /// Boundaries of the named interval tier, skipping empty-text intervals.
    pub fn from_textgrid(
        source_id: impl Into<String>,
        tg: &TextGrid,
        tier_name: &str,
    ) -> Result<Self, EvalError> {
        match tg.tier(tier_name) {
            Some(Tier::Interval(t)) => Self::from_tier(source_id, t, |s| !s.trim().is_empty()),
            _ => Err(EvalError::MissingTier(tier_name.to_string())),
        }
    }

    pub fn times(&self) -> &[f64] {
        &self.end_times_s
    }

    pub fn len(&self) -> usize {
        self.end_times_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.end_times_s.is_empty()
    }

    /// The sequence without its final boundary, if anything remains.
    pub fn without_final(&self) -> Option<Self> {
        (self.len() > 1).then(|| Self {
            source_id: self.source_id.clone(),
            end_times_s: self.end_times_s[..self.len() - 1].to_vec(),
        })
    }
}

/// Element-wise `|ref_i − hyp_i|`.
pub fn paired_error(reference: &BoundarySeq, hypothesis: &BoundarySeq) -> Result<Vec<f64>, EvalError> {
    if reference.len() != hypothesis.len() {
        return Err(EvalError::CountMismatch {
            reference: reference.len(),
            hypothesis: hypothesis.len(),
        });
    }
    Ok(reference
        .times()
        .iter()
        .zip(hypothesis.times())
        .map(|(r, h)| (r - h).abs())
        .collect())
}

/// Minimum-cost monotone warping of two time sequences with local cost
/// `|a_i − b_j|` and unweighted match/insertion/deletion steps.
pub fn dtw_cost(a: &[f64], b: &[f64]) -> f64 {
    let (n, m) = (a.len(), b.len());
    if n == 0 || m == 0 {
        return if n == m { 0.0 } else { f64::INFINITY };
    }
    let mut prev = vec![f64::INFINITY; m];
    let mut cur = vec![f64::INFINITY; m];
    for i in 0..n {
        for j in 0..m {
            let cost = (a[i] - b[j]).abs();
            let best = if i == 0 && j == 0 {
                0.0
            } else {
                let diag = if i > 0 && j > 0 { prev[j - 1] } else { f64::INFINITY };
                let up = if i > 0 { prev[j] } else { f64::INFINITY };
                let left = if j > 0 { cur[j - 1] } else { f64::INFINITY };
                diag.min(up).min(left)
            };
            cur[j] = best + cost;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m - 1]
}

#[derive(Debug, Clone, PartialEq)]
pub struct DtwError {
    pub total_cost: f64,
    /// Hypothesis boundary count.
    pub k: usize,
    pub normalized: f64,
    /// `normalized` repeated `k` times.
    pub pooled: Vec<f64>,
}

pub fn dtw_error(reference: &BoundarySeq, hypothesis: &BoundarySeq) -> DtwError {
    dtw_error_times(reference.times(), hypothesis.times())
}

/// [`dtw_error`] on raw time slices, which need not be strictly increasing.
/// `hypothesis` must be non-empty.
pub fn dtw_error_times(reference: &[f64], hypothesis: &[f64]) -> DtwError {
    let total_cost = dtw_cost(reference, hypothesis);
    let k = hypothesis.len();
    let normalized = total_cost / k as f64;
    DtwError {
        total_cost,
        k,
        normalized,
        pooled: vec![normalized; k],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Paired,
    Dtw,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Paired => "Manual",
            Method::Dtw => "DTW",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MethodChoice {
    /// Paired when boundary counts match, DTW otherwise.
    #[default]
    Auto,
    Paired,
    Dtw,
}

impl std::str::FromStr for MethodChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(Self::Auto),
            "paired" => Ok(Self::Paired),
            "dtw" => Ok(Self::Dtw),
            _ => Err(format!("unknown method {s:?} (expected paired, dtw or auto)")),
        }
    }
}

/// One file's errors, unadjusted and with the final boundary left out.
#[derive(Debug, Clone, PartialEq)]
pub struct FileErrors {
    pub source_id: String,
    pub method: Method,
    pub errors: Vec<f64>,
    pub adjusted: Vec<f64>,
}

impl FileErrors {
    /// Per-boundary errors where entry `final_index` is the final boundary.
    pub fn with_final(source_id: impl Into<String>, errors: Vec<f64>, final_index: usize) -> Self {
        let adjusted = errors
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != final_index)
            .map(|(_, e)| *e)
            .collect();
        Self {
            source_id: source_id.into(),
            method: Method::Paired,
            errors,
            adjusted,
        }
    }

    pub fn paired(reference: &BoundarySeq, hypothesis: &BoundarySeq) -> Result<Self, EvalError> {
        let errors = paired_error(reference, hypothesis)?;
        let last = errors.len() - 1;
        Ok(Self::with_final(&reference.source_id, errors, last))
    }

    /// DTW errors; the adjusted vector reruns DTW with both final
    /// boundaries removed.
    pub fn dtw(reference: &BoundarySeq, hypothesis: &BoundarySeq) -> Self {
        let errors = dtw_error(reference, hypothesis).pooled;
        let adjusted = match (reference.without_final(), hypothesis.without_final()) {
            (Some(r), Some(h)) => dtw_error(&r, &h).pooled,
            _ => Vec::new(),
        };
        Self {
            source_id: reference.source_id.clone(),
            method: Method::Dtw,
            errors,
            adjusted,
        }
    }
}

/// Pooled error metrics in seconds. Metrics over an empty pool are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub pooled_abs_err_s: Vec<f64>,
    pub pooled_adjusted_s: Vec<f64>,
    pub mean_abs_err_s: Option<f64>,
    pub median_abs_err_s: Option<f64>,
    pub adj_mean_abs_err_s: Option<f64>,
    pub adj_median_abs_err_s: Option<f64>,
    pub file_count: usize,
    pub boundary_count: usize,
    /// Files that contribute nothing once the final boundary is dropped.
    pub no_adjusted_files: Vec<String>,
    pub paired_files: usize,
    pub dtw_files: usize,
}

pub const DTW_NORMALIZATION_NOTE: &str =
    "DTW cost normalized by the hypothesis boundary count and pooled that many times";

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Pools per-file errors into an [`ErrorReport`].
pub fn adjusted(files: &[FileErrors]) -> ErrorReport {
    let mut pooled = Vec::new();
    let mut pooled_adj = Vec::new();
    let mut flagged = Vec::new();
    for f in files {
        pooled.extend_from_slice(&f.errors);
        pooled_adj.extend_from_slice(&f.adjusted);
        if f.adjusted.is_empty() {
            log::info!("{}: single boundary, nothing left after adjustment", f.source_id);
            flagged.push(f.source_id.clone());
        }
    }
    ErrorReport {
        mean_abs_err_s: mean(&pooled),
        median_abs_err_s: median(&pooled),
        adj_mean_abs_err_s: mean(&pooled_adj),
        adj_median_abs_err_s: median(&pooled_adj),
        file_count: files.len(),
        boundary_count: pooled.len(),
        no_adjusted_files: flagged,
        paired_files: files.iter().filter(|f| f.method == Method::Paired).count(),
        dtw_files: files.iter().filter(|f| f.method == Method::Dtw).count(),
        pooled_abs_err_s: pooled,
        pooled_adjusted_s: pooled_adj,
    }
}

/// Anything that knows how many segments its transcription has.
pub trait Segmented {
    fn source_id(&self) -> &str;
    fn segment_count(&self) -> usize;
}

/// A reference/hypothesis pair for one file.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalFile {
    pub reference: BoundarySeq,
    pub hypothesis: BoundarySeq,
}

impl Segmented for EvalFile {
    fn source_id(&self) -> &str {
        &self.reference.source_id
    }

    fn segment_count(&self) -> usize {
        self.hypothesis.len()
    }
}

/// Drops files whose transcription is a single segment: its only boundary
/// is the file end and says nothing about the acoustic model.
pub fn exclude_single_segment<T: Segmented>(files: Vec<T>) -> Vec<T> {
    files
        .into_iter()
        .filter(|f| {
            let keep = f.segment_count() != 1;
            if !keep {
                log::info!("{}: single segment, excluded from evaluation", f.source_id());
            }
            keep
        })
        .collect()
}

/// Single-segment exclusion, per-file method choice, pooling.
pub fn evaluate(files: Vec<EvalFile>, choice: MethodChoice) -> Result<ErrorReport, EvalError> {
    let files = exclude_single_segment(files);
    let per_file = files
        .iter()
        .map(|f| match choice {
            MethodChoice::Paired => FileErrors::paired(&f.reference, &f.hypothesis),
            MethodChoice::Dtw => Ok(FileErrors::dtw(&f.reference, &f.hypothesis)),
            MethodChoice::Auto if f.reference.len() == f.hypothesis.len() => {
                FileErrors::paired(&f.reference, &f.hypothesis)
            }
            MethodChoice::Auto => Ok(FileErrors::dtw(&f.reference, &f.hypothesis)),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(adjusted(&per_file))
}

/// Mean and median interval width in milliseconds.
#[derive(Debug, Clone, PartialEq)]
pub struct WidthReport {
    pub mean_ms: Option<f64>,
    pub median_ms: Option<f64>,
    pub boundary_count: usize,
}

pub fn ci_width_report(ensembles: &[EnsembleAlignment]) -> WidthReport {
    let widths: Vec<f64> = ensembles
        .iter()
        .filter_map(EnsembleAlignment::widths_s)
        .flatten()
        .map(|w| w * 1000.0)
        .collect();
    width_report_ms(&widths)
}

pub fn width_report_ms(widths_ms: &[f64]) -> WidthReport {
    WidthReport {
        mean_ms: mean(widths_ms),
        median_ms: median(widths_ms),
        boundary_count: widths_ms.len(),
    }
}

/// One row of the boundary-error table. Metric fields are milliseconds.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub data: String,
    pub transcription: String,
    pub method: String,
    pub mean_ms: Option<f64>,
    pub median_ms: Option<f64>,
    pub adj_mean_ms: Option<f64>,
    pub adj_median_ms: Option<f64>,
}

impl ErrorRow {
    pub fn from_report(data: &str, transcription: &str, method: &str, r: &ErrorReport) -> Self {
        let ms = |v: Option<f64>| v.map(|s| s * 1000.0);
        Self {
            data: data.into(),
            transcription: transcription.into(),
            method: method.into(),
            mean_ms: ms(r.mean_abs_err_s),
            median_ms: ms(r.median_abs_err_s),
            adj_mean_ms: ms(r.adj_mean_abs_err_s),
            adj_median_ms: ms(r.adj_median_abs_err_s),
        }
    }
}

/// One row of the interval-width table, in milliseconds.
#[derive(Debug, Clone, PartialEq)]
pub struct WidthRow {
    pub data: String,
    pub transcription: String,
    pub mean_ms: Option<f64>,
    pub median_ms: Option<f64>,
}

pub const ERROR_TABLE_HEADER: &str = "data,transcription,eval_method,mean_abs_err_ms,median_abs_err_ms,adj_mean_abs_err_ms,adj_median_abs_err_ms";
pub const WIDTH_TABLE_HEADER: &str = "data,transcription,mean_width_ms,median_width_ms";

fn ms2(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.2}")).unwrap_or_default()
}

pub fn error_table_csv(rows: &[ErrorRow]) -> String {
    let mut out = format!("{ERROR_TABLE_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.data,
            r.transcription,
            r.method,
            ms2(r.mean_ms),
            ms2(r.median_ms),
            ms2(r.adj_mean_ms),
            ms2(r.adj_median_ms)
        );
    }
    out
}

pub fn width_table_csv(rows: &[WidthRow]) -> String {
    let mut out = format!("{WIDTH_TABLE_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.data,
            r.transcription,
            ms2(r.mean_ms),
            ms2(r.median_ms)
        );
    }
    out
}
