//! Ensemble aggregation: median boundaries with order-statistic confidence
//! intervals.
//!
//! For `E` member estimates of a boundary, sorted as `X_(1) ≤ … ≤ X_(E)`, the
//! interval `[X_(r), X_(E+1−r)]` covers the population median with
//! probability `1 − 2·P(Bin(E, ½) ≤ r − 1)` for continuous i.i.d. draws. With
//! `E = 10` and `r = 2` that is `1 − 22/1024 = 0.978515625`.

use thiserror::Error;

use crate::aligner::{csv_field, Alignment, LabelSequence};
use crate::numfmt;

pub const DEFAULT_RANK: usize = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnsembleError {
    #[error("no ensemble members")]
    Empty,
    #[error("member {member} disagrees with member 0 on the label sequence")]
    Mismatch { member: usize },
    #[error("rank {rank} infeasible for {members} members (need 1 <= rank <= members/2)")]
    InfeasibleRank { members: usize, rank: usize },
    #[error("{corruptions} corruptions exceed the breakdown limit for {members} members")]
    TooManyCorruptions { members: usize, corruptions: usize },
    #[error("replacement index {index} out of range for {members} members")]
    BadIndex { members: usize, index: usize },
}

/// Member estimates for one boundary, in member order.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySample {
    /// 1-based boundary index.
    pub boundary_index: usize,
    pub estimates_s: Vec<f64>,
}

impl BoundarySample {
    pub fn sorted(&self) -> Vec<f64> {
        let mut v = self.estimates_s.clone();
        v.sort_by(f64::total_cmp);
        v
    }
}

/// Aggregated boundaries for one file.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleAlignment {
    pub labels: LabelSequence,
    pub samples: Vec<BoundarySample>,
    pub median_s: Vec<f64>,
    /// `None` when the ensemble is too small for the requested rank.
    pub ci: Option<ConfidenceIntervals>,
    pub source_id: String,
    pub frame_advance_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceIntervals {
    pub rank: usize,
    pub lo_s: Vec<f64>,
    pub hi_s: Vec<f64>,
    /// Nominal coverage of the population median.
    pub coverage: f64,
}

impl EnsembleAlignment {
    pub fn members(&self) -> usize {
        self.samples.first().map_or(0, |s| s.estimates_s.len())
    }

    /// Interval widths, when intervals exist.
    pub fn widths_s(&self) -> Option<Vec<f64>> {
        self.ci
            .as_ref()
            .map(|ci| ci.hi_s.iter().zip(&ci.lo_s).map(|(h, l)| h - l).collect())
    }

    /// 1-based indices `j` with `median[j] <= median[j-1]`.
    pub fn monotonicity_violations(&self) -> Vec<usize> {
        self.median_s
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[1] <= w[0])
            .map(|(i, _)| i + 2)
            .collect()
    }

    /// CSV with columns
    /// `source_id,boundary_index,label,median_s,ci_lo_s,ci_hi_s,width_s`;
    /// interval columns are empty when intervals were suppressed.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CI_TABLE_HEADER);
        out.push('\n');
        self.write_csv_rows(&mut out);
        out
    }

    pub fn write_csv_rows(&self, out: &mut String) {
        for (j, m) in self.median_s.iter().enumerate() {
            let (lo, hi, w) = match &self.ci {
                Some(ci) => (
                    numfmt::sig(ci.lo_s[j], 16),
                    numfmt::sig(ci.hi_s[j], 16),
                    numfmt::sig(ci.hi_s[j] - ci.lo_s[j], 15),
                ),
                None => Default::default(),
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                csv_field(&self.source_id),
                j + 1,
                csv_field(self.labels.name(j)),
                numfmt::sig(*m, 16),
                lo,
                hi,
                w
            ));
        }
    }
}

pub const CI_TABLE_HEADER: &str = "source_id,boundary_index,label,median_s,ci_lo_s,ci_hi_s,width_s";

/// Median of an unsorted slice; mean of the two central values for even
/// lengths.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(median_sorted(&v))
}

fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Exact coverage of `[X_(r), X_(E+1−r)]` for the median of a continuous
/// distribution.
pub fn coverage_of(members: usize, rank: usize) -> Result<f64, EnsembleError> {
    if rank == 0 || 2 * rank > members {
        return Err(EnsembleError::InfeasibleRank { members, rank });
    }
    if members <= 120 {
        let e = members as u32;
        let mut c: u128 = 1;
        let mut tail: u128 = 0;
        for i in 0..rank as u128 {
            tail += c;
            c = c * (e as u128 - i) / (i + 1);
        }
        let denom = 2f64.powi(e as i32);
        return Ok(1.0 - 2.0 * tail as f64 / denom);
    }
    // log-space for large ensembles
    let ln_half = -(members as f64) * std::f64::consts::LN_2;
    let mut ln_c = 0.0;
    let mut tail = 0.0;
    for i in 0..rank {
        tail += (ln_c + ln_half).exp();
        ln_c += ((members - i) as f64).ln() - ((i + 1) as f64).ln();
    }
    Ok(1.0 - 2.0 * tail)
}

/// Combines per-member alignments of one file into median boundaries and
/// rank-`rank` order-statistic intervals.
///
/// An ensemble smaller than `2 * rank` still gets medians; its intervals are
/// suppressed with a warning.
pub fn aggregate(alignments: &[Alignment], rank: usize) -> Result<EnsembleAlignment, EnsembleError> {
    let first = alignments.first().ok_or(EnsembleError::Empty)?;
    if rank == 0 {
        return Err(EnsembleError::InfeasibleRank {
            members: alignments.len(),
            rank,
        });
    }
    for (member, a) in alignments.iter().enumerate().skip(1) {
        if a.labels != first.labels || a.end_times_s.len() != first.end_times_s.len() {
            return Err(EnsembleError::Mismatch { member });
        }
    }
    let e = alignments.len();
    let m = first.labels.len();
    let mut samples = Vec::with_capacity(m);
    let mut medians = Vec::with_capacity(m);
    let feasible = 2 * rank <= e;
    let (mut lo, mut hi) = (Vec::new(), Vec::new());
    for j in 0..m {
        let sample = BoundarySample {
            boundary_index: j + 1,
            estimates_s: alignments.iter().map(|a| a.end_times_s[j]).collect(),
        };
        let sorted = sample.sorted();
        medians.push(median_sorted(&sorted));
        if feasible {
            lo.push(sorted[rank - 1]);
            hi.push(sorted[e - rank]);
        }
        samples.push(sample);
    }
    let ci = if feasible {
        Some(ConfidenceIntervals {
            rank,
            lo_s: lo,
            hi_s: hi,
            coverage: coverage_of(e, rank)?,
        })
    } else {
        log::warn!(
            "{}: {e} member(s) cannot support rank {rank}; confidence intervals suppressed",
            first.source_id
        );
        None
    };
    let out = EnsembleAlignment {
        labels: first.labels.clone(),
        samples,
        median_s: medians,
        ci,
        source_id: first.source_id.clone(),
        frame_advance_s: first.frame_advance_s,
    };
    let bad = out.monotonicity_violations();
    if !bad.is_empty() {
        log::warn!(
            "{}: median boundaries not increasing at {:?}",
            out.source_id,
            bad
        );
    }
    Ok(out)
}

/// Outcome of replacing some member estimates with arbitrary values.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessReport {
    pub corruptions: usize,
    pub clean_median: f64,
    pub corrupted_median: f64,
    pub clean_mean: f64,
    pub corrupted_mean: f64,
    /// `[X_(⌈E/2⌉−c), X_(⌊E/2⌋+1+c)]` of the clean sample.
    pub order_bound: (f64, f64),
    /// The same argument applied to each central order statistic: the
    /// median computed with every central rank shifted by `c` down or up.
    pub tight_bound: (f64, f64),
}

impl RobustnessReport {
    pub fn within_order_bound(&self) -> bool {
        self.order_bound.0 <= self.corrupted_median && self.corrupted_median <= self.order_bound.1
    }

    pub fn within_tight_bound(&self) -> bool {
        self.tight_bound.0 <= self.corrupted_median && self.corrupted_median <= self.tight_bound.1
    }

    pub fn median_shift(&self) -> f64 {
        (self.corrupted_median - self.clean_median).abs()
    }

    pub fn mean_shift(&self) -> f64 {
        (self.corrupted_mean - self.clean_mean).abs()
    }
}

/// Replaces the estimates at the given member indices and reports how far
/// the median (and, for contrast, the mean) moved.
pub fn robustness_check(
    sample: &BoundarySample,
    replacements: &[(usize, f64)],
) -> Result<RobustnessReport, EnsembleError> {
    let e = sample.estimates_s.len();
    if e == 0 {
        return Err(EnsembleError::Empty);
    }
    let mut corrupted = sample.estimates_s.clone();
    let mut touched = std::collections::BTreeSet::new();
    for &(i, v) in replacements {
        if i >= e {
            return Err(EnsembleError::BadIndex { members: e, index: i });
        }
        corrupted[i] = v;
        touched.insert(i);
    }
    let c = touched.len();
    if c > (e - 1) / 2 {
        return Err(EnsembleError::TooManyCorruptions {
            members: e,
            corruptions: c,
        });
    }
    let clean = sample.sorted();
    // 1-based order statistic
    let x = |r: usize| clean[r - 1];
    let order_bound = (x(e.div_ceil(2) - c), x(e / 2 + 1 + c));
    let tight_bound = if e % 2 == 1 {
        let k = e.div_ceil(2);
        (x(k - c), x(k + c))
    } else {
        let k = e / 2;
        ((x(k - c) + x(k + 1 - c)) / 2.0, (x(k + c) + x(k + 1 + c)) / 2.0)
    };
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(RobustnessReport {
        corruptions: c,
        clean_median: median_sorted(&clean),
        corrupted_median: median(&corrupted).expect("non-empty"),
        clean_mean: mean(&sample.estimates_s),
        corrupted_mean: mean(&corrupted),
        order_bound,
        tight_bound,
    })
}
