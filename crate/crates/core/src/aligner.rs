//! Constrained dynamic-programming alignment.
//!
//! Given `n` frames of class log probabilities and a label sequence of length
//! `m`, find the frame labeling that collapses to the sequence (every label
//! used for at least one contiguous run of frames, in order, none skipped)
//! with the largest summed log probability. Boundary `j` is the end of the
//! last frame assigned label `j`.
//!
//! Among equally scoring optimal labelings the one with the latest
//! boundaries wins: a label keeps claiming frames until the next label is
//! strictly better. The set of optimal labelings is closed under taking the
//! frame-wise earlier position, so this winner is unique and is at the same
//! time the lexicographically latest boundary vector.
//!
//! Zero-probability cells ([`LOG_ZERO`]) are counted rather than added, and
//! a path with fewer of them always beats one with more. Without this, when
//! every path crosses a zero the finite part of the score is absorbed into
//! `-1e30` and the winner depends on rounding.

use std::fmt;

use thiserror::Error;

use crate::acoustic::{ClassInventory, LogProbMatrix, LOG_ZERO};

/// Largest number of assignments [`enumerate_paths`] will produce.
pub const ENUMERATION_LIMIT: u128 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlignError {
    #[error("label sequence is empty")]
    EmptySequence,
    #[error("labels {index} and {} are both {label:?}; mark repeats with distinct markers", index + 1)]
    AdjacentRepeat { index: usize, label: String },
    #[error("label {0:?} is not in the model inventory")]
    UnknownLabel(String),
    #[error("more labels than frames ({labels} labels, {frames} frames)")]
    Infeasible { frames: usize, labels: usize },
    #[error("enumeration of C({}, {}) paths exceeds the limit", frames.saturating_sub(1), labels.saturating_sub(1))]
    TooLarge { frames: usize, labels: usize },
}

/// One position of a label sequence. `marker` tells apart adjacent
/// positions that carry the same class label.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SegmentLabel {
    pub name: String,
    pub marker: u32,
}

impl fmt::Display for SegmentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Ordered labels `λ_1..λ_m` to align against.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabelSequence {
    labels: Vec<SegmentLabel>,
}

impl LabelSequence {
    /// Plain label sequence; adjacent repeats are rejected.
    pub fn new<I, S>(labels: I) -> Result<Self, AlignError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::from_segments(labels.into_iter().map(|l| SegmentLabel {
            name: l.into(),
            marker: 0,
        }))
    }

    /// Label sequence in which adjacent repeats get increasing markers, so
    /// `[a, a, b]` aligns as two distinct `a` positions.
    pub fn with_markers<I, S>(labels: I) -> Result<Self, AlignError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut out: Vec<SegmentLabel> = Vec::new();
        for l in labels {
            let name = l.into();
            let marker = match out.last() {
                Some(prev) if prev.name == name => prev.marker + 1,
                _ => 0,
            };
            out.push(SegmentLabel { name, marker });
        }
        Self::from_segments(out)
    }

    pub fn from_segments<I: IntoIterator<Item = SegmentLabel>>(segments: I) -> Result<Self, AlignError> {
        let labels: Vec<SegmentLabel> = segments.into_iter().collect();
        if labels.is_empty() {
            return Err(AlignError::EmptySequence);
        }
        if let Some(i) = labels.windows(2).position(|w| w[0] == w[1]) {
            return Err(AlignError::AdjacentRepeat {
                index: i,
                label: labels[i].name.clone(),
            });
        }
        Ok(Self { labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn segments(&self) -> &[SegmentLabel] {
        &self.labels
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.labels.iter().map(|l| l.name.as_str())
    }

    pub fn name(&self, j: usize) -> &str {
        &self.labels[j].name
    }

    /// Class index of every position.
    pub fn resolve(&self, inventory: &ClassInventory) -> Result<Vec<usize>, AlignError> {
        self.labels
            .iter()
            .map(|l| {
                inventory
                    .index_of(&l.name)
                    .ok_or_else(|| AlignError::UnknownLabel(l.name.clone()))
            })
            .collect()
    }
}

/// Per-segment end times for one file.
#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    pub labels: LabelSequence,
    /// 0-based index of the last frame of each label.
    pub end_frames: Vec<usize>,
    /// `(end_frames[j] + 1) * frame_advance_s`.
    pub end_times_s: Vec<f64>,
    pub total_log_prob: f64,
    pub frame_advance_s: f64,
    pub source_id: String,
}

impl Alignment {
    fn from_end_frames(
        labels: LabelSequence,
        end_frames: Vec<usize>,
        total_log_prob: f64,
        frame_advance_s: f64,
    ) -> Self {
        let end_times_s = end_frames
            .iter()
            .map(|&e| (e + 1) as f64 * frame_advance_s)
            .collect();
        Self {
            labels,
            end_frames,
            end_times_s,
            total_log_prob,
            frame_advance_s,
            source_id: String::new(),
        }
    }

    pub fn with_source(mut self, source_id: impl Into<String>) -> Self {
        self.source_id = source_id.into();
        self
    }

    /// Class position of every frame, expanded from the boundaries.
    pub fn frame_positions(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.end_frames.last().map_or(0, |e| e + 1));
        let mut start = 0;
        for (j, &end) in self.end_frames.iter().enumerate() {
            out.extend(std::iter::repeat_n(j, end + 1 - start));
            start = end + 1;
        }
        out
    }

    /// CSV with columns `source_id,index,label,end_time_s,end_frame` and a
    /// trailing `# total_log_prob=` line. Indices are 1-based.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("source_id,index,label,end_time_s,end_frame\n");
        for (j, (t, f)) in self.end_times_s.iter().zip(&self.end_frames).enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                csv_field(&self.source_id),
                j + 1,
                csv_field(self.labels.name(j)),
                crate::numfmt::sig(*t, 16),
                f
            ));
        }
        out.push_str(&format!("# total_log_prob={:?}\n", self.total_log_prob));
        out
    }
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Path score: zero-probability frames crossed, then the sum over the rest.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Score {
    zeros: u32,
    sum: f64,
}

impl Score {
    const UNREACHABLE: Score = Score {
        zeros: u32::MAX,
        sum: f64::NEG_INFINITY,
    };

    fn start(v: f64) -> Score {
        if v <= LOG_ZERO {
            Score { zeros: 1, sum: 0.0 }
        } else {
            Score { zeros: 0, sum: v }
        }
    }

    fn add(self, v: f64) -> Score {
        if v <= LOG_ZERO {
            Score {
                zeros: self.zeros.saturating_add(1),
                ..self
            }
        } else {
            Score {
                sum: self.sum + v,
                ..self
            }
        }
    }

    fn at_least(self, other: Score) -> bool {
        self.zeros < other.zeros || (self.zeros == other.zeros && self.sum >= other.sum)
    }

    fn log_prob(self) -> f64 {
        if self.zeros == 0 {
            self.sum
        } else {
            self.sum + self.zeros as f64 * LOG_ZERO
        }
    }
}

fn check(p: &LogProbMatrix, l: &LabelSequence) -> Result<Vec<usize>, AlignError> {
    if l.is_empty() {
        return Err(AlignError::EmptySequence);
    }
    let classes = l.resolve(p.inventory())?;
    if p.n_frames() < l.len() {
        return Err(AlignError::Infeasible {
            frames: p.n_frames(),
            labels: l.len(),
        });
    }
    Ok(classes)
}

/// Maximum-probability collapsing labeling of `p` onto `l`.
///
/// Full `n × m` score and backpointer tables; the backtrace prefers the
/// predecessor that lets the earlier label keep the frame whenever both
/// predecessors score equally.
pub fn align(p: &LogProbMatrix, l: &LabelSequence) -> Result<Alignment, AlignError> {
    let classes = check(p, l)?;
    let (n, m) = (p.n_frames(), l.len());
    let mut score = vec![Score::UNREACHABLE; n * m];
    // true: came from the previous label at the previous frame
    let mut advanced = vec![false; n * m];

    score[0] = Score::start(p.get(0, classes[0]));
    for t in 1..n {
        // label j is reachable at frame t only if j <= t and m-1-j <= n-1-t
        let lo = (m - 1).saturating_sub(n - 1 - t);
        let hi = t.min(m - 1);
        for j in lo..=hi {
            let stay = score[(t - 1) * m + j];
            let adv = if j > 0 {
                score[(t - 1) * m + j - 1]
            } else {
                Score::UNREACHABLE
            };
            let (best, from_prev) = if adv.at_least(stay) { (adv, true) } else { (stay, false) };
            score[t * m + j] = best.add(p.get(t, classes[j]));
            advanced[t * m + j] = from_prev;
        }
    }

    let mut end_frames = vec![0usize; m];
    end_frames[m - 1] = n - 1;
    let mut j = m - 1;
    for t in (1..n).rev() {
        if advanced[t * m + j] {
            j -= 1;
            end_frames[j] = t - 1;
        }
    }
    debug_assert_eq!(j, 0);
    Ok(Alignment::from_end_frames(
        l.clone(),
        end_frames,
        score[(n - 1) * m + m - 1].log_prob(),
        p.frame_advance_s(),
    ))
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
        if acc > ENUMERATION_LIMIT * 1_000_000 {
            return u128::MAX;
        }
    }
    acc
}

/// Number of collapsing labelings of `n` frames onto `m` labels.
pub fn path_count(n: usize, m: usize) -> u128 {
    if m == 0 || n < m {
        return 0;
    }
    binomial((n - 1) as u128, (m - 1) as u128)
}

/// Every collapsing labeling of `n` frames onto `m` labels, as vectors of
/// 0-based end frames, in lexicographic order.
pub fn enumerate_paths(n: usize, m: usize) -> Result<Vec<Vec<usize>>, AlignError> {
    if m == 0 {
        return Err(AlignError::EmptySequence);
    }
    if n < m {
        return Err(AlignError::Infeasible {
            frames: n,
            labels: m,
        });
    }
    if path_count(n, m) > ENUMERATION_LIMIT {
        return Err(AlignError::TooLarge {
            frames: n,
            labels: m,
        });
    }
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(m);
    fn rec(n: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let j = cur.len();
        if j == m - 1 {
            cur.push(n - 1);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        let first = cur.last().map_or(0, |&e| e + 1);
        // leave one frame for each remaining label
        let last = n - (m - j);
        for e in first..=last {
            cur.push(e);
            rec(n, m, cur, out);
            cur.pop();
        }
    }
    rec(n, m, &mut cur, &mut out);
    Ok(out)
}

/// Exhaustive reference for [`align`]: scores every labeling from
/// [`enumerate_paths`] (summing frames in time order) and keeps the best,
/// preferring the lexicographically later boundary vector on ties.
pub fn align_oracle(p: &LogProbMatrix, l: &LabelSequence) -> Result<Alignment, AlignError> {
    let classes = check(p, l)?;
    let mut best: Option<(Score, Vec<usize>)> = None;
    for ends in enumerate_paths(p.n_frames(), l.len())? {
        let mut total = Score::UNREACHABLE;
        let mut j = 0;
        for t in 0..p.n_frames() {
            let v = p.get(t, classes[j]);
            total = if t == 0 { Score::start(v) } else { total.add(v) };
            if t == ends[j] && j + 1 < ends.len() {
                j += 1;
            }
        }
        let better = match &best {
            None => true,
            Some((s, e)) => {
                (total.at_least(*s) && total != *s) || (total == *s && ends > *e)
            }
        };
        if better {
            best = Some((total, ends));
        }
    }
    let (total, ends) = best.expect("at least one path");
    Ok(Alignment::from_end_frames(
        l.clone(),
        ends,
        total.log_prob(),
        p.frame_advance_s(),
    ))
}
