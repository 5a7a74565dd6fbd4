//! Frame-level acoustic models.
//!
//! Everything downstream of this module consumes a [`LogProbMatrix`]: one row
//! of natural-log class probabilities per analysis frame. Any producer that
//! satisfies that contract can drive the aligner. Two producers ship here: a
//! loader for pre-computed probability matrices, and [`FrameClassifier`], a
//! multinomial log-linear model over standardized feature rows that is small
//! enough to train ensembles of at desk scale.

use std::collections::HashMap;
use std::fmt::Write as _;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use thiserror::Error;

use crate::features::FeatureMatrix;
use crate::numfmt;

/// Stand-in for `ln 0`; keeps path sums finite and comparable.
pub const LOG_ZERO: f64 = -1e30;

/// Row-normalization tolerance for validated log-probability matrices.
pub const ROW_SUM_TOLERANCE: f64 = 1e-6;

/// Largest row-sum deviation a loaded matrix may have before renormalizing.
pub const LOAD_RENORMALIZE_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AcousticError {
    #[error("class inventory is empty")]
    EmptyInventory,
    #[error("duplicate class label {0:?}")]
    DuplicateClass(String),
    #[error("class label {0:?} is empty or contains whitespace")]
    BadClassName(String),
    #[error("degenerate inventory: {0} class(es), need at least 2")]
    DegenerateInventory(usize),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("class names do not match inventory: expected {expected:?}, found {found:?}")]
    ClassMismatch {
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("frame {frame}: non-finite or invalid value")]
    NonFinite { frame: usize },
    #[error("frame {frame}: row sums to {sum} (deviation beyond {tolerance})")]
    RowSum {
        frame: usize,
        sum: f64,
        tolerance: f64,
    },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("no frames")]
    NoFrames,
    #[error("frame label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("class {0:?} has no training examples")]
    EmptyClass(String),
    #[error("loss became non-finite at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("ensemble member {member}: {source}")]
    Member {
        member: usize,
        #[source]
        source: Box<AcousticError>,
    },
    #[error("ensemble needs at least one member")]
    EmptyEnsemble,
}

/// Ordered, unique segment-class names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassInventory {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl ClassInventory {
    pub fn new<I, S>(labels: I) -> Result<Self, AcousticError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(AcousticError::EmptyInventory);
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if l.is_empty() || l.chars().any(char::is_whitespace) {
                return Err(AcousticError::BadClassName(l.clone()));
            }
            if index.insert(l.clone(), i).is_some() {
                return Err(AcousticError::DuplicateClass(l.clone()));
            }
        }
        Ok(Self { labels, index })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }
}

/// `n` frames by `k` classes of natural-log probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct LogProbMatrix {
    values: Array2<f64>,
    inventory: ClassInventory,
    frame_advance_s: f64,
}

impl LogProbMatrix {
    /// Wraps log probabilities, mapping `-inf` to [`LOG_ZERO`] and checking
    /// that every row is a distribution.
    pub fn from_log_probs(
        values: Array2<f64>,
        inventory: ClassInventory,
        frame_advance_s: f64,
    ) -> Result<Self, AcousticError> {
        Self::build(values, inventory, frame_advance_s, true)
    }

    /// Wraps per-frame log scores that need not normalize, such as scaled
    /// likelihoods. Entries must be finite or `-inf` (read as [`LOG_ZERO`]).
    pub fn from_log_scores(
        values: Array2<f64>,
        inventory: ClassInventory,
        frame_advance_s: f64,
    ) -> Result<Self, AcousticError> {
        Self::build(values, inventory, frame_advance_s, false)
    }

    fn build(
        mut values: Array2<f64>,
        inventory: ClassInventory,
        frame_advance_s: f64,
        normalized: bool,
    ) -> Result<Self, AcousticError> {
        if values.ncols() != inventory.len() {
            return Err(AcousticError::Dimension {
                expected: inventory.len(),
                found: values.ncols(),
            });
        }
        if !(frame_advance_s > 0.0 && frame_advance_s.is_finite()) {
            return Err(AcousticError::Parse {
                line: 0,
                msg: format!("frame advance must be positive, got {frame_advance_s}"),
            });
        }
        for (frame, mut row) in values.axis_iter_mut(Axis(0)).enumerate() {
            for v in row.iter_mut() {
                if *v == f64::NEG_INFINITY || (*v < LOG_ZERO && v.is_finite()) {
                    *v = LOG_ZERO;
                }
                if !v.is_finite() || (normalized && *v > 1e-9) {
                    return Err(AcousticError::NonFinite { frame });
                }
            }
            if !normalized {
                continue;
            }
            let sum: f64 = row.iter().map(|v| v.exp()).sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(AcousticError::RowSum {
                    frame,
                    sum,
                    tolerance: ROW_SUM_TOLERANCE,
                });
            }
        }
        Ok(Self {
            values,
            inventory,
            frame_advance_s,
        })
    }

    /// Builds a matrix from linear-domain probabilities. Rows within
    /// [`LOAD_RENORMALIZE_TOLERANCE`] of summing to one are renormalized.
    pub fn from_probabilities(
        probs: Array2<f64>,
        inventory: ClassInventory,
        frame_advance_s: f64,
    ) -> Result<Self, AcousticError> {
        if probs.ncols() != inventory.len() {
            return Err(AcousticError::Dimension {
                expected: inventory.len(),
                found: probs.ncols(),
            });
        }
        let mut logs = Array2::zeros(probs.raw_dim());
        for (frame, row) in probs.axis_iter(Axis(0)).enumerate() {
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(AcousticError::NonFinite { frame });
            }
            let sum: f64 = row.sum();
            if (sum - 1.0).abs() > LOAD_RENORMALIZE_TOLERANCE {
                return Err(AcousticError::RowSum {
                    frame,
                    sum,
                    tolerance: LOAD_RENORMALIZE_TOLERANCE,
                });
            }
            for (c, p) in row.iter().enumerate() {
                let q = p / sum;
                logs[[frame, c]] = if q > 0.0 { q.ln() } else { LOG_ZERO };
            }
        }
        Self::from_log_probs(logs, inventory, frame_advance_s)
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn inventory(&self) -> &ClassInventory {
        &self.inventory
    }

    pub fn frame_advance_s(&self) -> f64 {
        self.frame_advance_s
    }

    pub fn n_frames(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_classes(&self) -> usize {
        self.values.ncols()
    }

    #[inline]
    pub fn get(&self, frame: usize, class: usize) -> f64 {
        self.values[[frame, class]]
    }

    /// Serializes in the linear-domain text format read by [`load_prob_matrix`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} {} {}",
            self.n_frames(),
            self.n_classes(),
            numfmt::sig(self.frame_advance_s, 16)
        );
        let _ = writeln!(out, "{}", self.inventory.labels().join(" "));
        for row in self.values.axis_iter(Axis(0)) {
            let line: Vec<String> = row
                .iter()
                .map(|v| {
                    if *v <= LOG_ZERO {
                        "0".to_string()
                    } else {
                        numfmt::sig(v.exp(), 9)
                    }
                })
                .collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }
}

/// Parses a probability-matrix file: `n k frame_advance_s`, then the class
/// names, then `n` rows of `k` linear probabilities.
///
/// With `expected = None` the inventory is taken from the file.
pub fn parse_prob_matrix(
    text: &str,
    expected: Option<&ClassInventory>,
) -> Result<LogProbMatrix, AcousticError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let parse_err = |line: usize, msg: String| AcousticError::Parse { line, msg };

    let (hline, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing header".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(parse_err(hline, "header must be `n k frame_advance_s`".into()));
    }
    let n: usize = fields[0]
        .parse()
        .map_err(|_| parse_err(hline, format!("bad frame count {:?}", fields[0])))?;
    let k: usize = fields[1]
        .parse()
        .map_err(|_| parse_err(hline, format!("bad class count {:?}", fields[1])))?;
    let advance: f64 = fields[2]
        .parse()
        .map_err(|_| parse_err(hline, format!("bad frame advance {:?}", fields[2])))?;

    let (nline, names) = lines
        .next()
        .ok_or_else(|| parse_err(hline + 1, "missing class names".into()))?;
    let names: Vec<String> = names.split_whitespace().map(str::to_string).collect();
    if names.len() != k {
        return Err(parse_err(
            nline,
            format!("declared {k} classes, found {} names", names.len()),
        ));
    }
    let inventory = match expected {
        Some(inv) => {
            if inv.labels() != names.as_slice() {
                return Err(AcousticError::ClassMismatch {
                    expected: inv.labels().to_vec(),
                    found: names,
                });
            }
            inv.clone()
        }
        None => ClassInventory::new(names)?,
    };

    let mut probs = Array2::zeros((n, k));
    let mut last_line = nline;
    for frame in 0..n {
        let (lno, row) = lines.next().ok_or_else(|| {
            parse_err(last_line + 1, format!("expected {n} rows, found {frame}"))
        })?;
        last_line = lno;
        let vals: Vec<&str> = row.split_whitespace().collect();
        if vals.len() != k {
            return Err(parse_err(lno, format!("expected {k} values, found {}", vals.len())));
        }
        for (c, v) in vals.iter().enumerate() {
            let p: f64 = v
                .parse()
                .map_err(|_| parse_err(lno, format!("bad probability {v:?}")))?;
            probs[[frame, c]] = p;
        }
    }
    if let Some((lno, _)) = lines.next() {
        return Err(parse_err(lno, format!("trailing data after {n} rows")));
    }
    LogProbMatrix::from_probabilities(probs, inventory, advance)
}

/// Loads a probability-matrix file whose class names must match `inventory`.
pub fn load_prob_matrix(
    text: &str,
    inventory: &ClassInventory,
) -> Result<LogProbMatrix, AcousticError> {
    parse_prob_matrix(text, Some(inventory))
}

/// Anything that turns a feature matrix into per-frame class log probabilities.
pub trait AcousticModel: Send + Sync {
    fn inventory(&self) -> &ClassInventory;
    fn score(&self, features: &FeatureMatrix) -> Result<LogProbMatrix, AcousticError>;
}

/// Multinomial log-linear frame classifier.
///
/// Features are standardized with per-dimension statistics fixed at training
/// time; `weights` is `(dim + 1) × k` with the bias in the last row.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameClassifier {
    inventory: ClassInventory,
    feature_mean: Array1<f64>,
    feature_scale: Array1<f64>,
    weights: Array2<f64>,
    seed: u64,
}

const CLASSIFIER_MAGIC: &str = "ensalign-frame-classifier";
const CLASSIFIER_VERSION: u32 = 1;

impl FrameClassifier {
    /// Builds a classifier with identity standardization.
    pub fn from_weights(
        inventory: ClassInventory,
        weights: Array2<f64>,
    ) -> Result<Self, AcousticError> {
        let dim = weights.nrows().saturating_sub(1);
        Self::with_standardization(
            inventory,
            Array1::zeros(dim),
            Array1::ones(dim),
            weights,
            0,
        )
    }

    pub fn with_standardization(
        inventory: ClassInventory,
        feature_mean: Array1<f64>,
        feature_scale: Array1<f64>,
        weights: Array2<f64>,
        seed: u64,
    ) -> Result<Self, AcousticError> {
        if weights.ncols() != inventory.len() {
            return Err(AcousticError::Dimension {
                expected: inventory.len(),
                found: weights.ncols(),
            });
        }
        let dim = weights.nrows().saturating_sub(1);
        if weights.nrows() == 0 || feature_mean.len() != dim || feature_scale.len() != dim {
            return Err(AcousticError::Dimension {
                expected: dim,
                found: feature_mean.len(),
            });
        }
        Ok(Self {
            inventory,
            feature_mean,
            feature_scale,
            weights,
            seed,
        })
    }

    pub fn dim(&self) -> usize {
        self.weights.nrows() - 1
    }

    pub fn weights(&self) -> ArrayView2<'_, f64> {
        self.weights.view()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn standardize(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        (&x - &self.feature_mean.view().insert_axis(Axis(0)))
            / &self.feature_scale.view().insert_axis(Axis(0))
    }

    /// Log-softmax of the affine transform of every frame.
    pub fn score_frames(&self, features: &FeatureMatrix) -> Result<LogProbMatrix, AcousticError> {
        let x = features.values();
        if x.ncols() != self.dim() {
            return Err(AcousticError::Dimension {
                expected: self.dim(),
                found: x.ncols(),
            });
        }
        let z = logits(&self.weights, self.standardize(x).view());
        LogProbMatrix::from_log_probs(
            log_softmax_rows(z),
            self.inventory.clone(),
            features.frame_advance_s(),
        )
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{CLASSIFIER_MAGIC} v{CLASSIFIER_VERSION}");
        let _ = writeln!(out, "seed {}", self.seed);
        let _ = writeln!(out, "dim {}", self.dim());
        let _ = writeln!(out, "classes {}", self.inventory.labels().join(" "));
        let join = |v: ArrayView1<'_, f64>| {
            v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ")
        };
        let _ = writeln!(out, "mean {}", join(self.feature_mean.view()));
        let _ = writeln!(out, "scale {}", join(self.feature_scale.view()));
        let _ = writeln!(out, "weights {}", self.weights.nrows());
        for row in self.weights.axis_iter(Axis(0)) {
            let _ = writeln!(out, "{}", join(row));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, AcousticError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let err = |line: usize, msg: &str| AcousticError::Parse {
            line,
            msg: msg.to_string(),
        };
        let mut keyed = |key: &str| -> Result<(usize, String), AcousticError> {
            let (lno, line) = lines.next().ok_or_else(|| err(0, "unexpected end of file"))?;
            let rest = line
                .strip_prefix(key)
                .ok_or_else(|| err(lno, &format!("expected `{key}`")))?;
            Ok((lno, rest.trim().to_string()))
        };
        let (lno, version) = keyed(CLASSIFIER_MAGIC)?;
        if version != format!("v{CLASSIFIER_VERSION}") {
            return Err(err(lno, &format!("unsupported version {version:?}")));
        }
        let floats = |lno: usize, s: &str| -> Result<Vec<f64>, AcousticError> {
            s.split_whitespace()
                .map(|v| v.parse::<f64>().map_err(|_| err(lno, &format!("bad number {v:?}"))))
                .collect()
        };
        let (lno, seed) = keyed("seed")?;
        let seed: u64 = seed.parse().map_err(|_| err(lno, "bad seed"))?;
        let (lno, dim) = keyed("dim")?;
        let dim: usize = dim.parse().map_err(|_| err(lno, "bad dim"))?;
        let (_, classes) = keyed("classes")?;
        let inventory = ClassInventory::new(classes.split_whitespace())?;
        let (lno, mean) = keyed("mean")?;
        let mean = floats(lno, &mean)?;
        let (lno, scale) = keyed("scale")?;
        let scale = floats(lno, &scale)?;
        let (lno, rows) = keyed("weights")?;
        let rows: usize = rows.parse().map_err(|_| err(lno, "bad row count"))?;
        if rows != dim + 1 || mean.len() != dim || scale.len() != dim {
            return Err(err(lno, "weight shape does not match dim"));
        }
        let k = inventory.len();
        let mut weights = Array2::zeros((rows, k));
        for r in 0..rows {
            let (lno, line) = keyed("")?;
            let vals = floats(lno, &line)?;
            if vals.len() != k {
                return Err(err(lno, &format!("expected {k} weights")));
            }
            for (c, v) in vals.into_iter().enumerate() {
                weights[[r, c]] = v;
            }
        }
        Self::with_standardization(inventory, mean.into(), scale.into(), weights, seed)
    }
}

impl AcousticModel for FrameClassifier {
    fn inventory(&self) -> &ClassInventory {
        &self.inventory
    }

    fn score(&self, features: &FeatureMatrix) -> Result<LogProbMatrix, AcousticError> {
        self.score_frames(features)
    }
}

fn logits(weights: &Array2<f64>, x: ArrayView2<'_, f64>) -> Array2<f64> {
    let dim = weights.nrows() - 1;
    let w = weights.slice(ndarray::s![..dim, ..]);
    let bias = weights.row(dim);
    x.dot(&w) + bias.insert_axis(Axis(0))
}

fn log_softmax_rows(mut z: Array2<f64>) -> Array2<f64> {
    for mut row in z.axis_iter_mut(Axis(0)) {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        row.mapv_inplace(|v| v - lse);
    }
    z
}

/// Feature rows with integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFrames {
    pub features: Array2<f64>,
    pub labels: Vec<usize>,
}

impl LabeledFrames {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// L2 penalty on the non-bias weights.
    pub l2: f64,
    /// Standard deviation of the initial weights.
    pub init_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            learning_rate: 0.1,
            batch_size: 32,
            l2: 1e-4,
            init_scale: 0.01,
        }
    }
}

/// Mean cross-entropy of a log-linear model (plus the L2 term) and its
/// gradient with respect to `weights`.
///
/// `x` is assumed already standardized.
pub fn loss_and_gradient(
    weights: &Array2<f64>,
    x: ArrayView2<'_, f64>,
    labels: &[usize],
    l2: f64,
) -> (f64, Array2<f64>) {
    let n = labels.len().max(1) as f64;
    let dim = weights.nrows() - 1;
    let logp = log_softmax_rows(logits(weights, x));
    let mut loss = 0.0;
    // softmax minus one-hot
    let mut resid = logp.mapv(f64::exp);
    for (i, &y) in labels.iter().enumerate() {
        loss -= logp[[i, y]];
        resid[[i, y]] -= 1.0;
    }
    loss /= n;
    let mut grad = Array2::zeros(weights.raw_dim());
    grad.slice_mut(ndarray::s![..dim, ..])
        .assign(&(x.t().dot(&resid) / n));
    grad.row_mut(dim).assign(&(resid.sum_axis(Axis(0)) / n));
    if l2 > 0.0 {
        let w = weights.slice(ndarray::s![..dim, ..]);
        loss += 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>();
        let mut g = grad.slice_mut(ndarray::s![..dim, ..]);
        g.scaled_add(l2, &w);
    }
    (loss, grad)
}

/// Trains a [`FrameClassifier`] by mini-batch gradient descent on cross-entropy.
///
/// Initialization and the per-epoch shuffle both draw from `seed`, so equal
/// seeds give bit-identical weights.
pub fn train_classifier(
    data: &LabeledFrames,
    inventory: &ClassInventory,
    config: &TrainConfig,
    seed: u64,
) -> Result<FrameClassifier, AcousticError> {
    let k = inventory.len();
    if k < 2 {
        return Err(AcousticError::DegenerateInventory(k));
    }
    if data.is_empty() {
        return Err(AcousticError::NoFrames);
    }
    if data.features.nrows() != data.len() {
        return Err(AcousticError::Dimension {
            expected: data.len(),
            found: data.features.nrows(),
        });
    }
    let mut counts = vec![0usize; k];
    for &y in &data.labels {
        if y >= k {
            return Err(AcousticError::LabelOutOfRange { label: y, classes: k });
        }
        counts[y] += 1;
    }
    if let Some(c) = counts.iter().position(|&c| c == 0) {
        return Err(AcousticError::EmptyClass(inventory.label(c).to_string()));
    }

    let dim = data.features.ncols();
    let mean = data.features.mean_axis(Axis(0)).expect("non-empty");
    let scale = data
        .features
        .std_axis(Axis(0), 0.0)
        .mapv(|s| if s > 1e-8 { s } else { 1.0 });
    let x = (&data.features - &mean.view().insert_axis(Axis(0)))
        / &scale.view().insert_axis(Axis(0));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init = Normal::new(0.0, config.init_scale.max(0.0))
        .unwrap_or_else(|_| Normal::new(0.0, 0.0).expect("zero-variance normal"));
    let mut weights = Array2::from_shape_fn((dim + 1, k), |_| init.sample(&mut rng));

    let mut order: Vec<usize> = (0..data.len()).collect();
    let batch = config.batch_size.max(1);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(batch) {
            let xb = x.select(Axis(0), chunk);
            let yb: Vec<usize> = chunk.iter().map(|&i| data.labels[i]).collect();
            let (loss, grad) = loss_and_gradient(&weights, xb.view(), &yb, config.l2);
            if !loss.is_finite() {
                return Err(AcousticError::NonFiniteLoss { epoch });
            }
            weights.scaled_add(-config.learning_rate, &grad);
            epoch_loss += loss;
            batches += 1;
        }
        log::trace!("seed {seed} epoch {epoch}: loss {}", epoch_loss / batches as f64);
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(AcousticError::NonFiniteLoss { epoch });
        }
    }
    FrameClassifier::with_standardization(inventory.clone(), mean, scale, weights, seed)
}

/// Trains one classifier per seed. Members are independent and trained in
/// parallel; the result is in seed order.
pub fn make_ensemble(
    data: &LabeledFrames,
    inventory: &ClassInventory,
    config: &TrainConfig,
    seeds: &[u64],
) -> Result<Vec<FrameClassifier>, AcousticError> {
    if seeds.is_empty() {
        return Err(AcousticError::EmptyEnsemble);
    }
    seeds
        .par_iter()
        .enumerate()
        .map(|(member, &seed)| {
            train_classifier(data, inventory, config, seed).map_err(|e| AcousticError::Member {
                member,
                source: Box::new(e),
            })
        })
        .collect()
}
