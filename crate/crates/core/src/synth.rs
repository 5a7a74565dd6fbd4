//! Synthetic utterances with known segment boundaries.
//!
//! Each segment class is a fixed timbre (a harmonic tone or a band of noise).
//! An utterance concatenates 3 to 6 segments of 0.2 to 0.5 s with no two
//! neighbours of the same class. Per-segment gain and pitch jitter keep the
//! classes from being trivially identical across draws.

use ndarray::{Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::acoustic::{ClassInventory, LabeledFrames};
use crate::features::{mfcc, AudioBuffer, FeatureError, MfccConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum Timbre {
    /// Harmonic tone: fundamental and relative harmonic amplitudes.
    Tone { f0_hz: f64, harmonics: Vec<f64> },
    /// Sum of random sinusoids inside `[lo_hz, hi_hz]`.
    Noise { lo_hz: f64, hi_hz: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentClass {
    pub name: String,
    pub timbre: Timbre,
}

pub fn default_classes() -> Vec<SegmentClass> {
    let tone = |name: &str, f0_hz: f64| SegmentClass {
        name: name.into(),
        timbre: Timbre::Tone {
            f0_hz,
            harmonics: vec![1.0, 0.5, 0.25],
        },
    };
    let noise = |name: &str, lo_hz: f64, hi_hz: f64| SegmentClass {
        name: name.into(),
        timbre: Timbre::Noise { lo_hz, hi_hz },
    };
    vec![
        tone("a", 220.0),
        noise("s", 3500.0, 6500.0),
        tone("i", 700.0),
        noise("f", 900.0, 2200.0),
    ]
}

pub fn inventory(classes: &[SegmentClass]) -> ClassInventory {
    ClassInventory::new(classes.iter().map(|c| c.name.clone())).expect("distinct class names")
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub sample_rate: u32,
    pub min_segments: usize,
    pub max_segments: usize,
    pub min_duration_s: f64,
    pub max_duration_s: f64,
    pub amplitude: f64,
    /// Standard deviation of the white background noise.
    pub noise_floor: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            sample_rate: 16_000,
            min_segments: 3,
            max_segments: 6,
            min_duration_s: 0.2,
            max_duration_s: 0.5,
            amplitude: 0.25,
            noise_floor: 0.002,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    pub source_id: String,
    pub audio: AudioBuffer,
    /// Class index of each segment.
    pub classes: Vec<usize>,
    pub labels: Vec<String>,
    /// Segment end times; the last equals the audio duration.
    pub boundaries_s: Vec<f64>,
}

fn render_segment(timbre: &Timbre, len: usize, rate: f64, amp: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let two_pi = 2.0 * std::f64::consts::PI;
    let partials: Vec<(f64, f64, f64)> = match timbre {
        Timbre::Tone { f0_hz, harmonics } => {
            let f0 = f0_hz * rng.random_range(0.97..1.03);
            harmonics
                .iter()
                .enumerate()
                .map(|(h, a)| (f0 * (h + 1) as f64, *a, rng.random_range(0.0..two_pi)))
                .collect()
        }
        Timbre::Noise { lo_hz, hi_hz } => (0..40)
            .map(|_| (rng.random_range(*lo_hz..*hi_hz), 1.0, rng.random_range(0.0..two_pi)))
            .collect(),
    };
    let norm = partials.iter().map(|p| p.1 * p.1).sum::<f64>().sqrt().max(1e-12);
    (0..len)
        .map(|i| {
            let t = i as f64 / rate;
            amp / norm
                * partials
                    .iter()
                    .map(|(f, a, ph)| a * (two_pi * f * t + ph).sin())
                    .sum::<f64>()
        })
        .collect()
}

/// One random utterance from `classes`.
pub fn utterance(
    source_id: impl Into<String>,
    classes: &[SegmentClass],
    cfg: &SynthConfig,
    seed: u64,
) -> Utterance {
    assert!(classes.len() >= 2, "need two classes to avoid adjacent repeats");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rate = cfg.sample_rate as f64;
    let count = rng.random_range(cfg.min_segments..=cfg.max_segments);
    let mut seq: Vec<usize> = Vec::with_capacity(count);
    for _ in 0..count {
        let c = loop {
            let c = rng.random_range(0..classes.len());
            if seq.last() != Some(&c) {
                break c;
            }
        };
        seq.push(c);
    }
    let mut samples = Vec::new();
    let mut boundaries = Vec::with_capacity(count);
    for &c in &seq {
        let dur = rng.random_range(cfg.min_duration_s..=cfg.max_duration_s);
        let len = (dur * rate).round() as usize;
        let gain = cfg.amplitude * rng.random_range(0.6..1.4);
        samples.extend(render_segment(&classes[c].timbre, len, rate, gain, &mut rng));
        boundaries.push(samples.len() as f64 / rate);
    }
    if cfg.noise_floor > 0.0 {
        let normal = rand_distr::Normal::new(0.0, cfg.noise_floor).expect("valid std");
        for s in samples.iter_mut() {
            *s += rng.sample(normal);
        }
    }
    Utterance {
        source_id: source_id.into(),
        audio: AudioBuffer::new(samples, cfg.sample_rate).expect("positive rate"),
        labels: seq.iter().map(|&c| classes[c].name.clone()).collect(),
        classes: seq,
        boundaries_s: boundaries,
    }
}

/// Index of the segment containing time `t`.
fn segment_at(boundaries: &[f64], t: f64) -> usize {
    boundaries
        .iter()
        .position(|&b| t < b)
        .unwrap_or(boundaries.len() - 1)
}

/// MFCC frames of the utterances. Frame `i` is labeled with the class at
/// `(i + 0.5) * advance`, the middle of the hop it ends, so that a labeling
/// switch lands on the boundary under the `(end_frame + 1) * advance` rule.
pub fn labeled_frames(utterances: &[Utterance], mfcc_cfg: &MfccConfig) -> Result<LabeledFrames, FeatureError> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for u in utterances {
        let f = mfcc(&u.audio, mfcc_cfg)?;
        for (i, row) in f.values().axis_iter(Axis(0)).enumerate() {
            let mid = (i as f64 + 0.5) * mfcc_cfg.frame_advance_s;
            labels.push(u.classes[segment_at(&u.boundaries_s, mid)]);
            rows.push(row.to_owned());
        }
    }
    let dim = rows.first().map_or(0, |r| r.len());
    let views: Vec<_> = rows.iter().map(|r| r.view()).collect();
    let features = if views.is_empty() {
        Array2::zeros((0, dim))
    } else {
        ndarray::stack(Axis(0), &views).expect("equal widths")
    };
    Ok(LabeledFrames { features, labels })
}
