//! MFCC front end: 13 cepstra with log energy in place of c0, plus delta and
//! delta-delta coefficients, one 39-dimensional row per analysis frame.

use std::fmt::Write as _;
use std::io::{Read, Seek};
use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("audio too short: {samples} samples, one frame needs {frame_len}")]
    TooShort { samples: usize, frame_len: usize },
    #[error("invalid frame parameters: length {length_s} s, advance {advance_s} s")]
    BadFraming { length_s: f64, advance_s: f64 },
    #[error("sample rate must be positive")]
    ZeroSampleRate,
    #[error("unsupported sample rate {found} Hz (expected {expected} Hz)")]
    SampleRate { expected: u32, found: u32 },
    #[error("unsupported WAV encoding: {0}")]
    Encoding(String),
    #[error("WAV read failed: {0}")]
    Wav(#[from] hound::Error),
    #[error("feature matrix has non-finite value at frame {0}")]
    NonFinite(usize),
    #[error("feature width {found} does not match expected {expected}")]
    Width { expected: usize, found: usize },
}

/// Mono samples in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self, FeatureError> {
        if sample_rate == 0 {
            return Err(FeatureError::ZeroSampleRate);
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Reads 16-bit PCM mono WAV.
    pub fn read_wav<R: Read>(reader: R) -> Result<Self, FeatureError> {
        let mut wav = hound::WavReader::new(reader)?;
        let spec = wav.spec();
        if spec.channels != 1 {
            return Err(FeatureError::Encoding(format!(
                "{} channels (mono required)",
                spec.channels
            )));
        }
        if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
            return Err(FeatureError::Encoding(format!(
                "{:?} {}-bit (16-bit PCM required)",
                spec.sample_format, spec.bits_per_sample
            )));
        }
        let samples = wav
            .samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(samples, spec.sample_rate)
    }

    pub fn open_wav(path: impl AsRef<Path>) -> Result<Self, FeatureError> {
        let file = std::fs::File::open(path).map_err(hound::Error::from)?;
        Self::read_wav(std::io::BufReader::new(file))
    }

    /// Writes 16-bit PCM mono WAV, clipping to [-1, 1].
    pub fn write_wav<W: std::io::Write + Seek>(&self, writer: W) -> Result<(), FeatureError> {
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: self.sample_rate,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::new(writer, spec)?;
        for s in &self.samples {
            w.write_sample((s.clamp(-1.0, 1.0) * 32767.0).round() as i16)?;
        }
        w.finalize()?;
        Ok(())
    }
}

/// Frame-level features with their timing.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: Array2<f64>,
    frame_advance_s: f64,
    frame_length_s: f64,
}

pub const FEATURE_DIM: usize = 39;

impl FeatureMatrix {
    pub fn from_values(
        values: Array2<f64>,
        frame_advance_s: f64,
        frame_length_s: f64,
    ) -> Result<Self, FeatureError> {
        if !(frame_advance_s > 0.0) || frame_length_s < frame_advance_s {
            return Err(FeatureError::BadFraming {
                length_s: frame_length_s,
                advance_s: frame_advance_s,
            });
        }
        if let Some((i, _)) = values
            .axis_iter(Axis(0))
            .enumerate()
            .find(|(_, r)| r.iter().any(|v| !v.is_finite()))
        {
            return Err(FeatureError::NonFinite(i));
        }
        Ok(Self {
            values,
            frame_advance_s,
            frame_length_s,
        })
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn n_frames(&self) -> usize {
        self.values.nrows()
    }

    pub fn frame_advance_s(&self) -> f64 {
        self.frame_advance_s
    }

    pub fn frame_length_s(&self) -> f64 {
        self.frame_length_s
    }

    /// End time of frame `i` (0-based) as the aligner sees it.
    pub fn frame_end_s(&self, i: usize) -> f64 {
        (i + 1) as f64 * self.frame_advance_s
    }

    pub fn column_names() -> Vec<String> {
        let base: Vec<String> = std::iter::once("log_energy".to_string())
            .chain((1..13).map(|i| format!("c{i}")))
            .collect();
        let mut names = base.clone();
        names.extend(base.iter().map(|b| format!("d_{b}")));
        names.extend(base.iter().map(|b| format!("dd_{b}")));
        names
    }

    /// CSV with a header row, one frame per line. Only meaningful for
    /// 39-column matrices produced by [`mfcc`].
    pub fn to_csv(&self) -> Result<String, FeatureError> {
        if self.values.ncols() != FEATURE_DIM {
            return Err(FeatureError::Width {
                expected: FEATURE_DIM,
                found: self.values.ncols(),
            });
        }
        let mut out = Self::column_names().join(",");
        out.push('\n');
        for row in self.values.axis_iter(Axis(0)) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MfccConfig {
    pub frame_length_s: f64,
    pub frame_advance_s: f64,
    pub num_filters: usize,
    pub pre_emphasis: f64,
    pub energy_floor: f64,
    pub delta_window: usize,
    pub low_freq_hz: f64,
    /// `None` means Nyquist.
    pub high_freq_hz: Option<f64>,
    /// Rejects audio at any other rate when set.
    pub sample_rate: Option<u32>,
}

impl Default for MfccConfig {
    fn default() -> Self {
        Self {
            frame_length_s: 0.025,
            frame_advance_s: 0.010,
            num_filters: 26,
            pre_emphasis: 0.97,
            energy_floor: 1e-10,
            delta_window: 2,
            low_freq_hz: 0.0,
            high_freq_hz: None,
            sample_rate: Some(16_000),
        }
    }
}

const NUM_CEPS: usize = 13;

struct Framing {
    frame_len: usize,
    starts: Vec<usize>,
}

fn plan_frames(
    n_samples: usize,
    sample_rate: u32,
    frame_length_s: f64,
    frame_advance_s: f64,
) -> Result<Framing, FeatureError> {
    if !(frame_advance_s > 0.0) || !(frame_length_s >= frame_advance_s) {
        return Err(FeatureError::BadFraming {
            length_s: frame_length_s,
            advance_s: frame_advance_s,
        });
    }
    let rate = sample_rate as f64;
    let frame_len = (frame_length_s * rate).round() as usize;
    if frame_len == 0 {
        return Err(FeatureError::BadFraming {
            length_s: frame_length_s,
            advance_s: frame_advance_s,
        });
    }
    let mut starts = Vec::new();
    loop {
        let start = (starts.len() as f64 * frame_advance_s * rate).round() as usize;
        if start + frame_len > n_samples {
            break;
        }
        starts.push(start);
    }
    if starts.is_empty() {
        return Err(FeatureError::TooShort {
            samples: n_samples,
            frame_len,
        });
    }
    Ok(Framing { frame_len, starts })
}

pub fn hamming(len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    (0..len)
        .map(|i| 0.54 - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / (len - 1) as f64).cos())
        .collect()
}

/// Cuts `audio` into Hamming-windowed frames. Frame `i` starts at sample
/// `round(i * advance * rate)`; a trailing partial frame is dropped.
pub fn frame_signal(
    audio: &AudioBuffer,
    frame_length_s: f64,
    frame_advance_s: f64,
) -> Result<Vec<Vec<f64>>, FeatureError> {
    let framing = plan_frames(
        audio.samples.len(),
        audio.sample_rate,
        frame_length_s,
        frame_advance_s,
    )?;
    let window = hamming(framing.frame_len);
    Ok(framing
        .starts
        .iter()
        .map(|&s| {
            audio.samples[s..s + framing.frame_len]
                .iter()
                .zip(&window)
                .map(|(x, w)| x * w)
                .collect()
        })
        .collect())
}

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters equally spaced on the mel scale.
#[derive(Debug, Clone)]
pub struct MelFilterbank {
    /// `num_filters + 2` corner frequencies in Hz.
    edges_hz: Vec<f64>,
    /// Per filter: first FFT bin and its weights.
    weights: Vec<(usize, Vec<f64>)>,
}

impl MelFilterbank {
    pub fn new(num_filters: usize, fft_size: usize, sample_rate: u32, low_hz: f64, high_hz: f64) -> Self {
        let lo = hz_to_mel(low_hz);
        let hi = hz_to_mel(high_hz);
        let edges_hz: Vec<f64> = (0..num_filters + 2)
            .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (num_filters + 1) as f64))
            .collect();
        let bin_hz = sample_rate as f64 / fft_size as f64;
        let n_bins = fft_size / 2 + 1;
        let mut fb = Self {
            edges_hz,
            weights: Vec::with_capacity(num_filters),
        };
        for m in 0..num_filters {
            let ws: Vec<f64> = (0..n_bins).map(|b| fb.weight(m, b as f64 * bin_hz)).collect();
            let first = ws.iter().position(|&w| w > 0.0).unwrap_or(0);
            let last = ws.iter().rposition(|&w| w > 0.0).map_or(first, |l| l + 1);
            fb.weights.push((first, ws[first..last].to_vec()));
        }
        fb
    }

    pub fn num_filters(&self) -> usize {
        self.edges_hz.len() - 2
    }

    pub fn center_hz(&self, filter: usize) -> f64 {
        self.edges_hz[filter + 1]
    }

    /// Weight of `filter` at frequency `hz`, straight from the triangle.
    pub fn weight(&self, filter: usize, hz: f64) -> f64 {
        let (l, c, r) = (
            self.edges_hz[filter],
            self.edges_hz[filter + 1],
            self.edges_hz[filter + 2],
        );
        if hz <= l || hz >= r {
            0.0
        } else if hz <= c {
            (hz - l) / (c - l)
        } else {
            (r - hz) / (r - c)
        }
    }

    pub fn apply(&self, spectrum: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .map(|(first, ws)| {
                ws.iter()
                    .zip(&spectrum[*first..])
                    .map(|(w, s)| w * s)
                    .sum()
            })
            .collect()
    }
}

struct Analysis {
    log_energy: Vec<f64>,
    filterbank: Vec<Vec<f64>>,
}

fn analyze(audio: &AudioBuffer, cfg: &MfccConfig) -> Result<Analysis, FeatureError> {
    if let Some(expected) = cfg.sample_rate {
        if audio.sample_rate != expected {
            return Err(FeatureError::SampleRate {
                expected,
                found: audio.sample_rate,
            });
        }
    }
    let framing = plan_frames(
        audio.samples.len(),
        audio.sample_rate,
        cfg.frame_length_s,
        cfg.frame_advance_s,
    )?;
    let len = framing.frame_len;
    let fft_size = len.next_power_of_two();
    let nyquist = audio.sample_rate as f64 / 2.0;
    let bank = MelFilterbank::new(
        cfg.num_filters,
        fft_size,
        audio.sample_rate,
        cfg.low_freq_hz,
        cfg.high_freq_hz.unwrap_or(nyquist).min(nyquist),
    );
    let window = hamming(len);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(fft_size);
    let mut buf = vec![Complex::new(0.0, 0.0); fft_size];

    let mut log_energy = Vec::with_capacity(framing.starts.len());
    let mut filterbank = Vec::with_capacity(framing.starts.len());
    for &start in &framing.starts {
        let frame = &audio.samples[start..start + len];
        let energy: f64 = frame.iter().map(|x| x * x).sum();
        log_energy.push(energy.max(cfg.energy_floor).ln());

        buf.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
        for i in 0..len {
            let prev = if i == 0 { frame[0] } else { frame[i - 1] };
            buf[i].re = (frame[i] - cfg.pre_emphasis * prev) * window[i];
        }
        fft.process(&mut buf);
        let magnitude: Vec<f64> = buf[..fft_size / 2 + 1].iter().map(|c| c.norm()).collect();
        filterbank.push(bank.apply(&magnitude));
    }
    Ok(Analysis {
        log_energy,
        filterbank,
    })
}

/// Raw mel filterbank outputs (before the log), one row per frame.
pub fn filterbank_energies(audio: &AudioBuffer, cfg: &MfccConfig) -> Result<Array2<f64>, FeatureError> {
    let a = analyze(audio, cfg)?;
    let n = a.filterbank.len();
    let flat: Vec<f64> = a.filterbank.into_iter().flatten().collect();
    Ok(Array2::from_shape_vec((n, cfg.num_filters), flat).expect("rectangular"))
}

/// 39-dimensional MFCC features: `[log-energy, c1..c12, Δ, ΔΔ]`.
pub fn mfcc(audio: &AudioBuffer, cfg: &MfccConfig) -> Result<FeatureMatrix, FeatureError> {
    let a = analyze(audio, cfg)?;
    let n = a.log_energy.len();
    let nf = cfg.num_filters;
    let norm = (2.0 / nf as f64).sqrt();
    let mut statics = Array2::zeros((n, NUM_CEPS));
    for (i, fb) in a.filterbank.iter().enumerate() {
        statics[[i, 0]] = a.log_energy[i];
        let logs: Vec<f64> = fb.iter().map(|v| v.max(cfg.energy_floor).ln()).collect();
        for k in 1..NUM_CEPS {
            let c: f64 = logs
                .iter()
                .enumerate()
                .map(|(j, l)| {
                    l * (std::f64::consts::PI * k as f64 * (j as f64 + 0.5) / nf as f64).cos()
                })
                .sum();
            statics[[i, k]] = norm * c;
        }
    }
    let d = delta(statics.view(), cfg.delta_window);
    let dd = delta(d.view(), cfg.delta_window);
    let values = ndarray::concatenate![Axis(1), statics, d, dd];
    FeatureMatrix::from_values(values, cfg.frame_advance_s, cfg.frame_length_s)
}

/// Regression deltas over `±window` frames, clamping indices at the edges.
pub fn delta(features: ArrayView2<'_, f64>, window: usize) -> Array2<f64> {
    let n = features.nrows();
    let mut out = Array2::zeros(features.raw_dim());
    if n == 0 || window == 0 {
        return out;
    }
    let denom = 2.0 * (1..=window).map(|w| (w * w) as f64).sum::<f64>();
    for i in 0..n {
        let mut acc = out.row_mut(i);
        for w in 1..=window {
            let next = features.row((i + w).min(n - 1));
            let prev = features.row(i.saturating_sub(w));
            acc.scaled_add(w as f64 / denom, &(&next - &prev));
        }
    }
    out
}
