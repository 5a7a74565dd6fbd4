use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ensalign::features::{mfcc, MfccConfig};
use ensalign::lexicon::{expand_with_words, parse_dictionary, VariantPolicy};
use ensalign::textgrid::{render, WordAlignment};
use ensalign::{aggregate, align, AudioBuffer, EnsembleAlignment, Lexicon, Transcript};
use rayon::prelude::*;

use crate::fsio::{atomic_write, files_with_suffix};
use crate::models::{Member, MATRIX_SUFFIX};

#[derive(Debug)]
pub struct AlignJob {
    pub audio_dir: Option<PathBuf>,
    pub text_dir: PathBuf,
    pub dict: PathBuf,
    pub members: Vec<Member>,
    pub out_dir: PathBuf,
    pub rank: usize,
    pub frame_advance_s: f64,
}

#[derive(Debug)]
pub struct FileOutcome {
    pub id: String,
    pub result: Result<EnsembleAlignment>,
}

impl AlignJob {
    pub fn validate(&self) -> Result<()> {
        if self.members.is_empty() {
            bail!("no ensemble members: --models named nothing");
        }
        if self.rank == 0 {
            bail!("--rank must be at least 1");
        }
        if !(self.frame_advance_s > 0.0) {
            bail!("--frame-advance-ms must be positive");
        }
        if self.audio_dir.is_none() && self.members.iter().any(Member::needs_features) {
            bail!("classifier members need --audio-dir");
        }
        for (what, p) in [("--text-dir", &self.text_dir), ("--dict", &self.dict)] {
            if !p.exists() {
                bail!("{what} {} does not exist", p.display());
            }
        }
        if let Some(a) = &self.audio_dir {
            if !a.is_dir() {
                bail!("--audio-dir {} is not a directory", a.display());
            }
        }
        Ok(())
    }

    /// File ids: audio files when an audio directory is given, otherwise
    /// the matrices of the first member.
    fn file_ids(&self) -> Result<Vec<String>> {
        let listed = match (&self.audio_dir, &self.members[0]) {
            (Some(dir), _) => files_with_suffix(dir, ".wav")?,
            (None, Member::Matrices { dir }) => files_with_suffix(dir, MATRIX_SUFFIX)?,
            (None, Member::Classifier { .. }) => unreachable!("rejected by validate"),
        };
        Ok(listed.into_iter().map(|(id, _)| id).collect())
    }

    pub fn run(&self) -> Result<Vec<FileOutcome>> {
        self.validate()?;
        let dict_text = std::fs::read_to_string(&self.dict)
            .with_context(|| format!("reading dictionary {}", self.dict.display()))?;
        let lexicon = parse_dictionary(&dict_text).context("parsing dictionary")?;
        std::fs::create_dir_all(&self.out_dir)
            .with_context(|| format!("creating {}", self.out_dir.display()))?;
        let ids = self.file_ids()?;
        if ids.is_empty() {
            bail!("no input files found");
        }
        log::info!("aligning {} file(s) with {} member(s)", ids.len(), self.members.len());
        Ok(ids
            .par_iter()
            .map(|id| FileOutcome {
                id: id.clone(),
                result: self.align_file(id, &lexicon),
            })
            .collect())
    }

    fn align_file(&self, id: &str, lexicon: &Lexicon) -> Result<EnsembleAlignment> {
        let text_path = self.text_dir.join(format!("{id}.txt"));
        let text = std::fs::read_to_string(&text_path)
            .with_context(|| format!("missing or unreadable transcript {}", text_path.display()))?;
        let transcript = Transcript::parse(id, &text);
        let (labels, words) =
            expand_with_words(&transcript, lexicon, &VariantPolicy::First).context("expanding transcript")?;

        let audio = match &self.audio_dir {
            Some(dir) => {
                let p = dir.join(format!("{id}.wav"));
                Some(AudioBuffer::open_wav(&p).with_context(|| format!("reading audio {}", p.display()))?)
            }
            None => None,
        };
        let features = match (&audio, self.members.iter().any(Member::needs_features)) {
            (Some(a), true) => {
                let cfg = MfccConfig {
                    frame_advance_s: self.frame_advance_s,
                    ..MfccConfig::default()
                };
                Some(mfcc(a, &cfg).context("computing features")?)
            }
            _ => None,
        };

        let alignments = self
            .members
            .par_iter()
            .map(|m| {
                let p = m.log_probs(id, features.as_ref())?;
                align(&p, &labels)
                    .map(|a| a.with_source(id))
                    .with_context(|| format!("aligning with {}", m.describe()))
            })
            .collect::<Result<Vec<_>>>()?;
        let xmax = match &audio {
            Some(a) => a.duration_s(),
            None => {
                let a = &alignments[0];
                a.end_times_s.last().copied().unwrap_or(a.frame_advance_s)
            }
        };

        let ea = aggregate(&alignments, self.rank).context("aggregating ensemble")?;
        let word_tier = WordAlignment {
            words: words.iter().map(|w| w.word.clone()).collect(),
            end_times_s: words.iter().map(|w| ea.median_s[w.last_segment]).collect(),
        };
        let grid = render(&ea, Some(&word_tier), 0.0, xmax).context("rendering TextGrid")?;
        let grid_text = grid.write().context("serializing TextGrid")?;
        write_outputs(&self.out_dir, id, &grid_text, &ea.to_csv())?;
        Ok(ea)
    }
}

fn write_outputs(out_dir: &Path, id: &str, grid: &str, ci_csv: &str) -> Result<()> {
    atomic_write(&out_dir.join(format!("{id}.TextGrid")), grid.as_bytes())?;
    atomic_write(&out_dir.join(format!("{id}.ci.csv")), ci_csv.as_bytes())
}
