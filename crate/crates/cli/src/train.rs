use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use ensalign::acoustic::{make_ensemble, TrainConfig};
use ensalign::features::MfccConfig;
use ensalign::synth::{self, SynthConfig};

use crate::fsio::atomic_write;

pub const MANIFEST_FILE: &str = "manifest.txt";

#[derive(Debug)]
pub struct TrainJob {
    pub out_dir: PathBuf,
    pub members: usize,
    pub seed: u64,
    pub train_utterances: usize,
    pub frame_advance_s: f64,
    pub config: TrainConfig,
}

pub fn member_file(i: usize) -> String {
    format!("member_{i:02}.model")
}

/// Utterance seeds live far from member seeds so the two streams never
/// coincide for small `--seed` values.
fn utterance_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (0xD1B5_4A32_D192_ED03u64.wrapping_add(i as u64))
}

impl TrainJob {
    /// Trains the members on synthetic utterances and writes one model file
    /// per member plus a manifest. Returns the manifest path.
    pub fn run(&self) -> Result<PathBuf> {
        if self.members == 0 {
            bail!("--members must be at least 1");
        }
        if self.train_utterances == 0 {
            bail!("--train-utterances must be at least 1");
        }
        let classes = synth::default_classes();
        let inventory = synth::inventory(&classes);
        let cfg = SynthConfig::default();
        let utts: Vec<_> = (0..self.train_utterances)
            .map(|i| synth::utterance(format!("train{i}"), &classes, &cfg, utterance_seed(self.seed, i)))
            .collect();
        let mfcc_cfg = MfccConfig {
            frame_advance_s: self.frame_advance_s,
            ..MfccConfig::default()
        };
        let data = synth::labeled_frames(&utts, &mfcc_cfg).context("computing training features")?;
        let seeds: Vec<u64> = (0..self.members as u64).map(|i| self.seed.wrapping_add(i)).collect();
        log::info!(
            "training {} member(s) on {} frames of {} synthetic utterance(s)",
            self.members,
            data.len(),
            utts.len()
        );
        let models = make_ensemble(&data, &inventory, &self.config, &seeds)?;

        std::fs::create_dir_all(&self.out_dir)
            .with_context(|| format!("creating {}", self.out_dir.display()))?;
        let mut manifest = String::from("# member file, seed\n");
        for (i, m) in models.iter().enumerate() {
            let name = member_file(i);
            atomic_write(&self.out_dir.join(&name), m.to_text().as_bytes())?;
            let _ = writeln!(manifest, "{name} seed={}", m.seed());
        }
        let path = self.out_dir.join(MANIFEST_FILE);
        atomic_write(&path, manifest.as_bytes())?;
        Ok(path)
    }
}
