//! Ensemble forced alignment.
//!
//! Audio is turned into MFCC frames ([`features`]), scored by each member of
//! an acoustic-model ensemble ([`acoustic`]), and force-aligned to a segment
//! label sequence by dynamic programming ([`aligner`]). The per-member
//! boundaries are then combined into median boundaries with order-statistic
//! confidence intervals ([`ensemble`]) and written out as Praat TextGrids
//! ([`textgrid`]). Boundary-error evaluation lives in [`evaluation`].

pub mod acoustic;
pub mod aligner;
pub mod ensemble;
pub mod evaluation;
pub mod features;
pub mod lexicon;
pub mod synth;
pub mod textgrid;

mod numfmt;

pub use acoustic::{ClassInventory, FrameClassifier, LogProbMatrix};
pub use aligner::{align, Alignment, LabelSequence};
pub use ensemble::{aggregate, EnsembleAlignment};
pub use features::{AudioBuffer, FeatureMatrix};
pub use lexicon::{Lexicon, Transcript};
pub use textgrid::TextGrid;
