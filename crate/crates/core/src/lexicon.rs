//! CMU-style pronunciation dictionaries and transcript expansion.
//!
//! Each non-comment line is `HEADWORD  SEG SEG ...`. Alternative
//! pronunciations repeat the headword with an index suffix, `WORD(2)`.
//! Headwords are case-folded to upper case; segment labels are kept verbatim.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::aligner::{AlignError, LabelSequence};

pub const COMMENT_PREFIX: &str = ";;;";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LexiconError {
    #[error("line {line}: entry {headword:?} has no pronunciation")]
    Malformed { line: usize, headword: String },
    #[error("conflicting pronunciations for {0:?}")]
    Conflict(String),
    #[error("empty pronunciation for {0:?}")]
    EmptyPronunciation(String),
    #[error("out-of-vocabulary tokens: {}", .0.join(", "))]
    OutOfVocabulary(Vec<String>),
    #[error("token {token:?} has no variant {variant} ({available} available)")]
    NoSuchVariant {
        token: String,
        variant: usize,
        available: usize,
    },
    #[error("variant policy selects {selected} variants for {tokens} tokens")]
    PolicyLength { selected: usize, tokens: usize },
    #[error("transcript {0:?} has no tokens")]
    EmptyTranscript(String),
    #[error(transparent)]
    Labels(#[from] AlignError),
}

pub type Pronunciation = Vec<String>;

/// Headword → pronunciation variants in file order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    entries: BTreeMap<String, Vec<Pronunciation>>,
}

pub fn fold_headword(word: &str) -> String {
    word.to_uppercase()
}

/// Strips a trailing `(N)` variant index.
fn base_headword(word: &str) -> &str {
    if let Some(open) = word.rfind('(') {
        let inner = &word[open + 1..];
        if let Some(digits) = inner.strip_suffix(')') {
            if open > 0 && !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                return &word[..open];
            }
        }
    }
    word
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lookup(&self, word: &str) -> Option<&[Pronunciation]> {
        self.entries.get(&fold_headword(word)).map(Vec::as_slice)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.lookup(word).is_some()
    }

    pub fn headwords(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Appends a variant, skipping exact duplicates.
    pub fn insert(&mut self, word: &str, pron: Pronunciation) -> Result<(), LexiconError> {
        if pron.is_empty() {
            return Err(LexiconError::EmptyPronunciation(word.to_string()));
        }
        let variants = self.entries.entry(fold_headword(word)).or_default();
        if !variants.contains(&pron) {
            variants.push(pron);
        }
        Ok(())
    }

    /// Serializes back to dictionary text; variants after the first get
    /// `(2)`, `(3)`, ... suffixes.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (word, variants) in &self.entries {
            for (i, pron) in variants.iter().enumerate() {
                if i == 0 {
                    let _ = writeln!(out, "{word}  {}", pron.join(" "));
                } else {
                    let _ = writeln!(out, "{word}({})  {}", i + 1, pron.join(" "));
                }
            }
        }
        out
    }
}

/// Parses CMU dictionary text. Empty input gives an empty lexicon.
pub fn parse_dictionary(text: &str) -> Result<Lexicon, LexiconError> {
    let mut lex = Lexicon::new();
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with(COMMENT_PREFIX) {
            continue;
        }
        let mut fields = line.split_whitespace();
        let head = fields.next().expect("non-empty line");
        let pron: Pronunciation = fields.map(str::to_string).collect();
        if pron.is_empty() {
            return Err(LexiconError::Malformed {
                line: i + 1,
                headword: head.to_string(),
            });
        }
        lex.insert(base_headword(head), pron)?;
    }
    Ok(lex)
}

/// Whitespace-separated orthographic tokens for one file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub source_id: String,
    pub tokens: Vec<String>,
}

impl Transcript {
    pub fn parse(source_id: impl Into<String>, text: &str) -> Self {
        Self {
            source_id: source_id.into(),
            tokens: text.split_whitespace().map(str::to_string).collect(),
        }
    }
}

/// Lexicon whose headwords are file ids and whose single pronunciation per
/// id is that file's segment sequence, with the matching one-token
/// transcripts.
pub fn build_pseudo_lexicon(
    files: &[(String, Vec<String>)],
) -> Result<(Lexicon, Vec<Transcript>), LexiconError> {
    let mut lex = Lexicon::new();
    let mut transcripts = Vec::with_capacity(files.len());
    for (id, segments) in files {
        if segments.is_empty() {
            return Err(LexiconError::EmptyPronunciation(id.clone()));
        }
        match lex.lookup(id) {
            Some(existing) if existing[0] != *segments => {
                return Err(LexiconError::Conflict(id.clone()))
            }
            Some(_) => continue,
            None => lex.insert(id, segments.clone())?,
        }
        transcripts.push(Transcript {
            source_id: id.clone(),
            tokens: vec![id.clone()],
        });
    }
    Ok((lex, transcripts))
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum VariantPolicy {
    #[default]
    First,
    /// One 0-based variant index per token.
    Selected(Vec<usize>),
}

/// Word and the index of its last segment in the expanded sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordSpan {
    pub word: String,
    pub last_segment: usize,
}

/// Expands a transcript into segment labels plus word spans. Adjacent
/// identical segments (for example across a word boundary) get distinct
/// position markers.
pub fn expand_with_words(
    t: &Transcript,
    lex: &Lexicon,
    policy: &VariantPolicy,
) -> Result<(LabelSequence, Vec<WordSpan>), LexiconError> {
    if t.tokens.is_empty() {
        return Err(LexiconError::EmptyTranscript(t.source_id.clone()));
    }
    if let VariantPolicy::Selected(sel) = policy {
        if sel.len() != t.tokens.len() {
            return Err(LexiconError::PolicyLength {
                selected: sel.len(),
                tokens: t.tokens.len(),
            });
        }
    }
    let missing: Vec<String> = t
        .tokens
        .iter()
        .filter(|tok| !lex.contains(tok))
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(LexiconError::OutOfVocabulary(missing));
    }
    let mut segments = Vec::new();
    let mut words = Vec::with_capacity(t.tokens.len());
    for (i, tok) in t.tokens.iter().enumerate() {
        let variants = lex.lookup(tok).expect("checked above");
        let v = match policy {
            VariantPolicy::First => 0,
            VariantPolicy::Selected(sel) => sel[i],
        };
        let pron = variants.get(v).ok_or_else(|| LexiconError::NoSuchVariant {
            token: tok.clone(),
            variant: v,
            available: variants.len(),
        })?;
        segments.extend(pron.iter().cloned());
        words.push(WordSpan {
            word: tok.clone(),
            last_segment: segments.len() - 1,
        });
    }
    Ok((LabelSequence::with_markers(segments)?, words))
}

/// Segment label sequence for a transcript: one pronunciation per token.
pub fn expand_transcript(
    t: &Transcript,
    lex: &Lexicon,
    policy: &VariantPolicy,
) -> Result<LabelSequence, LexiconError> {
    expand_with_words(t, lex, policy).map(|(l, _)| l)
}
