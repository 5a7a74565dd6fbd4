//! Praat TextGrid reading and writing.
//!
//! Writing always produces the long text format. Reading accepts both the
//! long and the short ("chronological"-free) text formats: the reader works
//! on the stream of values (numbers, quoted strings, `<exists>` flags) and
//! ignores the decorative keys and indentation of the long format.

use std::fmt::Write as _;

use thiserror::Error;

use crate::ensemble::EnsembleAlignment;
use crate::numfmt;

/// Gap inserted between CI points that would otherwise share a time.
pub const COLLISION_NUDGE_S: f64 = 1e-6;

/// Slack allowed when checking that intervals tile their tier.
pub const TILING_TOLERANCE_S: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TextGridError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("tier {tier:?}: {msg}")]
    Invalid { tier: String, msg: String },
    #[error("median boundaries not increasing at indices {0:?}")]
    NonMonotone(Vec<usize>),
    #[error("boundary {index} at {time_s} s lies outside [{xmin}, {xmax}]")]
    OutOfRange {
        index: usize,
        time_s: f64,
        xmin: f64,
        xmax: f64,
    },
    #[error("grid range invalid: xmin {xmin} >= xmax {xmax}")]
    Range { xmin: f64, xmax: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Interval {
    pub start_s: f64,
    pub end_s: f64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub time_s: f64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalTier {
    pub name: String,
    pub xmin_s: f64,
    pub xmax_s: f64,
    pub intervals: Vec<Interval>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointTier {
    pub name: String,
    pub xmin_s: f64,
    pub xmax_s: f64,
    pub points: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Tier {
    Interval(IntervalTier),
    Point(PointTier),
}

impl Tier {
    pub fn name(&self) -> &str {
        match self {
            Tier::Interval(t) => &t.name,
            Tier::Point(t) => &t.name,
        }
    }

    fn range(&self) -> (f64, f64) {
        match self {
            Tier::Interval(t) => (t.xmin_s, t.xmax_s),
            Tier::Point(t) => (t.xmin_s, t.xmax_s),
        }
    }
}

impl IntervalTier {
    pub fn validate(&self) -> Result<(), TextGridError> {
        let bad = |msg: String| TextGridError::Invalid {
            tier: self.name.clone(),
            msg,
        };
        let mut cursor = self.xmin_s;
        for (i, iv) in self.intervals.iter().enumerate() {
            if (iv.start_s - cursor).abs() > TILING_TOLERANCE_S {
                return Err(bad(format!(
                    "interval {} starts at {} but previous ends at {}",
                    i + 1,
                    iv.start_s,
                    cursor
                )));
            }
            if !(iv.end_s > iv.start_s) {
                return Err(bad(format!("interval {} has non-positive duration", i + 1)));
            }
            cursor = iv.end_s;
        }
        if self.intervals.is_empty() {
            return Err(bad("interval tier has no intervals".into()));
        }
        if (cursor - self.xmax_s).abs() > TILING_TOLERANCE_S {
            return Err(bad(format!("intervals end at {cursor}, tier ends at {}", self.xmax_s)));
        }
        Ok(())
    }
}

impl PointTier {
    pub fn validate(&self) -> Result<(), TextGridError> {
        let bad = |msg: String| TextGridError::Invalid {
            tier: self.name.clone(),
            msg,
        };
        for (i, w) in self.points.windows(2).enumerate() {
            if !(w[1].time_s > w[0].time_s) {
                return Err(bad(format!("point {} not after point {}", i + 2, i + 1)));
            }
        }
        if let (Some(f), Some(l)) = (self.points.first(), self.points.last()) {
            if f.time_s < self.xmin_s || l.time_s > self.xmax_s {
                return Err(bad("point outside tier range".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TextGrid {
    pub xmin_s: f64,
    pub xmax_s: f64,
    pub tiers: Vec<Tier>,
}

impl TextGrid {
    pub fn tier(&self, name: &str) -> Option<&Tier> {
        self.tiers.iter().find(|t| t.name() == name)
    }

    pub fn validate(&self) -> Result<(), TextGridError> {
        if !(self.xmin_s < self.xmax_s) {
            return Err(TextGridError::Range {
                xmin: self.xmin_s,
                xmax: self.xmax_s,
            });
        }
        for tier in &self.tiers {
            let (lo, hi) = tier.range();
            if lo < self.xmin_s - TILING_TOLERANCE_S || hi > self.xmax_s + TILING_TOLERANCE_S || !(lo < hi) {
                return Err(TextGridError::Invalid {
                    tier: tier.name().to_string(),
                    msg: format!("range [{lo}, {hi}] outside grid [{}, {}]", self.xmin_s, self.xmax_s),
                });
            }
            match tier {
                Tier::Interval(t) => t.validate()?,
                Tier::Point(t) => t.validate()?,
            }
        }
        Ok(())
    }

    /// Serializes in Praat's long text format.
    pub fn write(&self) -> Result<String, TextGridError> {
        self.validate()?;
        let t = |x: f64| numfmt::sig(x, 16);
        let mut o = String::new();
        let _ = writeln!(o, "File type = \"ooTextFile\"");
        let _ = writeln!(o, "Object class = \"TextGrid\"");
        let _ = writeln!(o);
        let _ = writeln!(o, "xmin = {} ", t(self.xmin_s));
        let _ = writeln!(o, "xmax = {} ", t(self.xmax_s));
        if self.tiers.is_empty() {
            let _ = writeln!(o, "tiers? <absent> ");
            return Ok(o);
        }
        let _ = writeln!(o, "tiers? <exists> ");
        let _ = writeln!(o, "size = {} ", self.tiers.len());
        let _ = writeln!(o, "item []: ");
        for (i, tier) in self.tiers.iter().enumerate() {
            let _ = writeln!(o, "    item [{}]:", i + 1);
            match tier {
                Tier::Interval(tier) => {
                    let _ = writeln!(o, "        class = \"IntervalTier\" ");
                    let _ = writeln!(o, "        name = {} ", quote(&tier.name));
                    let _ = writeln!(o, "        xmin = {} ", t(tier.xmin_s));
                    let _ = writeln!(o, "        xmax = {} ", t(tier.xmax_s));
                    let _ = writeln!(o, "        intervals: size = {} ", tier.intervals.len());
                    for (k, iv) in tier.intervals.iter().enumerate() {
                        let _ = writeln!(o, "        intervals [{}]:", k + 1);
                        let _ = writeln!(o, "            xmin = {} ", t(iv.start_s));
                        let _ = writeln!(o, "            xmax = {} ", t(iv.end_s));
                        let _ = writeln!(o, "            text = {} ", quote(&iv.text));
                    }
                }
                Tier::Point(tier) => {
                    let _ = writeln!(o, "        class = \"TextTier\" ");
                    let _ = writeln!(o, "        name = {} ", quote(&tier.name));
                    let _ = writeln!(o, "        xmin = {} ", t(tier.xmin_s));
                    let _ = writeln!(o, "        xmax = {} ", t(tier.xmax_s));
                    let _ = writeln!(o, "        points: size = {} ", tier.points.len());
                    for (k, p) in tier.points.iter().enumerate() {
                        let _ = writeln!(o, "        points [{}]:", k + 1);
                        let _ = writeln!(o, "            number = {} ", t(p.time_s));
                        let _ = writeln!(o, "            mark = {} ", quote(&p.text));
                    }
                }
            }
        }
        Ok(o)
    }

    /// Parses the long or short text format.
    pub fn read(content: &str) -> Result<Self, TextGridError> {
        let content = content.strip_prefix('\u{feff}').unwrap_or(content);
        let mut tokens = Tokens::new(content);
        let file_type = tokens.string()?;
        if file_type != "ooTextFile" {
            return Err(tokens.error(format!("expected \"ooTextFile\", found {file_type:?}")));
        }
        let class = tokens.string()?;
        if class != "TextGrid" {
            return Err(tokens.error(format!("expected \"TextGrid\", found {class:?}")));
        }
        let xmin_s = tokens.number()?;
        let xmax_s = tokens.number()?;
        let exists = tokens.flag()?;
        let mut tiers = Vec::new();
        if exists {
            let size = tokens.count()?;
            for i in 0..size {
                let class = tokens.string().map_err(|e| match e {
                    TextGridError::Parse { line, .. } => TextGridError::Parse {
                        line,
                        msg: format!("tier count mismatch: header declares {size}, file ends after {i}"),
                    },
                    e => e,
                })?;
                let name = tokens.string()?;
                let tmin = tokens.number()?;
                let tmax = tokens.number()?;
                let n = tokens.count()?;
                let tier_line = tokens.line;
                let tier = match class.as_str() {
                    "IntervalTier" => {
                        let mut intervals = Vec::with_capacity(n);
                        for _ in 0..n {
                            let start_s = tokens.number()?;
                            let end_s = tokens.number()?;
                            let text = tokens.string()?;
                            intervals.push(Interval { start_s, end_s, text });
                        }
                        Tier::Interval(IntervalTier {
                            name,
                            xmin_s: tmin,
                            xmax_s: tmax,
                            intervals,
                        })
                    }
                    "TextTier" => {
                        let mut points = Vec::with_capacity(n);
                        for _ in 0..n {
                            let time_s = tokens.number()?;
                            let text = tokens.string()?;
                            points.push(Point { time_s, text });
                        }
                        Tier::Point(PointTier {
                            name,
                            xmin_s: tmin,
                            xmax_s: tmax,
                            points,
                        })
                    }
                    other => {
                        return Err(TextGridError::Parse {
                            line: tier_line,
                            msg: format!("unknown tier class {other:?}"),
                        })
                    }
                };
                let check = match &tier {
                    Tier::Interval(t) => t.validate(),
                    Tier::Point(t) => t.validate(),
                };
                if let Err(e) = check {
                    return Err(TextGridError::Parse {
                        line: tokens.line,
                        msg: e.to_string(),
                    });
                }
                tiers.push(tier);
            }
        }
        if let Some(line) = tokens.trailing() {
            return Err(TextGridError::Parse {
                line,
                msg: "unexpected content after last tier".into(),
            });
        }
        let tg = TextGrid {
            xmin_s,
            xmax_s,
            tiers,
        };
        tg.validate().map_err(|e| TextGridError::Parse {
            line: tokens.line,
            msg: e.to_string(),
        })?;
        Ok(tg)
    }
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

enum Token {
    Number(f64),
    Str(String),
    Flag(bool),
}

struct Tokens<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    src: &'a str,
    line: usize,
}

impl<'a> Tokens<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            chars: src.char_indices().peekable(),
            src,
            line: 1,
        }
    }

    fn error(&self, msg: String) -> TextGridError {
        TextGridError::Parse {
            line: self.line,
            msg,
        }
    }

    fn bump(&mut self) -> Option<(usize, char)> {
        let c = self.chars.next();
        if let Some((_, '\n')) = c {
            self.line += 1;
        }
        c
    }

    fn next_token(&mut self) -> Result<Option<Token>, TextGridError> {
        while let Some(&(start, c)) = self.chars.peek() {
            match c {
                '"' => {
                    self.bump();
                    let mut s = String::new();
                    loop {
                        match self.bump() {
                            None => return Err(self.error("unterminated string".into())),
                            Some((_, '"')) => {
                                if let Some(&(_, '"')) = self.chars.peek() {
                                    self.bump();
                                    s.push('"');
                                } else {
                                    break;
                                }
                            }
                            Some((_, ch)) => s.push(ch),
                        }
                    }
                    return Ok(Some(Token::Str(s)));
                }
                '[' => {
                    while let Some((_, ch)) = self.bump() {
                        if ch == ']' {
                            break;
                        }
                    }
                }
                '!' => {
                    while let Some(&(_, ch)) = self.chars.peek() {
                        if ch == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                '<' => {
                    self.bump();
                    let mut s = String::new();
                    while let Some((_, ch)) = self.bump() {
                        if ch == '>' {
                            break;
                        }
                        s.push(ch);
                    }
                    return match s.as_str() {
                        "exists" => Ok(Some(Token::Flag(true))),
                        "absent" => Ok(Some(Token::Flag(false))),
                        _ => Err(self.error(format!("unknown flag <{s}>"))),
                    };
                }
                c if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' => {
                    let mut end = start;
                    while let Some(&(i, ch)) = self.chars.peek() {
                        let exp_sign = matches!(ch, '-' | '+')
                            && matches!(self.src[..i].chars().last(), Some('e' | 'E'));
                        if ch.is_ascii_digit() || ch == '.' || ch == 'e' || ch == 'E' || exp_sign || i == start {
                            end = i + ch.len_utf8();
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    let text = &self.src[start..end];
                    return text
                        .parse::<f64>()
                        .map(|v| Some(Token::Number(v)))
                        .map_err(|_| self.error(format!("bad number {text:?}")));
                }
                c if c.is_alphabetic() || c == '_' => {
                    // decorative key such as `xmin` or `tiers?`
                    while let Some(&(_, ch)) = self.chars.peek() {
                        if ch.is_alphanumeric() || ch == '_' || ch == '?' {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                }
                _ => {
                    self.bump();
                }
            }
        }
        Ok(None)
    }

    fn expect(&mut self, what: &str) -> Result<Token, TextGridError> {
        self.next_token()?
            .ok_or_else(|| self.error(format!("unexpected end of file, expected {what}")))
    }

    fn string(&mut self) -> Result<String, TextGridError> {
        match self.expect("a string")? {
            Token::Str(s) => Ok(s),
            _ => Err(self.error("expected a quoted string".into())),
        }
    }

    fn number(&mut self) -> Result<f64, TextGridError> {
        match self.expect("a number")? {
            Token::Number(v) if v.is_finite() => Ok(v),
            _ => Err(self.error("expected a number".into())),
        }
    }

    fn count(&mut self) -> Result<usize, TextGridError> {
        let v = self.number()?;
        if v < 0.0 || v.fract() != 0.0 {
            return Err(self.error(format!("bad count {v}")));
        }
        Ok(v as usize)
    }

    fn flag(&mut self) -> Result<bool, TextGridError> {
        match self.expect("<exists>")? {
            Token::Flag(b) => Ok(b),
            _ => Err(self.error("expected <exists> or <absent>".into())),
        }
    }

    fn trailing(&mut self) -> Option<usize> {
        match self.next_token() {
            Ok(None) => None,
            _ => Some(self.line),
        }
    }
}

/// Word-level end times to render alongside the segments.
#[derive(Debug, Clone, PartialEq)]
pub struct WordAlignment {
    pub words: Vec<String>,
    pub end_times_s: Vec<f64>,
}

pub const WORDS_TIER: &str = "words";
pub const PHONES_TIER: &str = "phones";
pub const CI_TIER: &str = "ci";

fn interval_tier(
    name: &str,
    labels: impl Iterator<Item = String>,
    ends: &[f64],
    xmin: f64,
    xmax: f64,
) -> Result<IntervalTier, TextGridError> {
    let mut intervals = Vec::with_capacity(ends.len() + 1);
    let mut cursor = xmin;
    let bad: Vec<usize> = ends
        .iter()
        .enumerate()
        .scan(xmin, |prev, (j, &e)| {
            let ok = e > *prev;
            *prev = e;
            Some((j, ok))
        })
        .filter(|(_, ok)| !ok)
        .map(|(j, _)| j + 1)
        .collect();
    if !bad.is_empty() {
        return Err(TextGridError::NonMonotone(bad));
    }
    for (j, (text, &end)) in labels.zip(ends).enumerate() {
        if end > xmax + TILING_TOLERANCE_S {
            return Err(TextGridError::OutOfRange {
                index: j + 1,
                time_s: end,
                xmin,
                xmax,
            });
        }
        intervals.push(Interval {
            start_s: cursor,
            end_s: end.min(xmax),
            text,
        });
        cursor = end.min(xmax);
    }
    if xmax - cursor > TILING_TOLERANCE_S {
        intervals.push(Interval {
            start_s: cursor,
            end_s: xmax,
            text: String::new(),
        });
    } else if let Some(last) = intervals.last_mut() {
        last.end_s = xmax;
    }
    Ok(IntervalTier {
        name: name.to_string(),
        xmin_s: xmin,
        xmax_s: xmax,
        intervals,
    })
}

/// Spreads points that share (or, after an earlier nudge, precede) a time
/// by [`COLLISION_NUDGE_S`], keeping them inside `[xmin, xmax]`.
fn separate_points(points: &mut [Point], xmin: f64, xmax: f64) {
    for i in 1..points.len() {
        if points[i].time_s <= points[i - 1].time_s {
            points[i].time_s = points[i - 1].time_s + COLLISION_NUDGE_S;
        }
    }
    // nudges can push the tail past the end of the file; pull it back
    let mut limit = xmax;
    for p in points.iter_mut().rev() {
        if p.time_s > limit {
            p.time_s = limit;
        }
        limit = p.time_s - COLLISION_NUDGE_S;
    }
    if let Some(first) = points.first() {
        debug_assert!(first.time_s >= xmin - TILING_TOLERANCE_S);
    }
}

/// Renders an ensemble alignment as `words` (when given), `phones` and `ci`
/// tiers. The `ci` tier holds a `<label>-lo` and a `<label>-hi` point per
/// boundary and is omitted when the intervals were suppressed.
pub fn render(
    ea: &EnsembleAlignment,
    words: Option<&WordAlignment>,
    xmin_s: f64,
    xmax_s: f64,
) -> Result<TextGrid, TextGridError> {
    if !(xmin_s < xmax_s) {
        return Err(TextGridError::Range {
            xmin: xmin_s,
            xmax: xmax_s,
        });
    }
    let mut tiers = Vec::new();
    if let Some(w) = words {
        tiers.push(Tier::Interval(interval_tier(
            WORDS_TIER,
            w.words.iter().cloned(),
            &w.end_times_s,
            xmin_s,
            xmax_s,
        )?));
    }
    tiers.push(Tier::Interval(interval_tier(
        PHONES_TIER,
        ea.labels.names().map(str::to_string),
        &ea.median_s,
        xmin_s,
        xmax_s,
    )?));
    if let Some(ci) = &ea.ci {
        let mut points = Vec::with_capacity(2 * ci.lo_s.len());
        for (j, name) in ea.labels.names().enumerate() {
            for (time_s, suffix) in [(ci.lo_s[j], "lo"), (ci.hi_s[j], "hi")] {
                if time_s < xmin_s || time_s > xmax_s + TILING_TOLERANCE_S {
                    return Err(TextGridError::OutOfRange {
                        index: j + 1,
                        time_s,
                        xmin: xmin_s,
                        xmax: xmax_s,
                    });
                }
                points.push(Point {
                    time_s: time_s.min(xmax_s),
                    text: format!("{name}-{suffix}"),
                });
            }
        }
        // stable: a boundary's lo stays ahead of its hi on equal times
        points.sort_by(|a, b| a.time_s.total_cmp(&b.time_s));
        separate_points(&mut points, xmin_s, xmax_s);
        tiers.push(Tier::Point(PointTier {
            name: CI_TIER.to_string(),
            xmin_s,
            xmax_s,
            points,
        }));
    }
    let tg = TextGrid {
        xmin_s,
        xmax_s,
        tiers,
    };
    tg.validate()?;
    Ok(tg)
}
