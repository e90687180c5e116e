//! Slot markup, BIO tagging, corpus files, splits and OOV statistics.
//!
//! Markup sentences carry flat inline spans:
//! `please book flight from <FromLoc> burbank </FromLoc>`.

mod synth;

use std::fmt;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vocab::{tokenize, Token, Vocab, VocabError};

pub use synth::{
    default_suite, generate_synthetic, AppSpec, GeneratorOptions, MorphemeFamily, SlotSpec, SuiteScale, ANCHOR_APP,
};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("markup error at column {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("{0}")]
    Contract(String),
    #[error("generator config: {0}")]
    Config(String),
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error(transparent)]
    Vocab(#[from] VocabError),
    #[error("corpus i/o: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = CorpusError> = std::result::Result<T, E>;

/// A BIO label.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tag {
    O,
    B(String),
    I(String),
}

impl Tag {
    pub fn slot(&self) -> Option<&str> {
        match self {
            Tag::O => None,
            Tag::B(s) | Tag::I(s) => Some(s),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "O" => Ok(Tag::O),
            _ => match s.split_once('-') {
                Some(("B", t)) if !t.is_empty() => Ok(Tag::B(t.to_string())),
                Some(("I", t)) if !t.is_empty() => Ok(Tag::I(t.to_string())),
                _ => Err(CorpusError::Contract(format!("not a BIO label: {s:?}"))),
            },
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::O => f.write_str("O"),
            Tag::B(s) => write!(f, "B-{s}"),
            Tag::I(s) => write!(f, "I-{s}"),
        }
    }
}

/// True when every `I-X` follows `B-X` or `I-X`.
pub fn is_valid_bio(tags: &[Tag]) -> bool {
    let mut prev: Option<&str> = None;
    for t in tags {
        match t {
            Tag::O => prev = None,
            Tag::B(s) => prev = Some(s),
            Tag::I(s) => {
                if prev != Some(s.as_str()) {
                    return false;
                }
            }
        }
    }
    true
}

/// A typed token range, `start..=end`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub slot: String,
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(slot: impl Into<String>, start: usize, end: usize) -> Self {
        Self {
            slot: slot.into(),
            start,
            end,
        }
    }
}

/// Result of [`parse_markup`].
#[derive(Clone, Debug, PartialEq)]
pub struct Markup {
    pub tokens: Vec<Token>,
    pub spans: Vec<Span>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedSentence {
    pub tokens: Vec<Token>,
    pub tags: Vec<Tag>,
    pub task: String,
}

impl TaggedSentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Spans recovered from the tags, in order.
    pub fn spans(&self) -> Vec<Span> {
        let mut out: Vec<Span> = Vec::new();
        for (i, t) in self.tags.iter().enumerate() {
            match t {
                Tag::O => {}
                Tag::B(s) => out.push(Span::new(s.clone(), i, i)),
                Tag::I(_) => {
                    if let Some(last) = out.last_mut() {
                        last.end = i;
                    }
                }
            }
        }
        out
    }

    /// Markup form of the sentence; raw tokens joined by single spaces.
    pub fn to_markup(&self) -> String {
        let spans = self.spans();
        let mut parts: Vec<String> = Vec::with_capacity(self.tokens.len() + 2 * spans.len());
        let mut next = spans.iter().peekable();
        let mut open: Option<&Span> = None;
        for (i, tok) in self.tokens.iter().enumerate() {
            if let Some(s) = next.next_if(|s| s.start == i) {
                parts.push(format!("<{}>", s.slot));
                open = Some(s);
            }
            parts.push(tok.raw.clone());
            if let Some(s) = open.filter(|s| s.end == i) {
                parts.push(format!("</{}>", s.slot));
                open = None;
            }
        }
        parts.join(" ")
    }
}

fn tag_name(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic()) && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Parses one markup line into tokens and slot spans. Tags must be flat,
/// balanced and non-empty.
pub fn parse_markup(line: &str) -> Result<Markup> {
    let mut tokens = Vec::new();
    let mut spans = Vec::new();
    let mut open: Option<(String, usize, usize)> = None; // slot, first token, column
    let mut text = String::new();

    let flush = |text: &mut String, tokens: &mut Vec<Token>| -> Result<()> {
        for t in tokenize(text) {
            tokens.push(Token::new(t)?);
        }
        text.clear();
        Ok(())
    };

    let mut rest = line;
    let mut col = 0usize;
    while let Some(lt) = rest.find('<') {
        let after = &rest[lt + 1..];
        let tag = after.find('>').map(|gt| &after[..gt]).filter(|inner| {
            let name = inner.strip_prefix('/').unwrap_or(inner);
            tag_name(name)
        });
        let Some(inner) = tag else {
            // a bare '<' is ordinary text
            text.push_str(&rest[..=lt]);
            col += rest[..=lt].chars().count();
            rest = &rest[lt + 1..];
            continue;
        };
        text.push_str(&rest[..lt]);
        col += rest[..lt].chars().count();
        flush(&mut text, &mut tokens)?;
        if let Some(name) = inner.strip_prefix('/') {
            match open.take() {
                None => {
                    return Err(CorpusError::Parse {
                        pos: col,
                        msg: format!("closing </{name}> without an open tag"),
                    })
                }
                Some((slot, _, at)) if slot != name => {
                    return Err(CorpusError::Parse {
                        pos: col,
                        msg: format!("</{name}> does not match <{slot}> opened at column {at}"),
                    })
                }
                Some((slot, start, at)) => {
                    if tokens.len() == start {
                        return Err(CorpusError::Parse {
                            pos: at,
                            msg: format!("<{slot}> encloses no tokens"),
                        });
                    }
                    spans.push(Span::new(slot, start, tokens.len() - 1));
                }
            }
        } else {
            if let Some((slot, _, at)) = &open {
                return Err(CorpusError::Parse {
                    pos: col,
                    msg: format!("<{inner}> nested inside <{slot}> opened at column {at}"),
                });
            }
            open = Some((inner.to_string(), tokens.len(), col));
        }
        let consumed = lt + 2 + inner.len();
        col += rest[lt..consumed].chars().count();
        rest = &rest[consumed..];
    }
    text.push_str(rest);
    flush(&mut text, &mut tokens)?;
    if let Some((slot, _, at)) = open {
        return Err(CorpusError::Parse {
            pos: at,
            msg: format!("<{slot}> is never closed"),
        });
    }
    Ok(Markup { tokens, spans })
}

/// BIO tags for a parsed sentence.
pub fn to_bio(markup: &Markup, task: &str) -> Result<TaggedSentence> {
    let mut tags = vec![Tag::O; markup.tokens.len()];
    let mut sorted = markup.spans.clone();
    sorted.sort_by_key(|s| (s.start, s.end));
    let mut last_end: Option<usize> = None;
    for s in &sorted {
        if s.start > s.end || s.end >= tags.len() {
            return Err(CorpusError::Contract(format!(
                "span {}..={} out of range for {} tokens",
                s.start,
                s.end,
                tags.len()
            )));
        }
        if last_end.is_some_and(|e| s.start <= e) {
            return Err(CorpusError::Contract(format!(
                "overlapping spans at token {} ({})",
                s.start, s.slot
            )));
        }
        tags[s.start] = Tag::B(s.slot.clone());
        for t in &mut tags[s.start + 1..=s.end] {
            *t = Tag::I(s.slot.clone());
        }
        last_end = Some(s.end);
    }
    Ok(TaggedSentence {
        tokens: markup.tokens.clone(),
        tags,
        task: task.to_string(),
    })
}

/// All sentences of one app.
#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    pub app: String,
    pub sentences: Vec<TaggedSentence>,
}

impl Corpus {
    pub fn from_markup_lines<I, S>(app: &str, lines: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut sentences = Vec::new();
        for (i, line) in lines.into_iter().enumerate() {
            let line = line.as_ref();
            if line.trim().is_empty() {
                continue;
            }
            let m = parse_markup(line).map_err(|e| CorpusError::Format {
                line: i + 1,
                msg: e.to_string(),
            })?;
            if m.tokens.is_empty() {
                continue;
            }
            sentences.push(to_bio(&m, app)?);
        }
        Ok(Self {
            app: app.to_string(),
            sentences,
        })
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// Reads a markup corpus file: a `#app:<name>` header, then one sentence
    /// per line.
    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        let app = header
            .strip_prefix("#app:")
            .map(str::trim)
            .filter(|a| !a.is_empty())
            .ok_or_else(|| CorpusError::Format {
                line: 1,
                msg: "expected #app:<name> header".into(),
            })?
            .to_string();
        let mut sentences = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let m = parse_markup(&line).map_err(|e| CorpusError::Format {
                line: i + 2,
                msg: e.to_string(),
            })?;
            sentences.push(to_bio(&m, &app)?);
        }
        Ok(Self { app, sentences })
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "#app:{}", self.app)?;
        for s in &self.sentences {
            writeln!(w, "{}", s.to_markup())?;
        }
        Ok(())
    }

    /// Two-column `token<TAB>tag` exchange format, blank line between sentences.
    pub fn write_conll<W: Write>(&self, mut w: W) -> Result<()> {
        for s in &self.sentences {
            for (t, tag) in s.tokens.iter().zip(&s.tags) {
                writeln!(w, "{}\t{}", t.raw, tag)?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read_conll<R: BufRead>(app: &str, r: R) -> Result<Self> {
        let mut sentences = Vec::new();
        let mut cur = TaggedSentence {
            tokens: Vec::new(),
            tags: Vec::new(),
            task: app.to_string(),
        };
        let mut finish = |cur: &mut TaggedSentence, line: usize| -> Result<()> {
            if cur.is_empty() {
                return Ok(());
            }
            if !is_valid_bio(&cur.tags) {
                return Err(CorpusError::Format {
                    line,
                    msg: "invalid BIO sequence".into(),
                });
            }
            let next = TaggedSentence {
                tokens: Vec::new(),
                tags: Vec::new(),
                task: app.to_string(),
            };
            sentences.push(std::mem::replace(cur, next));
            Ok(())
        };
        let mut n = 0;
        for (i, line) in r.lines().enumerate() {
            n = i + 1;
            let line = line?;
            if line.trim().is_empty() {
                finish(&mut cur, n)?;
                continue;
            }
            let (tok, tag) = line.split_once('\t').ok_or_else(|| CorpusError::Format {
                line: n,
                msg: "expected token<TAB>tag".into(),
            })?;
            cur.tokens.push(Token::new(tok)?);
            cur.tags.push(Tag::parse(tag).map_err(|e| CorpusError::Format {
                line: n,
                msg: e.to_string(),
            })?);
        }
        finish(&mut cur, n + 1)?;
        Ok(Self {
            app: app.to_string(),
            sentences,
        })
    }

    /// Slot types that occur in this corpus, sorted.
    pub fn slot_types(&self) -> Vec<String> {
        let mut set: Vec<String> = self
            .sentences
            .iter()
            .flat_map(|s| s.tags.iter().filter_map(|t| t.slot().map(str::to_string)))
            .collect();
        set.sort();
        set.dedup();
        set
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusSplit {
    pub train: Vec<TaggedSentence>,
    pub test: Vec<TaggedSentence>,
    pub seed: u64,
}

/// Number of training sentences for `n` sentences at `frac`, floored and
/// kept within `1..n`.
pub fn train_size(n: usize, frac: f64) -> usize {
    ((n as f64 * frac + 1e-9).floor() as usize).clamp(1, n - 1)
}

/// Seeded shuffle followed by a prefix split.
pub fn split_corpus(sentences: &[TaggedSentence], train_frac: f64, seed: u64) -> Result<CorpusSplit> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(CorpusError::Contract(format!("train fraction {train_frac} not in (0, 1)")));
    }
    if sentences.len() < 2 {
        return Err(CorpusError::Contract(format!(
            "cannot split a corpus of {} sentence(s)",
            sentences.len()
        )));
    }
    let mut order: Vec<usize> = (0..sentences.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let k = train_size(sentences.len(), train_frac);
    Ok(CorpusSplit {
        train: order[..k].iter().map(|&i| sentences[i].clone()).collect(),
        test: order[k..].iter().map(|&i| sentences[i].clone()).collect(),
        seed,
    })
}

/// Out-of-vocabulary statistics of a test set against a training vocabulary.
#[derive(Clone, Debug, PartialEq)]
pub struct OovStats {
    pub oov_tokens: usize,
    pub total_tokens: usize,
    /// Indices of test sentences holding at least one OOV token.
    pub sentences: Vec<usize>,
}

impl OovStats {
    pub fn rate(&self) -> f64 {
        if self.total_tokens == 0 {
            0.0
        } else {
            self.oov_tokens as f64 / self.total_tokens as f64
        }
    }
}

pub fn oov_stats(vocab: &Vocab, test: &[TaggedSentence]) -> OovStats {
    let mut stats = OovStats {
        oov_tokens: 0,
        total_tokens: 0,
        sentences: Vec::new(),
    };
    for (i, s) in test.iter().enumerate() {
        let oov = s.tokens.iter().filter(|t| !vocab.contains(&t.norm)).count();
        stats.oov_tokens += oov;
        stats.total_tokens += s.len();
        if oov > 0 {
            stats.sentences.push(i);
        }
    }
    stats
}

/// Vocabulary over the normalized tokens of the given sentences.
pub fn build_vocab<'a, I>(sentences: I, min_count: usize) -> Result<Vocab>
where
    I: IntoIterator<Item = &'a TaggedSentence>,
{
    Ok(Vocab::build(
        sentences
            .into_iter()
            .flat_map(|s| s.tokens.iter().map(|t| t.norm.as_str())),
        min_count,
    )?)
}

#[cfg(test)]
mod tests;
