//! Chunk-level precision/recall/F1 in the style of the CoNLL scorer, with a
//! per-slot breakdown and separate scoring of sentences holding unseen words.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{is_valid_bio, oov_stats, Span, Tag, TaggedSentence};
use crate::model::{Model, ModelError};
use crate::scalar::Scalar;
use crate::vocab::Vocab;

/// A typed token range, `start..=end`.
pub type Chunk = Span;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("contract violation: {0}")]
    Contract(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("report csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("report i/o: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = EvalError> = std::result::Result<T, E>;

/// Maximal `B-X I-X*` runs. Tags must already be valid BIO.
pub fn extract_chunks(tags: &[Tag]) -> Result<Vec<Chunk>> {
    if !is_valid_bio(tags) {
        return Err(EvalError::Contract("invalid BIO sequence; repair before scoring".into()));
    }
    let mut out: Vec<Chunk> = Vec::new();
    for (i, t) in tags.iter().enumerate() {
        match t {
            Tag::O => {}
            Tag::B(s) => out.push(Span::new(s.clone(), i, i)),
            Tag::I(_) => out.last_mut().expect("valid BIO").end = i,
        }
    }
    Ok(out)
}

/// Raw chunk counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub correct: usize,
    pub predicted: usize,
    pub gold: usize,
}

impl Counts {
    fn add(&mut self, o: Counts) {
        self.correct += o.correct;
        self.predicted += o.predicted;
        self.gold += o.gold;
    }

    /// Percentages `(P, R, F1)`. P is 0 with no predictions and R is 0 with
    /// no gold chunks; F1 is 100 when both sides are empty.
    pub fn prf(&self) -> (f64, f64, f64) {
        if self.predicted == 0 && self.gold == 0 {
            return (0.0, 0.0, 100.0);
        }
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { 100.0 * a as f64 / b as f64 };
        let p = ratio(self.correct, self.predicted);
        let r = ratio(self.correct, self.gold);
        let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        (p, r, f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold chunk count.
    pub support: usize,
    pub counts: Counts,
}

impl From<Counts> for Score {
    fn from(counts: Counts) -> Self {
        let (precision, recall, f1) = counts.prf();
        Self {
            precision,
            recall,
            f1,
            support: counts.gold,
            counts,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub overall: Score,
    pub per_type: BTreeMap<String, Score>,
    pub sentences: usize,
}

impl EvalReport {
    pub fn f1(&self) -> f64 {
        self.overall.f1
    }

    /// Per-type scores with at least `min_support` gold chunks.
    pub fn filter_support(&self, min_support: usize) -> BTreeMap<String, Score> {
        self.per_type
            .iter()
            .filter(|(_, s)| s.support >= min_support)
            .map(|(k, s)| (k.clone(), *s))
            .collect()
    }

    /// `scope,slot_type,precision,recall,f1,support`; the overall row uses
    /// slot type `ALL`. Writes the header only when `header` is set.
    pub fn write_csv<W: Write>(&self, scope: &str, w: W, header: bool) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        if header {
            out.write_record(["scope", "slot_type", "precision", "recall", "f1", "support"])?;
        }
        let rows = std::iter::once(("ALL", &self.overall)).chain(self.per_type.iter().map(|(k, s)| (k.as_str(), s)));
        for (name, s) in rows {
            out.write_record([
                scope.to_string(),
                name.to_string(),
                format!("{:.4}", s.precision),
                format!("{:.4}", s.recall),
                format!("{:.4}", s.f1),
                s.support.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<24} {:>8} {:>8} {:>8} {:>8}", "slot", "P", "R", "F1", "support")?;
        let rows = std::iter::once(("ALL", &self.overall)).chain(self.per_type.iter().map(|(k, s)| (k.as_str(), s)));
        for (name, s) in rows {
            writeln!(
                f,
                "{:<24} {:>8.2} {:>8.2} {:>8.2} {:>8}",
                name, s.precision, s.recall, s.f1, s.support
            )?;
        }
        Ok(())
    }
}

fn sentence_counts(gold: &[Tag], pred: &[Tag], per_type: &mut BTreeMap<String, Counts>) -> Result<()> {
    if gold.len() != pred.len() {
        return Err(EvalError::Contract(format!(
            "sentence length mismatch: {} gold vs {} predicted tags",
            gold.len(),
            pred.len()
        )));
    }
    let g = extract_chunks(gold)?;
    let p = extract_chunks(pred)?;
    let gold_set: HashSet<&Chunk> = g.iter().collect();
    for c in &g {
        per_type.entry(c.slot.clone()).or_default().gold += 1;
    }
    for c in &p {
        let e = per_type.entry(c.slot.clone()).or_default();
        e.predicted += 1;
        if gold_set.contains(c) {
            e.correct += 1;
        }
    }
    Ok(())
}

/// Micro-averaged chunk scores over aligned tag sequences.
pub fn conll_f1<G, P>(gold: &[G], pred: &[P]) -> Result<EvalReport>
where
    G: AsRef<[Tag]>,
    P: AsRef<[Tag]>,
{
    if gold.len() != pred.len() {
        return Err(EvalError::Contract(format!(
            "corpus length mismatch: {} gold vs {} predicted sentences",
            gold.len(),
            pred.len()
        )));
    }
    let mut per_type = BTreeMap::new();
    for (g, p) in gold.iter().zip(pred) {
        sentence_counts(g.as_ref(), p.as_ref(), &mut per_type)?;
    }
    let mut total = Counts::default();
    for c in per_type.values() {
        total.add(*c);
    }
    Ok(EvalReport {
        overall: total.into(),
        per_type: per_type.into_iter().map(|(k, c)| (k, c.into())).collect(),
        sentences: gold.len(),
    })
}

/// Per-type scores; with `min_support` set, types with fewer gold chunks
/// are dropped.
pub fn per_slot_f1<G, P>(gold: &[G], pred: &[P], min_support: Option<usize>) -> Result<BTreeMap<String, Score>>
where
    G: AsRef<[Tag]>,
    P: AsRef<[Tag]>,
{
    let r = conll_f1(gold, pred)?;
    Ok(r.filter_support(min_support.unwrap_or(0)))
}

/// Support threshold for the per-slot comparison.
pub const MIN_SLOT_SUPPORT: usize = 100;

/// Tags every sentence with `task`'s head. Sentences are spread across
/// threads; the output order matches the input.
pub fn tag_corpus<T: Scalar>(model: &Model<T>, task: &str, sentences: &[TaggedSentence]) -> Result<Vec<Vec<Tag>>> {
    model.head(task)?;
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(sentences.len().max(1));
    let chunk = sentences.len().div_ceil(threads).max(1);
    let parts: Vec<Result<Vec<Vec<Tag>>>> = std::thread::scope(|s| {
        let handles: Vec<_> = sentences
            .chunks(chunk)
            .map(|part| {
                s.spawn(move || {
                    part.iter()
                        .map(|sent| model.tag(task, &sent.tokens).map_err(EvalError::from))
                        .collect()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("tagging thread panicked")).collect()
    });
    let mut out = Vec::with_capacity(sentences.len());
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Full-test-set report and the report over sentences with at least one
/// token missing from `train_vocab` (absent when there are none).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsetReports {
    pub full: EvalReport,
    pub oov: Option<EvalReport>,
    pub oov_sentences: Vec<usize>,
}

/// Scores already-predicted tags on the full set and the OOV subset.
pub fn score_subsets(test: &[TaggedSentence], pred: &[Vec<Tag>], train_vocab: &Vocab) -> Result<SubsetReports> {
    let gold: Vec<&[Tag]> = test.iter().map(|s| s.tags.as_slice()).collect();
    let full = conll_f1(&gold, pred)?;
    let stats = oov_stats(train_vocab, test);
    let oov = if stats.sentences.is_empty() {
        None
    } else {
        let g: Vec<&[Tag]> = stats.sentences.iter().map(|&i| gold[i]).collect();
        let p: Vec<&[Tag]> = stats.sentences.iter().map(|&i| pred[i].as_slice()).collect();
        Some(conll_f1(&g, &p)?)
    };
    Ok(SubsetReports {
        full,
        oov,
        oov_sentences: stats.sentences,
    })
}

pub fn evaluate_subsets<T: Scalar>(
    model: &Model<T>,
    task: &str,
    test: &[TaggedSentence],
    train_vocab: &Vocab,
) -> Result<SubsetReports> {
    let pred = tag_corpus(model, task, test)?;
    score_subsets(test, &pred, train_vocab)
}

#[cfg(test)]
mod tests;
