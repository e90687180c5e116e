//! Tokenization, normalization, vocabularies and embedding lookup.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::params::{ParamId, ParamStore, UniformInit};
use crate::recurrent::CharEncoder;
use crate::scalar::Scalar;
use crate::tensor::{Axis, Graph, NodeId, TensorError};

/// Literal used for the unknown-word entry in vocabulary files.
pub const UNK_TOKEN: &str = "<unk>";

/// Characters split off the start and end of whitespace-delimited chunks.
pub const EDGE_PUNCTUATION: &[char] = &['.', ',', '!', '?', ';', ':', '\'', '"', '$'];

#[derive(Debug, Error)]
pub enum VocabError {
    #[error("empty token")]
    EmptyToken,
    #[error("cannot build a vocabulary from an empty corpus")]
    EmptyCorpus,
    #[error("vocabulary file line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("vocabulary i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// Lower-cases and replaces every decimal digit with `#`.
pub fn preprocess_token(raw: &str) -> Result<String, VocabError> {
    if raw.is_empty() {
        return Err(VocabError::EmptyToken);
    }
    Ok(raw
        .chars()
        .flat_map(char::to_lowercase)
        .map(|c| if c.is_ascii_digit() { '#' } else { c })
        .collect())
}

/// Splits on whitespace, then detaches leading and trailing
/// [`EDGE_PUNCTUATION`] characters as one-character tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let chars: Vec<char> = chunk.chars().collect();
        let mut lo = 0;
        while lo < chars.len() && EDGE_PUNCTUATION.contains(&chars[lo]) {
            lo += 1;
        }
        let mut hi = chars.len();
        while hi > lo && EDGE_PUNCTUATION.contains(&chars[hi - 1]) {
            hi -= 1;
        }
        out.extend(chars[..lo].iter().map(char::to_string));
        if hi > lo {
            out.push(chars[lo..hi].iter().collect());
        }
        out.extend(chars[hi..].iter().map(char::to_string));
    }
    out
}

/// A token in its original form (for the character path) and normalized
/// form (for the word table).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub raw: String,
    pub norm: String,
}

impl Token {
    pub fn new(raw: impl Into<String>) -> Result<Self, VocabError> {
        let raw = raw.into();
        let norm = preprocess_token(&raw)?;
        Ok(Self { raw, norm })
    }
}

/// Closed word vocabulary. Id 0 is the unknown word; the remaining ids are
/// assigned by descending frequency, ties broken lexicographically.
#[derive(Clone, Debug, PartialEq)]
pub struct Vocab {
    tokens: Vec<String>,
    counts: Vec<usize>,
    index: HashMap<String, usize>,
    min_count: usize,
}

impl Vocab {
    pub const UNK_ID: usize = 0;

    /// Keeps every normalized token seen at least `min_count` times. The
    /// unknown entry's count is the number of training occurrences it absorbs.
    pub fn build<'a, I>(tokens: I, min_count: usize) -> Result<Self, VocabError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut freq: HashMap<&str, usize> = HashMap::new();
        let mut total = 0usize;
        for t in tokens {
            *freq.entry(t).or_default() += 1;
            total += 1;
        }
        if total == 0 {
            return Err(VocabError::EmptyCorpus);
        }
        let mut kept: Vec<(&str, usize)> = freq
            .iter()
            .filter(|(t, &c)| c >= min_count && **t != UNK_TOKEN)
            .map(|(t, &c)| (*t, c))
            .collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let absorbed = total - kept.iter().map(|k| k.1).sum::<usize>();

        let mut vocab = Self {
            tokens: vec![UNK_TOKEN.to_string()],
            counts: vec![absorbed],
            index: HashMap::new(),
            min_count,
        };
        for (t, c) in kept {
            vocab.index.insert(t.to_string(), vocab.tokens.len());
            vocab.tokens.push(t.to_string());
            vocab.counts.push(c);
        }
        Ok(vocab)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn unk_id(&self) -> usize {
        Self::UNK_ID
    }

    pub fn min_count(&self) -> usize {
        self.min_count
    }

    pub fn get(&self, norm: &str) -> Option<usize> {
        self.index.get(norm).copied()
    }

    /// Id of a normalized token, falling back to the unknown id.
    pub fn id(&self, norm: &str) -> usize {
        self.get(norm).unwrap_or(Self::UNK_ID)
    }

    pub fn contains(&self, norm: &str) -> bool {
        self.index.contains_key(norm)
    }

    pub fn token(&self, id: usize) -> &str {
        &self.tokens[id]
    }

    pub fn count(&self, id: usize) -> usize {
        self.counts[id]
    }

    /// Writes `token<TAB>id<TAB>count` lines, unknown entry first.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (id, (t, c)) in self.tokens.iter().zip(&self.counts).enumerate() {
            writeln!(w, "{t}\t{id}\t{c}")?;
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(r: R, min_count: usize) -> Result<Self, VocabError> {
        let mut tokens = Vec::new();
        let mut counts = Vec::new();
        let mut index = HashMap::new();
        for (n, line) in r.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| VocabError::Format {
                line: n + 1,
                msg: msg.to_string(),
            };
            let mut parts = line.split('\t');
            let (Some(t), Some(id), Some(c), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
                return Err(err("expected token<TAB>id<TAB>count"));
            };
            let id: usize = id.parse().map_err(|_| err("bad id"))?;
            let c: usize = c.parse().map_err(|_| err("bad count"))?;
            if id != tokens.len() {
                return Err(err("ids must be dense and ascending"));
            }
            if id == Self::UNK_ID {
                if t != UNK_TOKEN {
                    return Err(err("id 0 must be the unknown token"));
                }
            } else if index.insert(t.to_string(), id).is_some() || t == UNK_TOKEN {
                return Err(err("duplicate token"));
            }
            tokens.push(t.to_string());
            counts.push(c);
        }
        if tokens.is_empty() {
            return Err(VocabError::EmptyCorpus);
        }
        Ok(Self {
            tokens,
            counts,
            index,
            min_count,
        })
    }

    /// Hex SHA-256 of the TSV serialization; checkpoints record it so a model
    /// is never paired with a different vocabulary.
    pub fn content_hash(&self) -> String {
        let mut buf = Vec::new();
        self.write_tsv(&mut buf).expect("write to memory");
        let digest = Sha256::digest(&buf);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Character inventory for the open-vocabulary path. Id 0 is the unknown
/// character; observed characters follow in code point order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CharVocab {
    chars: Vec<char>,
    index: HashMap<char, usize>,
}

impl CharVocab {
    pub const UNK_ID: usize = 0;

    pub fn build<'a, I: IntoIterator<Item = &'a str>>(raw_tokens: I) -> Self {
        let mut seen = BTreeMap::new();
        for t in raw_tokens {
            for c in t.chars() {
                seen.insert(c, ());
            }
        }
        Self::from_chars(seen.into_keys())
    }

    pub fn from_chars<I: IntoIterator<Item = char>>(chars: I) -> Self {
        let mut list: Vec<char> = chars.into_iter().collect();
        list.sort_unstable();
        list.dedup();
        let index = list.iter().enumerate().map(|(i, &c)| (c, i + 1)).collect();
        Self { chars: list, index }
    }

    /// Number of ids including the unknown character.
    pub fn len(&self) -> usize {
        self.chars.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    pub fn id(&self, c: char) -> usize {
        self.index.get(&c).copied().unwrap_or(Self::UNK_ID)
    }

    pub fn ids(&self, word: &str) -> Vec<usize> {
        word.chars().map(|c| self.id(c)).collect()
    }
}

/// A `rows x dim` word embedding matrix held in a parameter store.
#[derive(Clone, Copy, Debug)]
pub struct EmbeddingTable {
    pub param: ParamId,
    pub rows: usize,
    pub dim: usize,
}

impl EmbeddingTable {
    pub fn register<T: Scalar>(
        store: &mut ParamStore<T>,
        name: &str,
        rows: usize,
        dim: usize,
        init: &mut UniformInit,
    ) -> Result<Self, TensorError> {
        let param = store.add(name, init.tensor(&[rows, dim]))?;
        Ok(Self { param, rows, dim })
    }

    /// `len(ids) x dim` rows of the table.
    pub fn gather<T: Scalar>(&self, g: &mut Graph<'_, T>, ids: &[usize]) -> Result<NodeId, TensorError> {
        let table = g.param(self.param)?;
        g.gather_rows(table, ids)
    }
}

/// Closed-vocabulary embedding: the token's row, or the unknown row.
pub fn embed_closed<T: Scalar>(store: &ParamStore<T>, vocab: &Vocab, table: &EmbeddingTable, token: &Token) -> Vec<T> {
    store.get(table.param).row_slice(vocab.id(&token.norm)).to_vec()
}

/// Open-vocabulary embedding: the closed embedding of the normalized token
/// concatenated with the character encoding of the raw token.
pub fn embed_open<T: Scalar>(
    store: &ParamStore<T>,
    vocab: &Vocab,
    table: &EmbeddingTable,
    chars: &CharVocab,
    encoder: &CharEncoder,
    token: &Token,
) -> Result<Vec<T>, TensorError> {
    let mut g = Graph::new(store);
    let word = table.gather(&mut g, &[vocab.id(&token.norm)])?;
    let ch = encoder.encode_word(&mut g, &chars.ids(&token.raw))?;
    let v = g.concat(&[word, ch], Axis::Cols)?;
    Ok(g.value(v).data().to_vec())
}

/// Character-based embedding of a raw word.
pub fn char_word_encode<T: Scalar>(
    store: &ParamStore<T>,
    chars: &CharVocab,
    encoder: &CharEncoder,
    word: &str,
) -> Result<Vec<T>, TensorError> {
    let mut g = Graph::new(store);
    let v = encoder.encode_word(&mut g, &chars.ids(word))?;
    Ok(g.value(v).data().to_vec())
}
