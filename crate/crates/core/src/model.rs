//! Single- and multi-task taggers: shared word (and optionally character)
//! embeddings, a shared bi-LSTM, and one softmax head per task.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Tag, TaggedSentence};
use crate::params::{CheckpointError, ParamId, ParamStore, UniformInit};
use crate::recurrent::{BiLstm, CharDims, CharEncoder, LstmpDims};
use crate::scalar::Scalar;
use crate::tensor::{Axis, Graph, NodeId, Tensor, TensorError};
use crate::vocab::{CharVocab, EmbeddingTable, Token, Vocab};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model config: {0}")]
    Config(String),
    #[error("unknown task {0:?}")]
    UnknownTask(String),
    #[error("task {task}: label {label} is not in the head's label set")]
    UnknownLabel { task: String, label: String },
    #[error("cannot tag an empty sentence")]
    EmptySentence,
    #[error("checkpoint vocabulary hash {found} does not match the supplied vocabulary {expected}")]
    VocabMismatch { expected: String, found: String },
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("checkpoint metadata: {0}")]
    Meta(#[from] serde_json::Error),
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Single,
    Multi,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VocabMode {
    Closed,
    Open,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Single => "single",
            Mode::Multi => "multi",
        })
    }
}

impl std::fmt::Display for VocabMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            VocabMode::Closed => "closed",
            VocabMode::Open => "open",
        })
    }
}

/// A task and the slot types its head predicts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskLabels {
    pub task: String,
    pub slots: Vec<String>,
}

impl TaskLabels {
    pub fn new(task: impl Into<String>, slots: &[impl AsRef<str>]) -> Self {
        let mut slots: Vec<String> = slots.iter().map(|s| s.as_ref().to_string()).collect();
        slots.sort();
        slots.dedup();
        Self {
            task: task.into(),
            slots,
        }
    }

    /// `O`, then `B-X`, `I-X` for each slot type in sorted order.
    pub fn labels(&self) -> Vec<Tag> {
        let mut out = vec![Tag::O];
        for s in &self.slots {
            out.push(Tag::B(s.clone()));
            out.push(Tag::I(s.clone()));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub mode: Mode,
    pub vocab_mode: VocabMode,
    /// Word-table width. In open mode the character encoder adds
    /// `char_dims.output` more columns.
    pub word_dim: usize,
    pub cell_dim: usize,
    pub proj_dim: usize,
    pub char_dims: CharDims,
    pub peepholes: bool,
    pub init_range: f64,
    pub tasks: Vec<TaskLabels>,
}

impl ModelConfig {
    /// The published dimensions: 60/100/70 for a single task, 200/250/170
    /// shared across tasks, and 160 word + 40 character columns in open mode.
    pub fn paper(mode: Mode, vocab_mode: VocabMode, tasks: Vec<TaskLabels>) -> Self {
        let (word, cell, proj) = match mode {
            Mode::Single => (60, 100, 70),
            Mode::Multi => (200, 250, 170),
        };
        let word = match vocab_mode {
            VocabMode::Closed => word,
            VocabMode::Open => 160,
        };
        Self {
            mode,
            vocab_mode,
            word_dim: word,
            cell_dim: cell,
            proj_dim: proj,
            char_dims: CharDims::PAPER,
            peepholes: true,
            init_range: 0.1,
            tasks,
        }
    }

    /// Reduced widths that keep a full multi-seed experiment on one laptop
    /// core. Same layer structure and hyperparameters as [`Self::paper`].
    pub fn desk(mode: Mode, vocab_mode: VocabMode, tasks: Vec<TaskLabels>) -> Self {
        let (word, cell, proj) = match mode {
            Mode::Single => (30, 50, 35),
            Mode::Multi => (50, 64, 40),
        };
        let char_dims = CharDims {
            embed: 10,
            layer1_cell: 20,
            layer1_proj: 10,
            layer2_cell: 24,
            output: 20,
        };
        let word = match vocab_mode {
            VocabMode::Closed => word,
            VocabMode::Open => word - char_dims.output,
        };
        Self {
            word_dim: word,
            cell_dim: cell,
            proj_dim: proj,
            char_dims,
            ..Self::paper(mode, vocab_mode, tasks)
        }
    }

    /// Width of one token's input to the bi-LSTM.
    pub fn input_dim(&self) -> usize {
        match self.vocab_mode {
            VocabMode::Closed => self.word_dim,
            VocabMode::Open => self.word_dim + self.char_dims.output,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: &str| Err(ModelError::Config(m.to_string()));
        if self.word_dim == 0 || self.cell_dim == 0 || self.proj_dim == 0 {
            return err("dimensions must be positive");
        }
        if self.vocab_mode == VocabMode::Open {
            let c = self.char_dims;
            if [c.embed, c.layer1_cell, c.layer1_proj, c.layer2_cell, c.output].contains(&0) {
                return err("character encoder dimensions must be positive");
            }
        }
        if !(self.init_range > 0.0) {
            return err("init range must be positive");
        }
        if self.tasks.is_empty() {
            return err("at least one task is required");
        }
        if self.mode == Mode::Single && self.tasks.len() != 1 {
            return err("single-task mode takes exactly one task");
        }
        let mut names: Vec<&str> = self.tasks.iter().map(|t| t.task.as_str()).collect();
        names.sort();
        names.dedup();
        if names.len() != self.tasks.len() {
            return err("task names must be unique");
        }
        Ok(())
    }
}

/// Softmax layer of one task: `W` is `labels x 2*proj`, `b` is `labels`.
#[derive(Clone, Debug)]
pub struct TaskHead {
    pub task: String,
    pub labels: Vec<Tag>,
    pub w: ParamId,
    pub b: ParamId,
    index: HashMap<Tag, usize>,
}

impl TaskHead {
    pub fn label_index(&self, tag: &Tag) -> Option<usize> {
        self.index.get(tag).copied()
    }
}

/// A tagger together with the vocabularies it was built for.
#[derive(Clone, Debug)]
pub struct Model<T: Scalar> {
    pub config: ModelConfig,
    pub store: ParamStore<T>,
    pub vocab: Vocab,
    pub chars: Option<CharVocab>,
    embed: EmbeddingTable,
    char_encoder: Option<CharEncoder>,
    encoder: BiLstm,
    heads: Vec<TaskHead>,
}

/// Parameter counts by component.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamCounts {
    pub shared: usize,
    pub per_task: BTreeMap<String, usize>,
    pub total: usize,
    /// Share of the parameters a single task uses that are shared:
    /// `shared / (shared + head)`, minimised over tasks.
    pub shared_fraction: f64,
    /// `shared / total` over the whole model.
    pub overall_shared_fraction: f64,
}

/// Builds a model with every parameter drawn i.i.d. from
/// `uniform[-init_range, init_range]` in a fixed order from `seed`.
pub fn assemble_model<T: Scalar>(
    config: ModelConfig,
    vocab: Vocab,
    chars: Option<CharVocab>,
    seed: u64,
) -> Result<Model<T>> {
    config.validate()?;
    let chars = match (config.vocab_mode, chars) {
        (VocabMode::Open, None) => return Err(ModelError::Config("open vocabulary needs a character set".into())),
        (VocabMode::Open, Some(c)) => Some(c),
        (VocabMode::Closed, _) => None,
    };
    let mut init = UniformInit::new(seed, config.init_range);
    let mut store = ParamStore::new();
    let embed = EmbeddingTable::register(&mut store, "embed/words", vocab.len(), config.word_dim, &mut init)?;
    let char_encoder = match &chars {
        Some(c) => Some(CharEncoder::register(
            &mut store,
            "embed/chars",
            config.char_dims,
            c.len(),
            config.peepholes,
            &mut init,
        )?),
        None => None,
    };
    let dims = LstmpDims::new(config.input_dim(), config.cell_dim, Some(config.proj_dim));
    let encoder = BiLstm::register(&mut store, "encoder", dims, config.peepholes, &mut init)?;
    let mut heads = Vec::with_capacity(config.tasks.len());
    for t in &config.tasks {
        let labels = t.labels();
        let w = store.add(
            format!("head/{}/W", t.task),
            init.tensor(&[labels.len(), encoder.output_dim()]),
        )?;
        let b = store.add(format!("head/{}/b", t.task), init.tensor(&[labels.len()]))?;
        let index = labels.iter().cloned().enumerate().map(|(i, l)| (l, i)).collect();
        heads.push(TaskHead {
            task: t.task.clone(),
            labels,
            w,
            b,
            index,
        });
    }
    Ok(Model {
        config,
        store,
        vocab,
        chars,
        embed,
        char_encoder,
        encoder,
        heads,
    })
}

/// Dropout state for a training-time forward pass.
pub struct Dropout<'r, R: Rng> {
    pub p: f64,
    pub rng: &'r mut R,
}

impl<T: Scalar> Model<T> {
    pub fn heads(&self) -> &[TaskHead] {
        &self.heads
    }

    pub fn head(&self, task: &str) -> Result<&TaskHead> {
        self.heads
            .iter()
            .find(|h| h.task == task)
            .ok_or_else(|| ModelError::UnknownTask(task.to_string()))
    }

    pub fn encoder(&self) -> &BiLstm {
        &self.encoder
    }

    pub fn embedding(&self) -> &EmbeddingTable {
        &self.embed
    }

    pub fn char_encoder(&self) -> Option<&CharEncoder> {
        self.char_encoder.as_ref()
    }

    /// Ids of the parameters used by every task.
    pub fn shared_param_ids(&self) -> Vec<ParamId> {
        let mut ids = vec![self.embed.param];
        if let Some(c) = &self.char_encoder {
            ids.extend(c.param_ids());
        }
        ids.extend(self.encoder.param_ids());
        ids
    }

    /// `tokens.len() x 2*proj` encoder output. `cache` reuses character
    /// encodings of repeated words within one graph.
    pub fn encode<R: Rng>(
        &self,
        g: &mut Graph<'_, T>,
        tokens: &[Token],
        cache: &mut HashMap<String, NodeId>,
        mut dropout: Option<&mut Dropout<'_, R>>,
    ) -> Result<NodeId> {
        if tokens.is_empty() {
            return Err(ModelError::EmptySentence);
        }
        let ids: Vec<usize> = tokens.iter().map(|t| self.vocab.id(&t.norm)).collect();
        let mut x = self.embed.gather(g, &ids)?;
        if let (Some(enc), Some(chars)) = (&self.char_encoder, &self.chars) {
            let mut rows = Vec::with_capacity(tokens.len());
            for t in tokens {
                let node = match cache.get(&t.raw) {
                    Some(&n) => n,
                    None => {
                        let n = enc.encode_word(g, &chars.ids(&t.raw))?;
                        cache.insert(t.raw.clone(), n);
                        n
                    }
                };
                rows.push(node);
            }
            let c = if rows.len() == 1 {
                rows[0]
            } else {
                g.concat(&rows, Axis::Rows)?
            };
            x = g.concat(&[x, c], Axis::Cols)?;
        }
        if let Some(d) = dropout.as_deref_mut() {
            x = g.dropout(x, d.p, d.rng)?;
        }
        let mut h = self.encoder.encode(g, x)?;
        if let Some(d) = dropout {
            h = g.dropout(h, d.p, d.rng)?;
        }
        Ok(h)
    }

    /// Raw label scores (`tokens x labels`) of one task's head.
    pub fn head_logits(&self, g: &mut Graph<'_, T>, task: &str, h: NodeId) -> Result<NodeId> {
        let head = self.head(task)?;
        let w = g.param(head.w)?;
        let b = g.param(head.b)?;
        let z = g.matmul_nt(h, w)?;
        Ok(g.add(z, b)?)
    }

    /// Summed token cross-entropy of one sentence divided by its length.
    pub fn sentence_loss<R: Rng>(
        &self,
        g: &mut Graph<'_, T>,
        sentence: &TaggedSentence,
        cache: &mut HashMap<String, NodeId>,
        dropout: Option<&mut Dropout<'_, R>>,
    ) -> Result<NodeId> {
        let head = self.head(&sentence.task)?;
        let targets = sentence
            .tags
            .iter()
            .map(|t| {
                head.label_index(t).ok_or_else(|| ModelError::UnknownLabel {
                    task: sentence.task.clone(),
                    label: t.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let h = self.encode(g, &sentence.tokens, cache, dropout)?;
        let z = self.head_logits(g, &sentence.task, h)?;
        let loss = g.softmax_xent(z, &targets)?;
        Ok(g.scale(loss, T::lit(1.0 / sentence.len() as f64))?)
    }

    /// Inference-time encoder output as a tensor.
    pub fn encoder_output(&self, tokens: &[Token]) -> Result<Tensor<T>> {
        let mut g = Graph::new(&self.store);
        let h = self.encode::<rand_chacha::ChaCha8Rng>(&mut g, tokens, &mut HashMap::new(), None)?;
        Ok(g.value(h).clone())
    }

    /// Per-token label scores; softmax is left to the caller.
    pub fn tag_logits(&self, task: &str, tokens: &[Token]) -> Result<Vec<Vec<T>>> {
        self.head(task)?;
        let mut g = Graph::new(&self.store);
        let h = self.encode::<rand_chacha::ChaCha8Rng>(&mut g, tokens, &mut HashMap::new(), None)?;
        let z = self.head_logits(&mut g, task, h)?;
        let v = g.value(z);
        Ok((0..tokens.len()).map(|r| v.row_slice(r).to_vec()).collect())
    }

    /// Greedy decode followed by BIO repair.
    pub fn tag(&self, task: &str, tokens: &[Token]) -> Result<Vec<Tag>> {
        let scores = self.tag_logits(task, tokens)?;
        Ok(bio_repair(&greedy_decode(&scores, &self.head(task)?.labels)))
    }

    pub fn count_parameters(&self) -> ParamCounts {
        count_parameters(self)
    }

    /// Writes the checkpoint; metadata records the config, the vocabulary
    /// hash, label orders and the character set.
    pub fn save<W: Write>(&self, w: W) -> Result<()> {
        let meta = CheckpointMeta {
            config: self.config.clone(),
            vocab_hash: self.vocab.content_hash(),
            labels: self
                .heads
                .iter()
                .map(|h| (h.task.clone(), h.labels.iter().map(Tag::to_string).collect()))
                .collect(),
            chars: self.chars.as_ref().map(|c| c.chars().iter().collect()),
        };
        self.store.write_checkpoint(w, &serde_json::to_string(&meta)?)?;
        Ok(())
    }

    /// Reads a checkpoint written by [`Self::save`]; `vocab` must be the
    /// vocabulary the model was trained with.
    pub fn load<R: Read>(r: R, vocab: Vocab) -> Result<Self> {
        let (meta, stored) = ParamStore::<T>::read_checkpoint(r)?;
        let meta: CheckpointMeta = serde_json::from_str(&meta)?;
        let expected = vocab.content_hash();
        if meta.vocab_hash != expected {
            return Err(ModelError::VocabMismatch {
                expected,
                found: meta.vocab_hash,
            });
        }
        let chars = meta.chars.map(|s| CharVocab::from_chars(s.chars()));
        let mut model = assemble_model::<T>(meta.config, vocab, chars, 0)?;
        for h in &model.heads {
            let want: Vec<String> = h.labels.iter().map(Tag::to_string).collect();
            if meta.labels.get(&h.task) != Some(&want) {
                return Err(ModelError::Config(format!("label order for {} differs", h.task)));
            }
        }
        if stored.len() != model.store.len() {
            return Err(ModelError::Config(format!(
                "checkpoint holds {} tensors, model expects {}",
                stored.len(),
                model.store.len()
            )));
        }
        model.store.load_values_from(&stored)?;
        Ok(model)
    }
}

#[derive(Serialize, Deserialize)]
struct CheckpointMeta {
    config: ModelConfig,
    vocab_hash: String,
    labels: BTreeMap<String, Vec<String>>,
    chars: Option<String>,
}

/// Per-position argmax; ties go to the lowest label index.
pub fn greedy_decode<T: Scalar>(scores: &[Vec<T>], labels: &[Tag]) -> Vec<Tag> {
    scores
        .iter()
        .map(|row| {
            let mut best = 0;
            for (i, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = i;
                }
            }
            labels[best].clone()
        })
        .collect()
}

/// Left-to-right scan replacing any `I-X` whose (already repaired)
/// predecessor is not `B-X` or `I-X` with `O`.
pub fn bio_repair(tags: &[Tag]) -> Vec<Tag> {
    let mut out: Vec<Tag> = Vec::with_capacity(tags.len());
    for t in tags {
        let fixed = match t {
            Tag::I(x) => {
                let ok = out.last().and_then(Tag::slot) == Some(x.as_str());
                if ok {
                    t.clone()
                } else {
                    Tag::O
                }
            }
            other => other.clone(),
        };
        out.push(fixed);
    }
    out
}

pub fn count_parameters<T: Scalar>(m: &Model<T>) -> ParamCounts {
    let shared: usize = m.shared_param_ids().iter().map(|&id| m.store.get(id).len()).sum();
    let per_task: BTreeMap<String, usize> = m
        .heads
        .iter()
        .map(|h| (h.task.clone(), m.store.get(h.w).len() + m.store.get(h.b).len()))
        .collect();
    let total = shared + per_task.values().sum::<usize>();
    let shared_fraction = per_task
        .values()
        .map(|&h| shared as f64 / (shared + h) as f64)
        .fold(1.0, f64::min);
    ParamCounts {
        shared,
        per_task,
        total,
        shared_fraction,
        overall_shared_fraction: shared as f64 / total as f64,
    }
}
