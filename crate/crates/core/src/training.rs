//! Minibatch SGD with a step-decayed learning rate, dropout, and round-robin
//! alternation between tasks.

use std::collections::HashMap;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::TaggedSentence;
use crate::model::{Dropout, Model, ModelError};
use crate::scalar::Scalar;
use crate::tensor::{dropout_mask, Graph, TensorError};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training config: {0}")]
    Config(String),
    #[error("numeric failure at step {step} (task {task}): {msg}")]
    Numeric { step: usize, task: String, msg: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("train log i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("train log csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = TrainError> = std::result::Result<T, E>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub lr0: f64,
    /// Multiplier applied every `decay_every` minibatches.
    pub decay: f64,
    pub decay_every: usize,
    pub dropout: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Optional cap on the global gradient norm.
    pub clip: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 25,
            lr0: 0.3,
            decay: 0.98,
            decay_every: 100,
            dropout: 0.6,
            epochs: 10,
            seed: 0,
            clip: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let err = |m: &str| Err(TrainError::Config(m.to_string()));
        if self.batch_size == 0 || self.decay_every == 0 {
            return err("batch size and decay interval must be positive");
        }
        if !(self.lr0 > 0.0) {
            return err("learning rate must be positive");
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return err("decay must lie in (0, 1]");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return err("dropout must lie in [0, 1)");
        }
        if self.clip.is_some_and(|c| !(c > 0.0)) {
            return err("clip must be positive");
        }
        Ok(())
    }

    /// `lr0 * decay^floor(step / decay_every)`.
    pub fn lr(&self, step: usize) -> f64 {
        self.lr0 * self.decay.powi((step / self.decay_every) as i32)
    }
}

/// The default schedule: `0.3 * 0.98^floor(step / 100)`.
pub fn lr_schedule(step: usize) -> f64 {
    TrainConfig::default().lr(step)
}

/// Inverted dropout on a plain vector; identity at inference or `p == 0`.
pub fn apply_dropout<T: Scalar, R: Rng + ?Sized>(v: &[T], p: f64, rng: &mut R, training: bool) -> Vec<T> {
    if !training || p == 0.0 {
        return v.to_vec();
    }
    let mask: Vec<T> = dropout_mask(v.len(), p, rng);
    v.iter().zip(mask).map(|(&x, m)| x * m).collect()
}

/// Shuffled sentence indices cut into batches; the last batch may be short.
pub fn make_minibatches<R: Rng + ?Sized>(n: usize, batch_size: usize, rng: &mut R) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order.chunks(batch_size.max(1)).map(<[usize]>::to_vec).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub task: String,
    /// Batch loss divided by the number of sentences in the batch.
    pub loss: f64,
    pub lr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub epoch: usize,
    pub split: String,
    pub f1: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub steps: Vec<StepRecord>,
    /// Mean of the step losses of each epoch.
    pub epoch_loss: Vec<f64>,
    pub evals: Vec<EvalRecord>,
}

impl TrainLog {
    /// `step,task,loss,lr`
    pub fn write_steps_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["step", "task", "loss", "lr"])?;
        for s in &self.steps {
            out.write_record([s.step.to_string(), s.task.clone(), s.loss.to_string(), s.lr.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }

    /// `epoch,split,f1`
    pub fn write_epochs_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["epoch", "split", "f1"])?;
        for e in &self.evals {
            out.write_record([e.epoch.to_string(), e.split.clone(), e.f1.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Training data of one task.
#[derive(Clone, Copy, Debug)]
pub struct TaskData<'a> {
    pub task: &'a str,
    pub sentences: &'a [TaggedSentence],
}

/// Called after every epoch with the epoch number (from 1); returns
/// `(split, f1)` pairs to log.
pub type EpochHook<'h, T> = dyn FnMut(usize, &Model<T>) -> Result<Vec<(String, f64)>> + 'h;

/// A task's reshuffling batch stream.
struct Stream<'a> {
    data: TaskData<'a>,
    order: Vec<usize>,
    pos: usize,
}

impl<'a> Stream<'a> {
    fn new(data: TaskData<'a>) -> Self {
        Self {
            data,
            order: Vec::new(),
            pos: 0,
        }
    }

    fn next_batch<R: Rng>(&mut self, size: usize, rng: &mut R) -> Vec<&'a TaggedSentence> {
        if self.pos >= self.order.len() {
            self.order = (0..self.data.sentences.len()).collect();
            self.order.shuffle(rng);
            self.pos = 0;
        }
        let end = (self.pos + size).min(self.order.len());
        let batch = self.order[self.pos..end]
            .iter()
            .map(|&i| &self.data.sentences[i])
            .collect();
        self.pos = end;
        batch
    }
}

fn batches_per_epoch(n: usize, batch: usize) -> usize {
    n.div_ceil(batch)
}

/// One SGD update on `batch`; returns the summed per-sentence loss.
fn sgd_update<T: Scalar>(
    model: &mut Model<T>,
    batch: &[&TaggedSentence],
    lr: f64,
    cfg: &TrainConfig,
    dropout_rng: &mut ChaCha8Rng,
) -> std::result::Result<f64, ModelError> {
    let mut grads = {
        let mut g = Graph::new(&model.store);
        let mut cache = HashMap::new();
        let mut d = Dropout {
            p: cfg.dropout,
            rng: dropout_rng,
        };
        let mut total = None;
        for s in batch {
            let l = model.sentence_loss(&mut g, s, &mut cache, Some(&mut d))?;
            total = Some(match total {
                None => l,
                Some(t) => g.add(t, l)?,
            });
        }
        let total = total.expect("nonempty batch");
        let loss = g.value(total).item()?.as_f64();
        if !loss.is_finite() {
            return Err(TensorError::NonFinite { op: "loss" }.into());
        }
        (g.backward(total)?, loss)
    };
    if let Some(c) = cfg.clip {
        let norm = grads.0.norm().as_f64();
        if !norm.is_finite() {
            return Err(TensorError::NonFinite { op: "gradient" }.into());
        }
        if norm > c {
            grads.0.scale(T::lit(c / norm));
        }
    }
    model.store.sgd_step(&grads.0, T::lit(lr));
    Ok(grads.1)
}

/// Trains on several tasks at once. Each cycle visits the tasks in the given
/// order and takes one minibatch from each; a task whose stream runs out
/// reshuffles and starts again. An epoch is as many cycles as the largest
/// task has minibatches. The global step counter drives the learning rate.
pub fn train_multitask<T: Scalar>(
    model: &mut Model<T>,
    tasks: &[TaskData<'_>],
    cfg: &TrainConfig,
    mut hook: Option<&mut EpochHook<'_, T>>,
) -> Result<TrainLog> {
    cfg.validate()?;
    if tasks.is_empty() {
        return Err(TrainError::Config("no training tasks".into()));
    }
    for t in tasks {
        model.head(t.task)?;
        if t.sentences.is_empty() {
            return Err(TrainError::Config(format!("task {} has no training sentences", t.task)));
        }
        if let Some(s) = t.sentences.iter().find(|s| s.task != t.task) {
            return Err(TrainError::Config(format!(
                "sentence of task {} supplied as training data for {}",
                s.task, t.task
            )));
        }
    }
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_d20f_0000_0001);
    let mut streams: Vec<Stream> = tasks.iter().map(|&t| Stream::new(t)).collect();
    let cycles = tasks
        .iter()
        .map(|t| batches_per_epoch(t.sentences.len(), cfg.batch_size))
        .max()
        .unwrap();

    let mut log = TrainLog::default();
    let mut step = 0usize;
    for epoch in 1..=cfg.epochs {
        let first = log.steps.len();
        for _ in 0..cycles {
            for stream in &mut streams {
                let batch = stream.next_batch(cfg.batch_size, &mut shuffle_rng);
                let lr = cfg.lr(step);
                let task = stream.data.task;
                let loss = sgd_update(model, &batch, lr, cfg, &mut dropout_rng).map_err(|e| match e {
                    ModelError::Tensor(t) => TrainError::Numeric {
                        step,
                        task: task.to_string(),
                        msg: t.to_string(),
                    },
                    other => TrainError::Model(other),
                })?;
                log.steps.push(StepRecord {
                    step,
                    task: task.to_string(),
                    loss: loss / batch.len() as f64,
                    lr,
                });
                step += 1;
            }
        }
        let recent = &log.steps[first..];
        log.epoch_loss
            .push(recent.iter().map(|s| s.loss).sum::<f64>() / recent.len() as f64);
        if let Some(h) = hook.as_deref_mut() {
            for (split, f1) in h(epoch, model)? {
                log.evals.push(EvalRecord { epoch, split, f1 });
            }
        }
    }
    Ok(log)
}

/// Trains a single head on one corpus.
pub fn train_single<T: Scalar>(
    model: &mut Model<T>,
    sentences: &[TaggedSentence],
    cfg: &TrainConfig,
    hook: Option<&mut EpochHook<'_, T>>,
) -> Result<TrainLog> {
    let task = match (model.heads(), sentences.first()) {
        ([head], Some(s)) if head.task == s.task => head.task.clone(),
        ([head], Some(s)) => {
            return Err(TrainError::Config(format!(
                "model head {} does not match corpus task {}",
                head.task, s.task
            )))
        }
        ([_], None) => return Err(TrainError::Config("empty training corpus".into())),
        (heads, _) => {
            return Err(TrainError::Config(format!(
                "single-task training needs exactly one head, model has {}",
                heads.len()
            )))
        }
    };
    train_multitask(
        model,
        &[TaskData {
            task: &task,
            sentences,
        }],
        cfg,
        hook,
    )
}
