//! Experiment harness: corpus generation, data ablation, open vs closed
//! vocabulary, OOV-rate curves and per-slot comparisons. Everything is
//! emitted as CSV and is reproducible from the config and its seeds.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{
    build_vocab, default_suite, generate_synthetic, oov_stats, split_corpus, AppSpec, Corpus, CorpusError,
    GeneratorOptions, SuiteScale, TaggedSentence, ANCHOR_APP,
};
use crate::evaluation::{evaluate_subsets, EvalError, SubsetReports};
use crate::model::{assemble_model, Mode, Model, ModelConfig, ModelError, TaskLabels, VocabMode};
use crate::training::{train_multitask, TaskData, TrainConfig, TrainError, TrainLog};
use crate::vocab::{CharVocab, Vocab, VocabError};

/// Environment variable that overrides `out_dir`.
pub const OUT_DIR_ENV: &str = "SLOTFILL_OUT_DIR";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config: {0}")]
    Config(String),
    #[error("data: {0}")]
    Data(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl ExperimentError {
    /// Process exit status: 1 config, 2 data, 3 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Model(_) | Self::Eval(_) => 1,
            Self::Data(_) | Self::Io { .. } => 2,
            Self::Numeric(_) => 3,
        }
    }

    fn io(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> Self {
        let context = context.into();
        move |source| Self::Io { context, source }
    }
}

impl From<CorpusError> for ExperimentError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::Config(m) => Self::Config(m),
            other => Self::Data(other.to_string()),
        }
    }
}

impl From<VocabError> for ExperimentError {
    fn from(e: VocabError) -> Self {
        Self::Data(e.to_string())
    }
}

impl From<TrainError> for ExperimentError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Numeric { .. } => Self::Numeric(e.to_string()),
            TrainError::Config(m) => Self::Config(m),
            TrainError::Model(m) => Self::Model(m),
            other => Self::Data(other.to_string()),
        }
    }
}

impl From<csv::Error> for ExperimentError {
    fn from(e: csv::Error) -> Self {
        Self::Data(e.to_string())
    }
}

pub type Result<T, E = ExperimentError> = std::result::Result<T, E>;

/// A training-set size: a sentence count or everything available.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "SizeRepr", into = "SizeRepr")]
pub enum TrainSize {
    Count(usize),
    Full,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SizeRepr {
    Count(usize),
    Word(String),
}

impl TryFrom<SizeRepr> for TrainSize {
    type Error = String;

    fn try_from(r: SizeRepr) -> Result<Self, String> {
        match r {
            SizeRepr::Count(n) => Ok(Self::Count(n)),
            SizeRepr::Word(w) if w == "full" => Ok(Self::Full),
            SizeRepr::Word(w) => Err(format!("training size must be a count or \"full\", got {w:?}")),
        }
    }
}

impl From<TrainSize> for SizeRepr {
    fn from(s: TrainSize) -> Self {
        match s {
            TrainSize::Count(n) => Self::Count(n),
            TrainSize::Full => Self::Word("full".into()),
        }
    }
}

impl TrainSize {
    /// Sentences actually used out of `available`.
    pub fn resolve(self, available: usize) -> usize {
        match self {
            Self::Count(n) => n.min(available),
            Self::Full => available,
        }
    }
}

impl std::fmt::Display for TrainSize {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Count(n) => write!(f, "{n}"),
            Self::Full => f.write_str("full"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelPreset {
    Desk,
    Paper,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Seeds {
    /// Corpus generation and train/test split.
    pub data: u64,
    /// Parameter initialization; replicate `r` uses `init + r`.
    pub init: u64,
    /// Batch order and dropout; replicate `r` uses `train + r`.
    pub train: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Self {
            data: 1,
            init: 100,
            train: 200,
        }
    }
}

/// Everything an experiment needs. Read from TOML; every field has a
/// default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scale: SuiteScale,
    /// Per-app corpus size overrides.
    pub sizes: BTreeMap<String, usize>,
    pub generator: GeneratorOptions,
    pub anchor: String,
    /// Apps whose training data is varied; empty means every non-anchor app.
    pub targets: Vec<String>,
    pub ablation_sizes: Vec<TrainSize>,
    pub oov_grid: Vec<TrainSize>,
    pub train_frac: f64,
    pub min_count: usize,
    pub model: ModelPreset,
    pub seeds: Seeds,
    pub replicates: usize,
    pub train: TrainConfig,
    pub min_slot_support: usize,
    pub out_dir: PathBuf,
    /// Corpus directory; `<out_dir>/data` when unset.
    pub data_dir: Option<PathBuf>,
    /// Write one TrainLog pair per trained cell under `<out_dir>/logs`.
    pub save_logs: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scale: SuiteScale::Desk,
            sizes: BTreeMap::new(),
            generator: GeneratorOptions::default(),
            anchor: ANCHOR_APP.into(),
            targets: Vec::new(),
            ablation_sizes: vec![
                TrainSize::Count(200),
                TrainSize::Count(400),
                TrainSize::Count(800),
                TrainSize::Full,
            ],
            oov_grid: vec![
                TrainSize::Count(100),
                TrainSize::Count(200),
                TrainSize::Count(400),
                TrainSize::Count(800),
                TrainSize::Full,
            ],
            train_frac: 0.3,
            min_count: 2,
            model: ModelPreset::Desk,
            seeds: Seeds::default(),
            replicates: 3,
            train: TrainConfig {
                epochs: 25,
                clip: Some(5.0),
                ..TrainConfig::default()
            },
            min_slot_support: 100,
            out_dir: PathBuf::from("results"),
            data_dir: None,
            save_logs: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Replaces `out_dir` with the environment override when set.
    pub fn apply_env(&mut self) {
        if let Some(dir) = std::env::var_os(OUT_DIR_ENV) {
            self.out_dir = PathBuf::from(dir);
        }
    }

    pub fn data_dir(&self) -> PathBuf {
        self.data_dir.clone().unwrap_or_else(|| self.out_dir.join("data"))
    }

    /// App specs with size overrides applied.
    pub fn suite(&self) -> Result<Vec<AppSpec>> {
        let mut apps = default_suite(self.scale);
        for name in self.sizes.keys() {
            if !apps.iter().any(|a| &a.name == name) {
                return Err(ExperimentError::Config(format!("size override for unknown app {name}")));
            }
        }
        for a in &mut apps {
            if let Some(&n) = self.sizes.get(&a.name) {
                a.size = n;
            }
        }
        Ok(apps)
    }

    pub fn target_apps(&self) -> Result<Vec<String>> {
        let names: Vec<String> = self.suite()?.into_iter().map(|a| a.name).collect();
        if self.targets.is_empty() {
            return Ok(names.into_iter().filter(|n| *n != self.anchor).collect());
        }
        for t in &self.targets {
            if !names.contains(t) {
                return Err(ExperimentError::Config(format!("unknown target app {t}")));
            }
        }
        Ok(self.targets.clone())
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(ExperimentError::Config(m));
        let apps = self.suite()?;
        if !apps.iter().any(|a| a.name == self.anchor) {
            return err(format!("unknown anchor app {}", self.anchor));
        }
        if self.targets.contains(&self.anchor) {
            return err("the anchor app cannot be an ablation target".into());
        }
        self.target_apps()?;
        for (name, sizes) in [("ablation_sizes", &self.ablation_sizes), ("oov_grid", &self.oov_grid)] {
            if sizes.is_empty() {
                return err(format!("{name} is empty"));
            }
            if sizes.contains(&TrainSize::Count(0)) {
                return err(format!("{name} entries must be positive"));
            }
            if sizes.windows(2).any(|w| w[0] > w[1]) {
                return err(format!("{name} must be nondecreasing"));
            }
        }
        if !(self.train_frac > 0.0 && self.train_frac < 1.0) {
            return err(format!("train_frac {} not in (0, 1)", self.train_frac));
        }
        if self.min_count == 0 || self.replicates == 0 {
            return err("min_count and replicates must be positive".into());
        }
        self.train.validate()?;
        Ok(())
    }

    fn model_config(&self, mode: Mode, vocab_mode: VocabMode, tasks: Vec<TaskLabels>) -> ModelConfig {
        match self.model {
            ModelPreset::Desk => ModelConfig::desk(mode, vocab_mode, tasks),
            ModelPreset::Paper => ModelConfig::paper(mode, vocab_mode, tasks),
        }
    }
}

/// One experiment cell's score.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub target_app: String,
    pub train_size: usize,
    pub mode: Mode,
    pub vocab: VocabMode,
    pub scope: String,
    pub f1: f64,
    pub seed: usize,
}

pub fn write_rows<W: Write>(rows: &[ResultRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["experiment", "target_app", "train_size", "mode", "vocab", "scope", "f1", "seed"])?;
    for r in rows {
        out.write_record([
            r.experiment.clone(),
            r.target_app.clone(),
            r.train_size.to_string(),
            r.mode.to_string(),
            r.vocab.to_string(),
            r.scope.clone(),
            format!("{:.4}", r.f1),
            r.seed.to_string(),
        ])?;
    }
    out.flush().map_err(ExperimentError::io("writing results"))?;
    Ok(())
}

pub fn read_rows<R: std::io::Read>(r: R) -> Result<Vec<ResultRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut rows = Vec::new();
    for rec in rdr.deserialize() {
        let row: ResultRow = rec?;
        if !(0.0..=100.0).contains(&row.f1) {
            return Err(ExperimentError::Data(format!("f1 {} out of range", row.f1)));
        }
        rows.push(row);
    }
    Ok(rows)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(ExperimentError::io(format!("creating {}", dir.display())))?;
    }
    let f = File::create(path).map_err(ExperimentError::io(format!("creating {}", path.display())))?;
    Ok(BufWriter::new(f))
}

/// Writes `rows` as CSV to `path`, creating parent directories.
pub fn write_rows_file(rows: &[ResultRow], path: &Path) -> Result<()> {
    write_rows(rows, create(path)?)
}

pub fn corpus_path(dir: &Path, app: &str) -> PathBuf {
    dir.join(format!("{app}.txt"))
}

/// Generates every app's corpus into the data directory and returns the
/// written paths.
pub fn cmd_generate(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let dir = cfg.data_dir();
    let mut paths = Vec::new();
    for spec in cfg.suite()? {
        let lines = generate_synthetic(&spec, spec.size, cfg.seeds.data, &cfg.generator)?;
        let corpus = Corpus::from_markup_lines(&spec.name, &lines)?;
        let path = corpus_path(&dir, &spec.name);
        let mut w = create(&path)?;
        corpus.write(&mut w)?;
        w.flush().map_err(ExperimentError::io(format!("writing {}", path.display())))?;
        paths.push(path);
    }
    Ok(paths)
}

/// One app's split data.
#[derive(Clone, Debug)]
pub struct AppData {
    pub spec: AppSpec,
    /// Shuffled; a prefix of length `k` is the size-`k` subset, so subsets nest.
    pub train: Vec<TaggedSentence>,
    pub test: Vec<TaggedSentence>,
}

impl AppData {
    pub fn labels(&self) -> TaskLabels {
        TaskLabels::new(&self.spec.name, &self.spec.slot_names())
    }

    pub fn subset(&self, size: TrainSize) -> &[TaggedSentence] {
        &self.train[..size.resolve(self.train.len())]
    }
}

/// Reads the generated corpora and splits them with the data seed.
pub fn load_suite(cfg: &ExperimentConfig) -> Result<Vec<AppData>> {
    let dir = cfg.data_dir();
    let mut out = Vec::new();
    for spec in cfg.suite()? {
        let path = corpus_path(&dir, &spec.name);
        let f = File::open(&path).map_err(|e| {
            ExperimentError::Config(format!("missing corpus {} ({e}); run generate first", path.display()))
        })?;
        let corpus = Corpus::read(BufReader::new(f))?;
        if corpus.app != spec.name {
            return Err(ExperimentError::Data(format!(
                "{} holds app {}, expected {}",
                path.display(),
                corpus.app,
                spec.name
            )));
        }
        let split = split_corpus(&corpus.sentences, cfg.train_frac, cfg.seeds.data)?;
        out.push(AppData {
            spec,
            train: split.train,
            test: split.test,
        });
    }
    Ok(out)
}

/// Writes `<dir>/<app>.train.txt` and `<dir>/<app>.test.txt` for every app.
pub fn cmd_split(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for app in load_suite(cfg)? {
        for (part, sentences) in [("train", &app.train), ("test", &app.test)] {
            let path = dir.join(format!("{}.{part}.txt", app.spec.name));
            let corpus = Corpus {
                app: app.spec.name.clone(),
                sentences: sentences.clone(),
            };
            let mut w = create(&path)?;
            corpus.write(&mut w)?;
            w.flush().map_err(ExperimentError::io(format!("writing {}", path.display())))?;
            paths.push(path);
        }
    }
    Ok(paths)
}

/// Training data of one head in a cell.
#[derive(Clone, Copy)]
pub struct CellTask<'a> {
    pub labels: &'a TaskLabels,
    pub train: &'a [TaggedSentence],
}

/// Builds and trains one model. The word vocabulary (and character set in
/// open mode) comes from the union of the cell's training data.
pub fn train_cell(
    cfg: &ExperimentConfig,
    tasks: &[CellTask<'_>],
    vocab_mode: VocabMode,
    replicate: usize,
) -> Result<(Model<f64>, TrainLog)> {
    let mode = if tasks.len() == 1 { Mode::Single } else { Mode::Multi };
    let all = || tasks.iter().flat_map(|t| t.train.iter());
    let vocab = build_vocab(all(), cfg.min_count)?;
    let chars = match vocab_mode {
        VocabMode::Closed => None,
        VocabMode::Open => Some(CharVocab::build(all().flat_map(|s| s.tokens.iter().map(|t| t.raw.as_str())))),
    };
    let labels = tasks.iter().map(|t| t.labels.clone()).collect();
    let mcfg = cfg.model_config(mode, vocab_mode, labels);
    let mut model = assemble_model(mcfg, vocab, chars, cfg.seeds.init + replicate as u64)?;
    let tcfg = TrainConfig {
        seed: cfg.seeds.train + replicate as u64,
        ..cfg.train.clone()
    };
    let data: Vec<TaskData> = tasks
        .iter()
        .map(|t| TaskData {
            task: &t.labels.task,
            sentences: t.train,
        })
        .collect();
    let log = train_multitask(&mut model, &data, &tcfg, None)?;
    Ok((model, log))
}

fn save_log(cfg: &ExperimentConfig, name: &str, log: &TrainLog) -> Result<()> {
    if !cfg.save_logs {
        return Ok(());
    }
    let dir = cfg.out_dir.join("logs");
    let mut w = create(&dir.join(format!("{name}.steps.csv")))?;
    log.write_steps_csv(&mut w)?;
    let mut w = create(&dir.join(format!("{name}.epochs.csv")))?;
    log.write_epochs_csv(&mut w)?;
    Ok(())
}

fn own_vocab(cfg: &ExperimentConfig, train: &[TaggedSentence]) -> Result<Vocab> {
    Ok(build_vocab(train, cfg.min_count)?)
}

fn find<'a>(apps: &'a [AppData], name: &str) -> Result<&'a AppData> {
    apps.iter()
        .find(|a| a.spec.name == name)
        .ok_or_else(|| ExperimentError::Config(format!("no corpus for app {name}")))
}

/// Single-task vs multi-task F1 on the fixed test set of each target app as
/// its training data shrinks; every other app keeps its full training set.
pub fn run_ablation(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let apps = load_suite(cfg)?;
    let labels: Vec<TaskLabels> = apps.iter().map(AppData::labels).collect();
    let targets = cfg.target_apps()?;
    let mut rows = Vec::new();
    for r in 0..cfg.replicates {
        // Cells with identical data train identical models.
        let mut multi_cache: BTreeMap<(String, usize), Model<f64>> = BTreeMap::new();
        for target in &targets {
            let t = find(&apps, target)?;
            let ti = apps.iter().position(|a| a.spec.name == *target).unwrap();
            let mut single_cache: BTreeMap<usize, f64> = BTreeMap::new();
            for &size in &cfg.ablation_sizes {
                let subset = t.subset(size);
                let n = subset.len();
                let single = match single_cache.get(&n) {
                    Some(&f) => f,
                    None => {
                        let (m, log) = train_cell(
                            cfg,
                            &[CellTask {
                                labels: &labels[ti],
                                train: subset,
                            }],
                            VocabMode::Closed,
                            r,
                        )?;
                        save_log(cfg, &format!("ablation.{target}.{n}.single.r{r}"), &log)?;
                        let f = evaluate_subsets(&m, target, &t.test, &own_vocab(cfg, subset)?)?.full.f1();
                        single_cache.insert(n, f);
                        f
                    }
                };
                let key = if n == t.train.len() {
                    ("*".to_string(), 0)
                } else {
                    (target.clone(), n)
                };
                if !multi_cache.contains_key(&key) {
                    let tasks: Vec<CellTask> = apps
                        .iter()
                        .zip(&labels)
                        .map(|(a, l)| CellTask {
                            labels: l,
                            train: if a.spec.name == *target { subset } else { &a.train },
                        })
                        .collect();
                    let (m, log) = train_cell(cfg, &tasks, VocabMode::Closed, r)?;
                    let name = if key.0 == "*" {
                        format!("ablation.full.multi.r{r}")
                    } else {
                        format!("ablation.{target}.{n}.multi.r{r}")
                    };
                    save_log(cfg, &name, &log)?;
                    multi_cache.insert(key.clone(), m);
                }
                let multi = evaluate_subsets(&multi_cache[&key], target, &t.test, &own_vocab(cfg, subset)?)?
                    .full
                    .f1();
                for (mode, f1) in [(Mode::Single, single), (Mode::Multi, multi)] {
                    rows.push(ResultRow {
                        experiment: "ablation".into(),
                        target_app: target.clone(),
                        train_size: n,
                        mode,
                        vocab: VocabMode::Closed,
                        scope: "full".into(),
                        f1,
                        seed: r,
                    });
                }
            }
        }
    }
    Ok(rows)
}

/// Reports of both vocabulary modes for one replicate.
#[derive(Clone, Debug)]
pub struct VocabComparison {
    pub replicate: usize,
    /// app -> (closed, open)
    pub reports: BTreeMap<String, (SubsetReports, SubsetReports)>,
}

/// Trains the multi-task model with closed and with open vocabulary on
/// identical data and scores each app on its full test set and on the
/// sentences holding words outside that app's training vocabulary.
pub fn compare_vocab_modes(cfg: &ExperimentConfig) -> Result<Vec<VocabComparison>> {
    cfg.validate()?;
    let apps = load_suite(cfg)?;
    let labels: Vec<TaskLabels> = apps.iter().map(AppData::labels).collect();
    let tasks: Vec<CellTask> = apps
        .iter()
        .zip(&labels)
        .map(|(a, l)| CellTask {
            labels: l,
            train: &a.train,
        })
        .collect();
    let mut out = Vec::new();
    for r in 0..cfg.replicates {
        let mut per_mode = Vec::new();
        for vm in [VocabMode::Closed, VocabMode::Open] {
            let (m, log) = train_cell(cfg, &tasks, vm, r)?;
            save_log(cfg, &format!("vocab.{vm}.multi.r{r}"), &log)?;
            let mut reports = BTreeMap::new();
            for a in &apps {
                let vocab = own_vocab(cfg, &a.train)?;
                reports.insert(a.spec.name.clone(), evaluate_subsets(&m, &a.spec.name, &a.test, &vocab)?);
            }
            per_mode.push(reports);
        }
        let open = per_mode.pop().unwrap();
        let closed = per_mode.pop().unwrap();
        let reports = closed
            .into_iter()
            .map(|(app, c)| {
                let o = open[&app].clone();
                (app, (c, o))
            })
            .collect();
        out.push(VocabComparison { replicate: r, reports });
    }
    Ok(out)
}

/// Rows of [`compare_vocab_modes`]: per app, vocabulary mode and scope.
/// OOV rows are omitted for apps whose test set has no OOV sentence.
pub fn open_vs_closed_rows(cfg: &ExperimentConfig, runs: &[VocabComparison]) -> Result<Vec<ResultRow>> {
    let apps = load_suite(cfg)?;
    let mut rows = Vec::new();
    for run in runs {
        for a in &apps {
            let (closed, open) = &run.reports[&a.spec.name];
            for (vm, rep) in [(VocabMode::Closed, closed), (VocabMode::Open, open)] {
                let scopes = [("full", Some(&rep.full)), ("oov", rep.oov.as_ref())];
                for (scope, r) in scopes {
                    if let Some(r) = r {
                        rows.push(ResultRow {
                            experiment: "open_vs_closed".into(),
                            target_app: a.spec.name.clone(),
                            train_size: a.train.len(),
                            mode: Mode::Multi,
                            vocab: vm,
                            scope: scope.into(),
                            f1: r.f1(),
                            seed: run.replicate,
                        });
                    }
                }
            }
        }
    }
    Ok(rows)
}

pub fn run_open_vs_closed(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let runs = compare_vocab_modes(cfg)?;
    open_vs_closed_rows(cfg, &runs)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OovPoint {
    pub app: String,
    pub train_size: usize,
    pub oov_rate: f64,
    pub oov_tokens: usize,
    pub total_tokens: usize,
}

/// Test-token OOV rate against vocabularies built from nested training
/// subsets of each app.
pub fn run_oov_curve(cfg: &ExperimentConfig) -> Result<Vec<OovPoint>> {
    cfg.validate()?;
    let mut out = Vec::new();
    for a in load_suite(cfg)? {
        for &size in &cfg.oov_grid {
            let subset = a.subset(size);
            let stats = oov_stats(&own_vocab(cfg, subset)?, &a.test);
            out.push(OovPoint {
                app: a.spec.name.clone(),
                train_size: subset.len(),
                oov_rate: stats.rate(),
                oov_tokens: stats.oov_tokens,
                total_tokens: stats.total_tokens,
            });
        }
    }
    Ok(out)
}

pub fn write_oov_curve<W: Write>(points: &[OovPoint], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["app", "train_size", "oov_rate", "oov_tokens", "total_tokens"])?;
    for p in points {
        out.write_record([
            p.app.clone(),
            p.train_size.to_string(),
            format!("{:.6}", p.oov_rate),
            p.oov_tokens.to_string(),
            p.total_tokens.to_string(),
        ])?;
    }
    out.flush().map_err(ExperimentError::io("writing oov curve"))?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlotRow {
    pub app: String,
    pub slot_type: String,
    pub closed_f1: f64,
    pub open_f1: f64,
    pub support: usize,
    pub seed: usize,
}

/// Per-slot full-test-set F1 of both vocabulary modes, keeping slot types
/// with at least `cfg.min_slot_support` gold chunks.
pub fn per_slot_rows(cfg: &ExperimentConfig, runs: &[VocabComparison]) -> Vec<SlotRow> {
    let mut rows = Vec::new();
    for run in runs {
        for (app, (closed, open)) in &run.reports {
            for (slot, c) in closed.full.filter_support(cfg.min_slot_support) {
                let o = open.full.per_type.get(&slot).map_or(0.0, |s| s.f1);
                rows.push(SlotRow {
                    app: app.clone(),
                    slot_type: slot,
                    closed_f1: c.f1,
                    open_f1: o,
                    support: c.support,
                    seed: run.replicate,
                });
            }
        }
    }
    rows
}

pub fn run_per_slot(cfg: &ExperimentConfig) -> Result<Vec<SlotRow>> {
    let runs = compare_vocab_modes(cfg)?;
    Ok(per_slot_rows(cfg, &runs))
}

pub fn write_slot_rows<W: Write>(rows: &[SlotRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["app", "slot_type", "closed_f1", "open_f1", "support", "seed"])?;
    for r in rows {
        out.write_record([
            r.app.clone(),
            r.slot_type.clone(),
            format!("{:.4}", r.closed_f1),
            format!("{:.4}", r.open_f1),
            r.support.to_string(),
            r.seed.to_string(),
        ])?;
    }
    out.flush().map_err(ExperimentError::io("writing per-slot rows"))?;
    Ok(())
}

/// Median of the values; the mean of the middle pair for even counts.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[k] } else { (v[k - 1] + v[k]) / 2.0 })
}

/// Grouping key of a result row without its seed.
pub type CellKey = (String, String, usize, Mode, VocabMode, String);

/// Median F1 over seeds for each cell.
pub fn median_by_cell(rows: &[ResultRow]) -> BTreeMap<CellKey, f64> {
    let mut groups: BTreeMap<CellKey, Vec<f64>> = BTreeMap::new();
    for r in rows {
        groups
            .entry((
                r.experiment.clone(),
                r.target_app.clone(),
                r.train_size,
                r.mode,
                r.vocab,
                r.scope.clone(),
            ))
            .or_default()
            .push(r.f1);
    }
    groups
        .into_iter()
        .map(|(k, v)| (k, median(&v).expect("nonempty group")))
        .collect()
}

/// Plain-text table of median F1 per cell.
pub fn report_table(rows: &[ResultRow]) -> String {
    let mut s = format!(
        "{:<16} {:<12} {:>6} {:<7} {:<7} {:<5} {:>8}\n",
        "experiment", "app", "size", "mode", "vocab", "scope", "F1"
    );
    for ((exp, app, size, mode, vocab, scope), f1) in median_by_cell(rows) {
        s.push_str(&format!(
            "{exp:<16} {app:<12} {size:>6} {:<7} {:<7} {scope:<5} {f1:>8.2}\n",
            mode.to_string(),
            vocab.to_string()
        ));
    }
    s
}
