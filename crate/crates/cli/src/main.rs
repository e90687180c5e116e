use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use slotfill::corpus::SuiteScale;
use slotfill::evaluation::{score_subsets, tag_corpus};
use slotfill::experiments::{
    cmd_generate, cmd_split, compare_vocab_modes, load_suite, open_vs_closed_rows, per_slot_rows, read_rows,
    report_table, run_ablation, run_oov_curve, train_cell, write_oov_curve, write_rows_file, write_slot_rows,
    CellTask, ExperimentConfig, ExperimentError, ModelPreset,
};
use slotfill::model::{Model, VocabMode};
use slotfill::vocab::Vocab;

#[derive(Parser, Debug)]
#[command(name = "slotfill", version, about = "Multi-task slot filling experiments")]
struct Cli {
    /// Experiment config (TOML). Built-in defaults when omitted.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

/// Flags that win over the config file.
#[derive(Args, Debug)]
struct Overrides {
    /// Output directory (also settable through SLOTFILL_OUT_DIR).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    scale: Option<Scale>,
    #[arg(long, global = true)]
    preset: Option<Preset>,
    #[arg(long, global = true)]
    epochs: Option<usize>,
    #[arg(long, global = true)]
    replicates: Option<usize>,
    #[arg(long, global = true)]
    data_seed: Option<u64>,
    /// Per-app corpus size, `app=count`; repeatable.
    #[arg(long = "size", global = true, value_parser = parse_size)]
    sizes: Vec<(String, usize)>,
    /// Write per-cell training logs.
    #[arg(long, global = true)]
    save_logs: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Scale {
    Desk,
    Paper,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Preset {
    Desk,
    Paper,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Vocabulary {
    Closed,
    Open,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the synthetic corpora.
    Generate,
    /// Write train/test splits.
    Split {
        /// Defaults to `<out>/splits`.
        #[arg(long)]
        dir: Option<PathBuf>,
    },
    /// Train one model on full training splits and save it.
    Train {
        /// Apps to train on; one app trains a single-task model.
        #[arg(long = "app", required = true)]
        apps: Vec<String>,
        #[arg(long, value_enum, default_value = "closed")]
        vocab: Vocabulary,
        /// Replicate index for the init and train seeds.
        #[arg(long, default_value_t = 0)]
        replicate: usize,
        /// Model name; files go to `<out>/models/<name>.*`.
        #[arg(long)]
        name: String,
    },
    /// Score a saved model on an app's test split.
    Eval {
        #[arg(long)]
        name: String,
        #[arg(long)]
        app: String,
    },
    /// Single- vs multi-task data ablation.
    Ablate,
    /// OOV rate against nested training subsets.
    OovCurve,
    /// Open vs closed vocabulary, overall and per slot type.
    PerSlot,
    /// Median F1 per cell of result CSVs.
    Report {
        /// Defaults to the ablation and vocabulary CSVs under `<out>`.
        inputs: Vec<PathBuf>,
    },
}

fn parse_size(s: &str) -> Result<(String, usize), String> {
    let (app, n) = s.split_once('=').ok_or_else(|| format!("expected app=count, got {s:?}"))?;
    let n = n.parse().map_err(|e| format!("{s:?}: {e}"))?;
    Ok((app.to_string(), n))
}

fn config(cli: &Cli) -> Result<ExperimentConfig, ExperimentError> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply_env();
    let o = &cli.overrides;
    if let Some(d) = &o.out {
        cfg.out_dir = d.clone();
    }
    if let Some(d) = &o.data_dir {
        cfg.data_dir = Some(d.clone());
    }
    if let Some(s) = o.scale {
        cfg.scale = match s {
            Scale::Desk => SuiteScale::Desk,
            Scale::Paper => SuiteScale::Paper,
        };
    }
    if let Some(p) = o.preset {
        cfg.model = match p {
            Preset::Desk => ModelPreset::Desk,
            Preset::Paper => ModelPreset::Paper,
        };
    }
    if let Some(e) = o.epochs {
        cfg.train.epochs = e;
    }
    if let Some(r) = o.replicates {
        cfg.replicates = r;
    }
    if let Some(s) = o.data_seed {
        cfg.seeds.data = s;
    }
    for (app, n) in &o.sizes {
        cfg.sizes.insert(app.clone(), *n);
    }
    cfg.save_logs |= o.save_logs;
    cfg.validate()?;
    Ok(cfg)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        context: path.display().to_string(),
        source,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, ExperimentError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(io_err(path))?))
}

fn model_paths(cfg: &ExperimentConfig, name: &str) -> (PathBuf, PathBuf) {
    let dir = cfg.out_dir.join("models");
    (dir.join(format!("{name}.ckpt")), dir.join(format!("{name}.vocab.tsv")))
}

fn train(cfg: &ExperimentConfig, apps: &[String], vocab: Vocabulary, replicate: usize, name: &str) -> Result<(), ExperimentError> {
    let suite = load_suite(cfg)?;
    let mut chosen = Vec::new();
    for a in apps {
        let data = suite
            .iter()
            .find(|d| &d.spec.name == a)
            .ok_or_else(|| ExperimentError::Config(format!("unknown app {a}")))?;
        chosen.push((data.labels(), data));
    }
    let tasks: Vec<CellTask> = chosen
        .iter()
        .map(|(l, d)| CellTask {
            labels: l,
            train: &d.train,
        })
        .collect();
    let vm = match vocab {
        Vocabulary::Closed => VocabMode::Closed,
        Vocabulary::Open => VocabMode::Open,
    };
    let (model, log) = train_cell(cfg, &tasks, vm, replicate)?;
    let (ckpt, vocab_path) = model_paths(cfg, name);
    let mut w = create(&ckpt)?;
    model.save(&mut w)?;
    w.flush().map_err(io_err(&ckpt))?;
    let mut w = create(&vocab_path)?;
    model.vocab.write_tsv(&mut w).map_err(io_err(&vocab_path))?;
    w.flush().map_err(io_err(&vocab_path))?;
    let logs = cfg.out_dir.join("models");
    log.write_steps_csv(create(&logs.join(format!("{name}.steps.csv")))?)
        .map_err(|e| ExperimentError::Data(e.to_string()))?;
    log.write_epochs_csv(create(&logs.join(format!("{name}.epochs.csv")))?)
        .map_err(|e| ExperimentError::Data(e.to_string()))?;
    let last = log.epoch_loss.last().copied().unwrap_or(f64::NAN);
    println!("trained {name}: {} steps, final epoch loss {last:.4}", log.steps.len());
    println!("wrote {}", ckpt.display());
    Ok(())
}

fn eval(cfg: &ExperimentConfig, name: &str, app: &str) -> Result<(), ExperimentError> {
    let (ckpt, vocab_path) = model_paths(cfg, name);
    let f = File::open(&vocab_path).map_err(|e| ExperimentError::Config(format!("{}: {e}", vocab_path.display())))?;
    let vocab = Vocab::read_tsv(BufReader::new(f), cfg.min_count)?;
    let f = File::open(&ckpt).map_err(|e| ExperimentError::Config(format!("{}: {e}", ckpt.display())))?;
    let model: Model<f64> = Model::load(BufReader::new(f), vocab)?;
    let suite = load_suite(cfg)?;
    let data = suite
        .iter()
        .find(|d| d.spec.name == app)
        .ok_or_else(|| ExperimentError::Config(format!("unknown app {app}")))?;
    let pred = tag_corpus(&model, app, &data.test)?;
    let own = slotfill::corpus::build_vocab(&data.train, cfg.min_count)?;
    let reports = score_subsets(&data.test, &pred, &own)?;
    println!("{app}: full test set ({} sentences)", data.test.len());
    print!("{}", reports.full);
    let path = cfg.out_dir.join("eval").join(format!("{name}.{app}.csv"));
    let mut w = create(&path)?;
    reports.full.write_csv("full", &mut w, true)?;
    match &reports.oov {
        Some(oov) => {
            println!("\n{app}: OOV subset ({} sentences)", reports.oov_sentences.len());
            print!("{oov}");
            oov.write_csv("oov", &mut w, false)?;
        }
        None => println!("\n{app}: no test sentence holds an OOV word"),
    }
    w.flush().map_err(io_err(&path))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<(), ExperimentError> {
    let cfg = config(&cli)?;
    let out = cfg.out_dir.clone();
    match &cli.command {
        Command::Generate => {
            for p in cmd_generate(&cfg)? {
                println!("wrote {}", p.display());
            }
        }
        Command::Split { dir } => {
            let dir = dir.clone().unwrap_or_else(|| out.join("splits"));
            for p in cmd_split(&cfg, &dir)? {
                println!("wrote {}", p.display());
            }
        }
        Command::Train {
            apps,
            vocab,
            replicate,
            name,
        } => train(&cfg, apps, *vocab, *replicate, name)?,
        Command::Eval { name, app } => eval(&cfg, name, app)?,
        Command::Ablate => {
            let rows = run_ablation(&cfg)?;
            let path = out.join("ablation.csv");
            write_rows_file(&rows, &path)?;
            print!("{}", report_table(&rows));
            println!("wrote {}", path.display());
        }
        Command::OovCurve => {
            let points = run_oov_curve(&cfg)?;
            let path = out.join("oov_curve.csv");
            write_oov_curve(&points, create(&path)?)?;
            for p in &points {
                println!("{:<12} {:>6} {:.4}", p.app, p.train_size, p.oov_rate);
            }
            println!("wrote {}", path.display());
        }
        Command::PerSlot => {
            let runs = compare_vocab_modes(&cfg)?;
            let rows = open_vs_closed_rows(&cfg, &runs)?;
            let path = out.join("open_vs_closed.csv");
            write_rows_file(&rows, &path)?;
            print!("{}", report_table(&rows));
            println!("wrote {}", path.display());
            let slots = per_slot_rows(&cfg, &runs);
            let path = out.join("per_slot.csv");
            write_slot_rows(&slots, create(&path)?)?;
            println!("wrote {}", path.display());
        }
        Command::Report { inputs } => {
            let inputs = if inputs.is_empty() {
                vec![out.join("ablation.csv"), out.join("open_vs_closed.csv")]
                    .into_iter()
                    .filter(|p| p.exists())
                    .collect()
            } else {
                inputs.clone()
            };
            if inputs.is_empty() {
                return Err(ExperimentError::Config(format!("no result CSVs under {}", out.display())));
            }
            let mut rows = Vec::new();
            for p in &inputs {
                let f = File::open(p).map_err(io_err(p))?;
                rows.extend(read_rows(BufReader::new(f))?);
            }
            print!("{}", report_table(&rows));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
