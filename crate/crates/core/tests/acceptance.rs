//! End-to-end acceptance checks. Each criterion prints one
//! `criterion N: PASS|FAIL ...` line before asserting.
//!
//! Tests share one lock so that the runtime limits measure a test running
//! alone.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use slotfill::corpus::{
    default_suite, generate_synthetic, is_valid_bio, parse_markup, to_bio, Corpus, GeneratorOptions, SuiteScale, Tag,
    ANCHOR_APP,
};
use slotfill::evaluation::{conll_f1, tag_corpus};
use slotfill::experiments::{
    run_ablation, run_oov_curve, run_open_vs_closed, train_cell, write_oov_curve, write_rows, cmd_generate,
    load_suite, AppData, CellTask, ExperimentConfig, ResultRow, TrainSize,
};
use slotfill::gradcheck::{check_param_gradients, finite_difference_check, DEFAULT_EPS};
use slotfill::model::{assemble_model, bio_repair, Mode, ModelConfig, TaskLabels, VocabMode};
use slotfill::params::UniformInit;
use slotfill::recurrent::{CharDims, CharEncoder, Lstmp, LstmpDims};
use slotfill::training::{lr_schedule, train_single, TrainConfig};
use slotfill::vocab::{CharVocab, Vocab};
use slotfill::{GradientMap, Graph, ParamStore, Tensor, TensorError};

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

/// Prints the verdict line and fails the test when `ok` is false. Writes to
/// stdout directly so the line shows up without `--nocapture`.
fn verdict(n: usize, ok: bool, detail: &str) {
    let line = format!("criterion {n}: {} {detail}\n", if ok { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).and_then(|_| out.flush()).expect("stdout");
    assert!(ok, "criterion {n} failed: {detail}");
}

fn within(elapsed: Duration, limit: Duration) -> bool {
    elapsed < limit
}

// ---------------------------------------------------------------- 1

fn weighted_sum(g: &mut Graph<'_, f64>, y: slotfill::NodeId, w: &Tensor<f64>) -> Result<slotfill::NodeId, TensorError> {
    let w = g.input(w.clone());
    let wy = g.mul(y, w)?;
    g.sum(wy)
}

fn affine_error(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = ParamStore::new();
    let w = store.add("w", Tensor::uniform(&[3, 4], 1.0, &mut rng)).unwrap();
    let b = store.add("b", Tensor::uniform(&[1, 3], 1.0, &mut rng)).unwrap();
    let x = Tensor::uniform(&[2, 4], 1.0, &mut rng);
    let weights = Tensor::uniform(&[2, 3], 1.0, &mut rng);
    let by_params = check_param_gradients(
        &store,
        |s| {
            let mut g = Graph::new(s);
            let xi = g.input(x.clone());
            let wn = g.param(w)?;
            let bn = g.param(b)?;
            let xw = g.matmul_nt(xi, wn)?;
            let y = g.add(xw, bn)?;
            let loss = weighted_sum(&mut g, y, &weights)?;
            let grads = g.backward(loss)?;
            Ok((g.value(loss).item()?, grads))
        },
        DEFAULT_EPS,
    )
    .unwrap()
    .max_rel_error;
    let by_input = finite_difference_check(
        |x| {
            let mut g = Graph::new(&store);
            let xi = g.input(x.clone());
            let wn = g.param(w)?;
            let bn = g.param(b)?;
            let xw = g.matmul_nt(xi, wn)?;
            let y = g.add(xw, bn)?;
            let loss = weighted_sum(&mut g, y, &weights)?;
            let grads = g.backward(loss)?;
            Ok((g.value(loss).item()?, grads.input(xi).unwrap().clone()))
        },
        &x,
        DEFAULT_EPS,
    )
    .unwrap();
    by_params.max(by_input)
}

fn activation_error(seed: u64, tanh: bool) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Tensor::uniform(&[3, 5], 3.0, &mut rng);
    let weights = Tensor::uniform(&[3, 5], 1.0, &mut rng);
    finite_difference_check(
        |x| {
            let mut g = Graph::detached();
            let xi = g.input(x.clone());
            let y = if tanh { g.tanh(xi)? } else { g.sigmoid(xi)? };
            let loss = weighted_sum(&mut g, y, &weights)?;
            let grads = g.backward(loss)?;
            Ok((g.value(loss).item()?, grads.input(xi).unwrap().clone()))
        },
        &x,
        DEFAULT_EPS,
    )
    .unwrap()
}

fn softmax_xent_error(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = Tensor::uniform(&[4, 6], 3.0, &mut rng);
    let targets: Vec<usize> = (0..4).map(|_| rng.gen_range(0..6)).collect();
    finite_difference_check(
        |z| {
            let mut g = Graph::detached();
            let zi = g.input(z.clone());
            let loss = g.softmax_xent(zi, &targets)?;
            let grads = g.backward(loss)?;
            Ok((g.value(loss).item()?, grads.input(zi).unwrap().clone()))
        },
        &z,
        DEFAULT_EPS,
    )
    .unwrap()
}

fn lstmp_unrolled_error(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
    let mut store = ParamStore::new();
    let mut init = UniformInit::new(seed, 0.5);
    let layer = Lstmp::register(&mut store, "cell", LstmpDims::new(3, 3, Some(2)), true, &mut init).unwrap();
    let steps: Vec<Tensor<f64>> = (0..4).map(|_| Tensor::uniform(&[1, 3], 1.0, &mut rng)).collect();
    let weights = Tensor::uniform(&[1, 2], 1.0, &mut rng);
    check_param_gradients(
        &store,
        |s| -> Result<(f64, GradientMap<f64>), TensorError> {
            let mut g = Graph::new(s);
            let mut state = layer.zero_state(&mut g);
            let mut total = None;
            for x in &steps {
                let xi = g.input(x.clone());
                state = layer.step(&mut g, xi, state).map_err(|e| TensorError::Contract(e.to_string()))?;
                let l = weighted_sum(&mut g, state.m, &weights)?;
                total = Some(match total {
                    None => l,
                    Some(t) => g.add(t, l)?,
                });
            }
            let loss = total.unwrap();
            let grads = g.backward(loss)?;
            Ok((g.value(loss).item()?, grads))
        },
        DEFAULT_EPS,
    )
    .unwrap()
    .max_rel_error
}

fn char_encoder_error(seed: u64, eps: f64) -> f64 {
    let dims = CharDims {
        embed: 2,
        layer1_cell: 3,
        layer1_proj: 2,
        layer2_cell: 2,
        output: 2,
    };
    let mut store = ParamStore::new();
    let mut init = UniformInit::new(seed, 1.0);
    let e = CharEncoder::register(&mut store, "chars", dims, 4, true, &mut init).unwrap();
    let weights = Tensor::uniform(&[1, 2], 1.0, &mut ChaCha8Rng::seed_from_u64(seed));
    check_param_gradients(
        &store,
        |s| {
            let mut g = Graph::new(s);
            let v = e.encode_word(&mut g, &[1, 3, 2]).map_err(|e| TensorError::Contract(e.to_string()))?;
            let loss = weighted_sum(&mut g, v, &weights)?;
            let grads = g.backward(loss)?;
            Ok((g.value(loss).item()?, grads))
        },
        eps,
    )
    .unwrap()
    .max_rel_error
}

fn tagger_error(seed: u64, vocab_mode: VocabMode, eps: f64) -> f64 {
    let vocab = Vocab::build(["from", "from", "to", "to", "burbank", "burbank"], 2).unwrap();
    let chars = CharVocab::build(["from", "Burbank", "to"]);
    let cfg = ModelConfig {
        mode: Mode::Single,
        vocab_mode,
        word_dim: 2,
        cell_dim: 2,
        proj_dim: 2,
        char_dims: CharDims {
            embed: 2,
            layer1_cell: 2,
            layer1_proj: 2,
            layer2_cell: 2,
            output: 2,
        },
        peepholes: true,
        init_range: 1.0,
        tasks: vec![TaskLabels::new("t", &["FromLoc", "ToLoc"])],
    };
    let m = assemble_model::<f64>(cfg, vocab, Some(chars), seed).unwrap();
    let s = to_bio(&parse_markup("from <FromLoc> Burbank </FromLoc> to").unwrap(), "t").unwrap();
    assert_eq!(s.len(), 3);
    check_param_gradients(
        &m.store,
        |store| {
            let mut g = Graph::new(store);
            let loss = m
                .sentence_loss::<ChaCha8Rng>(&mut g, &s, &mut HashMap::new(), None)
                .map_err(|e| TensorError::Contract(e.to_string()))?;
            let grads = g.backward(loss)?;
            Ok((g.value(loss).item()?, grads))
        },
        eps,
    )
    .unwrap()
    .max_rel_error
}

#[test]
fn criterion_01_gradients_match_finite_differences() {
    let _g = serial();
    let start = Instant::now();
    let seeds = 0..20u64;
    let mut worst: BTreeMap<&str, f64> = BTreeMap::new();
    let mut note = |name, e: f64| {
        let w = worst.entry(name).or_insert(0.0);
        *w = w.max(e);
    };
    for s in seeds {
        note("affine", affine_error(s));
        note("sigmoid", activation_error(s, false));
        note("tanh", activation_error(s, true));
        note("softmax_xent", softmax_xent_error(s));
        note("lstmp_4_steps", lstmp_unrolled_error(s));
        note("tagger_closed", tagger_error(s, VocabMode::Closed, DEFAULT_EPS));
        // The two-layer character path has coordinates with tiny gradients
        // where eps = 1e-5 is dominated by roundoff; the error keeps falling
        // as eps grows to 1e-4.
        note("char_encoder_3_chars", char_encoder_error(s, 1e-4));
        note("tagger_open", tagger_error(s, VocabMode::Open, 1e-4));
    }
    let elapsed = start.elapsed();
    let max = worst.values().copied().fold(0.0, f64::max);
    let detail = format!("max rel err {max:.2e} over 20 seeds {worst:?}, {elapsed:.1?}");
    verdict(1, max < 1e-4 && within(elapsed, Duration::from_secs(60)), &detail);
}

// ---------------------------------------------------------------- 2

/// Chunks by trying every `(start, end)` pair.
fn brute_chunks(tags: &[Tag]) -> HashSet<(String, usize, usize)> {
    let mut out = HashSet::new();
    for start in 0..tags.len() {
        let Tag::B(slot) = &tags[start] else { continue };
        for end in start..tags.len() {
            let inside = tags[start + 1..=end].iter().all(|t| *t == Tag::I(slot.clone()));
            let closed = tags.get(end + 1) != Some(&Tag::I(slot.clone()));
            if inside && closed {
                out.insert((slot.clone(), start, end));
            }
        }
    }
    out
}

fn brute_f1(gold: &[Vec<Tag>], pred: &[Vec<Tag>]) -> (usize, usize, usize, f64) {
    let (mut c, mut p, mut g) = (0, 0, 0);
    for (gs, ps) in gold.iter().zip(pred) {
        let a = brute_chunks(gs);
        let b = brute_chunks(ps);
        g += a.len();
        p += b.len();
        c += a.intersection(&b).count();
    }
    let f = if p == 0 && g == 0 {
        100.0
    } else {
        let prec = if p == 0 { 0.0 } else { c as f64 / p as f64 };
        let rec = if g == 0 { 0.0 } else { c as f64 / g as f64 };
        if prec + rec == 0.0 {
            0.0
        } else {
            100.0 * 2.0 * prec * rec / (prec + rec)
        }
    };
    (c, p, g, f)
}

fn random_valid_tags(rng: &mut impl Rng, len: usize, types: usize) -> Vec<Tag> {
    let raw: Vec<Tag> = (0..len)
        .map(|_| {
            let slot = format!("S{}", rng.gen_range(0..types));
            match rng.gen_range(0..3) {
                0 => Tag::O,
                1 => Tag::B(slot),
                _ => Tag::I(slot),
            }
        })
        .collect();
    bio_repair(&raw)
}

#[test]
fn criterion_02_scorer_matches_brute_force() {
    let _g = serial();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut mismatches = 0;
    for _ in 0..100 {
        let types = rng.gen_range(1..=3);
        let n = rng.gen_range(1..=10);
        let mut gold = Vec::new();
        let mut pred = Vec::new();
        for _ in 0..n {
            let len = rng.gen_range(1..=8);
            gold.push(random_valid_tags(&mut rng, len, types));
            pred.push(random_valid_tags(&mut rng, len, types));
        }
        let r = conll_f1(&gold, &pred).unwrap();
        let (c, p, g, f) = brute_f1(&gold, &pred);
        let counts = r.overall.counts;
        if (counts.correct, counts.predicted, counts.gold) != (c, p, g) || (r.f1() - f).abs() > 1e-12 {
            mismatches += 1;
        }
    }
    let elapsed = start.elapsed();
    verdict(
        2,
        mismatches == 0 && within(elapsed, Duration::from_secs(10)),
        &format!("{mismatches} mismatches over 100 corpora, {elapsed:.1?}"),
    );
}

// ---------------------------------------------------------------- 3

#[test]
fn criterion_03_bio_repair() {
    let _g = serial();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut invalid_out, mut not_idempotent, mut changed_valid, mut valid_inputs) = (0, 0, 0, 0);
    for _ in 0..10_000 {
        let len = rng.gen_range(0..=12);
        let raw: Vec<Tag> = (0..len)
            .map(|_| {
                let slot = format!("S{}", rng.gen_range(0..3));
                match rng.gen_range(0..3) {
                    0 => Tag::O,
                    1 => Tag::B(slot),
                    _ => Tag::I(slot),
                }
            })
            .collect();
        let fixed = bio_repair(&raw);
        if !is_valid_bio(&fixed) {
            invalid_out += 1;
        }
        if bio_repair(&fixed) != fixed {
            not_idempotent += 1;
        }
        if is_valid_bio(&raw) {
            valid_inputs += 1;
            if fixed != raw {
                changed_valid += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    let ok = invalid_out == 0 && not_idempotent == 0 && changed_valid == 0 && within(elapsed, Duration::from_secs(5));
    verdict(
        3,
        ok,
        &format!(
            "invalid outputs {invalid_out}, non-idempotent {not_idempotent}, altered valid inputs \
             {changed_valid}/{valid_inputs}, {elapsed:.1?}"
        ),
    );
}

// ---------------------------------------------------------------- 4

/// Parameters of one LSTMP layer with peepholes, from its dimensions.
fn lstmp_shape_sum(input: usize, cell: usize, proj: usize) -> usize {
    let gates = 4 * cell * input + 4 * cell * proj + 4 * cell;
    gates + 3 * cell + proj * cell
}

#[test]
fn criterion_04_parameter_sharing() {
    let _g = serial();
    let start = Instant::now();
    let tasks: Vec<TaskLabels> = default_suite(SuiteScale::Desk)
        .iter()
        .map(|a| TaskLabels::new(a.name.clone(), &a.slot_names()))
        .collect();
    assert_eq!(tasks.len(), 4);
    let words: Vec<String> = (0..1999).map(|i| format!("w{i}")).collect();
    let vocab = Vocab::build(words.iter().chain(&words).map(String::as_str), 2).unwrap();
    assert_eq!(vocab.len(), 2000);
    let cfg = ModelConfig::paper(Mode::Multi, VocabMode::Closed, tasks.clone());
    let (word, cell, proj) = (cfg.word_dim, cfg.cell_dim, cfg.proj_dim);
    let m = assemble_model::<f64>(cfg, vocab, None, 1).unwrap();
    let c = m.count_parameters();

    let shared = 2000 * word + 2 * lstmp_shape_sum(word, cell, proj);
    let head = |t: &TaskLabels| {
        let labels = 1 + 2 * t.slots.len();
        labels * 2 * proj + labels
    };
    let oracle = tasks
        .iter()
        .map(|t| shared as f64 / (shared + head(t)) as f64)
        .fold(1.0, f64::min);
    let total = shared + tasks.iter().map(head).sum::<usize>();
    let store_total: usize = m.store.iter().map(|(_, _, t)| t.shape().iter().product::<usize>()).sum();

    let elapsed = start.elapsed();
    let ok = c.shared == shared
        && c.total == total
        && store_total == total
        && (c.shared_fraction - oracle).abs() < 1e-15
        && c.shared_fraction >= 0.99
        && within(elapsed, Duration::from_secs(1));
    verdict(
        4,
        ok,
        &format!(
            "shared_fraction {:.4} (oracle {oracle:.4}), shared {} of {} total, {elapsed:.1?}",
            c.shared_fraction, c.shared, c.total
        ),
    );
}

// ---------------------------------------------------------------- 5

#[test]
fn criterion_05_overfit_fifty_sentences() {
    let _g = serial();
    let start = Instant::now();
    let spec = default_suite(SuiteScale::Desk)
        .into_iter()
        .find(|a| a.name == ANCHOR_APP)
        .unwrap();
    let lines = generate_synthetic(&spec, 50, 1, &GeneratorOptions::default()).unwrap();
    let corpus = Corpus::from_markup_lines(ANCHOR_APP, &lines).unwrap();
    let sentences = corpus.sentences;
    let vocab = slotfill::corpus::build_vocab(&sentences, 2).unwrap();
    let cfg = ModelConfig::paper(
        Mode::Single,
        VocabMode::Closed,
        vec![TaskLabels::new(ANCHOR_APP, &spec.slot_names())],
    );
    let mut model = assemble_model::<f64>(cfg, vocab, None, 1).unwrap();
    let tcfg = TrainConfig {
        epochs: 30,
        seed: 1,
        ..TrainConfig::default()
    };
    let gold: Vec<Vec<Tag>> = sentences.iter().map(|s| s.tags.clone()).collect();
    let mut hook = |_: usize, m: &slotfill::model::Model<f64>| -> slotfill::training::Result<Vec<(String, f64)>> {
        let pred = tag_corpus(m, ANCHOR_APP, &sentences).expect("tagging");
        Ok(vec![("train".into(), conll_f1(&gold, &pred).expect("scoring").f1())])
    };
    let outcome = train_single(&mut model, &sentences, &tcfg, Some(&mut hook));
    let elapsed = start.elapsed();
    let (best, last) = match &outcome {
        Ok(log) => (
            log.evals.iter().map(|e| e.f1).fold(0.0, f64::max),
            log.evals.last().map_or(0.0, |e| e.f1),
        ),
        Err(_) => (0.0, 0.0),
    };
    let detail = match &outcome {
        Ok(_) => format!("best training F1 {best:.2} (final {last:.2}) within 30 epochs, {elapsed:.1?}"),
        Err(e) => format!("training failed: {e}, {elapsed:.1?}"),
    };
    verdict(5, best >= 95.0 && within(elapsed, Duration::from_secs(120)), &detail);
}

// ---------------------------------------------------------------- 6

fn median_f1(rows: &[ResultRow], pick: impl Fn(&ResultRow) -> bool) -> f64 {
    let v: Vec<f64> = rows.iter().filter(|r| pick(r)).map(|r| r.f1).collect();
    slotfill::experiments::median(&v).expect("cell has rows")
}

fn desk_config(out: &Path) -> ExperimentConfig {
    ExperimentConfig {
        out_dir: out.to_path_buf(),
        ..ExperimentConfig::default()
    }
}

#[test]
fn criterion_06_multitask_benefit() {
    let _g = serial();
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        ablation_sizes: vec![TrainSize::Count(200), TrainSize::Full],
        ..desk_config(dir.path())
    };
    assert_eq!(cfg.replicates, 3);
    cmd_generate(&cfg).unwrap();
    let apps = load_suite(&cfg).unwrap();
    let rows = run_ablation(&cfg).unwrap();
    let elapsed = start.elapsed();

    let mut ok = within(elapsed, Duration::from_secs(30 * 60));
    let mut parts = Vec::new();
    for target in cfg.target_apps().unwrap() {
        let full = apps.iter().find(|a| a.spec.name == target).map(|a: &AppData| a.train.len()).unwrap();
        let cell = |n: usize, mode: Mode| median_f1(&rows, |r| r.target_app == target && r.train_size == n && r.mode == mode);
        let (s200, m200) = (cell(200, Mode::Single), cell(200, Mode::Multi));
        let (sfull, mfull) = (cell(full, Mode::Single), cell(full, Mode::Multi));
        let gap200 = m200 - s200;
        let gapfull = mfull - sfull;
        ok &= m200 >= s200 && gap200 > gapfull;
        parts.push(format!(
            "{target}: @200 single {s200:.2} multi {m200:.2}; @full({full}) single {sfull:.2} multi {mfull:.2}"
        ));
    }
    verdict(6, ok, &format!("{}; {elapsed:.1?}", parts.join("; ")));
}

// ---------------------------------------------------------------- 7

#[test]
fn criterion_07_open_vocabulary_on_oov_subset() {
    let _g = serial();
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let cfg = desk_config(dir.path());
    assert_eq!(cfg.replicates, 3);
    cmd_generate(&cfg).unwrap();
    let rows = run_open_vs_closed(&cfg).unwrap();
    let elapsed = start.elapsed();

    let mut wins = 0;
    let mut parts = Vec::new();
    for a in default_suite(SuiteScale::Desk) {
        let cell = |vm: VocabMode| median_f1(&rows, |r| r.target_app == a.name && r.scope == "oov" && r.vocab == vm);
        let (closed, open) = (cell(VocabMode::Closed), cell(VocabMode::Open));
        if open >= closed {
            wins += 1;
        }
        parts.push(format!("{}: closed {closed:.2} open {open:.2}", a.name));
    }
    verdict(
        7,
        wins >= 2 && within(elapsed, Duration::from_secs(30 * 60)),
        &format!("open >= closed on {wins}/4 apps ({}); {elapsed:.1?}", parts.join("; ")),
    );
}

// ---------------------------------------------------------------- 8

#[test]
fn criterion_08_oov_curve_nonincreasing() {
    let _g = serial();
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let cfg = desk_config(dir.path());
    assert_eq!(
        cfg.oov_grid,
        [100, 200, 400, 800].map(TrainSize::Count).into_iter().chain([TrainSize::Full]).collect::<Vec<_>>()
    );
    cmd_generate(&cfg).unwrap();
    let points = run_oov_curve(&cfg).unwrap();
    let elapsed = start.elapsed();
    let mut by_app: BTreeMap<&str, Vec<(usize, f64)>> = BTreeMap::new();
    for p in &points {
        by_app.entry(&p.app).or_default().push((p.train_size, p.oov_rate));
    }
    let mut ok = by_app.len() == 4 && within(elapsed, Duration::from_secs(60));
    let mut parts = Vec::new();
    for (app, curve) in &by_app {
        ok &= curve.len() == 5 && curve.windows(2).all(|w| w[0].0 <= w[1].0 && w[1].1 <= w[0].1);
        let rates: Vec<String> = curve.iter().map(|(n, r)| format!("{n}:{:.3}", r)).collect();
        parts.push(format!("{app} [{}]", rates.join(" ")));
    }
    verdict(8, ok, &format!("{}; {elapsed:.1?}", parts.join("; ")));
}

// ---------------------------------------------------------------- 9

/// Every byte an experiment run leaves behind: result CSVs and train logs.
fn run_small_experiment(out: &Path) -> BTreeMap<String, Vec<u8>> {
    let cfg = ExperimentConfig {
        out_dir: out.to_path_buf(),
        sizes: [("united", 160), ("opentable", 120), ("greyhound", 120), ("airbnb", 120)]
            .into_iter()
            .map(|(a, n)| (a.to_string(), n))
            .collect(),
        ablation_sizes: vec![TrainSize::Count(20), TrainSize::Full],
        replicates: 1,
        save_logs: true,
        train: TrainConfig {
            epochs: 2,
            ..ExperimentConfig::default().train
        },
        ..ExperimentConfig::default()
    };
    cmd_generate(&cfg).unwrap();
    let rows = run_ablation(&cfg).unwrap();
    let mut buf = Vec::new();
    write_rows(&rows, &mut buf).unwrap();
    fs::write(out.join("ablation.csv"), buf).unwrap();
    let rows = run_open_vs_closed(&cfg).unwrap();
    let mut buf = Vec::new();
    write_rows(&rows, &mut buf).unwrap();
    fs::write(out.join("open_vs_closed.csv"), buf).unwrap();
    let mut buf = Vec::new();
    write_oov_curve(&run_oov_curve(&cfg).unwrap(), &mut buf).unwrap();
    fs::write(out.join("oov_curve.csv"), buf).unwrap();

    // A directly trained cell with its full TrainLog.
    let apps = load_suite(&cfg).unwrap();
    let labels = apps[0].labels();
    let (_, log) = train_cell(
        &cfg,
        &[CellTask {
            labels: &labels,
            train: &apps[0].train,
        }],
        VocabMode::Open,
        0,
    )
    .unwrap();
    fs::write(out.join("cell.log.json"), serde_json::to_vec(&log).unwrap()).unwrap();

    let mut files = BTreeMap::new();
    let mut stack = vec![out.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(out).unwrap().display().to_string();
                files.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    files
}

#[test]
fn criterion_09_determinism() {
    let _g = serial();
    let start = Instant::now();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = run_small_experiment(a.path());
    let second = run_small_experiment(b.path());
    let elapsed = start.elapsed();
    let logs = first.keys().filter(|k| k.starts_with("logs")).count();
    let differing: Vec<&String> = first
        .iter()
        .filter(|(k, v)| second.get(*k) != Some(v))
        .map(|(k, _)| k)
        .collect();
    let ok = first.len() == second.len() && differing.is_empty() && logs > 0;
    verdict(
        9,
        ok,
        &format!(
            "{} files ({logs} train logs) compared, {} differ {differing:?}, {elapsed:.1?}",
            first.len(),
            differing.len()
        ),
    );
}

// ---------------------------------------------------------------- 10

#[test]
fn criterion_10_lr_schedule() {
    let _g = serial();
    let cases = [(0, 0.3), (100, 0.294), (999, 0.3 * 0.98f64.powi(9))];
    let errs: Vec<f64> = cases.iter().map(|&(s, want)| (lr_schedule(s) - want).abs()).collect();
    let ok = errs.iter().all(|&e| e <= 1e-12);
    let got: Vec<String> = cases.iter().map(|&(s, _)| format!("step {s} -> {}", lr_schedule(s))).collect();
    verdict(10, ok, &got.join(", "));
}
