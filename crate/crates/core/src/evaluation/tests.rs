use super::*;
use crate::corpus::Corpus;
use crate::model::bio_repair;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tags(s: &str) -> Vec<Tag> {
    s.split_whitespace().map(|t| Tag::parse(t).unwrap()).collect()
}

#[test]
fn chunk_examples() {
    assert_eq!(extract_chunks(&tags("B-Loc I-Loc O")).unwrap(), [Span::new("Loc", 0, 1)]);
    assert_eq!(
        extract_chunks(&tags("B-Loc B-Loc")).unwrap(),
        [Span::new("Loc", 0, 0), Span::new("Loc", 1, 1)]
    );
    assert!(extract_chunks(&tags("O O O")).unwrap().is_empty());
    assert!(matches!(extract_chunks(&tags("O I-Loc")), Err(EvalError::Contract(_))));
    assert!(matches!(extract_chunks(&tags("B-Date I-Loc")), Err(EvalError::Contract(_))));
}

#[test]
fn f1_examples() {
    let g = [tags("B-Loc I-Loc O O")];
    let r = conll_f1(&g, &g).unwrap();
    assert_eq!((r.overall.precision, r.overall.recall, r.overall.f1), (100.0, 100.0, 100.0));

    let r = conll_f1(&g, &[tags("B-Loc O O O")]).unwrap();
    assert_eq!((r.overall.precision, r.overall.recall, r.overall.f1), (0.0, 0.0, 0.0));

    let g = [tags("B-Loc I-Loc O B-Date")];
    let r = conll_f1(&g, &[tags("B-Loc I-Loc O O")]).unwrap();
    assert_eq!((r.overall.precision, r.overall.recall), (100.0, 50.0));
    assert!((r.overall.f1 - 200.0 / 3.0).abs() < 1e-12);
    assert_eq!(format!("{:.2}", r.overall.f1), "66.67");
    // Date never predicted: P reported as 0.
    let d = r.per_type["Date"];
    assert_eq!((d.precision, d.recall, d.f1, d.support), (0.0, 0.0, 0.0, 1));
}

#[test]
fn zero_denominator_conventions() {
    let none = [tags("O O")];
    assert_eq!(conll_f1(&none, &none).unwrap().overall.f1, 100.0);
    let r = conll_f1(&[tags("B-A O")], &none).unwrap();
    assert_eq!((r.overall.precision, r.overall.recall, r.overall.f1), (0.0, 0.0, 0.0));
    let r = conll_f1(&none, &[tags("B-A O")]).unwrap();
    assert_eq!((r.overall.precision, r.overall.recall, r.overall.f1), (0.0, 0.0, 0.0));
}

#[test]
fn length_mismatches_are_contract_errors() {
    assert!(matches!(conll_f1(&[tags("O")], &[tags("O O")]), Err(EvalError::Contract(_))));
    assert!(matches!(conll_f1(&[tags("O")], &Vec::<Vec<Tag>>::new()), Err(EvalError::Contract(_))));
}

fn random_bio(rng: &mut ChaCha8Rng, len: usize, types: &[&str]) -> Vec<Tag> {
    let raw: Vec<Tag> = (0..len)
        .map(|_| match rng.gen_range(0..3) {
            0 => Tag::O,
            1 => Tag::B(types[rng.gen_range(0..types.len())].into()),
            _ => Tag::I(types[rng.gen_range(0..types.len())].into()),
        })
        .collect();
    bio_repair(&raw)
}

/// Every (type, start, end) triple that forms a maximal chunk, found by
/// exhaustive search.
fn brute_chunks(t: &[Tag]) -> Vec<(String, usize, usize)> {
    let mut out = Vec::new();
    for start in 0..t.len() {
        for end in start..t.len() {
            let Tag::B(x) = &t[start] else { continue };
            let inside = t[start + 1..=end].iter().all(|u| *u == Tag::I(x.clone()));
            let closed = end + 1 == t.len() || t[end + 1] != Tag::I(x.clone());
            if inside && closed {
                out.push((x.clone(), start, end));
            }
        }
    }
    out
}

#[test]
fn scorer_matches_brute_force_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let types = ["A", "B", "C"];
    for _ in 0..100 {
        let n = rng.gen_range(1..=10);
        let k = rng.gen_range(1..=3);
        let mut gold = Vec::new();
        let mut pred = Vec::new();
        for _ in 0..n {
            let len = rng.gen_range(1..=8);
            gold.push(random_bio(&mut rng, len, &types[..k]));
            // Predictions are often near the gold sequence.
            let mut p = gold.last().unwrap().clone();
            if rng.gen_bool(0.7) {
                p = random_bio(&mut rng, len, &types[..k]);
            }
            pred.push(p);
        }
        let (mut correct, mut np, mut ng) = (0usize, 0usize, 0usize);
        for (g, p) in gold.iter().zip(&pred) {
            let gc = brute_chunks(g);
            let pc = brute_chunks(p);
            ng += gc.len();
            np += pc.len();
            correct += pc.iter().filter(|c| gc.contains(c)).count();
        }
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { 100.0 * a as f64 / b as f64 };
        let (p, r) = (ratio(correct, np), ratio(correct, ng));
        let f = if np == 0 && ng == 0 {
            100.0
        } else if p + r > 0.0 {
            2.0 * p * r / (p + r)
        } else {
            0.0
        };
        let rep = conll_f1(&gold, &pred).unwrap();
        assert_eq!(rep.overall.counts, Counts { correct, predicted: np, gold: ng });
        assert_eq!((rep.overall.precision, rep.overall.recall, rep.overall.f1), (p, r, f));
        let per_sum: usize = rep.per_type.values().map(|s| s.counts.correct).sum();
        assert_eq!(per_sum, correct);

        let mut order: Vec<usize> = (0..n).collect();
        order.reverse();
        let rg: Vec<_> = order.iter().map(|&i| gold[i].clone()).collect();
        let rp: Vec<_> = order.iter().map(|&i| pred[i].clone()).collect();
        assert_eq!(conll_f1(&rg, &rp).unwrap(), rep);
    }
}

#[test]
fn chunk_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let t = random_bio(&mut rng, 8, &["A", "B"]);
        let chunks = extract_chunks(&t).unwrap();
        let mut back = vec![Tag::O; t.len()];
        for c in &chunks {
            back[c.start] = Tag::B(c.slot.clone());
            for x in &mut back[c.start + 1..=c.end] {
                *x = Tag::I(c.slot.clone());
            }
        }
        assert_eq!(back, t);
    }
}

#[test]
fn single_type_per_type_equals_overall_and_filter() {
    let g = [tags("B-A I-A O B-A"), tags("O B-A")];
    let p = [tags("B-A I-A O O"), tags("O B-A")];
    let r = conll_f1(&g, &p).unwrap();
    assert_eq!(r.per_type["A"].f1, r.overall.f1);
    assert_eq!(per_slot_f1(&g, &p, Some(3)).unwrap().len(), 1);
    assert!(per_slot_f1(&g, &p, Some(4)).unwrap().is_empty());
}

#[test]
fn csv_and_table_output() {
    let g = [tags("B-Loc I-Loc O B-Date")];
    let r = conll_f1(&g, &[tags("B-Loc I-Loc O O")]).unwrap();
    let mut buf = Vec::new();
    r.write_csv("full", &mut buf, true).unwrap();
    assert_eq!(
        String::from_utf8(buf).unwrap(),
        "scope,slot_type,precision,recall,f1,support\n\
         full,ALL,100.0000,50.0000,66.6667,2\n\
         full,Date,0.0000,0.0000,0.0000,1\n\
         full,Loc,100.0000,100.0000,100.0000,1\n"
    );
    let table = r.to_string();
    assert!(table.lines().nth(1).unwrap().starts_with("ALL"));
}

#[test]
fn subset_scores_match_filtered_recount() {
    let test = Corpus::from_markup_lines(
        "t",
        [
            "fly to <ToLoc> boston </ToLoc>",
            "fly to <ToLoc> zanzibar </ToLoc>",
            "from <FromLoc> boston </FromLoc> to <ToLoc> quito </ToLoc>",
        ],
    )
    .unwrap()
    .sentences;
    let pred = vec![tags("O O B-ToLoc"), tags("O O O"), tags("O B-FromLoc O B-ToLoc")];
    let vocab = Vocab::build(["fly", "to", "boston", "from", "fly", "to", "boston", "from"], 2).unwrap();
    let r = score_subsets(&test, &pred, &vocab).unwrap();
    assert_eq!(r.oov_sentences, [1, 2]);
    let oov = r.oov.unwrap();
    let g: Vec<Vec<Tag>> = [1, 2].iter().map(|&i| test[i].tags.clone()).collect();
    assert_eq!(oov, conll_f1(&g, &pred[1..]).unwrap());
    assert_eq!(oov.overall.counts, Counts { correct: 2, predicted: 2, gold: 3 });

    let all = Vocab::build(
        test.iter().flat_map(|s| s.tokens.iter().map(|t| t.norm.as_str())).chain(
            test.iter().flat_map(|s| s.tokens.iter().map(|t| t.norm.as_str())),
        ),
        2,
    )
    .unwrap();
    let r = score_subsets(&test, &pred, &all).unwrap();
    assert!(r.oov.is_none());
}
