use super::*;
use proptest::prelude::*;

fn norms(m: &Markup) -> Vec<&str> {
    m.tokens.iter().map(|t| t.norm.as_str()).collect()
}

#[test]
fn united_example() {
    let m = parse_markup("please book flight from <FromLoc> burbank </FromLoc>").unwrap();
    assert_eq!(norms(&m), ["please", "book", "flight", "from", "burbank"]);
    assert_eq!(m.spans, [Span::new("FromLoc", 4, 4)]);
    let s = to_bio(&m, "united").unwrap();
    assert_eq!(s.tags, [Tag::O, Tag::O, Tag::O, Tag::O, Tag::B("FromLoc".into())]);
}

#[test]
fn greyhound_example() {
    let m = parse_markup("We should return on <ReturnDate> Jan 11 </ReturnDate>").unwrap();
    assert_eq!(m.spans, [Span::new("ReturnDate", 4, 5)]);
    assert_eq!(m.tokens[5].raw, "11");
    assert_eq!(m.tokens[5].norm, "##");
    let s = to_bio(&m, "greyhound").unwrap();
    assert_eq!(s.tags[4..], [Tag::B("ReturnDate".into()), Tag::I("ReturnDate".into())]);
}

#[test]
fn airbnb_example_keeps_punctuation_outside() {
    let m = parse_markup("I want to keep the price below <PriceUpper> $1300 per week </PriceUpper> .").unwrap();
    assert_eq!(m.spans, [Span::new("PriceUpper", 7, 10)]);
    assert_eq!(m.tokens[7].raw, "$");
    assert_eq!(m.tokens.last().unwrap().raw, ".");
}

#[test]
fn multiple_spans_and_tight_tags() {
    let m = parse_markup("from <FromLoc>burbank</FromLoc> to <ToLoc>st petersburg</ToLoc>").unwrap();
    assert_eq!(m.spans, [Span::new("FromLoc", 1, 1), Span::new("ToLoc", 3, 4)]);
}

#[test]
fn untagged_line_has_no_spans() {
    let m = parse_markup("see you there").unwrap();
    assert!(m.spans.is_empty());
    assert!(to_bio(&m, "x").unwrap().tags.iter().all(|t| *t == Tag::O));
}

#[test]
fn malformed_markup_reports_position() {
    for (line, pos) in [
        ("a <X> b <Y> c </Y> </X>", 8),
        ("a <X> b </Y>", 8),
        ("a b </X>", 4),
        ("a <X> b", 2),
        ("a <X> </X>", 2),
    ] {
        match parse_markup(line) {
            Err(CorpusError::Parse { pos: p, .. }) => assert_eq!(p, pos, "{line}"),
            other => panic!("{line}: {other:?}"),
        }
    }
}

#[test]
fn bare_angle_bracket_is_text() {
    let m = parse_markup("price < 100").unwrap();
    assert_eq!(norms(&m), ["price", "<", "###"]);
}

#[test]
fn overlapping_spans_rejected() {
    let m = Markup {
        tokens: ["a", "b", "c"].iter().map(|t| Token::new(*t).unwrap()).collect(),
        spans: vec![Span::new("X", 0, 1), Span::new("Y", 1, 2)],
    };
    assert!(matches!(to_bio(&m, "t"), Err(CorpusError::Contract(_))));
}

#[test]
fn split_sizes_follow_floor() {
    let make = |n: usize| -> Vec<TaggedSentence> {
        (0..n)
            .map(|i| to_bio(&parse_markup(&format!("s{i}")).unwrap(), "t").unwrap())
            .collect()
    };
    let s = split_corpus(&make(100), 0.30, 1).unwrap();
    assert_eq!((s.train.len(), s.test.len()), (30, 70));
    assert_eq!(split_corpus(&make(10), 0.30, 1).unwrap().train.len(), 3);
    assert_eq!(split_corpus(&make(100), 0.30, 5).unwrap(), split_corpus(&make(100), 0.30, 5).unwrap());
    assert!(split_corpus(&make(1), 0.30, 1).is_err());
    assert!(split_corpus(&make(10), 1.0, 1).is_err());

    let all = make(37);
    let s = split_corpus(&all, 0.3, 9).unwrap();
    let mut seen: Vec<String> = s.train.iter().chain(&s.test).map(|t| t.tokens[0].raw.clone()).collect();
    seen.sort();
    let mut want: Vec<String> = all.iter().map(|t| t.tokens[0].raw.clone()).collect();
    want.sort();
    assert_eq!(seen, want);
}

#[test]
fn oov_stats_cases() {
    let train = Corpus::from_markup_lines("t", ["known known other other"]).unwrap();
    let vocab = build_vocab(&train.sentences, 2).unwrap();
    let test = Corpus::from_markup_lines("t", ["known other"]).unwrap();
    let st = oov_stats(&vocab, &test.sentences);
    assert_eq!(st.rate(), 0.0);
    assert!(st.sentences.is_empty());

    let test = Corpus::from_markup_lines("t", ["known unknown"]).unwrap();
    let st = oov_stats(&vocab, &test.sentences);
    assert_eq!(st.rate(), 0.5);
    assert_eq!(st.sentences, [0]);
}

#[test]
fn corpus_file_round_trip() {
    let c = Corpus::from_markup_lines(
        "greyhound",
        ["We should return on <ReturnDate> Jan 11 </ReturnDate>", "", "hi there ."],
    )
    .unwrap();
    assert_eq!(c.len(), 2);
    let mut buf = Vec::new();
    c.write(&mut buf).unwrap();
    assert!(buf.starts_with(b"#app:greyhound\n"));
    assert_eq!(Corpus::read(&buf[..]).unwrap(), c);

    let mut buf = Vec::new();
    c.write_conll(&mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.contains("Jan\tB-ReturnDate\n11\tI-ReturnDate\n\n"));
    assert_eq!(Corpus::read_conll("greyhound", &buf[..]).unwrap(), c);
}

#[test]
fn missing_header_is_a_format_error() {
    assert!(matches!(Corpus::read(&b"hello\n"[..]), Err(CorpusError::Format { line: 1, .. })));
}

#[test]
fn conll_rejects_invalid_bio() {
    assert!(Corpus::read_conll("t", &b"a\tO\nb\tI-X\n\n"[..]).is_err());
}

fn arb_tagged() -> impl Strategy<Value = TaggedSentence> {
    proptest::collection::vec(("[a-zA-Z0-9]{1,6}", 0usize..4), 1..10).prop_map(|items| {
        let slots = ["Loc", "Date", "Time"];
        let mut tags = Vec::new();
        let mut prev: Option<&str> = None;
        for (_, k) in &items {
            let t = match (*k, prev) {
                (0, _) => Tag::O,
                (3, Some(p)) => Tag::I(p.to_string()),
                (k, _) => Tag::B(slots[k % 3].to_string()),
            };
            prev = t.slot().map(|s| slots.iter().find(|x| **x == s).copied().unwrap());
            tags.push(t);
        }
        TaggedSentence {
            tokens: items.iter().map(|(w, _)| Token::new(w.as_str()).unwrap()).collect(),
            tags,
            task: "t".into(),
        }
    })
}

proptest! {
    #[test]
    fn markup_round_trip(s in arb_tagged()) {
        prop_assert!(is_valid_bio(&s.tags));
        let back = to_bio(&parse_markup(&s.to_markup()).unwrap(), "t").unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn oov_rate_nonincreasing_in_nested_train(seed in 0u64..50) {
        let suite = default_suite(SuiteScale::Desk);
        let app = &suite[1];
        let lines = generate_synthetic(app, 300, seed, &GeneratorOptions::default()).unwrap();
        let c = Corpus::from_markup_lines(&app.name, &lines).unwrap();
        let split = split_corpus(&c.sentences, 0.5, seed).unwrap();
        let mut last = f64::INFINITY;
        for k in [10, 40, 80, split.train.len()] {
            let v = build_vocab(&split.train[..k], 2).unwrap();
            let r = oov_stats(&v, &split.test).rate();
            prop_assert!(r <= last);
            last = r;
        }
    }
}
