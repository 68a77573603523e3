mod common;

use std::collections::BTreeSet;

use mtprobe::alignment::{parse_pharaoh, AlignOutcome, AlignmentLinks};
use mtprobe::corpus::{DetectorKind, SentencePair};
use mtprobe::generate::{meta_corpus_generate, metamorphic_generate, templatize};
use mtprobe::numeric::{check_pair_numeric, extract_numeric_values, ClockTime, LocaleConvention};
use mtprobe::pipeline::{AlignerKind, DetectorSet, RunConfig, RunMode};
use mtprobe::sequence::{
    coverage_check, natural_hallucination_scan, oscillatory_check, CoverageConfig, HallucinationConfig,
};
use mtprobe::table::{builtin_table, Category, LanguagePair};
use mtprobe::text::trigger_tokens;
use mtprobe::token::{check_pair, find_triggers, GuardPolicy};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

const EN: LocaleConvention = LocaleConvention::EN;
const DE: LocaleConvention = LocaleConvention::DE;

/// Digits of `int` in groups of three joined by `sep`, written without any library
/// number formatting.
fn group(int: &str, sep: &str) -> String {
    let mut groups = Vec::new();
    let mut end = int.len();
    while end > 3 {
        groups.push(&int[end - 3..end]);
        end -= 3;
    }
    groups.push(&int[..end]);
    groups.reverse();
    groups.join(sep)
}

fn render(int: &str, frac: &str, group_sep: &str, decimal: &str) -> String {
    let mut out = group(int, group_sep);
    if !frac.is_empty() {
        out.push_str(decimal);
        out.push_str(frac);
    }
    out
}

fn decimal_parts() -> impl Strategy<Value = (String, String)> {
    (0u64..10_000_000_000, prop::option::of("[0-9]{1,3}"))
        .prop_map(|(i, f)| (i.to_string(), f.unwrap_or_default()))
}

#[test]
fn locale_symmetry_over_a_thousand_decimals() {
    let mut rng = common::rng(7);
    for _ in 0..1_000 {
        let int = rng.gen_range(0u64..10_000_000_000).to_string();
        let frac: String = (0..rng.gen_range(0..4)).map(|_| char::from(b'0' + rng.gen_range(0..10))).collect();
        let src_sep = *[",", ""].choose(&mut rng).unwrap();
        let tgt_sep = *[".", "", "\u{A0}", "\u{202F}", " "].choose(&mut rng).unwrap();
        let src = render(&int, &frac, src_sep, ".");
        let tgt = render(&int, &frac, tgt_sep, ",");
        let pair = SentencePair::new(0, format!("The total came to {src} last year."), format!("Die Summe betrug im Vorjahr {tgt}."));
        let flagged = check_pair_numeric(&pair, EN, DE);
        assert!(flagged.is_empty(), "{pair:?} flagged: {flagged:?}");
    }
}

#[test]
fn clock_shift_is_an_involution_and_accepted_both_ways() {
    for hour in 0..24u8 {
        for minute in [0u8, 1, 15, 30, 59] {
            let t = ClockTime { hour, minute };
            assert_eq!(t.shifted().shifted(), t);
            let other = t.shifted();
            let a = format!("{}:{:02}", t.hour, t.minute);
            let b = format!("{}:{:02}", other.hour, other.minute);
            for (s, g) in [(&a, &b), (&b, &a)] {
                let pair = SentencePair::new(0, format!("It starts at {s} sharp."), format!("Es beginnt um {g} Uhr."));
                assert!(check_pair_numeric(&pair, EN, DE).is_empty(), "{s} -> {g}");
            }
        }
    }
}

fn wordy_text() -> impl Strategy<Value = String> {
    let token = prop_oneof![
        "[a-z]{1,8}",
        "[0-9]{1,6}",
        "[0-9]{1,3}[.,][0-9]{1,3}",
        "[0-9]{1,2}:[0-9]{2}",
        "[0-9]{1,2}/[0-9]{1,2}/[0-9]{2,4}",
        "[0-9]{1,4}[a-z]{1,3}",
        "\\(?[0-9]{1,3}\\)?[.,;]?",
    ];
    prop::collection::vec(token, 0..20).prop_map(|t| t.join(" "))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn value_rendered_in_target_locale_is_accepted((int, frac) in decimal_parts(), tgt_sep in prop::sample::select(vec![".", ""])) {
        let src = render(&int, &frac, ",", ".");
        let tgt = render(&int, &frac, tgt_sep, ",");
        let pair = SentencePair::new(0, format!("about {src} people"), format!("etwa {tgt} Menschen"));
        prop_assert!(check_pair_numeric(&pair, EN, DE).is_empty());
    }

    #[test]
    fn identical_sides_have_no_numeric_error(text in wordy_text()) {
        let pair = SentencePair::new(0, text.clone(), text);
        prop_assert!(check_pair_numeric(&pair, EN, EN).is_empty());
        prop_assert!(check_pair_numeric(&pair, DE, DE).is_empty());
    }

    #[test]
    fn condensed_is_the_digit_subsequence(text in wordy_text()) {
        for locale in [EN, DE] {
            for v in extract_numeric_values(&text, locale) {
                let digits: String = v.raw.chars().filter(char::is_ascii_digit).collect();
                prop_assert_eq!(&v.condensed, &digits);
                let surface: String = text.chars().skip(v.span.start).take(v.span.end - v.span.start).collect();
                prop_assert_eq!(&surface, &v.span.surface);
            }
        }
    }

    #[test]
    fn pharaoh_round_trip(src_len in 0usize..40, tgt_len in 0usize..40, raw in prop::collection::vec((0usize..40, 0usize..40), 0..60)) {
        let links: Vec<_> = raw.into_iter().filter(|&(i, j)| i < src_len && j < tgt_len).collect();
        let a = AlignmentLinks::new(links.iter().copied(), src_len, tgt_len).unwrap();
        let text = a.to_pharaoh();
        prop_assert_eq!(parse_pharaoh(&text, src_len, tgt_len).unwrap(), a.clone());
        let expected: BTreeSet<_> = links.into_iter().collect();
        prop_assert_eq!(a.links(), &expected);
    }

    #[test]
    fn adding_a_link_never_creates_a_coverage_error(
        words in prop::collection::vec(prop::sample::select(vec!["the", "of", "bridge", "river", ",", "opened", "traffic", "43", "and", "--"]), 1..120),
        raw in prop::collection::vec((0usize..120, 0usize..10), 0..80),
        extra in (0usize..120, 0usize..10),
    ) {
        let cfg = CoverageConfig::english();
        let n = words.len();
        let pair = SentencePair::new(0, words.join(" "), "ein zwei drei vier fünf sechs sieben acht neun zehn");
        let links: Vec<_> = raw.into_iter().filter(|&(i, _)| i < n).collect();
        let before = AlignmentLinks::new(links.iter().copied(), n, 10).unwrap();
        let mut after = before.clone();
        if extra.0 < n {
            after.insert(extra.0, extra.1).unwrap();
        }
        if coverage_check(&pair, &before, &cfg).is_none() {
            prop_assert!(coverage_check(&pair, &after, &cfg).is_none());
        }
    }

    #[test]
    fn natural_scan_is_order_invariant(
        rows in prop::collection::vec((1usize..12, 0usize..3), 0..40),
        seed in any::<u64>(),
    ) {
        let cfg = HallucinationConfig::default();
        let targets = ["Einzelnachweise", "Weblinks", "Siehe auch"];
        let pairs: Vec<_> = rows
            .iter()
            .enumerate()
            .map(|(i, &(len, t))| SentencePair::new(i as u64, vec!["w"; len].join(" "), targets[t]))
            .collect();
        let flagged = |ps: &[SentencePair]| -> BTreeSet<u64> {
            natural_hallucination_scan(ps, &cfg).into_iter().map(|d| d.pair_id).collect()
        };
        let mut shuffled = pairs.clone();
        shuffled.shuffle(&mut common::rng(seed));
        prop_assert_eq!(flagged(&pairs), flagged(&shuffled));
    }

    #[test]
    fn unavailable_alignment_never_yields_coverage(n in 1usize..80) {
        let cfg = RunConfig {
            detectors: Some(vec!["coverage".into()]),
            aligner: AlignerKind::Diagonal,
            ..RunConfig::default()
        };
        let set = DetectorSet::from_config(&cfg, RunMode::Detect).unwrap();
        let src = (0..n).map(|i| format!("content{i}")).collect::<Vec<_>>().join(" ");
        let pair = SentencePair::new(0, src, "x");
        prop_assert!(set.detect_pair(&pair, Some(&AlignOutcome::Unavailable("timeout".into()))).is_empty());
        prop_assert!(set.detect_pair(&pair, None).is_empty());
        let empty = AlignOutcome::Links(AlignmentLinks::empty(n, 1));
        prop_assert_eq!(set.detect_pair(&pair, Some(&empty)).len(), usize::from(n > 10));
    }
}

const FILLER_EN: &[&str] = &["The", "teeth", "were", "found", "near", "the", "coast", "and", "measure", "about"];
const FILLER_DE: &[&str] = &["Die", "Zähne", "wurden", "an", "der", "Küste", "gefunden", "und", "etwa", "lang"];

/// A clean pair mentioning one unit of the bundled table.
fn unit_pair(rng: &mut impl Rng, id: u64) -> SentencePair {
    let table = builtin_table(&LanguagePair::en_de(), Category::PhysicalUnits).unwrap();
    let entry = table.entries().choose(rng).unwrap();
    let n = rng.gen_range(1..500);
    let pick = |rng: &mut dyn rand::RngCore, words: &[&str], k: usize| -> String {
        (0..k).map(|_| *words.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
    };
    let (a, b) = (rng.gen_range(0..6), rng.gen_range(0..6));
    let form = entry.targets.choose(rng).unwrap();
    let trigger = if rng.gen_bool(0.3) { entry.trigger.to_uppercase() } else { entry.trigger.clone() };
    SentencePair::new(
        id,
        format!("{} {n} {trigger} {}.", pick(rng, FILLER_EN, a), pick(rng, FILLER_EN, b)).trim().to_string(),
        format!("{} {n} {form} {}.", pick(rng, FILLER_DE, a), pick(rng, FILLER_DE, b)).trim().to_string(),
    )
}

#[test]
fn templates_restore_and_substitutions_stay_clean() {
    let table = builtin_table(&LanguagePair::en_de(), Category::PhysicalUnits).unwrap();
    let policy = GuardPolicy::for_category(Category::PhysicalUnits);
    let mut rng = common::rng(3);
    let corpus: Vec<_> = (0..2_000).map(|id| unit_pair(&mut rng, id)).collect();
    let mut templated = 0;
    for pair in &corpus {
        if let Ok(t) = templatize(0, pair, &table, &policy) {
            templated += 1;
            assert_eq!(t.restore(), (pair.source.clone(), pair.target.clone()));
        }
    }
    assert!(templated > 1_000, "only {templated} templates");
    let meta = meta_corpus_generate(&corpus, &table, &policy);
    assert_eq!(meta.templates.len(), templated);
    for p in &meta.pairs {
        let pair = SentencePair::new(0, p.source.clone(), p.target.clone());
        assert!(check_pair(&pair, &table, &policy).is_empty(), "{pair:?}");
    }
}

#[test]
fn metamorphic_instances_relocate_their_substitution() {
    let table = builtin_table(&LanguagePair::en_de(), Category::PhysicalUnits).unwrap();
    let mut rng = common::rng(4);
    for id in 0..500 {
        let pair = unit_pair(&mut rng, id);
        let occurrences = find_triggers(&pair.source, &table);
        let expected: usize = occurrences
            .iter()
            .map(|m| table.entries_of_type(&m.entry.type_tag).count() - 1)
            .sum();
        let instances = metamorphic_generate(id, &pair.source, &table);
        assert_eq!(instances.len(), expected);
        for inst in instances {
            let found = find_triggers(&inst.new_source, &table);
            let m = found.iter().find(|m| m.token_index == inst.token_index).expect("trigger relocated");
            assert_eq!(m.span.surface, inst.substituted_to);
            assert_eq!([m.span.start, m.span.end], inst.span);
            assert_eq!(trigger_tokens(&inst.new_source).len(), trigger_tokens(&pair.source).len());
        }
    }
}

#[test]
fn oscillatory_and_natural_are_independent() {
    let cfg = HallucinationConfig::default();
    let target = "PA : ".repeat(12);
    let pairs: Vec<_> = (1..=5)
        .map(|n| SentencePair::new(n as u64, vec!["word"; n].join(" "), target.clone()))
        .collect();
    let natural = natural_hallucination_scan(&pairs, &cfg);
    assert_eq!(natural.len(), 5);
    for p in &pairs {
        let d = oscillatory_check(p, &cfg).expect("repeat");
        assert_eq!(d.detector, DetectorKind::HallucinationOscillatory);
    }
}
