//! Shared fixtures for the integration tests: a brute-force reference scanner for the
//! token detectors, random table and pair generators, and a synthetic news corpus.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashSet};

use mtprobe::corpus::SentencePair;
use mtprobe::table::{Category, LanguagePair, TransformationEntry, TransformationTable};
use mtprobe::token::{GuardMode, GuardPolicy};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// Reference scanner
// ---------------------------------------------------------------------------

const STRIP: &[char] = &['.', ',', ';', ':', '!', '?', ')', '"', '\''];
const SYMBOLS: &[char] = &['$', '£', '€', '¥'];
/// Number words the generator emits. The letters used for filler words cannot spell any
/// English number word, so this list is complete for generated text.
const WORDS: &[&str] = &["one", "two", "six", "ten", "twelve", "twenty", "forty", "hundred"];

#[derive(Debug, Clone)]
pub struct OracleEntry {
    pub trigger: String,
    pub forms: Vec<String>,
    pub type_tag: String,
}

#[derive(Debug, Clone)]
pub struct OracleTable {
    pub category: Category,
    pub entries: Vec<OracleEntry>,
    pub modes: BTreeMap<String, GuardMode>,
}

impl OracleTable {
    pub fn table(&self) -> TransformationTable {
        let entries = self
            .entries
            .iter()
            .map(|e| {
                let forms: Vec<&str> = e.forms.iter().map(String::as_str).collect();
                TransformationEntry::new(&e.trigger, &forms, &e.type_tag, self.category).unwrap()
            })
            .collect();
        TransformationTable::new(entries, LanguagePair::en_de(), self.category).unwrap()
    }

    pub fn policy(&self) -> GuardPolicy {
        let mut p = GuardPolicy::uniform(GuardMode::None);
        for (tag, mode) in &self.modes {
            p = p.with_type(tag, *mode);
        }
        p
    }
}

/// Whitespace tokens split between a currency symbol and a digit, as (char start, text).
fn oracle_tokens(text: &str) -> Vec<(usize, String)> {
    let chars: Vec<char> = text.chars().collect();
    let mut words: Vec<(usize, Vec<char>)> = Vec::new();
    let mut cur: Option<(usize, Vec<char>)> = None;
    for (i, &c) in chars.iter().enumerate() {
        if c.is_whitespace() {
            if let Some(w) = cur.take() {
                words.push(w);
            }
        } else {
            cur.get_or_insert_with(|| (i, Vec::new())).1.push(c);
        }
    }
    words.extend(cur);
    let mut out = Vec::new();
    for (start, w) in words {
        let mut piece_start = 0;
        for k in 1..w.len() {
            let (a, b) = (w[k - 1], w[k]);
            if (SYMBOLS.contains(&a) && b.is_ascii_digit()) || (a.is_ascii_digit() && SYMBOLS.contains(&b)) {
                out.push((start + piece_start, w[piece_start..k].iter().collect()));
                piece_start = k;
            }
        }
        out.push((start + piece_start, w[piece_start..].iter().collect()));
    }
    out
}

fn oracle_is_number(tok: &str) -> bool {
    let core = tok.trim_end_matches(STRIP).trim_start_matches(['(', '~', '+', '-']);
    core.chars().any(|c| c.is_ascii_digit())
        && core.chars().all(|c| c.is_ascii_digit() || ".,:'/-".contains(c))
}

fn oracle_is_word(tok: &str) -> bool {
    let lower = tok.to_lowercase();
    let core = lower.trim_end_matches(STRIP).trim_start_matches('(');
    !core.is_empty() && core.split('-').all(|p| WORDS.contains(&p))
}

/// Every guarded trigger with no accepted form in the target: (char start, char end,
/// surface), left to right.
pub fn oracle_check(source: &str, target: &str, table: &OracleTable) -> Vec<(usize, usize, String)> {
    let tokens = oracle_tokens(source);
    let target_lower = target.to_lowercase();
    let src_chars: Vec<char> = source.chars().collect();
    let mut out = Vec::new();
    for (i, (start, tok)) in tokens.iter().enumerate() {
        let stripped = tok.trim_end_matches(STRIP);
        let key = stripped.to_lowercase();
        let Some(entry) = table
            .entries
            .iter()
            .find(|e| e.trigger.to_lowercase().trim_end_matches(STRIP) == key)
        else {
            continue;
        };
        let prev = i.checked_sub(1).map(|p| tokens[p].1.as_str());
        let next = tokens.get(i + 1).map(|t| t.1.as_str());
        let guard = match table.modes[&entry.type_tag] {
            GuardMode::None => true,
            GuardMode::NumericAntecedent => prev.is_some_and(|p| oracle_is_number(p) || oracle_is_word(p)),
            GuardMode::NumericAdjacent => {
                prev.is_some_and(oracle_is_number)
                    || next.is_some_and(oracle_is_number)
                    || tok.chars().any(|c| c.is_ascii_digit())
            }
        };
        if !guard {
            continue;
        }
        let accepted = entry
            .forms
            .iter()
            .chain(std::iter::once(&entry.trigger))
            .any(|f| target_lower.contains(&f.to_lowercase()));
        if accepted {
            continue;
        }
        let trig = entry.trigger.to_lowercase();
        let end = if trig.ends_with(STRIP) && tok.to_lowercase().starts_with(&trig) {
            start + trig.chars().count()
        } else {
            start + stripped.chars().count()
        };
        out.push((*start, end, src_chars[*start..end].iter().collect()));
    }
    out
}

// ---------------------------------------------------------------------------
// Random tables and pairs
// ---------------------------------------------------------------------------

const SRC_SYLLABLES: &[&str] = &["ba", "ku", "ri", "lo", "mi", "pa", "bo", "ka", "ru", "li", "mo", "pu"];
const TGT_SYLLABLES: &[&str] = &["de", "ge", "ze", "ün", "ße", "we", "fa", "sch", "te", "ho", "an", "ka"];

fn syllable_word(rng: &mut impl Rng, syllables: &[&str], min: usize, max: usize) -> String {
    (0..rng.gen_range(min..=max))
        .map(|_| *syllables.choose(rng).unwrap())
        .collect()
}

fn recase(rng: &mut impl Rng, s: &str) -> String {
    match rng.gen_range(0..4) {
        0 => s.to_uppercase(),
        1 => {
            let mut c = s.chars();
            c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default()
        }
        _ => s.to_string(),
    }
}

pub fn random_table(seed: u64, category: Category) -> OracleTable {
    let mut rng = rng(seed);
    let tags = ["t0", "t1", "t2", "t3"];
    let all_modes = [GuardMode::None, GuardMode::NumericAntecedent, GuardMode::NumericAdjacent];
    let modes = tags
        .iter()
        .map(|t| (t.to_string(), *all_modes.choose(&mut rng).unwrap()))
        .collect();
    let mut keys = HashSet::new();
    let mut entries = Vec::new();
    let n = rng.gen_range(20..60);
    let mut symbols = SYMBOLS.to_vec();
    symbols.shuffle(&mut rng);
    while entries.len() < n {
        let mut trigger = match rng.gen_range(0..10) {
            0 => match symbols.pop() {
                Some(s) => s.to_string(),
                None => continue,
            },
            1 => format!("{}.{}.", syllable_word(&mut rng, SRC_SYLLABLES, 1, 1), syllable_word(&mut rng, SRC_SYLLABLES, 1, 1)),
            2 => format!("{}²", syllable_word(&mut rng, SRC_SYLLABLES, 1, 2)),
            3 => format!("{}{}", syllable_word(&mut rng, SRC_SYLLABLES, 1, 2), rng.gen_range(1..4)),
            _ => syllable_word(&mut rng, SRC_SYLLABLES, 1, 3),
        };
        if rng.gen_bool(0.1) {
            trigger = trigger.to_uppercase();
        }
        let key = trigger.to_lowercase().trim_end_matches(STRIP).to_string();
        if !keys.insert(key) {
            continue;
        }
        let forms = (0..rng.gen_range(1..=3))
            .map(|_| {
                let w = syllable_word(&mut rng, TGT_SYLLABLES, 1, 3);
                recase(&mut rng, &w)
            })
            .collect();
        entries.push(OracleEntry {
            trigger,
            forms,
            type_tag: tags.choose(&mut rng).unwrap().to_string(),
        });
    }
    OracleTable { category, entries, modes }
}

fn number_token(rng: &mut impl Rng) -> String {
    match rng.gen_range(0..6) {
        0 => format!("{},{:03}", rng.gen_range(1..100), rng.gen_range(0..1000)),
        1 => format!("{}.{}", rng.gen_range(0..100), rng.gen_range(0..100)),
        2 => format!("({}", rng.gen_range(1..50)),
        3 => format!("{}-{}", rng.gen_range(1..10), rng.gen_range(10..20)),
        4 => format!("{}.", rng.gen_range(1..2000)),
        _ => rng.gen_range(0..500).to_string(),
    }
}

fn punct_suffix(rng: &mut impl Rng) -> String {
    (0..rng.gen_range(0..=2))
        .map(|_| *STRIP.choose(rng).unwrap())
        .collect()
}

/// A random source/target pair over `table`'s vocabulary.
pub fn random_pair(rng: &mut impl Rng, id: u64, table: &OracleTable) -> SentencePair {
    let mut src = Vec::new();
    let mut used = Vec::new();
    for _ in 0..rng.gen_range(1..25) {
        let tok = match rng.gen_range(0..100) {
            0..=34 => {
                let e = table.entries.choose(rng).unwrap();
                used.push(e);
                let mut t = recase(rng, &e.trigger);
                if e.trigger.chars().all(|c| SYMBOLS.contains(&c)) && rng.gen_bool(0.5) {
                    let n = rng.gen_range(1..100).to_string();
                    t = if rng.gen_bool(0.5) { format!("{t}{n}") } else { format!("{n}{t}") };
                }
                if rng.gen_bool(0.08) {
                    t = format!("({t}");
                }
                if rng.gen_bool(0.05) {
                    t = format!("{t}x");
                }
                t + &punct_suffix(rng)
            }
            35..=54 => number_token(rng),
            55..=62 => {
                let w = if rng.gen_bool(0.2) {
                    format!("{}-{}", WORDS.choose(rng).unwrap(), WORDS.choose(rng).unwrap())
                } else {
                    WORDS.choose(rng).unwrap().to_string()
                };
                recase(rng, &w) + &punct_suffix(rng)
            }
            63..=92 => syllable_word(rng, SRC_SYLLABLES, 1, 3) + &punct_suffix(rng),
            _ => ["--", ",", "(", "...", "\""].choose(rng).unwrap().to_string(),
        };
        src.push(tok);
    }
    let sep = if rng.gen_bool(0.1) { "  " } else { " " };
    let source = src.join(sep);

    let mut tgt: Vec<String> = (0..rng.gen_range(1..20))
        .map(|_| syllable_word(rng, TGT_SYLLABLES, 1, 3))
        .collect();
    for e in used {
        if rng.gen_bool(0.5) {
            let form = if rng.gen_bool(0.1) { &e.trigger } else { e.forms.choose(rng).unwrap() };
            let mut f = recase(rng, form);
            if rng.gen_bool(0.2) {
                f = format!("{}{f}", syllable_word(rng, TGT_SYLLABLES, 1, 1));
            }
            let at = rng.gen_range(0..=tgt.len());
            tgt.insert(at, f);
        }
    }
    if rng.gen_bool(0.3) {
        let other = table.entries.choose(rng).unwrap();
        let form = other.forms.choose(rng).unwrap();
        tgt.push(recase(rng, form));
    }
    if rng.gen_bool(0.3) {
        tgt.push(number_token(rng));
    }
    SentencePair::new(id, source, tgt.join(" "))
}

// ---------------------------------------------------------------------------
// Synthetic news corpus
// ---------------------------------------------------------------------------

/// Ways a generated pair is broken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Fault {
    Unit,
    Currency,
    Number,
    Decimal,
    Repetition,
}

pub const FAULTS: [Fault; 5] = [Fault::Unit, Fault::Currency, Fault::Number, Fault::Decimal, Fault::Repetition];

pub struct NewsCorpus {
    pub pairs: Vec<SentencePair>,
    pub bad: BTreeMap<u64, Fault>,
}

impl NewsCorpus {
    pub fn bad_ids(&self) -> BTreeSet<u64> {
        self.bad.keys().copied().collect()
    }

    pub fn tsv(&self) -> String {
        let mut out = String::new();
        for p in &self.pairs {
            out.push_str(&p.source);
            out.push('\t');
            out.push_str(&p.target);
            out.push('\n');
        }
        out
    }
}

fn grouped(n: u64, sep: char) -> String {
    let digits = n.to_string();
    let mut out = String::new();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            out.push(sep);
        }
        out.push(c);
    }
    out
}

/// One news-like pair of roughly 20 tokens; `fault` breaks it in a known way.
pub fn news_pair(rng: &mut impl Rng, id: u64, fault: Option<Fault>) -> SentencePair {
    let template = match fault {
        Some(Fault::Unit) => 0,
        Some(Fault::Currency) => 1,
        Some(Fault::Number) => 2,
        Some(Fault::Decimal) => 3,
        Some(Fault::Repetition) => 4,
        None => rng.gen_range(0..6),
    };
    let year = rng.gen_range(1990..2025);
    let (source, target) = match template {
        0 => {
            let a = rng.gen_range(100..1000);
            let unit = if fault.is_some() { "Meter" } else { "Fuß" };
            (
                format!("The new bridge over the river is {a} feet long and was opened to traffic in {year} after years of delays."),
                format!("Die neue Brücke über den Fluss ist {a} {unit} lang und wurde {year} nach jahrelangen Verzögerungen für den Verkehr freigegeben."),
            )
        }
        1 => {
            let a = rng.gen_range(2..900);
            let money = if fault.is_some() { "Euro" } else { "Dollar" };
            (
                format!("Officials said the project will cost about ${a} million and should be finished by the end of {year}."),
                format!("Beamte sagten, das Projekt werde etwa {a} Millionen {money} kosten und solle bis Ende {year} fertig sein."),
            )
        }
        2 => {
            let k = rng.gen_range(5..43);
            let m = rng.gen_range(1_000..100_000u64);
            let shown = if fault.is_some() { m + 1 } else { m };
            (
                format!("Runners covered {k} kilometers in the heat on Sunday while {} spectators watched from the side of the road.", grouped(m, ',')),
                format!("Die Läufer legten am Sonntag bei Hitze {k} Kilometer zurück, während {} Zuschauer vom Straßenrand aus zusahen.", grouped(shown, '.')),
            )
        }
        3 => {
            let (d, c) = (rng.gen_range(1..10), rng.gen_range(10..100));
            let (e, f) = (rng.gen_range(1..10), rng.gen_range(10..100));
            let shown = if fault.is_some() { format!("{d}{c}") } else { format!("{d},{c}") };
            (
                format!("The company reported a profit of {d}.{c} euros per share for the third quarter, up from {e}.{f} euros a year earlier."),
                format!("Das Unternehmen meldete für das dritte Quartal einen Gewinn von {shown} Euro je Aktie nach {e},{f} Euro ein Jahr zuvor."),
            )
        }
        4 => {
            let target = if fault.is_some() {
                format!("Die Gespräche {}Hauptstadt.", "in der ".repeat(12))
            } else {
                "Die Gespräche zwischen beiden Seiten sollen nächste Woche in der Hauptstadt fortgesetzt werden, sagte ein Sprecher des Ministeriums.".to_string()
            };
            (
                "Talks between the two sides are expected to continue next week in the capital, a spokesperson for the ministry said.".to_string(),
                target,
            )
        }
        _ => {
            let h = rng.gen_range(1..12);
            let mm = *["00", "15", "30", "45"].choose(rng).unwrap();
            let day = rng.gen_range(1..29);
            let k = rng.gen_range(2..10);
            (
                format!("The meeting starts at {h}:{mm} on {day} March and is expected to last for about {k} hours."),
                format!("Das Treffen beginnt am {day}. März um {}:{mm} Uhr und soll etwa {k} Stunden dauern.", h + 12),
            )
        }
    };
    SentencePair::new(id, source, target)
}

/// `n` pairs of which `n_bad`, at random positions, carry a fault.
pub fn news_corpus(n: usize, n_bad: usize, seed: u64) -> NewsCorpus {
    let mut rng = rng(seed);
    let mut ids: Vec<u64> = (0..n as u64).collect();
    ids.shuffle(&mut rng);
    let bad: BTreeMap<u64, Fault> = ids[..n_bad]
        .iter()
        .enumerate()
        .map(|(i, &id)| (id, FAULTS[i % FAULTS.len()]))
        .collect();
    let pairs = (0..n as u64)
        .map(|id| news_pair(&mut rng, id, bad.get(&id).copied()))
        .collect();
    NewsCorpus { pairs, bad }
}
