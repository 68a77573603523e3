//! Test and training data generation by same-type trigger substitution.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{PairId, SentencePair};
use crate::table::{TransformationEntry, TransformationTable};
use crate::text::lowercase;
use crate::token::{check_pair, find_triggers, numeric_guard, GuardPolicy, SourceTokens};

/// Slot marker used in templates.
pub const PLACEHOLDER: &str = "[VAL]";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetamorphicInstance {
    pub original_id: PairId,
    pub new_source: String,
    pub substituted_from: String,
    pub substituted_to: String,
    pub type_tag: String,
    /// Character span of the substituted token in `new_source`.
    pub span: [usize; 2],
    pub token_index: usize,
}

/// Gives `replacement` the capitalization pattern of `original`: all caps, leading
/// capital, or unchanged.
pub fn match_case(original: &str, replacement: &str) -> String {
    let letters: Vec<char> = original.chars().filter(|c| c.is_alphabetic()).collect();
    if letters.len() > 1 && letters.iter().all(|c| c.is_uppercase()) {
        return replacement.to_uppercase();
    }
    match original.chars().next() {
        Some(first) if first.is_uppercase() => {
            let mut chars = replacement.chars();
            match chars.next() {
                Some(r) => r.to_uppercase().chain(chars).collect(),
                None => String::new(),
            }
        }
        _ => replacement.to_string(),
    }
}

fn splice(text: &str, start: usize, end: usize, with: &str) -> String {
    let mut out = String::with_capacity(text.len() + with.len());
    out.push_str(&text[..start]);
    out.push_str(with);
    out.push_str(&text[end..]);
    out
}

fn char_to_byte(text: &str, char_idx: usize) -> usize {
    text.char_indices()
        .nth(char_idx)
        .map(|(b, _)| b)
        .unwrap_or(text.len())
}

/// One instance per trigger occurrence and per other trigger of the same type.
/// Occurrences are substituted regardless of the numeric guard.
pub fn metamorphic_generate(
    original_id: PairId,
    sentence: &str,
    table: &TransformationTable,
) -> Vec<MetamorphicInstance> {
    let mut out = Vec::new();
    for m in find_triggers(sentence, table) {
        let start = char_to_byte(sentence, m.span.start);
        let end = char_to_byte(sentence, m.span.end);
        for other in table.entries_of_type(&m.entry.type_tag) {
            if other.trigger == m.entry.trigger {
                continue;
            }
            let replacement = match_case(&m.span.surface, &other.trigger);
            let new_source = splice(sentence, start, end, &replacement);
            let span_end = m.span.start + replacement.chars().count();
            out.push(MetamorphicInstance {
                original_id,
                new_source,
                substituted_from: m.span.surface.clone(),
                substituted_to: replacement,
                type_tag: m.entry.type_tag.clone(),
                span: [m.span.start, span_end],
                token_index: m.token_index,
            });
        }
    }
    out
}

/// A detector-clean pair with the trigger and its translation cut out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub id: usize,
    pub pair_id: PairId,
    pub source_template: String,
    pub target_template: String,
    pub slot_entry: TransformationEntry,
    /// Source surface that was excised.
    pub matched_source: String,
    /// Target surface that was excised.
    pub matched_target_form: String,
}

impl Template {
    pub fn fill(&self, source_token: &str, target_form: &str) -> (String, String) {
        (
            self.source_template.replacen(PLACEHOLDER, source_token, 1),
            self.target_template.replacen(PLACEHOLDER, target_form, 1),
        )
    }

    /// The pair the template was cut from.
    pub fn restore(&self) -> (String, String) {
        self.fill(&self.matched_source, &self.matched_target_form)
    }

    /// One pair per table entry sharing the slot's type tag, in table order.
    pub fn expand<'a>(&'a self, table: &'a TransformationTable) -> impl Iterator<Item = MetaCorpusPair> + 'a {
        table
            .entries_of_type(&self.slot_entry.type_tag)
            .map(move |entry| {
                let source_token = match_case(&self.matched_source, &entry.trigger);
                let target_form = entry.canonical_target().to_string();
                let (source, target) = self.fill(&source_token, &target_form);
                MetaCorpusPair {
                    source,
                    target,
                    provenance: Provenance {
                        template_id: self.id,
                        pair_id: self.pair_id,
                        source_token,
                        target_form,
                    },
                }
            })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub template_id: usize,
    pub pair_id: PairId,
    pub source_token: String,
    pub target_form: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetaCorpusPair {
    pub source: String,
    pub target: String,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SkipReason {
    Flagged,
    ZeroTriggers,
    MultipleTriggers,
    /// The single trigger is not numerically anchored, so the detector never checks it.
    GuardFailed,
    TargetFormNotLocatable,
    /// The pair already contains the placeholder text.
    ContainsPlaceholder,
}

impl SkipReason {
    pub const ALL: [SkipReason; 6] = [
        SkipReason::Flagged,
        SkipReason::ZeroTriggers,
        SkipReason::MultipleTriggers,
        SkipReason::GuardFailed,
        SkipReason::TargetFormNotLocatable,
        SkipReason::ContainsPlaceholder,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SkipReason::Flagged => "flagged",
            SkipReason::ZeroTriggers => "zero-triggers",
            SkipReason::MultipleTriggers => "multiple-triggers",
            SkipReason::GuardFailed => "guard-failed",
            SkipReason::TargetFormNotLocatable => "target-form-not-locatable",
            SkipReason::ContainsPlaceholder => "contains-placeholder",
        }
    }
}

impl fmt::Display for SkipReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Byte ranges of case-insensitive occurrences of `needle_lower` in `haystack`.
fn find_all_ci(haystack: &str, needle_lower: &str) -> Vec<(usize, usize)> {
    if needle_lower.is_empty() {
        return Vec::new();
    }
    let mut lowered = String::with_capacity(haystack.len());
    let mut origin = Vec::with_capacity(haystack.len() + 1);
    for (b, c) in haystack.char_indices() {
        let before = lowered.len();
        lowered.extend(c.to_lowercase());
        origin.extend(std::iter::repeat_n(b, lowered.len() - before));
    }
    origin.push(haystack.len());
    let map_end = |e: usize| -> Option<usize> {
        // Reject matches that end inside a character whose lowercase form is longer.
        (e == lowered.len() || origin[e] != origin[e - 1]).then(|| origin[e])
    };
    lowered
        .match_indices(needle_lower)
        .filter_map(|(s, m)| {
            let start = origin[s];
            if s > 0 && origin[s - 1] == start {
                return None;
            }
            Some((start, map_end(s + m.len())?))
        })
        .collect()
}

/// Locates the single target occurrence of the entry's translation. Longer forms are
/// tried first so that `Meter` wins over `m`; the first form found must occur once.
fn locate_target_form(target: &str, forms: &[String]) -> Option<(usize, usize)> {
    let mut by_len: Vec<&String> = forms.iter().collect();
    by_len.sort_by_key(|f| std::cmp::Reverse(f.chars().count()));
    for form in by_len {
        let hits = find_all_ci(target, form);
        match hits.len() {
            0 => continue,
            1 => return Some(hits[0]),
            _ => return None,
        }
    }
    None
}

/// Selection and templatization for one pair.
pub fn templatize(
    id: usize,
    pair: &SentencePair,
    table: &TransformationTable,
    policy: &GuardPolicy,
) -> Result<Template, SkipReason> {
    if pair.source.contains(PLACEHOLDER) || pair.target.contains(PLACEHOLDER) {
        return Err(SkipReason::ContainsPlaceholder);
    }
    if !check_pair(pair, table, policy).is_empty() {
        return Err(SkipReason::Flagged);
    }
    let matches = find_triggers(&pair.source, table);
    let m = match matches.as_slice() {
        [] => return Err(SkipReason::ZeroTriggers),
        [m] => m,
        _ => return Err(SkipReason::MultipleTriggers),
    };
    let tokens = SourceTokens::new(&pair.source);
    if !numeric_guard(&tokens.texts, m.token_index, policy.mode_for(m.entry)) {
        return Err(SkipReason::GuardFailed);
    }
    let mut forms: Vec<String> = m.entry.targets.iter().map(|f| lowercase(f).into_owned()).collect();
    if !forms.contains(&m.entry.trigger) {
        forms.push(m.entry.trigger.clone());
    }
    let (ts, te) = locate_target_form(&pair.target, &forms).ok_or(SkipReason::TargetFormNotLocatable)?;
    let ss = char_to_byte(&pair.source, m.span.start);
    let se = char_to_byte(&pair.source, m.span.end);
    Ok(Template {
        id,
        pair_id: pair.id,
        source_template: splice(&pair.source, ss, se, PLACEHOLDER),
        target_template: splice(&pair.target, ts, te, PLACEHOLDER),
        slot_entry: m.entry.clone(),
        matched_source: m.span.surface.clone(),
        matched_target_form: pair.target[ts..te].to_string(),
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MetaCorpus {
    pub templates: Vec<Template>,
    pub pairs: Vec<MetaCorpusPair>,
    pub skipped: BTreeMap<SkipReason, u64>,
}

impl MetaCorpus {
    pub fn skipped(&self, reason: SkipReason) -> u64 {
        self.skipped.get(&reason).copied().unwrap_or(0)
    }
}

/// Selection, templatization and substitution over a corpus, in input then table order.
pub fn meta_corpus_generate<'a>(
    corpus: impl IntoIterator<Item = &'a SentencePair>,
    table: &TransformationTable,
    policy: &GuardPolicy,
) -> MetaCorpus {
    let mut out = MetaCorpus::default();
    for pair in corpus {
        match templatize(out.templates.len(), pair, table, policy) {
            Ok(t) => {
                out.pairs.extend(t.expand(table));
                out.templates.push(t);
            }
            Err(reason) => *out.skipped.entry(reason).or_insert(0) += 1,
        }
    }
    out
}
