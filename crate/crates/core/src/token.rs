//! Table-driven token-level detection.
//!
//! A trigger is a whole source token (after trailing punctuation is stripped) that is
//! listed in a transformation table. When the trigger passes its numeric guard, the
//! translation must contain at least one allowed form of it as a case-insensitive
//! substring; forms need not be space-delimited in the target.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use regex::Regex;

use crate::corpus::{Detection, DetectorKind, PairId, SentencePair, TokenSpan};
use crate::error::Error;
use crate::table::{builtin_table, Category, LanguagePair, TransformationEntry, TransformationTable};
use crate::text::{self, lowercase, match_key, strip_trailing_punct, Token};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GuardMode {
    /// Every trigger occurrence counts.
    None,
    /// The preceding token must be a number or a number word.
    NumericAntecedent,
    /// The preceding or following token must be a number.
    NumericAdjacent,
}

impl GuardMode {
    pub fn as_str(self) -> &'static str {
        match self {
            GuardMode::None => "none",
            GuardMode::NumericAntecedent => "numeric-antecedent",
            GuardMode::NumericAdjacent => "numeric-adjacent",
        }
    }
}

impl fmt::Display for GuardMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GuardMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "none" => Ok(GuardMode::None),
            "numeric-antecedent" => Ok(GuardMode::NumericAntecedent),
            "numeric-adjacent" => Ok(GuardMode::NumericAdjacent),
            _ => Err(Error::Config(format!(
                "unknown guard mode '{s}' (expected none, numeric-antecedent or numeric-adjacent)"
            ))),
        }
    }
}

/// Guard mode for a table, optionally refined per entry type tag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GuardPolicy {
    pub mode: GuardMode,
    pub by_type: BTreeMap<String, GuardMode>,
}

impl GuardPolicy {
    pub fn uniform(mode: GuardMode) -> Self {
        GuardPolicy {
            mode,
            by_type: BTreeMap::new(),
        }
    }

    /// Units and text-form currencies need a preceding number, currency symbols a
    /// neighbouring one; large numbers and web terms are unguarded.
    pub fn for_category(category: Category) -> Self {
        match category {
            Category::PhysicalUnits => Self::uniform(GuardMode::NumericAntecedent),
            Category::Currencies => Self::uniform(GuardMode::NumericAntecedent)
                .with_type("sym", GuardMode::NumericAdjacent),
            Category::LargeNumbers | Category::WebTerms => Self::uniform(GuardMode::None),
        }
    }

    pub fn with_type(mut self, type_tag: &str, mode: GuardMode) -> Self {
        self.by_type.insert(type_tag.to_string(), mode);
        self
    }

    pub fn mode_for(&self, entry: &TransformationEntry) -> GuardMode {
        self.by_type
            .get(&entry.type_tag)
            .copied()
            .unwrap_or(self.mode)
    }
}

/// A trigger occurrence in a source sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriggerMatch<'t> {
    pub entry: &'t TransformationEntry,
    pub span: TokenSpan,
    /// Index into [`crate::text::trigger_tokens`] of the source.
    pub token_index: usize,
}

const NUMBER_WORDS: &[&str] = &[
    "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "eleven",
    "twelve", "thirteen", "fourteen", "fifteen", "sixteen", "seventeen", "eighteen", "nineteen",
    "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety", "hundred",
    "thousand",
];

/// Separators allowed inside a numeric token.
const NUMERIC_SEPARATORS: &[char] = &[
    '.', ',', '\'', '’', ':', '/', '-', '–', '\u{A0}', '\u{202F}',
];

/// Prefix characters ignored when deciding whether a token is a number.
const NUMERIC_PREFIXES: &[char] = &['(', '~', '+', '-', '±', '≈', '−'];

/// True for tokens such as `6`, `10,000`, `2.5`, `5-6` (trailing punctuation ignored).
pub fn is_numeric_token(token: &str) -> bool {
    let core = strip_trailing_punct(token).trim_start_matches(NUMERIC_PREFIXES);
    let mut digits = 0;
    for c in core.chars() {
        if c.is_ascii_digit() {
            digits += 1;
        } else if !NUMERIC_SEPARATORS.contains(&c) {
            return false;
        }
    }
    digits > 0
}

/// English cardinal words one to twenty, the tens, hundred and thousand, also in
/// hyphenated compounds (`twenty-five`).
pub fn is_number_word(token: &str) -> bool {
    let key = match_key(token);
    let key = key.trim_start_matches('(');
    !key.is_empty() && key.split('-').all(|part| NUMBER_WORDS.contains(&part))
}

/// Whether the trigger at `index` satisfies `mode`. Out-of-range indices fail the guard.
pub fn numeric_guard(tokens: &[&str], index: usize, mode: GuardMode) -> bool {
    if index >= tokens.len() {
        return false;
    }
    match mode {
        GuardMode::None => true,
        GuardMode::NumericAntecedent => index
            .checked_sub(1)
            .map(|p| is_numeric_token(tokens[p]) || is_number_word(tokens[p]))
            .unwrap_or(false),
        GuardMode::NumericAdjacent => {
            let before = index
                .checked_sub(1)
                .is_some_and(|p| is_numeric_token(tokens[p]));
            let after = tokens.get(index + 1).is_some_and(|t| is_numeric_token(t));
            let fused = tokens[index].chars().any(|c| c.is_ascii_digit());
            before || after || fused
        }
    }
}

/// A source sentence tokenized once for every table.
pub(crate) struct SourceTokens<'a> {
    pub text: &'a str,
    pub tokens: Vec<Token<'a>>,
    pub texts: Vec<&'a str>,
}

impl<'a> SourceTokens<'a> {
    pub fn new(text: &'a str) -> Self {
        let tokens = text::trigger_tokens(text);
        let texts = tokens.iter().map(|t| t.text).collect();
        SourceTokens {
            text,
            tokens,
            texts,
        }
    }
}

/// Raw trigger occurrence: (entry index, token index, byte start, byte end).
pub(crate) type RawMatch = (usize, usize, usize, usize);

pub(crate) fn raw_matches(src: &SourceTokens<'_>, table: &TransformationTable) -> Vec<RawMatch> {
    let mut out = Vec::new();
    if table.is_empty() {
        return out;
    }
    for (ti, tok) in src.tokens.iter().enumerate() {
        let key = match_key(tok.text);
        let Some(ei) = table.position(&key) else {
            continue;
        };
        let entry = &table.entries()[ei];
        let stripped_len = strip_trailing_punct(tok.text).len();
        // A trigger that itself ends in punctuation (`sq.ft.`) keeps it in the span.
        let mut end = tok.start + stripped_len;
        if entry.trigger.len() > key.len() {
            let lowered = lowercase(tok.text);
            if lowered.starts_with(entry.trigger.as_str()) {
                let n = entry.trigger.chars().count();
                end = tok
                    .text
                    .char_indices()
                    .nth(n)
                    .map(|(b, _)| tok.start + b)
                    .unwrap_or(tok.end);
            }
        }
        out.push((ei, ti, tok.start, end));
    }
    out
}

/// Every whole-token occurrence of a table trigger, left to right.
pub fn find_triggers<'t>(source: &str, table: &'t TransformationTable) -> Vec<TriggerMatch<'t>> {
    let src = SourceTokens::new(source);
    raw_matches(&src, table)
        .into_iter()
        .map(|(ei, ti, start, end)| TriggerMatch {
            entry: &table.entries()[ei],
            span: TokenSpan::from_byte_range(source, start, end),
            token_index: ti,
        })
        .collect()
}

pub(crate) fn check_prepared(
    pair_id: PairId,
    src: &SourceTokens<'_>,
    target_lower: &str,
    table: &TransformationTable,
    policy: &GuardPolicy,
    out: &mut Vec<Detection>,
) {
    let detector = table.category().detector();
    for (ei, ti, start, end) in raw_matches(src, table) {
        let entry = &table.entries()[ei];
        if !numeric_guard(&src.texts, ti, policy.mode_for(entry)) {
            continue;
        }
        let forms = table.folded_forms(ei);
        if forms.iter().any(|f| target_lower.contains(f.as_str())) {
            continue;
        }
        let span = TokenSpan::from_byte_range(src.text, start, end);
        let evidence = format!(
            "'{}' has no allowed translation in the target (expected one of: {})",
            span.surface,
            entry.targets.join(", ")
        );
        out.push(Detection {
            pair_id,
            detector,
            source_spans: vec![span],
            evidence,
        });
    }
}

/// One detection per guarded trigger none of whose target forms occurs in the target.
pub fn check_pair(
    pair: &SentencePair,
    table: &TransformationTable,
    policy: &GuardPolicy,
) -> Vec<Detection> {
    let mut out = Vec::new();
    if table.is_empty() {
        return out;
    }
    let src = SourceTokens::new(&pair.source);
    let target_lower = lowercase(&pair.target);
    check_prepared(pair.id, &src, &target_lower, table, policy, &mut out);
    out
}

static URL: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)(?:\b[a-z][a-z0-9+.\-]*://|\bwww\.)\S+").expect("static regex")
});

/// URL-like substrings of `text` (byte ranges), trailing sentence punctuation removed.
pub fn extract_urls(text: &str) -> Vec<(usize, usize)> {
    URL.find_iter(text)
        .filter_map(|m| {
            let trimmed = strip_trailing_punct(m.as_str());
            let body = trimmed
                .split_once("://")
                .map(|(_, rest)| rest)
                .or_else(|| trimmed.get(4..))
                .unwrap_or("");
            (!body.is_empty()).then(|| (m.start(), m.start() + trimmed.len()))
        })
        .collect()
}

pub(crate) fn check_urls(pair_id: PairId, source: &str, target: &str, out: &mut Vec<Detection>) {
    for (start, end) in extract_urls(source) {
        let url = &source[start..end];
        if !target.contains(url) {
            out.push(Detection {
                pair_id,
                detector: DetectorKind::WebTerms,
                source_spans: vec![TokenSpan::from_byte_range(source, start, end)],
                evidence: format!("URL '{url}' is not copied verbatim into the target"),
            });
        }
    }
}

/// URL copying check plus the identity table for bare web terms.
pub fn check_web_terms_with(pair: &SentencePair, table: &TransformationTable) -> Vec<Detection> {
    let mut out = Vec::new();
    check_urls(pair.id, &pair.source, &pair.target, &mut out);
    out.extend(check_pair(pair, table, &GuardPolicy::uniform(GuardMode::None)));
    out
}

/// [`check_web_terms_with`] using the bundled en-de web-terms table.
pub fn check_web_terms(pair: &SentencePair) -> Vec<Detection> {
    static TABLE: LazyLock<TransformationTable> = LazyLock::new(|| {
        builtin_table(&LanguagePair::en_de(), Category::WebTerms).expect("bundled web-terms table")
    });
    check_web_terms_with(pair, &TABLE)
}
