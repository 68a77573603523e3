//! Sequence-level detectors: coverage and hallucinations. None of them uses a
//! transformation table.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::alignment::AlignmentLinks;
use crate::corpus::{Detection, DetectorKind, PairId, SentencePair, TokenSpan};
use crate::error::{Error, Result};
use crate::text::{is_punctuation_token, whitespace_tokens};

const EN_STOPWORDS: &str = include_str!("../data/stopwords/en.txt");

/// Sources shorter than `below` tokens may leave up to `max_unaligned` content words
/// unaligned. `below: None` is the catch-all.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoverageBucket {
    pub below: Option<usize>,
    pub max_unaligned: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageConfig {
    pub stopwords: HashSet<String>,
    pub buckets: Vec<CoverageBucket>,
}

pub const DEFAULT_BUCKETS: [CoverageBucket; 4] = [
    CoverageBucket { below: Some(50), max_unaligned: 10 },
    CoverageBucket { below: Some(100), max_unaligned: 20 },
    CoverageBucket { below: Some(200), max_unaligned: 30 },
    CoverageBucket { below: None, max_unaligned: 40 },
];

/// One lowercase token per line; `#` starts a comment.
pub fn parse_stopwords(text: &str) -> HashSet<String> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Bundled stopword list for a source language.
pub fn builtin_stopwords(language: &str) -> Option<HashSet<String>> {
    match language {
        "en" => Some(parse_stopwords(EN_STOPWORDS)),
        _ => None,
    }
}

fn is_edge_punct(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '“' | '”' | '„' | '‘' | '’' | '‚' | '«' | '»' | '‹' | '›' | '…' | '–' | '—' | '¡' | '¿'
        )
}

impl CoverageConfig {
    pub fn new(stopwords: HashSet<String>, buckets: Vec<CoverageBucket>) -> Result<Self> {
        let cfg = CoverageConfig { stopwords, buckets };
        cfg.validate()?;
        Ok(cfg)
    }

    /// English stopwords and the default buckets.
    pub fn english() -> Self {
        CoverageConfig {
            stopwords: builtin_stopwords("en").expect("bundled English stopwords"),
            buckets: DEFAULT_BUCKETS.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let Some(last) = self.buckets.last() else {
            return Err(Error::Config("coverage needs at least one bucket".into()));
        };
        if last.below.is_some() {
            return Err(Error::Config("the last coverage bucket must be a catch-all".into()));
        }
        for w in self.buckets.windows(2) {
            let increasing_len = match (w[0].below, w[1].below) {
                (Some(a), Some(b)) => a < b,
                (Some(_), None) => true,
                (None, _) => false,
            };
            if !increasing_len || w[0].max_unaligned >= w[1].max_unaligned {
                return Err(Error::Config(
                    "coverage buckets must increase strictly in both length and threshold".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn threshold_for(&self, source_len: usize) -> usize {
        self.buckets
            .iter()
            .find(|b| b.below.is_none_or(|below| source_len < below))
            .map(|b| b.max_unaligned)
            .unwrap_or(usize::MAX)
    }

    /// Neither a stopword (case-insensitive, edge punctuation ignored) nor all punctuation.
    pub fn is_content_word(&self, token: &str) -> bool {
        if is_punctuation_token(token) {
            return false;
        }
        let key = token.trim_matches(is_edge_punct);
        if key.is_empty() {
            return true;
        }
        let lowered = key.to_lowercase();
        !self.stopwords.contains(&lowered)
    }
}

/// Flags the pair when more content words than the bucket allows are unaligned.
pub fn coverage_check(
    pair: &SentencePair,
    links: &AlignmentLinks,
    cfg: &CoverageConfig,
) -> Option<Detection> {
    let tokens = whitespace_tokens(&pair.source);
    let aligned = links.source_aligned();
    let unaligned: Vec<_> = tokens
        .iter()
        .enumerate()
        .filter(|(i, t)| !aligned.get(*i).copied().unwrap_or(false) && cfg.is_content_word(t.text))
        .map(|(_, t)| t)
        .collect();
    let threshold = cfg.threshold_for(tokens.len());
    if unaligned.len() <= threshold {
        return None;
    }
    let words: Vec<&str> = unaligned.iter().map(|t| t.text).collect();
    Some(Detection {
        pair_id: pair.id,
        detector: DetectorKind::Coverage,
        source_spans: unaligned
            .iter()
            .map(|t| TokenSpan::from_byte_range(&pair.source, t.start, t.end))
            .collect(),
        evidence: format!(
            "{} content words unaligned, threshold {} for a {}-token source: {}",
            unaligned.len(),
            threshold,
            tokens.len(),
            words.join(" ")
        ),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HallucinationConfig {
    pub oscillatory_margin: usize,
    pub oscillatory_floor: usize,
    pub natural_min_sources: usize,
}

impl Default for HallucinationConfig {
    fn default() -> Self {
        HallucinationConfig {
            oscillatory_margin: 4,
            oscillatory_floor: 10,
            natural_min_sources: 5,
        }
    }
}

impl HallucinationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.oscillatory_margin == 0 || self.oscillatory_floor == 0 || self.natural_min_sources == 0 {
            return Err(Error::Config("hallucination thresholds must be positive".into()));
        }
        Ok(())
    }
}

/// Most frequent whitespace-token bigram: `(count, first, second)`. Ties go to the
/// bigram that reached the count first.
pub fn max_bigram(text: &str) -> Option<(usize, &str, &str)> {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    let mut counts: HashMap<(&str, &str), usize> = HashMap::with_capacity(tokens.len());
    let mut best: Option<(usize, &str, &str)> = None;
    for w in tokens.windows(2) {
        let c = counts.entry((w[0], w[1])).or_insert(0);
        *c += 1;
        if best.is_none_or(|(n, _, _)| *c > n) {
            best = Some((*c, w[0], w[1]));
        }
    }
    best
}

/// Flags a target whose top bigram repeats far more often than any source bigram.
pub fn oscillatory_check(pair: &SentencePair, cfg: &HallucinationConfig) -> Option<Detection> {
    // A bigram needs at least floor + 2 tokens to occur more than floor times.
    if pair.target.split_whitespace().nth(cfg.oscillatory_floor + 1).is_none() {
        return None;
    }
    let (tgt_count, a, b) = max_bigram(&pair.target)?;
    if tgt_count <= cfg.oscillatory_floor {
        return None;
    }
    let src_count = max_bigram(&pair.source).map_or(0, |(n, _, _)| n);
    if tgt_count < src_count + cfg.oscillatory_margin {
        return None;
    }
    Some(Detection {
        pair_id: pair.id,
        detector: DetectorKind::HallucinationOscillatory,
        source_spans: Vec::new(),
        evidence: format!(
            "target bigram '{a} {b}' occurs {tgt_count} times; most frequent source bigram occurs {src_count} times"
        ),
    })
}

/// Whitespace-trimmed target with internal runs collapsed to one space.
pub fn normalize_target(target: &str) -> String {
    let mut out = String::with_capacity(target.len());
    for (i, tok) in target.split_whitespace().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(tok);
    }
    out
}

#[derive(Debug, Clone, Default)]
struct TargetGroup {
    lengths: BTreeSet<usize>,
    members: Vec<PairId>,
}

/// Grouping state for the natural-hallucination scan. Feed pairs in any order, merge
/// partial scans, then call [`NaturalScan::finish`].
#[derive(Debug, Clone, Default)]
pub struct NaturalScan {
    groups: HashMap<String, TargetGroup>,
}

const EVIDENCE_IDS: usize = 20;

impl NaturalScan {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observe(&mut self, pair: &SentencePair) {
        self.observe_normalized(
            normalize_target(&pair.target),
            pair.source.split_whitespace().count(),
            pair.id,
        );
    }

    /// Records a pair from its already normalized target and source token count.
    pub fn observe_normalized(&mut self, key: String, source_len: usize, id: PairId) {
        if key.is_empty() {
            return;
        }
        let group = self.groups.entry(key).or_default();
        group.lengths.insert(source_len);
        group.members.push(id);
    }

    pub fn merge(&mut self, other: NaturalScan) {
        for (key, g) in other.groups {
            let mine = self.groups.entry(key).or_default();
            mine.lengths.extend(g.lengths);
            mine.members.extend(g.members);
        }
    }

    /// One detection per member of every group with enough distinct source lengths,
    /// sorted by pair id.
    pub fn finish(self, cfg: &HallucinationConfig) -> Vec<Detection> {
        let mut out = Vec::new();
        for (target, mut g) in self.groups {
            if g.lengths.len() < cfg.natural_min_sources {
                continue;
            }
            g.members.sort_unstable();
            let shown: Vec<String> = g.members.iter().take(EVIDENCE_IDS).map(|id| id.to_string()).collect();
            let more = g.members.len().saturating_sub(EVIDENCE_IDS);
            let mut ids = shown.join(",");
            if more > 0 {
                ids.push_str(&format!(" and {more} more"));
            }
            let evidence = format!(
                "target '{target}' is shared by {} sources of {} distinct lengths (pairs {ids})",
                g.members.len(),
                g.lengths.len()
            );
            for &id in &g.members {
                out.push(Detection {
                    pair_id: id,
                    detector: DetectorKind::HallucinationNatural,
                    source_spans: Vec::new(),
                    evidence: evidence.clone(),
                });
            }
        }
        out.sort_by_key(|d| d.pair_id);
        out
    }
}

pub fn natural_hallucination_scan<'a>(
    corpus: impl IntoIterator<Item = &'a SentencePair>,
    cfg: &HallucinationConfig,
) -> Vec<Detection> {
    let mut scan = NaturalScan::new();
    for pair in corpus {
        scan.observe(pair);
    }
    scan.finish(cfg)
}
