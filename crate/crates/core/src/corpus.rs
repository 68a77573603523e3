//! Sentence pairs, bitext I/O, detection records and corpus statistics.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type PairId = u64;

/// One source sentence and one candidate translation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SentencePair {
    pub id: PairId,
    pub source: String,
    pub target: String,
}

impl SentencePair {
    /// Builds a pair, stripping line breaks and NUL from both sides.
    pub fn new(id: PairId, source: impl Into<String>, target: impl Into<String>) -> Self {
        SentencePair {
            id,
            source: strip_framing(source.into()),
            target: strip_framing(target.into()),
        }
    }
}

fn is_framing_char(c: char) -> bool {
    matches!(
        c,
        '\n' | '\r' | '\0' | '\u{0B}' | '\u{0C}' | '\u{85}' | '\u{2028}' | '\u{2029}'
    )
}

fn strip_framing(mut s: String) -> String {
    if s.contains(is_framing_char) {
        s.retain(|c| !is_framing_char(c));
    }
    s
}

/// A character-offset span into an owning string.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TokenSpan {
    pub start: usize,
    pub end: usize,
    pub surface: String,
}

impl TokenSpan {
    /// Converts a byte range of `text` into a character-offset span.
    pub fn from_byte_range(text: &str, start: usize, end: usize) -> Self {
        let char_start = text[..start].chars().count();
        let surface = &text[start..end];
        TokenSpan {
            start: char_start,
            end: char_start + surface.chars().count(),
            surface: surface.to_string(),
        }
    }
}

/// The eight detector names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DetectorKind {
    PhysicalUnits,
    Currencies,
    LargeNumbers,
    WebTerms,
    NumericalValues,
    Coverage,
    HallucinationOscillatory,
    HallucinationNatural,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 8] = [
        DetectorKind::PhysicalUnits,
        DetectorKind::Currencies,
        DetectorKind::LargeNumbers,
        DetectorKind::WebTerms,
        DetectorKind::NumericalValues,
        DetectorKind::Coverage,
        DetectorKind::HallucinationOscillatory,
        DetectorKind::HallucinationNatural,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DetectorKind::PhysicalUnits => "physical-units",
            DetectorKind::Currencies => "currencies",
            DetectorKind::LargeNumbers => "large-numbers",
            DetectorKind::WebTerms => "web-terms",
            DetectorKind::NumericalValues => "numerical-values",
            DetectorKind::Coverage => "coverage",
            DetectorKind::HallucinationOscillatory => "hallucination-oscillatory",
            DetectorKind::HallucinationNatural => "hallucination-natural",
        }
    }

    /// Token-level detectors are driven by a trigger in the source.
    pub fn is_token_level(self) -> bool {
        !matches!(
            self,
            DetectorKind::Coverage
                | DetectorKind::HallucinationOscillatory
                | DetectorKind::HallucinationNatural
        )
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DetectorKind::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown detector '{s}' (expected one of: {})",
                    DetectorKind::ALL.map(|d| d.as_str()).join(", ")
                ))
            })
    }
}

/// A single flagged error.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Detection {
    pub pair_id: PairId,
    pub detector: DetectorKind,
    pub source_spans: Vec<TokenSpan>,
    pub evidence: String,
}

/// One line of the detection report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub pair_id: PairId,
    pub detector: String,
    pub spans: Vec<[usize; 2]>,
    pub evidence: String,
}

impl From<&Detection> for ReportRecord {
    fn from(d: &Detection) -> Self {
        ReportRecord {
            pair_id: d.pair_id,
            detector: d.detector.as_str().to_string(),
            spans: d.source_spans.iter().map(|s| [s.start, s.end]).collect(),
            evidence: d.evidence.clone(),
        }
    }
}

/// Writes one JSON record per detection.
pub fn write_report<'a, I, W>(detections: I, sink: &mut W) -> Result<()>
where
    I: IntoIterator<Item = &'a Detection>,
    W: Write + ?Sized,
{
    for d in detections {
        write_record(&ReportRecord::from(d), sink)?;
    }
    Ok(())
}

pub(crate) fn write_record<W: Write + ?Sized>(record: &ReportRecord, sink: &mut W) -> Result<()> {
    let line = serde_json::to_string(record)
        .map_err(|e| Error::Invariant(format!("report serialization: {e}")))?;
    sink.write_all(line.as_bytes())
        .and_then(|_| sink.write_all(b"\n"))
        .map_err(|e| Error::io("writing report", e))
}

/// Parses a report previously produced by [`write_report`].
pub fn read_report<R: BufRead>(reader: R) -> Result<Vec<ReportRecord>> {
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("reading report", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ReportRecord = serde_json::from_str(&line).map_err(|e| Error::Report {
            line: idx + 1,
            message: e.to_string(),
        })?;
        DetectorKind::from_str(&record.detector).map_err(|e| Error::Report {
            line: idx + 1,
            message: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}

/// Where a bitext comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BitextFormat {
    /// `source<TAB>target` per line.
    Tsv(PathBuf),
    /// Two line-aligned files.
    Parallel { source: PathBuf, target: PathBuf },
}

/// Line numbers of malformed input lines are kept up to this many.
const MAX_RECORDED_MALFORMED: usize = 1000;

enum Lines {
    Tsv(Box<dyn BufRead + Send>),
    Parallel {
        source: Box<dyn BufRead + Send>,
        target: Box<dyn BufRead + Send>,
    },
}

/// Streaming reader yielding [`SentencePair`]s with 0-based line ids.
pub struct BitextReader {
    lines: Lines,
    line_no: u64,
    malformed: u64,
    malformed_lines: Vec<u64>,
    done: bool,
    buf_a: Vec<u8>,
    buf_b: Vec<u8>,
}

impl BitextReader {
    pub fn open(format: &BitextFormat) -> Result<Self> {
        let open = |p: &Path| -> Result<Box<dyn BufRead + Send>> {
            let f = File::open(p).map_err(|e| Error::io_path(p, e))?;
            Ok(Box::new(BufReader::with_capacity(1 << 16, f)))
        };
        Ok(match format {
            BitextFormat::Tsv(p) => Self::tsv(open(p)?),
            BitextFormat::Parallel { source, target } => {
                Self::parallel(open(source)?, open(target)?)
            }
        })
    }

    pub fn tsv(reader: impl BufRead + Send + 'static) -> Self {
        Self::with_lines(Lines::Tsv(Box::new(reader)))
    }

    pub fn parallel(
        source: impl BufRead + Send + 'static,
        target: impl BufRead + Send + 'static,
    ) -> Self {
        Self::with_lines(Lines::Parallel {
            source: Box::new(source),
            target: Box::new(target),
        })
    }

    fn with_lines(lines: Lines) -> Self {
        BitextReader {
            lines,
            line_no: 0,
            malformed: 0,
            malformed_lines: Vec::new(),
            done: false,
            buf_a: Vec::new(),
            buf_b: Vec::new(),
        }
    }

    /// Number of skipped lines so far.
    pub fn malformed(&self) -> u64 {
        self.malformed
    }

    /// 0-based line numbers of skipped lines (first 1000 only).
    pub fn malformed_lines(&self) -> &[u64] {
        &self.malformed_lines
    }

    fn record_malformed(&mut self, line: u64) {
        self.malformed += 1;
        if self.malformed_lines.len() < MAX_RECORDED_MALFORMED {
            self.malformed_lines.push(line);
        }
    }

    fn next_pair(&mut self) -> Result<Option<SentencePair>> {
        loop {
            let line = self.line_no;
            match &mut self.lines {
                Lines::Tsv(reader) => {
                    if !read_line(reader.as_mut(), &mut self.buf_a)? {
                        return Ok(None);
                    }
                    self.line_no += 1;
                    let parsed = std::str::from_utf8(&self.buf_a).ok().and_then(|text| {
                        let mut parts = text.split('\t');
                        match (parts.next(), parts.next(), parts.next()) {
                            (Some(s), Some(t), None) => Some(SentencePair::new(line, s, t)),
                            _ => None,
                        }
                    });
                    match parsed {
                        Some(pair) => return Ok(Some(pair)),
                        None => self.record_malformed(line),
                    }
                }
                Lines::Parallel { source, target } => {
                    let has_src = read_line(source.as_mut(), &mut self.buf_a)?;
                    let has_tgt = read_line(target.as_mut(), &mut self.buf_b)?;
                    match (has_src, has_tgt) {
                        (false, false) => return Ok(None),
                        (true, false) => {
                            let rest = count_lines(source.as_mut())?;
                            return Err(Error::UnequalLength {
                                source_lines: line + 1 + rest,
                                target_lines: line,
                            });
                        }
                        (false, true) => {
                            let rest = count_lines(target.as_mut())?;
                            return Err(Error::UnequalLength {
                                source_lines: line,
                                target_lines: line + 1 + rest,
                            });
                        }
                        (true, true) => {}
                    }
                    self.line_no += 1;
                    match (
                        std::str::from_utf8(&self.buf_a),
                        std::str::from_utf8(&self.buf_b),
                    ) {
                        (Ok(s), Ok(t)) => return Ok(Some(SentencePair::new(line, s, t))),
                        _ => self.record_malformed(line),
                    }
                }
            }
        }
    }
}

impl Iterator for BitextReader {
    type Item = Result<SentencePair>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.next_pair() {
            Ok(Some(pair)) => Some(Ok(pair)),
            Ok(None) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

/// Reads one LF-terminated line without the terminator (and without a trailing CR).
fn read_line(reader: &mut dyn BufRead, buf: &mut Vec<u8>) -> Result<bool> {
    buf.clear();
    let n = reader
        .read_until(b'\n', buf)
        .map_err(|e| Error::io("reading bitext", e))?;
    if n == 0 {
        return Ok(false);
    }
    if buf.last() == Some(&b'\n') {
        buf.pop();
        if buf.last() == Some(&b'\r') {
            buf.pop();
        }
    }
    Ok(true)
}

fn count_lines(reader: &mut dyn BufRead) -> Result<u64> {
    let mut buf = Vec::new();
    let mut n = 0;
    while read_line(reader, &mut buf)? {
        n += 1;
    }
    Ok(n)
}

/// Writes pairs as `source<TAB>target` lines.
pub fn write_bitext<'a, I, W>(pairs: I, sink: &mut W) -> Result<()>
where
    I: IntoIterator<Item = &'a SentencePair>,
    W: Write + ?Sized,
{
    for p in pairs {
        write_pair(p, sink)?;
    }
    Ok(())
}

pub(crate) fn write_pair<W: Write + ?Sized>(pair: &SentencePair, sink: &mut W) -> Result<()> {
    writeln!(sink, "{}\t{}", pair.source, pair.target).map_err(|e| Error::io("writing bitext", e))
}

/// Per-detector counts of flagged pairs plus corpus totals.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusStats {
    pub per_detector: BTreeMap<DetectorKind, u64>,
    pub total_processed: u64,
    pub total_flagged: u64,
    pub malformed: u64,
    pub alignment_unavailable: u64,
}

impl CorpusStats {
    pub fn count(&self, detector: DetectorKind) -> u64 {
        self.per_detector.get(&detector).copied().unwrap_or(0)
    }

    pub(crate) fn bump(&mut self, detector: DetectorKind) {
        *self.per_detector.entry(detector).or_insert(0) += 1;
    }

    /// Flagged pairs over processed pairs; `None` for an empty corpus.
    pub fn incidence_rate(&self) -> Option<f64> {
        (self.total_processed > 0).then(|| self.total_flagged as f64 / self.total_processed as f64)
    }

    /// Recomputes counts from report records. `total_processed` comes from elsewhere.
    pub fn from_records(records: &[ReportRecord], total_processed: u64) -> Result<Self> {
        use std::collections::HashSet;
        let mut seen: HashSet<(PairId, DetectorKind)> = HashSet::new();
        let mut flagged: HashSet<PairId> = HashSet::new();
        let mut stats = CorpusStats {
            total_processed,
            ..Default::default()
        };
        for r in records {
            let kind = DetectorKind::from_str(&r.detector)?;
            if seen.insert((r.pair_id, kind)) {
                stats.bump(kind);
            }
            flagged.insert(r.pair_id);
        }
        stats.total_flagged = flagged.len() as u64;
        Ok(stats)
    }

    /// Plain-text table: one row per error class, then totals.
    pub fn render(&self) -> String {
        let rows: [(&str, u64); 7] = [
            ("Coverage", self.count(DetectorKind::Coverage)),
            (
                "Hallucinations",
                self.count(DetectorKind::HallucinationOscillatory)
                    + self.count(DetectorKind::HallucinationNatural),
            ),
            ("Physical Units", self.count(DetectorKind::PhysicalUnits)),
            ("Currencies", self.count(DetectorKind::Currencies)),
            ("Large Numbers", self.count(DetectorKind::LargeNumbers)),
            ("Web Content", self.count(DetectorKind::WebTerms)),
            ("Numerical Values", self.count(DetectorKind::NumericalValues)),
        ];
        let total: u64 = rows.iter().map(|r| r.1).sum();
        let mut out = String::new();
        let mut line = |label: &str, value: String| {
            out.push_str(&format!("{label:<20}{value:>12}\n"));
        };
        line("Property", "Count".to_string());
        for (label, n) in rows {
            line(label, n.to_string());
        }
        out.push_str(&"-".repeat(32));
        out.push('\n');
        let mut line = |label: &str, value: String| {
            out.push_str(&format!("{label:<20}{value:>12}\n"));
        };
        line("Total Errors", total.to_string());
        line("Pairs processed", self.total_processed.to_string());
        line("Pairs flagged", self.total_flagged.to_string());
        line(
            "Incidence rate",
            match self.incidence_rate() {
                Some(r) => format!("{:.3}%", r * 100.0),
                None => "n/a".to_string(),
            },
        );
        if self.malformed > 0 {
            line("Malformed lines", self.malformed.to_string());
        }
        if self.alignment_unavailable > 0 {
            line("Unaligned pairs", self.alignment_unavailable.to_string());
        }
        out
    }
}

/// Reads every pair of an in-memory TSV, e.g. for tests and fixtures.
pub fn pairs_from_tsv(text: &str) -> Result<Vec<SentencePair>> {
    BitextReader::tsv(io::Cursor::new(text.as_bytes().to_vec())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn reader(text: &str) -> BitextReader {
        BitextReader::tsv(Cursor::new(text.as_bytes().to_vec()))
    }

    #[test]
    fn tsv_line_splits_into_pair() {
        let pairs: Vec<_> = reader("Hello\tHola\n").collect::<Result<_>>().unwrap();
        assert_eq!(pairs, vec![SentencePair::new(0, "Hello", "Hola")]);
    }

    #[test]
    fn missing_tab_is_skipped_and_counted() {
        let mut r = reader("Hello\tHola\nno tab here\nBye\tAdios\n");
        let pairs: Vec<_> = r.by_ref().collect::<Result<_>>().unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[1].id, 2);
        assert_eq!(r.malformed(), 1);
        assert_eq!(r.malformed_lines(), &[1]);
    }

    #[test]
    fn extra_tab_and_bad_utf8_are_malformed() {
        let mut bytes = b"a\tb\tc\n".to_vec();
        bytes.extend_from_slice(b"\xff\xfe\tx\n");
        bytes.extend_from_slice(b"ok\tfine");
        let mut r = BitextReader::tsv(Cursor::new(bytes));
        let pairs: Vec<_> = r.by_ref().collect::<Result<_>>().unwrap();
        assert_eq!(pairs, vec![SentencePair::new(2, "ok", "fine")]);
        assert_eq!(r.malformed(), 2);
    }

    #[test]
    fn crlf_and_nul_are_stripped() {
        let pairs = pairs_from_tsv("a\0b\tc\r\n").unwrap();
        assert_eq!(pairs[0].source, "ab");
        assert_eq!(pairs[0].target, "c");
    }

    #[test]
    fn unequal_parallel_files_name_both_counts() {
        let src = Cursor::new(b"one\ntwo\nthree\n".to_vec());
        let tgt = Cursor::new(b"eins\nzwei\n".to_vec());
        let result: Result<Vec<_>> = BitextReader::parallel(src, tgt).collect();
        match result {
            Err(Error::UnequalLength {
                source_lines,
                target_lines,
            }) => {
                assert_eq!((source_lines, target_lines), (3, 2));
            }
            other => panic!("expected unequal length error, got {other:?}"),
        }
    }

    #[test]
    fn parallel_files_zip() {
        let src = Cursor::new(b"one\ntwo\n".to_vec());
        let tgt = Cursor::new(b"eins\nzwei\n".to_vec());
        let pairs: Vec<_> = BitextReader::parallel(src, tgt)
            .collect::<Result<_>>()
            .unwrap();
        assert_eq!(pairs[1], SentencePair::new(1, "two", "zwei"));
    }

    #[test]
    fn empty_report_is_empty() {
        let mut out = Vec::new();
        write_report(&[], &mut out).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn report_record_has_all_fields() {
        let d = Detection {
            pair_id: 3,
            detector: DetectorKind::PhysicalUnits,
            source_spans: vec![TokenSpan {
                start: 5,
                end: 9,
                surface: "feet".into(),
            }],
            evidence: "no form of feet".into(),
        };
        let mut out = Vec::new();
        write_report([&d], &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(
            text,
            "{\"pair_id\":3,\"detector\":\"physical-units\",\"spans\":[[5,9]],\"evidence\":\"no form of feet\"}\n"
        );
        let back = read_report(Cursor::new(text)).unwrap();
        assert_eq!(back, vec![ReportRecord::from(&d)]);
    }

    #[test]
    fn unknown_detector_in_report_is_rejected() {
        let text = "{\"pair_id\":0,\"detector\":\"spelling\",\"spans\":[],\"evidence\":\"\"}\n";
        assert!(matches!(
            read_report(Cursor::new(text)),
            Err(Error::Report { line: 1, .. })
        ));
    }

    #[test]
    fn span_offsets_are_in_characters() {
        let text = "über 6 Fuß";
        let start = text.find("Fuß").unwrap();
        let span = TokenSpan::from_byte_range(text, start, text.len());
        assert_eq!((span.start, span.end), (7, 10));
        assert_eq!(span.surface, "Fuß");
    }

    #[test]
    fn empty_stats_render_zeroes() {
        let rendered = CorpusStats::default().render();
        assert!(rendered.contains("Total Errors"));
        assert!(rendered.contains("n/a"));
        for line in rendered.lines().skip(1).take(7) {
            assert!(line.trim_end().ends_with(" 0"), "{line}");
        }
    }

    #[test]
    fn stats_from_records_count_pairs_not_records() {
        let rec = |id, det: &str| ReportRecord {
            pair_id: id,
            detector: det.into(),
            spans: vec![],
            evidence: String::new(),
        };
        let records = vec![
            rec(0, "physical-units"),
            rec(0, "physical-units"),
            rec(0, "numerical-values"),
            rec(4, "coverage"),
        ];
        let stats = CorpusStats::from_records(&records, 10).unwrap();
        assert_eq!(stats.count(DetectorKind::PhysicalUnits), 1);
        assert_eq!(stats.total_flagged, 2);
        assert_eq!(stats.incidence_rate(), Some(0.2));
    }
}
