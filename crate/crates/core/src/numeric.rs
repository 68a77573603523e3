//! Numerical value detection.
//!
//! Numbers are extracted from the source, and for each one a set of acceptable target
//! renderings is generated on the fly: the verbatim string, the same value under the
//! target locale's separators, the 12-hour shifted clock time, the day/month swapped
//! date, and small integers spelled out in the target language.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use crate::corpus::{Detection, DetectorKind, PairId, SentencePair, TokenSpan};
use crate::error::{Error, Result};
use crate::text::lowercase;

/// Decimal and digit-group marks of a written language.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LocaleConvention {
    pub decimal_mark: char,
    pub group_mark: char,
}

impl LocaleConvention {
    pub const EN: LocaleConvention = LocaleConvention {
        decimal_mark: '.',
        group_mark: ',',
    };
    pub const DE: LocaleConvention = LocaleConvention {
        decimal_mark: ',',
        group_mark: '.',
    };

    pub fn new(decimal_mark: char, group_mark: char) -> Result<Self> {
        if decimal_mark == group_mark {
            return Err(Error::Config(format!(
                "decimal mark and group mark must differ (both '{decimal_mark}')"
            )));
        }
        if decimal_mark.is_ascii_digit() || group_mark.is_ascii_digit() {
            return Err(Error::Config("separator marks cannot be digits".into()));
        }
        Ok(LocaleConvention {
            decimal_mark,
            group_mark,
        })
    }

    pub fn for_language(code: &str) -> Option<Self> {
        match code {
            "en" => Some(Self::EN),
            "de" => Some(Self::DE),
            _ => None,
        }
    }
}

/// An exact decimal number: integer digits without leading zeros, fraction digits
/// without trailing zeros.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Decimal {
    int: String,
    frac: String,
}

impl Decimal {
    pub fn from_digits(int_digits: &str, frac_digits: &str) -> Option<Self> {
        if !int_digits.bytes().all(|b| b.is_ascii_digit())
            || !frac_digits.bytes().all(|b| b.is_ascii_digit())
            || (int_digits.is_empty() && frac_digits.is_empty())
        {
            return None;
        }
        let int = int_digits.trim_start_matches('0');
        let frac = frac_digits.trim_end_matches('0');
        Some(Decimal {
            int: if int.is_empty() { "0".into() } else { int.into() },
            frac: frac.into(),
        })
    }

    /// Strict parse of a digit string with the locale's marks. Groups must be three
    /// digits after a leading group of one to three.
    pub fn parse_localized(raw: &str, locale: LocaleConvention) -> Option<Self> {
        let mut parts = raw.split(locale.decimal_mark);
        let int_part = parts.next()?;
        let frac_part = parts.next().unwrap_or("");
        if parts.next().is_some() {
            return None;
        }
        if raw.contains(locale.decimal_mark) && frac_part.is_empty() {
            return None;
        }
        let int_digits = if int_part.contains(locale.group_mark) {
            let groups: Vec<&str> = int_part.split(locale.group_mark).collect();
            let first_ok = (1..=3).contains(&groups[0].len());
            let rest_ok = groups[1..].iter().all(|g| g.len() == 3);
            if !first_ok || !rest_ok {
                return None;
            }
            groups.concat()
        } else {
            int_part.to_string()
        };
        if int_digits.is_empty() {
            return None;
        }
        Decimal::from_digits(&int_digits, frac_part)
    }

    pub fn is_integer(&self) -> bool {
        self.frac.is_empty()
    }

    pub fn as_u64(&self) -> Option<u64> {
        if self.is_integer() {
            self.int.parse().ok()
        } else {
            None
        }
    }

    pub fn int_digits(&self) -> &str {
        &self.int
    }

    pub fn frac_digits(&self) -> &str {
        &self.frac
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.frac.is_empty() {
            f.write_str(&self.int)
        } else {
            write!(f, "{}.{}", self.int, self.frac)
        }
    }
}

impl FromStr for Decimal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (i, f) = s.split_once('.').unwrap_or((s, ""));
        Decimal::from_digits(i, f).ok_or_else(|| Error::Config(format!("not a decimal: '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NumericKind {
    Plain,
    Time,
    Date,
    /// Digits written against letters, as in `10km` or `1990s`.
    FusedUnit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ClockTime {
    pub hour: u8,
    pub minute: u8,
}

impl ClockTime {
    /// The same minute twelve hours away (`2:00` and `14:00`).
    pub fn shifted(self) -> Self {
        ClockTime {
            hour: (self.hour + 12) % 24,
            minute: self.minute,
        }
    }
}

/// Day and month in written order plus the year.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DateFields {
    pub first: u32,
    pub second: u32,
    pub year: u32,
    pub year_digits: u8,
}

impl DateFields {
    fn same_year(&self, other: &DateFields) -> bool {
        if self.year_digits == 2 || other.year_digits == 2 {
            self.year % 100 == other.year % 100
        } else {
            self.year == other.year
        }
    }

    /// Same year, and the same day/month pair in either order.
    pub fn matches(&self, other: &DateFields) -> bool {
        self.same_year(other)
            && ((self.first, self.second) == (other.first, other.second)
                || (self.first, self.second) == (other.second, other.first))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NumericValue {
    pub span: TokenSpan,
    pub raw: String,
    /// Digits of `raw` with every separator removed.
    pub condensed: String,
    /// Value under the locale; `None` for times, dates and malformed grouping.
    pub parsed: Option<Decimal>,
    pub kind: NumericKind,
    pub time: Option<ClockTime>,
    pub date: Option<DateFields>,
}

/// Characters that may join digit groups into one run. Fixed across locales so the same
/// text always yields the same runs.
fn is_separator(c: char) -> bool {
    matches!(c, '.' | ',' | ':' | '/' | '-' | '\'' | '’')
}

fn digits_of(s: &str) -> String {
    s.chars().filter(char::is_ascii_digit).collect()
}

fn all_digits(s: &str, min: usize, max: usize) -> bool {
    (min..=max).contains(&s.len()) && s.bytes().all(|b| b.is_ascii_digit())
}

fn parse_time(raw: &str) -> Option<ClockTime> {
    let (h, m) = raw.split_once(':')?;
    if !all_digits(h, 1, 2) || !all_digits(m, 2, 2) {
        return None;
    }
    let (hour, minute): (u8, u8) = (h.parse().ok()?, m.parse().ok()?);
    (hour <= 23 && minute <= 59).then_some(ClockTime { hour, minute })
}

fn plausible_day_month(a: u32, b: u32) -> bool {
    let day = |x: u32| (1..=31).contains(&x);
    let month = |x: u32| (1..=12).contains(&x);
    (day(a) && month(b)) || (month(a) && day(b))
}

/// `d/m/y`, `m/d/y`, `d-m-y`, `d.m.yyyy` with 2- or 4-digit years, and ISO `yyyy-mm-dd`.
fn parse_date(raw: &str, sep: char) -> Option<DateFields> {
    let f: Vec<&str> = raw.split(sep).collect();
    if f.len() != 3 {
        return None;
    }
    if sep == '-' && all_digits(f[0], 4, 4) && all_digits(f[1], 1, 2) && all_digits(f[2], 1, 2) {
        let (month, day): (u32, u32) = (f[1].parse().ok()?, f[2].parse().ok()?);
        return ((1..=12).contains(&month) && (1..=31).contains(&day)).then_some(DateFields {
            first: month,
            second: day,
            year: f[0].parse().ok()?,
            year_digits: 4,
        });
    }
    let year_ok = if sep == '.' {
        all_digits(f[2], 4, 4)
    } else {
        all_digits(f[2], 2, 2) || all_digits(f[2], 4, 4)
    };
    if !all_digits(f[0], 1, 2) || !all_digits(f[1], 1, 2) || !year_ok {
        return None;
    }
    let (a, b): (u32, u32) = (f[0].parse().ok()?, f[1].parse().ok()?);
    plausible_day_month(a, b).then_some(DateFields {
        first: a,
        second: b,
        year: f[2].parse().ok()?,
        year_digits: f[2].len() as u8,
    })
}

struct Scan<'a> {
    text: &'a str,
    locale: LocaleConvention,
    out: Vec<NumericValue>,
}

impl Scan<'_> {
    fn push(&mut self, start: usize, end: usize, kind: NumericKind) {
        let raw = &self.text[start..end];
        let mut value = NumericValue {
            span: TokenSpan::from_byte_range(self.text, start, end),
            raw: raw.to_string(),
            condensed: digits_of(raw),
            parsed: None,
            kind,
            time: None,
            date: None,
        };
        match kind {
            NumericKind::Time => value.time = parse_time(raw),
            NumericKind::Date => {
                let sep = raw.chars().find(|c| !c.is_ascii_digit()).unwrap_or('/');
                value.date = parse_date(raw, sep);
            }
            NumericKind::Plain | NumericKind::FusedUnit => {
                value.parsed = Decimal::parse_localized(raw, self.locale);
            }
        }
        self.out.push(value);
    }

    fn fused(&self, start: usize, end: usize) -> bool {
        let before = self.text[..start].chars().next_back();
        let after = self.text[end..].chars().next();
        before.is_some_and(char::is_alphabetic) || after.is_some_and(char::is_alphabetic)
    }

    /// Classifies the digit run `text[start..end]`, splitting compounds into parts.
    fn classify(&mut self, start: usize, end: usize) {
        let raw = &self.text[start..end];
        if raw.contains('/') {
            // Slash dates are kept; other slash compounds are fractions and skipped.
            if parse_date(raw, '/').is_some() {
                self.push(start, end, NumericKind::Date);
            }
            return;
        }
        if raw.contains(':') {
            if parse_time(raw).is_some() {
                self.push(start, end, NumericKind::Time);
            } else {
                self.split(start, end, ':');
            }
            return;
        }
        if raw.contains('-') {
            if parse_date(raw, '-').is_some() {
                self.push(start, end, NumericKind::Date);
            } else {
                self.split(start, end, '-');
            }
            return;
        }
        if !raw.contains(',') && parse_date(raw, '.').is_some() {
            self.push(start, end, NumericKind::Date);
            return;
        }
        let kind = if self.fused(start, end) {
            NumericKind::FusedUnit
        } else {
            NumericKind::Plain
        };
        self.push(start, end, kind);
    }

    fn split(&mut self, start: usize, end: usize, sep: char) {
        let mut piece = start;
        for (off, c) in self.text[start..end].char_indices() {
            if c == sep {
                if piece < start + off {
                    self.classify(piece, start + off);
                }
                piece = start + off + c.len_utf8();
            }
        }
        if piece < end {
            self.classify(piece, end);
        }
    }
}

/// Maximal digit runs of `text`, left to right, classified as times, dates or numbers.
pub fn extract_numeric_values(text: &str, locale: LocaleConvention) -> Vec<NumericValue> {
    let mut scan = Scan {
        text,
        locale,
        out: Vec::new(),
    };
    if !text.bytes().any(|b| b.is_ascii_digit()) {
        return scan.out;
    }
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        if !chars[i].1.is_ascii_digit() {
            i += 1;
            continue;
        }
        let mut j = i;
        while j < chars.len() && chars[j].1.is_ascii_digit() {
            j += 1;
        }
        while j + 1 < chars.len()
            && is_separator(chars[j].1)
            && chars[j + 1].1.is_ascii_digit()
        {
            j += 1;
            while j < chars.len() && chars[j].1.is_ascii_digit() {
                j += 1;
            }
        }
        let end = chars.get(j).map(|c| c.0).unwrap_or(text.len());
        scan.classify(chars[i].0, end);
        i = j;
    }
    scan.out
}

/// Spelled-out numbers of one language, used to accept `12` rendered as `zwölf`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NumberWords {
    words: Vec<(u64, Vec<String>)>,
}

impl NumberWords {
    pub fn parse(text: &str) -> Result<Self> {
        let mut words = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (value, forms) = line.split_once('\t').ok_or_else(|| Error::Table {
                path: "number words".into(),
                line: idx + 1,
                message: "expected value<TAB>words".into(),
            })?;
            let value: u64 = value.trim().parse().map_err(|_| Error::Table {
                path: "number words".into(),
                line: idx + 1,
                message: format!("bad value '{value}'"),
            })?;
            let forms = forms
                .split(',')
                .map(|w| w.trim().to_lowercase())
                .filter(|w| !w.is_empty())
                .collect();
            words.push((value, forms));
        }
        Ok(NumberWords { words })
    }

    /// The bundled lexicon for `language`, if there is one.
    pub fn for_language(language: &str) -> Option<Self> {
        let text = match language {
            "de" => include_str!("../data/numwords/de.tsv"),
            "en" => include_str!("../data/numwords/en.tsv"),
            _ => return None,
        };
        Some(Self::parse(text).expect("bundled number words parse"))
    }

    pub fn words_for(&self, value: u64) -> &[String] {
        self.words
            .iter()
            .find(|(v, _)| *v == value)
            .map(|(_, w)| w.as_slice())
            .unwrap_or(&[])
    }
}

/// Everything numeric found in a translation.
#[derive(Debug, Clone, Default)]
pub struct TargetNumbers {
    raws: HashSet<String>,
    values: HashSet<Decimal>,
    condensed: HashSet<String>,
    times: HashSet<ClockTime>,
    dates: Vec<DateFields>,
    lowered: String,
}

fn is_group_space(s: &str) -> bool {
    matches!(s, " " | "\u{A0}" | "\u{202F}" | "\u{2009}")
}

impl TargetNumbers {
    pub fn new(target: &str, locale: LocaleConvention) -> Self {
        let values = extract_numeric_values(target, locale);
        let mut out = TargetNumbers {
            lowered: lowercase(target).into_owned(),
            ..Default::default()
        };
        for v in &values {
            out.raws.insert(v.raw.clone());
            out.condensed.insert(v.condensed.clone());
            if let Some(p) = &v.parsed {
                out.values.insert(p.clone());
            }
            if let Some(t) = v.time {
                out.times.insert(t);
            }
            if let Some(d) = v.date {
                out.dates.push(d);
            }
            // `14.30 Uhr` style clock times.
            if let Some((h, m)) = v.raw.split_once('.') {
                if let Some(t) = parse_time(&format!("{h}:{m}")) {
                    out.times.insert(t);
                }
            }
        }
        // Digit groups separated by spaces (`10 000`).
        let mut i = 0;
        while i < values.len() {
            let mut j = i;
            let mut joined = values[i].raw.clone();
            while j + 1 < values.len() {
                let gap = &target[byte_end(target, &values[j])..byte_start(target, &values[j + 1])];
                let next = &values[j + 1].raw;
                let head = next.split(locale.decimal_mark).next().unwrap_or("");
                if is_group_space(gap) && head.len() == 3 && head.bytes().all(|b| b.is_ascii_digit()) {
                    joined.push_str(next);
                    j += 1;
                    if let Some(p) = Decimal::parse_localized(&joined, locale) {
                        out.values.insert(p);
                    }
                } else {
                    break;
                }
            }
            i = j + 1;
        }
        out
    }
}

fn byte_start(text: &str, v: &NumericValue) -> usize {
    text.char_indices()
        .nth(v.span.start)
        .map(|(b, _)| b)
        .unwrap_or(text.len())
}

fn byte_end(text: &str, v: &NumericValue) -> usize {
    text.char_indices()
        .nth(v.span.end)
        .map(|(b, _)| b)
        .unwrap_or(text.len())
}

/// One way a translation may render a source number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Acceptance {
    Verbatim(String),
    Value(Decimal),
    /// Same digit sequence; used only when the source grouping could not be parsed.
    Digits(String),
    Time(ClockTime),
    Date(DateFields),
    Word(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AcceptanceSet {
    pub predicates: Vec<Acceptance>,
}

impl AcceptanceSet {
    pub fn accepts(&self, target: &TargetNumbers) -> bool {
        self.predicates.iter().any(|p| match p {
            Acceptance::Verbatim(raw) => target.raws.contains(raw),
            Acceptance::Value(d) => target.values.contains(d),
            Acceptance::Digits(c) => target.condensed.contains(c),
            Acceptance::Time(t) => target.times.contains(t),
            Acceptance::Date(d) => target.dates.iter().any(|x| d.matches(x)),
            Acceptance::Word(w) => target.lowered.contains(w.as_str()),
        })
    }

    /// Convenience for tests and callers holding raw target text.
    pub fn accepts_text(&self, target: &str, locale: LocaleConvention) -> bool {
        self.accepts(&TargetNumbers::new(target, locale))
    }
}

/// The acceptance set of a source value.
pub fn allowed_target_forms(value: &NumericValue, words: Option<&NumberWords>) -> AcceptanceSet {
    let mut predicates = vec![Acceptance::Verbatim(value.raw.clone())];
    match value.kind {
        NumericKind::Time => {
            if let Some(t) = value.time {
                predicates.push(Acceptance::Time(t));
                predicates.push(Acceptance::Time(t.shifted()));
            }
        }
        NumericKind::Date => {
            if let Some(d) = value.date {
                predicates.push(Acceptance::Date(d));
            }
        }
        NumericKind::Plain | NumericKind::FusedUnit => match &value.parsed {
            Some(p) => {
                predicates.push(Acceptance::Value(p.clone()));
                if let (Some(n), Some(words)) = (p.as_u64(), words) {
                    for w in words.words_for(n) {
                        predicates.push(Acceptance::Word(w.clone()));
                    }
                }
            }
            None => predicates.push(Acceptance::Digits(value.condensed.clone())),
        },
    }
    AcceptanceSet { predicates }
}

/// Numeric detector for one language pair.
#[derive(Debug, Clone)]
pub struct NumericDetector {
    pub source_locale: LocaleConvention,
    pub target_locale: LocaleConvention,
    pub target_words: Option<NumberWords>,
}

impl NumericDetector {
    pub fn new(
        source_locale: LocaleConvention,
        target_locale: LocaleConvention,
        target_words: Option<NumberWords>,
    ) -> Self {
        NumericDetector {
            source_locale,
            target_locale,
            target_words,
        }
    }

    /// English to German with the bundled German number words.
    pub fn en_de() -> Self {
        Self::new(
            LocaleConvention::EN,
            LocaleConvention::DE,
            NumberWords::for_language("de"),
        )
    }

    pub fn check(&self, pair: &SentencePair) -> Vec<Detection> {
        let mut out = Vec::new();
        self.check_into(pair.id, &pair.source, &pair.target, &mut out);
        out
    }

    pub(crate) fn check_into(&self, pair_id: PairId, source: &str, target: &str, out: &mut Vec<Detection>) {
        let values = extract_numeric_values(source, self.source_locale);
        if values.is_empty() {
            return;
        }
        let found = TargetNumbers::new(target, self.target_locale);
        for v in values {
            if allowed_target_forms(&v, self.target_words.as_ref()).accepts(&found) {
                continue;
            }
            let shown = match &v.parsed {
                Some(p) if p.to_string() != v.raw => format!("'{}' (value {})", v.raw, p),
                _ => format!("'{}'", v.raw),
            };
            out.push(Detection {
                pair_id,
                detector: DetectorKind::NumericalValues,
                evidence: format!("{shown} has no allowed rendering in the target"),
                source_spans: vec![v.span],
            });
        }
    }
}

/// [`NumericDetector::check`] with German number words when the target locale is German.
pub fn check_pair_numeric(
    pair: &SentencePair,
    source_locale: LocaleConvention,
    target_locale: LocaleConvention,
) -> Vec<Detection> {
    let words = if target_locale == LocaleConvention::DE {
        NumberWords::for_language("de")
    } else {
        None
    };
    NumericDetector::new(source_locale, target_locale, words).check(pair)
}

#[cfg(test)]
mod tests {
    use super::*;

    const EN: LocaleConvention = LocaleConvention::EN;
    const DE: LocaleConvention = LocaleConvention::DE;

    fn raws(text: &str) -> Vec<String> {
        extract_numeric_values(text, EN).into_iter().map(|v| v.raw).collect()
    }

    fn flags(source: &str, target: &str) -> usize {
        NumericDetector::en_de()
            .check(&SentencePair::new(0, source, target))
            .len()
    }

    #[test]
    fn fused_currency_amount() {
        let v = extract_numeric_values("at £14 from", EN);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, NumericKind::Plain);
        assert_eq!(v[0].condensed, "14");
        assert_eq!(v[0].parsed, Some("14".parse().unwrap()));
    }

    #[test]
    fn clock_time() {
        let v = extract_numeric_values("tweeted around 2:30 p.m.", EN);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, NumericKind::Time);
        assert_eq!(v[0].raw, "2:30");
        assert_eq!(v[0].time, Some(ClockTime { hour: 2, minute: 30 }));
    }

    #[test]
    fn no_digits() {
        assert!(extract_numeric_values("no digits here", EN).is_empty());
    }

    #[test]
    fn compounds() {
        assert_eq!(raws("1.1/2 hours"), Vec::<String>::new());
        assert_eq!(raws("open 24/7"), Vec::<String>::new());
        assert_eq!(raws("on 12/25/2020."), ["12/25/2020"]);
        assert_eq!(raws("2019-2020 season"), ["2019", "2020"]);
        assert_eq!(raws("on 2021-03-04"), ["2021-03-04"]);
        assert_eq!(raws("won 3:1 at 10:15:30"), ["3", "1", "10", "15", "30"]);
        assert_eq!(raws("1,234.5 and 10km"), ["1,234.5", "10"]);
        assert_eq!(raws("am 30."), ["30"]);
    }

    #[test]
    fn fused_unit_kind() {
        let v = extract_numeric_values("a 10km run in the 1990s", EN);
        assert!(v.iter().all(|v| v.kind == NumericKind::FusedUnit));
    }

    #[test]
    fn localized_parse() {
        let d = |s: &str| s.parse::<Decimal>().unwrap();
        assert_eq!(Decimal::parse_localized("24.70", EN), Some(d("24.7")));
        assert_eq!(Decimal::parse_localized("2,470", DE), Some(d("2.47")));
        assert_eq!(Decimal::parse_localized("2,470", EN), Some(d("2470")));
        assert_eq!(Decimal::parse_localized("10.000", DE), Some(d("10000")));
        assert_eq!(Decimal::parse_localized("1.234.567,50", DE), Some(d("1234567.5")));
        assert_eq!(Decimal::parse_localized("3,5", EN), None);
        assert_eq!(Decimal::parse_localized("1.2.3", EN), None);
        assert_eq!(Decimal::parse_localized("007", EN), Some(d("7")));
    }

    #[test]
    fn decimal_point_shift_is_flagged() {
        assert_eq!(flags("The price was 24.70 today.", "Der Preis war heute 2,470."), 1);
    }

    #[test]
    fn time_shift_accepted_both_ways() {
        let v = &extract_numeric_values("at 2:00", EN)[0];
        assert!(allowed_target_forms(v, None).accepts_text("um 14:00 Uhr", DE));
        let v = &extract_numeric_values("at 14:00", EN)[0];
        assert!(allowed_target_forms(v, None).accepts_text("um 2:00 Uhr", DE));
        assert_eq!(flags("at 2:30 p.m.", "um 14.30 Uhr"), 0);
        assert_eq!(flags("at 2:30 p.m.", "um 15:30 Uhr"), 1);
    }

    #[test]
    fn number_word_accepted() {
        let v = &extract_numeric_values("12 apostles", EN)[0];
        let words = NumberWords::for_language("de").unwrap();
        assert!(allowed_target_forms(v, Some(&words)).accepts_text("zwölf Apostel", DE));
        assert_eq!(flags("12 apostles", "zwölf Apostel"), 0);
    }

    #[test]
    fn grouping_change_accepted() {
        let v = &extract_numeric_values("10,000 people", EN)[0];
        let acc = allowed_target_forms(v, None);
        assert!(acc.accepts_text("10.000 Menschen", DE));
        assert!(acc.accepts_text("10000 Menschen", DE));
        assert!(acc.accepts_text("10 000 Menschen", DE));
        assert!(acc.accepts_text("10,000 Menschen", DE));
        assert!(!acc.accepts_text("1.000 Menschen", DE));
    }

    #[test]
    fn date_field_swap() {
        assert_eq!(flags("on 12/25/2020", "am 25.12.2020"), 0);
        assert_eq!(flags("on 05/04/21", "am 04.05.2021"), 0);
        assert_eq!(flags("on 05/04/2021", "am 05.06.2021"), 1);
    }

    #[test]
    fn verbatim_and_missing_year() {
        assert_eq!(flags("at £14 from", "14 £ von"), 0);
        assert_eq!(
            flags(
                "Kerridge has been an outspoken defender of his industry throughout 2020, but",
                "Kerridge war das ganze Jahr über ein ausgesprochener Verteidiger seiner Branche, aber"
            ),
            1
        );
    }

    #[test]
    fn identity_translation_never_flagged() {
        let s = "On 3/4/2020 at 9:15 about 1,200.50 people paid $3.1m, 1.1/2 and 24/7";
        assert_eq!(flags(s, s), 0);
    }

    #[test]
    fn shift_is_an_involution() {
        for hour in 0..24 {
            let t = ClockTime { hour, minute: 5 };
            assert_eq!(t.shifted().shifted(), t);
        }
    }

    #[test]
    fn locale_rejects_equal_marks() {
        assert!(LocaleConvention::new('.', '.').is_err());
        assert!(LocaleConvention::new(',', '\'').is_ok());
    }
}
