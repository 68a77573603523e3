//! Transformation tables: source trigger tokens mapped to their allowed target forms.
//!
//! File format, one entry per line, `#` starts a comment:
//!
//! ```text
//! trigger<TAB>form,form,...<TAB>type_tag<TAB>category[<TAB>canonical form]
//! ```
//!
//! A `#! language-pair en-de` line pins the language pair; without it the pair is taken
//! from the name of the containing directory.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use crate::corpus::DetectorKind;
use crate::error::{Error, Result};
use crate::text::match_key;

const PAIR_DIRECTIVE: &str = "#! language-pair";

/// The token-level detector a table belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    PhysicalUnits,
    Currencies,
    LargeNumbers,
    WebTerms,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::PhysicalUnits,
        Category::Currencies,
        Category::LargeNumbers,
        Category::WebTerms,
    ];

    pub fn as_str(self) -> &'static str {
        self.detector().as_str()
    }

    pub fn detector(self) -> DetectorKind {
        match self {
            Category::PhysicalUnits => DetectorKind::PhysicalUnits,
            Category::Currencies => DetectorKind::Currencies,
            Category::LargeNumbers => DetectorKind::LargeNumbers,
            Category::WebTerms => DetectorKind::WebTerms,
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown category '{s}'"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LanguagePair {
    pub source: String,
    pub target: String,
}

impl LanguagePair {
    pub fn new(source: &str, target: &str) -> Self {
        LanguagePair {
            source: source.to_ascii_lowercase(),
            target: target.to_ascii_lowercase(),
        }
    }

    pub fn en_de() -> Self {
        Self::new("en", "de")
    }
}

impl fmt::Display for LanguagePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.source, self.target)
    }
}

impl FromStr for LanguagePair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once('-') {
            Some((a, b))
                if !a.is_empty()
                    && !b.is_empty()
                    && a.chars().chain(b.chars()).all(|c| c.is_ascii_alphabetic()) =>
            {
                Ok(LanguagePair::new(a, b))
            }
            _ => Err(Error::Config(format!(
                "language pair must look like 'en-de', got '{s}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransformationEntry {
    /// Lowercased source token.
    pub trigger: String,
    pub targets: Vec<String>,
    pub type_tag: String,
    pub category: Category,
    /// Form used when generating synthetic pairs; defaults to the first target.
    pub canonical: Option<String>,
}

impl TransformationEntry {
    pub fn new(
        trigger: &str,
        targets: &[&str],
        type_tag: &str,
        category: Category,
    ) -> Result<Self, String> {
        let entry = TransformationEntry {
            trigger: trigger.to_lowercase(),
            targets: targets.iter().map(|t| t.to_string()).collect(),
            type_tag: type_tag.to_string(),
            category,
            canonical: None,
        };
        entry.validate()?;
        Ok(entry)
    }

    pub fn canonical_target(&self) -> &str {
        self.canonical.as_deref().unwrap_or(&self.targets[0])
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.trigger.is_empty() {
            return Err("empty trigger".into());
        }
        if self.trigger.chars().any(char::is_whitespace) {
            return Err(format!("trigger '{}' contains whitespace", self.trigger));
        }
        if match_key(&self.trigger).is_empty() {
            return Err(format!("trigger '{}' is only punctuation", self.trigger));
        }
        if self.targets.is_empty() {
            return Err(format!("trigger '{}' has no target forms", self.trigger));
        }
        for t in &self.targets {
            if t.trim().is_empty() {
                return Err(format!("trigger '{}' has an empty target form", self.trigger));
            }
            if t.contains(['|', ',', '\t']) {
                return Err(format!("target form '{t}' contains a separator character"));
            }
        }
        if self.type_tag.trim().is_empty() {
            return Err(format!("trigger '{}' has no type tag", self.trigger));
        }
        if let Some(c) = &self.canonical {
            if c.trim().is_empty() {
                return Err(format!("trigger '{}' has an empty canonical form", self.trigger));
            }
        }
        Ok(())
    }
}

/// A validated table; all entries share one category and triggers are unique.
#[derive(Debug, Clone)]
pub struct TransformationTable {
    entries: Vec<TransformationEntry>,
    language_pair: LanguagePair,
    category: Category,
    index: HashMap<String, usize>,
    /// Per entry: lowercased target forms followed by the lowercased trigger.
    folded: Vec<Vec<String>>,
}

impl PartialEq for TransformationTable {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
            && self.language_pair == other.language_pair
            && self.category == other.category
    }
}

impl TransformationTable {
    /// Validates entries. An empty table takes `category` as given.
    pub fn new(
        entries: Vec<TransformationEntry>,
        language_pair: LanguagePair,
        category: Category,
    ) -> Result<Self, String> {
        let mut index = HashMap::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            e.validate()?;
            if e.category != category {
                return Err(format!(
                    "entry '{}' has category {} in a {} table",
                    e.trigger, e.category, category
                ));
            }
            let key = match_key(&e.trigger).into_owned();
            if let Some(&prev) = index.get(&key) {
                let prev: &TransformationEntry = &entries[prev];
                return Err(format!(
                    "duplicate trigger '{}' (already defined as '{}')",
                    e.trigger, prev.trigger
                ));
            }
            index.insert(key, i);
        }
        let folded = entries
            .iter()
            .map(|e| {
                let mut forms: Vec<String> = e.targets.iter().map(|t| t.to_lowercase()).collect();
                forms.push(e.trigger.clone());
                forms
            })
            .collect();
        Ok(TransformationTable {
            entries,
            language_pair,
            category,
            index,
            folded,
        })
    }

    pub fn empty(language_pair: LanguagePair, category: Category) -> Self {
        TransformationTable {
            entries: Vec::new(),
            language_pair,
            category,
            index: HashMap::new(),
            folded: Vec::new(),
        }
    }

    pub fn entries(&self) -> &[TransformationEntry] {
        &self.entries
    }

    pub fn language_pair(&self) -> &LanguagePair {
        &self.language_pair
    }

    pub fn category(&self) -> Category {
        self.category
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Looks up an entry by comparison key (see [`crate::text::match_key`]).
    pub fn lookup(&self, key: &str) -> Option<&TransformationEntry> {
        self.index.get(key).map(|&i| &self.entries[i])
    }

    pub(crate) fn position(&self, key: &str) -> Option<usize> {
        self.index.get(key).copied()
    }

    /// Lowercased forms accepted in a target for entry `idx`, the trigger itself included.
    pub(crate) fn folded_forms(&self, idx: usize) -> &[String] {
        &self.folded[idx]
    }

    pub fn entries_of_type<'a>(
        &'a self,
        type_tag: &'a str,
    ) -> impl Iterator<Item = &'a TransformationEntry> + 'a {
        self.entries.iter().filter(move |e| e.type_tag == type_tag)
    }

    /// Returns a copy with `form` appended to the targets of `trigger`.
    pub fn with_extra_form(&self, trigger: &str, form: &str) -> Result<Self, String> {
        let mut entries = self.entries.clone();
        let entry = entries
            .iter_mut()
            .find(|e| e.trigger == trigger)
            .ok_or_else(|| format!("no entry for '{trigger}'"))?;
        entry.targets.push(form.to_string());
        TransformationTable::new(entries, self.language_pair.clone(), self.category)
    }
}

/// Parses table text. `origin` names the source in error messages.
pub fn parse_table(
    text: &str,
    origin: &str,
    fallback_pair: Option<LanguagePair>,
) -> Result<TransformationTable> {
    let err = |line: usize, message: String| Error::Table {
        path: origin.to_string(),
        line,
        message,
    };
    let mut pair = None;
    let mut entries: Vec<TransformationEntry> = Vec::new();
    let mut lines_of: Vec<usize> = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut category: Option<(Category, usize)> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if let Some(rest) = line.strip_prefix(PAIR_DIRECTIVE) {
            pair = Some(rest.trim().parse::<LanguagePair>().map_err(|e| err(line_no, e.to_string()))?);
            continue;
        }
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 && cols.len() != 5 {
            return Err(err(
                line_no,
                format!("expected 4 or 5 tab-separated columns, found {}", cols.len()),
            ));
        }
        let trigger = cols[0].trim();
        let targets: Vec<&str> = if cols[1].trim().is_empty() {
            Vec::new()
        } else {
            cols[1].split(',').map(str::trim).collect()
        };
        if targets.is_empty() {
            return Err(err(line_no, format!("trigger '{trigger}' has an empty targets list")));
        }
        let cat: Category = cols[3].trim().parse().map_err(|e| err(line_no, e))?;
        match category {
            None => category = Some((cat, line_no)),
            Some((c, first)) if c != cat => {
                return Err(err(
                    line_no,
                    format!("category {cat} differs from {c} declared on line {first}"),
                ))
            }
            _ => {}
        }
        let mut entry =
            TransformationEntry::new(trigger, &targets, cols[2].trim(), cat).map_err(|e| err(line_no, e))?;
        if let Some(canon) = cols.get(4) {
            entry.canonical = Some(canon.trim().to_string());
            entry.validate().map_err(|e| err(line_no, e))?;
        }
        let key = match_key(&entry.trigger).into_owned();
        if let Some(&first) = seen.get(&key) {
            return Err(err(
                line_no,
                format!("duplicate trigger '{trigger}' (first defined on line {first})"),
            ));
        }
        seen.insert(key, line_no);
        lines_of.push(line_no);
        entries.push(entry);
    }

    let pair = pair.or(fallback_pair).ok_or_else(|| {
        err(
            0,
            "no language pair: add a '#! language-pair xx-yy' line or place the file in an xx-yy directory"
                .into(),
        )
    })?;
    let Some((category, _)) = category else {
        return Err(err(0, "table has no entries, so its category is unknown".into()));
    };
    TransformationTable::new(entries, pair, category).map_err(|e| err(0, e))
}

/// Loads and validates a table file.
pub fn load_table(path: &Path) -> Result<TransformationTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::io_path(path, e))?;
    let fallback = path
        .parent()
        .and_then(|d| d.file_name())
        .and_then(|n| n.to_str())
        .and_then(|n| n.parse::<LanguagePair>().ok());
    parse_table(&text, &path.display().to_string(), fallback)
}

/// Serializes a table in the format accepted by [`load_table`].
pub fn write_table<W: Write + ?Sized>(table: &TransformationTable, sink: &mut W) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("{PAIR_DIRECTIVE} {}\n", table.language_pair));
    for e in &table.entries {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}",
            e.trigger,
            e.targets.join(","),
            e.type_tag,
            e.category
        ));
        if let Some(c) = &e.canonical {
            out.push('\t');
            out.push_str(c);
        }
        out.push('\n');
    }
    sink.write_all(out.as_bytes())
        .map_err(|e| Error::io("writing table", e))
}

const EN_DE: [(Category, &str); 4] = [
    (
        Category::PhysicalUnits,
        include_str!("../tables/en-de/physical-units.tsv"),
    ),
    (
        Category::Currencies,
        include_str!("../tables/en-de/currencies.tsv"),
    ),
    (
        Category::LargeNumbers,
        include_str!("../tables/en-de/large-numbers.tsv"),
    ),
    (Category::WebTerms, include_str!("../tables/en-de/web-terms.tsv")),
];

pub const SUPPORTED_PAIRS: &[&str] = &["en-de"];

/// The bundled tables, in the order physical units, currencies, large numbers, web terms.
pub fn builtin_tables(pair: &LanguagePair) -> Result<Vec<TransformationTable>> {
    if *pair != LanguagePair::en_de() {
        return Err(Error::UnsupportedLanguagePair {
            requested: pair.to_string(),
            supported: SUPPORTED_PAIRS.join(", "),
        });
    }
    EN_DE
        .iter()
        .map(|(cat, text)| {
            parse_table(
                text,
                &format!("<builtin en-de/{cat}.tsv>"),
                Some(LanguagePair::en_de()),
            )
        })
        .collect()
}

pub fn builtin_table(pair: &LanguagePair, category: Category) -> Result<TransformationTable> {
    builtin_tables(pair)?
        .into_iter()
        .find(|t| t.category() == category)
        .ok_or_else(|| Error::Invariant(format!("no bundled {category} table")))
}

/// Loads `<category>.tsv` for every category present in `dir`.
pub fn load_table_dir(dir: &Path) -> Result<Vec<TransformationTable>> {
    let mut out = Vec::new();
    for cat in Category::ALL {
        let path = dir.join(format!("{cat}.tsv"));
        if path.exists() {
            out.push(load_table(&path)?);
        }
    }
    Ok(out)
}
