//! Corpus runs: configuration, sharded detection, filtering and the length-ratio
//! baseline filter.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alignment::{
    AlignOutcome, AlignmentProvider, DiagonalProvider, FileProvider, SidecarEndpoint, SidecarPool,
};
use crate::corpus::{write_pair, write_record, CorpusStats, Detection, DetectorKind, PairId, ReportRecord, SentencePair};
use crate::error::{Error, Result};
use crate::numeric::{LocaleConvention, NumberWords, NumericDetector};
use crate::sequence::{
    coverage_check, normalize_target, oscillatory_check, parse_stopwords, builtin_stopwords,
    CoverageBucket, CoverageConfig, HallucinationConfig, NaturalScan,
};
use crate::table::{builtin_tables, load_table_dir, Category, LanguagePair, TransformationTable};
use crate::text::lowercase;
use crate::token::{check_prepared, check_urls, GuardMode, GuardPolicy, SourceTokens};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlignerKind {
    #[default]
    None,
    File,
    Diagonal,
    Sidecar,
    /// Links are supplied by the embedding program with each pair.
    External,
}

/// Which command a configuration is used for; it decides the default detector set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Detect,
    Filter,
}

/// Everything a run needs, loadable from a flat TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub language_pair: String,
    /// Detector names; unset means the mode's default set.
    pub detectors: Option<Vec<String>>,
    /// Directory of `<category>.tsv` tables replacing the bundled ones.
    pub table_dir: Option<PathBuf>,
    /// Guard mode per category (`"currencies"`) or per category and type tag
    /// (`"currencies.sym"`).
    pub guards: BTreeMap<String, String>,
    pub source_decimal_mark: Option<char>,
    pub source_group_mark: Option<char>,
    pub target_decimal_mark: Option<char>,
    pub target_group_mark: Option<char>,
    /// Target-language number words (`value<TAB>word,word`).
    pub number_words: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub coverage_bounds: Vec<usize>,
    pub coverage_thresholds: Vec<usize>,
    pub oscillatory_margin: usize,
    pub oscillatory_floor: usize,
    pub natural_min_sources: usize,
    pub aligner: AlignerKind,
    pub alignment_file: Option<PathBuf>,
    pub sidecar_endpoint: Option<String>,
    pub sidecar_connections: usize,
    pub sidecar_timeout_ms: u64,
    /// Worker threads; 0 picks the number of available cores.
    pub shards: usize,
    pub batch_size: usize,
    /// Drop a numeric detection sitting right next to a failed currency or unit
    /// trigger, so `£14 → 15 €` is reported once, as a currency error.
    pub subsume_numeric: bool,
    pub max_ratio: f64,
    pub max_words: usize,
    pub report: Option<PathBuf>,
    pub stats: Option<PathBuf>,
    pub clean: Option<PathBuf>,
    pub removed: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            language_pair: "en-de".into(),
            detectors: None,
            table_dir: None,
            guards: BTreeMap::new(),
            source_decimal_mark: None,
            source_group_mark: None,
            target_decimal_mark: None,
            target_group_mark: None,
            number_words: None,
            stopwords: None,
            coverage_bounds: vec![50, 100, 200],
            coverage_thresholds: vec![10, 20, 30, 40],
            oscillatory_margin: 4,
            oscillatory_floor: 10,
            natural_min_sources: 5,
            aligner: AlignerKind::None,
            alignment_file: None,
            sidecar_endpoint: None,
            sidecar_connections: 1,
            sidecar_timeout_ms: 10_000,
            shards: 0,
            batch_size: 4096,
            subsume_numeric: true,
            max_ratio: 1.3,
            max_words: 150,
            report: None,
            stats: None,
            clean: None,
            removed: None,
        }
    }
}

const DETECT_DEFAULT: [DetectorKind; 7] = [
    DetectorKind::PhysicalUnits,
    DetectorKind::Currencies,
    DetectorKind::LargeNumbers,
    DetectorKind::WebTerms,
    DetectorKind::NumericalValues,
    DetectorKind::HallucinationOscillatory,
    DetectorKind::HallucinationNatural,
];

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io_path(path, e))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        if let Some(dir) = path.parent() {
            cfg.resolve_paths(dir);
        }
        Ok(cfg)
    }

    /// Makes relative paths relative to `base` (the directory of the config file).
    pub fn resolve_paths(&mut self, base: &Path) {
        for p in [
            &mut self.table_dir,
            &mut self.number_words,
            &mut self.stopwords,
            &mut self.alignment_file,
            &mut self.report,
            &mut self.stats,
            &mut self.clean,
            &mut self.removed,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn language_pair(&self) -> Result<LanguagePair> {
        LanguagePair::from_str(&self.language_pair)
            .map_err(|e| Error::Config(format!("language_pair: {e}")))
    }

    /// Enabled detectors in canonical order.
    pub fn enabled(&self, mode: RunMode) -> Result<Vec<DetectorKind>> {
        let mut set: Vec<DetectorKind> = match &self.detectors {
            Some(names) => names
                .iter()
                .map(|n| DetectorKind::from_str(n))
                .collect::<Result<_>>()?,
            None => match mode {
                RunMode::Detect => DETECT_DEFAULT.to_vec(),
                RunMode::Filter => DETECT_DEFAULT[..6].to_vec(),
            },
        };
        set.sort();
        set.dedup();
        Ok(set)
    }

    pub fn hallucination(&self) -> Result<HallucinationConfig> {
        let cfg = HallucinationConfig {
            oscillatory_margin: self.oscillatory_margin,
            oscillatory_floor: self.oscillatory_floor,
            natural_min_sources: self.natural_min_sources,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn coverage(&self, source_language: &str) -> Result<CoverageConfig> {
        if self.coverage_thresholds.len() != self.coverage_bounds.len() + 1 {
            return Err(Error::Config(format!(
                "coverage_thresholds needs one more value than coverage_bounds ({} vs {})",
                self.coverage_thresholds.len(),
                self.coverage_bounds.len()
            )));
        }
        let buckets = self
            .coverage_thresholds
            .iter()
            .enumerate()
            .map(|(i, &max_unaligned)| CoverageBucket {
                below: self.coverage_bounds.get(i).copied(),
                max_unaligned,
            })
            .collect();
        let stopwords = match &self.stopwords {
            Some(p) => parse_stopwords(&std::fs::read_to_string(p).map_err(|e| Error::io_path(p, e))?),
            None => builtin_stopwords(source_language).ok_or_else(|| {
                Error::Config(format!(
                    "no bundled stopword list for '{source_language}'; set stopwords"
                ))
            })?,
        };
        CoverageConfig::new(stopwords, buckets)
    }

    fn locale(
        &self,
        language: &str,
        decimal: Option<char>,
        group: Option<char>,
        side: &str,
    ) -> Result<LocaleConvention> {
        let base = LocaleConvention::for_language(language);
        match (decimal, group, base) {
            (None, None, Some(b)) => Ok(b),
            (Some(d), Some(g), _) => LocaleConvention::new(d, g),
            (d, g, Some(b)) => LocaleConvention::new(d.unwrap_or(b.decimal_mark), g.unwrap_or(b.group_mark)),
            _ => Err(Error::Config(format!(
                "no default number format for '{language}'; set {side}_decimal_mark and {side}_group_mark"
            ))),
        }
    }

    pub fn locales(&self) -> Result<(LocaleConvention, LocaleConvention)> {
        let lp = self.language_pair()?;
        Ok((
            self.locale(&lp.source, self.source_decimal_mark, self.source_group_mark, "source")?,
            self.locale(&lp.target, self.target_decimal_mark, self.target_group_mark, "target")?,
        ))
    }

    pub fn guard_policy(&self, category: Category) -> Result<GuardPolicy> {
        let mut policy = GuardPolicy::for_category(category);
        for (key, mode) in &self.guards {
            let (cat, type_tag) = match key.split_once('.') {
                Some((c, t)) => (c, Some(t)),
                None => (key.as_str(), None),
            };
            let cat = Category::from_str(cat).map_err(|e| Error::Config(format!("guards: {e}")))?;
            if cat != category {
                continue;
            }
            let mode = GuardMode::from_str(mode)?;
            policy = match type_tag {
                Some(t) => policy.with_type(t, mode),
                None => GuardPolicy {
                    mode,
                    by_type: policy.by_type,
                },
            };
        }
        Ok(policy)
    }

    pub fn shard_count(&self) -> usize {
        if self.shards > 0 {
            self.shards
        } else {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        }
    }

    /// Checks everything that can be checked without opening inputs.
    pub fn validate(&self, mode: RunMode) -> Result<()> {
        let enabled = self.enabled(mode)?;
        self.language_pair()?;
        self.locales()?;
        self.hallucination()?;
        for key in self.guards.keys() {
            let cat = key.split('.').next().unwrap_or("");
            Category::from_str(cat).map_err(|e| Error::Config(format!("guards: {e}")))?;
        }
        for mode in self.guards.values() {
            GuardMode::from_str(mode)?;
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if !(self.max_ratio >= 1.0) {
            return Err(Error::Config("max_ratio must be at least 1".into()));
        }
        if enabled.contains(&DetectorKind::Coverage) {
            match self.aligner {
                AlignerKind::None => {
                    return Err(Error::Config(
                        "the coverage detector needs an alignment provider (set aligner)".into(),
                    ))
                }
                AlignerKind::File if self.alignment_file.is_none() => {
                    return Err(Error::Config("aligner = \"file\" needs alignment_file".into()))
                }
                AlignerKind::Sidecar => {
                    let ep = self.sidecar_endpoint.as_deref().ok_or_else(|| {
                        Error::Config("aligner = \"sidecar\" needs sidecar_endpoint".into())
                    })?;
                    SidecarEndpoint::from_str(ep)?;
                    if self.sidecar_timeout_ms == 0 {
                        return Err(Error::Config("sidecar_timeout_ms must be positive".into()));
                    }
                }
                _ => {}
            }
            self.coverage(&self.language_pair()?.source)?;
        }
        Ok(())
    }
}

/// Enabled detectors with their resources, shared read-only by all workers.
#[derive(Debug, Clone)]
pub struct DetectorSet {
    tables: Vec<(TransformationTable, GuardPolicy)>,
    web_terms: Option<(TransformationTable, GuardPolicy)>,
    numeric: Option<NumericDetector>,
    coverage: Option<CoverageConfig>,
    oscillatory: Option<HallucinationConfig>,
    natural: Option<HallucinationConfig>,
    subsume_numeric: bool,
}

impl DetectorSet {
    pub fn from_config(cfg: &RunConfig, mode: RunMode) -> Result<Self> {
        cfg.validate(mode)?;
        let enabled = cfg.enabled(mode)?;
        let lp = cfg.language_pair()?;
        let all_tables = match &cfg.table_dir {
            Some(dir) => load_table_dir(dir)?,
            None => builtin_tables(&lp)?,
        };
        let mut tables = Vec::new();
        let mut web_terms = None;
        for table in all_tables {
            let category = table.category();
            if !enabled.contains(&category.detector()) {
                continue;
            }
            let policy = cfg.guard_policy(category)?;
            if category == Category::WebTerms {
                web_terms = Some((table, policy));
            } else {
                tables.push((table, policy));
            }
        }
        if enabled.contains(&DetectorKind::WebTerms) && web_terms.is_none() {
            web_terms = Some((TransformationTable::empty(lp.clone(), Category::WebTerms), GuardPolicy::uniform(GuardMode::None)));
        }
        let numeric = if enabled.contains(&DetectorKind::NumericalValues) {
            let (src, tgt) = cfg.locales()?;
            let words = match &cfg.number_words {
                Some(p) => Some(NumberWords::parse(
                    &std::fs::read_to_string(p).map_err(|e| Error::io_path(p, e))?,
                )?),
                None => NumberWords::for_language(&lp.target),
            };
            Some(NumericDetector::new(src, tgt, words))
        } else {
            None
        };
        let coverage = if enabled.contains(&DetectorKind::Coverage) {
            Some(cfg.coverage(&lp.source)?)
        } else {
            None
        };
        let hall = cfg.hallucination()?;
        Ok(DetectorSet {
            tables,
            web_terms,
            numeric,
            coverage,
            oscillatory: enabled.contains(&DetectorKind::HallucinationOscillatory).then_some(hall),
            natural: enabled.contains(&DetectorKind::HallucinationNatural).then_some(hall),
            subsume_numeric: cfg.subsume_numeric,
        })
    }

    pub fn needs_alignment(&self) -> bool {
        self.coverage.is_some()
    }

    pub fn natural(&self) -> Option<&HallucinationConfig> {
        self.natural.as_ref()
    }

    /// All per-pair detectors on one pair, ordered by detector then position.
    /// `alignment` is consulted only when coverage is enabled.
    pub fn detect_pair(&self, pair: &SentencePair, alignment: Option<&AlignOutcome>) -> Vec<Detection> {
        let mut out = Vec::new();
        let src = SourceTokens::new(&pair.source);
        let target_lower = lowercase(&pair.target);
        for (table, policy) in &self.tables {
            check_prepared(pair.id, &src, &target_lower, table, policy, &mut out);
        }
        if let Some((table, policy)) = &self.web_terms {
            check_urls(pair.id, &pair.source, &pair.target, &mut out);
            check_prepared(pair.id, &src, &target_lower, table, policy, &mut out);
        }
        if let Some(numeric) = &self.numeric {
            let before = out.len();
            numeric.check_into(pair.id, &pair.source, &pair.target, &mut out);
            if self.subsume_numeric && out.len() > before {
                subsume_numeric(&pair.source, &mut out, before);
            }
        }
        if let (Some(cfg), Some(AlignOutcome::Links(links))) = (&self.coverage, alignment) {
            out.extend(coverage_check(pair, links, cfg));
        }
        if let Some(cfg) = &self.oscillatory {
            out.extend(oscillatory_check(pair, cfg));
        }
        out.sort_by(|a, b| {
            a.detector
                .cmp(&b.detector)
                .then_with(|| a.source_spans.first().map(|s| s.start).cmp(&b.source_spans.first().map(|s| s.start)))
        });
        out
    }
}

/// Removes numeric detections (from index `from` on) that touch, or are separated only
/// by whitespace from, a currency or physical-unit detection.
fn subsume_numeric(source: &str, out: &mut Vec<Detection>, from: usize) {
    let anchors: Vec<(usize, usize)> = out[..from]
        .iter()
        .filter(|d| matches!(d.detector, DetectorKind::Currencies | DetectorKind::PhysicalUnits))
        .flat_map(|d| d.source_spans.iter().map(|s| (s.start, s.end)))
        .collect();
    if anchors.is_empty() {
        return;
    }
    let chars: Vec<char> = source.chars().collect();
    let only_space = |a: usize, b: usize| chars[a.min(chars.len())..b.min(chars.len())].iter().all(|c| c.is_whitespace());
    let adjacent = |s: usize, e: usize| {
        anchors.iter().any(|&(a, b)| {
            let (lo, hi) = if b <= s { (b, s) } else if e <= a { (e, a) } else { return true };
            only_space(lo, hi)
        })
    };
    let mut i = from;
    while i < out.len() {
        let d = &out[i];
        if d.detector == DetectorKind::NumericalValues
            && d.source_spans.iter().all(|s| adjacent(s.start, s.end))
        {
            out.remove(i);
        } else {
            i += 1;
        }
    }
}

/// Detector set plus worker pool and optional alignment provider.
pub struct Pipeline {
    detectors: DetectorSet,
    provider: Option<Box<dyn AlignmentProvider>>,
    pool: rayon::ThreadPool,
    batch_size: usize,
}

impl fmt::Debug for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Pipeline")
            .field("detectors", &self.detectors)
            .field("shards", &self.pool.current_num_threads())
            .field("batch_size", &self.batch_size)
            .finish_non_exhaustive()
    }
}

fn open_provider(cfg: &RunConfig) -> Result<Box<dyn AlignmentProvider>> {
    Ok(match cfg.aligner {
        AlignerKind::None => {
            return Err(Error::Config("no alignment provider configured".into()));
        }
        AlignerKind::External => {
            return Err(Error::Config(
                "aligner = \"external\" is only usable through the library interface".into(),
            ));
        }
        AlignerKind::Diagonal => Box::new(DiagonalProvider),
        AlignerKind::File => {
            let path = cfg
                .alignment_file
                .as_ref()
                .ok_or_else(|| Error::Config("aligner = \"file\" needs alignment_file".into()))?;
            Box::new(FileProvider::open(path)?)
        }
        AlignerKind::Sidecar => {
            let ep = SidecarEndpoint::from_str(cfg.sidecar_endpoint.as_deref().unwrap_or(""))?;
            Box::new(SidecarPool::connect(
                &ep,
                cfg.sidecar_connections,
                Duration::from_millis(cfg.sidecar_timeout_ms),
            )?)
        }
    })
}

/// Per-pair verdicts for one batch, in input order.
struct BatchResult {
    detections: Vec<Vec<Detection>>,
    unavailable: u64,
}

/// Outcome of a filter run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FilterSummary {
    pub stats: CorpusStats,
    pub kept: u64,
    pub removed: u64,
}

impl Pipeline {
    pub fn new(cfg: &RunConfig, mode: RunMode) -> Result<Self> {
        let detectors = DetectorSet::from_config(cfg, mode)?;
        let provider = if detectors.needs_alignment() {
            Some(open_provider(cfg)?)
        } else {
            None
        };
        Self::with_parts(detectors, provider, cfg.shard_count(), cfg.batch_size)
    }

    pub fn with_parts(
        detectors: DetectorSet,
        provider: Option<Box<dyn AlignmentProvider>>,
        shards: usize,
        batch_size: usize,
    ) -> Result<Self> {
        if detectors.needs_alignment() && provider.is_none() {
            return Err(Error::Config(
                "the coverage detector needs an alignment provider".into(),
            ));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(shards.max(1))
            .thread_name(|i| format!("mtprobe-shard-{i}"))
            .build()
            .map_err(|e| Error::Invariant(format!("building worker pool: {e}")))?;
        Ok(Pipeline {
            detectors,
            provider,
            pool,
            batch_size: batch_size.max(1),
        })
    }

    pub fn detectors(&self) -> &DetectorSet {
        &self.detectors
    }

    pub fn shards(&self) -> usize {
        self.pool.current_num_threads()
    }

    fn run_batch(&mut self, batch: &[SentencePair], natural: Option<&mut NaturalScan>) -> Result<BatchResult> {
        let alignments = match &mut self.provider {
            Some(p) if self.detectors.needs_alignment() => Some(p.align_batch(batch)?),
            _ => None,
        };
        let unavailable = alignments
            .iter()
            .flatten()
            .filter(|o| matches!(o, AlignOutcome::Unavailable(_)))
            .count() as u64;
        let detectors = &self.detectors;
        let want_keys = natural.is_some();
        let results: Vec<(Vec<Detection>, Option<(String, usize)>)> = self.pool.install(|| {
            batch
                .par_iter()
                .enumerate()
                .map(|(i, pair)| {
                    let links = alignments.as_ref().map(|a| &a[i]);
                    let key = want_keys.then(|| {
                        (normalize_target(&pair.target), pair.source.split_whitespace().count())
                    });
                    (detectors.detect_pair(pair, links), key)
                })
                .collect()
        });
        let mut detections = Vec::with_capacity(results.len());
        if let Some(scan) = natural {
            for (pair, (d, key)) in batch.iter().zip(results) {
                if let Some((key, len)) = key {
                    scan.observe_normalized(key, len, pair.id);
                }
                detections.push(d);
            }
        } else {
            detections.extend(results.into_iter().map(|(d, _)| d));
        }
        Ok(BatchResult {
            detections,
            unavailable,
        })
    }

    /// Streams the corpus through every enabled detector, writing report records as
    /// batches complete. Natural-hallucination records follow at the end.
    pub fn run_detect<I>(&mut self, pairs: I, report: &mut dyn Write) -> Result<CorpusStats>
    where
        I: IntoIterator<Item = Result<SentencePair>>,
    {
        let mut stats = CorpusStats::default();
        let natural_on = self.detectors.natural.is_some();
        let mut scan = natural_on.then(NaturalScan::new);
        let mut flagged_ids: HashSet<PairId> = HashSet::new();
        let mut iter = pairs.into_iter();
        loop {
            let batch = next_batch(&mut iter, self.batch_size)?;
            if batch.is_empty() {
                break;
            }
            stats.total_processed += batch.len() as u64;
            let res = self.run_batch(&batch, scan.as_mut())?;
            stats.alignment_unavailable += res.unavailable;
            for (pair, dets) in batch.iter().zip(&res.detections) {
                if dets.is_empty() {
                    continue;
                }
                count_pair(&mut stats, dets);
                if natural_on {
                    flagged_ids.insert(pair.id);
                } else {
                    stats.total_flagged += 1;
                }
                for d in dets {
                    write_record(&ReportRecord::from(d), report)?;
                }
            }
        }
        if let (Some(scan), Some(cfg)) = (scan, self.detectors.natural) {
            let natural = scan.finish(&cfg);
            for d in &natural {
                stats.bump(DetectorKind::HallucinationNatural);
                flagged_ids.insert(d.pair_id);
                write_record(&ReportRecord::from(d), report)?;
            }
            stats.total_flagged = flagged_ids.len() as u64;
        }
        report.flush().map_err(|e| Error::io("flushing report", e))?;
        Ok(stats)
    }

    /// In-memory detection over a slice; detections in report order.
    pub fn detect_all(&mut self, pairs: &[SentencePair]) -> Result<(Vec<Detection>, CorpusStats)> {
        let mut buf = Vec::new();
        let stats = self.run_detect(pairs.iter().cloned().map(Ok), &mut buf)?;
        let records = crate::corpus::read_report(buf.as_slice())?;
        let detections = records
            .into_iter()
            .map(|r| record_to_detection(r, pairs))
            .collect::<Result<_>>()?;
        Ok((detections, stats))
    }

    /// Splits the corpus into pairs without any detection and pairs with at least one.
    ///
    /// `open` is called twice when natural-hallucination detection is enabled: once to
    /// group targets, once to filter.
    pub fn run_filter<I, F>(
        &mut self,
        mut open: F,
        clean: &mut dyn Write,
        removed: &mut dyn Write,
        mut report: Option<&mut dyn Write>,
    ) -> Result<FilterSummary>
    where
        F: FnMut() -> Result<I>,
        I: IntoIterator<Item = Result<SentencePair>>,
    {
        let mut natural: HashMap<PairId, Detection> = HashMap::new();
        if let Some(cfg) = self.detectors.natural {
            let mut scan = NaturalScan::new();
            for pair in open()? {
                scan.observe(&pair?);
            }
            natural = scan.finish(&cfg).into_iter().map(|d| (d.pair_id, d)).collect();
        }
        let mut summary = FilterSummary::default();
        let mut iter = open()?.into_iter();
        loop {
            let batch = next_batch(&mut iter, self.batch_size)?;
            if batch.is_empty() {
                break;
            }
            summary.stats.total_processed += batch.len() as u64;
            let res = self.run_batch(&batch, None)?;
            summary.stats.alignment_unavailable += res.unavailable;
            for (pair, mut dets) in batch.iter().zip(res.detections) {
                if let Some(d) = natural.remove(&pair.id) {
                    dets.push(d);
                }
                if dets.is_empty() {
                    write_pair(pair, clean)?;
                    summary.kept += 1;
                    continue;
                }
                count_pair(&mut summary.stats, &dets);
                summary.stats.total_flagged += 1;
                summary.removed += 1;
                write_pair(pair, removed)?;
                if let Some(r) = report.as_deref_mut() {
                    for d in &dets {
                        write_record(&ReportRecord::from(d), r)?;
                    }
                }
            }
        }
        if !natural.is_empty() {
            return Err(Error::Invariant(format!(
                "{} natural-hallucination ids were not seen on the second pass; the corpus changed between passes",
                natural.len()
            )));
        }
        clean.flush().map_err(|e| Error::io("flushing clean output", e))?;
        removed.flush().map_err(|e| Error::io("flushing removed output", e))?;
        Ok(summary)
    }
}

fn next_batch<I>(iter: &mut I, size: usize) -> Result<Vec<SentencePair>>
where
    I: Iterator<Item = Result<SentencePair>>,
{
    let mut batch = Vec::with_capacity(size.min(65_536));
    for item in iter.by_ref() {
        batch.push(item?);
        if batch.len() == size {
            break;
        }
    }
    Ok(batch)
}

fn count_pair(stats: &mut CorpusStats, dets: &[Detection]) {
    let mut kinds: Vec<DetectorKind> = dets.iter().map(|d| d.detector).collect();
    kinds.sort();
    kinds.dedup();
    for k in kinds {
        stats.bump(k);
    }
}

fn record_to_detection(r: ReportRecord, pairs: &[SentencePair]) -> Result<Detection> {
    let detector = DetectorKind::from_str(&r.detector)?;
    let source = pairs
        .iter()
        .find(|p| p.id == r.pair_id)
        .map(|p| p.source.as_str())
        .ok_or_else(|| Error::Invariant(format!("report names unknown pair {}", r.pair_id)))?;
    let source_spans = r
        .spans
        .iter()
        .map(|&[s, e]| {
            let surface: String = source.chars().skip(s).take(e - s).collect();
            crate::corpus::TokenSpan { start: s, end: e, surface }
        })
        .collect();
    Ok(Detection {
        pair_id: r.pair_id,
        detector,
        source_spans,
        evidence: r.evidence,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DropReason {
    /// Both sides are empty.
    Empty,
    Ratio,
    Length,
    Language,
}

impl DropReason {
    pub fn as_str(self) -> &'static str {
        match self {
            DropReason::Empty => "empty",
            DropReason::Ratio => "ratio",
            DropReason::Length => "length",
            DropReason::Language => "language",
        }
    }
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterVerdict {
    Keep,
    Drop(DropReason),
}

/// Length-ratio, length and language rules of the conventional bitext filter.
/// The first failing rule is reported.
pub fn standard_filter(
    pair: &SentencePair,
    max_ratio: f64,
    max_words: usize,
    lang_predicate: &dyn Fn(&SentencePair) -> bool,
) -> FilterVerdict {
    let s = pair.source.split_whitespace().count();
    let t = pair.target.split_whitespace().count();
    if s == 0 && t == 0 {
        return FilterVerdict::Drop(DropReason::Empty);
    }
    let (s_f, t_f) = (s as f64, t as f64);
    if t_f > max_ratio * s_f || s_f > max_ratio * t_f {
        return FilterVerdict::Drop(DropReason::Ratio);
    }
    if s > max_words || t > max_words {
        return FilterVerdict::Drop(DropReason::Length);
    }
    if !lang_predicate(pair) {
        return FilterVerdict::Drop(DropReason::Language);
    }
    FilterVerdict::Keep
}

/// The language predicate used when none is supplied.
pub fn any_language(_: &SentencePair) -> bool {
    true
}
