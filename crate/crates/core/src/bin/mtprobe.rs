use std::cell::Cell;
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Cursor, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::rc::Rc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use mtprobe::corpus::{read_report, BitextFormat, BitextReader, CorpusStats, SentencePair};
use mtprobe::generate::{meta_corpus_generate, metamorphic_generate, SkipReason};
use mtprobe::pipeline::{
    any_language, standard_filter, AlignerKind, DropReason, FilterVerdict, Pipeline, RunConfig, RunMode,
};
use mtprobe::table::{builtin_tables, load_table_dir, Category, TransformationTable};
use mtprobe::{Error, Result};

#[derive(Parser)]
#[command(name = "mtprobe", version, about = "High-precision detectors for machine translation errors")]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the detectors and write a line-delimited JSON report.
    Detect {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        run: RunArgs,
        /// Report path; stdout when omitted.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Stats table path; stderr when omitted.
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Split a bitext into pairs without detections and pairs with some.
    Filter {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        clean: Option<PathBuf>,
        #[arg(long)]
        removed: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Summarize a detection report.
    Stats {
        /// Report to read; stdin when omitted.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Number of pairs the report was produced from.
        #[arg(long, conflicts_with = "input")]
        total: Option<u64>,
        /// Count pairs in this TSV bitext instead of passing --total.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Same-type trigger substitutions of source sentences.
    Metamorphic {
        /// One sentence per line; with a TAB, the first column is used.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value = "physical-units")]
        category: String,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        provenance: Option<PathBuf>,
    },
    /// Templatize clean pairs and expand them into a synthetic bitext.
    Metacorpus {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value = "physical-units")]
        category: String,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        provenance: Option<PathBuf>,
        /// Also write the templates as JSON lines.
        #[arg(long)]
        templates: Option<PathBuf>,
    },
    /// Length-ratio and length filter.
    Stdfilter {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        clean: Option<PathBuf>,
        #[arg(long)]
        removed: Option<PathBuf>,
        #[arg(long)]
        max_ratio: Option<f64>,
        #[arg(long)]
        max_words: Option<usize>,
    },
}

#[derive(Args, Clone)]
struct InputArgs {
    /// TSV bitext (`-` for stdin).
    #[arg(long, conflicts_with_all = ["source", "target"])]
    input: Option<PathBuf>,
    /// Source side of a parallel pair of files.
    #[arg(long, requires = "target")]
    source: Option<PathBuf>,
    #[arg(long, requires = "source")]
    target: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Comma-separated detector names.
    #[arg(long, value_delimiter = ',')]
    detectors: Option<Vec<String>>,
    #[arg(long)]
    shards: Option<usize>,
    #[arg(long)]
    table_dir: Option<PathBuf>,
    #[arg(long)]
    language_pair: Option<String>,
    /// none, file, diagonal or sidecar.
    #[arg(long)]
    aligner: Option<String>,
    #[arg(long)]
    alignment_file: Option<PathBuf>,
    /// tcp://host:port, unix:///path or cmd:program args.
    #[arg(long)]
    sidecar: Option<String>,
    #[arg(long)]
    no_subsume_numeric: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mtprobe: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn apply_overrides(cfg: &mut RunConfig, run: &RunArgs) -> Result<()> {
    if let Some(d) = &run.detectors {
        cfg.detectors = Some(d.clone());
    }
    if let Some(s) = run.shards {
        cfg.shards = s;
    }
    if let Some(t) = &run.table_dir {
        cfg.table_dir = Some(t.clone());
    }
    if let Some(lp) = &run.language_pair {
        cfg.language_pair = lp.clone();
    }
    if let Some(a) = &run.aligner {
        cfg.aligner = match a.as_str() {
            "none" => AlignerKind::None,
            "file" => AlignerKind::File,
            "diagonal" => AlignerKind::Diagonal,
            "sidecar" => AlignerKind::Sidecar,
            other => {
                return Err(Error::Config(format!(
                    "unknown aligner '{other}' (expected none, file, diagonal or sidecar)"
                )))
            }
        };
    }
    if let Some(f) = &run.alignment_file {
        cfg.alignment_file = Some(f.clone());
    }
    if let Some(s) = &run.sidecar {
        cfg.sidecar_endpoint = Some(s.clone());
    }
    if run.no_subsume_numeric {
        cfg.subsume_numeric = false;
    }
    Ok(())
}

fn is_stdin(p: &Path) -> bool {
    p.as_os_str() == "-"
}

/// A bitext source that can be opened more than once. Stdin is buffered in memory.
struct Input {
    format: Option<BitextFormat>,
    stdin: Option<Vec<u8>>,
}

impl Input {
    fn new(args: &InputArgs) -> Result<Self> {
        match (&args.input, &args.source, &args.target) {
            (Some(p), None, None) if is_stdin(p) => Ok(Input {
                format: None,
                stdin: None,
            }),
            (Some(p), None, None) => Ok(Input {
                format: Some(BitextFormat::Tsv(p.clone())),
                stdin: None,
            }),
            (None, Some(s), Some(t)) => Ok(Input {
                format: Some(BitextFormat::Parallel {
                    source: s.clone(),
                    target: t.clone(),
                }),
                stdin: None,
            }),
            (None, None, None) => Ok(Input {
                format: None,
                stdin: None,
            }),
            _ => Err(Error::Config("give either --input or both --source and --target".into())),
        }
    }

    fn open(&mut self) -> Result<BitextReader> {
        match &self.format {
            Some(f) => BitextReader::open(f),
            None => {
                if self.stdin.is_none() {
                    let mut buf = Vec::new();
                    io::stdin()
                        .lock()
                        .read_to_end(&mut buf)
                        .map_err(|e| Error::Io {
                            context: "reading stdin".into(),
                            source: e,
                        })?;
                    self.stdin = Some(buf);
                }
                Ok(BitextReader::tsv(Cursor::new(self.stdin.clone().unwrap_or_default())))
            }
        }
    }
}

/// Reader that reports its malformed-line count once exhausted.
struct Counted {
    reader: BitextReader,
    malformed: Rc<Cell<u64>>,
}

impl Iterator for Counted {
    type Item = Result<SentencePair>;

    fn next(&mut self) -> Option<Self::Item> {
        let next = self.reader.next();
        if next.is_none() {
            self.malformed.set(self.reader.malformed());
        }
        next
    }
}

fn create(path: Option<&Path>) -> Result<Box<dyn Write>> {
    match path {
        None => Ok(Box::new(BufWriter::new(io::stdout()))),
        Some(p) if is_stdin(p) => Ok(Box::new(BufWriter::new(io::stdout()))),
        Some(p) => {
            let f = File::create(p).map_err(|e| Error::Io {
                context: p.display().to_string(),
                source: e,
            })?;
            Ok(Box::new(BufWriter::new(f)))
        }
    }
}

fn create_file(path: &Path) -> Result<Box<dyn Write>> {
    create(Some(path))
}

fn sink() -> Box<dyn Write> {
    Box::new(io::sink())
}

fn emit_stats(stats: &CorpusStats, path: Option<&Path>) -> Result<()> {
    let text = stats.render();
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io {
            context: p.display().to_string(),
            source: e,
        }),
        None => {
            eprint!("{text}");
            Ok(())
        }
    }
}

fn warn_malformed(reader: &BitextReader) {
    if reader.malformed() == 0 {
        return;
    }
    let shown: Vec<String> = reader
        .malformed_lines()
        .iter()
        .take(10)
        .map(|l| (l + 1).to_string())
        .collect();
    eprintln!(
        "mtprobe: skipped {} malformed line(s) (lines {}{})",
        reader.malformed(),
        shown.join(", "),
        if reader.malformed() > 10 { ", ..." } else { "" }
    );
}

fn tables_for(cfg: &RunConfig) -> Result<Vec<TransformationTable>> {
    match &cfg.table_dir {
        Some(dir) => load_table_dir(dir),
        None => builtin_tables(&cfg.language_pair()?),
    }
}

fn table_for(cfg: &RunConfig, category: &str) -> Result<TransformationTable> {
    let cat: Category = category.parse().map_err(Error::Config)?;
    tables_for(cfg)?
        .into_iter()
        .find(|t| t.category() == cat)
        .ok_or_else(|| Error::Config(format!("no {cat} table available")))
}

fn write_json<T: Serialize>(value: &T, out: &mut dyn Write) -> Result<()> {
    let line = serde_json::to_string(value).map_err(|e| Error::Invariant(e.to_string()))?;
    writeln!(out, "{line}").map_err(|e| Error::Io {
        context: "writing output".into(),
        source: e,
    })
}

fn flush(out: &mut dyn Write) -> Result<()> {
    out.flush().map_err(|e| Error::Io {
        context: "flushing output".into(),
        source: e,
    })
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = load_config(cli.config.as_deref())?;
    match cli.command {
        Cmd::Detect {
            input,
            run,
            report,
            stats,
        } => {
            apply_overrides(&mut cfg, &run)?;
            let mut pipeline = Pipeline::new(&cfg, RunMode::Detect)?;
            let mut input = Input::new(&input)?;
            let mut reader = input.open()?;
            let mut out = create(report.as_deref().or(cfg.report.as_deref()))?;
            let mut stats_v = pipeline.run_detect(&mut reader, &mut out)?;
            flush(&mut out)?;
            stats_v.malformed = reader.malformed();
            warn_malformed(&reader);
            emit_stats(&stats_v, stats.as_deref().or(cfg.stats.as_deref()))
        }
        Cmd::Filter {
            input,
            run,
            clean,
            removed,
            report,
            stats,
        } => {
            apply_overrides(&mut cfg, &run)?;
            let clean = clean.or(cfg.clean.clone()).ok_or_else(|| {
                Error::Config("filter needs --clean (or clean in the config)".into())
            })?;
            let removed = removed.or(cfg.removed.clone()).ok_or_else(|| {
                Error::Config("filter needs --removed (or removed in the config)".into())
            })?;
            let mut pipeline = Pipeline::new(&cfg, RunMode::Filter)?;
            let mut input = Input::new(&input)?;
            let mut clean_out = create_file(&clean)?;
            let mut removed_out = create_file(&removed)?;
            let mut report_out = match report.or(cfg.report.clone()) {
                Some(p) => Some(create_file(&p)?),
                None => None,
            };
            let malformed = Rc::new(Cell::new(0u64));
            let summary = pipeline.run_filter(
                || {
                    Ok(Counted {
                        reader: input.open()?,
                        malformed: Rc::clone(&malformed),
                    })
                },
                &mut clean_out,
                &mut removed_out,
                report_out.as_mut().map(|w| w.as_mut() as &mut dyn Write),
            )?;
            if malformed.get() > 0 {
                eprintln!("mtprobe: skipped {} malformed line(s)", malformed.get());
            }
            if let Some(r) = report_out.as_deref_mut() {
                flush(r)?;
            }
            let mut stats_v = summary.stats;
            stats_v.malformed = malformed.get();
            eprintln!("mtprobe: kept {}, removed {}", summary.kept, summary.removed);
            emit_stats(&stats_v, stats.as_deref().or(cfg.stats.as_deref()))
        }
        Cmd::Stats {
            report,
            total,
            input,
        } => {
            let records = match &report {
                Some(p) if !is_stdin(p) => {
                    let f = File::open(p).map_err(|e| Error::Io {
                        context: p.display().to_string(),
                        source: e,
                    })?;
                    read_report(BufReader::new(f))?
                }
                _ => read_report(io::stdin().lock())?,
            };
            let total = match (total, input) {
                (Some(t), _) => t,
                (None, Some(path)) => {
                    let mut reader = BitextReader::open(&BitextFormat::Tsv(path))?;
                    let mut n = 0u64;
                    for p in reader.by_ref() {
                        p?;
                        n += 1;
                    }
                    n
                }
                (None, None) => records
                    .iter()
                    .map(|r| r.pair_id + 1)
                    .max()
                    .unwrap_or(0),
            };
            let stats = CorpusStats::from_records(&records, total)?;
            if stats.total_flagged > stats.total_processed {
                return Err(Error::Config(format!(
                    "report flags {} pairs but only {} were processed",
                    stats.total_flagged, stats.total_processed
                )));
            }
            print!("{}", stats.render());
            Ok(())
        }
        Cmd::Metamorphic {
            input,
            category,
            output,
            provenance,
        } => {
            let table = table_for(&cfg, &category)?;
            let reader: Box<dyn BufRead> = match &input {
                Some(p) if !is_stdin(p) => Box::new(BufReader::new(File::open(p).map_err(|e| Error::Io {
                    context: p.display().to_string(),
                    source: e,
                })?)),
                _ => Box::new(BufReader::new(io::stdin())),
            };
            let mut out = create(output.as_deref())?;
            let mut prov = match &provenance {
                Some(p) => create_file(p)?,
                None => sink(),
            };
            let mut count = 0u64;
            for (line_no, line) in reader.lines().enumerate() {
                let line = line.map_err(|e| Error::Io {
                    context: "reading sentences".into(),
                    source: e,
                })?;
                let sentence = line.split('\t').next().unwrap_or("");
                let sentence = SentencePair::new(0, sentence, "").source;
                for inst in metamorphic_generate(line_no as u64, &sentence, &table) {
                    writeln!(out, "{}", inst.new_source).map_err(|e| Error::Io {
                        context: "writing output".into(),
                        source: e,
                    })?;
                    write_json(&inst, &mut prov)?;
                    count += 1;
                }
            }
            flush(&mut out)?;
            flush(&mut prov)?;
            eprintln!("mtprobe: {count} metamorphic instances");
            Ok(())
        }
        Cmd::Metacorpus {
            input,
            category,
            output,
            provenance,
            templates,
        } => {
            let table = table_for(&cfg, &category)?;
            let policy = cfg.guard_policy(table.category())?;
            let mut input = Input::new(&input)?;
            let mut reader = input.open()?;
            let pairs: Vec<SentencePair> = reader.by_ref().collect::<Result<_>>()?;
            warn_malformed(&reader);
            let mc = meta_corpus_generate(&pairs, &table, &policy);
            let mut out = create(output.as_deref())?;
            let mut prov = match &provenance {
                Some(p) => create_file(p)?,
                None => sink(),
            };
            for p in &mc.pairs {
                writeln!(out, "{}\t{}", p.source, p.target).map_err(|e| Error::Io {
                    context: "writing output".into(),
                    source: e,
                })?;
                write_json(&p.provenance, &mut prov)?;
            }
            if let Some(path) = &templates {
                let mut t_out = create_file(path)?;
                for t in &mc.templates {
                    write_json(
                        &serde_json::json!({
                            "template_id": t.id,
                            "pair_id": t.pair_id,
                            "source_template": t.source_template,
                            "target_template": t.target_template,
                            "trigger": t.slot_entry.trigger,
                            "type_tag": t.slot_entry.type_tag,
                            "matched_source": t.matched_source,
                            "matched_target_form": t.matched_target_form,
                        }),
                        &mut t_out,
                    )?;
                }
                flush(&mut t_out)?;
            }
            flush(&mut out)?;
            flush(&mut prov)?;
            let skipped: BTreeMap<&str, u64> = SkipReason::ALL
                .iter()
                .map(|r| (r.as_str(), mc.skipped(*r)))
                .collect();
            eprintln!(
                "mtprobe: {} templates, {} pairs; skipped {:?}",
                mc.templates.len(),
                mc.pairs.len(),
                skipped
            );
            Ok(())
        }
        Cmd::Stdfilter {
            input,
            clean,
            removed,
            max_ratio,
            max_words,
        } => {
            let max_ratio = max_ratio.unwrap_or(cfg.max_ratio);
            let max_words = max_words.unwrap_or(cfg.max_words);
            if !(max_ratio >= 1.0) {
                return Err(Error::Config("max_ratio must be at least 1".into()));
            }
            let mut input = Input::new(&input)?;
            let mut reader = input.open()?;
            let mut clean_out = create(clean.as_deref().or(cfg.clean.as_deref()))?;
            let mut removed_out = match removed.as_deref().or(cfg.removed.as_deref()) {
                Some(p) => create_file(p)?,
                None => sink(),
            };
            let mut dropped: BTreeMap<DropReason, u64> = BTreeMap::new();
            let mut kept = 0u64;
            for pair in reader.by_ref() {
                let pair = pair?;
                let out = match standard_filter(&pair, max_ratio, max_words, &any_language) {
                    FilterVerdict::Keep => {
                        kept += 1;
                        &mut clean_out
                    }
                    FilterVerdict::Drop(reason) => {
                        *dropped.entry(reason).or_insert(0) += 1;
                        &mut removed_out
                    }
                };
                writeln!(out, "{}\t{}", pair.source, pair.target).map_err(|e| Error::Io {
                    context: "writing output".into(),
                    source: e,
                })?;
            }
            flush(&mut clean_out)?;
            flush(&mut removed_out)?;
            warn_malformed(&reader);
            let reasons: Vec<String> = dropped.iter().map(|(r, n)| format!("{r}={n}")).collect();
            eprintln!("mtprobe: kept {kept}, dropped {} ({})", dropped.values().sum::<u64>(), reasons.join(", "));
            Ok(())
        }
    }
}
