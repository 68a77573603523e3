//! Detectors for salient long-tail machine translation errors.
//!
//! Every detector takes a source sentence and its translation and reports an error only
//! when it is certain, trading recall for precision. The same detectors drive corpus
//! filtering, metamorphic test generation and synthetic corpus generation.

pub mod alignment;
pub mod corpus;
pub mod error;
pub mod generate;
pub mod table;
pub mod text;
pub mod numeric;
pub mod pipeline;
pub mod sequence;
pub mod token;

pub use corpus::{
    BitextFormat, BitextReader, CorpusStats, Detection, DetectorKind, PairId, ReportRecord,
    SentencePair, TokenSpan,
};
pub use error::{Error, Result};
pub use table::{Category, LanguagePair, TransformationEntry, TransformationTable};
