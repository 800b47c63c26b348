//! Fake-document generation for deception-based defense, plus the harness
//! to measure how convincing the fakes are.
//!
//! The pipeline: ingest documents ([`corpus`]), find the concept spans
//! worth hiding ([`concepts`]), blank them out ([`masking`]), serialize
//! masked text and answers as training pairs ([`pairs`]), and refill the
//! blanks with a scoring backend ([`backends`]) driven by penalized
//! nucleus sampling ([`decoding`]) so the result reads plausibly but lies
//! about the specifics. The [`eval`] module packages originals and fakes
//! into review sets and crunches the returned review sheets.
//!
//! Everything is deterministic given a seed; see [`seeds`] for how streams
//! are derived. [`synth`] generates toy corpora for tests and benches.

pub mod backends;
pub mod concepts;
pub mod corpus;
pub mod decoding;
pub mod error;
pub mod eval;
pub mod masking;
pub mod pairs;
pub mod seeds;
pub mod synth;
pub mod text;

pub use error::{Error, Result};
