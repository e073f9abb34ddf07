//! Screening prioritisation for systematic reviews.
//!
//! A topic's candidate pool is ranked against a dense query vector, the top
//! `k` documents are judged, and the query is moved with Rocchio's update
//! before the remaining documents are re-ranked. The concatenation of the
//! judged batches is the screening order that gets evaluated.
//!
//! Module map:
//!
//! * [`datastore`]: corpora, topics, pools, qrels and embedding files.
//! * [`dense`]: dense vectors, exact inner-product ranking, Rocchio update.
//! * [`sparse`]: tokenizer, inverted index, BM25 and RM3 expansion.
//! * [`tar`]: logistic-regression active learning baseline.
//! * [`session`]: the batch/feedback state machine and simulation driver.
//! * [`evaluation`]: AP, Last Rel, paired t-tests and reports.

pub mod datastore;
pub mod dense;
pub mod error;
pub mod evaluation;
pub mod session;
pub mod sparse;
pub mod tar;

pub use error::{Error, Result};
