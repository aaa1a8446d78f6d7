//! A recurrent language model that attends over spans of its left context,
//! plus an unsupervised constituency parser decoded greedily from the
//! attention scores.
//!
//! The pieces, bottom up:
//!
//! * [`tensor`] / [`autodiff`] — dense matrices over a configurable float
//!   precision and a small reverse-mode tape.
//! * [`rrnn`] — a state-linear gated cell whose span encodings are computed
//!   by a prefix-difference identity, with a brute-force oracle.
//! * [`span_attention`] — scoring, normalizing, and merging span context
//!   into the hidden state.
//! * [`corpus`] — vocabularies, token streams, training windows, bracketed
//!   trees, and oracle span-supervision targets.
//! * `lm` — the assembled language model and its training loop.
//! * [`parser`] — greedy top-down decoding and parse evaluation.
//! * `config` / `commands` — run configuration and the CLI entry points.
//!
//! The `book/` directory of the repository walks through the concepts; its
//! code snippets compile and run as doc-tests via the `guide` module.

pub mod autodiff;
pub mod corpus;
pub mod error;
pub mod parser;
pub mod rrnn;
pub mod seeding;
pub mod selftest;
pub mod span_attention;
pub mod tensor;

pub use error::{Error, Result};
