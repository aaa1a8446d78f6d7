//! Corpus ingestion: vocabularies, continuous token streams, training
//! windows, bracketed gold trees, and oracle span-supervision targets.
//!
//! All operations here are pure transformations of immutable inputs.

mod oracle;
mod stream;
pub mod synth;
mod trees;
mod vocab;

pub use oracle::{oracle_targets, OracleSpanTargets};
pub use stream::{encode_stream, make_windows, TokenStream, Window, WindowSet};
pub use trees::{
    read_bracketed, read_unlabeled, remove_punct, wsj40_filter, GoldTree, TreeNode, Wsj40Outcome,
    DEFAULT_PUNCT,
};
pub use vocab::{build_vocab, Vocabulary, EOS_TOKEN, UNK_TOKEN};
