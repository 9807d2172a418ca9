//! Vocabulary loading, the detokenizing transducer and the token-level
//! lexing transducer.

mod compose;
mod detok;
mod vocab;

pub use compose::{compose_and_determinize, sigma_coverage_gaps, TokenLexingFst, TokenStep};
pub use detok::{build_detokenizing_fst, DetokNode, DetokenizingFst};
pub use vocab::{escape_bytes, load_vocabulary, TokenId, Vocabulary, VOCAB_FORMAT_VERSION};
