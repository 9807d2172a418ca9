use std::fmt;

use thiserror::Error;

use crate::grammar::Diagnostic;

/// Top-level error for the compile pipeline and the decoding runtime.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grammar:\n{}", DiagList(.0))]
    Grammar(Vec<Diagnostic>),

    #[error("invalid vocabulary: {0}")]
    Vocabulary(#[from] VocabError),

    #[error(transparent)]
    Conflict(#[from] LalrConflict),

    #[error(transparent)]
    Decode(#[from] DecodeError),

    #[error(transparent)]
    Artifact(#[from] ArtifactError),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

struct DiagList<'a>(&'a [Diagnostic]);

impl fmt::Display for DiagList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "  {d}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VocabError {
    #[error("malformed vocabulary JSON: {0}")]
    Json(String),
    #[error("unsupported vocabulary version {0}")]
    Version(u32),
    #[error("token {index} is not valid base64: {reason}")]
    Base64 { index: usize, reason: String },
    #[error("token {0} is empty")]
    EmptyToken(usize),
    #[error("eos_id {eos_id} out of range for {len} tokens")]
    EosOutOfRange { eos_id: u64, len: usize },
    #[error("EOS entry {0} must have empty content")]
    EosNotEmpty(u32),
}

/// A shift/reduce or reduce/reduce conflict found while building the LALR(1) table.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("LALR conflict in state {state} on lookahead {lookahead}: {detail}")]
pub struct LalrConflict {
    pub state: u32,
    pub lookahead: String,
    pub detail: String,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("token {0} is masked in the current state")]
    MaskedToken(u32),
    #[error("token id {0} is outside the vocabulary")]
    UnknownToken(u32),
    #[error("decoder state is finished; no further tokens accepted")]
    Finished,
    #[error("prompt token {token} at position {index} is not allowed by the grammar")]
    InvalidPrompt { index: usize, token: u32 },
    #[error("dead end at step {step}: no token is allowed")]
    DeadEnd { step: usize },
    #[error("scorer returned {got} scores for a vocabulary of {expected}")]
    ScoreLength { expected: usize, got: usize },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ArtifactError {
    #[error("bad magic: not a compiled artifact")]
    BadMagic,
    #[error("artifact format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("content hash mismatch")]
    HashMismatch,
    #[error("truncated artifact: {0}")]
    Truncated(String),
    #[error("malformed section {section}: {reason}")]
    Malformed { section: String, reason: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
