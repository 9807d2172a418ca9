//! Grammar-constrained decoding: offline construction of token spanner and
//! parser acceptance tables, and exact online token masks.

pub mod bitset;
pub mod error;
pub mod format;
pub mod grammar;
pub mod lexing;
pub mod parser;
pub mod runtime;
pub mod seq;
pub mod spanner;
pub mod token;

pub use bitset::BitSet;
pub use error::{Error, Result};
