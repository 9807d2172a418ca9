//! Lexing automaton, character-level lexing transducer and the reference
//! maximal-munch lexer.

mod dfa;
mod fst;
mod nfa;
mod reference;

pub use dfa::{build_lexing_automaton, Fsa, ShadowedTerminal, NO_STATE};
pub use fst::{build_lexing_fst, EosEmission, LexingFst};
pub use nfa::{compile_regex, Nfa, NfaState};
pub use reference::{reference_lex, LexSym, LexerSpec, RefLexer};

