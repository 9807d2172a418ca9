mod lalr;
mod stripped;
mod tables;

pub use lalr::{build_lalr_pda, Action, Pda, PrefixResult, RuleInfo, SimState, SimStep, NO_GOTO};
pub use stripped::{strip_stack_fsa, StrippedFsa};
pub use tables::{classify, preprocess_parser, ClassCounts, ParserTables, SeqClass};
