use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grammar::{validate_grammar, Grammar, TerminalId};
use crate::lexing::{build_lexing_automaton, build_lexing_fst, LexingFst};
use crate::parser::{build_lalr_pda, preprocess_parser, strip_stack_fsa, ClassCounts, ParserTables, Pda};
use crate::spanner::{build_spanner_tables, producible_terminals, spanner_csv, SpannerTables};
use crate::token::{
    build_detokenizing_fst, compose_and_determinize, sigma_coverage_gaps, TokenId, TokenLexingFst, Vocabulary,
};

/// Everything the decoder needs, built offline from one (grammar,
/// vocabulary) pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompiledArtifact {
    pub grammar_hash: [u8; 32],
    pub grammar: Grammar,
    pub vocab: Vocabulary,
    pub lexer: LexingFst,
    pub tokens: TokenLexingFst,
    pub spanner: SpannerTables,
    pub pda: Pda,
    pub tables: ParserTables,
    pub ignored: Vec<bool>,
}

/// Wall times in microseconds.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageTimes {
    pub lexer_us: u64,
    pub token_transducer_us: u64,
    pub spanner_us: u64,
    pub parser_us: u64,
    pub total_us: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompileReport {
    pub times: StageTimes,
    pub lexer_states: usize,
    pub reachable_lexer_states: usize,
    pub token_transitions: usize,
    pub realizable_sequences: usize,
    pub normalized_sequences: usize,
    pub lr_states: usize,
    pub classes: ClassCounts,
    pub a_table_bits: usize,
    pub d_table_entries: usize,
    /// Terminals that can never be emitted, with the terminals that win
    /// every one of their lexemes.
    pub shadowed: Vec<(String, Vec<String>)>,
    /// Bytes used by the lexer that are not single-byte tokens.
    pub coverage_gaps: Vec<u8>,
    pub duplicate_tokens: Vec<(TokenId, TokenId)>,
}

/// Hash identifying a (grammar, vocabulary) pair.
pub fn content_hash(g: &Grammar, v: &Vocabulary) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(g.render().as_bytes());
    h.update([0]);
    h.update(v.to_json().as_bytes());
    h.finalize().into()
}

fn micros(t: Instant) -> u64 {
    t.elapsed().as_micros() as u64
}

/// Runs the whole offline pipeline. Construction uses the global rayon pool.
pub fn compile_artifact(g: &Grammar, v: &Vocabulary) -> Result<(CompiledArtifact, CompileReport)> {
    let diags = validate_grammar(g);
    if !diags.is_empty() {
        return Err(Error::Grammar(diags));
    }
    let start = Instant::now();
    let mut times = StageTimes::default();

    let t = Instant::now();
    let (fsa, shadowed) = build_lexing_automaton(&g.terminals);
    let coverage_gaps = sigma_coverage_gaps(&fsa, v);
    let lexer = build_lexing_fst(fsa);
    times.lexer_us = micros(t);

    let t = Instant::now();
    let tokens = compose_and_determinize(&lexer, &build_detokenizing_fst(v), v);
    times.token_transducer_us = micros(t);

    let t = Instant::now();
    let ignored: Vec<bool> = g.terminals.iter().map(|d| d.ignored).collect();
    let spanner = build_spanner_tables(&tokens, producible_terminals(&lexer), &ignored, v.len());
    times.spanner_us = micros(t);

    let t = Instant::now();
    let pda = build_lalr_pda(g)?;
    let stripped = strip_stack_fsa(&pda);
    let tables = preprocess_parser(&pda, &stripped, &spanner);
    times.parser_us = micros(t);
    times.total_us = micros(start);

    let mut a_table_bits = 0;
    let mut d_table_entries = 0;
    for qa in tokens.reachable_states() {
        for qp in 0..pda.num_states() as u32 {
            a_table_bits += tables.a_table(qa, qp).count();
            d_table_entries += tables.d_table(qa, qp).len();
        }
    }
    let name = |t: TerminalId| g.terminal_name(t).to_owned();
    let report = CompileReport {
        times,
        lexer_states: lexer.num_states(),
        reachable_lexer_states: tokens.reachable_states().count(),
        token_transitions: tokens.num_transitions(),
        realizable_sequences: spanner.realizable().len(),
        normalized_sequences: spanner.normalized().len(),
        lr_states: pda.num_states(),
        classes: tables.total_counts(),
        a_table_bits,
        d_table_entries,
        shadowed: shadowed.iter().map(|s| (name(s.terminal), s.by.iter().map(|&b| name(b)).collect())).collect(),
        coverage_gaps,
        duplicate_tokens: v.duplicates(),
    };
    let artifact = CompiledArtifact {
        grammar_hash: content_hash(g, v),
        grammar: g.clone(),
        vocab: v.clone(),
        lexer,
        tokens,
        spanner,
        pda,
        tables,
        ignored,
    };
    Ok((artifact, report))
}

impl CompiledArtifact {
    pub fn terminal_name(&self, t: TerminalId) -> String {
        if t.is_end() {
            "$".to_owned()
        } else {
            self.grammar.terminal_name(t).to_owned()
        }
    }

    /// The inverse spanner table as CSV (see [`spanner_csv`]).
    pub fn spanner_dump(&self, include_eos: bool) -> String {
        spanner_csv(&self.spanner, &self.tokens, &self.vocab, &|t| self.terminal_name(t), include_eos)
    }

    /// A/R/D classification of every normalized sequence per parser state.
    pub fn classes_dump(&self) -> String {
        self.tables.dump_classes(&self.spanner, &|t| self.terminal_name(t))
    }

    /// Recomputes the content hash and compares it with the stored one.
    pub fn hash_matches(&self) -> bool {
        content_hash(&self.grammar, &self.vocab) == self.grammar_hash
    }
}
