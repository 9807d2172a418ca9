use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::detok::DetokenizingFst;
use super::vocab::{TokenId, Vocabulary};
use crate::grammar::TerminalId;
use crate::lexing::{Fsa, LexingFst};
use crate::seq::{SeqId, SeqPool};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenStep {
    pub token: TokenId,
    pub target: u32,
    pub seq: SeqId,
}

/// Token-level lexing transducer: for each lexer state reachable from the
/// initial state under whole tokens, the sparse map token to (target state,
/// emitted terminal sequence). Lexer state numbering is shared with the
/// character-level transducer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenLexingFst {
    rows: Vec<Vec<TokenStep>>,
    reachable: Vec<bool>,
    pool: SeqPool,
    eos_id: TokenId,
}

impl TokenLexingFst {
    pub fn num_states(&self) -> usize {
        self.rows.len()
    }

    pub fn is_reachable(&self, q: u32) -> bool {
        self.reachable[q as usize]
    }

    pub fn reachable_states(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.rows.len() as u32).filter(|&q| self.reachable[q as usize])
    }

    /// Entries of state `q`, sorted by token id.
    pub fn row(&self, q: u32) -> &[TokenStep] {
        &self.rows[q as usize]
    }

    #[inline]
    pub fn step_entry(&self, q: u32, t: TokenId) -> Option<TokenStep> {
        let row = &self.rows[q as usize];
        row.binary_search_by_key(&t, |s| s.token).ok().map(|i| row[i])
    }

    #[inline]
    pub fn step(&self, q: u32, t: TokenId) -> Option<(u32, &[TerminalId])> {
        self.step_entry(q, t).map(|s| (s.target, self.pool.get(s.seq)))
    }

    pub fn pool(&self) -> &SeqPool {
        &self.pool
    }

    pub fn eos_id(&self) -> TokenId {
        self.eos_id
    }

    pub fn num_transitions(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }
}

type RawRow = Vec<(TokenId, u32, Vec<TerminalId>)>;

/// Composes the detokenizing transducer with the lexing transducer by
/// replaying every token's bytes from every reachable lexer state.
///
/// The trie is walked depth-first so tokens sharing a prefix share its
/// replay. Rows are computed in parallel, breadth-first from the initial
/// state; emitted sequences are interned afterwards in (state, token) order
/// so the result does not depend on scheduling.
pub fn compose_and_determinize(lex: &LexingFst, detok: &DetokenizingFst, vocab: &Vocabulary) -> TokenLexingFst {
    let n = lex.num_states();
    let mut raw: Vec<Option<RawRow>> = vec![None; n];
    let mut reachable = vec![false; n];
    reachable[LexingFst::INITIAL as usize] = true;
    let mut frontier = vec![LexingFst::INITIAL];
    while !frontier.is_empty() {
        let rows: Vec<(u32, RawRow)> =
            frontier.par_iter().map(|&q| (q, replay_row(lex, detok, q, vocab.eos_id()))).collect();
        let mut next = Vec::new();
        for (q, row) in rows {
            for (_, target, _) in &row {
                if !reachable[*target as usize] {
                    reachable[*target as usize] = true;
                    next.push(*target);
                }
            }
            raw[q as usize] = Some(row);
        }
        next.sort_unstable();
        frontier = next;
    }

    let mut pool = SeqPool::default();
    let rows = raw
        .into_iter()
        .map(|row| {
            row.unwrap_or_default()
                .into_iter()
                .map(|(token, target, emitted)| TokenStep { token, target, seq: pool.intern(&emitted) })
                .collect()
        })
        .collect();
    TokenLexingFst { rows, reachable, pool, eos_id: vocab.eos_id() }
}

fn replay_row(lex: &LexingFst, detok: &DetokenizingFst, q: u32, eos_id: TokenId) -> RawRow {
    let mut row = Vec::new();
    let mut emitted = Vec::new();
    walk(lex, detok, DetokenizingFst::ROOT, q, &mut emitted, &mut row);
    if let Some(e) = lex.eos(q) {
        row.push((eos_id, LexingFst::INITIAL, e.to_vec()));
    }
    row.sort_unstable_by_key(|(t, _, _)| *t);
    row
}

fn walk(lex: &LexingFst, detok: &DetokenizingFst, node: u32, q: u32, emitted: &mut Vec<TerminalId>, row: &mut RawRow) {
    let n = &detok.nodes[node as usize];
    for &(token, last) in &n.finals {
        if let Some((target, e)) = lex.step(q, last) {
            let mut seq = emitted.clone();
            seq.extend(e);
            row.push((token, target, seq));
        }
    }
    for &(b, child) in &n.children {
        if let Some((target, e)) = lex.step(q, b) {
            let pushed = e.is_some();
            emitted.extend(e);
            walk(lex, detok, child, target, emitted, row);
            if pushed {
                emitted.pop();
            }
        }
    }
}

/// Bytes that label some edge of the lexing automaton but are not available
/// as single-byte tokens.
pub fn sigma_coverage_gaps(fsa: &Fsa, vocab: &Vocabulary) -> Vec<u8> {
    let mut single = [false; 256];
    for (t, bytes) in vocab.iter() {
        if !vocab.is_eos(t) && bytes.len() == 1 {
            single[bytes[0] as usize] = true;
        }
    }
    fsa.used_bytes().into_iter().filter(|&b| !single[b as usize]).collect()
}
