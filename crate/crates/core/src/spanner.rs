//! Producible terminals, realizable terminal sequences and the inverse token
//! spanner table.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::bitset::BitSet;
use crate::grammar::TerminalId;
use crate::lexing::LexingFst;
use crate::seq::{SeqId, SeqPool};
use crate::token::{escape_bytes, TokenId, TokenLexingFst, Vocabulary};

/// For every lexer state, the sorted set of terminals that can be emitted
/// first along some path from it. `EOS` edges contribute their final
/// terminal (never `$`).
pub fn producible_terminals(lex: &LexingFst) -> Vec<Vec<TerminalId>> {
    let n = lex.num_states();
    let nt = lex.fsa().num_terminals();
    let mut prod: Vec<BitSet> = vec![BitSet::new(nt); n];
    let mut succ: Vec<Vec<u32>> = vec![Vec::new(); n];
    for q in 0..n as u32 {
        for b in 0..=255u8 {
            match lex.step(q, b) {
                Some((_, Some(t))) => {
                    prod[q as usize].insert(t.index());
                }
                Some((target, None)) => succ[q as usize].push(target),
                None => {}
            }
        }
        if let Some(t) = lex.eos(q).and_then(|e| e.last) {
            prod[q as usize].insert(t.index());
        }
        succ[q as usize].sort_unstable();
        succ[q as usize].dedup();
    }
    loop {
        let mut changed = false;
        for q in 0..n {
            for &s in &succ[q] {
                if s as usize != q && !prod[s as usize].is_subset(&prod[q]) {
                    let add = prod[s as usize].clone();
                    prod[q].union_with(&add);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    prod.iter().map(|s| s.iter().map(|i| TerminalId(i as u16)).collect()).collect()
}

/// Realizable terminal sequences and the inverse token spanner table.
///
/// Raw sequences keep ignored terminals; each raw sequence also has a
/// normalized form with ignored terminals removed, which is what the parser
/// sees. Tokens are recorded per lexer state under both keys.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpannerTables {
    raw: SeqPool,
    norm: SeqPool,
    raw_norm: Vec<SeqId>,
    prod: Vec<Vec<TerminalId>>,
    t_inv: Vec<Vec<(SeqId, Vec<TokenId>)>>,
    t_inv_norm: Vec<Vec<(SeqId, Vec<TokenId>)>>,
    vocab_len: usize,
}

/// For every transition `q -t:T1..Tk-> q'`: if the emission ends in `$` it is
/// recorded as-is; otherwise `T1..Tk T` is recorded for every `T` producible
/// at `q'`. Ids are assigned in (state, token, terminal) order.
pub fn build_spanner_tables(
    tlf: &TokenLexingFst,
    prod: Vec<Vec<TerminalId>>,
    ignored: &[bool],
    vocab_len: usize,
) -> SpannerTables {
    let n = tlf.num_states();
    let mut raw = SeqPool::default();
    let mut norm = SeqPool::default();
    let mut raw_norm: Vec<SeqId> = Vec::new();
    let mut by_pair: HashMap<(SeqId, Option<TerminalId>), SeqId> = HashMap::new();
    let mut t_inv = vec![Vec::new(); n];
    let mut t_inv_norm = vec![Vec::new(); n];
    let emissions = tlf.pool();

    for q in tlf.reachable_states() {
        let mut cells: HashMap<SeqId, Vec<TokenId>> = HashMap::new();
        for step in tlf.row(q) {
            let e = emissions.get(step.seq);
            let ends_with_end = e.last().is_some_and(|t| t.is_end());
            let extensions: Vec<Option<TerminalId>> =
                if ends_with_end { vec![None] } else { prod[step.target as usize].iter().map(|&t| Some(t)).collect() };
            for ext in extensions {
                let id = *by_pair.entry((step.seq, ext)).or_insert_with(|| {
                    let mut seq = e.to_vec();
                    seq.extend(ext);
                    let id = raw.intern(&seq);
                    if id as usize == raw_norm.len() {
                        let stripped: Vec<TerminalId> =
                            seq.iter().copied().filter(|t| t.is_end() || !ignored[t.index()]).collect();
                        raw_norm.push(norm.intern(&stripped));
                    }
                    id
                });
                cells.entry(id).or_default().push(step.token);
            }
        }
        let mut row: Vec<(SeqId, Vec<TokenId>)> = cells.into_iter().collect();
        row.sort_unstable_by_key(|(id, _)| *id);
        let mut norm_cells: HashMap<SeqId, Vec<TokenId>> = HashMap::new();
        for (id, tokens) in &row {
            norm_cells.entry(raw_norm[*id as usize]).or_default().extend(tokens);
        }
        let mut norm_row: Vec<(SeqId, Vec<TokenId>)> = norm_cells
            .into_iter()
            .map(|(id, mut tokens)| {
                tokens.sort_unstable();
                tokens.dedup();
                (id, tokens)
            })
            .collect();
        norm_row.sort_unstable_by_key(|(id, _)| *id);
        t_inv[q as usize] = row;
        t_inv_norm[q as usize] = norm_row;
    }
    SpannerTables { raw, norm, raw_norm, prod, t_inv, t_inv_norm, vocab_len }
}

impl SpannerTables {
    pub fn num_states(&self) -> usize {
        self.t_inv.len()
    }

    pub fn vocab_len(&self) -> usize {
        self.vocab_len
    }

    /// Realizable sequences (with ignored terminals).
    pub fn realizable(&self) -> &SeqPool {
        &self.raw
    }

    /// Distinct normalized forms of realizable sequences.
    pub fn normalized(&self) -> &SeqPool {
        &self.norm
    }

    pub fn norm_of(&self, raw: SeqId) -> SeqId {
        self.raw_norm[raw as usize]
    }

    pub fn prod(&self, q: u32) -> &[TerminalId] {
        &self.prod[q as usize]
    }

    /// Raw-sequence cells of lexer state `q`, sorted by sequence id.
    pub fn row(&self, q: u32) -> &[(SeqId, Vec<TokenId>)] {
        &self.t_inv[q as usize]
    }

    /// Normalized-sequence cells of lexer state `q`, sorted by sequence id.
    pub fn norm_row(&self, q: u32) -> &[(SeqId, Vec<TokenId>)] {
        &self.t_inv_norm[q as usize]
    }

    /// Tokens generating normalized sequence `norm` from `q`.
    pub fn norm_tokens(&self, q: u32, norm: SeqId) -> &[TokenId] {
        let row = &self.t_inv_norm[q as usize];
        row.binary_search_by_key(&norm, |(id, _)| *id).map_or(&[], |i| &row[i].1)
    }

    /// Forward view: every realizable raw sequence token `t` yields from `q`.
    pub fn cell(&self, q: u32, t: TokenId) -> Vec<SeqId> {
        self.t_inv[q as usize].iter().filter(|(_, toks)| toks.binary_search(&t).is_ok()).map(|(id, _)| *id).collect()
    }
}

/// Tokens that lead from lexer state `q` to the terminal sequence `alpha`, as a
/// bit vector; empty when no token does.
pub fn lookup_tokens(s: &SpannerTables, q: u32, alpha: SeqId) -> BitSet {
    let row = &s.t_inv[q as usize];
    let tokens = row.binary_search_by_key(&alpha, |(id, _)| *id).map_or(&[][..], |i| &row[i].1);
    BitSet::from_indices(s.vocab_len, tokens.iter().map(|&t| t as usize))
}

/// CSV with columns `state,token,sequences`, one row per (reachable state,
/// token). Sequences are space-separated terminal names joined by `;`,
/// sorted; an empty field is the empty set.
pub fn spanner_csv(
    s: &SpannerTables,
    tlf: &TokenLexingFst,
    vocab: &Vocabulary,
    names: &dyn Fn(TerminalId) -> String,
    include_eos: bool,
) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["state", "token", "sequences"]).expect("in-memory write");
    for q in tlf.reachable_states() {
        let mut cells: Vec<Vec<String>> = vec![Vec::new(); vocab.len()];
        for (id, tokens) in s.row(q) {
            let text = s.raw.get(*id).iter().map(|t| names(*t)).collect::<Vec<_>>().join(" ");
            for &t in tokens {
                cells[t as usize].push(text.clone());
            }
        }
        for (t, mut seqs) in cells.into_iter().enumerate() {
            let t = t as TokenId;
            if vocab.is_eos(t) && !include_eos {
                continue;
            }
            seqs.sort();
            let token = if vocab.is_eos(t) { "EOS".to_owned() } else { escape_bytes(vocab.bytes(t)) };
            w.write_record([format!("q{q}"), token, seqs.join(";")]).expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}
