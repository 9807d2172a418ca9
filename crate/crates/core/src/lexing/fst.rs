use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::dfa::{byte_runs, fmt_run, Fsa};
use crate::grammar::TerminalId;

/// Character-level lexing transducer derived from a lexing automaton.
///
/// Every automaton edge is kept with an empty output. From an accepting state
/// `q` labeled `T`, a byte `c` with no edge at `q` but an edge at the initial
/// state emits `T` and continues from there. `EOS` from an accepting state
/// emits `T $`, and from the initial state emits `$`; both return to the
/// initial state.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexingFst {
    fsa: Fsa,
}

/// Output of an `EOS` transition: an optional final terminal, then `$`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EosEmission {
    pub last: Option<TerminalId>,
}

impl EosEmission {
    pub fn to_vec(self) -> Vec<TerminalId> {
        self.last.into_iter().chain([TerminalId::END]).collect()
    }
}

pub fn build_lexing_fst(a: Fsa) -> LexingFst {
    LexingFst { fsa: a }
}

impl LexingFst {
    pub const INITIAL: u32 = Fsa::INITIAL;

    pub fn fsa(&self) -> &Fsa {
        &self.fsa
    }

    pub fn num_states(&self) -> usize {
        self.fsa.num_states()
    }

    /// The transition on byte `b` from `q`: target state and emitted terminal.
    #[inline]
    pub fn step(&self, q: u32, b: u8) -> Option<(u32, Option<TerminalId>)> {
        if let Some(t) = self.fsa.next(q, b) {
            return Some((t, None));
        }
        let label = self.fsa.label(q)?;
        self.fsa.next(Self::INITIAL, b).map(|t| (t, Some(label)))
    }

    /// The `EOS` transition from `q`; its target is always the initial state.
    #[inline]
    pub fn eos(&self, q: u32) -> Option<EosEmission> {
        match self.fsa.label(q) {
            Some(t) => Some(EosEmission { last: Some(t) }),
            None if q == Self::INITIAL => Some(EosEmission { last: None }),
            None => None,
        }
    }

    /// Replays bytes from `q`, appending emitted terminals to `out`.
    pub fn run(&self, mut q: u32, bytes: &[u8], out: &mut Vec<TerminalId>) -> Option<u32> {
        for &b in bytes {
            let (t, e) = self.step(q, b)?;
            out.extend(e);
            q = t;
        }
        Some(q)
    }

    /// Text digraph with `src -input:output-> dst` edges; `ε` marks an empty
    /// output.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let name = |t: Option<TerminalId>| t.map_or("ε".to_owned(), |t| self.fsa.terminal_name(t).to_owned());
        for q in 0..self.num_states() as u32 {
            for (lo, hi, (t, e)) in byte_runs(|b| self.step(q, b)) {
                writeln!(out, "q{q} -{}:{}-> q{t}", fmt_run(lo, hi), name(e)).unwrap();
            }
            if let Some(e) = self.eos(q) {
                let text: String = e.to_vec().iter().map(|t| self.fsa.terminal_name(*t)).collect();
                writeln!(out, "q{q} -EOS:{text}-> q{}", Self::INITIAL).unwrap();
            }
        }
        out
    }
}
