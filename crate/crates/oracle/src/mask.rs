//! Brute-force token masks from byte-level completion search.

use std::cell::RefCell;
use std::collections::HashMap;

use gcd_core::grammar::{Grammar, TerminalId};
use gcd_core::lexing::{LexSym, LexerSpec, RefLexer};
use gcd_core::token::{TokenId, Vocabulary};
use gcd_core::BitSet;

use crate::earley::Earley;
use crate::glushkov::{PState, PositionLexer};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleConfig {
    /// Maximum completion length in bytes; the oracle is exact when every
    /// viable prefix extends to a sentence within this many bytes.
    pub horizon: usize,
    /// Exhaustive enumeration depth in tokens.
    pub max_prefix_tokens: usize,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { horizon: 8, max_prefix_tokens: 4, seed: 0 }
    }
}

/// Mask plus the tokens whose status could not be settled within the
/// horizon (reported clear in `mask`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleMask {
    pub mask: BitSet,
    pub undecided: Vec<TokenId>,
}

/// Lexer configuration after some input: automaton state plus the emitted
/// terminals with ignored ones removed. Determines every future outcome.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OracleKey {
    pub lex: PState,
    pub emitted: Vec<TerminalId>,
    pub ended: bool,
}

#[derive(Clone, Copy, Debug)]
enum Search {
    Found,
    /// No completion found; `cut` if some branch was stopped by the budget.
    Failed { cut: bool },
}

/// Smallest budget known to succeed and largest budget known to fail (with
/// whether that failure was cut off).
#[derive(Clone, Copy, Debug, Default)]
struct Known {
    found: Option<usize>,
    failed: Option<(usize, bool)>,
}

/// Ground-truth oracle for one (grammar, vocabulary) pair, built only from
/// the reference lexer, position automata and an Earley recognizer.
pub struct Oracle {
    lexer: PositionLexer,
    earley: Earley,
    ignored: Vec<bool>,
    alphabet: Vec<u8>,
    vocab: Vocabulary,
    viable: RefCell<HashMap<Vec<TerminalId>, bool>>,
    memo: RefCell<HashMap<(PState, Vec<TerminalId>), Known>>,
}

impl Oracle {
    pub fn new(g: &Grammar, v: &Vocabulary) -> Self {
        let lexer = PositionLexer::new(&g.terminals);
        let alphabet = lexer.alphabet();
        Oracle {
            lexer,
            earley: Earley::new(g),
            ignored: g.terminals.iter().map(|t| t.ignored).collect(),
            alphabet,
            vocab: v.clone(),
            viable: RefCell::new(HashMap::new()),
            memo: RefCell::new(HashMap::new()),
        }
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn viable(&self, ts: &[TerminalId]) -> bool {
        if let Some(&v) = self.viable.borrow().get(ts) {
            return v;
        }
        let v = self.earley.accepts(ts);
        self.viable.borrow_mut().insert(ts.to_vec(), v);
        v
    }

    fn key(&self, lx: &RefLexer<'_, PositionLexer>) -> OracleKey {
        let mut emitted: Vec<TerminalId> =
            lx.emitted().iter().copied().filter(|t| t.is_end() || !self.ignored[t.index()]).collect();
        let ended = emitted.last().is_some_and(|t| t.is_end());
        if ended {
            emitted.pop();
        }
        OracleKey { lex: lx.state().clone(), emitted, ended }
    }

    /// Lexer configuration after a token prefix, if it lexes and its
    /// emitted terminals are a viable prefix.
    pub fn key_after(&self, prefix: &[TokenId]) -> Option<OracleKey> {
        let mut lx = RefLexer::new(&self.lexer);
        for &t in prefix {
            let ok = if self.vocab.is_eos(t) {
                lx.push(LexSym::Eos)
            } else {
                lx.push_all(LexSym::bytes(self.vocab.bytes(t)))
            };
            if !ok {
                return None;
            }
        }
        let key = self.key(&lx);
        let viable = if key.ended {
            let mut full = key.emitted.clone();
            full.push(TerminalId::END);
            self.viable(&full)
        } else {
            self.viable(&key.emitted)
        };
        viable.then_some(key)
    }

    /// Whether some `u` of at most `budget` bytes makes `state·u·EOS` lex to
    /// a sentence, given the residual automaton state and emitted terminals.
    fn completes(&self, lex: &PState, emitted: &[TerminalId], budget: usize) -> Search {
        let key = (lex.clone(), emitted.to_vec());
        let known = self.memo.borrow().get(&key).copied().unwrap_or_default();
        if known.found.is_some_and(|b| b <= budget) {
            return Search::Found;
        }
        match known.failed {
            Some((_, false)) => return Search::Failed { cut: false },
            Some((b, true)) if b >= budget => return Search::Failed { cut: true },
            _ => {}
        }
        let result = self.search(lex, emitted, budget);
        let mut memo = self.memo.borrow_mut();
        let entry = memo.entry(key).or_default();
        match result {
            Search::Found => entry.found = Some(entry.found.map_or(budget, |b| b.min(budget))),
            Search::Failed { cut } => entry.failed = Some((budget, cut)),
        }
        result
    }

    /// The pending lexeme is eventually emitted as one of the terminals still
    /// live in `lex`, so at least one of them must keep the prefix viable.
    fn residual_can_fit(&self, lex: &PState, emitted: &[TerminalId]) -> bool {
        if *lex == PState::Initial {
            return true;
        }
        let mut e = emitted.to_vec();
        self.lexer.live_terminals(lex).into_iter().any(|t| {
            if self.ignored[t.index()] {
                return true;
            }
            e.push(t);
            let ok = self.viable(&e);
            e.pop();
            ok
        })
    }

    fn search(&self, lex: &PState, emitted: &[TerminalId], budget: usize) -> Search {
        let mut end: Vec<TerminalId> = emitted.to_vec();
        match lex {
            PState::Initial => end.push(TerminalId::END),
            state => match self.lexer.accepting(state) {
                Some(t) => {
                    if !self.ignored[t.index()] {
                        end.push(t);
                    }
                    end.push(TerminalId::END);
                }
                None => end.clear(),
            },
        }
        if !end.is_empty() && self.viable(&end) {
            return Search::Found;
        }
        if !self.residual_can_fit(lex, emitted) {
            return Search::Failed { cut: false };
        }
        if budget == 0 {
            return Search::Failed { cut: true };
        }
        let mut cut = false;
        for &b in &self.alphabet {
            let (next, extra) = match self.lexer.step(lex, b) {
                Some(n) => (n, None),
                None => match (self.lexer.accepting(lex), self.lexer.step(&PState::Initial, b)) {
                    (Some(t), Some(n)) => (n, Some(t)),
                    _ => continue,
                },
            };
            let grown;
            let em = match extra {
                Some(t) if !self.ignored[t.index()] => {
                    let mut e = emitted.to_vec();
                    e.push(t);
                    if !self.viable(&e) {
                        continue;
                    }
                    grown = e;
                    &grown[..]
                }
                _ => emitted,
            };
            match self.completes(&next, em, budget - 1) {
                Search::Found => return Search::Found,
                Search::Failed { cut: c } => cut |= c,
            }
        }
        Search::Failed { cut }
    }

    /// Mask over the vocabulary after `prefix`: bit `t` set iff
    /// `prefix·t` extends to a sentence with at most `horizon` more bytes.
    pub fn mask(&self, prefix: &[TokenId], horizon: usize) -> OracleMask {
        let mut mask = BitSet::new(self.vocab.len());
        let mut undecided = Vec::new();
        let Some(base) = self.key_after(prefix) else {
            return OracleMask { mask, undecided };
        };
        if base.ended {
            return OracleMask { mask, undecided };
        }
        let mut lx0 = RefLexer::new(&self.lexer);
        for &t in prefix {
            lx0.push_all(LexSym::bytes(self.vocab.bytes(t)));
        }
        for (t, bytes) in self.vocab.iter() {
            let mut lx = lx0.clone();
            if self.vocab.is_eos(t) {
                if lx.push(LexSym::Eos) {
                    let mut e = self.key(&lx).emitted;
                    e.push(TerminalId::END);
                    if self.viable(&e) {
                        mask.insert(t as usize);
                    }
                }
                continue;
            }
            if !lx.push_all(LexSym::bytes(bytes)) {
                continue;
            }
            let key = self.key(&lx);
            if !self.viable(&key.emitted) || !self.residual_can_fit(&key.lex, &key.emitted) {
                continue;
            }
            match self.completes(&key.lex, &key.emitted, horizon) {
                Search::Found => {
                    mask.insert(t as usize);
                }
                Search::Failed { cut: true } => undecided.push(t),
                Search::Failed { cut: false } => {}
            }
        }
        OracleMask { mask, undecided }
    }

    /// Sentence membership of a complete byte string.
    pub fn accepts_sentence(&self, bytes: &[u8]) -> bool {
        let mut lx = RefLexer::new(&self.lexer);
        if !lx.push_all(LexSym::bytes(bytes)) || !lx.push(LexSym::Eos) {
            return false;
        }
        let mut e = self.key(&lx).emitted;
        e.push(TerminalId::END);
        self.viable(&e)
    }
}

/// One-shot oracle mask.
pub fn oracle_mask(g: &Grammar, v: &Vocabulary, prefix: &[TokenId], cfg: &OracleConfig) -> OracleMask {
    Oracle::new(g, v).mask(prefix, cfg.horizon)
}
