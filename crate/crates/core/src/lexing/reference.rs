use super::dfa::Fsa;
use crate::grammar::TerminalId;

/// A lexer specification as seen by the reference lexer: an automaton state
/// tracks the unlexed residual, `step` is defined iff the extended residual
/// is still a prefix of some terminal's language, and `accepting` names the
/// highest-priority terminal whose language contains the residual.
pub trait LexerSpec {
    type State: Clone;
    fn start(&self) -> Self::State;
    fn step(&self, state: &Self::State, byte: u8) -> Option<Self::State>;
    fn accepting(&self, state: &Self::State) -> Option<TerminalId>;
}

impl LexerSpec for Fsa {
    type State = u32;

    fn start(&self) -> u32 {
        Fsa::INITIAL
    }

    fn step(&self, state: &u32, byte: u8) -> Option<u32> {
        self.next(*state, byte)
    }

    fn accepting(&self, state: &u32) -> Option<TerminalId> {
        self.label(*state)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LexSym {
    Byte(u8),
    Eos,
}

impl LexSym {
    pub fn bytes(bytes: &[u8]) -> impl Iterator<Item = LexSym> + '_ {
        bytes.iter().map(|&b| LexSym::Byte(b))
    }
}

/// Incremental 1-lookahead maximal-munch lexer, one input symbol at a time.
///
/// For an input `w c` with `Lex(w) = (T1..Tk, r)`:
/// 1. `c = EOS` and `r` is a complete lexeme of `Tj`: emit `Tj $`, residual empty;
///    with an empty residual, `EOS` emits `$` alone.
/// 2. `r c` is a prefix of some terminal: residual becomes `r c`.
/// 3. `r` is a complete lexeme of `Tj`, `r c` is not a prefix of any terminal,
///    and `c` is: emit `Tj`, residual becomes `c`.
/// 4. Otherwise the result is undefined and stays undefined.
#[derive(Clone, Debug)]
pub struct RefLexer<'a, S: LexerSpec> {
    spec: &'a S,
    state: S::State,
    emitted: Vec<TerminalId>,
    residual: Vec<u8>,
    failed: bool,
}

impl<'a, S: LexerSpec> RefLexer<'a, S> {
    pub fn new(spec: &'a S) -> Self {
        Self { spec, state: spec.start(), emitted: Vec::new(), residual: Vec::new(), failed: false }
    }

    /// Feeds one symbol; returns `false` once the result is undefined.
    pub fn push(&mut self, sym: LexSym) -> bool {
        if self.failed {
            return false;
        }
        match sym {
            LexSym::Eos => {
                if self.residual.is_empty() {
                    self.emitted.push(TerminalId::END);
                } else if let Some(t) = self.spec.accepting(&self.state) {
                    self.emitted.extend([t, TerminalId::END]);
                    self.residual.clear();
                    self.state = self.spec.start();
                } else {
                    self.failed = true;
                }
            }
            LexSym::Byte(c) => {
                if let Some(next) = self.spec.step(&self.state, c) {
                    self.residual.push(c);
                    self.state = next;
                } else if let (Some(t), Some(fresh)) =
                    (self.spec.accepting(&self.state), self.spec.step(&self.spec.start(), c))
                {
                    self.emitted.push(t);
                    self.residual.clear();
                    self.residual.push(c);
                    self.state = fresh;
                } else {
                    self.failed = true;
                }
            }
        }
        !self.failed
    }

    pub fn push_all(&mut self, syms: impl IntoIterator<Item = LexSym>) -> bool {
        for s in syms {
            if !self.push(s) {
                return false;
            }
        }
        true
    }

    pub fn is_defined(&self) -> bool {
        !self.failed
    }

    pub fn emitted(&self) -> &[TerminalId] {
        &self.emitted
    }

    pub fn residual(&self) -> &[u8] {
        &self.residual
    }

    pub fn state(&self) -> &S::State {
        &self.state
    }

    pub fn result(&self) -> Option<(Vec<TerminalId>, Vec<u8>)> {
        (!self.failed).then(|| (self.emitted.clone(), self.residual.clone()))
    }
}

/// `Lex(input)`: the emitted terminals and the unlexed residual, or `None`
/// when undefined.
pub fn reference_lex<S: LexerSpec>(spec: &S, input: &[LexSym]) -> Option<(Vec<TerminalId>, Vec<u8>)> {
    let mut lexer = RefLexer::new(spec);
    lexer.push_all(input.iter().copied());
    lexer.result()
}
