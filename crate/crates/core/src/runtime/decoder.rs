use serde::{Deserialize, Serialize};

use super::artifact::CompiledArtifact;
use crate::bitset::BitSet;
use crate::error::DecodeError;
use crate::grammar::TerminalId;
use crate::lexing::LexingFst;
use crate::parser::{Pda, PrefixResult, SimStep};
use crate::token::TokenId;

/// Per-sequence decoding state: lexer state, parser top state and the parser
/// states below it (bottom first).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DecoderState {
    pub lexer_state: u32,
    pub parser_state: u32,
    pub stack: Vec<u32>,
    pub finished: bool,
}

pub fn is_complete(s: &DecoderState) -> bool {
    s.finished
}

impl CompiledArtifact {
    pub fn init_state(&self) -> DecoderState {
        DecoderState { lexer_state: LexingFst::INITIAL, parser_state: Pda::START, stack: Vec::new(), finished: false }
    }

    /// Allowed-token bit vector for `s`. All-zero for a finished state.
    pub fn compute_mask(&self, s: &DecoderState) -> BitSet {
        if s.finished {
            return BitSet::new(self.vocab.len());
        }
        let (qa, qp) = (s.lexer_state, s.parser_state);
        let mut mask = self.tables.a_table(qa, qp).clone();
        let pool = self.spanner.normalized();
        let below = s.stack.as_slice();

        // Sequences are sorted, so consecutive ones share prefixes: `path[k]`
        // is the simulation after the first k symbols of `prev`, and
        // `dead_at` records where `prev` failed.
        let mut path = vec![self.pda.sim_start(below)];
        let mut prev: &[TerminalId] = &[];
        let mut dead_at: Option<usize> = None;
        for &id in self.tables.d_table(qa, qp) {
            let alpha = pool.get(id);
            let lcp = prev.iter().zip(alpha).take_while(|(x, y)| x == y).count();
            if dead_at.is_some_and(|k| lcp > k) {
                continue;
            }
            path.truncate(lcp + 1);
            prev = alpha;
            dead_at = None;
            for (i, &a) in alpha.iter().enumerate().skip(lcp) {
                let mut st = path[i].clone();
                match self.pda.sim_step(qp, below, &mut st, a) {
                    SimStep::Shifted | SimStep::Accepted => path.push(st),
                    SimStep::Rejected | SimStep::Underflow => {
                        dead_at = Some(i);
                        break;
                    }
                }
            }
            if dead_at.is_none() {
                for &t in self.spanner.norm_tokens(qa, id) {
                    mask.insert(t as usize);
                }
            }
        }
        mask
    }

    /// Whether token `t` is allowed in `s`, without building the full mask.
    pub fn is_allowed(&self, s: &DecoderState, t: TokenId) -> bool {
        if s.finished || t as usize >= self.vocab.len() {
            return false;
        }
        let (qa, qp) = (s.lexer_state, s.parser_state);
        if self.tables.a_table(qa, qp).contains(t as usize) {
            return true;
        }
        let pool = self.spanner.normalized();
        self.tables.d_table(qa, qp).iter().any(|&id| {
            self.spanner.norm_tokens(qa, id).binary_search(&t).is_ok()
                && self.pda.accepts_prefix(qp, &s.stack, pool.get(id)) == PrefixResult::Accepted
        })
    }

    /// Consumes token `t`: steps the lexer and feeds the emitted terminals,
    /// with ignored terminals removed, to the parser.
    pub fn advance(&self, s: &DecoderState, t: TokenId) -> Result<DecoderState, DecodeError> {
        if s.finished {
            return Err(DecodeError::Finished);
        }
        if t as usize >= self.vocab.len() {
            return Err(DecodeError::UnknownToken(t));
        }
        if !self.is_allowed(s, t) {
            return Err(DecodeError::MaskedToken(t));
        }
        let (target, emitted) = self.tokens.step(s.lexer_state, t).ok_or(DecodeError::MaskedToken(t))?;
        let mut stack = s.stack.clone();
        stack.push(s.parser_state);
        let mut finished = false;
        for &a in emitted {
            if !a.is_end() && self.ignored[a.index()] {
                continue;
            }
            match self.pda.feed(&mut stack, a) {
                Some(accepted) => finished = accepted,
                None => return Err(DecodeError::MaskedToken(t)),
            }
        }
        let parser_state = stack.pop().expect("parser stack is never empty");
        Ok(DecoderState { lexer_state: target, parser_state, stack, finished })
    }

    /// Replays a token history from the initial state.
    pub fn replay(&self, tokens: &[TokenId]) -> Result<DecoderState, DecodeError> {
        let mut s = self.init_state();
        for (index, &t) in tokens.iter().enumerate() {
            s = self.advance(&s, t).map_err(|e| match e {
                DecodeError::MaskedToken(token) | DecodeError::UnknownToken(token) => {
                    DecodeError::InvalidPrompt { index, token }
                }
                other => other,
            })?;
        }
        Ok(s)
    }
}
