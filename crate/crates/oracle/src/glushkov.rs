//! Position (Glushkov) automata for the terminal patterns, used as the
//! oracle's lexer specification.

use gcd_core::grammar::{ByteClass, RegexAst, TerminalDef, TerminalId};
use gcd_core::lexing::LexerSpec;
use rand::Rng;

/// Lexer state: before any byte, or the set of pattern positions the
/// residual may end at (sorted, nonempty).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PState {
    Initial,
    At(Vec<u32>),
}

#[derive(Clone, Debug)]
pub struct PositionLexer {
    class: Vec<ByteClass>,
    owner: Vec<u16>,
    is_last: Vec<bool>,
    follow: Vec<Vec<u32>>,
    first: Vec<u32>,
    first_of: Vec<Vec<u32>>,
    n_terms: usize,
}

struct Frag {
    nullable: bool,
    first: Vec<u32>,
    last: Vec<u32>,
}

impl PositionLexer {
    pub fn new(terminals: &[TerminalDef]) -> Self {
        let mut lx = PositionLexer {
            class: Vec::new(),
            owner: Vec::new(),
            is_last: Vec::new(),
            follow: Vec::new(),
            first: Vec::new(),
            first_of: Vec::new(),
            n_terms: terminals.len(),
        };
        for (i, t) in terminals.iter().enumerate() {
            let f = lx.build(&t.pattern, i as u16);
            for &p in &f.last {
                lx.is_last[p as usize] = true;
            }
            lx.first.extend(&f.first);
            lx.first_of.push(f.first);
        }
        lx.first.sort_unstable();
        lx
    }

    fn leaf(&mut self, c: ByteClass, owner: u16) -> Frag {
        let p = self.class.len() as u32;
        self.class.push(c);
        self.owner.push(owner);
        self.is_last.push(false);
        self.follow.push(Vec::new());
        Frag { nullable: false, first: vec![p], last: vec![p] }
    }

    fn link(&mut self, from: &[u32], to: &[u32]) {
        for &p in from {
            for &q in to {
                if !self.follow[p as usize].contains(&q) {
                    self.follow[p as usize].push(q);
                }
            }
        }
    }

    fn seq(&mut self, a: Frag, b: Frag) -> Frag {
        self.link(&a.last, &b.first);
        let mut first = a.first;
        if a.nullable {
            first.extend(&b.first);
        }
        let mut last = b.last;
        if b.nullable {
            last.extend(&a.last);
        }
        Frag { nullable: a.nullable && b.nullable, first, last }
    }

    fn build(&mut self, ast: &RegexAst, owner: u16) -> Frag {
        match ast {
            RegexAst::Byte(b) => self.leaf(ByteClass::single(*b), owner),
            RegexAst::Class(c) => self.leaf(*c, owner),
            RegexAst::AnyByte => self.leaf(ByteClass::single(b'\n').complement(), owner),
            RegexAst::Concat(items) => {
                let mut acc = Frag { nullable: true, first: vec![], last: vec![] };
                for item in items {
                    let f = self.build(item, owner);
                    acc = self.seq(acc, f);
                }
                acc
            }
            RegexAst::Alternation(items) => {
                let mut acc = Frag { nullable: false, first: vec![], last: vec![] };
                for item in items {
                    let f = self.build(item, owner);
                    acc.nullable |= f.nullable;
                    acc.first.extend(f.first);
                    acc.last.extend(f.last);
                }
                acc
            }
            RegexAst::Star(inner) | RegexAst::Plus(inner) => {
                let f = self.build(inner, owner);
                self.link(&f.last, &f.first);
                let nullable = matches!(ast, RegexAst::Star(_)) || f.nullable;
                Frag { nullable, ..f }
            }
            RegexAst::Optional(inner) => {
                let f = self.build(inner, owner);
                Frag { nullable: true, ..f }
            }
            RegexAst::Repeat { inner, min, max } => {
                let mut acc = Frag { nullable: true, first: vec![], last: vec![] };
                for i in 0..*max {
                    let mut f = self.build(inner, owner);
                    if i >= *min {
                        f.nullable = true;
                    }
                    acc = self.seq(acc, f);
                }
                acc
            }
        }
    }

    pub fn num_terminals(&self) -> usize {
        self.n_terms
    }

    /// Every byte some pattern position accepts.
    pub fn alphabet(&self) -> Vec<u8> {
        (0..=255u8).filter(|&b| self.class.iter().any(|c| c.contains(b))).collect()
    }

    fn successors(&self, from: &[u32], b: u8) -> Vec<u32> {
        let mut out: Vec<u32> = from.iter().copied().filter(|&p| self.class[p as usize].contains(b)).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Shortest number of further bytes completing a lexeme of `t` from
    /// `s`, if any.
    pub fn shortest_completion(&self, s: &PState, t: TerminalId) -> Option<usize> {
        let owned = |ps: &[u32]| ps.iter().copied().filter(|&p| self.owner[p as usize] == t.0).collect::<Vec<_>>();
        let start: Vec<u32> = match s {
            PState::Initial => {
                let mut frontier = self.first_of[t.index()].clone();
                let mut seen = frontier.clone();
                let mut d = 1;
                loop {
                    if frontier.iter().any(|&p| self.is_last[p as usize]) {
                        return Some(d);
                    }
                    let next: Vec<u32> = frontier
                        .iter()
                        .flat_map(|&p| self.follow[p as usize].iter().copied())
                        .filter(|q| !seen.contains(q))
                        .collect();
                    if next.is_empty() {
                        return None;
                    }
                    seen.extend(&next);
                    frontier = next;
                    d += 1;
                }
            }
            PState::At(ps) => owned(ps),
        };
        let mut frontier = start;
        let mut seen = frontier.clone();
        let mut d = 0;
        while !frontier.is_empty() {
            if frontier.iter().any(|&p| self.is_last[p as usize]) {
                return Some(d);
            }
            let next: Vec<u32> = frontier
                .iter()
                .flat_map(|&p| self.follow[p as usize].iter().copied())
                .filter(|q| !seen.contains(q))
                .collect();
            seen.extend(&next);
            frontier = next;
            d += 1;
        }
        None
    }

    /// `s` restricted to the positions of terminal `t`.
    pub fn restrict(&self, s: &PState, t: TerminalId) -> PState {
        match s {
            PState::Initial => PState::Initial,
            PState::At(ps) => PState::At(ps.iter().copied().filter(|&p| self.owner[p as usize] == t.0).collect()),
        }
    }

    /// Step within the pattern of `t` alone.
    pub fn step_within(&self, s: &PState, b: u8, t: TerminalId) -> Option<PState> {
        let cand: Vec<u32> = match s {
            PState::Initial => self.first_of[t.index()].clone(),
            PState::At(ps) => ps.iter().flat_map(|&p| self.follow[p as usize].iter().copied()).collect(),
        };
        let next = self.successors(&cand, b);
        (!next.is_empty()).then_some(PState::At(next))
    }

    pub fn accepts_as(&self, s: &PState, t: TerminalId) -> bool {
        match s {
            PState::Initial => false,
            PState::At(ps) => ps.iter().any(|&p| self.owner[p as usize] == t.0 && self.is_last[p as usize]),
        }
    }

    /// Largest, over all pattern positions, of the fewest further bytes
    /// that end a lexeme.
    pub fn max_pending_completion(&self) -> usize {
        let n = self.class.len();
        let mut dist: Vec<usize> = (0..n).map(|p| if self.is_last[p] { 0 } else { usize::MAX }).collect();
        let mut changed = true;
        while changed {
            changed = false;
            for p in 0..n {
                for &q in &self.follow[p] {
                    let d = dist[q as usize].saturating_add(1);
                    if d < dist[p] {
                        dist[p] = d;
                        changed = true;
                    }
                }
            }
        }
        dist.into_iter().filter(|&d| d != usize::MAX).max().unwrap_or(0)
    }

    /// Terminals whose patterns still have a lexeme extending the residual.
    pub fn live_terminals(&self, s: &PState) -> Vec<TerminalId> {
        let mut out: Vec<TerminalId> = match s {
            PState::Initial => (0..self.n_terms as u16).map(TerminalId).collect(),
            PState::At(ps) => ps.iter().map(|&p| TerminalId(self.owner[p as usize])).collect(),
        };
        out.sort_unstable();
        out.dedup();
        out
    }
}

impl PositionLexer {
    /// A random lexeme of terminal `t`, preferring printable ASCII bytes and
    /// stopping at each accepting position with probability `stop`.
    pub fn sample_lexeme(&self, t: TerminalId, rng: &mut impl Rng, stop: f64) -> Vec<u8> {
        let mut out = Vec::new();
        let mut cand = self.first_of[t.index()].clone();
        loop {
            let p = cand[rng.gen_range(0..cand.len())] as usize;
            let bytes: Vec<u8> = (0..=255u8).filter(|&b| self.class[p].contains(b)).collect();
            let printable: Vec<u8> = bytes.iter().copied().filter(|b| (0x20..0x7f).contains(b)).collect();
            let pool = if printable.is_empty() { &bytes } else { &printable };
            out.push(pool[rng.gen_range(0..pool.len())]);
            cand = self.follow[p].clone();
            if cand.is_empty() || (self.is_last[p] && rng.gen_bool(stop)) {
                return out;
            }
        }
    }
}

impl LexerSpec for PositionLexer {
    type State = PState;

    fn start(&self) -> PState {
        PState::Initial
    }

    fn step(&self, s: &PState, b: u8) -> Option<PState> {
        let next = match s {
            PState::Initial => self.successors(&self.first, b),
            PState::At(ps) => {
                let cand: Vec<u32> = ps.iter().flat_map(|&p| self.follow[p as usize].iter().copied()).collect();
                self.successors(&cand, b)
            }
        };
        (!next.is_empty()).then_some(PState::At(next))
    }

    fn accepting(&self, s: &PState) -> Option<TerminalId> {
        match s {
            PState::Initial => None,
            PState::At(ps) => {
                ps.iter().filter(|&&p| self.is_last[p as usize]).map(|&p| TerminalId(self.owner[p as usize])).min()
            }
        }
    }
}
