use crate::grammar::{ByteClass, RegexAst, TerminalId};

#[derive(Clone, Debug, Default)]
pub struct NfaState {
    pub eps: Vec<u32>,
    pub edges: Vec<(ByteClass, u32)>,
    pub accept: Option<TerminalId>,
}

/// Thompson-style nondeterministic automaton over bytes with ε-moves.
#[derive(Clone, Debug)]
pub struct Nfa {
    pub states: Vec<NfaState>,
    pub start: u32,
}

/// Compiles one pattern into an automaton whose single accepting state is
/// labeled with terminal 0.
pub fn compile_regex(pattern: &RegexAst) -> Nfa {
    let mut b = Builder { states: vec![NfaState::default()] };
    let end = b.build(pattern, 0);
    b.states[end as usize].accept = Some(TerminalId(0));
    Nfa { states: b.states, start: 0 }
}

struct Builder {
    states: Vec<NfaState>,
}

impl Builder {
    fn add(&mut self) -> u32 {
        self.states.push(NfaState::default());
        (self.states.len() - 1) as u32
    }

    fn eps(&mut self, from: u32, to: u32) {
        self.states[from as usize].eps.push(to);
    }

    fn edge(&mut self, from: u32, class: ByteClass) -> u32 {
        let to = self.add();
        self.states[from as usize].edges.push((class, to));
        to
    }

    /// Appends the fragment for `ast` starting at `from`; returns its exit state.
    fn build(&mut self, ast: &RegexAst, from: u32) -> u32 {
        match ast {
            RegexAst::Byte(b) => self.edge(from, ByteClass::single(*b)),
            RegexAst::Class(c) => self.edge(from, *c),
            RegexAst::AnyByte => self.edge(from, ByteClass::single(b'\n').complement()),
            RegexAst::Concat(items) => items.iter().fold(from, |cur, item| self.build(item, cur)),
            RegexAst::Alternation(items) => {
                let join = self.add();
                for item in items {
                    let s = self.add();
                    self.eps(from, s);
                    let e = self.build(item, s);
                    self.eps(e, join);
                }
                join
            }
            RegexAst::Star(inner) => {
                let s = self.add();
                self.eps(from, s);
                let e = self.build(inner, s);
                self.eps(e, s);
                let out = self.add();
                self.eps(s, out);
                out
            }
            RegexAst::Plus(inner) => {
                let s = self.add();
                self.eps(from, s);
                let e = self.build(inner, s);
                self.eps(e, s);
                let out = self.add();
                self.eps(e, out);
                out
            }
            RegexAst::Optional(inner) => {
                let s = self.add();
                self.eps(from, s);
                let e = self.build(inner, s);
                let out = self.add();
                self.eps(from, out);
                self.eps(e, out);
                out
            }
            RegexAst::Repeat { inner, min, max } => {
                let mut cur = from;
                for _ in 0..*min {
                    let s = self.add();
                    self.eps(cur, s);
                    cur = self.build(inner, s);
                }
                let out = self.add();
                self.eps(cur, out);
                for _ in *min..*max {
                    let s = self.add();
                    self.eps(cur, s);
                    cur = self.build(inner, s);
                    self.eps(cur, out);
                }
                out
            }
        }
    }
}

impl Nfa {
    /// Disjoint union of per-terminal automata; the accepting state of part
    /// `i` is labeled with terminal `i`.
    pub fn union(parts: &[Nfa]) -> Nfa {
        let mut states = vec![NfaState::default()];
        for (i, part) in parts.iter().enumerate() {
            let base = states.len() as u32;
            states[0].eps.push(base + part.start);
            for st in &part.states {
                states.push(NfaState {
                    eps: st.eps.iter().map(|t| t + base).collect(),
                    edges: st.edges.iter().map(|(c, t)| (*c, t + base)).collect(),
                    accept: st.accept.map(|_| TerminalId(i as u16)),
                });
            }
        }
        Nfa { states, start: 0 }
    }

    /// Sorted ε-closure of a set of states.
    pub fn closure(&self, seeds: impl IntoIterator<Item = u32>) -> Vec<u32> {
        let mut seen = vec![false; self.states.len()];
        let mut stack: Vec<u32> = Vec::new();
        for s in seeds {
            if !seen[s as usize] {
                seen[s as usize] = true;
                stack.push(s);
            }
        }
        let mut out = Vec::new();
        while let Some(s) = stack.pop() {
            out.push(s);
            for &t in &self.states[s as usize].eps {
                if !seen[t as usize] {
                    seen[t as usize] = true;
                    stack.push(t);
                }
            }
        }
        out.sort_unstable();
        out
    }

    pub fn step_set(&self, set: &[u32], byte: u8) -> Vec<u32> {
        let targets = set.iter().flat_map(|&s| {
            self.states[s as usize].edges.iter().filter(move |(c, _)| c.contains(byte)).map(|(_, t)| *t)
        });
        self.closure(targets.collect::<Vec<_>>())
    }

    pub fn accepts(&self, input: &[u8]) -> bool {
        let mut set = self.closure([self.start]);
        for &b in input {
            set = self.step_set(&set, b);
            if set.is_empty() {
                return false;
            }
        }
        set.iter().any(|&s| self.states[s as usize].accept.is_some())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nfa(p: &str) -> Nfa {
        compile_regex(&RegexAst::parse(p).unwrap())
    }

    #[test]
    fn bc_patterns() {
        let b = nfa("ab+");
        assert!(b.accepts(b"ab") && b.accepts(b"abb"));
        assert!(!b.accepts(b"a") && !b.accepts(b"ba"));
        let c = nfa("ac+");
        assert!(c.accepts(b"ac") && c.accepts(b"acc"));
        assert!(!c.accepts(b"ab"));
    }

    #[test]
    fn bounded_repeat() {
        let r = nfa("[0-9]{2,3}");
        assert!(r.accepts(b"12") && r.accepts(b"123"));
        assert!(!r.accepts(b"1") && !r.accepts(b"1234"));
        let z = nfa("a{0,2}b");
        assert!(z.accepts(b"b") && z.accepts(b"aab") && !z.accepts(b"aaab"));
    }

    #[test]
    fn nested_stars_and_alternation() {
        let r = nfa("(a|bc)*d?");
        for ok in [&b""[..], b"a", b"bca", b"abcd", b"d"] {
            assert!(r.accepts(ok), "{ok:?}");
        }
        for bad in [&b"b"[..], b"dd", b"ad a"] {
            assert!(!r.accepts(bad), "{bad:?}");
        }
        let any = nfa(".");
        assert!(any.accepts(b"\x00") && any.accepts(b"\xff") && !any.accepts(b"\n"));
    }
}
