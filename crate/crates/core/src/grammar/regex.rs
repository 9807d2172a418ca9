//! Byte-level regular expressions used for terminal definitions.
//!
//! Supported syntax: literals, escapes `\n \t \r \\ \/ \d \w \s \xHH` (and any
//! escaped punctuation), `[...]` / `[^...]` byte classes with ranges, `.` (any
//! byte except newline), `|`, `()`, and the postfix operators `* + ? {m} {m,n} {m,}`.
//! Non-ASCII characters in literals expand to their UTF-8 byte sequence.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

/// A non-empty set of byte values.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ByteClass([u64; 4]);

impl ByteClass {
    pub const fn empty() -> Self {
        Self([0; 4])
    }

    pub fn full() -> Self {
        Self([u64::MAX; 4])
    }

    pub fn single(b: u8) -> Self {
        let mut c = Self::empty();
        c.insert(b);
        c
    }

    pub fn range(lo: u8, hi: u8) -> Self {
        let mut c = Self::empty();
        for b in lo..=hi {
            c.insert(b);
        }
        c
    }

    #[inline]
    pub fn insert(&mut self, b: u8) {
        self.0[(b / 64) as usize] |= 1 << (b % 64);
    }

    #[inline]
    pub fn contains(&self, b: u8) -> bool {
        self.0[(b / 64) as usize] & (1 << (b % 64)) != 0
    }

    pub fn union(mut self, other: &ByteClass) -> Self {
        for i in 0..4 {
            self.0[i] |= other.0[i];
        }
        self
    }

    pub fn complement(mut self) -> Self {
        for w in &mut self.0 {
            *w = !*w;
        }
        self
    }

    pub fn is_empty(&self) -> bool {
        self.0 == [0; 4]
    }

    pub fn bytes(&self) -> impl Iterator<Item = u8> + '_ {
        (0u16..256).map(|b| b as u8).filter(|&b| self.contains(b))
    }

    /// Maximal runs of consecutive member bytes.
    pub fn ranges(&self) -> Vec<(u8, u8)> {
        let mut out = Vec::new();
        let mut start: Option<u8> = None;
        for b in 0u16..=256 {
            let inside = b < 256 && self.contains(b as u8);
            match (inside, start) {
                (true, None) => start = Some(b as u8),
                (false, Some(s)) => {
                    out.push((s, (b - 1) as u8));
                    start = None;
                }
                _ => {}
            }
        }
        out
    }
}

impl fmt::Debug for ByteClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_char('[')?;
        for (lo, hi) in self.ranges() {
            write_class_byte(f, lo)?;
            if hi != lo {
                f.write_char('-')?;
                write_class_byte(f, hi)?;
            }
        }
        f.write_char(']')
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegexAst {
    Byte(u8),
    Class(ByteClass),
    /// Any byte except `\n`.
    AnyByte,
    Concat(Vec<RegexAst>),
    Alternation(Vec<RegexAst>),
    Star(Box<RegexAst>),
    Plus(Box<RegexAst>),
    Optional(Box<RegexAst>),
    Repeat { inner: Box<RegexAst>, min: u32, max: u32 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegexError {
    /// Byte offset into the pattern.
    pub offset: usize,
    pub message: String,
}

impl fmt::Display for RegexError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (at pattern offset {})", self.message, self.offset)
    }
}

/// Upper bound on `{m,n}` counts; the expansion is materialized in the NFA.
pub const MAX_REPEAT: u32 = 256;

impl RegexAst {
    pub fn parse(pattern: &str) -> Result<RegexAst, RegexError> {
        let mut p = Parser { src: pattern.as_bytes(), pos: 0 };
        let ast = p.alternation()?;
        if p.pos < p.src.len() {
            return Err(p.err("unbalanced ')'"));
        }
        Ok(ast)
    }

    fn concat(items: Vec<RegexAst>) -> RegexAst {
        let mut flat = Vec::with_capacity(items.len());
        for item in items {
            match item {
                RegexAst::Concat(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        if flat.len() == 1 {
            flat.pop().unwrap()
        } else {
            RegexAst::Concat(flat)
        }
    }

    fn alternation(items: Vec<RegexAst>) -> RegexAst {
        let mut flat = Vec::with_capacity(items.len());
        for item in items {
            match item {
                RegexAst::Alternation(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        if flat.len() == 1 {
            flat.pop().unwrap()
        } else {
            RegexAst::Alternation(flat)
        }
    }

    /// Whether the empty string is in the language.
    pub fn is_nullable(&self) -> bool {
        match self {
            RegexAst::Byte(_) | RegexAst::Class(_) | RegexAst::AnyByte => false,
            RegexAst::Concat(items) => items.iter().all(RegexAst::is_nullable),
            RegexAst::Alternation(items) => items.iter().any(RegexAst::is_nullable),
            RegexAst::Star(_) | RegexAst::Optional(_) => true,
            RegexAst::Plus(inner) => inner.is_nullable(),
            RegexAst::Repeat { inner, min, .. } => *min == 0 || inner.is_nullable(),
        }
    }

    /// Reference matcher over the AST, used by tests as an oracle for the
    /// automaton constructions. Exponential in the worst case.
    pub fn matches(&self, input: &[u8]) -> bool {
        self.ends(input, 0).contains(&input.len())
    }

    /// All end offsets reachable by matching `self` starting at `start`.
    fn ends(&self, input: &[u8], start: usize) -> Vec<usize> {
        let single = |ok: bool| if ok { vec![start + 1] } else { vec![] };
        let mut out = match self {
            RegexAst::Byte(b) => single(input.get(start) == Some(b)),
            RegexAst::Class(c) => single(input.get(start).is_some_and(|&x| c.contains(x))),
            RegexAst::AnyByte => single(input.get(start).is_some_and(|&x| x != b'\n')),
            RegexAst::Concat(items) => {
                let mut cur = vec![start];
                for item in items {
                    let mut next: Vec<usize> = cur.iter().flat_map(|&s| item.ends(input, s)).collect();
                    next.sort_unstable();
                    next.dedup();
                    cur = next;
                }
                cur
            }
            RegexAst::Alternation(items) => items.iter().flat_map(|i| i.ends(input, start)).collect(),
            RegexAst::Star(inner) => Self::repeat_ends(inner, input, start, 0, u32::MAX),
            RegexAst::Plus(inner) => Self::repeat_ends(inner, input, start, 1, u32::MAX),
            RegexAst::Optional(inner) => Self::repeat_ends(inner, input, start, 0, 1),
            RegexAst::Repeat { inner, min, max } => Self::repeat_ends(inner, input, start, *min, *max),
        };
        out.sort_unstable();
        out.dedup();
        out
    }

    fn repeat_ends(inner: &RegexAst, input: &[u8], start: usize, min: u32, max: u32) -> Vec<usize> {
        let mut seen: Vec<usize> = Vec::new();
        if min == 0 {
            seen.push(start);
        }
        let mut frontier = vec![start];
        let mut count = 0u32;
        while !frontier.is_empty() && count < max {
            count += 1;
            let mut next: Vec<usize> = frontier.iter().flat_map(|&s| inner.ends(input, s)).collect();
            next.sort_unstable();
            next.dedup();
            if count >= min {
                next.retain(|e| !seen.contains(e));
                seen.extend(&next);
            }
            frontier = next;
        }
        seen
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, message: impl Into<String>) -> RegexError {
        RegexError { offset: self.pos, message: message.into() }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn alternation(&mut self) -> Result<RegexAst, RegexError> {
        let mut branches = vec![self.concatenation()?];
        while self.peek() == Some(b'|') {
            self.pos += 1;
            branches.push(self.concatenation()?);
        }
        Ok(RegexAst::alternation(branches))
    }

    fn concatenation(&mut self) -> Result<RegexAst, RegexError> {
        let mut items = Vec::new();
        while let Some(c) = self.peek() {
            if c == b'|' || c == b')' {
                break;
            }
            let atom = self.atom()?;
            items.push(self.postfix(atom)?);
        }
        if items.is_empty() {
            return Err(self.err("empty alternative"));
        }
        Ok(RegexAst::concat(items))
    }

    fn postfix(&mut self, mut atom: RegexAst) -> Result<RegexAst, RegexError> {
        loop {
            match self.peek() {
                Some(b'*') => atom = RegexAst::Star(Box::new(atom)),
                Some(b'+') => atom = RegexAst::Plus(Box::new(atom)),
                Some(b'?') => atom = RegexAst::Optional(Box::new(atom)),
                Some(b'{') => {
                    atom = self.bounded(atom)?;
                    continue;
                }
                _ => return Ok(atom),
            }
            self.pos += 1;
        }
    }

    fn number(&mut self) -> Result<u32, RegexError> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected a repetition count"));
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .parse::<u32>()
            .ok()
            .filter(|n| *n <= MAX_REPEAT)
            .ok_or_else(|| RegexError { offset: start, message: format!("repetition count exceeds {MAX_REPEAT}") })
    }

    fn bounded(&mut self, atom: RegexAst) -> Result<RegexAst, RegexError> {
        self.pos += 1; // '{'
        let min = self.number()?;
        let max = match self.peek() {
            Some(b'}') => Some(min),
            Some(b',') => {
                self.pos += 1;
                if self.peek() == Some(b'}') {
                    None
                } else {
                    Some(self.number()?)
                }
            }
            _ => return Err(self.err("malformed repetition")),
        };
        if self.peek() != Some(b'}') {
            return Err(self.err("expected '}'"));
        }
        self.pos += 1;
        match max {
            Some(max) if max < min => Err(self.err(format!("repetition {{{min},{max}}} has min > max"))),
            Some(max) => Ok(RegexAst::Repeat { inner: Box::new(atom), min, max }),
            None => {
                let star = RegexAst::Star(Box::new(atom.clone()));
                Ok(RegexAst::concat(vec![RegexAst::Repeat { inner: Box::new(atom), min, max: min }, star]))
            }
        }
    }

    fn atom(&mut self) -> Result<RegexAst, RegexError> {
        let c = self.peek().ok_or_else(|| self.err("unexpected end of pattern"))?;
        match c {
            b'(' => {
                self.pos += 1;
                let inner = self.alternation()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            b'[' => self.class(),
            b'.' => {
                self.pos += 1;
                Ok(RegexAst::AnyByte)
            }
            b'\\' => {
                self.pos += 1;
                Ok(match self.escape()? {
                    Escaped::Byte(b) => RegexAst::Byte(b),
                    Escaped::Class(cls) => RegexAst::Class(cls),
                })
            }
            b'*' | b'+' | b'?' | b'{' => Err(self.err(format!("nothing to repeat before '{}'", c as char))),
            b'^' | b'$' => Err(self.err("anchors are not supported")),
            _ => {
                // One UTF-8 character; multi-byte characters become a byte sequence.
                let len = utf8_len(c);
                let end = (self.pos + len).min(self.src.len());
                let bytes = &self.src[self.pos..end];
                self.pos = end;
                if bytes.len() == 1 {
                    Ok(RegexAst::Byte(bytes[0]))
                } else {
                    Ok(RegexAst::Concat(bytes.iter().map(|&b| RegexAst::Byte(b)).collect()))
                }
            }
        }
    }

    fn escape(&mut self) -> Result<Escaped, RegexError> {
        let c = self.peek().ok_or_else(|| self.err("dangling escape"))?;
        self.pos += 1;
        Ok(match c {
            b'n' => Escaped::Byte(b'\n'),
            b't' => Escaped::Byte(b'\t'),
            b'r' => Escaped::Byte(b'\r'),
            b'd' => Escaped::Class(ByteClass::range(b'0', b'9')),
            b'w' => Escaped::Class(
                ByteClass::range(b'a', b'z')
                    .union(&ByteClass::range(b'A', b'Z'))
                    .union(&ByteClass::range(b'0', b'9'))
                    .union(&ByteClass::single(b'_')),
            ),
            b's' => Escaped::Class(
                [b' ', b'\t', b'\n', b'\r', 0x0b, 0x0c]
                    .iter()
                    .fold(ByteClass::empty(), |acc, &b| acc.union(&ByteClass::single(b))),
            ),
            b'x' => {
                let hex = self
                    .src
                    .get(self.pos..self.pos + 2)
                    .and_then(|h| std::str::from_utf8(h).ok())
                    .and_then(|h| u8::from_str_radix(h, 16).ok())
                    .ok_or_else(|| self.err("expected two hex digits after \\x"))?;
                self.pos += 2;
                Escaped::Byte(hex)
            }
            c if c.is_ascii_punctuation() || c == b' ' => Escaped::Byte(c),
            c => {
                self.pos -= 1;
                return Err(self.err(format!("unknown escape '\\{}'", c as char)));
            }
        })
    }

    fn class(&mut self) -> Result<RegexAst, RegexError> {
        let open = self.pos;
        self.pos += 1; // '['
        let negated = self.peek() == Some(b'^');
        if negated {
            self.pos += 1;
        }
        let mut set = ByteClass::empty();
        let mut first = true;
        loop {
            let c = self.peek().ok_or_else(|| RegexError { offset: open, message: "unterminated class".into() })?;
            if c == b']' && !first {
                self.pos += 1;
                break;
            }
            first = false;
            let lo = match self.class_item()? {
                Escaped::Class(cls) => {
                    set = set.union(&cls);
                    continue;
                }
                Escaped::Byte(b) => b,
            };
            if self.peek() == Some(b'-') && self.src.get(self.pos + 1).is_some_and(|&n| n != b']') {
                self.pos += 1;
                let hi = match self.class_item()? {
                    Escaped::Byte(b) => b,
                    Escaped::Class(_) => return Err(self.err("class shorthand cannot end a range")),
                };
                if hi < lo {
                    return Err(self.err("reversed range in class"));
                }
                set = set.union(&ByteClass::range(lo, hi));
            } else {
                set.insert(lo);
            }
        }
        if negated {
            set = set.complement();
        }
        if set.is_empty() {
            return Err(RegexError { offset: open, message: "empty byte class".into() });
        }
        Ok(RegexAst::Class(set))
    }

    fn class_item(&mut self) -> Result<Escaped, RegexError> {
        let c = self.peek().ok_or_else(|| self.err("unterminated class"))?;
        if c == b'\\' {
            self.pos += 1;
            return self.escape();
        }
        if !c.is_ascii() {
            return Err(self.err("non-ASCII characters are not allowed inside a class; use \\xHH"));
        }
        self.pos += 1;
        Ok(Escaped::Byte(c))
    }
}

enum Escaped {
    Byte(u8),
    Class(ByteClass),
}

fn utf8_len(first: u8) -> usize {
    match first {
        0xF0..=0xF7 => 4,
        0xE0..=0xEF => 3,
        0xC0..=0xDF => 2,
        _ => 1,
    }
}

const META: &[u8] = b"\\/.|()[]{}*+?^$";

fn write_literal_byte(f: &mut impl fmt::Write, b: u8) -> fmt::Result {
    match b {
        b'\n' => f.write_str("\\n"),
        b'\t' => f.write_str("\\t"),
        b'\r' => f.write_str("\\r"),
        _ if META.contains(&b) => write!(f, "\\{}", b as char),
        0x20..=0x7e => f.write_char(b as char),
        _ => write!(f, "\\x{b:02x}"),
    }
}

fn write_class_byte(f: &mut impl fmt::Write, b: u8) -> fmt::Result {
    match b {
        b'\n' => f.write_str("\\n"),
        b'\t' => f.write_str("\\t"),
        b'\r' => f.write_str("\\r"),
        b'\\' | b']' | b'[' | b'^' | b'-' | b'/' => write!(f, "\\{}", b as char),
        0x20..=0x7e => f.write_char(b as char),
        _ => write!(f, "\\x{b:02x}"),
    }
}

impl RegexAst {
    fn write_atom(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegexAst::Concat(_) | RegexAst::Alternation(_) => write!(f, "({self})"),
            _ => write!(f, "{self}"),
        }
    }
}

/// Renders the pattern in the same syntax [`RegexAst::parse`] accepts.
impl fmt::Display for RegexAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegexAst::Byte(b) => write_literal_byte(f, *b),
            RegexAst::Class(c) => write!(f, "{c:?}"),
            RegexAst::AnyByte => f.write_char('.'),
            RegexAst::Concat(items) => {
                for item in items {
                    match item {
                        RegexAst::Alternation(_) => write!(f, "({item})")?,
                        _ => write!(f, "{item}")?,
                    }
                }
                Ok(())
            }
            RegexAst::Alternation(items) => {
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_char('|')?;
                    }
                    write!(f, "{item}")?;
                }
                Ok(())
            }
            RegexAst::Star(inner) => {
                inner.write_atom(f)?;
                f.write_char('*')
            }
            RegexAst::Plus(inner) => {
                inner.write_atom(f)?;
                f.write_char('+')
            }
            RegexAst::Optional(inner) => {
                inner.write_atom(f)?;
                f.write_char('?')
            }
            RegexAst::Repeat { inner, min, max } => {
                inner.write_atom(f)?;
                if min == max {
                    write!(f, "{{{min}}}")
                } else {
                    write!(f, "{{{min},{max}}}")
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn re(s: &str) -> RegexAst {
        RegexAst::parse(s).unwrap()
    }

    #[test]
    fn parses_bc_terminals() {
        assert_eq!(
            re("ab+"),
            RegexAst::Concat(vec![RegexAst::Byte(b'a'), RegexAst::Plus(Box::new(RegexAst::Byte(b'b')))])
        );
        assert!(re("ab+").matches(b"abb"));
        assert!(!re("ab+").matches(b"a"));
        assert!(!re("ab+").matches(b"ba"));
        assert!(re("ac+").matches(b"ac"));
        assert!(!re("ac+").matches(b"ab"));
    }

    #[test]
    fn bounded_repeat() {
        let r = re("[0-9]{2,3}");
        assert!(r.matches(b"12"));
        assert!(r.matches(b"123"));
        assert!(!r.matches(b"1"));
        assert!(!r.matches(b"1234"));
        let open = re("a{2,}");
        assert!(!open.matches(b"a"));
        assert!(open.matches(b"aaaaa"));
    }

    #[test]
    fn classes_and_escapes() {
        let r = re(r"[^a-c\n]");
        assert!(r.matches(b"d"));
        assert!(!r.matches(b"b"));
        assert!(!r.matches(b"\n"));
        assert!(r.matches(&[0xff]));
        assert!(re(r"\+\+").matches(b"++"));
        assert!(re(r"\/\/").matches(b"//"));
        assert!(re(r"\d\w\s").matches(b"1_ "));
        assert!(re(r"\x41").matches(b"A"));
        assert!(re(".").matches(b"x"));
        assert!(!re(".").matches(b"\n"));
        assert!(re("[]a]").matches(b"]"));
        assert!(re("[a-]").matches(b"-"));
    }

    #[test]
    fn utf8_literal_expands_to_bytes() {
        let r = re("é+");
        assert!(r.matches("éé".as_bytes()));
        assert!(!r.matches(&[0xc3]));
    }

    #[test]
    fn errors() {
        for bad in ["", "a|", "(a", "a)", "*a", "[]", "[^\\x00-\\xff]", "a{3,2}", "[z-a]", "\\q", "^a", "a{999}"] {
            assert!(RegexAst::parse(bad).is_err(), "{bad:?} should fail");
        }
    }

    #[test]
    fn nullable() {
        assert!(re("a*").is_nullable());
        assert!(re("a?b*").is_nullable());
        assert!(re("a{0,2}").is_nullable());
        assert!(!re("ab+").is_nullable());
        assert!(!re("a|b*c").is_nullable());
    }

    fn arb_regex() -> impl Strategy<Value = RegexAst> {
        let leaf = prop_oneof![
            (0u8..=255).prop_map(RegexAst::Byte),
            proptest::collection::vec(any::<u8>(), 1..5).prop_map(|bs| {
                RegexAst::Class(bs.iter().fold(ByteClass::empty(), |a, &b| a.union(&ByteClass::single(b))))
            }),
            Just(RegexAst::AnyByte),
        ];
        leaf.prop_recursive(4, 24, 4, |inner| {
            prop_oneof![
                proptest::collection::vec(inner.clone(), 2..4).prop_map(RegexAst::concat),
                proptest::collection::vec(inner.clone(), 2..4).prop_map(RegexAst::alternation),
                inner.clone().prop_map(|r| RegexAst::Star(Box::new(r))),
                inner.clone().prop_map(|r| RegexAst::Plus(Box::new(r))),
                inner.clone().prop_map(|r| RegexAst::Optional(Box::new(r))),
                (inner, 0u32..3, 0u32..3).prop_map(|(r, a, b)| RegexAst::Repeat {
                    inner: Box::new(r),
                    min: a.min(b),
                    max: a.max(b)
                }),
            ]
        })
    }

    proptest! {
        #[test]
        fn render_parse_roundtrip(r in arb_regex()) {
            let text = r.to_string();
            let back = RegexAst::parse(&text).unwrap();
            prop_assert_eq!(back, r, "rendered as {}", text);
        }
    }
}
