use super::{
    is_nonterminal_name, is_terminal_name, validate_grammar, DiagCode, Diagnostic, Grammar, Pos, RegexAst, Rule,
    TerminalDef,
};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Regex { text: String, body_offset: usize },
    Colon,
    Bar,
    Semi,
    Ignore,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Regex { .. } => "regex literal".into(),
            Tok::Colon => "`:`".into(),
            Tok::Bar => "`|`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Ignore => "`%ignore`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

fn syntax(src: &str, offset: usize, message: impl Into<String>) -> Diagnostic {
    Diagnostic::new(DiagCode::Syntax, None, message, Some(pos_of(src, offset)))
}

/// 1-based line and column (in characters) of a byte offset.
pub(crate) fn pos_of(src: &str, offset: usize) -> Pos {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() as u32 + 1;
    let line_start = before.rfind('\n').map_or(0, |i| i + 1);
    let col = before[line_start..].chars().count() as u32 + 1;
    Pos { line, col }
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self { src, bytes: src.as_bytes(), pos: 0 }
    }

    fn skip_trivia(&mut self) {
        loop {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.bytes[self.pos..].starts_with(b"//") {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                return;
            }
        }
    }

    /// Returns the next token and its starting byte offset.
    fn next(&mut self) -> Result<(Tok, usize), Diagnostic> {
        self.skip_trivia();
        let start = self.pos;
        let Some(&c) = self.bytes.get(self.pos) else {
            return Ok((Tok::Eof, start));
        };
        let tok = match c {
            b':' => {
                self.pos += 1;
                Tok::Colon
            }
            b'|' => {
                self.pos += 1;
                Tok::Bar
            }
            b';' => {
                self.pos += 1;
                Tok::Semi
            }
            b'/' => self.regex()?,
            b'%' => {
                self.pos += 1;
                let word = self.ident_text();
                if word != "ignore" {
                    return Err(syntax(self.src, start, format!("unknown directive `%{word}`")));
                }
                Tok::Ignore
            }
            b'$' => return Err(syntax(self.src, start, "the end marker `$` is implicit and cannot be written")),
            c if c.is_ascii_alphabetic() || c == b'_' => Tok::Ident(self.ident_text()),
            _ => {
                let ch = self.src[start..].chars().next().unwrap_or('?');
                return Err(syntax(self.src, start, format!("unexpected character `{ch}`")));
            }
        };
        Ok((tok, start))
    }

    fn ident_text(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.bytes.len() && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_') {
            self.pos += 1;
        }
        self.src[start..self.pos].to_owned()
    }

    fn regex(&mut self) -> Result<Tok, Diagnostic> {
        let open = self.pos;
        self.pos += 1;
        let body_offset = self.pos;
        let mut in_class = false;
        loop {
            match self.bytes.get(self.pos) {
                None | Some(b'\n') => return Err(syntax(self.src, open, "unterminated regex literal")),
                Some(b'\\') => self.pos += 2,
                Some(b'[') if !in_class => {
                    in_class = true;
                    self.pos += 1;
                }
                Some(b']') if in_class => {
                    in_class = false;
                    self.pos += 1;
                }
                Some(b'/') if !in_class => break,
                Some(_) => self.pos += 1,
            }
        }
        let text = self.src[body_offset..self.pos].to_owned();
        self.pos += 1;
        Ok(Tok::Regex { text, body_offset })
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    at: usize,
}

impl<'a> Parser<'a> {
    fn bump(&mut self) -> Result<(Tok, usize), Diagnostic> {
        let (next, at) = self.lexer.next()?;
        let prev = std::mem::replace(&mut self.tok, next);
        let prev_at = std::mem::replace(&mut self.at, at);
        Ok((prev, prev_at))
    }

    fn expect(&mut self, want: Tok) -> Result<(), Diagnostic> {
        if self.tok == want {
            self.bump()?;
            Ok(())
        } else {
            Err(syntax(self.lexer.src, self.at, format!("expected {}, found {}", want.describe(), self.tok.describe())))
        }
    }

    fn ident(&mut self) -> Result<(String, usize), Diagnostic> {
        match self.bump()? {
            (Tok::Ident(s), at) => Ok((s, at)),
            (other, at) => Err(syntax(self.lexer.src, at, format!("expected identifier, found {}", other.describe()))),
        }
    }
}

/// Parses grammar source text and validates it.
///
/// Syntax errors stop at the first offending token; semantic problems are all
/// reported together with stable diagnostic codes.
pub fn parse_grammar_spec(text: &str) -> Result<Grammar> {
    let g = parse_unvalidated(text).map_err(|d| Error::Grammar(vec![d]))?;
    let diags = validate_grammar(&g);
    if diags.is_empty() {
        Ok(g)
    } else {
        Err(Error::Grammar(diags))
    }
}

pub(crate) fn parse_unvalidated(text: &str) -> Result<Grammar, Diagnostic> {
    let mut lexer = Lexer::new(text);
    let (tok, at) = lexer.next()?;
    let mut p = Parser { lexer, tok, at };
    let mut g = Grammar { start: "start".to_owned(), ..Grammar::default() };
    let mut ignores: Vec<(String, usize)> = Vec::new();
    let mut extra = Vec::new();

    loop {
        match p.tok.clone() {
            Tok::Eof => break,
            Tok::Ignore => {
                p.bump()?;
                let (name, at) = p.ident()?;
                p.expect(Tok::Semi)?;
                ignores.push((name, at));
            }
            Tok::Ident(_) => {
                let (name, name_at) = p.ident()?;
                let pos = pos_of(text, name_at);
                p.expect(Tok::Colon)?;
                if let Tok::Regex { text: body, body_offset } = p.tok.clone() {
                    p.bump()?;
                    p.expect(Tok::Semi)?;
                    if !is_terminal_name(&name) {
                        extra.push(Diagnostic::new(
                            DiagCode::BadTerminalName,
                            Some(&name),
                            format!("terminal name `{name}` must match [A-Z][A-Z0-9_]*"),
                            Some(pos),
                        ));
                    }
                    let pattern = RegexAst::parse(&body).map_err(|e| {
                        syntax(text, body_offset + e.offset, format!("in pattern of `{name}`: {}", e.message))
                    })?;
                    let priority = g.terminals.len() as u16;
                    g.positions.entry(name.clone()).or_insert(pos);
                    g.terminals.push(TerminalDef { name, pattern, priority, ignored: false });
                } else {
                    if !is_nonterminal_name(&name) {
                        extra.push(Diagnostic::new(
                            DiagCode::BadNonterminalName,
                            Some(&name),
                            format!("rule name `{name}` must be lower-case"),
                            Some(pos),
                        ));
                    }
                    let mut alts = vec![Vec::new()];
                    loop {
                        match p.tok.clone() {
                            Tok::Ident(_) => {
                                let (sym, at) = p.ident()?;
                                g.positions.entry(format!("@{sym}")).or_insert(pos_of(text, at));
                                alts.last_mut().unwrap().push(sym);
                            }
                            Tok::Bar => {
                                p.bump()?;
                                alts.push(Vec::new());
                            }
                            Tok::Semi => {
                                p.bump()?;
                                break;
                            }
                            other => {
                                return Err(syntax(
                                    text,
                                    p.at,
                                    format!("expected symbol, `|` or `;`, found {}", other.describe()),
                                ))
                            }
                        }
                    }
                    g.positions.entry(name.clone()).or_insert(pos);
                    g.nonterminals.push(name.clone());
                    g.rules.extend(alts.into_iter().map(|rhs| Rule { lhs: name.clone(), rhs }));
                }
            }
            other => {
                return Err(syntax(text, p.at, format!("expected a declaration, found {}", other.describe())));
            }
        }
    }

    for (name, at) in ignores {
        match g.terminals.iter_mut().find(|t| t.name == name) {
            Some(t) => t.ignored = true,
            None => {
                return Err(Diagnostic::new(
                    DiagCode::UndefinedSymbol,
                    Some(&name),
                    format!("`%ignore` names undeclared terminal `{name}`"),
                    Some(pos_of(text, at)),
                ))
            }
        }
    }
    if let Some(d) = extra.into_iter().next() {
        return Err(d);
    }
    Ok(g)
}
