//! Grammar specification: terminals defined by byte regexes plus context-free
//! production rules over them.
//!
//! ```text
//! // comment
//! B : /ab+/ ;
//! C : /ac+/ ;
//! start : B C | B C start ;
//! %ignore WS ;
//! ```
//!
//! Terminal names match `[A-Z][A-Z0-9_]*`; nonterminals are lower-case
//! identifiers. The start symbol is the nonterminal named `start`. The end
//! marker `$` is implicit and cannot be written in rules.

mod regex;
mod syntax;
mod validate;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use regex::{ByteClass, RegexAst, RegexError, MAX_REPEAT};
pub use syntax::parse_grammar_spec;
pub use validate::validate_grammar;

/// Index of a terminal in [`Grammar::terminals`]; equal to its priority.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TerminalId(pub u16);

impl TerminalId {
    /// The reserved end marker `$`.
    pub const END: TerminalId = TerminalId(u16::MAX);

    #[inline]
    pub fn is_end(self) -> bool {
        self == Self::END
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Debug for TerminalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_end() {
            f.write_str("$")
        } else {
            write!(f, "T{}", self.0)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TerminalDef {
    pub name: String,
    pub pattern: RegexAst,
    /// Declaration order; lower wins ties between equally long matches.
    pub priority: u16,
    pub ignored: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub lhs: String,
    pub rhs: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// A context-free grammar whose terminals are regex-defined.
///
/// Symbols are referenced by name; indexed views are built by the automaton
/// constructions downstream.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Grammar {
    pub terminals: Vec<TerminalDef>,
    /// Declaration order.
    pub nonterminals: Vec<String>,
    pub start: String,
    pub rules: Vec<Rule>,
    /// Source positions when parsed from text: declarations keyed by symbol
    /// name, first references keyed by `@name`.
    #[serde(skip)]
    pub positions: BTreeMap<String, Pos>,
}

impl PartialEq for Grammar {
    fn eq(&self, other: &Self) -> bool {
        self.terminals == other.terminals
            && self.nonterminals == other.nonterminals
            && self.start == other.start
            && self.rules == other.rules
    }
}

impl Eq for Grammar {}

impl Grammar {
    pub fn terminal_id(&self, name: &str) -> Option<TerminalId> {
        self.terminals.iter().position(|t| t.name == name).map(|i| TerminalId(i as u16))
    }

    pub fn terminal_name(&self, id: TerminalId) -> &str {
        if id.is_end() {
            "$"
        } else {
            &self.terminals[id.index()].name
        }
    }

    pub fn is_terminal(&self, name: &str) -> bool {
        self.terminals.iter().any(|t| t.name == name)
    }

    pub fn is_nonterminal(&self, name: &str) -> bool {
        self.nonterminals.iter().any(|n| n == name)
    }

    pub fn is_ignored(&self, id: TerminalId) -> bool {
        !id.is_end() && self.terminals[id.index()].ignored
    }

    pub fn rules_for<'a>(&'a self, lhs: &'a str) -> impl Iterator<Item = &'a Rule> + 'a {
        self.rules.iter().filter(move |r| r.lhs == lhs)
    }

    /// Formats a terminal sequence as space-separated names.
    pub fn format_seq(&self, seq: &[TerminalId]) -> String {
        seq.iter().map(|t| self.terminal_name(*t)).collect::<Vec<_>>().join(" ")
    }

    /// Pretty-printer in the concrete syntax accepted by [`parse_grammar_spec`].
    pub fn render(&self) -> String {
        use fmt::Write;
        let mut out = String::new();
        for t in &self.terminals {
            writeln!(out, "{} : /{}/ ;", t.name, t.pattern).unwrap();
        }
        for t in self.terminals.iter().filter(|t| t.ignored) {
            writeln!(out, "%ignore {} ;", t.name).unwrap();
        }
        for nt in &self.nonterminals {
            let alts: Vec<String> = self.rules_for(nt).map(|r| r.rhs.join(" ")).collect();
            writeln!(out, "{nt} : {} ;", alts.join(" | ")).unwrap();
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DiagCode {
    Syntax,
    NoTerminals,
    BadTerminalName,
    BadNonterminalName,
    DuplicateTerminal,
    DuplicateNonterminal,
    NullableTerminal,
    MissingStart,
    UndefinedSymbol,
    IgnoredInRule,
    Unproductive,
    Unreachable,
}

impl DiagCode {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagCode::Syntax => "syntax",
            DiagCode::NoTerminals => "no-terminals",
            DiagCode::BadTerminalName => "bad-terminal-name",
            DiagCode::BadNonterminalName => "bad-nonterminal-name",
            DiagCode::DuplicateTerminal => "duplicate-terminal",
            DiagCode::DuplicateNonterminal => "duplicate-nonterminal",
            DiagCode::NullableTerminal => "nullable-terminal",
            DiagCode::MissingStart => "missing-start",
            DiagCode::UndefinedSymbol => "undefined-symbol",
            DiagCode::IgnoredInRule => "ignored-in-rule",
            DiagCode::Unproductive => "unproductive",
            DiagCode::Unreachable => "unreachable",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub code: DiagCode,
    /// The offending symbol, when the diagnostic concerns one.
    pub symbol: Option<String>,
    pub message: String,
    pub pos: Option<Pos>,
}

impl Diagnostic {
    pub fn new(code: DiagCode, symbol: Option<&str>, message: impl Into<String>, pos: Option<Pos>) -> Self {
        Self { code, symbol: symbol.map(str::to_owned), message: message.into(), pos }
    }
}

/// `line:col code message`; callers prefix the file name.
impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pos = self.pos.unwrap_or(Pos { line: 0, col: 0 });
        write!(f, "{pos} {} {}", self.code.as_str(), self.message)
    }
}

pub(crate) fn is_terminal_name(name: &str) -> bool {
    let mut chars = name.chars();
    chars.next().is_some_and(|c| c.is_ascii_uppercase())
        && chars.all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '_')
}

pub(crate) fn is_nonterminal_name(name: &str) -> bool {
    let mut chars = name.chars();
    chars.next().is_some_and(|c| c.is_ascii_lowercase() || c == '_')
        && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const BC: &str = "B : /ab+/ ;\nC : /ac+/ ;\nstart : B C | B C start ;\n";

    #[test]
    fn bc_grammar_shape() {
        let g = parse_grammar_spec(BC).unwrap();
        assert_eq!(g.terminals.len(), 2);
        assert_eq!(g.nonterminals, vec!["start"]);
        assert_eq!(g.rules.len(), 2);
        assert_eq!(g.terminals[1].priority, 1);
        assert!(validate_grammar(&g).is_empty());
    }

    #[test]
    fn render_roundtrip() {
        let src = "// json-ish\nWS : /[ \\t]+/ ;\nNUM : /-?[0-9]+(\\.[0-9]+)?/ ;\nCOMMA : /,/ ;\n%ignore WS ;\n\
                   start : list ;\nlist : NUM | list COMMA NUM | ;\n";
        let g = parse_grammar_spec(src).unwrap();
        let again = parse_grammar_spec(&g.render()).unwrap();
        assert_eq!(g, again);
        assert_eq!(again.render(), g.render());
    }

    #[test]
    fn priority_is_declaration_order() {
        let g = parse_grammar_spec("PLUS : /\\+/ ;\nINC : /\\+\\+/ ;\nstart : PLUS | INC ;").unwrap();
        let prios: Vec<u16> = g.terminals.iter().map(|t| t.priority).collect();
        assert_eq!(prios, vec![0, 1]);
    }
}
