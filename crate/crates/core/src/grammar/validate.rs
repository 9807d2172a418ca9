use std::collections::{BTreeSet, HashSet};

use super::{is_nonterminal_name, is_terminal_name, DiagCode, Diagnostic, Grammar};

/// Checks every grammar invariant; returns one diagnostic per violation, in a
/// stable order (declaration order within each check).
pub fn validate_grammar(g: &Grammar) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let decl = |name: &str| g.positions.get(name).copied();
    let first_use = |name: &str| g.positions.get(&format!("@{name}")).copied();

    if g.terminals.is_empty() {
        out.push(Diagnostic::new(DiagCode::NoTerminals, None, "grammar declares no terminals", None));
    }

    let mut seen = HashSet::new();
    for t in &g.terminals {
        if !is_terminal_name(&t.name) {
            out.push(Diagnostic::new(
                DiagCode::BadTerminalName,
                Some(&t.name),
                format!("terminal name `{}` must match [A-Z][A-Z0-9_]*", t.name),
                decl(&t.name),
            ));
        }
        if !seen.insert(t.name.as_str()) {
            out.push(Diagnostic::new(
                DiagCode::DuplicateTerminal,
                Some(&t.name),
                format!("terminal `{}` is declared more than once", t.name),
                decl(&t.name),
            ));
        }
        if t.pattern.is_nullable() {
            out.push(Diagnostic::new(
                DiagCode::NullableTerminal,
                Some(&t.name),
                format!("pattern of terminal `{}` matches the empty string", t.name),
                decl(&t.name),
            ));
        }
    }
    if g.terminals.len() >= u16::MAX as usize {
        out.push(Diagnostic::new(DiagCode::NoTerminals, None, "too many terminals", None));
    }

    let mut seen_nt = HashSet::new();
    for nt in &g.nonterminals {
        if !is_nonterminal_name(nt) {
            out.push(Diagnostic::new(
                DiagCode::BadNonterminalName,
                Some(nt),
                format!("rule name `{nt}` must be lower-case"),
                decl(nt),
            ));
        }
        if !seen_nt.insert(nt.as_str()) || seen.contains(nt.as_str()) {
            out.push(Diagnostic::new(
                DiagCode::DuplicateNonterminal,
                Some(nt),
                format!("`{nt}` is declared more than once"),
                decl(nt),
            ));
        }
    }

    let has_start = g.is_nonterminal(&g.start);
    if !has_start {
        out.push(Diagnostic::new(
            DiagCode::MissingStart,
            Some(&g.start),
            format!("no rule defines the start symbol `{}`", g.start),
            None,
        ));
    }

    let mut undefined = BTreeSet::new();
    let mut ignored_used = BTreeSet::new();
    for rule in &g.rules {
        if !g.is_nonterminal(&rule.lhs) {
            undefined.insert(rule.lhs.as_str());
        }
        for sym in &rule.rhs {
            if let Some(t) = g.terminals.iter().find(|t| &t.name == sym) {
                if t.ignored {
                    ignored_used.insert(sym.as_str());
                }
            } else if !g.is_nonterminal(sym) {
                undefined.insert(sym.as_str());
            }
        }
    }
    let mut undefined: Vec<&str> = undefined.into_iter().collect();
    undefined.sort_by_key(|s| first_use(s).map(|p| (p.line, p.col)));
    for sym in undefined {
        out.push(Diagnostic::new(
            DiagCode::UndefinedSymbol,
            Some(sym),
            format!("symbol `{sym}` is not declared"),
            first_use(sym),
        ));
    }
    for sym in ignored_used {
        out.push(Diagnostic::new(
            DiagCode::IgnoredInRule,
            Some(sym),
            format!("ignored terminal `{sym}` cannot appear in a rule"),
            first_use(sym),
        ));
    }

    // Productivity fixpoint; undeclared symbols count as productive so that
    // they are reported once, as undefined.
    let mut productive: HashSet<&str> = HashSet::new();
    loop {
        let mut changed = false;
        for rule in &g.rules {
            if productive.contains(rule.lhs.as_str()) {
                continue;
            }
            if rule.rhs.iter().all(|s| !g.is_nonterminal(s) || productive.contains(s.as_str())) {
                productive.insert(&rule.lhs);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut reported = HashSet::new();
    for nt in &g.nonterminals {
        if !productive.contains(nt.as_str()) && reported.insert(nt.as_str()) {
            out.push(Diagnostic::new(
                DiagCode::Unproductive,
                Some(nt),
                format!("nonterminal `{nt}` derives no terminal string"),
                decl(nt),
            ));
        }
    }

    if has_start {
        let mut reachable: HashSet<&str> = HashSet::from([g.start.as_str()]);
        let mut work = vec![g.start.as_str()];
        while let Some(nt) = work.pop() {
            for rule in g.rules_for(nt) {
                for sym in &rule.rhs {
                    if g.is_nonterminal(sym) && reachable.insert(sym) {
                        work.push(sym);
                    }
                }
            }
        }
        let mut reported = HashSet::new();
        for nt in &g.nonterminals {
            if !reachable.contains(nt.as_str()) && reported.insert(nt.as_str()) {
                out.push(Diagnostic::new(
                    DiagCode::Unreachable,
                    Some(nt),
                    format!("nonterminal `{nt}` is not reachable from `{}`", g.start),
                    decl(nt),
                ));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::syntax::parse_unvalidated;
    use super::*;

    fn diags(src: &str) -> Vec<(&'static str, Option<String>)> {
        let g = parse_unvalidated(src).unwrap();
        validate_grammar(&g).into_iter().map(|d| (d.code.as_str(), d.symbol)).collect()
    }

    #[test]
    fn bc_is_clean() {
        assert!(diags("B: /ab+/ ; C: /ac+/ ; start: B C | B C start ;").is_empty());
    }

    #[test]
    fn undefined_symbol_named() {
        assert_eq!(diags("B: /b/ ; start: B D ;"), vec![("undefined-symbol", Some("D".to_owned()))]);
    }

    #[test]
    fn unproductive_start() {
        assert_eq!(diags("A: /a/ ; start: start A ;"), vec![("unproductive", Some("start".to_owned()))]);
    }

    #[test]
    fn unreachable_and_multiple() {
        let d = diags("A: /a/ ; start: A ; orphan: A ; loop: loop ;");
        assert_eq!(
            d,
            vec![
                ("unproductive", Some("loop".to_owned())),
                ("unreachable", Some("orphan".to_owned())),
                ("unreachable", Some("loop".to_owned())),
            ]
        );
    }

    #[test]
    fn duplicate_nonterminal() {
        assert_eq!(diags("A: /a/ ; start: A ; start: A A ;"), vec![("duplicate-nonterminal", Some("start".to_owned()))]);
    }

    #[test]
    fn positions_in_diagnostics() {
        let g = parse_unvalidated("A: /a/ ;\nstart: A\n   Zed ;").unwrap();
        let d = validate_grammar(&g);
        assert_eq!(d[0].to_string(), "3:4 undefined-symbol symbol `Zed` is not declared");
    }
}
