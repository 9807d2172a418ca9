//! Engine-versus-oracle mask equivalence over all reachable token prefixes.

use std::collections::HashSet;
use std::fmt::Write;

use gcd_core::runtime::{CompiledArtifact, DecoderState};
use gcd_core::token::TokenId;

use crate::mask::{Oracle, OracleKey};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaskDiff {
    pub prefix: Vec<TokenId>,
    pub engine: Vec<TokenId>,
    pub oracle: Vec<TokenId>,
    pub undecided: Vec<TokenId>,
}

impl MaskDiff {
    pub fn engine_only(&self) -> Vec<TokenId> {
        self.engine.iter().copied().filter(|t| !self.oracle.contains(t)).collect()
    }

    pub fn oracle_only(&self) -> Vec<TokenId> {
        self.oracle.iter().copied().filter(|t| !self.engine.contains(t)).collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CheckReport {
    /// Distinct (engine state, oracle configuration) pairs whose masks were
    /// compared.
    pub states_checked: usize,
    /// Token prefixes visited, counting duplicates of checked states.
    pub prefixes_visited: usize,
    pub diffs: Vec<MaskDiff>,
}

impl CheckReport {
    pub fn is_equivalent(&self) -> bool {
        self.diffs.is_empty()
    }

    /// One line per differing prefix: `prefix | engine | oracle | diff`.
    pub fn table(&self) -> String {
        let ids = |v: &[TokenId]| v.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(",");
        let mut out = String::from("prefix\tengine\toracle\tdiff\n");
        for d in &self.diffs {
            let mut diff = format!("+{} -{}", ids(&d.engine_only()), ids(&d.oracle_only()));
            if !d.undecided.is_empty() {
                write!(diff, " ?{}", ids(&d.undecided)).unwrap();
            }
            writeln!(out, "[{}]\t{}\t{}\t{}", ids(&d.prefix), ids(&d.engine), ids(&d.oracle), diff).unwrap();
        }
        out
    }
}

/// Breadth-first over token prefixes of length at most `depth`, expanding
/// only tokens both sides allow. Undecided oracle bits count as diffs.
pub fn check_equivalence(a: &CompiledArtifact, oracle: &Oracle, depth: usize, horizon: usize) -> CheckReport {
    let mut report = CheckReport::default();
    let mut seen: HashSet<(DecoderState, OracleKey)> = HashSet::new();
    let mut layer: Vec<(Vec<TokenId>, DecoderState)> = vec![(Vec::new(), a.init_state())];
    for level in 0..=depth {
        let mut next = Vec::new();
        for (prefix, state) in layer {
            report.prefixes_visited += 1;
            let key = oracle.key_after(&prefix).expect("explored prefixes are oracle-viable");
            if state.finished || key.ended || !seen.insert((state.clone(), key)) {
                continue;
            }
            report.states_checked += 1;
            let engine = a.compute_mask(&state);
            let om = oracle.mask(&prefix, horizon);
            if engine != om.mask || !om.undecided.is_empty() {
                report.diffs.push(MaskDiff {
                    prefix: prefix.clone(),
                    engine: engine.iter().map(|t| t as TokenId).collect(),
                    oracle: om.mask.iter().map(|t| t as TokenId).collect(),
                    undecided: om.undecided.clone(),
                });
            }
            if level == depth {
                continue;
            }
            for t in engine.iter().filter(|&t| om.mask.contains(t)) {
                let t = t as TokenId;
                let s = a.advance(&state, t).expect("allowed token advances");
                let mut p = prefix.clone();
                p.push(t);
                next.push((p, s));
            }
        }
        layer = next;
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use gcd_core::grammar::parse_grammar_spec;
    use gcd_core::runtime::compile_artifact;
    use gcd_core::token::Vocabulary;

    #[test]
    fn bc_is_equivalent() {
        let g = parse_grammar_spec("B: /ab+/ ; C: /ac+/ ; start: B C | B C start ;").unwrap();
        let v = Vocabulary::with_eos(["a", "b", "c", "ab", "ac", "aba"].map(|s| s.as_bytes().to_vec())).unwrap();
        let a = compile_artifact(&g, &v).unwrap().0;
        let r = check_equivalence(&a, &Oracle::new(&g, &v), 4, 8);
        assert!(r.is_equivalent(), "{}", r.table());
        assert!(r.states_checked >= 5);
        assert!(r.prefixes_visited > r.states_checked);
    }
}
