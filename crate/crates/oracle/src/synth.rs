//! Synthetic corpora and byte-level vocabularies for benchmarking.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gcd_core::grammar::{Grammar, TerminalId};
use gcd_core::token::Vocabulary;

use crate::glushkov::PositionLexer;

/// Random sentences of `g`, one per line. Derivations switch to the
/// shallowest alternative past `max_depth`; ignored lexemes are sprinkled
/// between terminals.
pub fn sample_corpus(g: &Grammar, sentences: usize, max_depth: usize, seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lexer = PositionLexer::new(&g.terminals);
    let height = derivation_heights(g);
    let ignored: Vec<TerminalId> =
        g.terminals.iter().enumerate().filter(|(_, t)| t.ignored).map(|(i, _)| TerminalId(i as u16)).collect();
    let mut out = Vec::new();
    for _ in 0..sentences {
        let mut terms = Vec::new();
        expand(g, &height, &g.start, 0, max_depth, &mut rng, &mut terms);
        for (i, t) in terms.iter().enumerate() {
            if i > 0 && !ignored.is_empty() && rng.gen_bool(0.5) {
                let w = ignored[rng.gen_range(0..ignored.len())];
                out.extend(lexer.sample_lexeme(w, &mut rng, 0.7));
            }
            out.extend(lexer.sample_lexeme(*t, &mut rng, 0.3));
        }
        out.push(b'\n');
    }
    out
}

/// Smallest derivation tree height per nonterminal.
fn derivation_heights(g: &Grammar) -> HashMap<&str, usize> {
    let mut h: HashMap<&str, usize> = HashMap::new();
    let mut changed = true;
    while changed {
        changed = false;
        for r in &g.rules {
            let inner = r.rhs.iter().try_fold(0usize, |m, s| {
                if g.is_terminal(s) {
                    Some(m)
                } else {
                    h.get(s.as_str()).map(|&x| m.max(x))
                }
            });
            if let Some(x) = inner {
                let e = h.entry(r.lhs.as_str()).or_insert(usize::MAX);
                if x + 1 < *e {
                    *e = x + 1;
                    changed = true;
                }
            }
        }
    }
    h
}

fn expand(
    g: &Grammar,
    height: &HashMap<&str, usize>,
    nt: &str,
    depth: usize,
    max_depth: usize,
    rng: &mut ChaCha8Rng,
    out: &mut Vec<TerminalId>,
) {
    let rules: Vec<_> = g.rules_for(nt).collect();
    let rhs_height = |rhs: &[String]| {
        rhs.iter().filter(|s| !g.is_terminal(s)).map(|s| height[s.as_str()]).max().unwrap_or(0)
    };
    let rule = if depth >= max_depth {
        rules.iter().min_by_key(|r| rhs_height(&r.rhs)).unwrap()
    } else {
        rules[rng.gen_range(0..rules.len())]
    };
    for s in &rule.rhs {
        match g.terminal_id(s) {
            Some(t) => out.push(t),
            None => expand(g, height, s, depth + 1, max_depth, rng, out),
        }
    }
}

/// Every single byte, then the substrings of `corpus` of length 2 to
/// `max_len` ranked by `count * (len - 1)` (ties by bytes), then EOS; `size`
/// entries in total when the corpus has enough distinct substrings.
pub fn synthetic_vocabulary(corpus: &[u8], size: usize, max_len: usize) -> Vocabulary {
    let mut counts: HashMap<&[u8], usize> = HashMap::new();
    for line in corpus.split(|&b| b == b'\n') {
        for i in 0..line.len() {
            for len in 2..=max_len.min(line.len() - i) {
                *counts.entry(&line[i..i + len]).or_insert(0) += 1;
            }
        }
    }
    let mut ranked: Vec<(&[u8], usize)> = counts.into_iter().map(|(s, c)| (s, c * (s.len() - 1))).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let mut tokens: Vec<Vec<u8>> = (0..=255u8).map(|b| vec![b]).collect();
    let room = size.saturating_sub(tokens.len() + 1);
    tokens.extend(ranked.into_iter().take(room).map(|(s, _)| s.to_vec()));
    Vocabulary::with_eos(tokens).expect("nonempty tokens")
}

#[cfg(test)]
mod tests {
    use super::*;
    use gcd_core::grammar::parse_grammar_spec;

    #[test]
    fn corpus_sentences_are_in_the_language() {
        let g = parse_grammar_spec("B: /ab+/ ; C: /ac+/ ; start: B C | B C start ;").unwrap();
        let corpus = sample_corpus(&g, 50, 6, 1);
        let oracle = crate::Oracle::new(&g, &Vocabulary::with_eos([b"a".to_vec()]).unwrap());
        for line in corpus.split(|&b| b == b'\n').filter(|l| !l.is_empty()) {
            assert!(oracle.accepts_sentence(line), "{}", String::from_utf8_lossy(line));
        }
        assert_eq!(corpus, sample_corpus(&g, 50, 6, 1));
    }

    #[test]
    fn vocabulary_shape() {
        let v = synthetic_vocabulary(b"abab abab\nabc", 270, 4);
        assert_eq!(v.len(), 270);
        assert_eq!(v.eos_id(), 269);
        assert_eq!(v.bytes(b'x' as u32), b"x");
        assert_eq!(v.bytes(256), b"abab");
        assert_eq!(v.bytes(257), b"ab");
        assert!(v.duplicates().is_empty());
    }
}
