//! Seeded random (grammar, vocabulary) instances with completions provably
//! within the oracle horizon.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gcd_core::grammar::{parse_grammar_spec, Grammar, TerminalId};
use gcd_core::parser::build_lalr_pda;
use gcd_core::token::Vocabulary;

use crate::glushkov::{PState, PositionLexer};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceSize {
    pub alphabet: Vec<u8>,
    pub max_terminals: usize,
    pub max_nonterminals: usize,
    pub max_rules: usize,
    pub max_token_len: usize,
    pub horizon: usize,
}

impl Default for InstanceSize {
    fn default() -> Self {
        Self {
            alphabet: b"abcd".to_vec(),
            max_terminals: 4,
            max_nonterminals: 5,
            max_rules: 10,
            max_token_len: 3,
            horizon: 8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Instance {
    pub seed: u64,
    pub source: String,
    pub grammar: Grammar,
    pub vocab: Vocabulary,
    /// Upper bound on the bytes needed to complete any viable prefix.
    pub completion_bound: usize,
}

/// All byte strings over `alphabet` of length 1 to `max_len`, shortest
/// first, followed by EOS.
pub fn full_vocabulary(alphabet: &[u8], max_len: usize) -> Vocabulary {
    let mut tokens: Vec<Vec<u8>> = Vec::new();
    let mut layer: Vec<Vec<u8>> = vec![Vec::new()];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|p| {
                alphabet.iter().map(move |&b| {
                    let mut s = p.clone();
                    s.push(b);
                    s
                })
            })
            .collect();
        tokens.extend(layer.iter().cloned());
    }
    Vocabulary::with_eos(tokens).expect("nonempty tokens")
}

/// Deterministic per seed; rejection-samples until the grammar validates,
/// is LALR(1), has pairwise disjoint terminal languages and a completion
/// bound within the horizon.
pub fn random_instance(seed: u64, size: &InstanceSize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let source = candidate(&mut rng, size);
        let Ok(grammar) = parse_grammar_spec(&source) else { continue };
        if !nontrivial(&grammar) || build_lalr_pda(&grammar).is_err() {
            continue;
        }
        let lexer = PositionLexer::new(&grammar.terminals);
        if !pairwise_disjoint(&lexer) {
            continue;
        }
        let Some(bound) = completion_bound(&grammar, &lexer) else { continue };
        if bound > size.horizon {
            continue;
        }
        let vocab = full_vocabulary(&size.alphabet, size.max_token_len);
        return Instance { seed, source, grammar, vocab, completion_bound: bound };
    }
}

fn candidate(rng: &mut ChaCha8Rng, size: &InstanceSize) -> String {
    let mut alpha = size.alphabet.clone();
    alpha.shuffle(rng);
    let n_start = rng.gen_range(1..=alpha.len().min(3));
    let (starts, conts) = alpha.split_at(n_start);
    let n_terms = rng.gen_range(1..=size.max_terminals);
    let with_ignored = n_terms >= 2 && rng.gen_bool(0.25);
    let mut out = String::new();
    let names: Vec<String> = (0..n_terms).map(|i| ((b'A' + i as u8) as char).to_string()).collect();
    for name in &names {
        let head = if starts.len() >= 2 && rng.gen_bool(0.3) {
            let mut two: Vec<u8> = starts.choose_multiple(rng, 2).copied().collect();
            two.sort_unstable();
            format!("[{}{}]", two[0] as char, two[1] as char)
        } else {
            (*starts.choose(rng).unwrap() as char).to_string()
        };
        let tail = if conts.is_empty() {
            String::new()
        } else {
            let pick: Vec<char> = conts.choose_multiple(rng, 2).map(|&b| b as char).collect();
            let x = pick[0];
            let y = *pick.last().unwrap();
            match rng.gen_range(0..8) {
                0 | 1 => String::new(),
                2 => x.to_string(),
                3 => format!("{x}+"),
                4 => format!("{x}*"),
                5 => format!("{x}?"),
                6 if x != y => format!("({x}|{y})"),
                6 => x.to_string(),
                _ => format!("{x}{y}"),
            }
        };
        out.push_str(&format!("{name}: /{head}{tail}/ ;\n"));
    }
    let rule_terms: &[String] = if with_ignored {
        out.push_str(&format!("%ignore {} ;\n", names[n_terms - 1]));
        &names[..n_terms - 1]
    } else {
        &names
    };
    let n_nts = rng.gen_range(1..=size.max_nonterminals);
    let nts: Vec<String> =
        (0..n_nts).map(|i| if i == 0 { "start".to_owned() } else { format!("n{i}") }).collect();
    let n_rules = rng.gen_range(n_nts..=size.max_rules.max(n_nts));
    let mut rules: Vec<(usize, Vec<String>)> = Vec::new();
    for r in 0..n_rules {
        let lhs = if r < n_nts { r } else { rng.gen_range(0..n_nts) };
        let len = match rng.gen_range(0..20) {
            0..=1 => 0,
            2..=7 => 1,
            8..=14 => 2,
            _ => 3,
        };
        let rhs = (0..len)
            .map(|_| {
                if rng.gen_bool(0.6) {
                    rule_terms.choose(rng).unwrap().clone()
                } else {
                    nts.choose(rng).unwrap().clone()
                }
            })
            .collect();
        rules.push((lhs, rhs));
    }
    for (i, nt) in nts.iter().enumerate() {
        let alts: Vec<String> = rules.iter().filter(|(lhs, _)| *lhs == i).map(|(_, rhs)| rhs.join(" ")).collect();
        out.push_str(&format!("{nt}: {} ;\n", alts.join(" | ")));
    }
    out
}

/// At least three rules mentioning at least two distinct terminals.
fn nontrivial(g: &Grammar) -> bool {
    let mut used: Vec<&str> =
        g.rules.iter().flat_map(|r| r.rhs.iter()).filter(|s| g.terminal_id(s).is_some()).map(|s| s.as_str()).collect();
    used.sort_unstable();
    used.dedup();
    g.rules.len() >= 3 && used.len() >= 2
}

/// No byte string is a lexeme of two terminals.
fn pairwise_disjoint(lx: &PositionLexer) -> bool {
    let alphabet = lx.alphabet();
    let n = lx.num_terminals();
    for a in 0..n {
        for b in a + 1..n {
            let (ta, tb) = (TerminalId(a as u16), TerminalId(b as u16));
            let start = (lx.restrict(&PState::Initial, ta), lx.restrict(&PState::Initial, tb));
            let mut seen = vec![start.clone()];
            let mut work = vec![start];
            while let Some((x, y)) = work.pop() {
                for &c in &alphabet {
                    let (Some(nx), Some(ny)) = (lx.step_within(&x, c, ta), lx.step_within(&y, c, tb)) else { continue };
                    if lx.accepts_as(&nx, ta) && lx.accepts_as(&ny, tb) {
                        return false;
                    }
                    let pair = (nx, ny);
                    if !seen.contains(&pair) {
                        seen.push(pair.clone());
                        work.push(pair);
                    }
                }
            }
        }
    }
    true
}

/// Upper bound on the bytes completing any viable prefix: finishing the
/// pending lexeme plus the costliest shortest completion along any parse
/// spine. A pending ignored lexeme may precede a terminal not yet started,
/// whose cost then counts too. `None` if spine costs are unbounded.
fn completion_bound(g: &Grammar, lx: &PositionLexer) -> Option<usize> {
    let n_terms = g.terminals.len();
    let term_cost: Vec<usize> = (0..n_terms)
        .map(|t| lx.shortest_completion(&PState::Initial, TerminalId(t as u16)).expect("nonempty language"))
        .collect();
    let pending = lx.max_pending_completion();

    let nt_index = |name: &str| g.nonterminals.iter().position(|n| n == name);
    let n_nts = g.nonterminals.len();
    let mut min_cost = vec![usize::MAX; n_nts];
    let sym_cost = |s: &str, min_cost: &[usize]| match g.terminal_id(s) {
        Some(t) => term_cost[t.index()],
        None => min_cost[nt_index(s).unwrap()],
    };
    let mut changed = true;
    while changed {
        changed = false;
        for r in &g.rules {
            let c = r.rhs.iter().try_fold(0usize, |acc, s| {
                let c = sym_cost(s, &min_cost);
                (c != usize::MAX).then(|| acc + c)
            });
            let lhs = nt_index(&r.lhs).unwrap();
            if let Some(c) = c {
                if c < min_cost[lhs] {
                    min_cost[lhs] = c;
                    changed = true;
                }
            }
        }
    }

    let inside = spine(g, &term_cost, &min_cost, |_| 0)?;
    let start = nt_index(&g.start).unwrap();
    let mut bound = min_cost[start].max(pending + inside[start]);
    if g.terminals.iter().any(|t| t.ignored) {
        let before = spine(g, &term_cost, &min_cost, |t| term_cost[t.index()])?;
        bound = bound.max(pending + before[start]);
    }
    Some(bound)
}

/// Per nonterminal, the costliest remainder of a derivation measured from a
/// terminal position: `at_terminal` bytes for that terminal plus the
/// shortest completion of every symbol after it, through all enclosing
/// rules. `None` if recursion makes it unbounded.
fn spine(g: &Grammar, term_cost: &[usize], min_cost: &[usize], at_terminal: impl Fn(TerminalId) -> usize) -> Option<Vec<usize>> {
    let nt_index = |name: &str| g.nonterminals.iter().position(|n| n == name);
    let cost = |s: &str| match g.terminal_id(s) {
        Some(t) => term_cost[t.index()],
        None => min_cost[nt_index(s).unwrap()],
    };
    let n_nts = g.nonterminals.len();
    let mut spine = vec![0usize; n_nts];
    for round in 0..=n_nts + 1 {
        let mut changed = false;
        for r in &g.rules {
            let lhs = nt_index(&r.lhs).unwrap();
            for i in 0..r.rhs.len() {
                let rest: usize = r.rhs[i + 1..].iter().map(|s| cost(s)).sum();
                let inner = match g.terminal_id(&r.rhs[i]) {
                    Some(t) => at_terminal(t),
                    None => spine[nt_index(&r.rhs[i]).unwrap()],
                };
                if rest + inner > spine[lhs] {
                    spine[lhs] = rest + inner;
                    changed = true;
                }
            }
        }
        if !changed {
            return Some(spine);
        }
        if round == n_nts + 1 {
            return None;
        }
    }
    unreachable!()
}
