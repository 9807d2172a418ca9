use std::collections::{HashMap, VecDeque};
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::nfa::{compile_regex, Nfa};
use crate::grammar::{TerminalDef, TerminalId};

pub const NO_STATE: u32 = u32::MAX;

/// Deterministic, minimized, dead-state-free lexing automaton. State 0 is
/// the initial state; states are numbered breadth-first from it with bytes
/// visited in ascending order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fsa {
    trans: Vec<u32>,
    labels: Vec<Option<TerminalId>>,
    names: Vec<String>,
}

/// A terminal whose every lexeme is claimed by a higher-priority terminal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShadowedTerminal {
    pub terminal: TerminalId,
    pub by: Vec<TerminalId>,
}

impl Fsa {
    pub const INITIAL: u32 = 0;

    pub fn num_states(&self) -> usize {
        self.labels.len()
    }

    pub fn num_terminals(&self) -> usize {
        self.names.len()
    }

    pub fn terminal_name(&self, t: TerminalId) -> &str {
        if t.is_end() {
            "$"
        } else {
            &self.names[t.index()]
        }
    }

    #[inline]
    pub fn next(&self, q: u32, byte: u8) -> Option<u32> {
        let t = self.trans[q as usize * 256 + byte as usize];
        (t != NO_STATE).then_some(t)
    }

    #[inline]
    pub fn label(&self, q: u32) -> Option<TerminalId> {
        self.labels[q as usize]
    }

    /// Outgoing edges of `q` in byte order.
    pub fn edges(&self, q: u32) -> impl Iterator<Item = (u8, u32)> + '_ {
        (0..=255u8).filter_map(move |b| self.next(q, b).map(|t| (b, t)))
    }

    /// Bytes with an edge from some state.
    pub fn used_bytes(&self) -> Vec<u8> {
        (0..=255u8).filter(|&b| (0..self.num_states() as u32).any(|q| self.next(q, b).is_some())).collect()
    }

    /// Text digraph: one `src -label-> dst` line per edge (runs of
    /// consecutive bytes with a common target are merged), followed by one
    /// `# accept q T` line per accepting state.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for q in 0..self.num_states() as u32 {
            for (lo, hi, t) in byte_runs(|b| self.next(q, b)) {
                writeln!(out, "q{q} -{}-> q{t}", fmt_run(lo, hi)).unwrap();
            }
        }
        for q in 0..self.num_states() as u32 {
            if let Some(t) = self.label(q) {
                writeln!(out, "# accept q{q} {}", self.terminal_name(t)).unwrap();
            }
        }
        out
    }
}

pub(crate) fn byte_runs<T: PartialEq + Copy>(f: impl Fn(u8) -> Option<T>) -> Vec<(u8, u8, T)> {
    let mut runs: Vec<(u8, u8, T)> = Vec::new();
    for b in 0..=255u8 {
        if let Some(t) = f(b) {
            match runs.last_mut() {
                Some((_, hi, last)) if *hi as u16 + 1 == b as u16 && *last == t => *hi = b,
                _ => runs.push((b, b, t)),
            }
        }
    }
    runs
}

pub(crate) fn fmt_byte(b: u8) -> String {
    match b {
        b'-' | b'\\' | b':' => format!("\\x{b:02x}"),
        0x21..=0x7e => (b as char).to_string(),
        _ => format!("\\x{b:02x}"),
    }
}

pub(crate) fn fmt_run(lo: u8, hi: u8) -> String {
    if lo == hi {
        fmt_byte(lo)
    } else {
        format!("[{}..{}]", fmt_byte(lo), fmt_byte(hi))
    }
}

/// Builds the lexing automaton for the union of all terminal patterns.
///
/// Accepting states are labeled with the lowest-priority-number terminal
/// they accept. Returns the automaton and the terminals that label no state.
pub fn build_lexing_automaton(terminals: &[TerminalDef]) -> (Fsa, Vec<ShadowedTerminal>) {
    let parts: Vec<Nfa> = terminals.iter().map(|t| compile_regex(&t.pattern)).collect();
    let nfa = Nfa::union(&parts);
    let names: Vec<String> = terminals.iter().map(|t| t.name.clone()).collect();

    let (classes, reps) = byte_classes(&nfa);
    let (trans, accept_sets) = determinize(&nfa, &reps);
    let labels: Vec<Option<TerminalId>> = accept_sets.iter().map(|s| s.first().copied()).collect();

    let mut shadowed = Vec::new();
    for i in 0..terminals.len() {
        let t = TerminalId(i as u16);
        if labels.iter().any(|l| *l == Some(t)) {
            continue;
        }
        let mut by: Vec<TerminalId> =
            accept_sets.iter().filter(|s| s.contains(&t)).filter_map(|s| s.first().copied()).collect();
        by.sort_unstable();
        by.dedup();
        shadowed.push(ShadowedTerminal { terminal: t, by });
    }

    let (trans, labels) = prune_dead(trans, labels, reps.len());
    let (trans, labels) = minimize(&trans, &labels, reps.len());
    let fsa = canonical(&trans, &labels, &classes, reps.len(), names);
    (fsa, shadowed)
}

/// Partitions bytes into classes no NFA edge distinguishes. Returns the class
/// of every byte and one representative byte per class.
fn byte_classes(nfa: &Nfa) -> ([u16; 256], Vec<u8>) {
    let mut class = [0u16; 256];
    let mut count = 1u16;
    let mut distinct: Vec<_> = nfa.states.iter().flat_map(|s| s.edges.iter().map(|(c, _)| *c)).collect();
    distinct.sort_by_key(|c| c.ranges());
    distinct.dedup();
    for c in &distinct {
        let mut remap: HashMap<(u16, bool), u16> = HashMap::new();
        let mut next = 0u16;
        for b in 0..=255u8 {
            let key = (class[b as usize], c.contains(b));
            let id = *remap.entry(key).or_insert_with(|| {
                next += 1;
                next - 1
            });
            class[b as usize] = id;
        }
        count = next;
    }
    let mut reps = vec![0u8; count as usize];
    for b in (0..=255u8).rev() {
        reps[class[b as usize] as usize] = b;
    }
    (class, reps)
}

/// Subset construction over byte classes. Row-major transitions
/// (`state * n_classes + class`), and the sorted accepting terminals per state.
fn determinize(nfa: &Nfa, reps: &[u8]) -> (Vec<u32>, Vec<Vec<TerminalId>>) {
    let k = reps.len();
    let start = nfa.closure([nfa.start]);
    let mut index: HashMap<Vec<u32>, u32> = HashMap::new();
    let mut sets = vec![start.clone()];
    index.insert(start, 0);
    let mut trans = Vec::new();
    let mut i = 0;
    while i < sets.len() {
        let set = sets[i].clone();
        for &r in reps {
            let next = nfa.step_set(&set, r);
            let t = if next.is_empty() {
                NO_STATE
            } else if let Some(&id) = index.get(&next) {
                id
            } else {
                let id = sets.len() as u32;
                index.insert(next.clone(), id);
                sets.push(next);
                id
            };
            trans.push(t);
        }
        i += 1;
    }
    debug_assert_eq!(trans.len(), sets.len() * k);
    let accepts = sets
        .iter()
        .map(|s| {
            let mut a: Vec<TerminalId> = s.iter().filter_map(|&q| nfa.states[q as usize].accept).collect();
            a.sort_unstable();
            a.dedup();
            a
        })
        .collect();
    (trans, accepts)
}

/// Removes states from which no accepting state is reachable.
fn prune_dead(trans: Vec<u32>, labels: Vec<Option<TerminalId>>, k: usize) -> (Vec<u32>, Vec<Option<TerminalId>>) {
    let n = labels.len();
    let mut rev: Vec<Vec<u32>> = vec![Vec::new(); n];
    for q in 0..n {
        for c in 0..k {
            let t = trans[q * k + c];
            if t != NO_STATE {
                rev[t as usize].push(q as u32);
            }
        }
    }
    let mut live = vec![false; n];
    let mut stack: Vec<u32> = (0..n as u32).filter(|&q| labels[q as usize].is_some()).collect();
    for &q in &stack {
        live[q as usize] = true;
    }
    while let Some(q) = stack.pop() {
        for &p in &rev[q as usize] {
            if !live[p as usize] {
                live[p as usize] = true;
                stack.push(p);
            }
        }
    }
    let mut new_id = vec![NO_STATE; n];
    let mut next = 0;
    for q in 0..n {
        if live[q] || q == 0 {
            new_id[q] = next;
            next += 1;
        }
    }
    let mut out_trans = Vec::with_capacity(next as usize * k);
    let mut out_labels = Vec::with_capacity(next as usize);
    for q in 0..n {
        if new_id[q] == NO_STATE {
            continue;
        }
        for c in 0..k {
            let t = trans[q * k + c];
            out_trans.push(if t == NO_STATE { NO_STATE } else { new_id[t as usize] });
        }
        out_labels.push(labels[q]);
    }
    (out_trans, out_labels)
}

/// Hopcroft partition refinement. The partial automaton is completed with an
/// explicit sink that is removed again afterwards.
fn minimize(trans: &[u32], labels: &[Option<TerminalId>], k: usize) -> (Vec<u32>, Vec<Option<TerminalId>>) {
    let n = labels.len();
    let sink = n;
    let total = n + 1;
    let target = |q: usize, c: usize| -> usize {
        if q == sink {
            sink
        } else {
            let t = trans[q * k + c];
            if t == NO_STATE {
                sink
            } else {
                t as usize
            }
        }
    };
    let mut inv: Vec<Vec<Vec<u32>>> = vec![vec![Vec::new(); total]; k];
    for q in 0..total {
        for (c, inv_c) in inv.iter_mut().enumerate() {
            inv_c[target(q, c)].push(q as u32);
        }
    }

    let mut by_label: HashMap<Option<TerminalId>, usize> = HashMap::new();
    let mut blocks: Vec<Vec<u32>> = Vec::new();
    let mut block_of = vec![0usize; total];
    for q in 0..total {
        let label = if q == sink { None } else { labels[q] };
        let b = *by_label.entry(label).or_insert_with(|| {
            blocks.push(Vec::new());
            blocks.len() - 1
        });
        blocks[b].push(q as u32);
        block_of[q] = b;
    }

    let mut work: VecDeque<(usize, usize)> = VecDeque::new();
    let mut in_work: Vec<Vec<bool>> = Vec::new();
    for b in 0..blocks.len() {
        in_work.push(vec![true; k]);
        for c in 0..k {
            work.push_back((b, c));
        }
    }

    let mut mark = vec![false; total];
    while let Some((a, c)) = work.pop_front() {
        in_work[a][c] = false;
        let mut preimage: Vec<u32> = Vec::new();
        for &q in &blocks[a] {
            for &p in &inv[c][q as usize] {
                if !mark[p as usize] {
                    mark[p as usize] = true;
                    preimage.push(p);
                }
            }
        }
        let mut touched: Vec<usize> = preimage.iter().map(|&p| block_of[p as usize]).collect();
        touched.sort_unstable();
        touched.dedup();
        for y in touched {
            let (inside, outside): (Vec<u32>, Vec<u32>) = blocks[y].iter().partition(|&&q| mark[q as usize]);
            if outside.is_empty() {
                continue;
            }
            let z = blocks.len();
            blocks[y] = inside;
            for &q in &outside {
                block_of[q as usize] = z;
            }
            blocks.push(outside);
            in_work.push(vec![false; k]);
            for c2 in 0..k {
                if in_work[y][c2] {
                    in_work[z][c2] = true;
                    work.push_back((z, c2));
                } else {
                    let smaller = if blocks[y].len() <= blocks[z].len() { y } else { z };
                    in_work[smaller][c2] = true;
                    work.push_back((smaller, c2));
                }
            }
        }
        for p in preimage {
            mark[p as usize] = false;
        }
    }

    let sink_block = block_of[sink];
    let mut new_id = vec![NO_STATE; blocks.len()];
    let mut next = 0u32;
    for q in 0..n {
        let b = block_of[q];
        if b != sink_block && new_id[b] == NO_STATE {
            new_id[b] = next;
            next += 1;
        }
    }
    let m = next as usize;
    let mut out_trans = vec![NO_STATE; m * k];
    let mut out_labels = vec![None; m];
    for q in 0..n {
        let b = block_of[q];
        if b == sink_block {
            continue;
        }
        let id = new_id[b] as usize;
        out_labels[id] = labels[q];
        for c in 0..k {
            let tb = block_of[target(q, c)];
            out_trans[id * k + c] = if tb == sink_block { NO_STATE } else { new_id[tb] };
        }
    }
    // Keep the initial state first for the canonical renumbering.
    debug_assert_eq!(new_id[block_of[0]], 0);
    (out_trans, out_labels)
}

fn canonical(trans: &[u32], labels: &[Option<TerminalId>], classes: &[u16; 256], k: usize, names: Vec<String>) -> Fsa {
    let n = labels.len();
    let mut order = vec![NO_STATE; n];
    let mut queue = VecDeque::from([0u32]);
    order[0] = 0;
    let mut seq = vec![0u32];
    while let Some(q) = queue.pop_front() {
        for b in 0..=255u8 {
            let t = trans[q as usize * k + classes[b as usize] as usize];
            if t != NO_STATE && order[t as usize] == NO_STATE {
                order[t as usize] = seq.len() as u32;
                seq.push(t);
                queue.push_back(t);
            }
        }
    }
    let m = seq.len();
    let mut out = vec![NO_STATE; m * 256];
    let mut out_labels = vec![None; m];
    for (new, &old) in seq.iter().enumerate() {
        out_labels[new] = labels[old as usize];
        for b in 0..=255usize {
            let t = trans[old as usize * k + classes[b] as usize];
            if t != NO_STATE {
                out[new * 256 + b] = order[t as usize];
            }
        }
    }
    Fsa { trans: out, labels: out_labels, names }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::parse_grammar_spec;

    fn fsa(src: &str) -> (Fsa, Vec<ShadowedTerminal>) {
        build_lexing_automaton(&parse_grammar_spec(src).unwrap().terminals)
    }

    #[test]
    fn bc_automaton() {
        let (a, shadowed) = fsa("B: /ab+/ ; C: /ac+/ ; start: B C | B C start ;");
        assert!(shadowed.is_empty());
        assert_eq!(a.num_states(), 4);
        assert_eq!(
            a.dump(),
            "q0 -a-> q1\nq1 -b-> q2\nq1 -c-> q3\nq2 -b-> q2\nq3 -c-> q3\n# accept q2 B\n# accept q3 C\n"
        );
    }

    #[test]
    fn single_terminal() {
        let (a, _) = fsa("A: /a/ ; start: A ;");
        assert_eq!(a.num_states(), 2);
        assert_eq!(a.label(1), Some(TerminalId(0)));
        assert_eq!(a.label(0), None);
    }

    #[test]
    fn longer_operator_wins() {
        let (a, _) = fsa("PLUS: /\\+/ ; INC: /\\+\\+/ ; start: PLUS | INC ;");
        let one = a.next(0, b'+').unwrap();
        let two = a.next(one, b'+').unwrap();
        assert_eq!(a.label(one), Some(TerminalId(0)));
        assert_eq!(a.label(two), Some(TerminalId(1)));
    }

    #[test]
    fn priority_breaks_ties_and_reports_shadowing() {
        let (a, shadowed) = fsa("IF: /if/ ; ID: /[a-z]+/ ; SAME: /if/ ; start: IF | ID | SAME ;");
        let q = a.next(a.next(0, b'i').unwrap(), b'f').unwrap();
        assert_eq!(a.label(q), Some(TerminalId(0)));
        assert_eq!(shadowed, vec![ShadowedTerminal { terminal: TerminalId(2), by: vec![TerminalId(0)] }]);
    }

    #[test]
    fn minimization_merges_equivalent_states() {
        let (a, _) = fsa("X: /(a|b)(a|b)c/ ; start: X ;");
        assert_eq!(a.num_states(), 4);
        let (a, _) = fsa("X: /[0-9]+|[0-9]+\\.[0-9]+/ ; start: X ;");
        assert_eq!(a.num_states(), 4);
    }

    #[test]
    fn no_dead_states() {
        let (a, _) = fsa("K: /abc|abd|x[^y]*y/ ; start: K ;");
        for q in 0..a.num_states() as u32 {
            let mut seen = vec![false; a.num_states()];
            let mut stack = vec![q];
            let mut found = false;
            while let Some(s) = stack.pop() {
                if a.label(s).is_some() {
                    found = true;
                    break;
                }
                for (_, t) in a.edges(s) {
                    if !seen[t as usize] {
                        seen[t as usize] = true;
                        stack.push(t);
                    }
                }
            }
            assert!(found, "state {q} is dead");
        }
    }
}
