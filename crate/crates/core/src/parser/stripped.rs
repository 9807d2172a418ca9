use serde::{Deserialize, Serialize};

use super::lalr::{Action, Pda};
use crate::bitset::BitSet;
use crate::grammar::TerminalId;

/// The parser automaton with its stack removed: shifts stay labeled edges and
/// every reduce becomes ε-edges to all goto targets of the reduced
/// nonterminal. Accepts a superset of what the parser accepts from any stack.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrippedFsa {
    n_terms: usize,
    shifts: Vec<Vec<(TerminalId, u32)>>,
    closure: Vec<BitSet>,
    accept_end: Vec<bool>,
}

pub fn strip_stack_fsa(p: &Pda) -> StrippedFsa {
    let n = p.num_states();
    let n_terms = p.num_terminals();
    let cols: Vec<TerminalId> = (0..n_terms as u16).map(TerminalId).chain([TerminalId::END]).collect();

    let mut goto_targets: Vec<Vec<u32>> = vec![Vec::new(); p.num_nonterminals()];
    for s in 0..n as u32 {
        for (nt, targets) in goto_targets.iter_mut().enumerate() {
            if let Some(g) = p.goto(s, nt as u32) {
                targets.push(g);
            }
        }
    }

    let mut shifts = vec![Vec::new(); n];
    let mut eps: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut accept_end = vec![false; n];
    for s in 0..n as u32 {
        let mut reduced = Vec::new();
        for &c in &cols {
            match p.action(s, c) {
                Action::Shift(t) => shifts[s as usize].push((c, t)),
                Action::Reduce(r) => reduced.push(p.rules()[r as usize].lhs),
                Action::Accept => accept_end[s as usize] = true,
                Action::Error => {}
            }
        }
        reduced.sort_unstable();
        reduced.dedup();
        for lhs in reduced {
            eps[s as usize].extend(&goto_targets[lhs as usize]);
        }
    }

    let closure = (0..n)
        .map(|s| {
            let mut set = BitSet::new(n);
            set.insert(s);
            let mut work = vec![s as u32];
            while let Some(x) = work.pop() {
                for &y in &eps[x as usize] {
                    if set.insert(y as usize) {
                        work.push(y);
                    }
                }
            }
            set
        })
        .collect();
    StrippedFsa { n_terms, shifts, closure, accept_end }
}

impl StrippedFsa {
    pub fn num_states(&self) -> usize {
        self.shifts.len()
    }

    /// Prefix acceptance from `q`: some path consumes all of `alpha`; a final
    /// `$` must reach an accepting state.
    pub fn accepts(&self, q: u32, alpha: &[TerminalId]) -> bool {
        let mut cur = self.closure[q as usize].clone();
        for &a in alpha {
            if a.is_end() {
                return cur.iter().any(|s| self.accept_end[s]);
            }
            debug_assert!(a.index() < self.n_terms);
            let mut next = BitSet::new(self.num_states());
            for s in cur.iter() {
                for &(t, target) in &self.shifts[s] {
                    if t == a {
                        next.union_with(&self.closure[target as usize]);
                    }
                }
            }
            if next.is_empty() {
                return false;
            }
            cur = next;
        }
        true
    }
}
