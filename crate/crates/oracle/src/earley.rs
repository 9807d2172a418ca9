//! Earley recognizer for terminal-level prefix and sentence membership.

use std::collections::{HashMap, HashSet};

use gcd_core::grammar::{Grammar, TerminalId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Sym {
    T(u16),
    N(u32),
}

/// A grammar compiled for Earley recognition. Ignored terminals are not
/// grammar symbols; callers strip them first.
#[derive(Clone, Debug)]
pub struct Earley {
    rules: Vec<(u32, Vec<Sym>)>,
    by_lhs: Vec<Vec<u32>>,
    nullable: Vec<bool>,
}

type Item = (u32, u32, u32);

impl Earley {
    pub fn new(g: &Grammar) -> Self {
        let nts: HashMap<&str, u32> = g.nonterminals.iter().enumerate().map(|(i, n)| (n.as_str(), i as u32)).collect();
        let aug = g.nonterminals.len() as u32;
        let mut rules = vec![(aug, vec![Sym::N(nts[g.start.as_str()])])];
        for r in &g.rules {
            let rhs = r
                .rhs
                .iter()
                .map(|s| match g.terminal_id(s) {
                    Some(t) => Sym::T(t.0),
                    None => Sym::N(nts[s.as_str()]),
                })
                .collect();
            rules.push((nts[r.lhs.as_str()], rhs));
        }
        let mut by_lhs = vec![Vec::new(); aug as usize + 1];
        for (i, (lhs, _)) in rules.iter().enumerate() {
            by_lhs[*lhs as usize].push(i as u32);
        }
        let mut nullable = vec![false; aug as usize + 1];
        let mut changed = true;
        while changed {
            changed = false;
            for (lhs, rhs) in &rules {
                if !nullable[*lhs as usize] && rhs.iter().all(|s| matches!(s, Sym::N(n) if nullable[*n as usize])) {
                    nullable[*lhs as usize] = true;
                    changed = true;
                }
            }
        }
        Earley { rules, by_lhs, nullable }
    }

    /// Runs the recognizer; `None` as soon as some set becomes empty,
    /// otherwise the final item set.
    fn last_set(&self, seq: &[TerminalId]) -> Option<Vec<Item>> {
        let mut sets: Vec<Vec<Item>> = Vec::with_capacity(seq.len() + 1);
        let mut seen: HashSet<Item> = HashSet::new();
        let mut cur: Vec<Item> = vec![(0, 0, 0)];
        for k in 0..=seq.len() {
            seen.clear();
            seen.extend(cur.iter().copied());
            let mut i = 0;
            while i < cur.len() {
                let (r, d, o) = cur[i];
                i += 1;
                let rhs = &self.rules[r as usize].1;
                match rhs.get(d as usize) {
                    Some(Sym::N(n)) => {
                        for &rr in &self.by_lhs[*n as usize] {
                            if seen.insert((rr, 0, k as u32)) {
                                cur.push((rr, 0, k as u32));
                            }
                        }
                        if self.nullable[*n as usize] && seen.insert((r, d + 1, o)) {
                            cur.push((r, d + 1, o));
                        }
                    }
                    Some(Sym::T(_)) => {}
                    None => {
                        let lhs = self.rules[r as usize].0;
                        let parents: Vec<Item> = if o as usize == k {
                            cur.clone()
                        } else {
                            sets[o as usize].clone()
                        };
                        for (pr, pd, po) in parents {
                            if self.rules[pr as usize].1.get(pd as usize) == Some(&Sym::N(lhs))
                                && seen.insert((pr, pd + 1, po))
                            {
                                cur.push((pr, pd + 1, po));
                            }
                        }
                    }
                }
            }
            if k == seq.len() {
                return Some(cur);
            }
            let a = seq[k].0;
            let next: Vec<Item> = cur
                .iter()
                .filter(|(r, d, _)| self.rules[*r as usize].1.get(*d as usize) == Some(&Sym::T(a)))
                .map(|&(r, d, o)| (r, d + 1, o))
                .collect();
            sets.push(cur);
            if next.is_empty() {
                return None;
            }
            cur = next;
        }
        unreachable!()
    }

    /// Prefix-language membership; a final `$` demands a complete sentence.
    pub fn accepts(&self, ts: &[TerminalId]) -> bool {
        match ts.split_last() {
            Some((last, body)) if last.is_end() => {
                self.last_set(body).is_some_and(|set| set.contains(&(0, 1, 0)))
            }
            _ => self.last_set(ts).is_some(),
        }
    }
}

/// Whether `ts` is a prefix of some sentence of `g`, or a whole sentence when
/// `ts` ends in `$`.
pub fn prefix_membership(g: &Grammar, ts: &[TerminalId]) -> bool {
    Earley::new(g).accepts(ts)
}
