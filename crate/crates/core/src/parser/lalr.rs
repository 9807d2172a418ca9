use std::collections::{BTreeMap, HashMap};
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::bitset::BitSet;
use crate::error::LalrConflict;
use crate::grammar::{Grammar, TerminalId};

pub const NO_GOTO: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Error,
    Shift(u32),
    Reduce(u32),
    Accept,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleInfo {
    pub lhs: u32,
    pub rhs_len: u32,
    pub text: String,
}

/// Deterministic LALR(1) pushdown automaton. Stack symbols are LR states;
/// terminal column `i` is grammar terminal `i`, and column `n_terms` is `$`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pda {
    n_terms: usize,
    n_nonterms: usize,
    n_states: usize,
    action: Vec<Action>,
    goto: Vec<u32>,
    rules: Vec<RuleInfo>,
    term_names: Vec<String>,
    nonterm_names: Vec<String>,
}

/// Outcome of simulating a terminal sequence from a parser configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PrefixResult {
    Accepted,
    Rejected,
    /// A reduce needed more stack than was supplied.
    Underflow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Sym {
    T(u32),
    N(u32),
}

type Item = (u32, u32);

struct Cfg {
    n_terms: usize,
    n_nonterms: usize,
    rules: Vec<(u32, Vec<Sym>)>,
    rules_by_lhs: Vec<Vec<u32>>,
    nullable: Vec<bool>,
    first: Vec<BitSet>,
}

impl Cfg {
    fn new(g: &Grammar) -> Cfg {
        let n_terms = g.terminals.len();
        let n_nonterms = g.nonterminals.len() + 1;
        let aug = g.nonterminals.len() as u32;
        let nt_index: HashMap<&str, u32> =
            g.nonterminals.iter().enumerate().map(|(i, n)| (n.as_str(), i as u32)).collect();
        let sym = |name: &str| match g.terminal_id(name) {
            Some(t) => Sym::T(t.0 as u32),
            None => Sym::N(nt_index[name]),
        };
        let mut rules = vec![(aug, vec![Sym::N(nt_index[g.start.as_str()])])];
        for r in &g.rules {
            rules.push((nt_index[r.lhs.as_str()], r.rhs.iter().map(|s| sym(s)).collect()));
        }
        let mut rules_by_lhs = vec![Vec::new(); n_nonterms];
        for (i, (lhs, _)) in rules.iter().enumerate() {
            rules_by_lhs[*lhs as usize].push(i as u32);
        }

        let mut nullable = vec![false; n_nonterms];
        let mut first = vec![BitSet::new(n_terms + 2); n_nonterms];
        loop {
            let mut changed = false;
            for (lhs, rhs) in &rules {
                let lhs = *lhs as usize;
                let mut all_nullable = true;
                for s in rhs {
                    match *s {
                        Sym::T(t) => {
                            changed |= first[lhs].insert(t as usize);
                            all_nullable = false;
                        }
                        Sym::N(n) => {
                            if n as usize != lhs && !first[n as usize].is_subset(&first[lhs]) {
                                let add = first[n as usize].clone();
                                first[lhs].union_with(&add);
                                changed = true;
                            }
                            if !nullable[n as usize] {
                                all_nullable = false;
                            }
                        }
                    }
                    if !all_nullable {
                        break;
                    }
                }
                if all_nullable && !nullable[lhs] {
                    nullable[lhs] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        Cfg { n_terms, n_nonterms, rules, rules_by_lhs, nullable, first }
    }

    fn after_dot(&self, (r, d): Item) -> Option<Sym> {
        self.rules[r as usize].1.get(d as usize).copied()
    }

    fn lr0_closure(&self, kernel: &[Item]) -> Vec<Item> {
        let mut items = kernel.to_vec();
        let mut seen: std::collections::HashSet<Item> = items.iter().copied().collect();
        let mut i = 0;
        while i < items.len() {
            if let Some(Sym::N(n)) = self.after_dot(items[i]) {
                for &r in &self.rules_by_lhs[n as usize] {
                    if seen.insert((r, 0)) {
                        items.push((r, 0));
                    }
                }
            }
            i += 1;
        }
        items
    }

    /// LR(1) closure with lookahead sets; returns items in discovery order.
    fn lr1_closure(&self, seeds: Vec<(Item, BitSet)>) -> Vec<(Item, BitSet)> {
        let mut pos: HashMap<Item, usize> = HashMap::new();
        let mut items: Vec<(Item, BitSet)> = Vec::new();
        let mut work = Vec::new();
        for (item, la) in seeds {
            pos.insert(item, items.len());
            work.push(items.len());
            items.push((item, la));
        }
        while let Some(i) = work.pop() {
            let ((r, d), la) = items[i].clone();
            let rhs = &self.rules[r as usize].1;
            let Some(Sym::N(n)) = rhs.get(d as usize).copied() else { continue };
            let mut new_la = BitSet::new(self.n_terms + 2);
            let mut rest_nullable = true;
            for s in &rhs[d as usize + 1..] {
                match *s {
                    Sym::T(t) => {
                        new_la.insert(t as usize);
                        rest_nullable = false;
                    }
                    Sym::N(m) => {
                        new_la.union_with(&self.first[m as usize]);
                        rest_nullable = self.nullable[m as usize];
                    }
                }
                if !rest_nullable {
                    break;
                }
            }
            if rest_nullable {
                new_la.union_with(&la);
            }
            for &rr in &self.rules_by_lhs[n as usize] {
                match pos.get(&(rr, 0)) {
                    Some(&j) => {
                        if !new_la.is_subset(&items[j].1) {
                            items[j].1.union_with(&new_la);
                            work.push(j);
                        }
                    }
                    None => {
                        pos.insert((rr, 0), items.len());
                        work.push(items.len());
                        items.push(((rr, 0), new_la.clone()));
                    }
                }
            }
        }
        items
    }
}

/// Builds the canonical LALR(1) table: LR(0) item sets with lookaheads
/// computed by spontaneous generation and propagation.
pub fn build_lalr_pda(g: &Grammar) -> Result<Pda, LalrConflict> {
    let cfg = Cfg::new(g);
    let end = cfg.n_terms;
    let dummy = cfg.n_terms + 1;

    let mut kernels: Vec<Vec<Item>> = vec![vec![(0, 0)]];
    let mut index: HashMap<Vec<Item>, u32> = HashMap::from([(vec![(0, 0)], 0)]);
    let mut trans: Vec<BTreeMap<Sym, u32>> = Vec::new();
    let mut i = 0;
    while i < kernels.len() {
        let closure = cfg.lr0_closure(&kernels[i]);
        let mut by_sym: BTreeMap<Sym, Vec<Item>> = BTreeMap::new();
        for &(r, d) in &closure {
            if let Some(s) = cfg.after_dot((r, d)) {
                by_sym.entry(s).or_default().push((r, d + 1));
            }
        }
        let mut edges = BTreeMap::new();
        for (s, mut k) in by_sym {
            k.sort_unstable();
            k.dedup();
            let id = match index.get(&k) {
                Some(&id) => id,
                None => {
                    let id = kernels.len() as u32;
                    index.insert(k.clone(), id);
                    kernels.push(k);
                    id
                }
            };
            edges.insert(s, id);
        }
        trans.push(edges);
        i += 1;
    }
    let n_states = kernels.len();

    let kpos: Vec<HashMap<Item, usize>> =
        kernels.iter().map(|k| k.iter().enumerate().map(|(i, it)| (*it, i)).collect()).collect();
    let mut la: Vec<Vec<BitSet>> = kernels.iter().map(|k| vec![BitSet::new(cfg.n_terms + 2); k.len()]).collect();
    la[0][0].insert(end);
    let mut prop: Vec<Vec<Vec<(u32, usize)>>> = kernels.iter().map(|k| vec![Vec::new(); k.len()]).collect();
    for s in 0..n_states {
        for (ki, &kitem) in kernels[s].iter().enumerate() {
            let seed = BitSet::from_indices(cfg.n_terms + 2, [dummy]);
            for (item, l) in cfg.lr1_closure(vec![(kitem, seed)]) {
                let Some(x) = cfg.after_dot(item) else { continue };
                let target = trans[s][&x];
                let tk = kpos[target as usize][&(item.0, item.1 + 1)];
                for a in l.iter() {
                    if a == dummy {
                        prop[s][ki].push((target, tk));
                    } else {
                        la[target as usize][tk].insert(a);
                    }
                }
            }
        }
    }
    loop {
        let mut changed = false;
        for s in 0..n_states {
            for ki in 0..kernels[s].len() {
                for &(t, tk) in &prop[s][ki] {
                    if !la[s][ki].is_subset(&la[t as usize][tk]) {
                        let add = la[s][ki].clone();
                        la[t as usize][tk].union_with(&add);
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }

    let names: Vec<String> = g.terminals.iter().map(|t| t.name.clone()).chain(["$".to_owned()]).collect();
    let mut nonterm_names = g.nonterminals.clone();
    nonterm_names.push(format!("{}'", g.start));
    let rule_text = |r: u32| {
        let (lhs, rhs) = &cfg.rules[r as usize];
        let rhs: Vec<&str> = rhs
            .iter()
            .map(|s| match *s {
                Sym::T(t) => names[t as usize].as_str(),
                Sym::N(n) => nonterm_names[n as usize].as_str(),
            })
            .collect();
        format!("{} -> {}", nonterm_names[*lhs as usize], rhs.join(" "))
    };

    let cols = cfg.n_terms + 1;
    let mut action = vec![Action::Error; n_states * cols];
    let mut goto = vec![NO_GOTO; n_states * cfg.n_nonterms];
    let describe = |a: Action| match a {
        Action::Shift(t) => format!("shift to state {t}"),
        Action::Reduce(r) => format!("reduce by `{}`", rule_text(r)),
        Action::Accept => "accept".to_owned(),
        Action::Error => "error".to_owned(),
    };
    for s in 0..n_states {
        let mut set = |col: usize, a: Action| -> Result<(), LalrConflict> {
            let slot = &mut action[s * cols + col];
            if *slot != Action::Error && *slot != a {
                let kind = match (*slot, a) {
                    (Action::Reduce(_), Action::Reduce(_)) => "reduce/reduce",
                    _ => "shift/reduce",
                };
                return Err(LalrConflict {
                    state: s as u32,
                    lookahead: names[col].clone(),
                    detail: format!("{kind} conflict between {} and {}", describe(*slot), describe(a)),
                });
            }
            *slot = a;
            Ok(())
        };
        for (&sym, &t) in &trans[s] {
            match sym {
                Sym::T(term) => set(term as usize, Action::Shift(t))?,
                Sym::N(n) => goto[s * cfg.n_nonterms + n as usize] = t,
            }
        }
        let seeds = kernels[s].iter().copied().zip(la[s].iter().cloned()).collect();
        for ((r, d), l) in cfg.lr1_closure(seeds) {
            if d as usize != cfg.rules[r as usize].1.len() {
                continue;
            }
            for a in l.iter().filter(|&a| a != dummy) {
                if r == 0 {
                    set(a, Action::Accept)?;
                } else {
                    set(a, Action::Reduce(r))?;
                }
            }
        }
    }

    let rules = (0..cfg.rules.len() as u32)
        .map(|r| {
            let (lhs, rhs) = &cfg.rules[r as usize];
            RuleInfo { lhs: *lhs, rhs_len: rhs.len() as u32, text: rule_text(r) }
        })
        .collect();
    Ok(Pda {
        n_terms: cfg.n_terms,
        n_nonterms: cfg.n_nonterms,
        n_states,
        action,
        goto,
        rules,
        term_names: names,
        nonterm_names,
    })
}

/// Resumable simulation state over a caller-owned stack: how many caller
/// states are still live, plus the states pushed since.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimState {
    live: usize,
    pushed: Vec<u32>,
}

/// Result of feeding one terminal to a simulation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SimStep {
    Shifted,
    Accepted,
    Rejected,
    Underflow,
}

impl Pda {
    pub const START: u32 = 0;

    pub fn num_states(&self) -> usize {
        self.n_states
    }

    pub fn num_terminals(&self) -> usize {
        self.n_terms
    }

    pub fn rules(&self) -> &[RuleInfo] {
        &self.rules
    }

    #[inline]
    fn col(&self, t: TerminalId) -> usize {
        if t.is_end() {
            self.n_terms
        } else {
            t.index()
        }
    }

    #[inline]
    pub fn action(&self, state: u32, t: TerminalId) -> Action {
        self.action[state as usize * (self.n_terms + 1) + self.col(t)]
    }

    #[inline]
    pub fn goto(&self, state: u32, nonterm: u32) -> Option<u32> {
        let g = self.goto[state as usize * self.n_nonterms + nonterm as usize];
        (g != NO_GOTO).then_some(g)
    }

    pub fn num_nonterminals(&self) -> usize {
        self.n_nonterms
    }

    /// Fresh simulation from top state `q` over the states `below` it.
    pub fn sim_start(&self, below: &[u32]) -> SimState {
        SimState { live: below.len() + 1, pushed: Vec::new() }
    }

    #[inline]
    fn sim_peek(q: u32, below: &[u32], st: &SimState) -> u32 {
        if let Some(&s) = st.pushed.last() {
            s
        } else if st.live == below.len() + 1 {
            q
        } else {
            below[st.live - 1]
        }
    }

    /// Feeds `a` to a simulation started by [`Pda::sim_start`] with the same
    /// `q` and `below`. `Accepted` is only returned for `$`.
    pub fn sim_step(&self, q: u32, below: &[u32], st: &mut SimState, a: TerminalId) -> SimStep {
        loop {
            match self.action(Self::sim_peek(q, below, st), a) {
                Action::Shift(t) => {
                    st.pushed.push(t);
                    return SimStep::Shifted;
                }
                Action::Reduce(r) => {
                    let rule = &self.rules[r as usize];
                    let n = rule.rhs_len as usize;
                    let from_pushed = n.min(st.pushed.len());
                    st.pushed.truncate(st.pushed.len() - from_pushed);
                    let rest = n - from_pushed;
                    if rest >= st.live {
                        return SimStep::Underflow;
                    }
                    st.live -= rest;
                    let g = self.goto(Self::sim_peek(q, below, st), rule.lhs).expect("goto defined after reduce");
                    st.pushed.push(g);
                }
                Action::Accept => return SimStep::Accepted,
                Action::Error => return SimStep::Rejected,
            }
        }
    }

    /// Simulates `alpha` from top state `q` over the states `below` it
    /// (bottom first). A sequence ending in `$` must reach the accept action.
    pub fn accepts_prefix(&self, q: u32, below: &[u32], alpha: &[TerminalId]) -> PrefixResult {
        let mut st = self.sim_start(below);
        for &a in alpha {
            match self.sim_step(q, below, &mut st, a) {
                SimStep::Shifted => {}
                SimStep::Accepted => return PrefixResult::Accepted,
                SimStep::Rejected => return PrefixResult::Rejected,
                SimStep::Underflow => return PrefixResult::Underflow,
            }
        }
        if alpha.last().is_some_and(|t| t.is_end()) {
            PrefixResult::Rejected
        } else {
            PrefixResult::Accepted
        }
    }

    /// Feeds one terminal to a full stack (bottom first, top last). Returns
    /// `Some(true)` on accept, `Some(false)` after a shift, `None` on error
    /// (the stack is then unspecified).
    pub fn feed(&self, stack: &mut Vec<u32>, a: TerminalId) -> Option<bool> {
        loop {
            let top = *stack.last()?;
            match self.action(top, a) {
                Action::Shift(t) => {
                    stack.push(t);
                    return Some(false);
                }
                Action::Reduce(r) => {
                    let rule = &self.rules[r as usize];
                    let keep = stack.len().checked_sub(rule.rhs_len as usize).filter(|&k| k > 0)?;
                    stack.truncate(keep);
                    let g = self.goto(*stack.last()?, rule.lhs)?;
                    stack.push(g);
                }
                Action::Accept => return Some(true),
                Action::Error => return None,
            }
        }
    }

    pub fn terminal_name(&self, t: TerminalId) -> &str {
        &self.term_names[self.col(t)]
    }

    /// TSV with columns `state, symbol, action`: `sN` shift, `rN` reduce,
    /// `acc`, and `gN` for gotos. Followed by a `rule` section.
    pub fn dump_tsv(&self) -> String {
        let mut out = String::from("state\tsymbol\taction\n");
        for s in 0..self.n_states {
            for c in 0..=self.n_terms {
                let a = self.action[s * (self.n_terms + 1) + c];
                let text = match a {
                    Action::Error => continue,
                    Action::Shift(t) => format!("s{t}"),
                    Action::Reduce(r) => format!("r{r}"),
                    Action::Accept => "acc".to_owned(),
                };
                writeln!(out, "{s}\t{}\t{text}", self.term_names[c]).unwrap();
            }
            for n in 0..self.n_nonterms {
                let g = self.goto[s * self.n_nonterms + n];
                if g != NO_GOTO {
                    writeln!(out, "{s}\t{}\tg{g}", self.nonterm_names[n]).unwrap();
                }
            }
        }
        out.push_str("rule\tlhs\tproduction\n");
        for (i, r) in self.rules.iter().enumerate() {
            writeln!(out, "{i}\t{}\t{}", self.nonterm_names[r.lhs as usize], r.text).unwrap();
        }
        out
    }
}
