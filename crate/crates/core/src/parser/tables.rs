use std::fmt::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lalr::{Pda, PrefixResult};
use super::stripped::StrippedFsa;
use crate::bitset::BitSet;
use crate::seq::SeqId;
use crate::spanner::SpannerTables;

/// Classification of a normalized realizable sequence at one parser state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SeqClass {
    /// Accepted from the state with no stack below it.
    Always,
    /// Rejected by the stack-free overapproximation.
    Rejected,
    /// Depends on the stack below the state.
    Dependent,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub always: usize,
    pub rejected: usize,
    pub dependent: usize,
}

/// Per (lexer state, parser state): the always-accepted token set and the
/// stack-dependent normalized sequences.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParserTables {
    n_lexer: usize,
    n_lr: usize,
    classes: Vec<Vec<SeqClass>>,
    a_table: Vec<BitSet>,
    d_table: Vec<Vec<SeqId>>,
}

pub fn classify(p: &Pda, f: &StrippedFsa, s: &SpannerTables, q: u32) -> Vec<SeqClass> {
    s.normalized()
        .iter()
        .map(|(_, alpha)| {
            if p.accepts_prefix(q, &[], alpha) == PrefixResult::Accepted {
                SeqClass::Always
            } else if !f.accepts(q, alpha) {
                SeqClass::Rejected
            } else {
                SeqClass::Dependent
            }
        })
        .collect()
}

/// Classifies every normalized sequence at every parser state, then builds
/// the token tables for every reachable lexer state. `d_table` lists are
/// sorted by sequence content so shared prefixes are adjacent.
pub fn preprocess_parser(p: &Pda, f: &StrippedFsa, s: &SpannerTables) -> ParserTables {
    let n_lr = p.num_states();
    let n_lexer = s.num_states();
    let classes: Vec<Vec<SeqClass>> = (0..n_lr as u32).into_par_iter().map(|q| classify(p, f, s, q)).collect();
    let pool = s.normalized();
    let cells: Vec<(BitSet, Vec<SeqId>)> = (0..n_lexer * n_lr)
        .into_par_iter()
        .map(|i| {
            let (qa, qp) = ((i / n_lr) as u32, i % n_lr);
            let mut a = BitSet::new(s.vocab_len());
            let mut d = Vec::new();
            for (alpha, tokens) in s.norm_row(qa) {
                match classes[qp][*alpha as usize] {
                    SeqClass::Always => tokens.iter().for_each(|&t| {
                        a.insert(t as usize);
                    }),
                    SeqClass::Dependent => d.push(*alpha),
                    SeqClass::Rejected => {}
                }
            }
            d.sort_by(|x, y| pool.get(*x).cmp(pool.get(*y)));
            (a, d)
        })
        .collect();
    let (a_table, d_table) = cells.into_iter().unzip();
    ParserTables { n_lexer, n_lr, classes, a_table, d_table }
}

impl ParserTables {
    pub fn num_lr_states(&self) -> usize {
        self.n_lr
    }

    pub fn num_lexer_states(&self) -> usize {
        self.n_lexer
    }

    #[inline]
    pub fn a_table(&self, qa: u32, qp: u32) -> &BitSet {
        &self.a_table[qa as usize * self.n_lr + qp as usize]
    }

    #[inline]
    pub fn d_table(&self, qa: u32, qp: u32) -> &[SeqId] {
        &self.d_table[qa as usize * self.n_lr + qp as usize]
    }

    /// Class of normalized sequence `alpha` at parser state `qp`.
    pub fn class(&self, qp: u32, alpha: SeqId) -> SeqClass {
        self.classes[qp as usize][alpha as usize]
    }

    pub fn counts(&self, qp: u32) -> ClassCounts {
        let mut c = ClassCounts::default();
        for cls in &self.classes[qp as usize] {
            match cls {
                SeqClass::Always => c.always += 1,
                SeqClass::Rejected => c.rejected += 1,
                SeqClass::Dependent => c.dependent += 1,
            }
        }
        c
    }

    pub fn total_counts(&self) -> ClassCounts {
        (0..self.n_lr as u32).map(|q| self.counts(q)).fold(ClassCounts::default(), |a, b| ClassCounts {
            always: a.always + b.always,
            rejected: a.rejected + b.rejected,
            dependent: a.dependent + b.dependent,
        })
    }

    /// TSV with columns `state, class, sequence`; class is `A`, `R` or `D`.
    pub fn dump_classes(&self, s: &SpannerTables, name: &dyn Fn(crate::grammar::TerminalId) -> String) -> String {
        let mut out = String::from("state\tclass\tsequence\n");
        for q in 0..self.n_lr {
            for (id, alpha) in s.normalized().iter() {
                let cls = match self.classes[q][id as usize] {
                    SeqClass::Always => "A",
                    SeqClass::Rejected => "R",
                    SeqClass::Dependent => "D",
                };
                let text: Vec<String> = alpha.iter().map(|&t| name(t)).collect();
                let text = if text.is_empty() { "ε".to_owned() } else { text.join(" ") };
                writeln!(out, "{q}\t{cls}\t{text}").unwrap();
            }
        }
        out
    }
}
