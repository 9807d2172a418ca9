//! Interning pool for terminal sequences.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::grammar::TerminalId;

pub type SeqId = u32;

/// Injective interning of terminal sequences; ids are assigned in first-seen
/// order.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(from = "Vec<Vec<TerminalId>>", into = "Vec<Vec<TerminalId>>")]
pub struct SeqPool {
    seqs: Vec<Vec<TerminalId>>,
    index: HashMap<Vec<TerminalId>, SeqId>,
}

impl PartialEq for SeqPool {
    fn eq(&self, other: &Self) -> bool {
        self.seqs == other.seqs
    }
}

impl Eq for SeqPool {}

impl From<Vec<Vec<TerminalId>>> for SeqPool {
    fn from(seqs: Vec<Vec<TerminalId>>) -> Self {
        let index = seqs.iter().enumerate().map(|(i, s)| (s.clone(), i as SeqId)).collect();
        Self { seqs, index }
    }
}

impl From<SeqPool> for Vec<Vec<TerminalId>> {
    fn from(p: SeqPool) -> Self {
        p.seqs
    }
}

impl SeqPool {
    pub fn intern(&mut self, seq: &[TerminalId]) -> SeqId {
        if let Some(&id) = self.index.get(seq) {
            return id;
        }
        let id = self.seqs.len() as SeqId;
        self.seqs.push(seq.to_vec());
        self.index.insert(seq.to_vec(), id);
        id
    }

    pub fn find(&self, seq: &[TerminalId]) -> Option<SeqId> {
        self.index.get(seq).copied()
    }

    #[inline]
    pub fn get(&self, id: SeqId) -> &[TerminalId] {
        &self.seqs[id as usize]
    }

    pub fn len(&self) -> usize {
        self.seqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seqs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (SeqId, &[TerminalId])> {
        self.seqs.iter().enumerate().map(|(i, s)| (i as SeqId, s.as_slice()))
    }
}
