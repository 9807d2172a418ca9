use std::fmt::Write;

use super::vocab::{escape_bytes, TokenId, Vocabulary};

/// One trie state per proper prefix of some token; state 0 is the empty
/// prefix, both initial and accepting.
#[derive(Clone, Debug, Default)]
pub struct DetokNode {
    pub prefix: Vec<u8>,
    /// ε-input edges emitting one byte and moving one level down the trie,
    /// sorted by byte.
    pub children: Vec<(u8, u32)>,
    /// Token-input edges emitting the token's final byte and returning to
    /// the root, sorted by token id.
    pub finals: Vec<(TokenId, u8)>,
}

#[derive(Clone, Debug)]
pub struct DetokenizingFst {
    pub nodes: Vec<DetokNode>,
}

impl DetokenizingFst {
    pub const ROOT: u32 = 0;

    pub fn num_states(&self) -> usize {
        self.nodes.len()
    }

    /// Bytes emitted along the unique path consuming token `t`.
    pub fn path_output(&self, t: TokenId) -> Option<Vec<u8>> {
        fn walk(f: &DetokenizingFst, node: u32, t: TokenId, out: &mut Vec<u8>) -> bool {
            let n = &f.nodes[node as usize];
            if let Some(&(_, b)) = n.finals.iter().find(|(tok, _)| *tok == t) {
                out.push(b);
                return true;
            }
            for &(b, child) in &n.children {
                out.push(b);
                if walk(f, child, t, out) {
                    return true;
                }
                out.pop();
            }
            false
        }
        let mut out = Vec::new();
        walk(self, Self::ROOT, t, &mut out).then_some(out)
    }

    /// One `src -input:output-> dst` line per edge; states are named by
    /// their prefix (`q_ε` for the root).
    pub fn dump(&self, vocab: &Vocabulary) -> String {
        let name = |n: u32| {
            let p = &self.nodes[n as usize].prefix;
            if p.is_empty() {
                "q_ε".to_owned()
            } else {
                format!("q_{}", escape_bytes(p))
            }
        };
        let mut out = String::new();
        for (i, node) in self.nodes.iter().enumerate() {
            for &(b, child) in &node.children {
                writeln!(out, "{} -ε:{}-> {}", name(i as u32), escape_bytes(&[b]), name(child)).unwrap();
            }
            for &(t, b) in &node.finals {
                writeln!(out, "{} -{}:{}-> q_ε", name(i as u32), vocab.display(t), escape_bytes(&[b])).unwrap();
            }
        }
        out
    }
}

pub fn build_detokenizing_fst(v: &Vocabulary) -> DetokenizingFst {
    let mut nodes = vec![DetokNode::default()];
    for (id, bytes) in v.iter() {
        let Some((&last, init)) = bytes.split_last() else { continue };
        let mut cur = 0u32;
        for &b in init {
            let found = nodes[cur as usize].children.iter().find(|(c, _)| *c == b).map(|(_, n)| *n);
            cur = match found {
                Some(n) => n,
                None => {
                    let mut prefix = nodes[cur as usize].prefix.clone();
                    prefix.push(b);
                    nodes.push(DetokNode { prefix, ..DetokNode::default() });
                    let n = (nodes.len() - 1) as u32;
                    nodes[cur as usize].children.push((b, n));
                    n
                }
            };
        }
        nodes[cur as usize].finals.push((id, last));
    }
    for n in &mut nodes {
        n.children.sort_unstable();
    }
    DetokenizingFst { nodes }
}
