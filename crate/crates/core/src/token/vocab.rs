use std::collections::HashMap;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::error::VocabError;

pub type TokenId = u32;

/// Subword vocabulary: token id to byte string, with one reserved,
/// content-free end-of-sequence entry.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    tokens: Vec<Vec<u8>>,
    eos_id: TokenId,
}

#[derive(Serialize, Deserialize)]
struct VocabFile {
    version: u32,
    tokens: Vec<String>,
    eos_id: u64,
}

pub const VOCAB_FORMAT_VERSION: u32 = 1;

impl Vocabulary {
    /// Builds a vocabulary; the entry at `eos_id` must be empty and every
    /// other entry non-empty.
    pub fn new(tokens: Vec<Vec<u8>>, eos_id: TokenId) -> Result<Self, VocabError> {
        if eos_id as usize >= tokens.len() {
            return Err(VocabError::EosOutOfRange { eos_id: eos_id as u64, len: tokens.len() });
        }
        for (i, t) in tokens.iter().enumerate() {
            if i == eos_id as usize {
                if !t.is_empty() {
                    return Err(VocabError::EosNotEmpty(eos_id));
                }
            } else if t.is_empty() {
                return Err(VocabError::EmptyToken(i));
            }
        }
        Ok(Self { tokens, eos_id })
    }

    /// Convenience constructor: `tokens` followed by an appended EOS entry.
    pub fn with_eos(tokens: impl IntoIterator<Item = Vec<u8>>) -> Result<Self, VocabError> {
        let mut tokens: Vec<Vec<u8>> = tokens.into_iter().collect();
        let eos = tokens.len() as TokenId;
        tokens.push(Vec::new());
        Self::new(tokens, eos)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn eos_id(&self) -> TokenId {
        self.eos_id
    }

    #[inline]
    pub fn is_eos(&self, t: TokenId) -> bool {
        t == self.eos_id
    }

    #[inline]
    pub fn bytes(&self, t: TokenId) -> &[u8] {
        &self.tokens[t as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (TokenId, &[u8])> {
        self.tokens.iter().enumerate().map(|(i, t)| (i as TokenId, t.as_slice()))
    }

    /// Concatenated bytes of a token sequence; EOS contributes nothing.
    pub fn detokenize(&self, ids: &[TokenId]) -> Vec<u8> {
        ids.iter().flat_map(|&t| self.bytes(t).iter().copied()).collect()
    }

    /// Pairs `(first, duplicate)` of ids with identical byte strings.
    pub fn duplicates(&self) -> Vec<(TokenId, TokenId)> {
        let mut first: HashMap<&[u8], TokenId> = HashMap::new();
        let mut out = Vec::new();
        for (id, bytes) in self.iter() {
            if self.is_eos(id) {
                continue;
            }
            match first.get(bytes) {
                Some(&f) => out.push((f, id)),
                None => {
                    first.insert(bytes, id);
                }
            }
        }
        out
    }

    /// Human-readable token text with non-printable bytes escaped.
    pub fn display(&self, t: TokenId) -> String {
        if self.is_eos(t) {
            return "EOS".to_owned();
        }
        escape_bytes(self.bytes(t))
    }

    pub fn to_json(&self) -> String {
        let file = VocabFile {
            version: VOCAB_FORMAT_VERSION,
            tokens: self.tokens.iter().map(|t| STANDARD.encode(t)).collect(),
            eos_id: self.eos_id as u64,
        };
        serde_json::to_string(&file).expect("vocabulary serializes")
    }
}

pub fn escape_bytes(bytes: &[u8]) -> String {
    let mut s = String::new();
    for &b in bytes {
        match b {
            b'\\' => s.push_str("\\\\"),
            b'\n' => s.push_str("\\n"),
            b'\t' => s.push_str("\\t"),
            b'\r' => s.push_str("\\r"),
            0x20..=0x7e => s.push(b as char),
            _ => s.push_str(&format!("\\x{b:02x}")),
        }
    }
    s
}

/// Parses the JSON vocabulary format
/// `{"version":1, "tokens":[base64,...], "eos_id":int}`.
pub fn load_vocabulary(data: &[u8]) -> Result<Vocabulary, VocabError> {
    let file: VocabFile = serde_json::from_slice(data).map_err(|e| VocabError::Json(e.to_string()))?;
    if file.version != VOCAB_FORMAT_VERSION {
        return Err(VocabError::Version(file.version));
    }
    if file.eos_id >= file.tokens.len() as u64 {
        return Err(VocabError::EosOutOfRange { eos_id: file.eos_id, len: file.tokens.len() });
    }
    let tokens = file
        .tokens
        .iter()
        .enumerate()
        .map(|(index, t)| STANDARD.decode(t).map_err(|e| VocabError::Base64 { index, reason: e.to_string() }))
        .collect::<Result<Vec<_>, _>>()?;
    Vocabulary::new(tokens, file.eos_id as TokenId)
}
