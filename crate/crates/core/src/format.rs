//! Binary artifact container.
//!
//! Layout (integers little-endian):
//! `"GCDA"` | version u32 | sha256 of everything after the header (32 bytes) |
//! section count u32 | per section: name length u16, name, offset u64,
//! length u64 | payloads. Offsets are relative to the start of the payload
//! area; payloads are bincode.

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::ArtifactError;
use crate::runtime::CompiledArtifact;

pub const MAGIC: &[u8; 4] = b"GCDA";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 32;

pub const SECTIONS: [&str; 7] = ["meta", "vocabulary", "lexer", "token_transducer", "spanner", "lr", "parser_tables"];

fn encode<T: Serialize>(v: &T) -> Vec<u8> {
    bincode::serialize(v).expect("artifact sections serialize")
}

pub fn serialize_artifact(a: &CompiledArtifact) -> Vec<u8> {
    let payloads: [Vec<u8>; 7] = [
        encode(&(&a.grammar_hash, &a.grammar, &a.ignored)),
        encode(&a.vocab),
        encode(&a.lexer),
        encode(&a.tokens),
        encode(&a.spanner),
        encode(&a.pda),
        encode(&a.tables),
    ];
    let mut body = Vec::new();
    body.extend((SECTIONS.len() as u32).to_le_bytes());
    let mut offset = 0u64;
    for (name, p) in SECTIONS.iter().zip(&payloads) {
        body.extend((name.len() as u16).to_le_bytes());
        body.extend(name.as_bytes());
        body.extend(offset.to_le_bytes());
        body.extend((p.len() as u64).to_le_bytes());
        offset += p.len() as u64;
    }
    for p in &payloads {
        body.extend(p);
    }
    let mut out = Vec::with_capacity(HEADER_LEN + body.len());
    out.extend(MAGIC);
    out.extend(FORMAT_VERSION.to_le_bytes());
    out.extend(Sha256::digest(&body));
    out.extend(body);
    out
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], ArtifactError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.data.len());
        let end = end.ok_or_else(|| ArtifactError::Truncated(format!("section table ends inside {what}")))?;
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self, what: &str) -> Result<u16, ArtifactError> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32, ArtifactError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64, ArtifactError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

fn decode<T: DeserializeOwned>(name: &str, bytes: &[u8]) -> Result<T, ArtifactError> {
    bincode::deserialize(bytes).map_err(|e| ArtifactError::Malformed { section: name.to_owned(), reason: e.to_string() })
}

/// Validates magic, version, section bounds and content hash, then decodes.
pub fn deserialize_artifact(bytes: &[u8]) -> Result<CompiledArtifact, ArtifactError> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(ArtifactError::BadMagic);
    }
    if bytes.len() < HEADER_LEN {
        return Err(ArtifactError::Truncated("header".to_owned()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(ArtifactError::VersionMismatch { found: version, expected: FORMAT_VERSION });
    }
    let body = &bytes[HEADER_LEN..];
    let mut r = Reader { data: body, pos: 0 };
    let count = r.u32("section count")? as usize;
    let mut table = Vec::with_capacity(count.min(64));
    for _ in 0..count {
        let len = r.u16("section name length")? as usize;
        let name = String::from_utf8_lossy(r.take(len, "section name")?).into_owned();
        let offset = r.u64("section offset")?;
        let length = r.u64("section length")?;
        table.push((name, offset, length));
    }
    let payload = &body[r.pos..];
    let mut sections: Vec<&[u8]> = Vec::with_capacity(SECTIONS.len());
    for expected in SECTIONS {
        let (_, offset, length) = table.iter().find(|(n, _, _)| n == expected).ok_or_else(|| {
            ArtifactError::Malformed { section: expected.to_owned(), reason: "missing from section table".to_owned() }
        })?;
        let end = offset.checked_add(*length).filter(|&e| e <= payload.len() as u64);
        let end = end.ok_or_else(|| ArtifactError::Truncated(format!("section {expected}")))?;
        sections.push(&payload[*offset as usize..end as usize]);
    }
    if Sha256::digest(body).as_slice() != &bytes[8..HEADER_LEN] {
        return Err(ArtifactError::HashMismatch);
    }
    let (grammar_hash, grammar, ignored) = decode(SECTIONS[0], sections[0])?;
    let a = CompiledArtifact {
        grammar_hash,
        grammar,
        ignored,
        vocab: decode(SECTIONS[1], sections[1])?,
        lexer: decode(SECTIONS[2], sections[2])?,
        tokens: decode(SECTIONS[3], sections[3])?,
        spanner: decode(SECTIONS[4], sections[4])?,
        pda: decode(SECTIONS[5], sections[5])?,
        tables: decode(SECTIONS[6], sections[6])?,
    };
    if !a.hash_matches() {
        return Err(ArtifactError::HashMismatch);
    }
    Ok(a)
}
