// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use serde::{Deserialize, Serialize};

pub const SHA256: &str = "sha-256";

/// Content identity of a byte sequence.
///
/// Values are carried as strings so that malformed digests read from disk can
/// be reported by validation rather than rejected by the parser.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Digest {
    pub algorithm: String,
    pub value: String,
}

impl Digest {
    pub fn sha256(raw: [u8; 32]) -> Self {
        Digest {
            algorithm: SHA256.to_owned(),
            value: hex_lower(&raw),
        }
    }

    /// Parses a bare 64-character lowercase hex string as a sha-256 digest.
    pub fn from_sha256_hex(value: &str) -> Option<Self> {
        is_sha256_hex(value).then(|| Digest {
            algorithm: SHA256.to_owned(),
            value: value.to_owned(),
        })
    }

    pub fn is_well_formed(&self) -> bool {
        self.algorithm == SHA256 && is_sha256_hex(&self.value)
    }

    /// Raw digest bytes, if the value is well formed.
    pub fn raw(&self) -> Option<[u8; 32]> {
        if !self.is_well_formed() {
            return None;
        }
        let mut out = [0u8; 32];
        for (i, pair) in self.value.as_bytes().chunks(2).enumerate() {
            out[i] = (nibble(pair[0])? << 4) | nibble(pair[1])?;
        }
        Some(out)
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.algorithm, self.value)
    }
}

/// Content-addressed identifier of an attestation: the sha-256 of its
/// canonical signed bytes, as 64 lowercase hex characters.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AttestationId(String);

impl AttestationId {
    /// Wraps a string without checking it; see [`AttestationId::is_well_formed`].
    pub fn new_unchecked(s: impl Into<String>) -> Self {
        AttestationId(s.into())
    }

    pub fn parse(s: &str) -> Option<Self> {
        is_sha256_hex(s).then(|| AttestationId(s.to_owned()))
    }

    pub fn is_well_formed(&self) -> bool {
        is_sha256_hex(&self.0)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn to_digest(&self) -> Digest {
        Digest {
            algorithm: SHA256.to_owned(),
            value: self.0.clone(),
        }
    }

    /// First twelve characters, for human output.
    pub fn short(&self) -> &str {
        &self.0[..self.0.len().min(12)]
    }
}

impl From<&Digest> for AttestationId {
    fn from(d: &Digest) -> Self {
        AttestationId(d.value.clone())
    }
}

impl fmt::Display for AttestationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub(crate) fn is_sha256_hex(s: &str) -> bool {
    s.len() == 64 && s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))
}

pub(crate) fn hex_lower(bytes: &[u8]) -> String {
    const HEX: &[u8; 16] = b"0123456789abcdef";
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        s.push(HEX[(b >> 4) as usize] as char);
        s.push(HEX[(b & 0x0f) as usize] as char);
    }
    s
}

fn nibble(c: u8) -> Option<u8> {
    match c {
        b'0'..=b'9' => Some(c - b'0'),
        b'a'..=b'f' => Some(c - b'a' + 10),
        _ => None,
    }
}
